//! Subcommands. Every entry point returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use timeless_core::wigner::WignerScenario;
use timeless_core::{build_history, Operator, C64};

use crate::query::{Query, QueryKind, Row};
use crate::render;
use crate::scenario::{Scenario, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_QUERY: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "timeless",
    version,
    about = "History-state probabilities for measurement schedules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the queries of a scenario file.
    Simulate(SimulateArgs),
    /// Tables for the Wigner's-friend setup.
    Wigner(WignerArgs),
    /// Check a scenario file without running it.
    Validate { file: PathBuf },
    /// Rewrite a scenario file in canonical form.
    Export {
        file: PathBuf,
        /// Output path; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Query such as "f=up,w=yes@t=3.0"; replaces the queries in the file.
    #[arg(long = "query", short = 'q')]
    pub queries: Vec<String>,
    /// Clock reading for queries without "@t=".
    #[arg(long)]
    pub t: Option<f64>,
    /// Also write the results as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    /// Amplitude of |↑⟩, as re[,im].
    #[arg(long, value_parser = parse_complex, default_value = "1")]
    pub a: C64,
    /// Amplitude of |↓⟩, as re[,im].
    #[arg(long, value_parser = parse_complex, default_value = "1")]
    pub b: C64,
    /// Weight of |↑↑⟩ in Wigner's "yes" state, as re[,im].
    #[arg(long, value_parser = parse_complex, default_value = "1")]
    pub alpha: C64,
    /// Weight of |↓↓⟩ in Wigner's "yes" state, as re[,im].
    #[arg(long, value_parser = parse_complex, default_value = "0")]
    pub beta: C64,
    /// Time of the friend's measurement.
    #[arg(long, default_value_t = 1.0)]
    pub tm: f64,
    /// Time of Wigner's measurement.
    #[arg(long, default_value_t = 2.0)]
    pub tn: f64,
    /// Clock reading at which the initial state is given.
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Clock reading of the tables; defaults to tn + 1.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the setup as a scenario file with a full-table query.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

/// Parses `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let mut parts = s.split(',').map(str::trim);
    let re = parts.next().unwrap_or_default();
    let im = parts.next().unwrap_or("0");
    if parts.next().is_some() {
        return Err(format!("expected re[,im], got '{s}'"));
    }
    let num = |x: &str| {
        x.parse::<f64>()
            .map_err(|_| format!("'{x}' is not a number"))
    };
    let z = C64::new(num(re)?, num(im)?);
    if !z.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(z)
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Simulate(args) => simulate(args, out, err),
        Command::Wigner(args) => wigner(args, out, err),
        Command::Validate { file } => validate(&file, out),
        Command::Export { file, out: path } => export(&file, path.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err((code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

type Outcome = Result<i32, (i32, String)>;

fn invalid(message: impl ToString) -> (i32, String) {
    (EXIT_INVALID, message.to_string())
}

fn load(path: &Path) -> Result<Scenario, (i32, String)> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    ScenarioFile::from_json(&text)
        .and_then(|f| f.validate())
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, rows: &[Row]) -> Result<(), (i32, String)> {
    let file =
        fs::File::create(path).map_err(|e| (EXIT_QUERY, format!("{}: {e}", path.display())))?;
    render::csv(file, rows).map_err(|e| (EXIT_QUERY, format!("{}: {e}", path.display())))
}

fn io_error(e: std::io::Error) -> (i32, String) {
    (EXIT_QUERY, e.to_string())
}

fn simulate(args: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let mut scenario = load(&args.file)?;
    if !args.queries.is_empty() {
        scenario.queries = args
            .queries
            .iter()
            .map(|q| {
                Query::parse(q, &scenario.schedule, args.t)
                    .map_err(|e| invalid(format!("--query '{q}': {e}")))
            })
            .collect::<Result<_, _>>()?;
    }
    if scenario.queries.is_empty() {
        return Err(invalid(format!(
            "{}: no queries to run",
            args.file.display()
        )));
    }
    let history = build_history(
        &scenario.psi0,
        scenario.t0,
        &scenario.hamiltonian,
        scenario.schedule.clone(),
    )
    .map_err(|e| (EXIT_QUERY, e.to_string()))?;

    let mut rows = Vec::new();
    let mut failed = false;
    for (k, q) in scenario.queries.iter().enumerate() {
        match q.evaluate(&history) {
            Ok(r) => rows.extend(r),
            Err(f) => {
                failed = true;
                let _ = writeln!(
                    err,
                    "query {k} ({} {} at t={}): {}",
                    f.kind, f.assignment, f.t, f.message
                );
            }
        }
    }
    render::rows_table(out, &rows).map_err(io_error)?;
    if let Some(path) = &args.csv {
        write_csv(path, &rows)?;
    }
    Ok(if failed { EXIT_QUERY } else { EXIT_OK })
}

fn unit_pair(
    x: C64,
    y: C64,
    names: &str,
    err: &mut dyn Write,
) -> Result<(C64, C64), (i32, String)> {
    let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if n == 0.0 {
        return Err(invalid(format!("({names}) is the zero vector")));
    }
    if (n - 1.0).abs() > 1e-12 {
        let _ = writeln!(err, "note: ({names}) had norm {n}, rescaled to 1");
    }
    Ok((x / n, y / n))
}

fn wigner(args: WignerArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (a, b) = unit_pair(args.a, args.b, "a, b", err)?;
    let (alpha, beta) = unit_pair(args.alpha, args.beta, "alpha, beta", err)?;
    let s = WignerScenario::with_origin(a, b, alpha, beta, args.tm, args.tn, args.t0)
        .map_err(invalid)?;
    let t = args.t.unwrap_or(args.tn + 1.0);
    if !t.is_finite() {
        return Err(invalid(format!("--t {t} is not finite")));
    }
    let tables = s.tables(t).map_err(|e| (EXIT_QUERY, e.to_string()))?;
    render::wigner_report(out, &s, &tables).map_err(io_error)?;
    if let Some(path) = &args.csv {
        write_csv(path, &render::wigner_rows(&tables))?;
    }
    if let Some(path) = &args.export {
        let scenario = Scenario {
            psi0: s.initial_state(),
            t0: s.t0,
            hamiltonian: Operator::zeros(WignerScenario::system_layout()),
            schedule: s.schedule().map_err(invalid)?,
            queries: vec![Query {
                t,
                kind: QueryKind::FullTable,
            }],
        };
        fs::write(
            path,
            ScenarioFile::from_scenario(&scenario).to_json() + "\n",
        )
        .map_err(|e| (EXIT_QUERY, format!("{}: {e}", path.display())))?;
    }
    Ok(EXIT_OK)
}

fn validate(path: &Path, out: &mut dyn Write) -> Outcome {
    let s = load(path)?;
    writeln!(
        out,
        "ok: system {}, {} event(s), {} query(ies)",
        s.psi0.layout(),
        s.schedule.len(),
        s.queries.len()
    )
    .map_err(io_error)?;
    Ok(EXIT_OK)
}

fn export(path: &Path, target: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let s = load(path)?;
    let text = ScenarioFile::from_scenario(&s).to_json() + "\n";
    match target {
        Some(p) => fs::write(p, text).map_err(|e| (EXIT_QUERY, format!("{}: {e}", p.display())))?,
        None => out.write_all(text.as_bytes()).map_err(io_error)?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_flags() {
        assert_eq!(parse_complex("0.5").unwrap(), C64::new(0.5, 0.0));
        assert_eq!(parse_complex("0.5, -1").unwrap(), C64::new(0.5, -1.0));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("x").is_err());
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
