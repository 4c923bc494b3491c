use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use timeless_cli::query::Query;
use timeless_cli::render::{significant, TABLE_DIGITS};
use timeless_cli::scenario::ScenarioFile;
use timeless_core::build_history;

const QUBIT_PAIR: &str = r#"{
  "system": { "factors": [{ "label": "S", "dim": 2 }],
              "amplitudes": [[0.6, 0.0], [0.0, 0.8]] },
  "t0": 0.0,
  "hamiltonian": [[[0.3, 0], [0.1, -0.2]], [[0.1, 0.2], [-0.3, 0]]],
  "events": [
    { "time": 1.0, "detector": "f", "targets": ["S"],
      "kraus": [{ "outcome": "up",   "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]] },
                { "outcome": "down", "matrix": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]] }] },
    { "time": 2.0, "detector": "w", "targets": ["S", "f"],
      "kraus": [{ "outcome": "yes", "matrix": IDENTITY6 }] }
  ],
  "queries": [
    { "kind": "full-table", "t": 3.0 },
    { "kind": "conditional", "t": 3.0, "target": "f=up", "given": "w=yes" }
  ]
}"#;

fn identity(n: usize) -> String {
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let cells: Vec<&str> = (0..n)
                .map(|j| if i == j { "[1, 0]" } else { "[0, 0]" })
                .collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn qubit_pair() -> String {
    QUBIT_PAIR.replace("IDENTITY6", &identity(6))
}

/// The value the library computes for `query`, formatted as in the text table.
fn expected(text: &str, query: &str) -> String {
    let s = ScenarioFile::from_json(text).unwrap().validate().unwrap();
    let h = build_history(&s.psi0, s.t0, &s.hamiltonian, s.schedule.clone()).unwrap();
    let rows = Query::parse(query, &s.schedule, None)
        .unwrap()
        .evaluate(&h)
        .unwrap();
    significant(rows[0].value, TABLE_DIGITS)
}

fn timeless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timeless"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_values(path: &Path) -> Vec<(String, String, f64)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec!["t", "assignment", "kind", "value"]
    );
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (
                rec[1].to_string(),
                rec[2].to_string(),
                rec[3].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn wigner_example_tables() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("w.csv");
    let o = timeless(&[
        "wigner",
        "--a",
        "0.7071",
        "--b",
        "0.7071",
        "--alpha",
        "1",
        "--beta",
        "0",
        "--t",
        "3.0",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for title in ["I. ", "II. ", "III. ", "IV. ", "V. "] {
        assert!(text.contains(title), "{text}");
    }
    let rows = csv_values(&csv);
    let get = |a: &str| rows.iter().find(|r| r.0 == a && r.1 == "joint").unwrap().2;
    assert_eq!(get("F=up,W=yes"), 0.5);
    assert_eq!(get("F=down,W=no"), 0.5);
    assert_eq!(get("F=up,W=no"), 0.0);
    assert_eq!(get("F=down,W=yes"), 0.0);
    let cond = rows.iter().find(|r| r.0 == "F=up|W=yes").unwrap();
    assert_eq!((cond.1.as_str(), cond.2), ("conditional", 1.0));
}

#[test]
fn wigner_before_its_measurement_shows_ready_records() {
    let o = timeless(&["wigner", "--a", "0.6", "--b", "0,0.8", "--t", "1.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let header = text.lines().find(|l| l.starts_with("F \\ W")).unwrap();
    assert!(header.ends_with(" r"), "{text}");
    let up = text.lines().find(|l| l.starts_with("up ")).unwrap();
    assert!(up.ends_with(" 0.360000"), "{text}");
}

#[test]
fn wigner_export_runs_through_simulate() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("wigner.json");
    let csv = dir.path().join("out.csv");
    let o = timeless(&[
        "wigner",
        "--a",
        "0.6",
        "--b",
        "0,0.8",
        "--alpha",
        "0.8",
        "--beta",
        "0.6",
        "--export",
        file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = timeless(&[
        "simulate",
        file.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_values(&csv);
    assert_eq!(rows.len(), 4);
    // P(up, yes) = |aα* + bβ*|² |α|² with a = 0.6, b = 0.8i, α = 0.8, β = 0.6
    let up_yes = rows.iter().find(|r| r.0 == "F=up,W=yes").unwrap().2;
    assert!((up_yes - 0.4608 * 0.64).abs() < 1e-11, "{up_yes}");
}

#[test]
fn simulate_single_query() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "s.json", &qubit_pair());
    let o = timeless(&["simulate", &file, "--query", "f=up,w=yes@t=3.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[1].contains("joint"));
    assert!(lines[1].contains("f=up,w=yes"));
    let value = expected(&qubit_pair(), "f=up,w=yes@t=3.0");
    assert!(
        lines[1].ends_with(&format!(" {value}")),
        "{text} vs {value}"
    );
}

#[test]
fn simulate_default_clock_and_marginals() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "s.json", &qubit_pair());
    let o = timeless(&[
        "simulate",
        &file,
        "-q",
        "f=down",
        "--t",
        "0.5",
        "-q",
        "f=down@1.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    // before the friend's event only the ready record is possible
    assert!(
        lines[1].contains("marginal") && lines[1].ends_with(" 0"),
        "{text}"
    );
    let value = expected(&qubit_pair(), "f=down@1.5");
    assert!(
        lines[2].contains("marginal") && lines[2].ends_with(&format!(" {value}")),
        "{text}"
    );
}

#[test]
fn full_table_csv_sums_to_one() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "s.json", &qubit_pair());
    let csv = dir.path().join("t.csv");
    let o = timeless(&["simulate", &file, "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_values(&csv);
    let total: f64 = rows
        .iter()
        .filter(|r| r.1 == "full-table")
        .map(|r| r.2)
        .sum();
    assert_eq!(rows.iter().filter(|r| r.1 == "full-table").count(), 2);
    assert!((total - 1.0).abs() < 1e-9, "{total}");
    assert!(rows
        .iter()
        .any(|r| r.1 == "conditional" && r.0 == "f=up|w=yes"));
}

#[test]
fn null_conditioning_is_reported_and_run_continues() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "s.json", &qubit_pair());
    let o = timeless(&["simulate", &file, "-q", "f=up|f=down@3", "-q", "w=yes@3"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "conflicting assignment is a validation error"
    );

    let certain = qubit_pair()
        .replace("[[0.6, 0.0], [0.0, 0.8]]", "[[1.0, 0.0], [0.0, 0.0]]")
        .replace(
            "  \"hamiltonian\": [[[0.3, 0], [0.1, -0.2]], [[0.1, 0.2], [-0.3, 0]]],\n",
            "",
        );
    let file = write(&dir, "c.json", &certain);
    let o = timeless(&["simulate", &file, "-q", "w=yes|f=down@3", "-q", "w=yes@3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("null event"), "{}", stderr(&o));
    assert!(
        stdout(&o).lines().nth(1).unwrap().ends_with("1.00000"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn validate_reports_incomplete_kraus_set() {
    let dir = TempDir::new().unwrap();
    // "N" with a single zero Kraus operator: Σ K†K = 0, deviation 1
    let bad = qubit_pair()
        .replace(&identity(6), &identity(6).replace("[1, 0]", "[0, 0]"))
        .replace("\"w\"", "\"N\"")
        .replace("w=yes", "N=yes");
    let file = write(&dir, "bad.json", &bad);
    let o = timeless(&["validate", &file]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("completeness violated by 1.0e0 at detector 'N'"),
        "{}",
        stderr(&o)
    );

    let ok = write(&dir, "ok.json", &qubit_pair());
    let o = timeless(&["validate", &ok]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ok:"));
}

#[test]
fn parse_errors_name_line_or_key() {
    let dir = TempDir::new().unwrap();
    let broken = write(
        &dir,
        "broken.json",
        "{\n  \"system\": {\n    \"factors\": [,]\n  }\n}\n",
    );
    let o = timeless(&["validate", &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let misspelled = write(
        &dir,
        "typo.json",
        &qubit_pair().replace("\"targets\"", "\"target\""),
    );
    let o = timeless(&["validate", &misspelled]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`target`"), "{}", stderr(&o));

    let wrong_dim = write(
        &dir,
        "dim.json",
        &qubit_pair().replace("[\"S\", \"f\"]", "[\"S\"]"),
    );
    let o = timeless(&["validate", &wrong_dim]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("events[1].kraus[0].matrix"),
        "{}",
        stderr(&o)
    );

    // a Kraus target may only name the system or an earlier detector
    let later = qubit_pair().replacen("[\"S\"]", "[\"w\"]", 1);
    let o = timeless(&["validate", &write(&dir, "later.json", &later)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("events[0].targets"), "{}", stderr(&o));

    let clash = qubit_pair().replace("\"detector\": \"f\"", "\"detector\": \"S\"");
    let o = timeless(&["validate", &write(&dir, "clash.json", &clash)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("events[0]"), "{}", stderr(&o));

    let o = timeless(&[
        "validate",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_round_trip_is_bit_identical() {
    let dir = TempDir::new().unwrap();
    // awkward binary fractions survive only with shortest round-trip printing
    let text = qubit_pair()
        .replace(
            "[[0.6, 0.0], [0.0, 0.8]]",
            "[[0.1, 0.7], [0.3, -0.6403124237432849]]",
        )
        .replace("[0.1, -0.2]", "[0.30000000000000004, -1e-17]")
        .replace("[0.1, 0.2]", "[0.30000000000000004, 1e-17]");
    let file = write(&dir, "s.json", &text);
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let o = timeless(&["export", &file, "--out", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = timeless(&[
        "export",
        first.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = fs::read_to_string(&first).unwrap();
    assert_eq!(a, fs::read_to_string(&second).unwrap());

    let original = ScenarioFile::from_json(&text).unwrap().validate().unwrap();
    let exported = ScenarioFile::from_json(&a).unwrap().validate().unwrap();
    assert_eq!(original, exported);
    for (x, y) in original
        .hamiltonian
        .entries()
        .iter()
        .zip(exported.hamiltonian.entries())
    {
        assert_eq!(x.re.to_bits(), y.re.to_bits());
        assert_eq!(x.im.to_bits(), y.im.to_bits());
    }

    let o = timeless(&["export", &file]);
    assert_eq!(stdout(&o), a);
}

#[test]
fn bad_flags_exit_with_validation_code() {
    let o = timeless(&["wigner", "--a", "0", "--b", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = timeless(&["wigner", "--tm", "3", "--tn", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = timeless(&["wigner", "--alpha", "one"]);
    assert_eq!(o.status.code(), Some(2));
}
