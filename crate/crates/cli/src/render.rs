//! Text and CSV rendering.

use std::io::{self, Write};

use timeless_core::wigner::{WignerScenario, WignerTables, FRIEND, WIGNER};
use timeless_core::{Assignment, C64};

use crate::query::Row;

pub const CSV_DIGITS: usize = 12;
pub const TABLE_DIGITS: usize = 6;

/// `v` rounded to `digits` significant digits, positional when reasonable.
pub fn significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.9999996 → 10.00000
    if s.trim_start_matches('-')
        .replace('.', "")
        .trim_start_matches('0')
        .len()
        > digits
        && decimals > 0
    {
        return format!("{:.*}", decimals - 1, v);
    }
    s
}

fn complex(z: C64) -> String {
    if z.im == 0.0 {
        significant(z.re, TABLE_DIGITS)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!(
            "{}{sign}{}i",
            significant(z.re, TABLE_DIGITS),
            significant(z.im.abs(), TABLE_DIGITS)
        )
    }
}

/// Columns separated by two spaces; the first `left` are left-aligned, the rest right-aligned.
pub fn aligned(
    out: &mut dyn Write,
    header: &[&str],
    rows: &[Vec<String>],
    left: usize,
) -> io::Result<()> {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (k, cell) in cells.iter().enumerate() {
            if k > 0 {
                s.push_str("  ");
            }
            let pad = width[k] - cell.chars().count();
            if k >= left {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            } else {
                s.push_str(cell);
                if k + 1 < cols {
                    s.push_str(&" ".repeat(pad));
                }
            }
        }
        s
    };
    writeln!(out, "{}", line(header.to_vec()))?;
    for r in rows {
        writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

pub fn rows_table(out: &mut dyn Write, rows: &[Row]) -> io::Result<()> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                r.kind.to_string(),
                r.assignment.clone(),
                significant(r.value, TABLE_DIGITS),
            ]
        })
        .collect();
    aligned(out, &["t", "kind", "assignment", "value"], &cells, 3)
}

pub fn csv(out: impl Write, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "assignment", "kind", "value"])?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.assignment.clone(),
            r.kind.to_string(),
            significant(r.value, CSV_DIGITS),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Flattens the five tables into rows for CSV output.
pub fn wigner_rows(tables: &WignerTables) -> Vec<Row> {
    let t = tables.joint.t;
    let mut rows = Vec::new();
    let mut push = |assignment: String, kind: &'static str, value: f64| {
        rows.push(Row {
            t,
            assignment,
            kind,
            value: value.clamp(0.0, 1.0),
        })
    };
    for (a, p) in &tables.joint.rows {
        push(a.to_string(), "joint", *p);
    }
    for (a, p) in tables.marginal_w.rows.iter().chain(&tables.marginal_f.rows) {
        push(a.to_string(), "marginal", *p);
    }
    for table in [&tables.w_given_f, &tables.f_given_w] {
        for (g, x, v) in &table.rows {
            if let Some(v) = v {
                let target = Assignment::new().with(table.target.as_str(), x.as_str());
                let given = Assignment::new().with(table.given.as_str(), g.as_str());
                push(format!("{target}|{given}"), "conditional", *v);
            }
        }
    }
    rows
}

fn labels_of(table: &timeless_core::ProbabilityTable, detector: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (a, _) in &table.rows {
        if let Some(l) = a.get(detector) {
            if !out.iter().any(|x| x == l) {
                out.push(l.to_string());
            }
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| significant(v.clamp(0.0, 1.0), TABLE_DIGITS))
        .unwrap_or_else(|| "-".to_string())
}

fn conditional_cell(v: Option<Option<f64>>) -> String {
    match v {
        Some(Some(v)) => cell(Some(v)),
        Some(None) => "undefined".to_string(),
        None => "-".to_string(),
    }
}

pub fn wigner_report(
    out: &mut dyn Write,
    s: &WignerScenario,
    tables: &WignerTables,
) -> io::Result<()> {
    let t = tables.joint.t;
    writeln!(
        out,
        "a = {}, b = {}, alpha = {}, beta = {}",
        complex(s.a),
        complex(s.b),
        complex(s.alpha),
        complex(s.beta)
    )?;
    writeln!(
        out,
        "t0 = {}, t_M = {}, t_N = {}, t = {t}",
        s.t0, s.t_m, s.t_n
    )?;
    let f_labels = labels_of(&tables.joint, FRIEND);
    let w_labels = labels_of(&tables.joint, WIGNER);

    let corner = format!("{FRIEND} \\ {WIGNER}");
    let grid = |out: &mut dyn Write,
                title: &str,
                value: &dyn Fn(&str, &str) -> String|
     -> io::Result<()> {
        writeln!(out, "\n{title}")?;
        let mut header = vec![corner.as_str()];
        header.extend(w_labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = f_labels
            .iter()
            .map(|f| {
                std::iter::once(f.clone())
                    .chain(w_labels.iter().map(|w| value(f, w)))
                    .collect()
            })
            .collect();
        aligned(out, &header, &rows, 1)
    };

    grid(
        out,
        &format!("I. P({FRIEND} ∧ {WIGNER} ∧ t)"),
        &|f, w| cell(tables.joint(f, w)),
    )?;

    writeln!(out, "\nII. P({WIGNER} ∧ t)")?;
    let rows: Vec<Vec<String>> = w_labels
        .iter()
        .map(|w| vec![w.clone(), cell(tables.marginal_w(w))])
        .collect();
    aligned(out, &[WIGNER, "P"], &rows, 1)?;

    writeln!(out, "\nIII. P({FRIEND} ∧ t)")?;
    let rows: Vec<Vec<String>> = f_labels
        .iter()
        .map(|f| vec![f.clone(), cell(tables.marginal_f(f))])
        .collect();
    aligned(out, &[FRIEND, "P"], &rows, 1)?;

    grid(
        out,
        &format!("IV. P({WIGNER} | {FRIEND} ∧ t)"),
        &|f, w| conditional_cell(tables.w_given_f(w, f)),
    )?;
    grid(out, &format!("V. P({FRIEND} | {WIGNER} ∧ t)"), &|f, w| {
        conditional_cell(tables.f_given_w(f, w))
    })
}
