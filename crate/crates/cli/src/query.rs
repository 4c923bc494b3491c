//! Probability queries and their textual form.
//!
//! ```text
//! f=up,w=yes@t=3.0    joint if every detector is named, marginal otherwise
//! f=up|w=yes@t=3.0    conditional P(f=up | w=yes)
//! full-table@t=3.0    joint probability of every reachable assignment
//! ```
//!
//! The `@t=` suffix may be written `@3.0` or left out when a default clock
//! reading is supplied.

use timeless_core::probability::{conditional, full_table, joint, marginal};
use timeless_core::{Assignment, Error, EventSchedule, HistoryState, OutcomeQuery};

#[derive(Debug, Clone, PartialEq)]
pub enum QueryKind {
    Joint(Assignment),
    Marginal(Assignment),
    Conditional {
        target: Assignment,
        given: Assignment,
    },
    FullTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub t: f64,
    pub kind: QueryKind,
}

/// One line of output.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub assignment: String,
    pub kind: &'static str,
    pub value: f64,
}

/// A query that could not be answered.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub t: f64,
    pub assignment: String,
    pub kind: &'static str,
    pub message: String,
}

impl QueryKind {
    pub fn name(&self) -> &'static str {
        match self {
            QueryKind::Joint(_) => "joint",
            QueryKind::Marginal(_) => "marginal",
            QueryKind::Conditional { .. } => "conditional",
            QueryKind::FullTable => "full-table",
        }
    }

    fn describe(&self) -> String {
        match self {
            QueryKind::Joint(a) | QueryKind::Marginal(a) => a.to_string(),
            QueryKind::Conditional { target, given } => format!("{target}|{given}"),
            QueryKind::FullTable => "*".to_string(),
        }
    }
}

fn check_assignment(a: &Assignment, schedule: &EventSchedule) -> Result<(), String> {
    if a.is_empty() {
        return Err("assignment names no detector".to_string());
    }
    for (d, l) in a.iter() {
        let det = schedule
            .detector(d)
            .map_err(|_| format!("unknown detector '{d}'"))?;
        if det.index_of(l).is_err() {
            let known: Vec<&str> = det.record_labels().collect();
            return Err(format!(
                "detector '{d}' has no record '{l}' (expected one of {})",
                known.join(", ")
            ));
        }
    }
    Ok(())
}

impl Query {
    /// Parses the textual form; `default_t` fills in a missing `@t=`.
    pub fn parse(
        text: &str,
        schedule: &EventSchedule,
        default_t: Option<f64>,
    ) -> Result<Self, String> {
        let (body, t) = match text.split_once('@') {
            Some((body, t)) => {
                let t = t.trim();
                let t = t.strip_prefix("t=").unwrap_or(t).trim();
                let t = t
                    .parse::<f64>()
                    .map_err(|_| format!("bad clock reading '{t}'"))?;
                (body.trim(), t)
            }
            None => (
                text.trim(),
                default_t.ok_or_else(|| format!("query '{text}' has no '@t=' and no --t given"))?,
            ),
        };
        let assignment = |s: &str| s.parse::<Assignment>().map_err(|e| e.to_string());
        let kind = if body == "full" || body == "full-table" {
            QueryKind::FullTable
        } else if let Some((target, given)) = body.split_once('|') {
            QueryKind::Conditional {
                target: assignment(target)?,
                given: assignment(given)?,
            }
        } else {
            let a = assignment(body)?;
            if schedule.detectors().all(|d| a.get(d.label()).is_some()) {
                QueryKind::Joint(a)
            } else {
                QueryKind::Marginal(a)
            }
        };
        let q = Query { t, kind };
        q.check(schedule)?;
        Ok(q)
    }

    /// Checks detector names, labels and coverage against a schedule.
    pub fn check(&self, schedule: &EventSchedule) -> Result<(), String> {
        if !self.t.is_finite() {
            return Err(format!("clock reading {} is not finite", self.t));
        }
        match &self.kind {
            QueryKind::Joint(a) => {
                check_assignment(a, schedule)?;
                if let Some(d) = schedule.detectors().find(|d| a.get(d.label()).is_none()) {
                    return Err(format!(
                        "joint query does not assign detector '{}'",
                        d.label()
                    ));
                }
            }
            QueryKind::Marginal(a) => check_assignment(a, schedule)?,
            QueryKind::Conditional { target, given } => {
                check_assignment(target, schedule)?;
                check_assignment(given, schedule)?;
                target.union(given).map_err(|e| e.to_string())?;
            }
            QueryKind::FullTable => {}
        }
        Ok(())
    }

    /// Evaluates against a history state. Probabilities are reported clamped
    /// to `[0, 1]`.
    pub fn evaluate(&self, h: &HistoryState) -> Result<Vec<Row>, Failure> {
        let kind = self.kind.name();
        let row = |assignment: String, value: f64| Row {
            t: self.t,
            assignment,
            kind,
            value: value.clamp(0.0, 1.0),
        };
        let fail = |e: Error| Failure {
            t: self.t,
            assignment: self.kind.describe(),
            kind,
            message: e.to_string(),
        };
        let value = match &self.kind {
            QueryKind::Joint(a) => joint(h, &OutcomeQuery::new(a.clone(), self.t)),
            QueryKind::Marginal(a) => marginal(h, &OutcomeQuery::new(a.clone(), self.t)),
            QueryKind::Conditional { target, given } => conditional(h, target, given, self.t),
            QueryKind::FullTable => {
                return Ok(full_table(h, self.t)
                    .rows
                    .into_iter()
                    .map(|(a, p)| row(a.to_string(), p))
                    .collect())
            }
        };
        value
            .map(|v| vec![row(self.kind.describe(), v)])
            .map_err(fail)
    }
}
