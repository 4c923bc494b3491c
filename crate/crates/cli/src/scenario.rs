//! JSON scenario files.
//!
//! ```json
//! {
//!   "system": { "factors": [{ "label": "S", "dim": 2 }],
//!               "amplitudes": [[0.6, 0.0], [0.0, 0.8]] },
//!   "t0": 0.0,
//!   "hamiltonian": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
//!   "events": [
//!     { "time": 1.0, "detector": "f", "targets": ["S"],
//!       "kraus": [{ "outcome": "up",   "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]] },
//!                 { "outcome": "down", "matrix": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]] }] }
//!   ],
//!   "queries": [{ "kind": "full-table", "t": 3.0 }]
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. A Kraus matrix acts on its `targets`
//! in the listed order; targets may name system factors or the ancilla of an
//! earlier detector (dimension = outcomes + 1, ready state last).

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use timeless_core::instrument::DEFAULT_READY_LABEL;
use timeless_core::{
    Assignment, DetectorModel, Event, EventSchedule, KrausSet, Operator, StateVector,
    SubsystemLayout, C64,
};

use crate::query::{Query, QueryKind};

/// Problem with a scenario file, addressed by the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub key: String,
    pub message: String,
}

impl ScenarioError {
    fn new(key: impl Into<String>, message: impl fmt::Display) -> Self {
        ScenarioError {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ScenarioError {}

type Complex = [f64; 2];
type Matrix = Vec<Vec<Complex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSpec,
    #[serde(default)]
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Matrix>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub factors: Vec<FactorSpec>,
    pub amplitudes: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub label: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: f64,
    pub detector: String,
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ready_label: Option<String>,
    pub kraus: Vec<KrausSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausSpec {
    pub outcome: String,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuerySpec {
    Joint {
        t: f64,
        assignment: String,
    },
    Marginal {
        t: f64,
        assignment: String,
    },
    Conditional {
        t: f64,
        target: String,
        given: String,
    },
    FullTable {
        t: f64,
    },
}

/// Validated in-memory scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub psi0: StateVector,
    pub t0: f64,
    pub hamiltonian: Operator,
    pub schedule: EventSchedule,
    pub queries: Vec<Query>,
}

fn c(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn pair(z: &C64) -> Complex {
    [z.re, z.im]
}

fn matrix(key: &str, layout: SubsystemLayout, m: &Matrix) -> Result<Operator, ScenarioError> {
    let n = layout.dim();
    if m.len() != n {
        return Err(ScenarioError::new(
            key,
            format!("expected {n} rows, found {}", m.len()),
        ));
    }
    if let Some((k, row)) = m.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(ScenarioError::new(
            format!("{key}[{k}]"),
            format!("expected {n} entries, found {}", row.len()),
        ));
    }
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(c).collect()).collect();
    Operator::from_rows(layout, &rows).map_err(|e| ScenarioError::new(key, e))
}

fn export_matrix(op: &Operator) -> Matrix {
    op.rows()
        .iter()
        .map(|r| r.iter().map(pair).collect())
        .collect()
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::new("", e))
    }

    /// Canonical text: two-space indentation, arrays without objects on one
    /// line when they fit in [`LINE_WIDTH`] columns.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("plain data serializes");
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out
    }

    /// Checks shapes, normalization, Hermiticity and Kraus completeness.
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let system =
            SubsystemLayout::new(self.system.factors.iter().map(|f| (f.label.clone(), f.dim)))
                .map_err(|e| ScenarioError::new("system.factors", e))?;
        let psi0 = StateVector::new(
            system.clone(),
            self.system.amplitudes.iter().map(c).collect(),
        )
        .map_err(|e| ScenarioError::new("system.amplitudes", e))?;
        if !psi0.is_normalized() {
            return Err(ScenarioError::new(
                "system.amplitudes",
                format!("state has norm {}, expected 1", psi0.norm()),
            ));
        }
        if !self.t0.is_finite() {
            return Err(ScenarioError::new("t0", "must be finite"));
        }
        let hamiltonian = match &self.hamiltonian {
            Some(m) => matrix("hamiltonian", system.clone(), m)?,
            None => Operator::zeros(system.clone()),
        };
        if !hamiltonian.is_hermitian(timeless_core::hilbert::STRUCTURE_TOL) {
            let dev = hamiltonian
                .max_abs_diff(&hamiltonian.adjoint())
                .expect("same layout");
            return Err(ScenarioError::new(
                "hamiltonian",
                format!("not Hermitian (max |H - H†| = {dev:.1e})"),
            ));
        }

        // factors a Kraus matrix may act on: the system and earlier ancillas
        let mut known = system.clone();
        let mut events = Vec::with_capacity(self.events.len());
        for (k, e) in self.events.iter().enumerate() {
            let key = format!("events[{k}]");
            if e.kraus.is_empty() {
                return Err(ScenarioError::new(
                    format!("{key}.kraus"),
                    "no Kraus operators",
                ));
            }
            let targets = known
                .restrict(&e.targets)
                .map_err(|err| ScenarioError::new(format!("{key}.targets"), err))?;
            if targets.is_empty() {
                return Err(ScenarioError::new(format!("{key}.targets"), "no targets"));
            }
            let ops = e
                .kraus
                .iter()
                .enumerate()
                .map(|(j, ks)| {
                    matrix(
                        &format!("{key}.kraus[{j}].matrix"),
                        targets.clone(),
                        &ks.matrix,
                    )
                    .map(|op| (ks.outcome.clone(), op))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let set = KrausSet::new(ops)
                .map_err(|err| ScenarioError::new(format!("{key}.kraus"), err))?;
            let ready = e.ready_label.as_deref().unwrap_or(DEFAULT_READY_LABEL);
            let det = DetectorModel::with_ready_label(e.detector.clone(), set, ready)
                .map_err(|err| ScenarioError::new(key.clone(), err))?;
            known = known
                .concat(&det.ancilla_layout())
                .map_err(|err| ScenarioError::new(format!("{key}.detector"), err))?;
            events.push(Event::new(e.time, det));
        }
        let schedule =
            EventSchedule::new(events).map_err(|err| ScenarioError::new("events", err))?;
        if let Some(first) = schedule.events().first() {
            if self.t0 >= first.time {
                return Err(ScenarioError::new(
                    "t0",
                    format!(
                        "{} is not before the first event at {}",
                        self.t0, first.time
                    ),
                ));
            }
        }

        let queries = self
            .queries
            .iter()
            .enumerate()
            .map(|(k, q)| {
                Query::from_spec(q, &schedule)
                    .map_err(|err| ScenarioError::new(format!("queries[{k}]"), err))
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Scenario {
            psi0,
            t0: self.t0,
            hamiltonian,
            schedule,
            queries,
        })
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let factors = s
            .psi0
            .layout()
            .factors()
            .iter()
            .map(|f| FactorSpec {
                label: f.label.clone(),
                dim: f.dim,
            })
            .collect();
        let events = s
            .schedule
            .events()
            .iter()
            .map(|e| {
                let det = &e.detector;
                EventSpec {
                    time: e.time,
                    detector: det.label().to_string(),
                    targets: det.kraus().targets().labels().map(str::to_string).collect(),
                    ready_label: (det.ready_label() != DEFAULT_READY_LABEL)
                        .then(|| det.ready_label().to_string()),
                    kraus: det
                        .kraus()
                        .outcomes()
                        .iter()
                        .map(|(l, op)| KrausSpec {
                            outcome: l.clone(),
                            matrix: export_matrix(op),
                        })
                        .collect(),
                }
            })
            .collect();
        ScenarioFile {
            system: SystemSpec {
                factors,
                amplitudes: s.psi0.amplitudes().iter().map(pair).collect(),
            },
            t0: s.t0,
            hamiltonian: Some(export_matrix(&s.hamiltonian)),
            events,
            queries: s.queries.iter().map(Query::to_spec).collect(),
        }
    }
}

pub const LINE_WIDTH: usize = 100;

/// Single-line form of values without nested objects.
fn compact(v: &Value) -> Option<String> {
    match v {
        Value::Array(items) => {
            let parts = items.iter().map(compact).collect::<Option<Vec<_>>>()?;
            Some(format!("[{}]", parts.join(", ")))
        }
        Value::Object(map) => {
            let parts = map
                .iter()
                .map(|(k, v)| match v {
                    Value::Object(_) | Value::Array(_) => None,
                    v => Some(format!("{}: {v}", Value::String(k.clone()))),
                })
                .collect::<Option<Vec<_>>>()?;
            Some(format!("{{ {} }}", parts.join(", ")))
        }
        scalar => Some(scalar.to_string()),
    }
}

/// A matrix row: every element is an array of scalars.
fn is_row(v: &Value) -> bool {
    let scalars = |v: &Value| match v {
        Value::Array(xs) => xs.iter().all(|x| !x.is_array() && !x.is_object()),
        _ => false,
    };
    matches!(v, Value::Array(xs) if !xs.is_empty() && xs.iter().all(scalars))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    if let Some(line) = compact(v).filter(|l| indent * 2 + l.len() <= LINE_WIDTH || is_row(v)) {
        out.push_str(&line);
        return;
    }
    match v {
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

impl Query {
    fn from_spec(q: &QuerySpec, schedule: &EventSchedule) -> Result<Self, String> {
        let parse = |s: &str| s.parse::<Assignment>().map_err(|e| e.to_string());
        let query = match q {
            QuerySpec::Joint { t, assignment } => Query {
                t: *t,
                kind: QueryKind::Joint(parse(assignment)?),
            },
            QuerySpec::Marginal { t, assignment } => Query {
                t: *t,
                kind: QueryKind::Marginal(parse(assignment)?),
            },
            QuerySpec::Conditional { t, target, given } => Query {
                t: *t,
                kind: QueryKind::Conditional {
                    target: parse(target)?,
                    given: parse(given)?,
                },
            },
            QuerySpec::FullTable { t } => Query {
                t: *t,
                kind: QueryKind::FullTable,
            },
        };
        query.check(schedule)?;
        Ok(query)
    }

    fn to_spec(&self) -> QuerySpec {
        let t = self.t;
        match &self.kind {
            QueryKind::Joint(a) => QuerySpec::Joint {
                t,
                assignment: a.to_string(),
            },
            QueryKind::Marginal(a) => QuerySpec::Marginal {
                t,
                assignment: a.to_string(),
            },
            QueryKind::Conditional { target, given } => QuerySpec::Conditional {
                t,
                target: target.to_string(),
                given: given.to_string(),
            },
            QueryKind::FullTable => QuerySpec::FullTable { t },
        }
    }
}
