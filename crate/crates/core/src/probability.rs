//! Trace-rule probabilities at a fixed clock reading.
//!
//! The event "records `m`, `n`, … are read when the clock shows `t`" has the
//! effect `|t⟩⟨t| ⊗ 𝟙_S ⊗ |m⟩⟨m| ⊗ |n⟩⟨n| ⊗ …`, so its probability is the
//! squared norm of the conditional state `ψ(t)` after contracting each named
//! record. Leaving a detector unnamed puts the identity on its ancilla, which
//! gives the marginals. Time is never integrated out; every number here is
//! "at clock reading `t`".

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hilbert::{project_outcome, DensityMatrix, Operator, StateVector, TensorProduct};
use crate::timeline::HistoryState;

/// Below this a conditioning probability counts as a null event.
pub const NULL_EVENT_TOL: f64 = 1e-14;

/// Detector → record-label map, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Assignment(Vec<(String, String)>);

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    /// Adds `detector = label`; panics on a repeated detector, use
    /// [`Assignment::insert`] for the fallible form.
    pub fn with(mut self, detector: impl Into<String>, label: impl Into<String>) -> Self {
        self.insert(detector, label).expect("detector named twice");
        self
    }

    pub fn insert(&mut self, detector: impl Into<String>, label: impl Into<String>) -> Result<()> {
        let detector = detector.into();
        if self.get(&detector).is_some() {
            return Err(Error::key(format!("detector '{detector}' assigned twice")));
        }
        self.0.push((detector, label.into()));
        Ok(())
    }

    pub fn get(&self, detector: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(d, _)| d == detector)
            .map(|(_, l)| l.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(d, l)| (d.as_str(), l.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Union of two assignments over disjoint detector sets.
    pub fn union(&self, other: &Assignment) -> Result<Assignment> {
        let mut out = self.clone();
        for (d, l) in other.iter() {
            out.insert(d, l)?;
        }
        Ok(out)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (d, l)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}={l}")?;
        }
        Ok(())
    }
}

/// Parses `"F=up,W=yes"`.
impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Assignment::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (d, l) = part
                .split_once('=')
                .ok_or_else(|| Error::key(format!("expected detector=label, got '{part}'")))?;
            let (d, l) = (d.trim(), l.trim());
            if d.is_empty() || l.is_empty() {
                return Err(Error::key(format!("expected detector=label, got '{part}'")));
            }
            out.insert(d, l)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeQuery {
    pub assignment: Assignment,
    pub t: f64,
}

impl OutcomeQuery {
    pub fn new(assignment: Assignment, t: f64) -> Self {
        OutcomeQuery { assignment, t }
    }
}

/// Full outcome assignment → probability at clock reading `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub t: f64,
    pub rows: Vec<(Assignment, f64)>,
}

impl ProbabilityTable {
    pub fn get(&self, assignment: &Assignment) -> Option<f64> {
        self.rows
            .iter()
            .find(|(a, _)| a == assignment)
            .map(|(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|(_, p)| p).sum()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `P(target | given ∧ t)` for every pair of record labels of two detectors.
/// Rows whose conditioning event is null hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub t: f64,
    pub target: String,
    pub given: String,
    /// `(given_label, target_label, value)`, grouped by `given_label`.
    pub rows: Vec<(String, String, Option<f64>)>,
}

impl ConditionalTable {
    pub fn get(&self, target_label: &str, given_label: &str) -> Option<Option<f64>> {
        self.rows
            .iter()
            .find(|(g, t, _)| g == given_label && t == target_label)
            .map(|(_, _, v)| *v)
    }

    /// `Σ_target P(target | given)` for each defined conditioning label.
    pub fn row_sums(&self) -> Vec<(String, f64)> {
        let mut sums: Vec<(String, f64)> = Vec::new();
        for (g, _, v) in &self.rows {
            let Some(v) = v else { continue };
            match sums.iter_mut().find(|(l, _)| l == g) {
                Some((_, s)) => *s += v,
                None => sums.push((g.clone(), *v)),
            }
        }
        sums
    }
}

fn project_records(h: &HistoryState, assignment: &Assignment, t: f64) -> Result<StateVector> {
    let mut state = h.state_at(t);
    for (detector, label) in assignment.iter() {
        let record = h.schedule().detector(detector)?.record_state(label)?;
        state = project_outcome(&state, &record)?;
    }
    Ok(state)
}

/// Probability that every detector shows the assigned record at `q.t`.
pub fn joint(h: &HistoryState, q: &OutcomeQuery) -> Result<f64> {
    for det in h.schedule().detectors() {
        if q.assignment.get(det.label()).is_none() {
            return Err(Error::key(format!(
                "joint query does not assign detector '{}'",
                det.label()
            )));
        }
    }
    Ok(project_records(h, &q.assignment, q.t)?.norm_sqr())
}

/// Probability of the named records only; unnamed detectors are summed over.
pub fn marginal(h: &HistoryState, q: &OutcomeQuery) -> Result<f64> {
    if q.assignment.is_empty() {
        return Err(Error::key("marginal query names no detector"));
    }
    Ok(project_records(h, &q.assignment, q.t)?.norm_sqr())
}

/// Bayes' rule at fixed clock reading: `P(target ∧ given ∧ t) / P(given ∧ t)`.
pub fn conditional(
    h: &HistoryState,
    target: &Assignment,
    given: &Assignment,
    t: f64,
) -> Result<f64> {
    if target.is_empty() || given.is_empty() {
        return Err(Error::key(
            "conditional needs a non-empty target and condition",
        ));
    }
    let both = target.union(given)?;
    let p_given = marginal(h, &OutcomeQuery::new(given.clone(), t))?;
    if p_given < NULL_EVENT_TOL {
        return Err(Error::ConditioningOnNullEvent {
            given: given.to_string(),
            probability: p_given,
        });
    }
    let p_both = marginal(h, &OutcomeQuery::new(both, t))?;
    Ok(p_both / p_given)
}

/// Record labels a detector can show at clock reading `t`: its outcomes once
/// its event has fired, only the ready label before.
pub fn labels_at(h: &HistoryState, detector: &str, t: f64) -> Result<Vec<String>> {
    let det = h.schedule().detector(detector)?;
    let fired = h.schedule().fired_by(t).any(|d| d.label() == detector);
    Ok(if fired {
        det.kraus().labels().map(str::to_string).collect()
    } else {
        vec![det.ready_label().to_string()]
    })
}

/// Joint probabilities of every full assignment reachable at `t`.
pub fn full_table(h: &HistoryState, t: f64) -> ProbabilityTable {
    let mut assignments = vec![Assignment::new()];
    for det in h.schedule().detectors() {
        let labels = labels_at(h, det.label(), t).expect("detector from the schedule");
        assignments = assignments
            .iter()
            .flat_map(|a| {
                labels
                    .iter()
                    .map(move |l| a.clone().with(det.label(), l.clone()))
            })
            .collect();
    }
    let rows = assignments
        .into_iter()
        .map(|a| {
            let p = joint(h, &OutcomeQuery::new(a.clone(), t)).expect("labels from the schedule");
            (a, p)
        })
        .collect();
    ProbabilityTable { t, rows }
}

/// `P(target = x | given = y ∧ t)` over all labels reachable at `t`.
pub fn conditional_table(
    h: &HistoryState,
    target: &str,
    given: &str,
    t: f64,
) -> Result<ConditionalTable> {
    if target == given {
        return Err(Error::key(format!(
            "cannot condition detector '{target}' on itself"
        )));
    }
    let target_labels = labels_at(h, target, t)?;
    let mut rows = Vec::new();
    for g in labels_at(h, given, t)? {
        let cond = Assignment::new().with(given, g.clone());
        for x in &target_labels {
            let value = match conditional(h, &Assignment::new().with(target, x.clone()), &cond, t) {
                Ok(v) => Some(v),
                Err(Error::ConditioningOnNullEvent { .. }) => None,
                Err(e) => return Err(e),
            };
            rows.push((g.clone(), x.clone(), value));
        }
    }
    Ok(ConditionalTable {
        t,
        target: target.to_string(),
        given: given.to_string(),
        rows,
    })
}

/// Literal trace rule `tr(ρ(t) Π)` with `ρ(t) = |ψ(t)⟩⟨ψ(t)|` and `Π` the
/// tensor product of the assigned record projectors. Builds dense matrices
/// over the whole layout; meant for cross-checking small scenarios.
pub fn trace_rule(h: &HistoryState, q: &OutcomeQuery) -> Result<f64> {
    let rho = DensityMatrix::from_pure(&h.state_at(q.t))?;
    let mut effect: Option<Operator> = None;
    for (detector, label) in q.assignment.iter() {
        let record = h.schedule().detector(detector)?.record_state(label)?;
        let p = Operator::outer(&record, &record)?;
        effect = Some(match effect {
            None => p,
            Some(e) => e.tensor(&p)?,
        });
    }
    let effect = effect.ok_or_else(|| Error::key("trace-rule query names no detector"))?;
    rho.trace_rule(&effect)
}
