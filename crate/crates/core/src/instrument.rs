//! Generalized measurements.
//!
//! A [`KrausSet`] is an outcome-labeled family `{K^m}` acting on a group of
//! target factors. A [`DetectorModel`] pairs it with an ancilla whose basis
//! holds one record state per outcome plus a dedicated ready state `|r⟩`,
//! and [`apply_instrument`] realizes the system–detector coupling
//! `|ψ⟩ ⊗ |r⟩ ↦ Σ_m K^m|ψ⟩ ⊗ |m⟩`.

use crate::error::{Error, Result};
use crate::hilbert::{
    insert_factor, project_outcome, Operator, StateVector, SubsystemLayout, STRUCTURE_TOL,
};

/// Label used for the ready state unless a detector overrides it.
pub const DEFAULT_READY_LABEL: &str = "r";

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    targets: SubsystemLayout,
    outcomes: Vec<(String, Operator)>,
}

/// Result of checking `Σ_m K†K = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletenessReport {
    /// Max-norm of `Σ_m K†K − I`.
    pub deviation: f64,
}

impl CompletenessReport {
    pub fn is_ok(&self) -> bool {
        self.deviation <= STRUCTURE_TOL
    }
}

impl KrausSet {
    /// All operators must share one layout, which becomes the target set.
    pub fn new<S: Into<String>>(outcomes: Vec<(S, Operator)>) -> Result<Self> {
        let outcomes: Vec<(String, Operator)> =
            outcomes.into_iter().map(|(l, k)| (l.into(), k)).collect();
        let Some((_, first)) = outcomes.first() else {
            return Err(Error::domain("a Kraus set needs at least one outcome"));
        };
        let targets = first.layout().clone();
        for (k, (label, op)) in outcomes.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::key("empty outcome label"));
            }
            if outcomes[..k].iter().any(|(l, _)| l == label) {
                return Err(Error::key(format!("duplicate outcome label '{label}'")));
            }
            if op.layout() != &targets {
                return Err(Error::layout(format!(
                    "Kraus operator '{label}' acts on {} but the set targets {}",
                    op.layout(),
                    targets
                )));
            }
        }
        Ok(KrausSet { targets, outcomes })
    }

    pub fn targets(&self) -> &SubsystemLayout {
        &self.targets
    }

    pub fn outcomes(&self) -> &[(String, Operator)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn operator(&self, outcome: &str) -> Result<&Operator> {
        self.outcomes
            .iter()
            .find(|(l, _)| l == outcome)
            .map(|(_, k)| k)
            .ok_or_else(|| Error::key(format!("unknown outcome '{outcome}'")))
    }

    pub fn validate(&self) -> CompletenessReport {
        let sum = self
            .outcomes
            .iter()
            .map(|(_, k)| k.adjoint().mul(k).expect("shared layout"))
            .fold(Operator::zeros(self.targets.clone()), |acc, p| {
                acc.add(&p).expect("shared layout")
            });
        let deviation = sum
            .max_abs_diff(&Operator::identity(self.targets.clone()))
            .expect("shared layout");
        CompletenessReport { deviation }
    }

    /// POVM element `Π^m = K†K`.
    pub fn effect_of(&self, outcome: &str) -> Result<Effect> {
        let k = self.operator(outcome)?;
        Ok(Effect(k.adjoint().mul(k)?))
    }
}

/// Positive operator `0 ≤ Π ≤ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(Operator);

impl Effect {
    pub fn operator(&self) -> &Operator {
        &self.0
    }

    /// `⟨ψ|Π|ψ⟩` for a state that contains the effect's factors.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let applied = self.0.apply_on(state)?;
        Ok(crate::hilbert::inner(state, &applied)?.re)
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }
}

/// A measuring device: its ancilla factor and the Kraus set it implements.
///
/// The ancilla has dimension `outcomes + 1`. Outcome `k` is recorded in basis
/// state `k` and the ready state is the last basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    label: String,
    kraus: KrausSet,
    ready_label: String,
}

impl DetectorModel {
    pub fn new(label: impl Into<String>, kraus: KrausSet) -> Result<Self> {
        Self::with_ready_label(label, kraus, DEFAULT_READY_LABEL)
    }

    pub fn with_ready_label(
        label: impl Into<String>,
        kraus: KrausSet,
        ready_label: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        let ready_label = ready_label.into();
        if label.is_empty() {
            return Err(Error::layout("empty detector label"));
        }
        if kraus.targets().contains(&label) {
            return Err(Error::layout(format!(
                "detector '{label}' cannot target its own record"
            )));
        }
        if kraus.labels().any(|l| l == ready_label) {
            return Err(Error::key(format!(
                "outcome label '{ready_label}' collides with the ready label of detector '{label}'"
            )));
        }
        let report = kraus.validate();
        if !report.is_ok() {
            return Err(Error::Validation {
                detector: label,
                deviation: report.deviation,
            });
        }
        Ok(DetectorModel {
            label,
            kraus,
            ready_label,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn ready_label(&self) -> &str {
        &self.ready_label
    }

    pub fn ancilla_dim(&self) -> usize {
        self.kraus.len() + 1
    }

    pub fn ready_index(&self) -> usize {
        self.kraus.len()
    }

    pub fn ancilla_layout(&self) -> SubsystemLayout {
        SubsystemLayout::single(self.label.clone(), self.ancilla_dim())
            .expect("non-empty label, positive dim")
    }

    /// Basis index of an outcome or of the ready label.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        if label == self.ready_label {
            return Ok(self.ready_index());
        }
        self.kraus.labels().position(|l| l == label).ok_or_else(|| {
            Error::key(format!(
                "detector '{}' has no outcome '{label}'",
                self.label
            ))
        })
    }

    /// Record state `|label⟩` on the ancilla; the ready label gives `|r⟩`.
    pub fn record_state(&self, label: &str) -> Result<StateVector> {
        StateVector::basis(self.ancilla_layout(), self.index_of(label)?)
    }

    pub fn ready_state(&self) -> StateVector {
        StateVector::basis(self.ancilla_layout(), self.ready_index()).expect("index in range")
    }

    /// Outcome labels followed by the ready label.
    pub fn record_labels(&self) -> impl Iterator<Item = &str> {
        self.kraus
            .labels()
            .chain(std::iter::once(self.ready_label.as_str()))
    }
}

/// `|ψ⟩ ⊗ |r⟩_D ↦ Σ_m (K^m ⊗ 𝟙)|ψ⟩ ⊗ |m⟩_D`.
///
/// `state` must contain the detector factor (in its ready state) and every
/// target factor of the detector's Kraus set.
pub fn apply_instrument(state: &StateVector, det: &DetectorModel) -> Result<StateVector> {
    let layout = state.layout();
    let pos = layout.position(det.label()).ok_or_else(|| {
        Error::layout(format!("detector '{}' not in layout {layout}", det.label()))
    })?;
    if layout.factors()[pos].dim != det.ancilla_dim() {
        return Err(Error::layout(format!(
            "factor '{}' has dimension {} but the detector needs {}",
            det.label(),
            layout.factors()[pos].dim,
            det.ancilla_dim()
        )));
    }
    for target in det.kraus().targets().labels() {
        if !layout.contains(target) {
            return Err(Error::layout(format!(
                "target '{target}' of detector '{}' not in layout {layout}",
                det.label()
            )));
        }
    }
    let ready = det.ready_state();
    let before = project_outcome(state, &ready)?;
    // every amplitude off the ready record must vanish
    let off_ready = state.norm_sqr() - before.norm_sqr();
    if off_ready.max(0.0).sqrt() >= STRUCTURE_TOL {
        return Err(Error::State(format!(
            "detector '{}' is not in its ready state (off-ready weight {off_ready:e})",
            det.label()
        )));
    }
    let mut out = StateVector::zeros(layout.clone());
    for (label, k) in det.kraus().outcomes() {
        let branch = k.apply_on(&before)?;
        let record = det.record_state(label)?;
        out = out.add(&insert_factor(&branch, &record, layout)?)?;
    }
    Ok(out)
}
