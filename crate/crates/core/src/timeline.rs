//! Piecewise representation of the clock-entangled history state.
//!
//! With instantaneous couplings at `t_1 < t_2 < …` the global state
//! `|Ψ⟩⟩ = ∫ dt |t⟩_T ⊗ |ψ(t)⟩` is fully determined by one anchor state per
//! half-open interval `[t_k, t_{k+1})`: inside an interval the system flows
//! under `e^{−i H_S (t − t_k)}` and detector records stay frozen. The clock
//! factor itself is never materialized; conditioning on a clock reading is
//! [`HistoryState::state_at`].

use crate::error::{Error, Result};
use crate::hilbert::{
    Operator, Spectral, StateVector, SubsystemLayout, TensorProduct, EQUALITY_TOL,
};
use crate::instrument::{apply_instrument, DetectorModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub detector: DetectorModel,
}

impl Event {
    pub fn new(time: f64, detector: DetectorModel) -> Self {
        Event { time, detector }
    }
}

/// Measurement events with strictly increasing times and distinct detectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventSchedule {
    events: Vec<Event>,
}

impl EventSchedule {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        for (k, e) in events.iter().enumerate() {
            if !e.time.is_finite() {
                return Err(Error::Schedule(format!(
                    "event '{}' has non-finite time {}",
                    e.detector.label(),
                    e.time
                )));
            }
            if k > 0 && e.time <= events[k - 1].time {
                return Err(Error::Schedule(format!(
                    "event '{}' at t = {} does not follow '{}' at t = {}",
                    e.detector.label(),
                    e.time,
                    events[k - 1].detector.label(),
                    events[k - 1].time
                )));
            }
            if events[..k]
                .iter()
                .any(|p| p.detector.label() == e.detector.label())
            {
                return Err(Error::layout(format!(
                    "detector '{}' appears twice in the schedule",
                    e.detector.label()
                )));
            }
        }
        Ok(EventSchedule { events })
    }

    pub fn empty() -> Self {
        EventSchedule::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn detector(&self, label: &str) -> Result<&DetectorModel> {
        self.events
            .iter()
            .map(|e| &e.detector)
            .find(|d| d.label() == label)
            .ok_or_else(|| Error::key(format!("no detector '{label}' in the schedule")))
    }

    pub fn detectors(&self) -> impl Iterator<Item = &DetectorModel> {
        self.events.iter().map(|e| &e.detector)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    /// Detectors whose event fired at or before `t`.
    pub fn fired_by(&self, t: f64) -> impl Iterator<Item = &DetectorModel> {
        self.events
            .iter()
            .filter(move |e| e.time <= t)
            .map(|e| &e.detector)
    }
}

/// One interval `[t_start, t_end)` of the history.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub anchor_time: f64,
    /// State on system ⊗ all detector ancillas at `anchor_time`.
    pub anchor_state: StateVector,
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        self.t_start <= t && t < self.t_end
    }
}

#[derive(Debug, Clone)]
pub struct HistoryState {
    system: SubsystemLayout,
    layout: SubsystemLayout,
    h_system: Operator,
    spectral: Spectral,
    schedule: EventSchedule,
    segments: Vec<Segment>,
}

/// Builds the history state of `psi0` (given at clock reading `t0`) evolving
/// under `h_system` and measured according to `schedule`.
///
/// The full layout is the system factors followed by one ancilla per event in
/// schedule order. Every ancilla starts in its ready state.
pub fn build_history(
    psi0: &StateVector,
    t0: f64,
    h_system: &Operator,
    schedule: EventSchedule,
) -> Result<HistoryState> {
    if !psi0.is_normalized() {
        return Err(Error::domain(format!(
            "initial state has norm {}, expected 1",
            psi0.norm()
        )));
    }
    if h_system.layout() != psi0.layout() {
        return Err(Error::layout(format!(
            "Hamiltonian acts on {} but the initial state lives on {}",
            h_system.layout(),
            psi0.layout()
        )));
    }
    if !t0.is_finite() {
        return Err(Error::domain("initial time must be finite"));
    }
    if let Some(first) = schedule.events().first() {
        if t0 >= first.time {
            return Err(Error::Schedule(format!(
                "initial time {t0} is not before the first event at {}",
                first.time
            )));
        }
    }
    let spectral = Spectral::new(h_system)?;

    let mut state = psi0.clone();
    for det in schedule.detectors() {
        state = state.tensor(&det.ready_state())?;
    }
    let layout = state.layout().clone();
    for det in schedule.detectors() {
        for target in det.kraus().targets().labels() {
            if layout.factor_dim(target).is_none() {
                return Err(Error::layout(format!(
                    "detector '{}' targets unknown factor '{target}'",
                    det.label()
                )));
            }
        }
    }

    let mut segments = Vec::with_capacity(schedule.len() + 1);
    let mut anchor = (t0, state);
    let mut t_start = f64::NEG_INFINITY;
    for event in schedule.events() {
        let evolved = spectral
            .evolution(event.time - anchor.0)
            .apply_on(&anchor.1)?;
        let after = apply_instrument(&evolved, &event.detector)?;
        segments.push(Segment {
            t_start,
            t_end: event.time,
            anchor_time: anchor.0,
            anchor_state: anchor.1,
        });
        t_start = event.time;
        anchor = (event.time, after);
    }
    segments.push(Segment {
        t_start,
        t_end: f64::INFINITY,
        anchor_time: anchor.0,
        anchor_state: anchor.1,
    });

    Ok(HistoryState {
        system: psi0.layout().clone(),
        layout,
        h_system: h_system.clone(),
        spectral,
        schedule,
        segments,
    })
}

impl HistoryState {
    /// System factors only.
    pub fn system_layout(&self) -> &SubsystemLayout {
        &self.system
    }

    /// System factors followed by the detector ancillas.
    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn h_system(&self) -> &Operator {
        &self.h_system
    }

    pub fn schedule(&self) -> &EventSchedule {
        &self.schedule
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment whose half-open interval contains `t`.
    pub fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|s| s.contains(t))
            .unwrap_or(self.segments.len() - 1)
    }

    /// Conditional state `_T⟨t|Ψ⟩⟩` on system ⊗ detectors.
    pub fn state_at(&self, t: f64) -> StateVector {
        let seg = &self.segments[self.segment_index(t)];
        self.evolve(&seg.anchor_state, t - seg.anchor_time)
    }

    fn evolve(&self, state: &StateVector, dt: f64) -> StateVector {
        if dt == 0.0 {
            return state.clone();
        }
        self.spectral
            .evolution(dt)
            .apply_on(state)
            .expect("system factors are part of the history layout")
    }

    /// Norm of the central-difference Schrödinger residual
    /// `i (ψ(t+dt) − ψ(t−dt)) / 2dt − H_S ψ(t)`.
    ///
    /// `[t − dt, t + dt]` must lie inside a single segment.
    pub fn constraint_residual(&self, t: f64, dt: f64) -> Result<f64> {
        if dt.is_nan() || dt <= 0.0 || !t.is_finite() {
            return Err(Error::domain(format!(
                "invalid residual point t = {t}, dt = {dt}"
            )));
        }
        let k = self.segment_index(t);
        let seg = &self.segments[k];
        if !(seg.contains(t - dt) && seg.contains(t + dt)) {
            return Err(Error::domain(format!(
                "[{}, {}] straddles a measurement event",
                t - dt,
                t + dt
            )));
        }
        let forward = self.state_at(t + dt);
        let backward = self.state_at(t - dt);
        let here = self.state_at(t);
        let derivative = forward
            .sub(&backward)?
            .scale(crate::hilbert::C64::new(0.0, 1.0 / (2.0 * dt)));
        let h_psi = self.h_system.apply_on(&here)?;
        Ok(derivative.sub(&h_psi)?.norm())
    }

    /// Checks norm conservation of every anchor state.
    pub fn is_normalized(&self) -> bool {
        self.segments
            .iter()
            .all(|s| (s.anchor_state.norm() - 1.0).abs() <= EQUALITY_TOL)
    }
}
