//! The Wigner's-friend setup.
//!
//! A qubit `S` starts in `a|↑⟩ + b|↓⟩`. At `t_M` the friend `F` measures it
//! projectively. At `t_N` Wigner `W` measures the pair `S ⊗ F` in the
//! entangled basis
//!
//! ```text
//! |yes⟩ = α|↑↑⟩ + β|↓↓⟩,   |no⟩ = −β*|↑↑⟩ + α*|↓↓⟩
//! ```
//!
//! There is no free dynamics. The friend's record is an ancilla with basis
//! `{up, down, r}`, so Wigner's Kraus operators act on a 2 × 3 space. On the
//! part of that space outside `span{|↑↑⟩, |↓↓⟩}` the "no" operator acts as
//! the identity, which keeps the set complete; states reachable from the
//! friend's measurement never have amplitude there.

use crate::error::{Error, Result};
use crate::hilbert::{Operator, StateVector, SubsystemLayout, C64, EQUALITY_TOL, ONE, ZERO};
use crate::instrument::{DetectorModel, KrausSet};
use crate::oracle;
use crate::probability::{
    conditional_table, full_table, marginal, Assignment, ConditionalTable, OutcomeQuery,
    ProbabilityTable,
};
use crate::timeline::{build_history, Event, EventSchedule, HistoryState};

pub const SYSTEM: &str = "S";
pub const FRIEND: &str = "F";
pub const WIGNER: &str = "W";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FriendRecord {
    Up,
    Down,
}

impl FriendRecord {
    pub const ALL: [FriendRecord; 2] = [FriendRecord::Up, FriendRecord::Down];

    pub fn label(self) -> &'static str {
        match self {
            FriendRecord::Up => "up",
            FriendRecord::Down => "down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerRecord {
    Yes,
    No,
}

impl WignerRecord {
    pub const ALL: [WignerRecord; 2] = [WignerRecord::Yes, WignerRecord::No];

    pub fn label(self) -> &'static str {
        match self {
            WignerRecord::Yes => "yes",
            WignerRecord::No => "no",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerScenario {
    pub a: C64,
    pub b: C64,
    pub alpha: C64,
    pub beta: C64,
    pub t_m: f64,
    pub t_n: f64,
    /// Clock reading at which `a|↑⟩ + b|↓⟩` is given; must precede `t_m`.
    pub t0: f64,
}

impl WignerScenario {
    pub fn new(a: C64, b: C64, alpha: C64, beta: C64, t_m: f64, t_n: f64) -> Result<Self> {
        Self::with_origin(a, b, alpha, beta, t_m, t_n, t_m - 1.0)
    }

    pub fn with_origin(
        a: C64,
        b: C64,
        alpha: C64,
        beta: C64,
        t_m: f64,
        t_n: f64,
        t0: f64,
    ) -> Result<Self> {
        let s = WignerScenario {
            a,
            b,
            alpha,
            beta,
            t_m,
            t_n,
            t0,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let norm_ab = self.a.norm_sqr() + self.b.norm_sqr();
        if (norm_ab - 1.0).abs() > EQUALITY_TOL {
            return Err(Error::domain(format!(
                "|a|² + |b|² = {norm_ab}, expected 1"
            )));
        }
        let norm_ab = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if (norm_ab - 1.0).abs() > EQUALITY_TOL {
            return Err(Error::domain(format!(
                "|α|² + |β|² = {norm_ab}, expected 1"
            )));
        }
        if !(self.t0 < self.t_m && self.t_m < self.t_n) || !self.t_n.is_finite() {
            return Err(Error::domain(format!(
                "need t0 < t_M < t_N, got {} < {} < {}",
                self.t0, self.t_m, self.t_n
            )));
        }
        Ok(())
    }

    pub fn system_layout() -> SubsystemLayout {
        SubsystemLayout::single(SYSTEM, 2).expect("valid layout")
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::new(Self::system_layout(), vec![self.a, self.b]).expect("two amplitudes")
    }

    /// Projective `{|↑⟩⟨↑|, |↓⟩⟨↓|}` on `S`.
    pub fn friend_detector() -> DetectorModel {
        let s = Self::system_layout();
        let up = Operator::from_rows(s.clone(), &[vec![ONE, ZERO], vec![ZERO, ZERO]]).expect("2x2");
        let down = Operator::from_rows(s, &[vec![ZERO, ZERO], vec![ZERO, ONE]]).expect("2x2");
        let kraus = KrausSet::new(vec![
            (FriendRecord::Up.label(), up),
            (FriendRecord::Down.label(), down),
        ])
        .expect("shared layout");
        DetectorModel::new(FRIEND, kraus).expect("complete projective set")
    }

    /// Layout `S ⊗ F` that Wigner's Kraus operators act on.
    pub fn pair_layout() -> SubsystemLayout {
        let friend = Self::friend_detector();
        Self::system_layout()
            .concat(&friend.ancilla_layout())
            .expect("distinct labels")
    }

    /// `|s⟩_S |f⟩_F` with `s`, `f` ∈ {up = 0, down = 1}.
    fn pair_index(s: usize, f: usize) -> usize {
        s * 3 + f
    }

    pub fn yes_state(&self) -> StateVector {
        let mut amps = vec![ZERO; 6];
        amps[Self::pair_index(0, 0)] = self.alpha;
        amps[Self::pair_index(1, 1)] = self.beta;
        StateVector::new(Self::pair_layout(), amps).expect("six amplitudes")
    }

    pub fn no_state(&self) -> StateVector {
        let mut amps = vec![ZERO; 6];
        amps[Self::pair_index(0, 0)] = -self.beta.conj();
        amps[Self::pair_index(1, 1)] = self.alpha.conj();
        StateVector::new(Self::pair_layout(), amps).expect("six amplitudes")
    }

    /// `{K^yes = |yes⟩⟨yes|, K^no = |no⟩⟨no| + P_⊥}` on `S ⊗ F`, where `P_⊥`
    /// projects onto the complement of `span{|↑↑⟩, |↓↓⟩}`.
    pub fn wigner_kraus(&self) -> KrausSet {
        let yes = self.yes_state();
        let no = self.no_state();
        let k_yes = Operator::outer(&yes, &yes).expect("same layout");
        let correlated = [Self::pair_index(0, 0), Self::pair_index(1, 1)];
        let complement = Operator::from_fn(Self::pair_layout(), |i, j| {
            if i == j && !correlated.contains(&i) {
                ONE
            } else {
                ZERO
            }
        });
        let k_no = Operator::outer(&no, &no)
            .and_then(|p| p.add(&complement))
            .expect("same layout");
        KrausSet::new(vec![
            (WignerRecord::Yes.label(), k_yes),
            (WignerRecord::No.label(), k_no),
        ])
        .expect("shared layout")
    }

    pub fn wigner_detector(&self) -> Result<DetectorModel> {
        DetectorModel::new(WIGNER, self.wigner_kraus())
    }

    pub fn schedule(&self) -> Result<EventSchedule> {
        EventSchedule::new(vec![
            Event::new(self.t_m, Self::friend_detector()),
            Event::new(self.t_n, self.wigner_detector()?),
        ])
    }

    /// History state over `S ⊗ F ⊗ W` with `H_S = 0`.
    pub fn build(&self) -> Result<HistoryState> {
        self.check()?;
        build_history(
            &self.initial_state(),
            self.t0,
            &Operator::zeros(Self::system_layout()),
            self.schedule()?,
        )
    }

    /// All five tables at clock reading `t`.
    pub fn tables(&self, t: f64) -> Result<WignerTables> {
        let h = self.build()?;
        let single = |det: &str| -> Result<ProbabilityTable> {
            let rows = crate::probability::labels_at(&h, det, t)?
                .into_iter()
                .map(|l| {
                    let a = Assignment::new().with(det, l);
                    marginal(&h, &OutcomeQuery::new(a.clone(), t)).map(|p| (a, p))
                })
                .collect::<Result<_>>()?;
            Ok(ProbabilityTable { t, rows })
        };
        Ok(WignerTables {
            joint: full_table(&h, t),
            marginal_w: single(WIGNER)?,
            marginal_f: single(FRIEND)?,
            w_given_f: conditional_table(&h, WIGNER, FRIEND, t)?,
            f_given_w: conditional_table(&h, FRIEND, WIGNER, t)?,
        })
    }

    pub fn closed_form(&self) -> ClosedForm {
        ClosedForm::new(self.a, self.b, self.alpha, self.beta)
    }

    /// `P(f ∧ w)` after both measurements from the sequential oracle. The
    /// friend's record is kept as an explicit system factor: the friend's
    /// coupling is a unitary on `S ⊗ F`, Wigner measures `S ⊗ F`, and the
    /// friend's memory is read out projectively afterwards.
    pub fn oracle_joint(&self, f: FriendRecord, w: WignerRecord) -> Result<f64> {
        let pair = Self::pair_layout();
        // |s⟩|r⟩ ↔ |s⟩|s⟩, everything else fixed
        let coupling = Operator::from_fn(pair.clone(), |i, j| {
            let swap = |k: usize| match k {
                k if k == Self::pair_index(0, 2) => Self::pair_index(0, 0),
                k if k == Self::pair_index(0, 0) => Self::pair_index(0, 2),
                k if k == Self::pair_index(1, 2) => Self::pair_index(1, 1),
                k if k == Self::pair_index(1, 1) => Self::pair_index(1, 2),
                k => k,
            };
            if swap(j) == i {
                ONE
            } else {
                ZERO
            }
        });
        let readout = {
            let f_layout = SubsystemLayout::single(FRIEND, 3).expect("valid layout");
            let proj = |k: usize| {
                Operator::from_fn(
                    f_layout.clone(),
                    |i, j| if i == k && j == k { ONE } else { ZERO },
                )
            };
            KrausSet::new(vec![
                (FriendRecord::Up.label(), proj(0)),
                (FriendRecord::Down.label(), proj(1)),
                ("unrecorded", proj(2)),
            ])?
        };
        let schedule = EventSchedule::new(vec![
            Event::new(
                self.t_m,
                DetectorModel::new("friend-coupling", KrausSet::new(vec![("done", coupling)])?)?,
            ),
            Event::new(self.t_n, DetectorModel::new(WIGNER, self.wigner_kraus())?),
            Event::new(
                self.t_n + 1.0,
                DetectorModel::new("friend-memory", readout)?,
            ),
        ])?;
        let mut psi0 = vec![ZERO; 6];
        psi0[Self::pair_index(0, 2)] = self.a;
        psi0[Self::pair_index(1, 2)] = self.b;
        let psi0 = StateVector::new(pair.clone(), psi0)?;
        let outcomes = Assignment::new()
            .with("friend-coupling", "done")
            .with(WIGNER, w.label())
            .with("friend-memory", f.label());
        oracle::sequential_born(&psi0, self.t0, &Operator::zeros(pair), &schedule, &outcomes)
    }
}

/// The tables computed through the history state at one clock reading.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerTables {
    pub joint: ProbabilityTable,
    pub marginal_w: ProbabilityTable,
    pub marginal_f: ProbabilityTable,
    pub w_given_f: ConditionalTable,
    pub f_given_w: ConditionalTable,
}

impl WignerTables {
    pub fn joint(&self, f: &str, w: &str) -> Option<f64> {
        self.joint
            .get(&Assignment::new().with(FRIEND, f).with(WIGNER, w))
    }

    pub fn marginal_w(&self, w: &str) -> Option<f64> {
        self.marginal_w.get(&Assignment::new().with(WIGNER, w))
    }

    pub fn marginal_f(&self, f: &str) -> Option<f64> {
        self.marginal_f.get(&Assignment::new().with(FRIEND, f))
    }

    /// `P(w | f ∧ t)`; the outer `None` means an unknown label, the inner a
    /// null conditioning event.
    pub fn w_given_f(&self, w: &str, f: &str) -> Option<Option<f64>> {
        self.w_given_f.get(w, f)
    }

    pub fn f_given_w(&self, f: &str, w: &str) -> Option<Option<f64>> {
        self.f_given_w.get(f, w)
    }
}

/// Closed-form table entries for clock readings after Wigner's measurement,
/// in terms of `A = aα* + bβ*` and `B = aβ − bα`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    alpha2: f64,
    beta2: f64,
    yes2: f64,
    no2: f64,
}

impl ClosedForm {
    pub fn new(a: C64, b: C64, alpha: C64, beta: C64) -> Self {
        ClosedForm {
            alpha2: alpha.norm_sqr(),
            beta2: beta.norm_sqr(),
            yes2: (a * alpha.conj() + b * beta.conj()).norm_sqr(),
            no2: (a * beta - b * alpha).norm_sqr(),
        }
    }

    /// `P(f ∧ w ∧ t)`.
    pub fn joint(&self, f: FriendRecord, w: WignerRecord) -> f64 {
        use FriendRecord::*;
        use WignerRecord::*;
        match (f, w) {
            (Up, Yes) => self.alpha2 * self.yes2,
            (Up, No) => self.beta2 * self.no2,
            (Down, Yes) => self.beta2 * self.yes2,
            (Down, No) => self.alpha2 * self.no2,
        }
    }

    /// `P(w ∧ t)`.
    pub fn marginal_w(&self, w: WignerRecord) -> f64 {
        match w {
            WignerRecord::Yes => self.yes2,
            WignerRecord::No => self.no2,
        }
    }

    /// `P(f ∧ t)`.
    pub fn marginal_f(&self, f: FriendRecord) -> f64 {
        match f {
            FriendRecord::Up => self.alpha2 * self.yes2 + self.beta2 * self.no2,
            FriendRecord::Down => self.beta2 * self.yes2 + self.alpha2 * self.no2,
        }
    }

    /// `P(w | f ∧ t)`.
    pub fn w_given_f(&self, w: WignerRecord, f: FriendRecord) -> f64 {
        self.joint(f, w) / self.marginal_f(f)
    }

    /// `P(f | w ∧ t)`, which depends on `(α, β)` only.
    pub fn f_given_w(&self, f: FriendRecord, w: WignerRecord) -> f64 {
        match (f, w) {
            (FriendRecord::Up, WignerRecord::Yes) | (FriendRecord::Down, WignerRecord::No) => {
                self.alpha2
            }
            _ => self.beta2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::TensorProduct;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scenario() -> WignerScenario {
        WignerScenario::new(
            c(0.6, 0.0),
            c(0.0, 0.8),
            c(0.28, 0.96),
            c(0.0, 0.0),
            1.0,
            2.0,
        )
        .unwrap()
    }

    fn generic() -> WignerScenario {
        let (a, b) = (c(0.36, 0.48), c(0.0, 0.8));
        let (alpha, beta) = (c(0.6, 0.0), c(0.48, 0.64));
        WignerScenario::new(a, b, alpha, beta, 1.0, 2.0).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        assert!(WignerScenario::new(ONE, ONE, ONE, ZERO, 1.0, 2.0).is_err());
        assert!(WignerScenario::new(ONE, ZERO, ONE, ONE, 1.0, 2.0).is_err());
        assert!(WignerScenario::new(ONE, ZERO, ONE, ZERO, 2.0, 2.0).is_err());
        assert!(scenario().build().is_ok());
    }

    #[test]
    fn kraus_sets_are_complete() {
        assert!(WignerScenario::friend_detector().kraus().validate().is_ok());
        let set = generic().wigner_kraus();
        assert!(set.validate().deviation <= 1e-10);
        let yes = generic().yes_state();
        let effect = set.effect_of("yes").unwrap();
        let want = Operator::outer(&yes, &yes).unwrap();
        assert!(effect.operator().max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn state_after_friend() {
        let s = generic();
        let h = s.build().unwrap();
        let psi = h.state_at(1.5);
        // layout S:2, F:3, W:3; index = s*9 + f*3 + w, w = r = 2
        let mut want = vec![ZERO; 18];
        want[2] = s.a;
        want[9 + 3 + 2] = s.b;
        assert!(
            psi.max_abs_diff(&StateVector::new(h.layout().clone(), want).unwrap())
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn state_after_wigner_for_up_input() {
        let (alpha, beta) = (c(0.6, 0.0), c(0.48, 0.64));
        let s = WignerScenario::new(ONE, ZERO, alpha, beta, 1.0, 2.0).unwrap();
        let h = s.build().unwrap();
        let w = SubsystemLayout::single(WIGNER, 3).unwrap();
        let yes_w = StateVector::basis(w.clone(), 0).unwrap();
        let no_w = StateVector::basis(w, 1).unwrap();
        let want = s
            .yes_state()
            .scale(alpha.conj())
            .tensor(&yes_w)
            .unwrap()
            .add(&s.no_state().scale(-beta).tensor(&no_w).unwrap())
            .unwrap();
        assert!(h.state_at(5.0).max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn wigner_branch_matches_hand_expansion() {
        let s = generic();
        let h = s.build().unwrap();
        let psi = h.state_at(3.0);
        let yes_amp = s.a * s.alpha.conj() + s.b * s.beta.conj();
        let no_amp = s.a * s.beta - s.b * s.alpha;
        let w = SubsystemLayout::single(WIGNER, 3).unwrap();
        let want = s
            .yes_state()
            .scale(yes_amp)
            .tensor(&StateVector::basis(w.clone(), 0).unwrap())
            .unwrap()
            .add(
                &s.no_state()
                    .scale(-no_amp)
                    .tensor(&StateVector::basis(w, 1).unwrap())
                    .unwrap(),
            )
            .unwrap();
        assert!(psi.max_abs_diff(&want).unwrap() < 1e-15);
        // nothing ever reaches the uncorrelated part of S ⊗ F
        for (k, amp) in psi.amplitudes().iter().enumerate() {
            let (sv, f) = (k / 9, (k / 3) % 3);
            if sv != f {
                assert_eq!(*amp, ZERO);
            }
        }
    }

    #[test]
    fn tables_after_wigner() {
        let s = generic();
        let cf = s.closed_form();
        let tables = s.tables(3.0).unwrap();
        for f in FriendRecord::ALL {
            assert!((tables.marginal_f(f.label()).unwrap() - cf.marginal_f(f)).abs() < 1e-12);
            for w in WignerRecord::ALL {
                let j = tables.joint(f.label(), w.label()).unwrap();
                assert!((j - cf.joint(f, w)).abs() < 1e-12);
                let v = tables.f_given_w(f.label(), w.label()).unwrap().unwrap();
                assert!((v - cf.f_given_w(f, w)).abs() < 1e-12);
                let v = tables.w_given_f(w.label(), f.label()).unwrap().unwrap();
                assert!((v - cf.w_given_f(w, f)).abs() < 1e-12);
                assert!((s.oracle_joint(f, w).unwrap() - cf.joint(f, w)).abs() < 1e-12);
            }
        }
        for w in WignerRecord::ALL {
            assert!((tables.marginal_w(w.label()).unwrap() - cf.marginal_w(w)).abs() < 1e-12);
        }
    }

    #[test]
    fn spot_values_for_balanced_input() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let s = WignerScenario::new(h, h, ONE, ZERO, 1.0, 2.0).unwrap();
        let t = s.tables(3.0).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
        assert!(close(t.joint("up", "yes").unwrap(), 0.5));
        assert!(close(t.joint("down", "yes").unwrap(), 0.0));
        assert!(close(t.joint("up", "no").unwrap(), 0.0));
        assert!(close(t.joint("down", "no").unwrap(), 0.5));
        assert!(close(t.marginal_w("yes").unwrap(), 0.5));
        assert!(close(t.f_given_w("up", "yes").unwrap().unwrap(), 1.0));
        assert!(close(t.w_given_f("yes", "up").unwrap().unwrap(), 1.0));
    }

    #[test]
    fn tables_before_and_between() {
        let s = generic();
        let before = s.tables(0.5).unwrap();
        assert_eq!(before.joint.len(), 1);
        assert!((before.joint("r", "r").unwrap() - 1.0).abs() < 1e-12);

        let between = s.tables(1.5).unwrap();
        assert!((between.marginal_w("r").unwrap() - 1.0).abs() < 1e-12);
        assert!((between.marginal_f("up").unwrap() - s.a.norm_sqr()).abs() < 1e-12);
        assert!((between.joint.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_event_reported_as_none() {
        // a = 1, b = 0, α = 0, β = 1 makes P(yes) = 0
        let s = WignerScenario::new(ONE, ZERO, ZERO, ONE, 1.0, 2.0).unwrap();
        let t = s.tables(3.0).unwrap();
        assert_eq!(t.f_given_w("up", "yes"), Some(None));
        assert!(t.f_given_w("up", "no").unwrap().is_some());
    }
}
