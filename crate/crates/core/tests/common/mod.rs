//! Random scenario generators shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use timeless_core::hilbert::Spectral;
use timeless_core::{
    DetectorModel, Event, EventSchedule, KrausSet, Operator, StateVector, SubsystemLayout, C64,
};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_complex(rng: &mut StdRng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_state(rng: &mut StdRng, layout: &SubsystemLayout) -> StateVector {
    let amps = (0..layout.dim()).map(|_| random_complex(rng)).collect();
    StateVector::new(layout.clone(), amps)
        .unwrap()
        .normalized()
        .unwrap()
}

/// Uniform random unit pair `(x, y)` with `|x|² + |y|² = 1`.
pub fn random_pair(rng: &mut StdRng) -> (C64, C64) {
    loop {
        let (x, y) = (random_complex(rng), random_complex(rng));
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if n > 1e-3 {
            return (x / n, y / n);
        }
    }
}

pub fn random_hermitian(rng: &mut StdRng, layout: &SubsystemLayout) -> Operator {
    let n = layout.dim();
    let g: Vec<C64> = (0..n * n).map(|_| random_complex(rng)).collect();
    Operator::from_fn(layout.clone(), |i, j| {
        (g[i * n + j] + g[j * n + i].conj()) * 0.5
    })
}

/// Random Hermitian rescaled so its spectral norm is at most `bound`.
pub fn random_bounded_hermitian(
    rng: &mut StdRng,
    layout: &SubsystemLayout,
    bound: f64,
) -> Operator {
    let h = random_hermitian(rng, layout);
    let norm = Spectral::new(&h).unwrap().spectral_norm();
    let target = bound * rng.gen_range(0.1..1.0);
    h.scale(c(target / norm, 0.0))
}

/// Complete Kraus set from a random isometry `V: C^d → C^{k d}` split into
/// `k` blocks: the columns of a random `kd × d` matrix are orthonormalized.
pub fn random_kraus(rng: &mut StdRng, targets: &SubsystemLayout, outcomes: usize) -> KrausSet {
    let d = targets.dim();
    let rows = outcomes * d;
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| (0..rows).map(|_| random_complex(rng)).collect())
        .collect();
    for j in 0..d {
        for k in 0..j {
            let proj: C64 = cols[k]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| a.conj() * b)
                .sum();
            let prev = cols[k].clone();
            for (x, p) in cols[j].iter_mut().zip(prev) {
                *x -= proj * p;
            }
        }
        let n: f64 = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= n;
        }
    }
    let set = (0..outcomes)
        .map(|m| {
            let op = Operator::from_fn(targets.clone(), |i, j| cols[j][m * d + i]);
            (format!("o{m}"), op)
        })
        .collect();
    KrausSet::new(set).unwrap()
}

/// A randomized system + schedule: system dimension 2–4 (a dimension-4 system
/// is sometimes split into two qubits), 1–3 events with 1–3 outcomes each,
/// Kraus operators on random non-empty subsets of the system factors.
#[derive(Debug, Clone)]
pub struct RandomScenario {
    pub psi0: StateVector,
    pub t0: f64,
    pub h_system: Operator,
    pub schedule: EventSchedule,
}

impl RandomScenario {
    pub fn generate(rng: &mut StdRng) -> Self {
        let dim = rng.gen_range(2..=4);
        let system = if dim == 4 && rng.gen_bool(0.5) {
            SubsystemLayout::new([("A", 2), ("B", 2)]).unwrap()
        } else {
            SubsystemLayout::single("S", dim).unwrap()
        };
        let labels: Vec<String> = system.labels().map(str::to_string).collect();
        let n_events = rng.gen_range(1..=3);
        let mut times: Vec<f64> = (0..n_events).map(|_| rng.gen_range(0.5..6.0)).collect();
        times.sort_by(f64::total_cmp);
        for k in 1..times.len() {
            if times[k] - times[k - 1] < 0.25 {
                times[k] = times[k - 1] + 0.25;
            }
        }
        let events = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let mut targets = labels.clone();
                targets.shuffle(rng);
                targets.truncate(rng.gen_range(1..=labels.len()));
                let target_layout = system.restrict(&targets).unwrap();
                let outcomes = rng.gen_range(1..=3);
                let kraus = random_kraus(rng, &target_layout, outcomes);
                Event::new(t, DetectorModel::new(format!("D{k}"), kraus).unwrap())
            })
            .collect();
        RandomScenario {
            psi0: random_state(rng, &system),
            t0: 0.0,
            h_system: random_hermitian(rng, &system),
            schedule: EventSchedule::new(events).unwrap(),
        }
    }

    pub fn last_time(&self) -> f64 {
        self.schedule.last_time().unwrap_or(self.t0)
    }

    /// One clock reading before the first event, one inside every gap, one after the last.
    pub fn regime_times(&self) -> Vec<f64> {
        let times: Vec<f64> = self.schedule.events().iter().map(|e| e.time).collect();
        let mut out = vec![times[0] - 0.3];
        for w in times.windows(2) {
            out.push(0.5 * (w[0] + w[1]));
        }
        out.push(self.last_time() + 1.0);
        out
    }

    /// Every full outcome assignment, in schedule order.
    pub fn all_outcomes(&self) -> Vec<timeless_core::Assignment> {
        let mut out = vec![timeless_core::Assignment::new()];
        for det in self.schedule.detectors() {
            out = out
                .iter()
                .flat_map(|a| {
                    det.kraus()
                        .labels()
                        .map(move |l| a.clone().with(det.label(), l))
                })
                .collect();
        }
        out
    }
}
