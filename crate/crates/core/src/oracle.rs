//! Textbook sequential-measurement probabilities.
//!
//! `P(m_1, …, m_k) = ‖K^{m_k} U … U K^{m_1} U ψ_0‖²` with every Kraus operator
//! lifted to the system space by explicit index matching and every free
//! propagator obtained from a Taylor series with scaling and squaring. No
//! detector ancillas, no segments, no shared code with the history-state
//! path beyond the plain data types, so agreement between the two is a real
//! cross-check.

use crate::error::{Error, Result};
use crate::hilbert::{Operator, StateVector, SubsystemLayout, C64};
use crate::probability::Assignment;
use crate::timeline::EventSchedule;

type Matrix = Vec<Vec<C64>>;

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn matvec(a: &Matrix, v: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// `e^{A}` by Taylor series on `A / 2^s`, then `s` squarings.
fn expm(a: &Matrix) -> Matrix {
    let n = a.len();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled: Matrix = a
        .iter()
        .map(|row| row.iter().map(|x| x * scale).collect())
        .collect();
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = matmul(&term, &scaled);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

fn digits(layout: &SubsystemLayout, mut index: usize) -> Vec<usize> {
    let mut out = vec![0; layout.len()];
    for (k, f) in layout.factors().iter().enumerate().rev() {
        out[k] = index % f.dim;
        index /= f.dim;
    }
    out
}

/// `op ⊗ 𝟙` over `system`, built entry by entry: `⟨i|·|j⟩` is nonzero only
/// when `i` and `j` agree on every non-target factor.
fn lift(op: &Operator, system: &SubsystemLayout) -> Result<Matrix> {
    let targets: Vec<usize> = op
        .layout()
        .factors()
        .iter()
        .map(|f| {
            system
                .position(&f.label)
                .filter(|&p| system.factors()[p].dim == f.dim)
                .ok_or_else(|| {
                    Error::layout(format!(
                        "factor '{}' is not an explicit system factor of {system}; \
                         the sequential oracle cannot model detector records",
                        f.label
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let local_index = |d: &[usize]| {
        targets
            .iter()
            .zip(op.layout().factors())
            .fold(0, |acc, (&p, f)| acc * f.dim + d[p])
    };
    let n = system.dim();
    let all: Vec<Vec<usize>> = (0..n).map(|i| digits(system, i)).collect();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let spectators_agree = (0..system.len())
                .filter(|p| !targets.contains(p))
                .all(|p| all[i][p] == all[j][p]);
            if spectators_agree {
                out[i][j] = op.get(local_index(&all[i]), local_index(&all[j]));
            }
        }
    }
    Ok(out)
}

/// Probability of the outcome sequence `outcomes` (one label per event) for
/// `psi0` given at clock reading `t0`, evolving under `h_system` between events.
pub fn sequential_born(
    psi0: &StateVector,
    t0: f64,
    h_system: &Operator,
    schedule: &EventSchedule,
    outcomes: &Assignment,
) -> Result<f64> {
    let system = psi0.layout();
    if h_system.layout() != system {
        return Err(Error::layout(
            "Hamiltonian and initial state live on different layouts",
        ));
    }
    if let Some(first) = schedule.events().first() {
        if t0 >= first.time {
            return Err(Error::Schedule(format!(
                "initial time {t0} is not before the first event at {}",
                first.time
            )));
        }
    }
    for (d, _) in outcomes.iter() {
        schedule.detector(d)?;
    }
    let minus_i_h: Matrix = h_system
        .rows()
        .into_iter()
        .map(|row| row.into_iter().map(|x| x * C64::new(0.0, -1.0)).collect())
        .collect();

    let mut psi = psi0.amplitudes().to_vec();
    let mut now = t0;
    for event in schedule.events() {
        let det = &event.detector;
        let label = outcomes.get(det.label()).ok_or_else(|| {
            Error::key(format!("no outcome given for detector '{}'", det.label()))
        })?;
        let k = det.kraus().operator(label)?;
        let dt = event.time - now;
        let u = expm(
            &minus_i_h
                .iter()
                .map(|row| row.iter().map(|x| x * dt).collect())
                .collect(),
        );
        psi = matvec(&lift(k, system)?, &matvec(&u, &psi));
        now = event.time;
    }
    Ok(psi.iter().map(|a| a.norm_sqr()).sum())
}
