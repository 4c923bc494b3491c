//! Dense finite-dimensional Hilbert-space primitives.
//!
//! Every space is a labeled tensor product of factors ([`SubsystemLayout`]).
//! Amplitudes and matrix entries are stored row-major with the last factor
//! varying fastest, so `|i⟩_A ⊗ |j⟩_B` lives at index `i * dim(B) + j`.
//!
//! Operators that act on a subset of factors are applied in place of a full
//! Kronecker product through [`Operator::apply_on`]; [`embed`] materializes
//! the full matrix when it is really needed.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for structural predicates (Hermitian, unitary, complete, positive).
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Tolerance for equality of computed amplitudes and probabilities.
pub const EQUALITY_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled tensor factors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubsystemLayout {
    factors: Vec<Subsystem>,
}

impl SubsystemLayout {
    pub fn new<I, S>(factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut out = SubsystemLayout::default();
        for (label, dim) in factors {
            out.push(label.into(), dim)?;
        }
        Ok(out)
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    /// The trivial one-dimensional layout with no factors.
    pub fn scalar() -> Self {
        SubsystemLayout::default()
    }

    fn push(&mut self, label: String, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::layout(format!("factor '{label}' has dimension 0")));
        }
        if label.is_empty() {
            return Err(Error::layout("empty factor label"));
        }
        if self.contains(&label) {
            return Err(Error::layout(format!("duplicate factor label '{label}'")));
        }
        self.factors.push(Subsystem { label, dim });
        Ok(())
    }

    pub fn factors(&self) -> &[Subsystem] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|f| f.label.as_str())
    }

    /// Total dimension, the product of all factor dimensions.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn factor_dim(&self, label: &str) -> Option<usize> {
        self.position(label).map(|p| self.factors[p].dim)
    }

    /// `self ⊗ other`; fails if any label appears in both.
    pub fn concat(&self, other: &SubsystemLayout) -> Result<Self> {
        let mut out = self.clone();
        for f in &other.factors {
            out.push(f.label.clone(), f.dim)?;
        }
        Ok(out)
    }

    /// Sub-layout made of `labels`, in the order given.
    pub fn restrict<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let mut out = SubsystemLayout::default();
        for l in labels {
            let l = l.as_ref();
            let dim = self
                .factor_dim(l)
                .ok_or_else(|| Error::layout(format!("factor '{l}' not in layout {self}")))?;
            out.push(l.to_string(), dim)?;
        }
        Ok(out)
    }

    /// Layout with the named factors removed, remaining order preserved.
    pub fn without<S: AsRef<str>>(&self, labels: &[S]) -> Self {
        SubsystemLayout {
            factors: self
                .factors
                .iter()
                .filter(|f| !labels.iter().any(|l| l.as_ref() == f.label))
                .cloned()
                .collect(),
        }
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1].dim;
        }
        strides
    }

    /// Positions of `sub`'s factors inside `self`, checking dimensions agree.
    fn positions_of(&self, sub: &SubsystemLayout) -> Result<Vec<usize>> {
        sub.factors
            .iter()
            .map(|f| match self.position(&f.label) {
                Some(p) if self.factors[p].dim == f.dim => Ok(p),
                Some(p) => Err(Error::layout(format!(
                    "factor '{}' has dimension {} here but {} in {}",
                    f.label, f.dim, self.factors[p].dim, self
                ))),
                None => Err(Error::layout(format!(
                    "factor '{}' not in layout {}",
                    f.label, self
                ))),
            })
            .collect()
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, s) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", s.label, s.dim)?;
        }
        write!(f, "]")
    }
}

/// Flat offsets of a group of factors inside a full layout, split into the
/// group's own basis (`target`, row-major in group order) and the complement
/// (`rest`, row-major in full-layout order). Full index = `rest[r] + target[l]`.
struct Split {
    target: Vec<usize>,
    rest: Vec<usize>,
}

impl Split {
    fn new(full: &SubsystemLayout, positions: &[usize]) -> Self {
        let strides = full.strides();
        let offsets = |ps: &mut dyn Iterator<Item = usize>| {
            let mut acc = vec![0usize];
            for p in ps {
                let (dim, stride) = (full.factors[p].dim, strides[p]);
                acc = acc
                    .iter()
                    .flat_map(|&o| (0..dim).map(move |d| o + d * stride))
                    .collect();
            }
            acc
        };
        let target = offsets(&mut positions.iter().copied());
        let rest = offsets(&mut (0..full.len()).filter(|p| !positions.contains(p)));
        Split { target, rest }
    }
}

/// Complex amplitude vector over a [`SubsystemLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: SubsystemLayout,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(layout: SubsystemLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::layout(format!(
                "{} amplitudes given for layout {} of dimension {}",
                amplitudes.len(),
                layout,
                layout.dim()
            )));
        }
        Ok(StateVector { layout, amplitudes })
    }

    pub fn zeros(layout: SubsystemLayout) -> Self {
        let n = layout.dim();
        StateVector {
            layout,
            amplitudes: vec![ZERO; n],
        }
    }

    /// Standard basis vector `e_index`.
    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let n = layout.dim();
        if index >= n {
            return Err(Error::layout(format!(
                "basis index {index} out of range for layout {layout}"
            )));
        }
        let mut amplitudes = vec![ZERO; n];
        amplitudes[index] = ONE;
        Ok(StateVector { layout, amplitudes })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= EQUALITY_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::domain(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        StateVector {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        check_same(&self.layout, &other.layout)?;
        Ok(StateVector {
            layout: self.layout.clone(),
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Same amplitudes under a different layout of equal total dimension.
    pub fn with_layout(&self, layout: SubsystemLayout) -> Result<Self> {
        StateVector::new(layout, self.amplitudes.clone())
    }

    /// Largest amplitude-wise distance; requires identical layouts.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        check_same(&self.layout, &other.layout)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn check_same(a: &SubsystemLayout, b: &SubsystemLayout) -> Result<()> {
    if a != b {
        return Err(Error::layout(format!("layout mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    check_same(&a.layout, &b.layout)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Contracts `⟨basis|` on the factors named by `basis`'s layout, leaving the
/// remaining factors in their original order. The squared norm of the result
/// is the weight of that record.
pub fn project_outcome(state: &StateVector, basis: &StateVector) -> Result<StateVector> {
    let positions = state.layout.positions_of(&basis.layout)?;
    let split = Split::new(&state.layout, &positions);
    let reduced = state
        .layout
        .without(&basis.layout.labels().collect::<Vec<_>>());
    let amplitudes = split
        .rest
        .iter()
        .map(|&r| {
            split
                .target
                .iter()
                .zip(&basis.amplitudes)
                .map(|(&t, b)| b.conj() * state.amplitudes[r + t])
                .sum()
        })
        .collect();
    StateVector::new(reduced, amplitudes)
}

/// Inverse of [`project_outcome`] for product states: returns `partial ⊗ record`
/// with its factors arranged in the order of `full`.
pub fn insert_factor(
    partial: &StateVector,
    record: &StateVector,
    full: &SubsystemLayout,
) -> Result<StateVector> {
    let combined = partial.layout.concat(&record.layout)?;
    if combined.len() != full.len() || full.positions_of(&combined).is_err() {
        return Err(Error::layout(format!(
            "{} ⊗ {} does not rearrange into {}",
            partial.layout, record.layout, full
        )));
    }
    let positions = full.positions_of(&record.layout)?;
    let split = Split::new(full, &positions);
    let mut out = StateVector::zeros(full.clone());
    for (r, p) in split.rest.iter().zip(&partial.amplitudes) {
        for (t, q) in split.target.iter().zip(&record.amplitudes) {
            out.amplitudes[r + t] = p * q;
        }
    }
    Ok(out)
}

/// Square complex matrix acting on a [`SubsystemLayout`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    layout: SubsystemLayout,
    entries: Vec<C64>,
}

impl Operator {
    pub fn new(layout: SubsystemLayout, entries: Vec<C64>) -> Result<Self> {
        let n = layout.dim();
        if entries.len() != n * n {
            return Err(Error::layout(format!(
                "{} entries given for a {n}x{n} operator on {layout}",
                entries.len()
            )));
        }
        Ok(Operator { layout, entries })
    }

    pub fn from_rows(layout: SubsystemLayout, rows: &[Vec<C64>]) -> Result<Self> {
        let n = layout.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::layout(format!(
                "operator on {layout} needs {n} rows of length {n}"
            )));
        }
        Operator::new(layout, rows.concat())
    }

    pub fn from_fn(layout: SubsystemLayout, f: impl Fn(usize, usize) -> C64) -> Self {
        let n = layout.dim();
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Operator { layout, entries }
    }

    pub fn zeros(layout: SubsystemLayout) -> Self {
        Self::from_fn(layout, |_, _| ZERO)
    }

    pub fn identity(layout: SubsystemLayout) -> Self {
        Self::from_fn(layout, |i, j| if i == j { ONE } else { ZERO })
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Result<Self> {
        check_same(&ket.layout, &bra.layout)?;
        Ok(Self::from_fn(ket.layout.clone(), |i, j| {
            ket.amplitudes[i] * bra.amplitudes[j].conj()
        }))
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.entries
            .chunks(self.dim().max(1))
            .map(<[C64]>::to_vec)
            .collect()
    }

    pub fn with_layout(&self, layout: SubsystemLayout) -> Result<Self> {
        Operator::new(layout, self.entries.clone())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.layout.clone(), |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator {
            layout: self.layout.clone(),
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        check_same(&self.layout, &other.layout)?;
        Ok(Operator {
            layout: self.layout.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Operator) -> Result<Self> {
        check_same(&self.layout, &other.layout)?;
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(Operator {
            layout: self.layout.clone(),
            entries,
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Entry-wise max-norm distance.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        check_same(&self.layout, &other.layout)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let Ok(prod) = self.adjoint().mul(self) else {
            return false;
        };
        prod.max_abs_diff(&Operator::identity(self.layout.clone()))
            .is_ok_and(|d| d <= tol)
    }

    /// Hermitian with every eigenvalue ≥ −tol.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && Spectral::new(self).is_ok_and(|s| s.eigenvalues().iter().all(|&e| e >= -tol))
    }

    /// Applies the operator to a state on exactly the same layout.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        check_same(&self.layout, &state.layout)?;
        let n = self.dim();
        let amplitudes = (0..n)
            .map(|i| {
                self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(&state.amplitudes)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        StateVector::new(self.layout.clone(), amplitudes)
    }

    /// Applies the operator to the factors of `state` that carry its labels,
    /// acting as the identity on every other factor.
    pub fn apply_on(&self, state: &StateVector) -> Result<StateVector> {
        let positions = state.layout.positions_of(&self.layout)?;
        let split = Split::new(&state.layout, &positions);
        let n = self.dim();
        let mut out = StateVector::zeros(state.layout.clone());
        let mut local = vec![ZERO; n];
        for &r in &split.rest {
            for (slot, &t) in local.iter_mut().zip(&split.target) {
                *slot = state.amplitudes[r + t];
            }
            for (i, &t) in split.target.iter().enumerate() {
                out.amplitudes[r + t] = self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(&local)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        Ok(out)
    }
}

/// Kronecker product over concatenated layouts.
pub trait TensorProduct: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl TensorProduct for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        StateVector::new(layout, amplitudes)
    }
}

impl TensorProduct for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let m = other.dim();
        Ok(Operator::from_fn(layout, |i, j| {
            self.get(i / m, j / m) * other.get(i % m, j % m)
        }))
    }
}

pub fn tensor<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Lifts `op` (acting on `targets`, in that order) to the full layout, with
/// the identity on every other factor.
pub fn embed<S: AsRef<str>>(
    op: &Operator,
    targets: &[S],
    full: &SubsystemLayout,
) -> Result<Operator> {
    let target_layout = full.restrict(targets)?;
    if target_layout
        .factors()
        .iter()
        .map(|f| f.dim)
        .collect::<Vec<_>>()
        != op
            .layout
            .factors()
            .iter()
            .map(|f| f.dim)
            .collect::<Vec<_>>()
    {
        return Err(Error::layout(format!(
            "operator on {} does not match targets {} of {}",
            op.layout, target_layout, full
        )));
    }
    let positions = full.positions_of(&target_layout)?;
    let split = Split::new(full, &positions);
    let n = full.dim();
    let mut out = Operator::zeros(full.clone());
    for &r in &split.rest {
        for (i, &ti) in split.target.iter().enumerate() {
            for (j, &tj) in split.target.iter().enumerate() {
                out.entries[(r + ti) * n + r + tj] = op.get(i, j);
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian operator, reusable for many evolution times.
#[derive(Debug, Clone)]
pub struct Spectral {
    layout: SubsystemLayout,
    eigenvalues: Vec<f64>,
    /// Column `k` holds the eigenvector of `eigenvalues[k]`.
    eigenvectors: DMatrix<C64>,
}

impl Spectral {
    pub fn new(h: &Operator) -> Result<Self> {
        if !h.is_hermitian(STRUCTURE_TOL) {
            return Err(Error::domain(format!(
                "operator on {} is not Hermitian to {STRUCTURE_TOL:e}",
                h.layout
            )));
        }
        let n = h.dim();
        let m = DMatrix::from_fn(n, n, |i, j| (h.get(i, j) + h.get(j, i).conj()) * 0.5);
        let eig = SymmetricEigen::new(m);
        Ok(Spectral {
            layout: h.layout.clone(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// `e^{−i H dt}`.
    pub fn evolution(&self, dt: f64) -> Operator {
        let phases: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * dt))
            .collect();
        let v = &self.eigenvectors;
        let n = self.layout.dim();
        Operator::from_fn(self.layout.clone(), |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

/// Unitary propagator `U(t, t0) = e^{−i h (t − t0)}` of a Hermitian generator.
pub fn propagator(h: &Operator, t: f64, t0: f64) -> Result<Operator> {
    Ok(Spectral::new(h)?.evolution(t - t0))
}

/// Trace-one positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_hermitian(STRUCTURE_TOL) {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > EQUALITY_TOL {
            return Err(Error::domain(format!("density matrix has trace {tr}")));
        }
        if !op.is_positive(STRUCTURE_TOL) {
            return Err(Error::domain("density matrix has a negative eigenvalue"));
        }
        Ok(DensityMatrix(op))
    }

    /// `|ψ⟩⟨ψ|` of a normalized state.
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        if !state.is_normalized() {
            return Err(Error::domain(format!(
                "pure state has norm {}, expected 1",
                state.norm()
            )));
        }
        Ok(DensityMatrix(Operator::outer(state, state)?))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    /// `tr(ρ Π)` with `effect` lifted onto the density matrix's layout.
    pub fn trace_rule(&self, effect: &Operator) -> Result<f64> {
        let labels: Vec<&str> = effect.layout().labels().collect();
        let full = embed(effect, &labels, self.0.layout())?;
        Ok(self.0.mul(&full)?.trace().re)
    }
}
