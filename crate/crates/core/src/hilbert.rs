//! Truncated Fock spaces, the internal-level factor, composite spaces and the
//! elementary states and operators living on them.
//!
//! Composite spaces are always ordered `x ⊗ y ⊗ internal` (any factor may be
//! absent). A basis state with per-factor indices `(i_0, i_1, …, i_{k-1})`
//! and factor dimensions `(d_0, …, d_{k-1})` sits at the row-major position
//! `((i_0·d_1 + i_1)·d_2 + i_2)…`; the last factor varies fastest.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{unitarity_defect, OperatorMatrix};

/// Default truncation tolerance for coherent states and displacements.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeLabel {
    X,
    Y,
}

impl ModeLabel {
    pub fn as_char(self) -> char {
        match self {
            ModeLabel::X => 'x',
            ModeLabel::Y => 'y',
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    A,
    B,
    C,
}

impl Level {
    pub fn as_char(self) -> char {
        match self {
            Level::A => 'a',
            Level::B => 'b',
            Level::C => 'c',
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        match s.trim() {
            "a" | "A" => Some(Level::A),
            "b" | "B" => Some(Level::B),
            "c" | "C" => Some(Level::C),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeSpace {
    dim: usize,
    label: ModeLabel,
}

impl ModeSpace {
    pub fn new(dim: usize, label: ModeLabel) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace(format!("mode {label} needs dim >= 1")));
        }
        Ok(Self { dim, label })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> ModeLabel {
        self.label
    }
}

/// Internal electronic levels taking part in the dynamics. The auxiliary
/// fluorescence level used for read-out never evolves and is not part of
/// the Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InternalSpace {
    levels: Vec<Level>,
}

impl InternalSpace {
    pub fn new(levels: &[Level]) -> Result<Self> {
        if !(2..=3).contains(&levels.len()) {
            return Err(Error::InvalidSpace(format!(
                "internal space needs 2 or 3 levels, got {}",
                levels.len()
            )));
        }
        let mut sorted = levels.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != levels.len() {
            return Err(Error::InvalidSpace("duplicate internal level".into()));
        }
        Ok(Self {
            levels: levels.to_vec(),
        })
    }

    pub fn ab() -> Self {
        Self {
            levels: vec![Level::A, Level::B],
        }
    }

    pub fn abc() -> Self {
        Self {
            levels: vec![Level::A, Level::B, Level::C],
        }
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn index_of(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }
}

/// One tensor factor of a [`HybridSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Mode(ModeLabel),
    Internal,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Mode(l) => write!(f, "{l}"),
            Factor::Internal => write!(f, "internal"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridSpace {
    modes: Vec<ModeSpace>,
    internal: Option<InternalSpace>,
}

impl HybridSpace {
    pub fn new(modes: Vec<ModeSpace>, internal: Option<InternalSpace>) -> Result<Self> {
        if modes.is_empty() && internal.is_none() {
            return Err(Error::InvalidSpace("empty composite space".into()));
        }
        if modes.windows(2).any(|w| w[0].label >= w[1].label) {
            return Err(Error::InvalidSpace(
                "mode factors must be unique and ordered x before y".into(),
            ));
        }
        Ok(Self { modes, internal })
    }

    pub fn single_mode(space: ModeSpace) -> Self {
        Self {
            modes: vec![space],
            internal: None,
        }
    }

    pub fn two_mode(dim_x: usize, dim_y: usize) -> Result<Self> {
        Self::new(
            vec![
                ModeSpace::new(dim_x, ModeLabel::X)?,
                ModeSpace::new(dim_y, ModeLabel::Y)?,
            ],
            None,
        )
    }

    pub fn two_mode_internal(dim_x: usize, dim_y: usize, internal: InternalSpace) -> Result<Self> {
        Self::new(
            vec![
                ModeSpace::new(dim_x, ModeLabel::X)?,
                ModeSpace::new(dim_y, ModeLabel::Y)?,
            ],
            Some(internal),
        )
    }

    pub fn internal_only(internal: InternalSpace) -> Self {
        Self {
            modes: Vec::new(),
            internal: Some(internal),
        }
    }

    pub fn modes(&self) -> &[ModeSpace] {
        &self.modes
    }

    pub fn internal(&self) -> Option<&InternalSpace> {
        self.internal.as_ref()
    }

    pub fn mode(&self, label: ModeLabel) -> Option<&ModeSpace> {
        self.modes.iter().find(|m| m.label == label)
    }

    pub fn factors(&self) -> Vec<Factor> {
        let mut f: Vec<Factor> = self.modes.iter().map(|m| Factor::Mode(m.label)).collect();
        if self.internal.is_some() {
            f.push(Factor::Internal);
        }
        f
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.modes.iter().map(|m| m.dim).collect();
        if let Some(int) = &self.internal {
            d.push(int.dim());
        }
        d
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn factor_position(&self, factor: Factor) -> Option<usize> {
        self.factors().iter().position(|&f| f == factor)
    }

    pub fn require_factor(&self, factor: Factor) -> Result<usize> {
        self.factor_position(factor)
            .ok_or_else(|| Error::InvalidSpace(format!("space has no {factor} factor")))
    }

    /// Flat index of a basis state given one index per factor.
    pub fn index(&self, coords: &[usize]) -> usize {
        let dims = self.dims();
        assert_eq!(coords.len(), dims.len(), "one coordinate per factor");
        coords.iter().zip(&dims).fold(0, |acc, (&c, &d)| {
            assert!(c < d, "coordinate {c} outside factor dim {d}");
            acc * d + c
        })
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for (slot, &d) in out.iter_mut().zip(&dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Space formed by the kept factors, in canonical order.
    pub fn subspace(&self, keep: &[Factor]) -> Result<HybridSpace> {
        for &f in keep {
            self.require_factor(f)?;
        }
        let modes = self
            .modes
            .iter()
            .copied()
            .filter(|m| keep.contains(&Factor::Mode(m.label)))
            .collect();
        let internal = if keep.contains(&Factor::Internal) {
            self.internal.clone()
        } else {
            None
        };
        HybridSpace::new(modes, internal)
    }

    /// Lifts an operator on one factor to the full space.
    pub fn embed(&self, factor: Factor, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        let pos = self.require_factor(factor)?;
        let dims = self.dims();
        if op.dim() != dims[pos] {
            return Err(Error::DimensionMismatch {
                expected: dims[pos],
                found: op.dim(),
            });
        }
        let left: usize = dims[..pos].iter().product();
        let right: usize = dims[pos + 1..].iter().product();
        Ok(OperatorMatrix::identity(left)
            .kron(op)
            .kron(&OperatorMatrix::identity(right)))
    }

    pub fn annihilator(&self, label: ModeLabel) -> Result<OperatorMatrix> {
        let mode = self
            .mode(label)
            .ok_or_else(|| Error::InvalidSpace(format!("space has no mode {label}")))?;
        self.embed(Factor::Mode(label), &ladder_ops(mode).0)
    }

    pub fn number_operator(&self, label: ModeLabel) -> Result<OperatorMatrix> {
        let mode = self
            .mode(label)
            .ok_or_else(|| Error::InvalidSpace(format!("space has no mode {label}")))?;
        self.embed(Factor::Mode(label), &number_operator(mode))
    }

    /// `|to⟩⟨from|` on the internal factor, lifted to the full space.
    pub fn transition(&self, to: Level, from: Level) -> Result<OperatorMatrix> {
        let int = self
            .internal
            .as_ref()
            .ok_or_else(|| Error::InvalidSpace("space has no internal factor".into()))?;
        let missing = |l: Level| Error::InvalidSpace(format!("internal level {l} not present"));
        let r = int.index_of(to).ok_or_else(|| missing(to))?;
        let c = int.index_of(from).ok_or_else(|| missing(from))?;
        let op = OperatorMatrix::from_triplets(int.dim(), [(r, c, C64::new(1.0, 0.0))]);
        self.embed(Factor::Internal, &op)
    }

    pub fn projector(&self, level: Level) -> Result<OperatorMatrix> {
        self.transition(level, level)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HybridSpace,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(space: HybridSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: &HybridSpace, coords: &[usize]) -> Self {
        let mut amps = DVector::zeros(space.total_dim());
        amps[space.index(coords)] = C64::new(1.0, 0.0);
        Self {
            space: space.clone(),
            amplitudes: amps,
        }
    }

    pub fn space(&self) -> &HybridSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, coords: &[usize]) -> C64 {
        self.amplitudes[self.space.index(coords)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero or non-finite vector".into()));
        }
        self.amplitudes.unscale_mut(n);
        Ok(self)
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_same_space(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        Ok(self.inner(target)?.norm_sqr())
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Result<C64> {
        if op.dim() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: op.dim(),
            });
        }
        Ok(op.expectation(&self.amplitudes))
    }

    pub fn with_amplitudes(&self, amplitudes: DVector<C64>) -> Result<Self> {
        Self::new(self.space.clone(), amplitudes)
    }

    /// Linear combination `Σ c_k |ψ_k⟩`, normalized.
    pub fn superpose(terms: &[(C64, &StateVector)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParams("empty superposition".into()))?;
        let mut amps = DVector::zeros(first.amplitudes.len());
        for (c, s) in terms {
            first.check_same_space(s)?;
            amps += s.amplitudes.map(|a| a * *c);
        }
        Self::new(first.space.clone(), amps)?.normalized()
    }

    pub(crate) fn check_same_space(&self, other: &StateVector) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.total_dim(),
                found: other.space.total_dim(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    space: HybridSpace,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(space: HybridSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let a = &state.amplitudes;
        Self {
            space: state.space.clone(),
            matrix: a * a.adjoint(),
        }
    }

    /// Convex combination `Σ w_k ρ_k`.
    pub fn mixture(terms: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParams("empty mixture".into()))?;
        let mut m = DMatrix::zeros(first.matrix.nrows(), first.matrix.ncols());
        for (w, rho) in terms {
            if rho.space != first.space {
                return Err(Error::DimensionMismatch {
                    expected: first.space.total_dim(),
                    found: rho.space.total_dim(),
                });
            }
            m += rho.matrix.map(|v| v * *w);
        }
        Self::new(first.space.clone(), m)
    }

    pub fn space(&self) -> &HybridSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        crate::operator::dense_max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()).map(|v| v * 0.5);
        h.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace and positive semidefinite within tolerance.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
            && (self.trace() - C64::new(1.0, 0.0)).norm() < tol
            && self.min_eigenvalue() > -1e-8
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(op.triplets().map(|(r, c, v)| v * self.matrix[(c, r)]).sum())
    }
}

pub fn fock_state(space: &ModeSpace, n: usize) -> Result<StateVector> {
    if n >= space.dim {
        return Err(Error::FockRange { n, dim: space.dim });
    }
    Ok(StateVector::basis(&HybridSpace::single_mode(*space), &[n]))
}

/// Single-factor state for an internal level.
pub fn level_state(internal: &InternalSpace, level: Level) -> Result<StateVector> {
    let i = internal
        .index_of(level)
        .ok_or_else(|| Error::InvalidSpace(format!("internal level {level} not present")))?;
    Ok(StateVector::basis(&HybridSpace::internal_only(internal.clone()), &[i]))
}

/// Poisson probability mass above the truncation, `Σ_{k ≥ dim} e^{-μ} μ^k / k!`
/// with `μ = |α|²`, summed directly from the tail so it stays accurate when tiny.
pub fn coherent_tail_mass(alpha: C64, dim: usize) -> f64 {
    let mu = alpha.norm_sqr();
    if mu == 0.0 {
        return if dim == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=dim).map(|k| (k as f64).ln()).sum();
    let mut term = (-mu + dim as f64 * mu.ln() - ln_fact).exp();
    let mut total = 0.0;
    let mut k = dim;
    loop {
        total += term;
        k += 1;
        term *= mu / k as f64;
        if (k as f64 > mu && term < total * 1e-17) || term == 0.0 {
            break;
        }
    }
    total.min(1.0)
}

pub fn coherent_state(space: &ModeSpace, alpha: C64) -> Result<StateVector> {
    coherent_state_with_tolerance(space, alpha, DEFAULT_TRUNCATION_TOL)
}

/// `|α⟩` truncated to `space` and renormalized; the vacuum amplitude is real
/// and positive.
pub fn coherent_state_with_tolerance(space: &ModeSpace, alpha: C64, tol: f64) -> Result<StateVector> {
    let tail = coherent_tail_mass(alpha, space.dim);
    if tail > tol {
        let mut need = space.dim;
        while coherent_tail_mass(alpha, need) > tol {
            need += 1;
        }
        return Err(Error::Truncation {
            what: format!("coherent state alpha = {alpha} in mode {}", space.label),
            leakage: tail,
            tolerance: tol,
            required_dim: Some(need),
        });
    }
    let mut amps = DVector::zeros(space.dim);
    amps[0] = C64::new(1.0, 0.0);
    for n in 1..space.dim {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    StateVector::new(HybridSpace::single_mode(*space), amps)?.normalized()
}

/// `(â, â†)` with `â|n⟩ = √n |n−1⟩`.
pub fn ladder_ops(space: &ModeSpace) -> (OperatorMatrix, OperatorMatrix) {
    let a = OperatorMatrix::from_triplets(
        space.dim,
        (1..space.dim).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    );
    let adag = a.adjoint();
    (a, adag)
}

pub fn number_operator(space: &ModeSpace) -> OperatorMatrix {
    OperatorMatrix::from_real_diagonal(&(0..space.dim).map(|n| n as f64).collect::<Vec<_>>())
}

/// Fock-basis parity `(-1)^n̂`.
pub fn parity_operator(space: &ModeSpace) -> OperatorMatrix {
    OperatorMatrix::from_real_diagonal(
        &(0..space.dim)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 })
            .collect::<Vec<_>>(),
    )
}

pub fn displacement_operator(space: &ModeSpace, zeta: C64) -> Result<OperatorMatrix> {
    displacement_operator_with_tolerance(space, zeta, DEFAULT_TRUNCATION_TOL)
}

/// `D̂(ζ) = exp(ζâ† − ζ*â)` by exponentiating the truncated generator.
///
/// The truncation check requires the displaced vacuum to keep less than
/// `tol` of its exact Poisson weight above the cutoff; with that satisfied
/// the matrix agrees with the untruncated operator on the low-lying block.
pub fn displacement_operator_with_tolerance(space: &ModeSpace, zeta: C64, tol: f64) -> Result<OperatorMatrix> {
    let tail = coherent_tail_mass(zeta, space.dim);
    if tail > tol {
        return Err(Error::Truncation {
            what: format!("displacement zeta = {zeta} in mode {}", space.label),
            leakage: tail,
            tolerance: tol,
            required_dim: None,
        });
    }
    let (a, adag) = ladder_ops(space);
    let generator = &adag.scale(zeta) - &a.scale(zeta.conj());
    let d = generator.to_dense().exp();
    let defect = unitarity_defect(&d);
    if defect > tol {
        return Err(Error::Truncation {
            what: format!("displacement zeta = {zeta}: unitarity defect"),
            leakage: defect,
            tolerance: tol,
            required_dim: None,
        });
    }
    Ok(OperatorMatrix::from_dense(&d))
}

/// Kronecker product of single- or multi-factor states. The factors must
/// concatenate into canonical `x ⊗ y ⊗ internal` order.
pub fn compose(states: &[&StateVector]) -> Result<StateVector> {
    let mut modes = Vec::new();
    let mut internal: Option<InternalSpace> = None;
    for s in states {
        if internal.is_some() {
            return Err(Error::InvalidSpace("internal factor must come last".into()));
        }
        modes.extend_from_slice(&s.space.modes);
        internal = s.space.internal.clone();
    }
    let space = HybridSpace::new(modes, internal)?;
    let mut amps = DVector::from_element(1, C64::new(1.0, 0.0));
    for s in states {
        amps = amps.kronecker(&s.amplitudes);
    }
    StateVector::new(space, amps)
}

/// Probability in the top two Fock levels of `mode`.
pub fn leakage(state: &StateVector, mode: ModeLabel) -> Result<f64> {
    let pos = state.space.require_factor(Factor::Mode(mode))?;
    let dims = state.space.dims();
    let d = dims[pos];
    let inner: usize = dims[pos + 1..].iter().product();
    let lowest_top = d.saturating_sub(2);
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| (i / inner) % d >= lowest_top)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Largest leakage over all modes of the state's space.
pub fn max_leakage(state: &StateVector) -> (Option<ModeLabel>, f64) {
    state
        .space
        .modes
        .iter()
        .map(|m| (Some(m.label), leakage(state, m.label).unwrap_or(0.0)))
        .fold((None, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::dense_max_abs;

    fn mode(dim: usize) -> ModeSpace {
        ModeSpace::new(dim, ModeLabel::X).unwrap()
    }

    /// Independent Poisson mean: `Σ k e^{-μ} μ^k / k!` accumulated term by term.
    fn poisson_pmf(mu: f64, k: usize) -> f64 {
        let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
        (-mu + k as f64 * mu.ln() - ln_fact).exp()
    }

    #[test]
    fn fock_states() {
        let v = fock_state(&mode(10), 0).unwrap();
        assert_eq!(v.amplitudes()[0], C64::new(1.0, 0.0));
        let one = fock_state(&mode(10), 1).unwrap();
        assert_eq!(one.amplitudes()[1], C64::new(1.0, 0.0));
        assert_eq!(one.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        assert!(matches!(
            fock_state(&mode(3), 5),
            Err(Error::FockRange { n: 5, dim: 3 })
        ));
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let s = coherent_state(&mode(8), C64::new(0.0, 0.0)).unwrap();
        assert_eq!(s, fock_state(&mode(8), 0).unwrap());
    }

    #[test]
    fn coherent_mean_matches_poisson_series() {
        let s = coherent_state(&mode(30), C64::new(2.0, 0.0)).unwrap();
        let n = number_operator(&mode(30));
        let mean = s.expectation(&n).unwrap().re;
        let oracle: f64 = (0..200).map(|k| k as f64 * poisson_pmf(4.0, k)).sum();
        assert!((mean - oracle).abs() < 1e-6, "{mean} vs {oracle}");
        assert!((mean - 4.0).abs() < 1e-6);
    }

    #[test]
    fn coherent_truncation_error_names_dimension() {
        let oracle_tail: f64 = (10..300).map(|k| poisson_pmf(9.0, k)).sum();
        assert!(oracle_tail > 1e-8);
        match coherent_state(&mode(10), C64::new(3.0, 0.0)) {
            Err(Error::Truncation {
                leakage,
                required_dim: Some(need),
                ..
            }) => {
                assert!((leakage - oracle_tail).abs() < 1e-12 * oracle_tail.max(1.0));
                assert!(need > 10);
                assert!(coherent_tail_mass(C64::new(3.0, 0.0), need) <= 1e-8);
                assert!(coherent_tail_mass(C64::new(3.0, 0.0), need - 1) > 1e-8);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn coherent_vacuum_amplitude_is_real_positive() {
        let s = coherent_state(&mode(30), C64::new(-1.0, 1.5)).unwrap();
        assert!(s.amplitudes()[0].im == 0.0 && s.amplitudes()[0].re > 0.0);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_is_annihilator_eigenstate() {
        let m = mode(40);
        let alpha = C64::new(1.2, -0.7);
        let s = coherent_state(&m, alpha).unwrap();
        let (a, _) = ladder_ops(&m);
        let residual = (a.apply(s.amplitudes()) - s.amplitudes() * alpha).norm();
        assert!(residual < 1e-6, "{residual}");
    }

    #[test]
    fn ladder_definitions() {
        let (a, adag) = ladder_ops(&mode(2));
        let dense = a.to_dense();
        assert_eq!(dense[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(dense.iter().filter(|v| v.norm() > 0.0).count(), 1);
        let num = adag.matmul(&a);
        assert_eq!(num.get(1, 1), C64::new(1.0, 0.0));
    }

    #[test]
    fn commutator_is_identity_except_last_level() {
        let dim = 7;
        let (a, adag) = ladder_ops(&mode(dim));
        // direct dense product oracle
        let (ad, cd) = (a.to_dense(), adag.to_dense());
        let comm = &ad * &cd - &cd * &ad;
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i != j {
                    0.0
                } else if i + 1 < dim {
                    1.0
                } else {
                    -((dim - 1) as f64)
                };
                assert!((comm[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        assert_eq!(a.commutator(&adag).to_dense(), comm);
    }

    #[test]
    fn displacement_identity_and_inverse() {
        let m = mode(20);
        let d0 = displacement_operator(&m, C64::new(0.0, 0.0)).unwrap();
        assert!(dense_max_abs(&(d0.to_dense() - OperatorMatrix::identity(20).to_dense())) < 1e-14);
        let z = C64::new(0.3, -0.2);
        let d = displacement_operator(&m, z).unwrap();
        let dinv = displacement_operator(&m, -z).unwrap();
        let prod = d.matmul(&dinv).to_dense();
        assert!(dense_max_abs(&(prod - OperatorMatrix::identity(20).to_dense())) < 1e-8);
    }

    #[test]
    fn displacement_vacuum_overlap_closed_form() {
        let eps = 0.1;
        let d = displacement_operator(&mode(20), C64::new(0.0, eps)).unwrap();
        let overlap = d.get(0, 0).norm();
        assert!((overlap - (-eps * eps / 2.0).exp()).abs() < 1e-8);
    }

    #[test]
    fn displacement_matches_eigendecomposition_route() {
        // exp(ζa† − ζ*a) = exp(-i K) with Hermitian K = i(ζa† − ζ*a)
        let m = mode(24);
        let z = C64::new(0.4, 0.25);
        let (a, adag) = ladder_ops(&m);
        let k = (&adag.scale(z) - &a.scale(z.conj())).scale(C64::new(0.0, 1.0));
        let eig = crate::operator::BlockEigen::new(&k);
        let via_eig = eig.dense_fn(|e| C64::new(0.0, -e).exp());
        let d = displacement_operator(&m, z).unwrap().to_dense();
        assert!(dense_max_abs(&(via_eig - d)) < 1e-12);
    }

    #[test]
    fn displacement_unitary_in_checked_range() {
        for &(re, im) in &[(0.5, 0.0), (0.0, 0.5), (0.35, -0.35)] {
            let d = displacement_operator(&mode(20), C64::new(re, im)).unwrap();
            assert!(unitarity_defect(&d.to_dense()) < 1e-8);
        }
        assert!(matches!(
            displacement_operator(&mode(4), C64::new(2.0, 0.0)),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn compose_places_basis_product() {
        let sx = fock_state(&ModeSpace::new(3, ModeLabel::X).unwrap(), 1).unwrap();
        let sy = fock_state(&ModeSpace::new(4, ModeLabel::Y).unwrap(), 0).unwrap();
        let sa = level_state(&InternalSpace::ab(), Level::A).unwrap();
        let psi = compose(&[&sx, &sy, &sa]).unwrap();
        assert_eq!(psi.space().dims(), vec![3, 4, 2]);
        assert_eq!(psi.amplitude(&[1, 0, 0]), C64::new(1.0, 0.0));
        assert_eq!(psi.space().index(&[1, 0, 0]), (1 * 4 + 0) * 2 + 0);
        assert!(compose(&[&sa, &sx]).is_err());
        assert!(compose(&[&sy, &sx]).is_err());
    }

    #[test]
    fn coords_invert_index() {
        let space = HybridSpace::two_mode_internal(3, 5, InternalSpace::abc()).unwrap();
        for i in 0..space.total_dim() {
            assert_eq!(space.index(&space.coords(i)), i);
        }
    }

    #[test]
    fn leakage_monitor() {
        let m = mode(20);
        assert_eq!(leakage(&fock_state(&m, 0).unwrap(), ModeLabel::X).unwrap(), 0.0);
        assert_eq!(leakage(&fock_state(&m, 19).unwrap(), ModeLabel::X).unwrap(), 1.0);
        let c = coherent_state(&m, C64::new(1.0, 0.0)).unwrap();
        let tail: f64 = (18..20).map(|k| poisson_pmf(1.0, k)).sum();
        let l = leakage(&c, ModeLabel::X).unwrap();
        assert!(l < 1e-12 && (l - tail).abs() < 1e-15, "{l} {tail}");
        assert!(leakage(&c, ModeLabel::Y).is_err());
    }

    #[test]
    fn embedded_operators_act_on_their_factor() {
        let space = HybridSpace::two_mode_internal(3, 3, InternalSpace::ab()).unwrap();
        let psi = StateVector::basis(&space, &[2, 1, 1]);
        let nx = space.number_operator(ModeLabel::X).unwrap();
        let ny = space.number_operator(ModeLabel::Y).unwrap();
        assert_eq!(psi.expectation(&nx).unwrap().re, 2.0);
        assert_eq!(psi.expectation(&ny).unwrap().re, 1.0);
        assert_eq!(psi.expectation(&space.projector(Level::B).unwrap()).unwrap().re, 1.0);
        assert!(space.projector(Level::C).is_err());
    }
}
