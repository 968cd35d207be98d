//! Reduced states, ideal projective measurement of the internal level and
//! scalar observables of single modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, Factor, HybridSpace, Level, ModeSpace, StateVector};

/// Outcome probabilities below this are treated as impossible.
const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub outcome: Level,
    pub probability: f64,
    /// Normalized state of the vibrational modes after the outcome.
    pub post_state: StateVector,
}

/// Splits each flat index into (kept index, traced index).
fn split_indices(space: &HybridSpace, keep: &[Factor]) -> Result<(HybridSpace, Vec<(usize, usize)>, usize)> {
    let kept = space.subspace(keep)?;
    let factors = space.factors();
    let dims = space.dims();
    let kept_mask: Vec<bool> = factors.iter().map(|f| keep.contains(f)).collect();
    let traced_dim: usize = dims
        .iter()
        .zip(&kept_mask)
        .filter(|(_, &k)| !k)
        .map(|(d, _)| d)
        .product();
    let map = (0..space.total_dim())
        .map(|i| {
            let coords = space.coords(i);
            let (mut k, mut t) = (0, 0);
            for ((&c, &d), &keep) in coords.iter().zip(&dims).zip(&kept_mask) {
                if keep {
                    k = k * d + c;
                } else {
                    t = t * d + c;
                }
            }
            (k, t)
        })
        .collect();
    Ok((kept, map, traced_dim))
}

/// Partial trace of a pure state over every factor not in `keep`.
pub fn reduce(state: &StateVector, keep: &[Factor]) -> Result<DensityOperator> {
    let (kept, map, traced_dim) = split_indices(state.space(), keep)?;
    let mut m = DMatrix::zeros(kept.total_dim(), traced_dim);
    for (&amp, &(k, t)) in state.amplitudes().iter().zip(&map) {
        m[(k, t)] = amp;
    }
    DensityOperator::new(kept, &m * m.adjoint())
}

/// Partial trace of a density operator over every factor not in `keep`.
pub fn reduce_density(rho: &DensityOperator, keep: &[Factor]) -> Result<DensityOperator> {
    let (kept, map, _) = split_indices(rho.space(), keep)?;
    let d = kept.total_dim();
    let mut out = DMatrix::zeros(d, d);
    let src = rho.matrix();
    for (i, &(ki, ti)) in map.iter().enumerate() {
        for (j, &(kj, tj)) in map.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += src[(i, j)];
            }
        }
    }
    DensityOperator::new(kept, out)
}

fn mode_factors(space: &HybridSpace) -> Vec<Factor> {
    space.modes().iter().map(|m| Factor::Mode(m.label())).collect()
}

/// Ideal projection of the internal level onto `level`.
pub fn project_internal(state: &StateVector, level: Level) -> Result<MeasurementRecord> {
    let space = state.space();
    let internal = space
        .internal()
        .ok_or_else(|| Error::InvalidSpace("state has no internal factor".into()))?;
    let li = internal
        .index_of(level)
        .ok_or_else(|| Error::InvalidSpace(format!("internal space has no level {}", level.as_char())))?;
    let d_int = internal.dim();
    let vib: DVector<C64> = DVector::from_iterator(
        space.total_dim() / d_int,
        state.amplitudes().iter().skip(li).step_by(d_int).copied(),
    );
    let probability = vib.norm_squared() / state.norm().powi(2);
    if probability < ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { level: level.as_char() });
    }
    let vib_space = space.subspace(&mode_factors(space))?;
    let post_state = StateVector::new(vib_space, vib)?.normalized()?;
    Ok(MeasurementRecord {
        outcome: level,
        probability: probability.min(1.0),
        post_state,
    })
}

fn level_population(state: &StateVector, level: Level) -> Result<f64> {
    let internal = state
        .space()
        .internal()
        .ok_or_else(|| Error::InvalidSpace("state has no internal factor".into()))?;
    let li = internal
        .index_of(level)
        .ok_or_else(|| Error::InvalidSpace(format!("internal space has no level {}", level.as_char())))?;
    Ok(state
        .amplitudes()
        .iter()
        .skip(li)
        .step_by(internal.dim())
        .map(|a| a.norm_sqr())
        .sum())
}

/// `P_a − P_b`.
pub fn atomic_inversion(state: &StateVector) -> Result<f64> {
    Ok(level_population(state, Level::A)? - level_population(state, Level::B)?)
}

fn single_mode(rho: &DensityOperator) -> Result<ModeSpace> {
    match (rho.space().modes(), rho.space().internal()) {
        ([m], None) => Ok(*m),
        _ => Err(Error::InvalidSpace("expected a single-mode density operator".into())),
    }
}

/// Fock-basis occupation probabilities.
pub fn number_distribution(rho: &DensityOperator) -> Result<Vec<f64>> {
    single_mode(rho)?;
    Ok(rho.matrix().diagonal().iter().map(|v| v.re).collect())
}

/// `(⟨â⟩, ⟨â²⟩, ⟨â†â⟩)` from the matrix elements, exact in the truncated space.
fn ladder_moments(rho: &DensityOperator) -> Result<(C64, C64, f64)> {
    let d = single_mode(rho)?.dim();
    let m = rho.matrix();
    let (mut a1, mut a2, mut n) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0);
    for k in 0..d {
        n += k as f64 * m[(k, k)].re;
        if k + 1 < d {
            // Tr[ρ â] = Σ ρ[k+1,k] √(k+1)
            a1 += m[(k + 1, k)] * ((k + 1) as f64).sqrt();
        }
        if k + 2 < d {
            a2 += m[(k + 2, k)] * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    Ok((a1, a2, n))
}

/// Variance of `X_θ = (â e^{−iθ} + â† e^{iθ})/√2`; the vacuum gives ½.
pub fn quadrature_variance(rho: &DensityOperator, theta: f64) -> Result<f64> {
    let (a1, a2, n) = ladder_moments(rho)?;
    let rot = C64::from_polar(1.0, -theta);
    let mean = (a1 * rot).re * std::f64::consts::SQRT_2;
    let second = ((a2 * rot * rot).re * 2.0 + 2.0 * n + 1.0) / 2.0;
    Ok(second - mean * mean)
}

/// Minimum quadrature variance over `θ` and the angle attaining it.
pub fn optimal_quadrature(rho: &DensityOperator) -> Result<(f64, f64)> {
    let (a1, a2, n) = ladder_moments(rho)?;
    let c2 = a2 - a1 * a1;
    let cn = n - a1.norm_sqr();
    let variance = cn + 0.5 - c2.norm();
    let theta = (c2.arg() - std::f64::consts::PI) / 2.0;
    Ok((theta, variance))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityOperator) -> f64 {
    rho.matrix().iter().map(|v| v.norm_sqr()).sum()
}

/// `⟨t|ρ|t⟩`.
pub fn fidelity_with_pure(rho: &DensityOperator, target: &StateVector) -> Result<f64> {
    if rho.space() != target.space() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: target.space().total_dim(),
        });
    }
    let t = target.amplitudes();
    Ok((t.adjoint() * rho.matrix() * t)[(0, 0)].re.clamp(0.0, 1.0))
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()).map(|v| v * 0.5);
    let eig = h.symmetric_eigen();
    let roots = eig.eigenvalues.map(|e| C64::new(e.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn uhlmann_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.space() != sigma.space() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let s = psd_sqrt(rho.matrix());
    let inner = psd_sqrt(&(&s * sigma.matrix() * &s));
    Ok(inner.trace().re.powi(2).clamp(0.0, 1.0))
}
