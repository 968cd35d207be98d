//! Wigner functions of single modes and the diagnostics read off them:
//! negativity, k-fold rotational symmetry, radial marginals and the
//! recurrence of reduced states along a trajectory.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::hilbert::{DensityOperator, Factor, ModeLabel};
use crate::measurement::reduce;

pub const DEFAULT_GRID_POINTS: usize = 101;

/// Uniform rectangular grid in the complex `α` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl GridSpec {
    pub fn square(half_extent: f64, points: usize) -> Self {
        Self {
            re_min: -half_extent,
            re_max: half_extent,
            im_min: -half_extent,
            im_max: half_extent,
            n_re: points,
            n_im: points,
        }
    }

    /// 101×101 square of half-width `max(3, 2√⟨n̂⟩ + 3)`.
    pub fn auto(rho: &DensityOperator) -> Result<Self> {
        let mean_n: f64 = crate::measurement::number_distribution(rho)?
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum();
        Ok(Self::square(
            (2.0 * mean_n.max(0.0).sqrt() + 3.0).max(3.0),
            DEFAULT_GRID_POINTS,
        ))
    }

    fn validate(&self) -> Result<()> {
        if self.n_re < 2 || self.n_im < 2 || !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::InvalidParams(format!("degenerate Wigner grid {self:?}")));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// `values[(i, j)] = W(re_axis[i] + i·im_axis[j])`.
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    fn step(axis: &[f64]) -> f64 {
        axis[1] - axis[0]
    }

    pub fn cell_area(&self) -> f64 {
        Self::step(&self.re_axis) * Self::step(&self.im_axis)
    }

    /// Riemann sum `Σ W ΔreΔim`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    /// `∫ W d(Im α)` as a function of `Re α`.
    pub fn marginal_re(&self) -> Vec<f64> {
        let d = Self::step(&self.im_axis);
        self.values.row_iter().map(|r| r.sum() * d).collect()
    }

    fn is_centered(&self) -> bool {
        let sym = |a: &[f64]| {
            let tol = 1e-9 * Self::step(a).abs();
            a.iter().zip(a.iter().rev()).all(|(u, v)| (u + v).abs() <= tol)
        };
        sym(&self.re_axis) && sym(&self.im_axis)
    }

    /// Bilinear interpolation; `None` outside the interior.
    fn sample(&self, re: f64, im: f64) -> Option<f64> {
        let fi = (re - self.re_axis[0]) / Self::step(&self.re_axis);
        let fj = (im - self.im_axis[0]) / Self::step(&self.im_axis);
        let (nr, ni) = (self.re_axis.len(), self.im_axis.len());
        if !(fi >= 0.0 && fj >= 0.0 && fi <= (nr - 1) as f64 && fj <= (ni - 1) as f64) {
            return None;
        }
        let (i0, j0) = ((fi.floor() as usize).min(nr - 2), (fj.floor() as usize).min(ni - 2));
        let (u, v) = (fi - i0 as f64, fj - j0 as f64);
        let w = &self.values;
        Some(
            (1.0 - u) * (1.0 - v) * w[(i0, j0)]
                + u * (1.0 - v) * w[(i0 + 1, j0)]
                + (1.0 - u) * v * w[(i0, j0 + 1)]
                + u * v * w[(i0 + 1, j0 + 1)],
        )
    }
}

fn single_mode_matrix(rho: &DensityOperator) -> Result<&DMatrix<C64>> {
    match (rho.space().modes(), rho.space().internal()) {
        ([_], None) => Ok(rho.matrix()),
        _ => Err(Error::InvalidSpace(
            "Wigner function needs a single-mode density operator".into(),
        )),
    }
}

/// `W(α) = (2/π) Tr[ρ D(α) Π D†(α)]` from the Laguerre recursion for the
/// displaced-parity matrix elements, which is exact for the truncated `ρ`.
pub fn wigner_point(rho: &DMatrix<C64>, alpha: C64) -> f64 {
    let dim = rho.nrows();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    w[0] = C64::new((-2.0 * alpha.norm_sqr()).exp() / PI, 0.0);
    let mut acc = rho[(0, 0)].re * w[0].re;
    for n in 1..dim {
        w[n] = w[n - 1] * alpha * 2.0 / (n as f64).sqrt();
        acc += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for m in 1..dim {
        let sm = (m as f64).sqrt();
        let mut temp = w[m];
        w[m] = (alpha.conj() * 2.0 * temp - sm * w[m - 1]) / sm;
        acc += (rho[(m, m)] * w[m]).re;
        for n in m + 1..dim {
            let next = (alpha * 2.0 * w[n - 1] - sm * temp) / (n as f64).sqrt();
            temp = w[n];
            w[n] = next;
            acc += 2.0 * (rho[(m, n)] * w[n]).re;
        }
    }
    2.0 * acc
}

pub fn wigner(rho: &DensityOperator, grid: &GridSpec) -> Result<WignerGrid> {
    grid.validate()?;
    let m = single_mode_matrix(rho)?;
    let defect = rho.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian { defect });
    }
    let re_axis = GridSpec::axis(grid.re_min, grid.re_max, grid.n_re);
    let im_axis = GridSpec::axis(grid.im_min, grid.im_max, grid.n_im);
    let rows: Vec<Vec<f64>> = re_axis
        .par_iter()
        .map(|&re| im_axis.iter().map(|&im| wigner_point(m, C64::new(re, im))).collect())
        .collect();
    let values = DMatrix::from_fn(re_axis.len(), im_axis.len(), |i, j| rows[i][j]);
    Ok(WignerGrid {
        re_axis,
        im_axis,
        values,
    })
}

/// `(min W, Σ_{W<0} |W| ΔreΔim)`.
pub fn negativity(w: &WignerGrid) -> (f64, f64) {
    let volume = w.values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum::<f64>() * w.cell_area();
    (w.min(), volume)
}

/// Normalized correlation between `W` and its rotation by `2π/k`, over the
/// cells whose rotated source lies strictly inside the grid.
pub fn rotational_symmetry_score(w: &WignerGrid, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParams("symmetry order must be at least 1".into()));
    }
    if !w.is_centered() {
        return Err(Error::InvalidParams(
            "symmetry score needs a grid centered at the origin".into(),
        ));
    }
    let (s, c) = (TAU / k as f64).sin_cos();
    let (nr, ni) = (w.re_axis.len(), w.im_axis.len());
    let (mut cross, mut norm_a, mut norm_b) = (0.0, 0.0, 0.0);
    for i in 1..nr - 1 {
        for j in 1..ni - 1 {
            let (x, y) = (w.re_axis[i], w.im_axis[j]);
            if let Some(rot) = w.sample(c * x + s * y, -s * x + c * y) {
                let v = w.values[(i, j)];
                cross += v * rot;
                norm_a += v * v;
                norm_b += rot * rot;
            }
        }
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Ok(0.0);
    }
    Ok((cross / (norm_a * norm_b).sqrt()).clamp(0.0, 1.0))
}

/// Radial density `∫ W r dφ` binned over `|α|`, returning bin centers and values.
pub fn radial_marginal(w: &WignerGrid, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let r_max = w
        .re_axis
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .min(w.im_axis.iter().map(|y| y.abs()).fold(0.0, f64::max));
    let width = r_max / bins as f64;
    let mut acc = vec![0.0; bins];
    for (i, &x) in w.re_axis.iter().enumerate() {
        for (j, &y) in w.im_axis.iter().enumerate() {
            let b = ((x * x + y * y).sqrt() / width) as usize;
            if b < bins {
                acc[b] += w.values[(i, j)] * w.cell_area();
            }
        }
    }
    let centers = (0..bins).map(|b| (b as f64 + 0.5) * width).collect();
    (centers, acc.into_iter().map(|v| v / width).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevivalEstimate {
    pub t_rx: f64,
    pub t_ry: f64,
}

/// `t_x = 2πβ/(λγ)`, `t_y = 2πγ/(λβ)`.
pub fn revival_estimate(beta: f64, gamma: f64, lambda: f64) -> Result<RevivalEstimate> {
    if !(beta > 0.0 && gamma > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidParams(format!(
            "revival estimate needs positive inputs, got beta={beta}, gamma={gamma}, lambda={lambda}"
        )));
    }
    Ok(RevivalEstimate {
        t_rx: TAU * beta / (lambda * gamma),
        t_ry: TAU * gamma / (lambda * beta),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RecurrenceMeasure {
    /// `Tr[ρ(0) ρ(t)]`.
    #[default]
    Overlap,
    /// `max_φ Tr[ρ(0) R(φ) ρ(t) R†(φ)]` with `R(φ) = e^{−iφn̂}`.
    RotationAligned,
}

const ALIGN_SAMPLES: usize = 720;

fn overlap(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

fn aligned_overlap(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    // Tr[a R b R†] = Σ_{mn} a[n,m] b[m,n] e^{−iφ(m−n)}; collect by m−n.
    let d = a.nrows();
    let mut by_diff = vec![C64::new(0.0, 0.0); 2 * d - 1];
    for m in 0..d {
        for n in 0..d {
            by_diff[m + d - 1 - n] += a[(n, m)] * b[(m, n)];
        }
    }
    (0..ALIGN_SAMPLES)
        .map(|s| {
            let phi = TAU * s as f64 / ALIGN_SAMPLES as f64;
            by_diff
                .iter()
                .enumerate()
                .map(|(k, v)| (v * C64::from_polar(1.0, -phi * (k as f64 - (d - 1) as f64))).re)
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Overlap of each reduced state of `mode` with the initial one.
pub fn quasidistribution_recurrence(
    traj: &Trajectory,
    mode: ModeLabel,
    measure: RecurrenceMeasure,
) -> Result<Vec<f64>> {
    let keep = [Factor::Mode(mode)];
    let Some(first) = traj.states.first() else {
        return Ok(Vec::new());
    };
    let rho0 = reduce(first, &keep)?;
    traj.states
        .iter()
        .map(|s| {
            if s.space() != first.space() {
                return Err(Error::DimensionMismatch {
                    expected: first.space().total_dim(),
                    found: s.space().total_dim(),
                });
            }
            let rho = reduce(s, &keep)?;
            Ok(match measure {
                RecurrenceMeasure::Overlap => overlap(rho0.matrix(), rho.matrix()),
                RecurrenceMeasure::RotationAligned => aligned_overlap(rho0.matrix(), rho.matrix()),
            })
        })
        .collect()
}

/// Position-quadrature density `⟨x|ρ|x⟩` for `x̂ = (â + â†)/√2`.
pub fn position_distribution(rho: &DensityOperator, xs: &[f64]) -> Result<Vec<f64>> {
    let m = single_mode_matrix(rho)?;
    let d = m.nrows();
    Ok(xs
        .iter()
        .map(|&x| {
            // normalized Hermite functions by upward recursion
            let mut psi = vec![0.0; d];
            psi[0] = PI.powf(-0.25) * (-x * x / 2.0).exp();
            if d > 1 {
                psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
            }
            for n in 2..d {
                psi[n] = ((2.0 / n as f64).sqrt() * x * psi[n - 1]) - ((n - 1) as f64 / n as f64).sqrt() * psi[n - 2];
            }
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += (m[(a, b)] * psi[a] * psi[b]).re;
                }
            }
            acc
        })
        .collect())
}
