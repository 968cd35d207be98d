//! Laser–ion Hamiltonians: the full three-level model in a rotating frame,
//! the Raman effective model with the upper level eliminated, the degenerate
//! (purely bosonic) model and the counter-rotating pair-creation variant.
//!
//! Units: ħ = 1 and every frequency is an angular rate in the same unit.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{displacement_operator, Factor, HybridSpace, InternalSpace, Level, ModeLabel, ModeSpace};
use crate::operator::OperatorMatrix;

/// Lamb–Dicke validity threshold on `ε·√n_max`.
pub const LAMB_DICKE_WARN: f64 = 0.3;
/// Minimum ratio `Δ / max(m ν_x, n ν_y)` for the dispersive regime.
pub const DISPERSIVE_RATIO: f64 = 10.0;
/// Resonance residuals are accepted below this fraction of the trap frequency.
pub const RESONANCE_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelEnergies {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Physical parameters of the two-laser, three-level ion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IonParams {
    pub nu_x: f64,
    pub nu_y: f64,
    /// Rabi frequency of the laser along x (drives a ↔ c).
    pub rabi_x: f64,
    /// Rabi frequency of the laser along y (drives b ↔ c).
    pub rabi_y: f64,
    /// Lamb–Dicke parameter, taken equal for both directions.
    pub epsilon: f64,
    /// Detuning of both lasers from the upper level.
    pub delta: f64,
    /// Sideband order of the x laser.
    pub m: u32,
    /// Sideband order of the y laser.
    pub n: u32,
    pub energies: LevelEnergies,
}

impl IonParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nu_x", self.nu_x), ("nu_y", self.nu_y), ("delta", self.delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("rabi_x", self.rabi_x),
            ("rabi_y", self.rabi_y),
            ("epsilon", self.epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// `ε·√n_max` stays below [`LAMB_DICKE_WARN`].
    pub fn lamb_dicke_ok(&self, max_occupied: usize) -> bool {
        self.epsilon * (max_occupied as f64).sqrt() <= LAMB_DICKE_WARN
    }

    pub fn dispersive_ratio(&self) -> f64 {
        let scale = (self.m as f64 * self.nu_x).max(self.n as f64 * self.nu_y);
        if scale == 0.0 {
            f64::INFINITY
        } else {
            self.delta / scale
        }
    }

    pub fn dispersive_ok(&self) -> bool {
        self.dispersive_ratio() > DISPERSIVE_RATIO
    }

    /// Generalized Stark shift prefactors `(ε^{2m}Ω_x²/(4 m!² Δ), ε^{2n}Ω_y²/(4 n!² Δ))`.
    pub fn stark_shifts(&self) -> StarkShifts {
        let fm = factorial(self.m);
        let fn_ = factorial(self.n);
        StarkShifts {
            a: self.epsilon.powi(2 * self.m as i32) * self.rabi_x.powi(2) / (4.0 * fm * fm * self.delta),
            b: self.epsilon.powi(2 * self.n as i32) * self.rabi_y.powi(2) / (4.0 * fn_ * fn_ * self.delta),
        }
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Coefficients of `−s_a â_x^m â_x†^m |a⟩⟨a| − s_b â_y^n â_y†^n |b⟩⟨b|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarkShifts {
    pub a: f64,
    pub b: f64,
}

/// Effective Raman coupling: `magnitude · phase` multiplies
/// `â_x^m â_y†^n |b⟩⟨a|` in the literal (ungauged) Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingConstant {
    pub magnitude: f64,
    pub phase: C64,
}

impl CouplingConstant {
    pub fn value(&self) -> C64 {
        self.phase * self.magnitude
    }
}

/// `λ_{mn} = ε^{m+n} Ω_x Ω_y / (4 m! n! Δ)` with phase `−(−1)^n i^{m+n}`.
pub fn coupling_constant(params: &IonParams) -> CouplingConstant {
    let (m, n) = (params.m, params.n);
    let magnitude = params.epsilon.powi((m + n) as i32) * params.rabi_x * params.rabi_y
        / (4.0 * factorial(m) * factorial(n) * params.delta);
    let i_pow = match (m + n) % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    CouplingConstant {
        magnitude,
        phase: i_pow * sign,
    }
}

/// Optical frequencies of the two lasers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserFrequencies {
    pub x: f64,
    pub y: f64,
}

impl LaserFrequencies {
    /// Frequencies that satisfy the resonance and detuning conditions
    /// exactly for the given variant.
    pub fn resonant(params: &IonParams, variant: ResonanceVariant) -> Self {
        let e = params.energies;
        Self {
            x: e.c - e.a - params.m as f64 * params.nu_x - params.delta,
            y: e.c - e.b - variant.y_sign() * params.n as f64 * params.nu_y - params.delta,
        }
    }
}

/// Which Raman resonance the lasers are tuned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResonanceVariant {
    /// `E_a + ω_x + m ν_x = E_b + ω_y + n ν_y`
    Normal,
    /// `E_a + ω_x + m ν_x = E_b + ω_y − n ν_y` (pair creation for m = n = 1)
    Counter,
}

impl ResonanceVariant {
    fn y_sign(self) -> f64 {
        match self {
            ResonanceVariant::Normal => 1.0,
            ResonanceVariant::Counter => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Required,
    Advisory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub severity: Severity,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceReport {
    pub variant: ResonanceVariant,
    pub checks: Vec<ConditionCheck>,
}

impl ResonanceReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.severity == Severity::Advisory)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Advisory)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn failures(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Required)
            .map(|c| format!("{} (residual {:.3e})", c.name, c.residual))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Checks the Raman resonance, both single-photon detunings and the
/// dispersive ratio. Never fails; inspect the report.
pub fn validate_resonance(params: &IonParams, lasers: &LaserFrequencies, variant: ResonanceVariant) -> ResonanceReport {
    let e = params.energies;
    let (m, n) = (params.m as f64, params.n as f64);
    let sy = variant.y_sign();
    let tol = RESONANCE_REL_TOL * params.nu_x.max(params.nu_y);
    let required = |name, residual: f64| ConditionCheck {
        name,
        residual,
        tolerance: tol,
        severity: Severity::Required,
        passed: residual.abs() < tol,
    };
    let raman = (e.a + lasers.x + m * params.nu_x) - (e.b + lasers.y + sy * n * params.nu_y);
    let detuning_a = (e.c - e.a) - (lasers.x + m * params.nu_x + params.delta);
    let detuning_b = (e.c - e.b) - (lasers.y + sy * n * params.nu_y + params.delta);
    let ratio = params.dispersive_ratio();
    ResonanceReport {
        variant,
        checks: vec![
            required("raman_resonance", raman),
            required("detuning_a", detuning_a),
            required("detuning_b", detuning_b),
            ConditionCheck {
                name: "dispersive",
                residual: ratio,
                tolerance: DISPERSIVE_RATIO,
                severity: Severity::Advisory,
                passed: ratio > DISPERSIVE_RATIO,
            },
        ],
    }
}

/// How the phase `−(−1)^n i^{m+n}` of the Raman coupling is handled.
///
/// `Gauged` absorbs it into the phase of `|b⟩` so the exchange term reads
/// `λ(â_x^m â_y†^n |b⟩⟨a| + h.c.)` with real positive `λ`; `Literal` keeps
/// the printed prefactor. The two are unitarily equivalent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhaseConvention {
    #[default]
    Gauged,
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianKind {
    FullRotatingFrame,
    RamanEffective,
    DegenerateEffective,
    /// Pair creation `â_x†â_y†` correlated with the internal flip
    /// `raise_from → other level`.
    CounterRotating {
        raise_from: Level,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub params: IonParams,
    pub include_stark: bool,
    pub phase: PhaseConvention,
    pub space: HybridSpace,
}

impl HamiltonianSpec {
    /// Stark terms default on, except for the counter-rotating form which
    /// has no Stark line.
    pub fn new(kind: HamiltonianKind, params: IonParams, space: HybridSpace) -> Self {
        Self {
            kind,
            params,
            include_stark: !matches!(kind, HamiltonianKind::CounterRotating { .. }),
            phase: PhaseConvention::Gauged,
            space,
        }
    }

    pub fn with_stark(mut self, on: bool) -> Self {
        self.include_stark = on;
        self
    }

    pub fn with_phase(mut self, phase: PhaseConvention) -> Self {
        self.phase = phase;
        self
    }

    fn check_kind(&self, expect: &str, ok: bool) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "spec kind {:?} passed to the {expect} builder",
                self.kind
            )))
        }
    }

    fn exchange_coefficient(&self) -> C64 {
        let g = coupling_constant(&self.params);
        match self.phase {
            PhaseConvention::Gauged => C64::new(g.magnitude, 0.0),
            PhaseConvention::Literal => g.value(),
        }
    }
}

fn require_internal(space: &HybridSpace, levels: &[Level]) -> Result<()> {
    match space.internal() {
        Some(int) if int.levels() == levels => Ok(()),
        _ => Err(Error::InvalidSpace(format!(
            "builder needs internal levels {:?}",
            levels.iter().map(|l| l.as_char()).collect::<String>()
        ))),
    }
}

fn two_modes(space: &HybridSpace) -> Result<(ModeSpace, ModeSpace)> {
    match (space.mode(ModeLabel::X), space.mode(ModeLabel::Y)) {
        (Some(x), Some(y)) => Ok((*x, *y)),
        _ => Err(Error::InvalidSpace("builder needs both x and y modes".into())),
    }
}

fn check_orders(x: &ModeSpace, y: &ModeSpace, m: u32, n: u32) -> Result<()> {
    if m as usize >= x.dim() || n as usize >= y.dim() {
        return Err(Error::InvalidSpace(format!(
            "sideband orders m={m}, n={n} need mode dims above them (have {}x{})",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// `â_x^m (â_y†)^n` on the two-mode part of `space`.
fn exchange_operator(space: &HybridSpace, m: u32, n: u32) -> Result<OperatorMatrix> {
    let ax = space.annihilator(ModeLabel::X)?;
    let ay = space.annihilator(ModeLabel::Y)?;
    Ok(ax.pow(m).matmul(&ay.adjoint().pow(n)))
}

/// `â^k â†^k` on one mode, kept in the printed (anti-normal) order.
fn antinormal_power(space: &HybridSpace, label: ModeLabel, k: u32) -> Result<OperatorMatrix> {
    let a = space.annihilator(label)?;
    Ok(a.pow(k).matmul(&a.adjoint().pow(k)))
}

/// `c·â_x^m â_y†^n |b⟩⟨a| + h.c.` minus optional Stark terms, on an
/// `x ⊗ y ⊗ {a,b}` space.
pub fn raman_operator(
    space: &HybridSpace,
    m: u32,
    n: u32,
    coupling: C64,
    stark: Option<StarkShifts>,
) -> Result<OperatorMatrix> {
    require_internal(space, &[Level::A, Level::B])?;
    let (x, y) = two_modes(space)?;
    check_orders(&x, &y, m, n)?;
    let flip = space.transition(Level::B, Level::A)?;
    let forward = exchange_operator(space, m, n)?.matmul(&flip).scale(coupling);
    let mut h = &forward + &forward.adjoint();
    if let Some(s) = stark {
        let pa = space.projector(Level::A)?;
        let pb = space.projector(Level::B)?;
        let sa = antinormal_power(space, ModeLabel::X, m)?.matmul(&pa).scale_real(-s.a);
        let sb = antinormal_power(space, ModeLabel::Y, n)?.matmul(&pb).scale_real(-s.b);
        h = &(&h + &sa) + &sb;
    }
    Ok(h)
}

/// `c·â_x^m â_y†^n + h.c.` minus optional Stark-like terms on `x ⊗ y`.
pub fn degenerate_operator(
    space: &HybridSpace,
    m: u32,
    n: u32,
    coupling: C64,
    stark: Option<StarkShifts>,
) -> Result<OperatorMatrix> {
    if space.internal().is_some() {
        return Err(Error::InvalidSpace("degenerate model has no internal factor".into()));
    }
    let (x, y) = two_modes(space)?;
    check_orders(&x, &y, m, n)?;
    let forward = exchange_operator(space, m, n)?.scale(coupling);
    let mut h = &forward + &forward.adjoint();
    if let Some(s) = stark {
        let sa = antinormal_power(space, ModeLabel::X, m)?.scale_real(-s.a);
        let sb = antinormal_power(space, ModeLabel::Y, n)?.scale_real(-s.b);
        h = &(&h + &sa) + &sb;
    }
    Ok(h)
}

/// `c·â_x†â_y† |other⟩⟨raise_from| + h.c.`
pub fn counter_operator(space: &HybridSpace, coupling: C64, raise_from: Level) -> Result<OperatorMatrix> {
    require_internal(space, &[Level::A, Level::B])?;
    let (x, y) = two_modes(space)?;
    check_orders(&x, &y, 1, 1)?;
    let other = match raise_from {
        Level::A => Level::B,
        Level::B => Level::A,
        Level::C => return Err(Error::InvalidParams("counter-rotating flip is between a and b".into())),
    };
    let pair = space
        .annihilator(ModeLabel::X)?
        .adjoint()
        .matmul(&space.annihilator(ModeLabel::Y)?.adjoint());
    let forward = pair.matmul(&space.transition(other, raise_from)?).scale(coupling);
    Ok(&forward + &forward.adjoint())
}

pub fn build_raman_effective(spec: &HamiltonianSpec) -> Result<OperatorMatrix> {
    spec.check_kind("raman_effective", spec.kind == HamiltonianKind::RamanEffective)?;
    spec.params.validate()?;
    let stark = spec.include_stark.then(|| spec.params.stark_shifts());
    raman_operator(
        &spec.space,
        spec.params.m,
        spec.params.n,
        spec.exchange_coefficient(),
        stark,
    )
}

pub fn build_degenerate_effective(spec: &HamiltonianSpec) -> Result<OperatorMatrix> {
    spec.check_kind(
        "degenerate_effective",
        spec.kind == HamiltonianKind::DegenerateEffective,
    )?;
    spec.params.validate()?;
    let stark = spec.include_stark.then(|| spec.params.stark_shifts());
    degenerate_operator(
        &spec.space,
        spec.params.m,
        spec.params.n,
        spec.exchange_coefficient(),
        stark,
    )
}

pub fn build_counter_rotating(spec: &HamiltonianSpec) -> Result<OperatorMatrix> {
    let HamiltonianKind::CounterRotating { raise_from } = spec.kind else {
        return spec.check_kind("counter_rotating", false).map(|_| unreachable!());
    };
    spec.params.validate()?;
    if spec.params.m != 1 || spec.params.n != 1 {
        return Err(Error::InvalidParams("counter-rotating form needs m = n = 1".into()));
    }
    if spec.include_stark {
        return Err(Error::InvalidParams(
            "the counter-rotating form has no Stark line".into(),
        ));
    }
    counter_operator(&spec.space, spec.exchange_coefficient(), raise_from)
}

/// A Hamiltonian `H(t) = Σ_k e^{i ω_k t} M_k`. Hermiticity for all `t` holds
/// when the term at `−ω` is the adjoint of the term at `ω`.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    dim: usize,
    terms: Vec<(f64, OperatorMatrix)>,
}

impl TimeDependentHamiltonian {
    pub fn from_static(h: OperatorMatrix) -> Self {
        Self {
            dim: h.dim(),
            terms: vec![(0.0, h)],
        }
    }

    /// Merges terms with bit-identical frequencies.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (f64, OperatorMatrix)>) -> Self {
        let mut merged: BTreeMap<u64, (f64, OperatorMatrix)> = BTreeMap::new();
        for (w, op) in terms {
            assert_eq!(op.dim(), dim, "term dimension mismatch");
            let w = if w == 0.0 { 0.0 } else { w };
            merged
                .entry(w.to_bits())
                .and_modify(|(_, acc)| *acc = &*acc + &op)
                .or_insert((w, op));
        }
        let mut terms: Vec<(f64, OperatorMatrix)> = merged.into_values().filter(|(_, op)| op.nnz() > 0).collect();
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { dim, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(f64, OperatorMatrix)] {
        &self.terms
    }

    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|(w, _)| *w == 0.0)
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w.abs()).fold(0.0, f64::max)
    }

    /// Upper bound on `‖H(t)‖` valid for every `t`.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(_, op)| op.norm_inf()).sum()
    }

    pub fn phases_at(&self, t: f64) -> Vec<C64> {
        self.terms.iter().map(|(w, _)| C64::from_polar(1.0, w * t)).collect()
    }

    pub fn at(&self, t: f64) -> OperatorMatrix {
        let phases = self.phases_at(t);
        let triplets: Vec<_> = self
            .terms
            .iter()
            .zip(phases)
            .flat_map(|((_, op), p)| op.triplets().map(move |(r, c, v)| (r, c, v * p)))
            .collect();
        OperatorMatrix::from_triplets(self.dim, triplets)
    }

    /// `out += s · H(t) v` using precomputed phases from [`Self::phases_at`].
    pub fn apply_add(&self, phases: &[C64], v: &DVector<C64>, s: C64, out: &mut DVector<C64>) {
        for ((_, op), &p) in self.terms.iter().zip(phases) {
            op.apply_add(v, s * p, out);
        }
    }
}

/// Frame for the motional degrees of freedom of the full model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MotionalFrame {
    /// Trap terms `ν_x n̂_x + ν_y n̂_y` folded into `e^{±iνt}` factors on
    /// the displacement matrix elements.
    #[default]
    Interaction,
    /// Trap terms kept on the diagonal; the Hamiltonian is then static.
    Schrodinger,
}

/// Full laser–ion Hamiltonian in the frame rotating with both lasers.
///
/// Internal energies relative to `a` become `E_b − E_a − ω_x + ω_y` (equal
/// to `m ν_x − n ν_y` on resonance) and `E_c − E_a − ω_x` (`m ν_x + Δ`), so
/// no optical frequency survives. The couplings are
/// `(Ω_x/2) D̂_x(iε)|c⟩⟨a| + (Ω_y/2) D̂_y(iε)|c⟩⟨b| + h.c.`, and in the
/// motional interaction picture the element `⟨j|D̂|k⟩` picks up
/// `e^{iν(j−k)t}`.
pub fn build_full_rotating_frame(
    spec: &HamiltonianSpec,
    lasers: &LaserFrequencies,
    variant: ResonanceVariant,
    frame: MotionalFrame,
) -> Result<TimeDependentHamiltonian> {
    spec.check_kind("full_rotating_frame", spec.kind == HamiltonianKind::FullRotatingFrame)?;
    let p = &spec.params;
    p.validate()?;
    require_internal(&spec.space, &[Level::A, Level::B, Level::C])?;
    let report = validate_resonance(p, lasers, variant);
    if !report.all_pass() {
        return Err(Error::ResonanceFailed(report.failures()));
    }
    let space = &spec.space;
    let (x, y) = two_modes(space)?;
    let e = p.energies;
    let shift_b = e.b - e.a - lasers.x + lasers.y;
    let shift_c = e.c - e.a - lasers.x;

    let mut terms: Vec<(f64, OperatorMatrix)> = Vec::new();
    let pb = space.projector(Level::B)?;
    let pc = space.projector(Level::C)?;
    let mut diag = &pb.scale_real(shift_b) + &pc.scale_real(shift_c);
    if frame == MotionalFrame::Schrodinger {
        diag = &diag + &space.number_operator(ModeLabel::X)?.scale_real(p.nu_x);
        diag = &diag + &space.number_operator(ModeLabel::Y)?.scale_real(p.nu_y);
    }
    terms.push((0.0, diag));

    let drives = [(x, p.nu_x, p.rabi_x, Level::A), (y, p.nu_y, p.rabi_y, Level::B)];
    for (mode, nu, rabi, lower) in drives {
        let d = displacement_operator(&mode, C64::new(0.0, p.epsilon))?;
        let raise = space.transition(Level::C, lower)?;
        let by_offset: BTreeMap<i64, Vec<(usize, usize, C64)>> =
            d.triplets().fold(BTreeMap::new(), |mut acc, (r, c, v)| {
                let offset = match frame {
                    MotionalFrame::Interaction => r as i64 - c as i64,
                    MotionalFrame::Schrodinger => 0,
                };
                acc.entry(offset).or_default().push((r, c, v * (0.5 * rabi)));
                acc
            });
        for (offset, trips) in by_offset {
            let local = OperatorMatrix::from_triplets(mode.dim(), trips);
            let up = space.embed(Factor::Mode(mode.label()), &local)?.matmul(&raise);
            let w = offset as f64 * nu;
            terms.push((-w, up.adjoint()));
            terms.push((w, up));
        }
    }
    Ok(TimeDependentHamiltonian::from_terms(space.total_dim(), terms))
}

/// Convenience: `x ⊗ y ⊗ {a,b}` space for effective models.
pub fn raman_space(dim_x: usize, dim_y: usize) -> Result<HybridSpace> {
    HybridSpace::two_mode_internal(dim_x, dim_y, InternalSpace::ab())
}
