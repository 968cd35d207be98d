//! Randomized invariants.

use nalgebra::DVector;
use proptest::prelude::*;

use iontrap::dynamics::{conserved_charge, evolve_static, ChargeKind, EvolutionMethod, Propagator};
use iontrap::hamiltonians::{degenerate_operator, raman_operator, raman_space, StarkShifts};
use iontrap::hilbert::{
    coherent_state, displacement_operator, parity_operator, DensityOperator, Factor, HybridSpace, ModeLabel, ModeSpace,
    StateVector,
};
use iontrap::measurement::{purity, reduce};
use iontrap::output::{read_series, write_series};
use iontrap::phasespace::wigner_point;
use iontrap::scenarios::{Column, Table};
use iontrap::C64;

fn random_state(space: &HybridSpace, raw: &[(f64, f64)]) -> StateVector {
    let amps = DVector::from_iterator(space.total_dim(), raw.iter().map(|&(re, im)| C64::new(re, im)));
    StateVector::new(space.clone(), amps).unwrap().normalized().unwrap()
}

fn amplitudes(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_is_unitary_and_conserves_charges(
        m in 1u32..=2,
        n in 1u32..=2,
        t in -3.0..3.0f64,
        raw in amplitudes(5 * 5 * 2),
    ) {
        let space = raman_space(5, 5).unwrap();
        let stark = StarkShifts { a: 0.3, b: 0.2 };
        let h = raman_operator(&space, m, n, C64::new(0.7, 0.0), Some(stark)).unwrap();
        let psi = random_state(&space, &raw);
        let out = evolve_static(&psi, &h, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        for kind in [ChargeKind::K, ChargeKind::L] {
            let q = conserved_charge(kind, m, n, &space).unwrap();
            let before = psi.expectation(&q).unwrap().re;
            let after = out.expectation(&q).unwrap().re;
            prop_assert!((before - after).abs() < 1e-8, "{kind:?}: {before} vs {after}");
        }
        let back = evolve_static(&out, &h, -t).unwrap();
        prop_assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-9);
    }

    #[test]
    fn propagation_routes_agree(
        m in 1u32..=3,
        n in 1u32..=3,
        t in 0.0..2.0f64,
        raw in amplitudes(6 * 6),
    ) {
        let space = HybridSpace::two_mode(6, 6).unwrap();
        let h = degenerate_operator(&space, m, n, C64::new(0.4, 0.0), None).unwrap();
        let psi = random_state(&space, &raw);
        let eig = Propagator::new(&space, &h, EvolutionMethod::Eigendecomposition).unwrap().evolve(&psi, t).unwrap();
        let pade = Propagator::new(&space, &h, EvolutionMethod::ScaledExponential).unwrap().evolve(&psi, t).unwrap();
        prop_assert!((eig.amplitudes() - pade.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn coherent_mean_number_is_modulus_squared(re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let mode = ModeSpace::new(40, ModeLabel::X).unwrap();
        let alpha = C64::new(re, im);
        let psi = coherent_state(&mode, alpha).unwrap();
        let mean: f64 = psi.amplitudes().iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum();
        prop_assert!((mean - alpha.norm_sqr()).abs() < 1e-6);
    }

    #[test]
    fn displacement_inverse(re in -0.5..0.5f64, im in -0.5..0.5f64) {
        let mode = ModeSpace::new(25, ModeLabel::X).unwrap();
        let zeta = C64::new(re, im);
        let d = displacement_operator(&mode, zeta).unwrap().to_dense();
        let inv = displacement_operator(&mode, -zeta).unwrap().to_dense();
        let id = nalgebra::DMatrix::<C64>::identity(25, 25);
        // truncation spoils the product only near the cutoff
        let block = (&d * &inv - id).view((0, 0), (15, 15)).norm();
        prop_assert!(block < 1e-8);
    }

    #[test]
    fn wigner_origin_is_scaled_parity(raw in amplitudes(8)) {
        let mode = ModeSpace::new(8, ModeLabel::X).unwrap();
        let space = HybridSpace::single_mode(mode);
        let psi = random_state(&space, &raw);
        let rho = DensityOperator::from_pure(&psi);
        let parity = rho.expectation(&parity_operator(&mode)).unwrap().re;
        let w0 = wigner_point(rho.matrix(), C64::new(0.0, 0.0));
        prop_assert!((std::f64::consts::FRAC_PI_2 * w0 - parity).abs() < 1e-8);
    }

    #[test]
    fn reductions_are_unit_trace_with_matching_purity(raw in amplitudes(4 * 5 * 2)) {
        let space = raman_space(4, 5).unwrap();
        let psi = random_state(&space, &raw);
        let rx = reduce(&psi, &[Factor::Mode(ModeLabel::X)]).unwrap();
        let rest = reduce(&psi, &[Factor::Mode(ModeLabel::Y), Factor::Internal]).unwrap();
        prop_assert!((rx.trace().re - 1.0).abs() < 1e-12);
        prop_assert!((rest.trace().re - 1.0).abs() < 1e-12);
        // complementary reductions of a pure state share their spectrum
        prop_assert!((purity(&rx) - purity(&rest)).abs() < 1e-12);
        prop_assert!(rx.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn series_round_trip_is_bit_exact(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let table = Table::new("s", vec![Column::new("v", "1", values.clone())]);
        write_series(&table, &path).unwrap();
        let back = read_series(&path).unwrap();
        let got = back.column("v").unwrap();
        prop_assert_eq!(got.len(), values.len());
        for (a, b) in got.iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
