mod common;

use dislocation_relax::envelope::{
    barpsi_pair, barpsi_pair_2d, barpsi_single, lower_bound_alpha, pair_2d_objective, pair_objective, AlphaSet,
    Minimizer, PlanarGenerators,
};
use dislocation_relax::optim::{grid_oracle, GridBox};
use dislocation_relax::{psi_cubic, LatticeVector, SolverOptions};
use proptest::prelude::*;

fn tangent(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pair_values_are_bracketed(a in 0.0f64..6.3, eta in 0.0f64..=1.0, beta in -3i64..=3, minus in any::<bool>()) {
        let t = tangent(a);
        let sign = if minus { -1 } else { 1 };
        let opts = SolverOptions::default();
        let b = &LatticeVector::from([1, sign]) * beta;
        let pair = barpsi_pair(beta, 0, 1, sign, &t, eta, &opts).unwrap();
        let lower = lower_bound_alpha(&b, &t, eta, &AlphaSet::small(2).unwrap(), &opts).unwrap();
        let psi = psi_cubic(&b, &t, eta).unwrap();
        prop_assert!(lower.value_lower <= pair.value_upper + 1e-6);
        prop_assert!(pair.value_lower <= pair.value_upper);
        prop_assert!(pair.value_upper <= psi + 1e-9);
        prop_assert!(lower.diagnostics.constraint_residual <= 1e-9);
        prop_assert!(lower.value_lower >= b.norm() - 1e-9);
        // growth
        let l1 = (2 * beta.abs()) as f64;
        prop_assert!(b.norm() - 1e-9 <= pair.value_upper && pair.value_upper <= (1.0 + eta) * l1 + 1e-9);
    }

    #[test]
    fn envelope_is_subadditive_on_families(a in 0.0f64..6.3, eta in 0.0f64..=1.0, b1 in -2i64..=2, b2 in -2i64..=2) {
        let t = tangent(a);
        let opts = SolverOptions::default();
        let pair = |beta: i64| barpsi_pair_2d(beta, 1, &t, eta, &opts).unwrap().value_upper;
        prop_assert!(pair(b1 + b2) <= pair(b1) + pair(b2) + 1e-6);
        let single = |beta: i64| barpsi_single(beta, 0, &t, eta).unwrap();
        prop_assert!(single(b1 + b2) <= single(b1) + single(b2) + 1e-12);
        // e1 + e2 splits into e1 and e2
        prop_assert!(pair(1) <= single(1) + barpsi_single(1, 1, &t, eta).unwrap() + 1e-6);
    }

    #[test]
    fn local_solver_never_loses_to_the_grid(a in 0.0f64..6.3, eta in 0.0f64..=1.0, minus in any::<bool>()) {
        let t = tangent(a);
        let sign = if minus { -1 } else { 1 };
        let r = barpsi_pair_2d(1, sign, &t, eta, &SolverOptions::default()).unwrap();
        let g = grid_oracle(|z| pair_2d_objective(sign, &t, eta, z), &GridBox::cube(2, 2.0), 0.02).unwrap();
        prop_assert!(r.value_upper <= g.best_value + 1e-4);
        prop_assert!(g.best_value >= r.value_upper - 1e-8);
    }

    #[test]
    fn psi_star_never_exceeds_psi(a in 0.0f64..6.3, eta in 0.0f64..=1.0, b1 in -4i64..=4, b2 in -4i64..=4) {
        let t = tangent(a);
        let g = PlanarGenerators::compute(&t, eta, &SolverOptions::default()).unwrap();
        prop_assert!(g.psi_star([b1, b2]) <= common::psi_direct(&[b1, b2], &t, eta) + 1e-9);
    }
}

#[test]
fn pair_minimizers_coincide() {
    // the two-point optimum is attained with both points equal
    let opts = SolverOptions::default();
    for deg in [0.0, 30.0, 75.0, 90.0, 160.0] {
        let t = tangent(f64::to_radians(deg));
        let r = barpsi_pair(1, 0, 1, 1, &t, 1.0, &opts).unwrap();
        let Minimizer::Pair { z1, z2 } = &r.minimizer else { panic!() };
        let at_mean = {
            let z = [(z1[0] + z2[0]) / 2.0, (z1[1] + z2[1]) / 2.0];
            pair_objective(0, 1, 1, &t, 1.0, &z, &z)
        };
        assert!(at_mean <= r.value_upper + 1e-6, "{deg}: {at_mean} vs {}", r.value_upper);
    }
}

#[test]
fn lipschitz_in_tangent() {
    // fitted constant over a 1° sweep
    let opts = SolverOptions::default();
    let values: Vec<f64> = (0..=360)
        .map(|d| barpsi_pair_2d(1, 1, &tangent(f64::to_radians(d as f64)), 1.0, &opts).unwrap().value_upper)
        .collect();
    let step = 2.0 * (0.5f64.to_radians()).sin();
    let constant = values.windows(2).map(|w| (w[1] - w[0]).abs() / step).fold(0.0, f64::max)
        / LatticeVector::from([1, 1]).norm();
    assert!(constant.is_finite() && constant < 3.0, "{constant}");
}

#[test]
fn three_dimensional_single_axis() {
    // n = 3 carries 13 multiplicities and a 30-dimensional search; only the
    // easy case with t along the axis is checked here
    let opts = SolverOptions::default();
    let r = lower_bound_alpha(&LatticeVector::from([0, 0, 1]), &[0.0, 0.0, 1.0], 1.0, &AlphaSet::small(3).unwrap(), &opts)
        .unwrap();
    assert!(r.value_lower <= 2.0 + 1e-6);
    assert!(r.value_lower >= 1.0 - 1e-9);
    assert!(r.diagnostics.best_value >= r.value_lower);
    if !r.converged() {
        assert_eq!(r.value_lower, 1.0);
    }
}
