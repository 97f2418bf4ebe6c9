use std::f64::consts::SQRT_2;

use jcq_core::minimal::{derive_params, effective_propagate, CascadeSteadyState, FourStateDensity};
use jcq_core::SystemParams;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rates_and_rabi_frequency(g in 50.0f64..2000.0, gamma in 0.0f64..4.0, eps_over_g in 0.005f64..0.09) {
        let p = SystemParams::from_ratios(g, gamma, eps_over_g, -0.7, 14).unwrap();
        let mm = derive_params(&p).unwrap();
        prop_assert!(mm.gamma31 > mm.gamma32 && mm.gamma32 > 0.0);
        let eps = eps_over_g * g;
        prop_assert!((mm.omega - 2.0 * SQRT_2 * eps * eps / g).abs() < 1e-12 * mm.omega.max(1.0));
        prop_assert!((mm.nu - (mm.energies[2] - mm.energies[1])).abs() < 1e-9 * g);
    }

    #[test]
    fn cascade_steady_state_is_a_fixed_point(omega in 0.1f64..20.0) {
        let p = SystemParams::two_photon_resonance(1000.0, 0.0, omega, 14).unwrap();
        let mm = derive_params(&p).unwrap();
        let ss = CascadeSteadyState::new(&mm);
        prop_assert!((0.0..=1.0).contains(&ss.p0()));
        prop_assert!((ss.p1 - mm.gamma31 / mm.gamma_int * ss.p3).abs() < 1e-14);
        let p3 = 4.0 * mm.omega.powi(2) / (9.0 + 20.0 * mm.omega.powi(2));
        prop_assert!((ss.p3 - p3).abs() < 1e-12);
        let later = effective_propagate(&mm, &ss.density(), 3.0).unwrap();
        for (a, b) in later.0.iter().zip(ss.density().0.iter()) {
            prop_assert!((a - b).norm() < 1e-8);
        }
    }
}

#[test]
fn cascade_rates_without_spontaneous_emission() {
    let p = SystemParams::from_ratios(500.0, 0.0, 0.03, -0.71, 14).unwrap();
    let mm = derive_params(&p).unwrap();
    assert!((mm.gamma31 - (3.0 + 2.0 * SQRT_2) / 2.0).abs() < 1e-12);
    assert!((mm.gamma32 - (3.0 - 2.0 * SQRT_2) / 2.0).abs() < 1e-12);
}

#[test]
fn propagation_conserves_trace_from_the_ground_state() {
    let p = SystemParams::two_photon_resonance(1000.0, 2.0, 3.0, 14).unwrap();
    let mm = derive_params(&p).unwrap();
    let rho = effective_propagate(&mm, &FourStateDensity::basis(0), 1.7).unwrap();
    assert!((rho.trace() - 1.0).abs() < 1e-10);
    assert!((0..4).all(|k| rho.population(k) > -1e-12));
}
