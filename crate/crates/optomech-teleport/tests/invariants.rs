//! Cross-module consistency checks tying the closed-form protocol algebra
//! to the Gaussian-state machinery and the Monte-Carlo estimator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use optomech_teleport::dynamics::{couplings_from_params, Couplings, PhysicalParams};
use optomech_teleport::gaussian::{overlap_with_pure_gaussian, GaussianState};
use optomech_teleport::protocol::{
    coefficients_at, conditional_matrix, fidelity_coherent, fidelity_no_heterodyne,
    output_covariance,
};
use optomech_teleport::trajectories::estimate_fidelity;

const TAU: f64 = std::f64::consts::TAU;

fn reference_couplings() -> Couplings {
    couplings_from_params(&PhysicalParams::default()).unwrap()
}

/// Output state of the protocol for a given input, built through the
/// second-moment input-output map with the mean carried over unchanged
/// (the feed-forward gains transport it exactly).
fn analytic_output(input: &GaussianState, c: &Couplings, nbar: f64, theta_t: f64) -> GaussianState {
    let co = coefficients_at(c, nbar, theta_t).unwrap();
    let g_out = output_covariance(input.cov(), &conditional_matrix(&co));
    GaussianState::from_parts(input.mean().clone(), g_out).unwrap()
}

#[test]
fn closed_form_fidelity_equals_the_overlap_route() {
    // ties the fidelity formula to the input-output map and the Gaussian
    // overlap independently of the trajectory machinery
    let c = reference_couplings();
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    for _ in 0..25 {
        let nbar = [0.0, 1.0, 10.0, 1000.0][rng.random_range(0..4)];
        let theta_t = TAU - rng.random_range(1e-4..3e-3);
        let input = GaussianState::coherent(Complex64::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ));
        let out = analytic_output(&input, &c, nbar, theta_t);
        let via_overlap = overlap_with_pure_gaussian(&input, &out).unwrap();
        let via_formula =
            fidelity_coherent(&coefficients_at(&c, nbar, theta_t).unwrap()).unwrap();
        assert!(
            (via_overlap - via_formula).abs() <= 1e-10,
            "overlap route {via_overlap} vs formula {via_formula} at nbar = {nbar}"
        );
    }
}

#[test]
fn fidelity_is_amplitude_independent() {
    let c = reference_couplings();
    let theta_t = TAU - 1e-3;
    let amplitudes = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 10.0),
        Complex64::new(3.0, -4.0),
    ];
    let fids: Vec<f64> = amplitudes
        .iter()
        .map(|&a| {
            let input = GaussianState::coherent(a);
            let out = analytic_output(&input, &c, 1.0, theta_t);
            overlap_with_pure_gaussian(&input, &out).unwrap()
        })
        .collect();
    for f in &fids[1..] {
        assert!(
            (f - fids[0]).abs() <= 1e-10,
            "amplitude-dependent fidelities: {fids:?}"
        );
    }
}

#[test]
fn monte_carlo_agrees_across_input_amplitudes() {
    let c = reference_couplings();
    let t = (TAU - 1e-3) / c.big_theta;
    let (m1, s1) = estimate_fidelity(&c, 0.0, t, Complex64::new(0.0, 0.0), 4000, 11).unwrap();
    let (m2, s2) = estimate_fidelity(&c, 0.0, t, Complex64::new(3.0, -4.0), 4000, 12).unwrap();
    let combined = (s1 * s1 + s2 * s2).sqrt();
    assert!(
        (m1 - m2).abs() <= 3.0 * combined,
        "MC fidelity differs across amplitudes: {m1} vs {m2} (3σ = {:.2e})",
        3.0 * combined
    );
}

#[test]
fn no_heterodyne_route_matches_the_partial_trace() {
    // dropping the anti-Stokes measurement is the same as tracing the mode
    // out and feeding the bare (a1, b) covariance through the Bell map
    let c = reference_couplings();
    for (nbar, eps) in [(0.0, 1.1e-3), (10.0, 8e-4)] {
        let theta_t: f64 = TAU - eps;
        let state =
            optomech_teleport::dynamics::evolve_initial(&c, nbar, theta_t / c.big_theta).unwrap();
        let reduced = state.partial_trace(&[0, 1]).unwrap();
        let g_in = GaussianState::vacuum(1).unwrap().cov().clone();
        let g_out = output_covariance(&g_in, reduced.cov());
        // isotropic added noise; fidelity = 1/(1 + N)
        let f_direct = 1.0 / (0.5 + g_out[(0, 0)]);
        let f_formula =
            fidelity_no_heterodyne(&coefficients_at(&c, nbar, theta_t).unwrap()).unwrap();
        assert!(
            (f_direct - f_formula).abs() <= 1e-12,
            "no-het route {f_direct} vs formula {f_formula}"
        );
    }
}

#[test]
fn log_negativity_tracks_the_useful_window() {
    // inside the window the conditional (a1, b) pair is entangled; at the
    // start of the pulse it is not
    let c = reference_couplings();
    let at = |theta_t: f64| {
        let co = coefficients_at(&c, 1.0, theta_t).unwrap();
        let g = conditional_matrix(&co);
        let s = GaussianState::from_parts(nalgebra::DVector::zeros(4), g).unwrap();
        optomech_teleport::gaussian::log_negativity(&s).unwrap()
    };
    assert_eq!(at(0.0), 0.0);
    assert!(at(TAU - 1e-3) > 0.1, "expected entanglement in the window");
}
