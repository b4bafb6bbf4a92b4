//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use optomech_teleport::config::{Command, RunConfig};
use optomech_teleport::dynamics::{
    closed_form_propagator, couplings_from_params, evolve_initial, propagator, Couplings,
    PhysicalParams,
};
use optomech_teleport::gaussian::symplectic_defect;
use optomech_teleport::protocol::{
    coefficients_at, conditional_matrix, cooling_neff, extract_coefficients, fidelity_coherent,
    fidelity_curve, summarize_fidelity, SignVariant,
};
use optomech_teleport::readout::{
    dominance_condition, printed_formula_residual, readout_coefficients,
};
use optomech_teleport::trajectories::{compare_at, mean_transport_check_with};

const NBARS: [f64; 4] = [0.0, 1.0, 10.0, 1000.0];
const TAU: f64 = std::f64::consts::TAU;

fn reference_couplings() -> Couplings {
    couplings_from_params(&PhysicalParams::default()).unwrap()
}

fn grid_2001() -> Vec<f64> {
    RunConfig::default().grid.values()
}

#[test]
fn criterion_01_coupling_reproduction() {
    let c = reference_couplings();
    assert!(
        c.chi >= 4e5 && c.chi <= 6e5,
        "chi = {} outside [4e5, 6e5]",
        c.chi
    );
    assert!(
        c.big_theta >= 3e2 && c.big_theta <= 3e3,
        "Theta = {} outside [3e2, 3e3]",
        c.big_theta
    );
    println!(
        "criterion 1 (coupling reproduction): PASS — chi = {:.4e}, theta = {:.4e}, Theta = {:.4e}",
        c.chi, c.theta, c.big_theta
    );
}

#[test]
fn criterion_02_fidelity_maximum() {
    let c = reference_couplings();
    let mut f_maxes = Vec::new();
    for nbar in NBARS {
        let s = summarize_fidelity(&c, nbar).unwrap();
        assert!(
            (s.f_max - 0.85).abs() <= 0.03,
            "F_max({nbar}) = {} outside 0.85 ± 0.03",
            s.f_max
        );
        f_maxes.push(s.f_max);
    }
    let spread = f_maxes.iter().cloned().fold(f64::MIN, f64::max)
        - f_maxes.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.02, "F_max spread {spread} exceeds 0.02");
    println!(
        "criterion 2 (fidelity maximum): PASS — F_max = {:?}, spread = {:.2e}, sign variant {} recorded as default",
        f_maxes,
        spread,
        SignVariant::default().id()
    );
}

#[test]
fn criterion_02b_exactly_one_sign_variant_realizes_the_protocol() {
    // The analytic maximum above uses the recorded default conventions.  Of
    // the eight documented sign variants, exactly one realizes them as a
    // physical measurement chain: it alone both transports the input mean
    // and reproduces the closed-form fidelity in Monte Carlo at the
    // operating point.
    let c = reference_couplings();
    let nbar = 1.0;
    let s = summarize_fidelity(&c, nbar).unwrap();
    let theta_t = s.theta_t_at_max;
    let t = theta_t / c.big_theta;
    let alpha_in = Complex64::new(1.5, -0.5);

    let mut passing = Vec::new();
    for id in 0..=7u8 {
        let v = SignVariant::from_id(id).unwrap();
        let transport = mean_transport_check_with(&c, nbar, t, alpha_in, 200, 13, v).unwrap();
        let cmp = compare_at(&c, nbar, theta_t, alpha_in, 2000, 13, v).unwrap();
        if transport < 1e-8 && cmp.z_score.abs() <= 4.0 {
            passing.push(id);
        }
    }
    assert_eq!(
        passing,
        vec![SignVariant::default().id()],
        "variants passing the full bundle: {passing:?}"
    );
    println!(
        "criterion 2b (sign-variant selection): PASS — only variant {} passes; it is the default",
        SignVariant::default().id()
    );
}

#[test]
fn criterion_03_window_ordering() {
    let c = reference_couplings();
    let measures: Vec<f64> = NBARS
        .iter()
        .map(|&nbar| summarize_fidelity(&c, nbar).unwrap().window_measure)
        .collect();
    for w in measures.windows(2) {
        assert!(
            w[0] > w[1],
            "window measures not strictly decreasing: {measures:?}"
        );
    }
    let shown: Vec<String> = measures.iter().map(|m| format!("{m:.3e}")).collect();
    println!("criterion 3 (window ordering): PASS — measures = {shown:?}");
}

#[test]
fn criterion_04_no_heterodyne_variant() {
    let c = reference_couplings();
    for nbar in NBARS {
        let s = summarize_fidelity(&c, nbar).unwrap();
        assert!(
            (s.f_max_no_het - 0.80).abs() <= 0.03,
            "no-het F_max({nbar}) = {}",
            s.f_max_no_het
        );
        // pointwise dominance of the heterodyne protocol on the full grid
        let curve = fidelity_curve(&c, nbar, &grid_2001()).unwrap();
        for r in &curve {
            assert!(
                r.fidelity_no_het <= r.fidelity + 1e-12,
                "no-het fidelity exceeds heterodyne at theta_t = {}, nbar = {nbar}",
                r.theta_t
            );
        }
    }
    println!("criterion 4 (no-heterodyne variant): PASS — max ≈ 0.80, pointwise below heterodyne");
}

#[test]
fn criterion_05_cooling() {
    let c = reference_couplings();
    for nbar in NBARS {
        let s = summarize_fidelity(&c, nbar).unwrap();
        assert!(
            (s.min_n_eff - 0.17).abs() <= 0.05,
            "min n_eff({nbar}) = {}",
            s.min_n_eff
        );
        // identity n_eff = 1/F - 1 at every grid point (relative, floored)
        let curve = fidelity_curve(&c, nbar, &grid_2001()).unwrap();
        for r in &curve {
            let via_f = 1.0 / r.fidelity - 1.0;
            assert!(
                (r.n_eff - via_f).abs() <= 1e-9 * r.n_eff.abs().max(1.0),
                "identity violated at theta_t = {}: {} vs {}",
                r.theta_t,
                r.n_eff,
                via_f
            );
        }
    }
    println!("criterion 5 (cooling): PASS — min n_eff ≈ 0.17, n_eff = 1/F - 1 on all grid points");
}

#[test]
fn criterion_06_exact_limits() {
    let c = reference_couplings();
    for nbar in NBARS {
        let co = coefficients_at(&c, nbar, 0.0).unwrap();
        let f = fidelity_coherent(&co).unwrap();
        assert!(
            (f - 1.0 / (2.0 + nbar)).abs() <= 1e-12,
            "F(0, {nbar}) = {f}"
        );
        let n = cooling_neff(&co);
        assert!((n - (nbar + 1.0)).abs() <= 1e-12, "n_eff(0, {nbar}) = {n}");
    }
    println!("criterion 6 (exact limits): PASS — F(0) = 1/(2+nbar), n_eff(0) = nbar+1 to 1e-12");
}

#[test]
fn criterion_07_conditioning_oracle() {
    // Eq.-5-style conditional matrix from the extracted coefficients versus
    // direct Gaussian conditioning, elementwise within 1e-8 of the matrix
    // scale, over 50 randomized (couplings, nbar, t) draws.
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (c, nbar, theta_t) = if i % 5 == 4 {
            // realistic-scale draw inside the useful window
            let c = reference_couplings();
            let nbar = [0.0, 1.0, 10.0, 1000.0][rng.random_range(0..4)];
            (c, nbar, TAU - rng.random_range(2e-4..2.5e-3))
        } else {
            let chi = rng.random_range(0.3..3.0);
            let ratio = rng.random_range(1.01..2.5);
            let nbar = [0.0, 0.7, 5.0, 300.0][rng.random_range(0..4)];
            (Couplings::new(chi, chi * ratio), nbar, rng.random_range(0.0..TAU))
        };
        let state = evolve_initial(&c, nbar, theta_t / c.big_theta).unwrap();
        let co = extract_coefficients(&state).unwrap();
        let predicted = conditional_matrix(&co);
        let alpha = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let conditioned = state.heterodyne_condition(2, alpha).unwrap();
        let scale = predicted.amax().max(conditioned.cov().amax()).max(1.0);
        let dev = (conditioned.cov() - &predicted).amax() / scale;
        worst = worst.max(dev);
        assert!(
            dev <= 1e-8,
            "draw {i}: conditional matrix deviates by {dev:.2e} (chi = {}, theta_t = {theta_t})",
            c.chi
        );
    }
    println!("criterion 7 (conditioning oracle): PASS — worst relative deviation {worst:.2e}");
}

#[test]
fn criterion_08_monte_carlo_oracle() {
    let c = reference_couplings();
    let alpha_in = Complex64::new(1.0, 0.5);
    let mut max_abs_z: f64 = 0.0;
    let mut max_transport: f64 = 0.0;
    let fractions = [0.35, 0.55, 0.75, 1.0, 1.3, 1.6, 0.45, 0.9, 1.15, 1.45];
    let summaries: Vec<_> = NBARS
        .iter()
        .map(|&n| summarize_fidelity(&c, n).unwrap())
        .collect();
    for (j, frac) in fractions.into_iter().enumerate() {
        let s = &summaries[j % summaries.len()];
        let theta_t = TAU - frac * (TAU - s.theta_t_at_max);
        let cmp = compare_at(
            &c,
            s.nbar,
            theta_t,
            alpha_in,
            10_000,
            77 ^ ((j as u64 + 1) << 32),
            SignVariant::default(),
        )
        .unwrap();
        max_abs_z = max_abs_z.max(cmp.z_score.abs());
        max_transport = max_transport.max(cmp.mean_transport_max);
        assert!(
            cmp.z_score.abs() <= 3.0,
            "point {j} (nbar = {}): z = {:.2} (analytic {:.5}, mc {:.5} ± {:.5})",
            s.nbar,
            cmp.z_score,
            cmp.analytic,
            cmp.mc_mean,
            cmp.mc_stderr
        );
        assert!(
            cmp.mean_transport_max < 1e-8,
            "point {j}: mean transport deviation {}",
            cmp.mean_transport_max
        );
    }
    println!(
        "criterion 8 (monte-carlo oracle): PASS — max |z| = {max_abs_z:.2}, \
         max mean-transport deviation = {max_transport:.2e}"
    );
}

#[test]
fn criterion_09_dynamics_invariants() {
    let c = reference_couplings();
    let mut rng = ChaCha12Rng::seed_from_u64(5150);

    // symplecticity over the period
    for _ in 0..20 {
        let t = rng.random::<f64>() * c.period();
        let s = propagator(&c, t);
        let smax = s.amax();
        assert!(
            symplectic_defect(&s) <= 1e-9 * (smax * smax).max(1.0),
            "symplectic defect at t = {t}"
        );
    }

    // closure of the period
    let s_period = propagator(&c, c.period());
    let dev = (&s_period - DMatrix::identity(6, 6)).amax();
    assert!(dev <= 1e-7, "S(2pi/Theta) - I = {dev:.2e}");

    // conservation laws at 1e-9
    let occ = |state: &optomech_teleport::GaussianState, m: usize| {
        (state.cov()[(2 * m, 2 * m)] + state.cov()[(2 * m + 1, 2 * m + 1)] - 1.0) / 2.0
    };
    let c_bs = Couplings::new(0.0, 1.3);
    for t in [0.4, 1.9, 3.3] {
        let s = evolve_initial(&c_bs, 4.0, t).unwrap();
        assert!(
            ((occ(&s, 1) + occ(&s, 2)) - 4.0).abs() <= 1e-9,
            "beam-splitter sum law at t = {t}"
        );
    }
    let c_sq = Couplings::new(0.8, 0.0);
    for t in [0.2, 0.9, 1.6] {
        let s = evolve_initial(&c_sq, 4.0, t).unwrap();
        assert!(
            ((occ(&s, 0) - occ(&s, 1)) + 4.0).abs() <= 1e-9,
            "parametric difference law at t = {t}"
        );
    }

    // closed-form vs exponential propagator on 100 random points
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (cc, t) = if i % 4 == 3 {
            (c, rng.random::<f64>() * c.period())
        } else {
            let chi = 10f64.powf(rng.random_range(-1.0..5.5));
            let cc = Couplings::new(chi, chi * (1.0 + 10f64.powf(rng.random_range(-6.5..0.5))));
            let t = rng.random::<f64>() * cc.period();
            (cc, t)
        };
        let a = propagator(&cc, t);
        let b = closed_form_propagator(&cc, t);
        let dev = (&a - &b).amax() / a.amax().max(1.0);
        worst = worst.max(dev);
        assert!(dev <= 1e-9, "propagator mismatch {dev:.2e} at draw {i}");
    }
    println!(
        "criterion 9 (dynamics invariants): PASS — period closure {dev:.2e}, \
         worst propagator-route mismatch {worst:.2e}"
    );
}

#[test]
fn criterion_10_readout() {
    let c = reference_couplings();
    let ratio = dominance_condition(&c);
    assert!(
        (ratio / 1.8e-4 - 1.0).abs() <= 0.2,
        "dominance ratio = {ratio:.3e}"
    );
    let r0 = readout_coefficients(&c, 0.0);
    assert!(r0.c_b.abs() <= 1e-12 && (r0.c_a1 - 1.0).abs() <= 1e-12 && (r0.c_a2 + 1.0).abs() <= 1e-12,
        "t = 0 coefficients ({}, {}, {})", r0.c_b, r0.c_a1, r0.c_a2);

    // the printed-formula residual report is generated, not asserted away:
    // at t = 0 the a2 residual sits near one, documenting the sign defect
    let res0 = printed_formula_residual(&c, 0.0, 1.0).unwrap();
    assert!(
        res0.c_a2 > 0.9 && res0.c_a2 < 1.1,
        "expected the documented t = 0 residual near 1, got {}",
        res0.c_a2
    );
    println!(
        "criterion 10 (readout): PASS — dominance ratio {ratio:.3e}, t = 0 coefficients exact, \
         printed-form a2 residual {:.4} reported",
        res0.c_a2
    );
}

#[test]
fn criterion_11_sensitivity() {
    let p = PhysicalParams::default();
    let delta = 1e-6;
    let mut p_plus = p;
    p_plus.power_w *= 1.0 + delta;
    let mut p_minus = p;
    p_minus.power_w *= 1.0 - delta;
    let (cp, cm) = (
        couplings_from_params(&p_plus).unwrap(),
        couplings_from_params(&p_minus).unwrap(),
    );
    let slope = (cp.big_theta.ln() - cm.big_theta.ln())
        / ((1.0 + delta).ln() - (1.0 - delta).ln());
    assert!((slope - 0.5).abs() <= 1e-6, "slope = {slope}");

    let budget = 1.0 / (p.gamma_m * 1e3);
    assert!((budget - 1e-3).abs() <= 1e-15, "budget = {budget}");
    println!(
        "criterion 11 (sensitivity): PASS — d ln(Theta t)/d ln P = {slope:.9}, \
         decoherence budget at nbar = 1e3: {budget:.1e} s"
    );
}

#[test]
fn criterion_12_deterministic_output() {
    use optomech_teleport::cli;
    let dir = std::env::temp_dir().join("omt_acceptance_determinism");
    std::fs::create_dir_all(&dir).unwrap();

    let run_sweep = |path: &std::path::Path| {
        let mut cfg = RunConfig {
            nbars: vec![0.0, 10.0],
            out: Some(path.to_path_buf()),
            ..RunConfig::default()
        };
        cfg.grid.points = 101;
        cli::run(Command::FidelitySweep, &cfg).unwrap();
        std::fs::read(path).unwrap()
    };
    let a = run_sweep(&dir.join("sweep_a.csv"));
    let b = run_sweep(&dir.join("sweep_b.csv"));
    assert_eq!(a, b, "fidelity-sweep CSV bytes differ between runs");

    let run_mc = |path: &std::path::Path| {
        let cfg = RunConfig {
            n_traj: 400,
            nbars: vec![0.0, 1.0],
            out: Some(path.to_path_buf()),
            ..RunConfig::default()
        };
        cli::run(Command::MonteCarlo, &cfg).unwrap();
        std::fs::read(path).unwrap()
    };
    let ma = run_mc(&dir.join("mc_a.csv"));
    let mb = run_mc(&dir.join("mc_b.csv"));
    assert_eq!(ma, mb, "montecarlo CSV bytes differ between runs");
    println!(
        "criterion 12 (determinism): PASS — sweep and montecarlo CSVs byte-identical across repeated runs"
    );
}
