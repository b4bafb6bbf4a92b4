//! Seeded Monte-Carlo oracle: simulate single experimental runs of the
//! protocol (heterodyne outcome, Bell outcomes, feed-forward displacement)
//! and estimate the teleportation fidelity statistically.
//!
//! Trajectories are seeded per index (`seed ^ index`), so parallel and
//! serial execution produce identical ensembles.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::SQRT_2;

use crate::dynamics::{evolve_initial, Couplings};
use crate::error::{Error, Result};
use crate::gaussian::{balanced_mixer_symplectic, overlap_with_pure_gaussian, GaussianState, Quadrature};
use crate::protocol::{displacement_gains_for, extract_coefficients, SignVariant};

/// One simulated run of the protocol.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// Heterodyne outcome on the anti-Stokes mode.
    pub alpha: Complex64,
    /// Outcome of the X measurement of the Bell pair.
    pub x_plus: f64,
    /// Outcome of the P measurement of the Bell pair.
    pub p_minus: f64,
    /// Bob's mirror mode after the feed-forward displacement.
    pub out_state: GaussianState,
    /// Overlap of `out_state` with the input coherent state.
    pub overlap: f64,
}

/// Run one trajectory with the default sign variant.
pub fn run_trajectory(
    c: &Couplings,
    nbar: f64,
    t: f64,
    alpha_in: Complex64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    run_trajectory_with(c, nbar, t, alpha_in, seed, SignVariant::default())
}

/// Run one trajectory: evolve, heterodyne the anti-Stokes mode, mix the
/// input with the Stokes mode on a balanced beam splitter, measure the two
/// commuting Bell quadratures jointly, displace the mirror mode and score
/// the overlap with the input.
///
/// The Bell pair `(X, P)` is drawn in one shot from its exact bivariate
/// Gaussian; conditioning on the two outcomes sequentially gives the same
/// posterior (they commute), which the unit tests verify.
pub fn run_trajectory_with(
    c: &Couplings,
    nbar: f64,
    t: f64,
    alpha_in: Complex64,
    seed: u64,
    variant: SignVariant,
) -> Result<TrajectoryRecord> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let evolved = evolve_initial(c, nbar, t)?;
    let coeffs = extract_coefficients(&evolved)?;
    let (gain_x, gain_p) = displacement_gains_for(&coeffs, variant);

    // (1)-(2): heterodyne the anti-Stokes mode, keep (a1, b)
    let (alpha, posterior) = evolved.heterodyne_sample(2, &mut rng)?;

    // (3): adjoin the input and mix it with a1; modes are (a1, b, in),
    // slot 0 becomes the (in + a1)/√2 port, slot 2 the (in - a1)/√2 port
    let input = GaussianState::coherent(alpha_in);
    let mixed = posterior
        .tensor(&input)
        .apply_symplectic(&balanced_mixer_symplectic(3, 0, 2))?;
    let (x_port, p_port) = if variant.mix_flip { (2, 0) } else { (0, 2) };

    // (4): joint draw of (X at x_port, P at p_port)
    let (qx, qp) = (2 * x_port, 2 * p_port + 1);
    let (mx, mp) = (mixed.mean()[qx], mixed.mean()[qp]);
    let (vxx, vpp, vxp) = (
        mixed.cov()[(qx, qx)],
        mixed.cov()[(qp, qp)],
        mixed.cov()[(qx, qp)],
    );
    let l11 = vxx.max(0.0).sqrt();
    let l21 = if l11 > 0.0 { vxp / l11 } else { 0.0 };
    let l22 = (vpp - l21 * l21).max(0.0).sqrt();
    let (z1, z2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    let x_meas = mx + l11 * z1;
    let p_meas = mp + l21 * z1 + l22 * z2;

    let conditioned = mixed
        .homodyne_condition(x_port, Quadrature::X, x_meas)?
        .homodyne_condition(p_port, Quadrature::P, p_meas)?;
    let bob = conditioned.partial_trace(&[1])?;

    // (5): feed-forward displacement
    let dx = SQRT_2 * x_meas + SQRT_2 * alpha.re * gain_x;
    let dp = variant.p_feed_sign() * SQRT_2 * p_meas + SQRT_2 * alpha.im * gain_p;
    let out_state = bob.displace(0, dx, dp)?;

    // (6): score against the input
    let overlap = overlap_with_pure_gaussian(&input, &out_state)?;
    Ok(TrajectoryRecord {
        alpha,
        x_plus: x_meas,
        p_minus: p_meas,
        out_state,
        overlap,
    })
}

/// Sample mean and standard error of the per-trajectory overlap.
pub fn estimate_fidelity(
    c: &Couplings,
    nbar: f64,
    t: f64,
    alpha_in: Complex64,
    n_traj: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    estimate_fidelity_with(c, nbar, t, alpha_in, n_traj, seed, SignVariant::default())
}

pub fn estimate_fidelity_with(
    c: &Couplings,
    nbar: f64,
    t: f64,
    alpha_in: Complex64,
    n_traj: usize,
    seed: u64,
    variant: SignVariant,
) -> Result<(f64, f64)> {
    if n_traj < 100 {
        return Err(Error::InvalidParams(format!(
            "fidelity estimation needs at least 100 trajectories, got {n_traj}"
        )));
    }
    let overlaps: Result<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            run_trajectory_with(c, nbar, t, alpha_in, seed ^ (i as u64), variant)
                .map(|r| r.overlap)
        })
        .collect();
    let overlaps = overlaps?;
    let n = overlaps.len() as f64;
    let mean = overlaps.iter().sum::<f64>() / n;
    let var = overlaps.iter().map(|o| (o - mean) * (o - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Verify the heterodyne feed-forward gains: the Bell outcomes enter the
/// displaced mean linearly with zero conditional expectation, so they are
/// averaged out analytically per heterodyne draw.  What remains is the
/// heterodyne back-action on the output mean, which correct gains cancel
/// exactly; the returned value is the largest deviation from the input
/// mean over `n_traj` heterodyne outcomes (below 1e-8 when the gains are
/// right, and growing linearly in |Re α|, |Im α| under a deliberately
/// wrong gain sign).
pub fn mean_transport_check(
    c: &Couplings,
    nbar: f64,
    t: f64,
    alpha_in: Complex64,
    n_traj: usize,
    seed: u64,
) -> Result<f64> {
    mean_transport_check_with(c, nbar, t, alpha_in, n_traj, seed, SignVariant::default())
}

pub fn mean_transport_check_with(
    c: &Couplings,
    nbar: f64,
    t: f64,
    alpha_in: Complex64,
    n_traj: usize,
    seed: u64,
    variant: SignVariant,
) -> Result<f64> {
    let evolved = evolve_initial(c, nbar, t)?;
    let coeffs = extract_coefficients(&evolved)?;
    let (gain_x, gain_p) = displacement_gains_for(&coeffs, variant);
    let in_mean = GaussianState::coherent(alpha_in).mean().clone();
    let mix = variant.mix_sign();
    let pf = variant.p_feed_sign();

    let devs: Result<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ (i as u64));
            let (alpha, posterior) = evolved.heterodyne_sample(2, &mut rng)?;
            let m = posterior.mean();
            // E[out X] = m_Xb + (x̄_in + mix·m_X1) + √2 Re α g_x
            let ex = m[2] + mix * m[0] + SQRT_2 * alpha.re * gain_x;
            // E[out P] = m_Pb + pf·(p̄_in - mix·m_P1) + √2 Im α g_p
            let ep = m[3] + pf * (in_mean[1] - mix * m[1]) + SQRT_2 * alpha.im * gain_p
                - in_mean[1];
            Ok(ex.abs().max(ep.abs()))
        })
        .collect();
    Ok(devs?.into_iter().fold(0.0, f64::max))
}

/// Convenience wrapper around one MC comparison point.
#[derive(Copy, Clone, Debug)]
pub struct McComparison {
    pub theta_t: f64,
    pub nbar: f64,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub z_score: f64,
    pub mean_transport_max: f64,
}

/// Run the trajectory estimator at one scaled time and compare it against
/// the closed-form fidelity.
pub fn compare_at(
    c: &Couplings,
    nbar: f64,
    theta_t: f64,
    alpha_in: Complex64,
    n_traj: usize,
    seed: u64,
    variant: SignVariant,
) -> Result<McComparison> {
    let t = theta_t / c.big_theta;
    let analytic =
        crate::protocol::fidelity_coherent(&crate::protocol::coefficients_at(c, nbar, theta_t)?)?;
    let (mc_mean, mc_stderr) = estimate_fidelity_with(c, nbar, t, alpha_in, n_traj, seed, variant)?;
    let mean_transport_max =
        mean_transport_check_with(c, nbar, t, alpha_in, 1000.min(n_traj), seed, variant)?;
    Ok(McComparison {
        theta_t,
        nbar,
        analytic,
        mc_mean,
        mc_stderr,
        z_score: (mc_mean - analytic) / mc_stderr,
        mean_transport_max,
    })
}
