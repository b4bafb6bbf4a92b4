//! The teleportation protocol in closed form: characteristic-function
//! coefficients of the evolved three-mode state, the conditional correlation
//! matrix left after the heterodyne measurement, the Bell/feed-forward
//! input-output map, coherent-state fidelity, the cooling metric and the
//! feed-forward gains.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{evolve_initial, Couplings};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

/// The six real coefficients of the normally ordered characteristic
/// function of the evolved three-mode Gaussian state,
///
/// ```text
/// Φ(μ,ν,ζ) = exp[-A|μ|² - B|ν|² - E|ζ|² + C(μν + μ*ν*)
///                + F(μζ + μ*ζ*) + D(νζ* + ν*ζ)]
/// ```
///
/// with μ, ν, ζ conjugate to `a1`, `b`, `a2`.  In terms of moments:
/// `A = ⟨a1†a1⟩`, `B = ⟨b†b⟩`, `E = ⟨a2†a2⟩`, `C = Re⟨a1 b⟩`,
/// `F = Re⟨a1 a2⟩` and `D = -Re⟨b† a2⟩` (expanding Φ by Wick's theorem,
/// the beam-splitter pairing `νζ* + ν*ζ` enters with `-⟨b†a2⟩`, opposite
/// in sign to the squeezing pairings).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NormalCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

/// Extract the coefficients from a zero-mean three-mode state with mode
/// order `(a1, b, a2)`.
///
/// The reachable family has purely real pairings; the components that must
/// vanish (X-P cross terms, the beam-splitter pairing of `a1` with either
/// optical mode, the squeezing pairing of `b` with `a2`) are checked against
/// `1e-8 (1 + ‖Γ‖_max)` and a violation rejects the state.
pub fn extract_coefficients(state: &GaussianState) -> Result<NormalCoefficients> {
    if state.n_modes() != 3 {
        return Err(Error::WrongModeCount {
            expected: 3,
            got: state.n_modes(),
        });
    }
    let g = state.cov();
    let scale = g.amax();
    let tol = 1e-8 * (1.0 + scale);
    if state.mean().amax() > tol {
        return Err(Error::InvalidParams(
            "coefficient extraction requires a zero-mean state".into(),
        ));
    }

    // components absent from the characteristic-function form
    let residuals = [
        g[(0, 1)],             // Im⟨a1²⟩-type
        g[(2, 3)],
        g[(4, 5)],
        g[(0, 0)] - g[(1, 1)], // Re⟨a1²⟩-type
        g[(2, 2)] - g[(3, 3)],
        g[(4, 4)] - g[(5, 5)],
        g[(0, 3)],             // complex cross-moments
        g[(1, 2)],
        g[(0, 5)],
        g[(1, 4)],
        g[(2, 5)],
        g[(3, 4)],
        g[(0, 2)] + g[(1, 3)], // beam-splitter pairing of (a1, b)
        g[(0, 4)] + g[(1, 5)], // beam-splitter pairing of (a1, a2)
        g[(2, 4)] - g[(3, 5)], // squeezing pairing of (b, a2)
    ];
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if worst > tol {
        return Err(Error::ExtractionResidual(worst));
    }

    let co = NormalCoefficients {
        a: (g[(0, 0)] + g[(1, 1)] - 1.0) / 2.0,
        b: (g[(2, 2)] + g[(3, 3)] - 1.0) / 2.0,
        e: (g[(4, 4)] + g[(5, 5)] - 1.0) / 2.0,
        c: (g[(0, 2)] - g[(1, 3)]) / 2.0,
        f: (g[(0, 4)] - g[(1, 5)]) / 2.0,
        d: -(g[(2, 4)] + g[(3, 5)]) / 2.0,
    };
    let floor = -1e-10 * (1.0 + scale);
    if co.a < floor || co.b < floor || co.e < floor {
        return Err(Error::ExtractionResidual(co.a.min(co.b).min(co.e)));
    }
    Ok(co)
}

/// Rebuild the full 6x6 covariance of the family state described by the
/// coefficients (the inverse of [`extract_coefficients`] on its image).
pub fn rebuild_covariance(co: &NormalCoefficients) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(6, 6);
    for (m, occ) in [(0, co.a), (1, co.b), (2, co.e)] {
        g[(2 * m, 2 * m)] = occ + 0.5;
        g[(2 * m + 1, 2 * m + 1)] = occ + 0.5;
    }
    g[(0, 2)] = co.c;
    g[(2, 0)] = co.c;
    g[(1, 3)] = -co.c;
    g[(3, 1)] = -co.c;
    g[(0, 4)] = co.f;
    g[(4, 0)] = co.f;
    g[(1, 5)] = -co.f;
    g[(5, 1)] = -co.f;
    g[(2, 4)] = -co.d;
    g[(4, 2)] = -co.d;
    g[(3, 5)] = -co.d;
    g[(5, 3)] = -co.d;
    g
}

/// Correlation matrix of the `(a1, b)` pair conditioned on the heterodyne
/// measurement of `a2`:
///
/// diagonal `A + 1/2 - F²/(E+1)` (twice) then `B + 1/2 - D²/(E+1)` (twice),
/// off-diagonal `±(C + FD/(E+1))` in the XX / PP corners.  Matches direct
/// Gaussian conditioning of the evolved state elementwise.
pub fn conditional_matrix(co: &NormalCoefficients) -> DMatrix<f64> {
    let e1 = co.e + 1.0;
    let ga = co.a + 0.5 - co.f * co.f / e1;
    let gb = co.b + 0.5 - co.d * co.d / e1;
    let gc = co.c + co.f * co.d / e1;
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 0)] = ga;
    g[(1, 1)] = ga;
    g[(2, 2)] = gb;
    g[(3, 3)] = gb;
    g[(0, 2)] = gc;
    g[(2, 0)] = gc;
    g[(1, 3)] = -gc;
    g[(3, 1)] = -gc;
    g
}

/// Input-output map of the Bell measurement and feed-forward displacement
/// on second moments: `Γ_out` is the input covariance plus the noise
/// combinations of the conditional matrix,
///
/// ```text
/// Γ11_out = Γ11_in + (Γ11 + 2 Γ13 + Γ33)
/// Γ12_out = Γ12_in + (Γ14 - Γ12 + Γ34 - Γ23)
/// Γ22_out = Γ22_in + (Γ22 - 2 Γ24 + Γ44)
/// ```
pub fn output_covariance(gamma_in: &DMatrix<f64>, gamma_cond: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(gamma_in.nrows(), 2);
    assert_eq!(gamma_cond.nrows(), 4);
    let g = gamma_cond;
    let mut out = DMatrix::zeros(2, 2);
    out[(0, 0)] = gamma_in[(0, 0)] + g[(0, 0)] + 2.0 * g[(0, 2)] + g[(2, 2)];
    let cross = gamma_in[(0, 1)] + g[(0, 3)] - g[(0, 1)] + g[(2, 3)] - g[(1, 2)];
    out[(0, 1)] = cross;
    out[(1, 0)] = cross;
    out[(1, 1)] = gamma_in[(1, 1)] + g[(1, 1)] - 2.0 * g[(1, 3)] + g[(3, 3)];
    out
}

/// Effective thermal occupation of the teleported mirror state,
/// `n_eff = 1 + A + B + 2C - (F - D)²/(E + 1)`.
/// Reduces to `nbar + 1` in the absence of entanglement.
pub fn cooling_neff(co: &NormalCoefficients) -> f64 {
    1.0 + co.a + co.b + 2.0 * co.c - (co.f - co.d) * (co.f - co.d) / (co.e + 1.0)
}

fn fidelity_from_noise(n: f64) -> Result<f64> {
    if !n.is_finite() {
        return Err(Error::NonFinite("fidelity".into()));
    }
    if n < -1.0 {
        return Err(Error::UnphysicalBracket(n));
    }
    Ok((1.0 + n).recip().clamp(0.0, 1.0))
}

/// Coherent-state teleportation fidelity,
/// `F = {1 + [1 + A + B + 2C - (F - D)²/(E + 1)]}⁻¹`.
///
/// Equal to `1/(1 + n_eff)`; the classical bound without shared
/// entanglement is `F = 1/2`, reached exactly at zero coefficients.  The
/// bracket is the added-noise variance and is nonnegative for physical
/// states; a bracket below -1 is rejected, a slightly negative one clamps
/// the result to `[0, 1]`.
pub fn fidelity_coherent(co: &NormalCoefficients) -> Result<f64> {
    fidelity_from_noise(cooling_neff(co))
}

/// Fidelity when no heterodyne measurement is made on the anti-Stokes
/// mode: the `(a1, b)` pair is the bare partial trace, the conditioning
/// terms drop out, `F = 1/(2 + A + B + 2C)`.  Pointwise never larger than
/// [`fidelity_coherent`].
pub fn fidelity_no_heterodyne(co: &NormalCoefficients) -> Result<f64> {
    fidelity_from_noise(1.0 + co.a + co.b + 2.0 * co.c)
}

/// Sign-convention selector for the measurement/feed-forward chain.
///
/// * `mix_flip` — measure `X` on the `(in - a1)/√2` port and `P` on the
///   `(in + a1)/√2` port instead of the default `X₊ = (X_in + X_a1)/√2`,
///   `P₋ = (P_in - P_a1)/√2` pair.
/// * `p_feed_flip` — sign of the momentum feed-forward: the default
///   convention displaces `P_b` by `-√2 P₋`; flipped, by `+√2 P₋`.
/// * `gain_flip` — sign of the heterodyne-gain pair applied to
///   `(√2 Re α, √2 Im α)`.
///
/// `SignVariant::default()` (id 6: flipped momentum feed-forward and
/// flipped gains, printed mixing) is the unique calibration in this set
/// under which the classical feed-forward transports the input mean
/// exactly and the trajectory ensemble reproduces the closed-form
/// fidelity; the remaining ids serve as negative controls.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SignVariant {
    pub mix_flip: bool,
    pub p_feed_flip: bool,
    pub gain_flip: bool,
}

impl Default for SignVariant {
    fn default() -> Self {
        SignVariant {
            mix_flip: false,
            p_feed_flip: true,
            gain_flip: true,
        }
    }
}

impl SignVariant {
    pub fn from_id(id: u8) -> Result<Self> {
        if id > 7 {
            return Err(Error::InvalidParams(format!(
                "sign variant id must be in 0..=7, got {id}"
            )));
        }
        Ok(SignVariant {
            mix_flip: id & 1 != 0,
            p_feed_flip: id & 2 != 0,
            gain_flip: id & 4 != 0,
        })
    }

    pub fn id(&self) -> u8 {
        (self.mix_flip as u8) | ((self.p_feed_flip as u8) << 1) | ((self.gain_flip as u8) << 2)
    }

    /// +1 for the default `X₊/P₋` mixing, -1 for the swapped ports.
    pub fn mix_sign(&self) -> f64 {
        if self.mix_flip {
            -1.0
        } else {
            1.0
        }
    }

    /// Sign multiplying `√2 P` of the measured momentum port in Bob's
    /// displacement (-1 in the printed convention).
    pub fn p_feed_sign(&self) -> f64 {
        if self.p_feed_flip {
            1.0
        } else {
            -1.0
        }
    }
}

/// Heterodyne feed-forward gains for the default sign variant.  Bob's
/// displacement adds `g_x √2 Re α` to `X_b` and `g_p √2 Im α` to `P_b`;
/// the gain pair derives from `(F - D)/(E + 1)` and for the calibrated
/// variant both components equal `-(F - D)/(E + 1)`, which cancels the
/// heterodyne back-action on the output mean exactly.
pub fn displacement_gains(co: &NormalCoefficients) -> (f64, f64) {
    displacement_gains_for(co, SignVariant::default())
}

/// Gains for an explicit sign variant.
pub fn displacement_gains_for(co: &NormalCoefficients, variant: SignVariant) -> (f64, f64) {
    let e1 = co.e + 1.0;
    let base = if variant.mix_flip {
        -(co.f + co.d) / e1
    } else {
        (co.f - co.d) / e1
    };
    let g = if variant.gain_flip { -base } else { base };
    (g, g)
}

/// One point of the fidelity curve.
#[derive(Copy, Clone, Debug)]
pub struct ProtocolResult {
    /// Scaled time Θt.
    pub theta_t: f64,
    pub fidelity: f64,
    pub fidelity_no_het: f64,
    pub n_eff: f64,
    pub gain_x: f64,
    pub gain_p: f64,
}

/// Evolve, extract and evaluate the closed-form protocol quantities at one
/// scaled time Θt.
pub fn coefficients_at(c: &Couplings, nbar: f64, theta_t: f64) -> Result<NormalCoefficients> {
    if !c.big_theta.is_finite() || c.big_theta <= 0.0 {
        return Err(Error::InvalidParams(
            "scaled-time evaluation requires theta > chi".into(),
        ));
    }
    let state = evolve_initial(c, nbar, theta_t / c.big_theta)?;
    extract_coefficients(&state)
}

/// Fidelity, no-heterodyne fidelity, cooling metric and gains at one Θt.
pub fn protocol_point(c: &Couplings, nbar: f64, theta_t: f64) -> Result<ProtocolResult> {
    let co = coefficients_at(c, nbar, theta_t)?;
    let (gain_x, gain_p) = displacement_gains(&co);
    Ok(ProtocolResult {
        theta_t,
        fidelity: fidelity_coherent(&co)?,
        fidelity_no_het: fidelity_no_heterodyne(&co)?,
        n_eff: cooling_neff(&co),
        gain_x,
        gain_p,
    })
}

/// Evaluate the protocol over a grid of scaled times (one result per grid
/// point, in grid order; evaluation parallelizes over points).
pub fn fidelity_curve(c: &Couplings, nbar: f64, theta_t_grid: &[f64]) -> Result<Vec<ProtocolResult>> {
    theta_t_grid
        .par_iter()
        .map(|&tt| protocol_point(c, nbar, tt))
        .collect()
}

/// Refined summary of one fidelity curve over a period: the maximum, its
/// location, and the measure of the `F > 1/2` region.
#[derive(Clone, Debug)]
pub struct FidelitySummary {
    pub nbar: f64,
    pub f_max: f64,
    pub theta_t_at_max: f64,
    pub min_n_eff: f64,
    pub f_max_no_het: f64,
    /// Total Θt-measure of `{F > 1/2}` within `(0, 2π]`.
    pub window_measure: f64,
    /// The maximal intervals making up that region.
    pub windows: Vec<(f64, f64)>,
}

/// Sample points that resolve the fidelity window.
///
/// At realistic parameters `χ/Θ ~ 1e3` and the useful window hugs
/// `Θt = 2π` with width of order `Θ/χ`, far below the resolution of any
/// reasonable uniform grid, so both period ends are refined
/// logarithmically.
fn refined_grid() -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut pts: Vec<f64> = (0..=2000).map(|i| tau * i as f64 / 2000.0).collect();
    let (lo, hi) = ((1e-10f64).ln(), std::f64::consts::PI.ln());
    for i in 0..=3000 {
        let eps = (lo + (hi - lo) * i as f64 / 3000.0).exp();
        pts.push(tau - eps);
        pts.push(eps);
    }
    pts.retain(|&x| (0.0..=tau).contains(&x));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..120 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    let xm = 0.5 * (lo + hi);
    Ok((xm, f(xm)?))
}

fn bisect_crossing(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    above_at_lo: bool,
) -> Result<f64> {
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? > 0.5) == above_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Compute the refined curve summary for one `nbar`.
pub fn summarize_fidelity(c: &Couplings, nbar: f64) -> Result<FidelitySummary> {
    let grid = refined_grid();
    let fid = |tt: f64| protocol_point(c, nbar, tt).map(|r| r.fidelity);
    let values: Result<Vec<(f64, f64)>> = grid
        .par_iter()
        .map(|&tt| fid(tt).map(|f| (tt, f)))
        .collect();
    let values = values?;

    // refine the maximum around the best sample (exclude theta_t = 0)
    let (best_idx, _) = values
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .expect("nonempty grid");
    let lo = values[best_idx.saturating_sub(1)].0;
    let hi = values[(best_idx + 1).min(values.len() - 1)].0;
    let (theta_t_at_max, f_max) = golden_max(fid, lo, hi)?;
    let min_n_eff = protocol_point(c, nbar, theta_t_at_max)?.n_eff;

    // no-heterodyne maximum via the same refinement
    let fid_nh = |tt: f64| protocol_point(c, nbar, tt).map(|r| r.fidelity_no_het);
    let nh_values: Result<Vec<f64>> = grid.par_iter().map(|&tt| fid_nh(tt)).collect();
    let nh_values = nh_values?;
    let (nh_idx, _) = nh_values
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let nh_lo = grid[nh_idx.saturating_sub(1)];
    let nh_hi = grid[(nh_idx + 1).min(grid.len() - 1)];
    let (_, f_max_no_het) = golden_max(fid_nh, nh_lo, nh_hi)?;

    // {F > 1/2} region: walk the samples, bisect every sign change
    let mut windows = Vec::new();
    let mut open: Option<f64> = None;
    for w in values.windows(2) {
        let ((t0, f0), (t1, _f1)) = (w[0], w[1]);
        let a0 = f0 > 0.5;
        let a1 = w[1].1 > 0.5;
        if a0 == a1 {
            continue;
        }
        let edge = bisect_crossing(fid, t0, t1, a0)?;
        if a1 {
            open = Some(edge);
        } else if let Some(start) = open.take() {
            windows.push((start, edge));
        } else {
            // curve was already above 1/2 at the first sample
            windows.push((values[0].0, edge));
        }
    }
    if let Some(start) = open {
        windows.push((start, values.last().unwrap().0));
    }
    let window_measure = windows.iter().map(|(a, b)| b - a).sum();

    Ok(FidelitySummary {
        nbar,
        f_max,
        theta_t_at_max,
        min_n_eff,
        f_max_no_het,
        window_measure,
        windows,
    })
}
