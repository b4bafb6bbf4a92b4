//! Implementations of the `omt` subcommands.  Every command prints a short
//! human summary to stdout, writes a tidy CSV (one observation per row,
//! fixed 17-significant-digit formatting, `\n` line endings, byte-for-byte
//! deterministic for a given configuration and seed) and optionally emits a
//! single JSON object with the scalar results.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::config::{Command, ConfigError, RunConfig};
use crate::dynamics::{couplings_from_params, Couplings};
use crate::error::Error;
use crate::protocol::{fidelity_curve, summarize_fidelity, FidelitySummary};
use crate::readout::{dominance_condition, printed_formula_residual, readout_coefficients_with_sigma};
use crate::trajectories::compare_at;

/// Errors of the command layer, split by exit code: configuration and I/O
/// problems exit 2, numerical-contract violations exit 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn write_out(cmd: Command, cfg: &RunConfig, content: &str) -> Result<PathBuf, CliError> {
    let path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(cmd.default_out()));
    std::fs::write(&path, content.as_bytes())?;
    Ok(path)
}

fn json_object(fields: &[(String, String)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("\"{k}\":{v}"))
        .collect();
    format!("{{{}}}", body.join(","))
}

fn json_map(pairs: &[(f64, f64)]) -> String {
    let body: Vec<String> = pairs
        .iter()
        .map(|(k, v)| format!("\"{k}\":{}", fmt(*v)))
        .collect();
    format!("{{{}}}", body.join(","))
}

fn base_json(c: &Couplings) -> Vec<(String, String)> {
    vec![
        ("chi_rad_s".into(), fmt(c.chi)),
        ("theta_rad_s".into(), fmt(c.theta)),
        ("big_theta_rad_s".into(), fmt(c.big_theta)),
        ("dominance_ratio".into(), fmt(dominance_condition(c))),
    ]
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Couplings => cmd_couplings(cfg),
        Command::FidelitySweep => cmd_fidelity_sweep(cfg),
        Command::Cooling => cmd_cooling(cfg),
        Command::MonteCarlo => cmd_montecarlo(cfg),
        Command::ReadoutCheck => cmd_readout_check(cfg),
        Command::Sensitivity => cmd_sensitivity(cfg),
    }
}

fn derive_couplings(cfg: &RunConfig) -> Result<Couplings, CliError> {
    Ok(couplings_from_params(&cfg.params)?)
}

fn cmd_couplings(cfg: &RunConfig) -> Result<(), CliError> {
    let c = derive_couplings(cfg)?;
    let ratio_minus_1 = c.theta / c.chi - 1.0;
    println!("coupling constants (rad/s)");
    println!("  chi          = {:.6e}", c.chi);
    println!("  theta        = {:.6e}", c.theta);
    println!("  Theta        = {:.6e}", c.big_theta);
    println!("  theta/chi - 1 = {:.6e}", ratio_minus_1);

    let mut csv = String::from("chi_rad_s,theta_rad_s,big_theta_rad_s,theta_over_chi_minus_1\n");
    let _ = writeln!(
        csv,
        "{},{},{},{}",
        fmt(c.chi),
        fmt(c.theta),
        fmt(c.big_theta),
        fmt(ratio_minus_1)
    );
    let path = write_out(Command::Couplings, cfg, &csv)?;
    println!("wrote {}", path.display());

    if cfg.json_summary {
        println!("{}", json_object(&base_json(&c)));
    }
    Ok(())
}

fn curve_summaries(c: &Couplings, cfg: &RunConfig) -> Result<Vec<FidelitySummary>, CliError> {
    cfg.nbars
        .iter()
        .map(|&nbar| Ok(summarize_fidelity(c, nbar)?))
        .collect()
}

fn cmd_fidelity_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let c = derive_couplings(cfg)?;
    let grid = cfg.grid.values();

    let mut csv = String::from("theta_t,nbar,fidelity,fidelity_no_het,n_eff\n");
    for &nbar in &cfg.nbars {
        let curve = fidelity_curve(&c, nbar, &grid)?;
        for r in &curve {
            if !r.fidelity.is_finite() || !r.fidelity_no_het.is_finite() {
                return Err(Error::NonFinite(format!(
                    "fidelity at theta_t = {}, nbar = {}",
                    r.theta_t, nbar
                ))
                .into());
            }
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt(r.theta_t),
                fmt(nbar),
                fmt(r.fidelity),
                fmt(r.fidelity_no_het),
                fmt(r.n_eff)
            );
        }
    }
    let path = write_out(Command::FidelitySweep, cfg, &csv)?;

    let summaries = curve_summaries(&c, cfg)?;
    println!("fidelity sweep over theta_t in [{}, {}] ({} points per curve)",
        cfg.grid.start, cfg.grid.stop, cfg.grid.points);
    for s in &summaries {
        println!(
            "  nbar = {:>6}: F_max = {:.4} at theta_t = {:.9}, window |F > 1/2| = {:.4e}, \
             F_max(no het) = {:.4}",
            s.nbar, s.f_max, s.theta_t_at_max, s.window_measure, s.f_max_no_het
        );
    }
    let f_maxes: Vec<f64> = summaries.iter().map(|s| s.f_max).collect();
    let spread = f_maxes.iter().cloned().fold(f64::MIN, f64::max)
        - f_maxes.iter().cloned().fold(f64::MAX, f64::min);
    println!("  spread of F_max across nbar = {:.2e}", spread);
    println!("wrote {}", path.display());

    if cfg.json_summary {
        let mut fields = base_json(&c);
        fields.push((
            "f_max".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.f_max)).collect::<Vec<_>>()),
        ));
        fields.push((
            "theta_t_argmax".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.theta_t_at_max)).collect::<Vec<_>>()),
        ));
        fields.push((
            "window_measure".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.window_measure)).collect::<Vec<_>>()),
        ));
        fields.push((
            "f_max_no_het".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.f_max_no_het)).collect::<Vec<_>>()),
        ));
        fields.push((
            "min_n_eff".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.min_n_eff)).collect::<Vec<_>>()),
        ));
        println!("{}", json_object(&fields));
    }
    Ok(())
}

fn cmd_cooling(cfg: &RunConfig) -> Result<(), CliError> {
    let c = derive_couplings(cfg)?;
    let grid = cfg.grid.values();

    let mut csv = String::from("theta_t,nbar,n_eff\n");
    for &nbar in &cfg.nbars {
        let curve = fidelity_curve(&c, nbar, &grid)?;
        for r in &curve {
            if !r.n_eff.is_finite() {
                return Err(Error::NonFinite(format!(
                    "n_eff at theta_t = {}, nbar = {}",
                    r.theta_t, nbar
                ))
                .into());
            }
            let _ = writeln!(csv, "{},{},{}", fmt(r.theta_t), fmt(nbar), fmt(r.n_eff));
        }
    }
    let path = write_out(Command::Cooling, cfg, &csv)?;

    let summaries = curve_summaries(&c, cfg)?;
    println!("effective occupation of the teleported mirror state");
    for s in &summaries {
        println!(
            "  nbar = {:>6}: min n_eff = {:.4} at theta_t = {:.9} (1/F_max - 1 = {:.4})",
            s.nbar,
            s.min_n_eff,
            s.theta_t_at_max,
            1.0 / s.f_max - 1.0
        );
    }
    println!("wrote {}", path.display());

    if cfg.json_summary {
        let mut fields = base_json(&c);
        fields.push((
            "min_n_eff".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.min_n_eff)).collect::<Vec<_>>()),
        ));
        fields.push((
            "f_max".into(),
            json_map(&summaries.iter().map(|s| (s.nbar, s.f_max)).collect::<Vec<_>>()),
        ));
        println!("{}", json_object(&fields));
    }
    Ok(())
}

/// Fractions of the max-to-period distance used to place the Monte-Carlo
/// comparison points inside the useful window.
const MC_FRACTIONS: [f64; 10] = [0.35, 0.55, 0.75, 1.0, 1.3, 1.6, 0.45, 0.9, 1.15, 1.45];

fn cmd_montecarlo(cfg: &RunConfig) -> Result<(), CliError> {
    let c = derive_couplings(cfg)?;
    let tau = std::f64::consts::TAU;
    let summaries = curve_summaries(&c, cfg)?;

    let mut csv = String::from(
        "point_index,theta_t,nbar,analytic_fidelity,mc_mean,mc_stderr,z_score,mean_transport_max\n",
    );
    let mut max_abs_z: f64 = 0.0;
    let mut max_transport: f64 = 0.0;
    println!(
        "monte-carlo comparison: {} trajectories per point, seed {}, alpha_in = {}",
        cfg.n_traj, cfg.seed, cfg.alpha_in
    );
    for (j, &frac) in MC_FRACTIONS.iter().enumerate() {
        let s = &summaries[j % summaries.len()];
        let theta_t = tau - frac * (tau - s.theta_t_at_max);
        let seed = cfg.seed ^ ((j as u64 + 1) << 32);
        let cmp = compare_at(
            &c,
            s.nbar,
            theta_t,
            cfg.alpha_in,
            cfg.n_traj,
            seed,
            cfg.sign_variant,
        )?;
        max_abs_z = max_abs_z.max(cmp.z_score.abs());
        max_transport = max_transport.max(cmp.mean_transport_max);
        println!(
            "  point {j}: nbar = {:>6}, theta_t = {:.9}, analytic = {:.5}, mc = {:.5} ± {:.5}, \
             z = {:+.2}",
            s.nbar, theta_t, cmp.analytic, cmp.mc_mean, cmp.mc_stderr, cmp.z_score
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            j,
            fmt(cmp.theta_t),
            fmt(cmp.nbar),
            fmt(cmp.analytic),
            fmt(cmp.mc_mean),
            fmt(cmp.mc_stderr),
            fmt(cmp.z_score),
            fmt(cmp.mean_transport_max)
        );
    }
    let path = write_out(Command::MonteCarlo, cfg, &csv)?;
    println!("  max |z| = {:.2}, max mean-transport deviation = {:.2e}", max_abs_z, max_transport);
    println!("wrote {}", path.display());

    if cfg.json_summary {
        let mut fields = base_json(&c);
        fields.push(("max_abs_z".into(), fmt(max_abs_z)));
        fields.push(("max_mean_transport".into(), fmt(max_transport)));
        fields.push(("n_traj".into(), format!("{}", cfg.n_traj)));
        println!("{}", json_object(&fields));
    }
    Ok(())
}

fn cmd_readout_check(cfg: &RunConfig) -> Result<(), CliError> {
    let c = derive_couplings(cfg)?;
    let ratio = dominance_condition(&c);
    let grid = cfg.grid.values();

    let mut csv = String::from(
        "t_s,theta_t,c_b,c_a1,c_a2,printed_res_b,printed_res_a1,printed_res_a2,dominance_ratio\n",
    );
    for &tt in &grid {
        let t = tt / c.big_theta;
        let r = readout_coefficients_with_sigma(&c, t, cfg.readout_sigma)?;
        let res = printed_formula_residual(&c, t, cfg.readout_sigma)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt(t),
            fmt(tt),
            fmt(r.c_b),
            fmt(r.c_a1),
            fmt(r.c_a2),
            fmt(res.c_b),
            fmt(res.c_a1),
            fmt(res.c_a2),
            fmt(ratio)
        );
    }
    let path = write_out(Command::ReadoutCheck, cfg, &csv)?;

    let r0 = readout_coefficients_with_sigma(&c, 0.0, cfg.readout_sigma)?;
    let res0 = printed_formula_residual(&c, 0.0, cfg.readout_sigma)?;
    println!("combined-sideband readout check (sigma = {})", cfg.readout_sigma);
    println!("  dominance ratio theta(theta-chi)/[Theta(theta+chi)] = {:.4e}", ratio);
    println!(
        "  t = 0 derived coefficients: (c_b, c_a1, c_a2) = ({:.3e}, {:.6}, {:.6})",
        r0.c_b, r0.c_a1, r0.c_a2
    );
    println!(
        "  t = 0 residuals of the printed closed form: ({:.3e}, {:.3e}, {:.3e}) — reported, \
         not asserted; the a2 residual documents a sign defect in the printed solution",
        res0.c_b, res0.c_a1, res0.c_a2
    );
    println!("wrote {}", path.display());

    if cfg.json_summary {
        let mut fields = base_json(&c);
        fields.push(("readout_sigma".into(), fmt(cfg.readout_sigma)));
        fields.push(("printed_res_a2_at_t0".into(), fmt(res0.c_a2)));
        println!("{}", json_object(&fields));
    }
    Ok(())
}

fn cmd_sensitivity(cfg: &RunConfig) -> Result<(), CliError> {
    let c = derive_couplings(cfg)?;
    let delta = cfg.fd_delta;

    // central finite difference of ln(Theta t) against ln(power) at fixed t
    let mut p_plus = cfg.params;
    p_plus.power_w *= 1.0 + delta;
    let mut p_minus = cfg.params;
    p_minus.power_w *= 1.0 - delta;
    let c_plus = couplings_from_params(&p_plus)?;
    let c_minus = couplings_from_params(&p_minus)?;
    let slope = (c_plus.big_theta.ln() - c_minus.big_theta.ln())
        / ((1.0 + delta).ln() - (1.0 - delta).ln());
    // forward difference: relative change of Theta t per relative power change
    let fwd_rel = (c_plus.big_theta - c.big_theta) / c.big_theta;

    // The quoted intensity-noise relation reads dP/P = d(Theta t)/(2 Theta t),
    // while Theta ∝ √P gives d(Theta t)/(Theta t) = dP/(2P).  Both are
    // evaluated and the factor between them reported, not adjudicated.
    let quoted_dp_over_p = fwd_rel / 2.0;
    let derived_dp_over_p = 2.0 * fwd_rel;
    let discrepancy_factor = derived_dp_over_p / quoted_dp_over_p;

    let summaries = curve_summaries(&c, cfg)?;

    println!("sensitivity and timing report");
    println!("  d ln(Theta t) / d ln(power) = {:.9}  (sqrt scaling: 0.5)", slope);
    println!(
        "  forward difference: dP/P = {:.1e}  ->  d(Theta t)/(Theta t) = {:.9e}",
        delta, fwd_rel
    );
    println!(
        "  quoted relation dP/P = d(Theta t)/(2 Theta t) implies dP/P = {:.3e}; the sqrt \
         scaling gives dP/P = {:.3e} (factor {:.1} apart; reported, not asserted)",
        quoted_dp_over_p, derived_dp_over_p, discrepancy_factor
    );

    let mut csv = String::from("quantity,value\n");
    let _ = writeln!(csv, "dln_theta_t_dln_power,{}", fmt(slope));
    let _ = writeln!(csv, "fd_delta,{}", fmt(delta));
    let _ = writeln!(csv, "forward_rel_dtheta_t,{}", fmt(fwd_rel));
    let _ = writeln!(csv, "quoted_relation_dp_over_p,{}", fmt(quoted_dp_over_p));
    let _ = writeln!(csv, "sqrt_scaling_dp_over_p,{}", fmt(derived_dp_over_p));
    let _ = writeln!(csv, "relation_discrepancy_factor,{}", fmt(discrepancy_factor));

    for s in &summaries {
        let budget = 1.0 / (cfg.params.gamma_m * s.nbar);
        let window_s = s.window_measure / c.big_theta;
        let pulse_s = s.theta_t_at_max / c.big_theta;
        if budget.is_finite() {
            println!(
                "  nbar = {:>6}: decoherence budget 1/(gamma_m nbar) = {:.3e} s, \
                 window duration = {:.3e} s, pulse duration = {:.3e} s{}",
                s.nbar,
                budget,
                window_s,
                pulse_s,
                if budget < window_s {
                    "  [budget shorter than the window]"
                } else {
                    ""
                }
            );
        } else {
            println!(
                "  nbar = {:>6}: no thermal decoherence bound; window duration = {:.3e} s, \
                 pulse duration = {:.3e} s",
                s.nbar, window_s, pulse_s
            );
        }
        let _ = writeln!(csv, "decoherence_budget_s_nbar_{},{}", s.nbar, fmt(budget));
        let _ = writeln!(csv, "window_duration_s_nbar_{},{}", s.nbar, fmt(window_s));
        let _ = writeln!(csv, "pulse_duration_s_nbar_{},{}", s.nbar, fmt(pulse_s));
    }
    let path = write_out(Command::Sensitivity, cfg, &csv)?;
    println!("wrote {}", path.display());

    if cfg.json_summary {
        let mut fields = base_json(&c);
        fields.push(("dln_theta_t_dln_power".into(), fmt(slope)));
        fields.push(("relation_discrepancy_factor".into(), fmt(discrepancy_factor)));
        let budgets: Vec<(f64, f64)> = summaries
            .iter()
            .filter(|s| s.nbar > 0.0)
            .map(|s| (s.nbar, 1.0 / (cfg.params.gamma_m * s.nbar)))
            .collect();
        fields.push(("decoherence_budget_s".into(), json_map(&budgets)));
        println!("{}", json_object(&fields));
    }
    Ok(())
}
