//! Run configuration: a flat `key = value` text format with `#` comments,
//! every key also available as a command-line flag that overrides the file.
//! The built-in defaults reproduce the reference parameter set.

use num_complex::Complex64;
use std::path::PathBuf;
use thiserror::Error;

use crate::dynamics::{nbar_from_temperature, PhysicalParams};
use crate::protocol::SignVariant;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

type CfgResult<T> = std::result::Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Scaled-time grid `start:stop:points` (inclusive endpoints).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }

    fn parse(s: &str) -> CfgResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid must be START:STOP:POINTS, got '{s}'")));
        }
        let start = parse_f64("grid start", parts[0])?;
        let stop = parse_f64("grid stop", parts[1])?;
        let points: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("grid points must be an integer, got '{}'", parts[2])))?;
        if points < 2 {
            return Err(bad("grid needs at least 2 points"));
        }
        if stop <= start || stop.is_nan() || start.is_nan() {
            return Err(bad("grid stop must exceed start"));
        }
        Ok(GridSpec { start, stop, points })
    }
}

fn parse_f64(name: &str, s: &str) -> CfgResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(format!("{name} must be a number, got '{s}'")))
}

fn parse_complex(s: &str) -> CfgResult<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse_f64("alpha_in", re)?, 0.0)),
        [re, im] => Ok(Complex64::new(
            parse_f64("alpha_in re", re)?,
            parse_f64("alpha_in im", im)?,
        )),
        _ => Err(bad(format!("alpha_in must be 'RE' or 'RE,IM', got '{s}'"))),
    }
}

fn parse_nbar_list(s: &str) -> CfgResult<Vec<f64>> {
    let nbars: CfgResult<Vec<f64>> = s.split(',').map(|p| parse_f64("nbar", p)).collect();
    let nbars = nbars?;
    if nbars.is_empty() {
        return Err(bad("nbar list must be nonempty"));
    }
    for &n in &nbars {
        if n.is_nan() || n < 0.0 {
            return Err(bad(format!("nbar entries must be nonnegative, got {n}")));
        }
    }
    Ok(nbars)
}

/// The CLI subcommands.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Couplings,
    FidelitySweep,
    Cooling,
    MonteCarlo,
    ReadoutCheck,
    Sensitivity,
}

impl Command {
    fn parse(s: &str) -> CfgResult<Self> {
        match s {
            "couplings" => Ok(Command::Couplings),
            "fidelity-sweep" => Ok(Command::FidelitySweep),
            "cooling" => Ok(Command::Cooling),
            "montecarlo" => Ok(Command::MonteCarlo),
            "readout-check" => Ok(Command::ReadoutCheck),
            "sensitivity" => Ok(Command::Sensitivity),
            _ => Err(bad(format!("unknown command '{s}'; {USAGE}"))),
        }
    }

    pub fn default_out(&self) -> &'static str {
        match self {
            Command::Couplings => "couplings.csv",
            Command::FidelitySweep => "fidelity_sweep.csv",
            Command::Cooling => "cooling.csv",
            Command::MonteCarlo => "montecarlo.csv",
            Command::ReadoutCheck => "readout_check.csv",
            Command::Sensitivity => "sensitivity.csv",
        }
    }
}

pub const USAGE: &str = "usage: omt <couplings|fidelity-sweep|cooling|montecarlo|readout-check|sensitivity> \
[--config PATH] [--out PATH] [--nbar LIST] [--grid START:STOP:POINTS] [--seed N] \
[--n-traj N] [--alpha-in RE,IM] [--sign-variant 0..7] [--readout-sigma +1|-1] \
[--temperature-k T] [--fd-delta D] [--json-summary] [physical parameter flags, e.g. --power-w 10]";

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub nbars: Vec<f64>,
    pub grid: GridSpec,
    pub n_traj: usize,
    pub seed: u64,
    pub alpha_in: Complex64,
    pub out: Option<PathBuf>,
    pub sign_variant: SignVariant,
    pub readout_sigma: f64,
    pub fd_delta: f64,
    pub json_summary: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: PhysicalParams::default(),
            nbars: vec![0.0, 1.0, 10.0, 1000.0],
            grid: GridSpec {
                start: 0.0,
                stop: std::f64::consts::TAU,
                points: 2001,
            },
            n_traj: 10_000,
            seed: 20_260_809,
            alpha_in: Complex64::new(1.0, 0.0),
            out: None,
            sign_variant: SignVariant::default(),
            readout_sigma: 1.0,
            fd_delta: 1e-6,
            json_summary: false,
        }
    }
}

impl RunConfig {
    fn apply(&mut self, key: &str, value: &str, thermal: &mut ThermalSpec) -> CfgResult<()> {
        match key {
            "power_w" | "power" => self.params.power_w = parse_f64(key, value)?,
            "omega0_rad_s" => self.params.omega0 = parse_f64(key, value)?,
            "omega_m_rad_s" => self.params.omega_m = parse_f64(key, value)?,
            "phi0_rad" => self.params.phi0 = parse_f64(key, value)?,
            "mass_kg" => self.params.mass_kg = parse_f64(key, value)?,
            "dnu_det_rad_s" => self.params.dnu_det = parse_f64(key, value)?,
            "dnu_mode_rad_s" => self.params.dnu_mode = parse_f64(key, value)?,
            "gamma_m_hz" => self.params.gamma_m = parse_f64(key, value)?,
            "nbar" => thermal.set_nbar(parse_nbar_list(value)?)?,
            "temperature_k" => thermal.set_temperature(parse_f64(key, value)?)?,
            "grid" => self.grid = GridSpec::parse(value)?,
            "n_traj" => {
                self.n_traj = value
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("n_traj must be an integer, got '{value}'")))?
            }
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("seed must be an unsigned integer, got '{value}'")))?
            }
            "alpha_in" => self.alpha_in = parse_complex(value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "sign_variant" => {
                let id: u8 = value
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("sign_variant must be 0..=7, got '{value}'")))?;
                self.sign_variant =
                    SignVariant::from_id(id).map_err(|e| bad(e.to_string()))?;
            }
            "readout_sigma" => {
                let v = parse_f64(key, value)?;
                if v != 1.0 && v != -1.0 {
                    return Err(bad(format!("readout_sigma must be +1 or -1, got {v}")));
                }
                self.readout_sigma = v;
            }
            "fd_delta" => {
                let v = parse_f64(key, value)?;
                if v.is_nan() || v <= 0.0 || v >= 1.0 {
                    return Err(bad(format!("fd_delta must be in (0, 1), got {v}")));
                }
                self.fd_delta = v;
            }
            other => return Err(bad(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    fn finish(mut self, thermal: ThermalSpec) -> CfgResult<RunConfig> {
        match thermal {
            ThermalSpec::Unset => {}
            ThermalSpec::Nbar(list) => self.nbars = list,
            ThermalSpec::Temperature(t) => {
                self.nbars = vec![nbar_from_temperature(t, self.params.omega_m)
                    .map_err(|e| bad(e.to_string()))?];
            }
        }
        self.params.validate().map_err(|e| bad(e.to_string()))?;
        Ok(self)
    }
}

/// Either the thermal occupation list or a temperature; setting both is an
/// error.
enum ThermalSpec {
    Unset,
    Nbar(Vec<f64>),
    Temperature(f64),
}

impl ThermalSpec {
    fn set_nbar(&mut self, list: Vec<f64>) -> CfgResult<()> {
        if matches!(self, ThermalSpec::Temperature(_)) {
            return Err(bad("specify either nbar or temperature_k, not both"));
        }
        *self = ThermalSpec::Nbar(list);
        Ok(())
    }

    fn set_temperature(&mut self, t: f64) -> CfgResult<()> {
        if matches!(self, ThermalSpec::Nbar(_)) {
            return Err(bad("specify either nbar or temperature_k, not both"));
        }
        *self = ThermalSpec::Temperature(t);
        Ok(())
    }
}

/// Parse a configuration file: `key = value` lines, `#` comments.
fn parse_config_text(text: &str, cfg: &mut RunConfig, thermal: &mut ThermalSpec) -> CfgResult<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected 'key = value'", lineno + 1)))?;
        cfg.apply(key.trim(), value.trim(), thermal)
            .map_err(|e| bad(format!("line {}: {}", lineno + 1, e)))?;
    }
    Ok(())
}

/// Parse the command line: subcommand first, then flags.  `--config PATH`
/// loads the file before the remaining flags are applied, so flags override
/// file entries, which override the defaults.
pub fn load(args: &[String]) -> CfgResult<(Command, RunConfig)> {
    if args.is_empty() {
        return Err(bad(format!("missing command; {USAGE}")));
    }
    let command = Command::parse(&args[0])?;
    let mut cfg = RunConfig::default();
    let mut thermal = ThermalSpec::Unset;

    // collect flag pairs, extracting --config first
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut config_path: Option<PathBuf> = None;
    let mut json_summary = false;
    let mut i = 1;
    while i < args.len() {
        let arg = &args[i];
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(bad(format!("expected a --flag, got '{arg}'; {USAGE}")));
        };
        let key = flag.replace('-', "_");
        if key == "json_summary" {
            json_summary = true;
            i += 1;
            continue;
        }
        let value = args
            .get(i + 1)
            .ok_or_else(|| bad(format!("flag --{flag} needs a value")))?;
        if key == "config" {
            config_path = Some(PathBuf::from(value));
        } else {
            pairs.push((key, value.clone()));
        }
        i += 2;
    }

    if let Some(path) = config_path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        parse_config_text(&text, &mut cfg, &mut thermal)?;
    }
    for (key, value) in &pairs {
        cfg.apply(key, value, &mut thermal)?;
    }
    cfg.json_summary = json_summary;
    let cfg = cfg.finish(thermal)?;
    Ok((command, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_args(args: &[&str]) -> CfgResult<(Command, RunConfig)> {
        let v: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        load(&v)
    }

    #[test]
    fn defaults_are_the_reference_set() {
        let (_, cfg) = load_args(&["couplings"]).unwrap();
        assert_eq!(cfg.params.power_w, 10.0);
        assert_eq!(cfg.params.omega0, 2e15);
        assert_eq!(cfg.params.omega_m, 5e8);
        assert_eq!(cfg.params.dnu_det, 1e7);
        assert_eq!(cfg.params.dnu_mode, 1e3);
        assert_eq!(cfg.params.mass_kg, 1e-10);
        assert_eq!(cfg.nbars, vec![0.0, 1.0, 10.0, 1000.0]);
        assert_eq!(cfg.grid.points, 2001);
        assert_eq!(cfg.sign_variant.id(), 6);
    }

    #[test]
    fn flags_override_defaults() {
        let (_, cfg) =
            load_args(&["fidelity-sweep", "--power-w", "40", "--nbar", "0,2", "--seed", "9"])
                .unwrap();
        assert_eq!(cfg.params.power_w, 40.0);
        assert_eq!(cfg.nbars, vec![0.0, 2.0]);
        assert_eq!(cfg.seed, 9);
        // --power alias
        let (_, cfg2) = load_args(&["couplings", "--power", "40"]).unwrap();
        assert_eq!(cfg2.params.power_w, 40.0);
    }

    #[test]
    fn config_file_roundtrip() {
        let dir = std::env::temp_dir().join("omt_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(
            &path,
            "# reference run\npower_w = 10\nnbar = 0,1\ngrid = 0:6.283185307179586:101\nseed = 4\n",
        )
        .unwrap();
        let (_, cfg) = load_args(&[
            "cooling",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "11",
        ])
        .unwrap();
        assert_eq!(cfg.nbars, vec![0.0, 1.0]);
        assert_eq!(cfg.grid.points, 101);
        // flag wins over file
        assert_eq!(cfg.seed, 11);
    }

    #[test]
    fn temperature_resolves_to_nbar() {
        let (_, cfg) = load_args(&["cooling", "--temperature-k", "0"]).unwrap();
        assert_eq!(cfg.nbars, vec![0.0]);
        assert!(load_args(&["cooling", "--temperature-k", "1", "--nbar", "0"]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(load_args(&["frobnicate"]).is_err());
        assert!(load_args(&["cooling", "--grid", "0:1"]).is_err());
        assert!(load_args(&["cooling", "--grid", "1:0:10"]).is_err());
        assert!(load_args(&["cooling", "--nbar", "-1"]).is_err());
        assert!(load_args(&["cooling", "--sign-variant", "9"]).is_err());
        assert!(load_args(&["cooling", "--readout-sigma", "0.5"]).is_err());
        assert!(load_args(&["cooling", "--unknown-key", "1"]).is_err());
        assert!(load_args(&["cooling", "--power-w", "-3"]).is_err());
        assert!(load_args(&["cooling", "--seed"]).is_err());
    }

    #[test]
    fn grid_values_hit_endpoints() {
        let g = GridSpec {
            start: 0.0,
            stop: 1.0,
            points: 5,
        };
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[4], 1.0);
    }

    #[test]
    fn alpha_parsing() {
        let (_, cfg) = load_args(&["montecarlo", "--alpha-in", "3,-4"]).unwrap();
        assert_eq!(cfg.alpha_in, Complex64::new(3.0, -4.0));
        let (_, cfg2) = load_args(&["montecarlo", "--alpha-in", "2"]).unwrap();
        assert_eq!(cfg2.alpha_in, Complex64::new(2.0, 0.0));
    }
}
