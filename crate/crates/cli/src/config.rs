//! Run configuration: preset, then config file, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use tsu_metrology::circuit::{Arms, Circuit, InterferometerParams};
use tsu_metrology::scalar::Precision;
use tsu_metrology::sweep::{AxisSpec, PhaseMode, Target};

pub const PRESETS: [&str; 2] = ["paper-start", "g15"];

/// Keys accepted in a config file. Numeric parameter keys match the
/// `InterferometerParams` field names; `eta` sets both internal transmissions
/// and `gamma_kappa` both local oscillators.
pub const CONFIG_KEYS: [&str; 27] = [
    "preset", "circuit", "arms", "precision", "target", "phases", "grid", "axis", "out", "r", "s", "alpha", "beta",
    "gamma", "kappa", "gamma_kappa", "eta", "eta_p1", "eta_c1", "eta_p2", "eta_c2", "eta_p3", "eta_c3", "theta_f",
    "phi", "phi_p", "phi_c",
];

pub fn preset(name: &str) -> Result<InterferometerParams> {
    match name {
        "paper-start" => Ok(InterferometerParams::paper_start()),
        "g15" => Ok(InterferometerParams { r: 2.413, ..InterferometerParams::paper_start() }),
        other => bail!("unknown preset {other:?} (expected one of {})", PRESETS.join(", ")),
    }
}

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: InterferometerParams,
    pub circuit: Circuit,
    pub target: Target,
    pub phases: PhaseMode,
    pub grid: usize,
    pub axes: Vec<AxisSpec>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn defaults() -> Self {
        RunConfig {
            params: InterferometerParams::paper_start(),
            circuit: Circuit::Tsu11,
            target: Target::Lodi,
            phases: PhaseMode::Fixed,
            grid: 64,
            axes: Vec::new(),
            out: None,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = || -> Result<f64> {
            let x: f64 = value.parse().with_context(|| format!("{key}: {value:?} is not a number"))?;
            if !x.is_finite() {
                bail!("{key}: {value:?} is not finite");
            }
            Ok(x)
        };
        let p = &mut self.params;
        match key {
            "preset" => {
                let precision = p.precision;
                *p = preset(value)?;
                p.precision = precision;
            }
            "circuit" => self.circuit = value.parse()?,
            "arms" => p.arms = value.parse::<Arms>()?,
            "precision" => {
                let digits: u32 = value.parse().with_context(|| format!("precision: {value:?} is not an integer"))?;
                p.precision = Precision::new(digits)?;
            }
            "target" => self.target = value.parse()?,
            "phases" => self.phases = value.parse()?,
            "grid" => self.grid = value.parse().with_context(|| format!("grid: {value:?} is not an integer"))?,
            "axis" => self.axes.push(value.parse()?),
            "out" => self.out = Some(PathBuf::from(value)),
            "r" => p.r = num()?,
            "s" => p.s = num()?,
            "alpha" => p.alpha = num()?,
            "beta" => p.beta = num()?,
            "gamma" => p.gamma = num()?,
            "kappa" => p.kappa = num()?,
            "gamma_kappa" => {
                let x = num()?;
                p.gamma = x;
                p.kappa = x;
            }
            "eta" => {
                let x = num()?;
                p.eta_p1 = x;
                p.eta_c1 = x;
            }
            "eta_p1" => p.eta_p1 = num()?,
            "eta_c1" => p.eta_c1 = num()?,
            "eta_p2" => p.eta_p2 = num()?,
            "eta_c2" => p.eta_c2 = num()?,
            "eta_p3" => p.eta_p3 = num()?,
            "eta_c3" => p.eta_c3 = num()?,
            "theta_f" => p.theta_f = num()?,
            "phi" => p.theta_f = -num()?,
            "phi_p" => p.phi_p = num()?,
            "phi_c" => p.phi_c = num()?,
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }
}

/// Parses flat `key = value` text; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            bail!("line {}: unknown key {key:?}", i + 1);
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Resolves defaults, preset, config file and flag settings in that order.
/// A preset named on the command line wins over one in the file, and is
/// applied before any file value.
pub fn resolve(preset_flag: Option<&str>, file: Option<&Path>, flags: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::defaults();
    let entries = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config_text(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => Vec::new(),
    };
    let file_preset = entries.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str());
    if let Some(name) = preset_flag.or(file_preset) {
        cfg.set("preset", name)?;
    }
    let file_has_axes = entries.iter().any(|(k, _)| k == "axis");
    let flag_has_axes = flags.iter().any(|(k, _)| k == "axis");
    for (k, v) in &entries {
        if k == "preset" || (k == "axis" && flag_has_axes) {
            continue;
        }
        cfg.set(k, v).with_context(|| format!("config key {k}"))?;
    }
    if flag_has_axes && file_has_axes {
        cfg.axes.clear();
    }
    for (k, v) in flags {
        cfg.set(k, v).with_context(|| format!("--{}", k.replace('_', "-")))?;
    }
    Ok(cfg)
}
