//! Device and noise settings resolved as flags > config file > built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pulsediv::circuits::{NoiseMode, NoisePolicy};
use pulsediv::metrics::GateFamily;
use pulsediv::DeviceParams64;
use serde::Deserialize;

/// On-disk config. Every key is optional; a plain device JSON is also valid.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub omega1_mhz: Option<f64>,
    pub omega2_mhz: Option<f64>,
    pub delta1_mhz: Option<f64>,
    pub delta2_mhz: Option<f64>,
    pub levels: Option<usize>,
    pub tg_full_ns: Option<f64>,
    pub p2q: Option<f64>,
    pub p1q: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag-level overrides shared by every subcommand.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Device/noise config JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Anharmonicity of both oscillators, MHz.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Fock levels per oscillator.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Full-rotation gate time, ns. Defaults to 36 (iSWAP, CPHASE) or 24 (XX family).
    #[arg(long, global = true)]
    pub tg_full: Option<f64>,
    /// Two-qubit depolarizing rate of a full rotation.
    #[arg(long, global = true)]
    pub p2q: Option<f64>,
    /// Single-qubit depolarizing rate.
    #[arg(long, global = true)]
    pub p1q: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub device: DeviceParams64,
    tg_full: Option<f64>,
    p2q: f64,
    p1q: f64,
    pub config_paths: Vec<PathBuf>,
}

impl Resolved {
    pub fn tg_full(&self, gate: GateFamily) -> f64 {
        self.tg_full.unwrap_or_else(|| gate.default_full_gate_time())
    }

    pub fn tg_full_override(&self) -> Option<f64> {
        self.tg_full
    }

    pub fn policy(&self, mode: NoiseMode) -> NoisePolicy<f64> {
        NoisePolicy {
            p1q: self.p1q,
            p2q_base: self.p2q,
            ..NoisePolicy::new(mode)
        }
    }
}

pub fn resolve(o: &Overrides) -> Result<Resolved> {
    let file = match &o.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut device = DeviceParams64::standard();
    device.omega1 = file.omega1_mhz.unwrap_or(device.omega1);
    device.omega2 = file.omega2_mhz.unwrap_or(device.omega2);
    device.delta1 = file.delta1_mhz.unwrap_or(device.delta1);
    device.delta2 = file.delta2_mhz.unwrap_or(device.delta2);
    device.levels = file.levels.unwrap_or(device.levels);
    if let Some(d) = o.delta {
        device.delta1 = d;
        device.delta2 = d;
    }
    device.levels = o.levels.unwrap_or(device.levels);
    device.validate()?;
    let defaults = NoisePolicy::<f64>::new(NoiseMode::Stock);
    let r = Resolved {
        device,
        tg_full: o.tg_full.or(file.tg_full_ns),
        p2q: o.p2q.or(file.p2q).unwrap_or(defaults.p2q_base),
        p1q: o.p1q.or(file.p1q).unwrap_or(defaults.p1q),
        config_paths: o.config.iter().cloned().collect(),
    };
    if let Some(tg) = r.tg_full {
        anyhow::ensure!(tg > 0.0 && tg.is_finite(), "full gate time must be positive, got {tg}");
    }
    r.policy(NoiseMode::Stock).validate()?;
    Ok(r)
}
