//! Coupler waveforms: a slow envelope times a fast sinusoidal counterterm,
//! `Omega(t) = Omega0(t) * [c + alpha * sin(2 pi f t)]`.
//!
//! Times are in ns, amplitudes and frequencies in MHz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// MHz * ns -> cycles.
pub(crate) const MHZ_NS: f64 = 1.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    /// `A/2 [1 - cos(2 pi t / tg)]`
    Cosine,
    /// `A [tanh(g t/tg) - tanh(g (t/tg - 1)) - tanh g]^2`
    Tanh,
}

impl EnvelopeKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvelopeKind::Cosine => "cosine",
            EnvelopeKind::Tanh => "tanh",
        }
    }
}

impl std::str::FromStr for EnvelopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cos" | "cosine" => Ok(EnvelopeKind::Cosine),
            "tanh" => Ok(EnvelopeKind::Tanh),
            other => Err(Error::InvalidParameter(format!("unknown envelope '{other}'"))),
        }
    }
}

fn default_gamma<T: Real>() -> T {
    T::one()
}

fn default_offset<T: Real>() -> T {
    T::one()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct EnvelopeSpec<T> {
    pub kind: EnvelopeKind,
    #[serde(rename = "A_mhz")]
    pub amplitude: T,
    /// Steepness; only read by the tanh envelope.
    #[serde(default = "default_gamma")]
    pub gamma: T,
    #[serde(rename = "tg_ns")]
    pub tg: T,
}

impl<T: Real> EnvelopeSpec<T> {
    pub fn cosine(amplitude: T, tg: T) -> Self {
        Self {
            kind: EnvelopeKind::Cosine,
            amplitude,
            gamma: T::one(),
            tg,
        }
    }

    pub fn tanh(amplitude: T, gamma: T, tg: T) -> Self {
        Self {
            kind: EnvelopeKind::Tanh,
            amplitude,
            gamma,
            tg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tg > T::zero()) || !self.tg.is_finite() {
            return Err(Error::InvalidParameter("gate time must be positive".into()));
        }
        if !(self.amplitude >= T::zero()) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter("amplitude must be >= 0".into()));
        }
        if self.kind == EnvelopeKind::Tanh && (!(self.gamma > T::zero()) || !self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("tanh steepness must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ModulationSpec<T> {
    pub alpha: T,
    /// May be negative, which flips the sign of the counterterm.
    #[serde(rename = "f_mhz")]
    pub frequency: T,
    #[serde(default = "default_offset")]
    pub c: T,
}

impl<T: Real> ModulationSpec<T> {
    pub fn new(alpha: T, frequency: T) -> Self {
        Self {
            alpha,
            frequency,
            c: T::one(),
        }
    }

    pub fn none() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn with_offset(mut self, c: T) -> Self {
        self.c = c;
        self
    }
}

/// Full waveform; serializes flat as `{kind, A_mhz, gamma, tg_ns, alpha, f_mhz, c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct WaveformSpec<T> {
    #[serde(flatten)]
    pub envelope: EnvelopeSpec<T>,
    #[serde(flatten)]
    pub modulation: ModulationSpec<T>,
}

impl<T: Real> WaveformSpec<T> {
    pub fn new(envelope: EnvelopeSpec<T>, modulation: ModulationSpec<T>) -> Self {
        Self {
            envelope,
            modulation,
        }
    }

    pub fn tg(&self) -> T {
        self.envelope.tg
    }

    pub fn value(&self, t: T) -> Result<T> {
        coupling_value(&self.envelope, &self.modulation, t)
    }

    /// Unchecked evaluation for callers that stay inside the support.
    pub(crate) fn value_unchecked(&self, t: T) -> T {
        envelope_unchecked(&self.envelope, t) * counterterm(&self.modulation, t)
    }
}

fn check_support<T: Real>(spec: &EnvelopeSpec<T>, t: T) -> Result<()> {
    if !(t >= T::zero() && t <= spec.tg) {
        return Err(Error::OutsideSupport {
            t: t.to_f64_lossy(),
            tg: spec.tg.to_f64_lossy(),
        });
    }
    Ok(())
}

fn envelope_unchecked<T: Real>(spec: &EnvelopeSpec<T>, t: T) -> T {
    if t == T::zero() || t == spec.tg {
        return T::zero();
    }
    let x = t / spec.tg;
    match spec.kind {
        EnvelopeKind::Cosine => {
            spec.amplitude * T::lit(0.5) * (T::one() - (T::two_pi() * x).cos())
        }
        EnvelopeKind::Tanh => {
            let g = spec.gamma;
            let b = (g * x).tanh() - (g * (x - T::one())).tanh() - g.tanh();
            spec.amplitude * b * b
        }
    }
}

fn counterterm<T: Real>(m: &ModulationSpec<T>, t: T) -> T {
    m.c + m.alpha * (T::two_pi() * m.frequency * t * T::lit(MHZ_NS)).sin()
}

/// Slow envelope `Omega0(t)`; zero at both ends of `[0, tg]`.
pub fn envelope_value<T: Real>(spec: &EnvelopeSpec<T>, t: T) -> Result<T> {
    check_support(spec, t)?;
    Ok(envelope_unchecked(spec, t))
}

/// `Omega0(t) * [c + alpha sin(2 pi f t)]`, with `f t` in MHz * ns.
pub fn coupling_value<T: Real>(env: &EnvelopeSpec<T>, m: &ModulationSpec<T>, t: T) -> Result<T> {
    check_support(env, t)?;
    Ok(envelope_unchecked(env, t) * counterterm(m, t))
}

/// True iff the waveform never dips below `-1e-9 A` on a uniform grid of `samples` intervals.
pub fn is_positive_definite<T: Real>(
    env: &EnvelopeSpec<T>,
    m: &ModulationSpec<T>,
    samples: usize,
) -> bool {
    let samples = samples.max(1);
    let floor = -T::lit(1e-9) * env.amplitude;
    let n = T::from_usize(samples).unwrap();
    (0..=samples).all(|k| {
        let t = env.tg * T::from_usize(k).unwrap() / n;
        envelope_unchecked(env, t) * counterterm(m, t) >= floor
    })
}

/// Samples `(t_ns, omega_mhz)` every `dt` ns, always including both endpoints.
pub fn sample<T: Real>(wf: &WaveformSpec<T>, dt: T) -> Result<Vec<(T, T)>> {
    wf.envelope.validate()?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("sample interval must be positive".into()));
    }
    let tg = wf.tg();
    let steps = (tg / dt).ceil().to_usize().unwrap_or(0).max(1);
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = (dt * T::from_usize(k).unwrap()).min(tg);
        out.push((t, wf.value_unchecked(t)));
        if t >= tg {
            break;
        }
    }
    Ok(out)
}

/// Writes `t_ns,omega_mhz` rows with 15 significant digits.
pub fn write_waveform_csv<W: std::io::Write>(samples: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_ns", "omega_mhz"])?;
    for (t, v) in samples {
        w.write_record([format!("{t:.15e}"), format!("{v:.15e}")])?;
    }
    w.flush()?;
    Ok(())
}
