//! Differential-evolution tuning of waveform parameters for fractional gates.
//!
//! The search runs on a coarse integrator step; finalists are re-scored on a
//! fine step, polished with Nelder-Mead on that fine step, and the reported
//! error is always a fresh evaluation of the returned parameters.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{fractional_schedule, gate_error, ErrorReport, GateFamily, GateTarget};
use crate::model::{ControlHamiltonian, DeviceParams};
use crate::propagate::{PropagationSettings, Propagator};
use crate::waveform::{EnvelopeKind, EnvelopeSpec, ModulationSpec, WaveformSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// `alpha = 2`, `c = 1`: the counterterm may drive the coupling negative.
    Free,
    /// `alpha = 1`, `c = 1`: positive-definite coupling.
    Positive,
    /// `alpha` and `c` tuned alongside the envelope.
    Shared,
}

impl AlphaMode {
    pub fn name(self) -> &'static str {
        match self {
            AlphaMode::Free => "free",
            AlphaMode::Positive => "positive",
            AlphaMode::Shared => "shared",
        }
    }

    fn fixed(self) -> Option<f64> {
        match self {
            AlphaMode::Free => Some(2.0),
            AlphaMode::Positive => Some(1.0),
            AlphaMode::Shared => None,
        }
    }
}

impl std::str::FromStr for AlphaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "free" | "2" => Ok(AlphaMode::Free),
            "positive" | "1" => Ok(AlphaMode::Positive),
            "shared" => Ok(AlphaMode::Shared),
            other => Err(Error::InvalidParameter(format!("unknown alpha mode '{other}'"))),
        }
    }
}

/// Closed search intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub amplitude: (f64, f64),
    pub frequency: (f64, f64),
    pub gamma: (f64, f64),
    pub alpha: (f64, f64),
    pub offset: (f64, f64),
}

impl Bounds {
    /// The saturation values of the fitted tables: `A <= 40`, `gamma <= 15`, `f <= 0`.
    pub fn standard() -> Self {
        Self {
            amplitude: (0.0, 40.0),
            frequency: (-1000.0, 0.0),
            gamma: (0.5, 15.0),
            alpha: (0.0, 3.0),
            offset: (0.0, 2.0),
        }
    }

    /// Wider intervals for one parameter set shared across all fractions.
    pub fn shared() -> Self {
        Self {
            amplitude: (0.0, 120.0),
            frequency: (-2500.0, 2500.0),
            ..Self::standard()
        }
    }

    fn for_mode(mode: AlphaMode) -> Self {
        match mode {
            AlphaMode::Shared => Self::shared(),
            _ => Self::standard(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeSettings {
    pub population_per_dim: usize,
    /// Differential weight `F`.
    pub mutation: f64,
    /// Crossover probability `CR`.
    pub crossover: f64,
    pub max_generations: usize,
    /// Early stop once the best error drops below this.
    pub target_error: f64,
    pub stagnation: usize,
    pub search_step: f64,
    pub final_step: f64,
    /// Results worse than ten times this are flagged as unconverged.
    pub threshold: f64,
    /// Population members re-scored on the fine step.
    pub finalists: usize,
    /// Nelder-Mead iterations on the fine step; 0 disables the polish.
    pub polish_iterations: usize,
}

impl Default for DeSettings {
    fn default() -> Self {
        Self {
            population_per_dim: 15,
            mutation: 0.8,
            crossover: 0.9,
            max_generations: 300,
            target_error: 1e-7,
            stagnation: 50,
            search_step: 0.02,
            final_step: 0.005,
            threshold: 1e-4,
            finalists: 4,
            polish_iterations: 150,
        }
    }
}

impl DeSettings {
    /// A cheap configuration for smoke tests.
    pub fn quick() -> Self {
        Self {
            max_generations: 20,
            stagnation: 10,
            finalists: 2,
            polish_iterations: 20,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.population_per_dim >= 4
            && self.mutation > 0.0
            && self.mutation <= 2.0
            && (0.0..=1.0).contains(&self.crossover)
            && self.max_generations >= 1
            && self.search_step > 0.0
            && self.final_step > 0.0
            && self.finalists >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad DE settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneProblem {
    pub gate: GateFamily,
    pub fraction: Rational64,
    pub tg: f64,
    pub envelope: EnvelopeKind,
    pub alpha_mode: AlphaMode,
    pub bounds: Bounds,
    pub device: DeviceParams<f64>,
}

impl TuneProblem {
    /// Standard device, default full gate time of the family, default bounds.
    pub fn new(gate: GateFamily, fraction: Rational64, envelope: EnvelopeKind, alpha_mode: AlphaMode) -> Result<Self> {
        let (_, tg) = fractional_schedule(std::f64::consts::PI, fraction, gate.default_full_gate_time())?;
        Ok(Self {
            gate,
            fraction,
            tg,
            envelope,
            alpha_mode,
            bounds: Bounds::for_mode(alpha_mode),
            device: DeviceParams::standard(),
        })
    }

    pub fn theta(&self) -> f64 {
        std::f64::consts::PI * self.fraction.to_f64().unwrap_or(f64::NAN)
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        let b = &self.bounds;
        let mut v = vec![b.amplitude, b.frequency];
        if self.envelope == EnvelopeKind::Tanh {
            v.push(b.gamma);
        }
        if self.alpha_mode == AlphaMode::Shared {
            v.push(b.alpha);
            v.push(b.offset);
        }
        v
    }

    fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.gate.drive()?;
        if !(self.tg > 0.0 && self.tg.is_finite()) {
            return Err(Error::InvalidParameter(format!("gate time {} must be positive", self.tg)));
        }
        for (lo, hi) in self.intervals() {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!("degenerate bound [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Decodes a search vector `[A, f, (gamma), (alpha, c)]` into a waveform.
fn decode(x: &[f64], envelope: EnvelopeKind, mode: AlphaMode, tg: f64) -> WaveformSpec<f64> {
    let mut it = x.iter().copied();
    let amplitude = it.next().unwrap();
    let frequency = it.next().unwrap();
    let env = match envelope {
        EnvelopeKind::Cosine => EnvelopeSpec::cosine(amplitude, tg),
        EnvelopeKind::Tanh => EnvelopeSpec::tanh(amplitude, it.next().unwrap(), tg),
    };
    let modulation = match mode.fixed() {
        Some(alpha) => ModulationSpec::new(alpha, frequency),
        None => {
            let alpha = it.next().unwrap();
            ModulationSpec::new(alpha, frequency).with_offset(it.next().unwrap())
        }
    };
    WaveformSpec::new(env, modulation)
}

/// Integrator step used for a gate of length `tg` when `requested` is the goal.
pub fn step_for(requested: f64, tg: f64) -> f64 {
    requested.min(tg / 100.0)
}

/// Propagates `wf` and scores it against `target`.
pub fn evaluate_waveform(
    device: &DeviceParams<f64>,
    gate: GateFamily,
    theta: f64,
    wf: &WaveformSpec<f64>,
    step: f64,
) -> Result<ErrorReport<f64>> {
    let h = ControlHamiltonian::rotating(device, gate.drive()?)?;
    score(&Propagator::new(&h), gate, theta, wf, step)
}

fn score(prop: &Propagator<f64>, gate: GateFamily, theta: f64, wf: &WaveformSpec<f64>, step: f64) -> Result<ErrorReport<f64>> {
    wf.envelope.validate()?;
    let settings = PropagationSettings::with_step(step_for(step, wf.tg()));
    settings.validate(wf.tg())?;
    let r = prop.run(|t| wf.value_unchecked(t), 0.0, wf.tg(), &settings, None);
    gate_error(&r.unitary, &GateTarget::new(gate, theta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub params: WaveformSpec<f64>,
    pub error: f64,
    pub leakage: f64,
    pub evaluations: usize,
    pub generations: usize,
    pub seed: u64,
    /// False when the best error exceeds ten times the settings threshold.
    pub converged: bool,
    pub settings: DeSettings,
}

struct DeOutcome {
    population: Vec<(Vec<f64>, f64)>,
    evaluations: usize,
    generations: usize,
}

fn clip(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.max(lo).min(hi)
}

/// rand/1/bin over the box `bounds`. Trial vectors are drawn from one seeded
/// stream in a fixed order and then scored in parallel, so the outcome does not
/// depend on the thread count.
fn differential_evolution<F>(bounds: &[(f64, f64)], settings: &DeSettings, seed: u64, objective: F) -> DeOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    let np = (settings.population_per_dim * dim).max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
        .collect();
    let mut cost: Vec<f64> = pop.par_iter().map(|x| objective(x)).collect();
    let mut evaluations = np;
    let mut best = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let mut stale = 0;
    let mut generations = 0;
    while generations < settings.max_generations && best >= settings.target_error && stale < settings.stagnation {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.gen_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let (a, mut b, mut c) = (pick(), pick(), pick());
                while b == a {
                    b = pick();
                }
                while c == a || c == b {
                    c = pick();
                }
                let forced = rng.gen_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == forced || rng.gen::<f64>() < settings.crossover {
                            clip(pop[a][j] + settings.mutation * (pop[b][j] - pop[c][j]), bounds[j])
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let scores: Vec<f64> = trials.par_iter().map(|x| objective(x)).collect();
        evaluations += np;
        for (i, (trial, s)) in trials.into_iter().zip(scores).enumerate() {
            if s <= cost[i] {
                pop[i] = trial;
                cost[i] = s;
            }
        }
        let now = cost.iter().copied().fold(f64::INFINITY, f64::min);
        if now < best {
            best = now;
            stale = 0;
        } else {
            stale += 1;
        }
        generations += 1;
    }
    let mut population: Vec<(Vec<f64>, f64)> = pop.into_iter().zip(cost).collect();
    population.sort_by(|a, b| a.1.total_cmp(&b.1));
    DeOutcome {
        population,
        evaluations,
        generations,
    }
}

/// Bounded Nelder-Mead from `start`; returns the best vertex and its cost.
fn nelder_mead<F>(start: &[f64], start_cost: f64, bounds: &[(f64, f64)], iterations: usize, objective: F) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = start.len();
    let project = |x: Vec<f64>| -> Vec<f64> { x.into_iter().zip(bounds).map(|(v, &b)| clip(v, b)).collect() };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), start_cost)];
    let vertices: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let mut v = start.to_vec();
            let width = bounds[j].1 - bounds[j].0;
            let h = (0.002 * width).max(1e-3 * start[j].abs());
            v[j] = if v[j] + h <= bounds[j].1 { v[j] + h } else { v[j] - h };
            project(v)
        })
        .collect();
    let costs: Vec<f64> = vertices.par_iter().map(|v| objective(v)).collect();
    simplex.extend(vertices.into_iter().zip(costs));
    let mut evaluations = dim;
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> { project(c.iter().zip(w).map(|(a, b)| a + t * (b - a)).collect()) };
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v.0[j]).sum::<f64>() / dim as f64)
            .collect();
        let xr = along(&centroid, &worst.0, -1.0);
        let fr = objective(&xr);
        evaluations += 1;
        if fr < simplex[0].1 {
            let xe = along(&centroid, &worst.0, -2.0);
            let fe = objective(&xe);
            evaluations += 1;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let xc = along(&centroid, &worst.0, 0.5);
            let fc = objective(&xc);
            evaluations += 1;
            if fc < worst.1 {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..].iter().map(|v| along(&best, &v.0, 0.5)).collect();
                let costs: Vec<f64> = shrunk.par_iter().map(|v| objective(v)).collect();
                evaluations += dim;
                for (slot, pair) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(costs)) {
                    *slot = pair;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, c) = simplex.swap_remove(0);
    (x, c, evaluations)
}

/// Runs the search, picks the best finalist on the fine step and polishes it.
fn search<F>(bounds: &[(f64, f64)], settings: &DeSettings, seed: u64, coarse: F, fine: F) -> (Vec<f64>, usize, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let de = differential_evolution(bounds, settings, seed, &coarse);
    let finalists: Vec<Vec<f64>> = de
        .population
        .iter()
        .take(settings.finalists)
        .map(|(x, _)| x.clone())
        .collect();
    let rescored: Vec<f64> = finalists.par_iter().map(|x| fine(x)).collect();
    let mut evaluations = de.evaluations + finalists.len();
    let (bi, &bc) = rescored
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let mut best = finalists[bi].clone();
    if settings.polish_iterations > 0 {
        let (x, c, n) = nelder_mead(&best, bc, bounds, settings.polish_iterations, &fine);
        evaluations += n;
        if c <= bc {
            best = x;
        }
    }
    (best, evaluations, de.generations)
}

/// Tunes one fractional gate. Deterministic for a given `seed`.
pub fn tune(problem: &TuneProblem, settings: &DeSettings, seed: u64) -> Result<TuneResult> {
    problem.validate()?;
    settings.validate()?;
    let h = ControlHamiltonian::rotating(&problem.device, problem.gate.drive()?)?;
    let prop = Propagator::new(&h);
    let theta = problem.theta();
    let objective = |step: f64| {
        let prop = &prop;
        move |x: &[f64]| {
            let wf = decode(x, problem.envelope, problem.alpha_mode, problem.tg);
            score(prop, problem.gate, theta, &wf, step).map_or(1.0, |r| r.error)
        }
    };
    let (best, evaluations, generations) = search(
        &problem.intervals(),
        settings,
        seed,
        objective(settings.search_step),
        objective(settings.final_step),
    );
    let params = decode(&best, problem.envelope, problem.alpha_mode, problem.tg);
    let report = evaluate_waveform(&problem.device, problem.gate, theta, &params, settings.final_step)?;
    if report.error > 10.0 * settings.threshold {
        log::warn!(
            "{} fraction {} did not converge: best error {:.3e}",
            problem.gate.name(),
            problem.fraction,
            report.error
        );
    }
    Ok(TuneResult {
        params,
        error: report.error,
        leakage: report.leakage,
        evaluations,
        generations,
        seed,
        converged: report.error <= 10.0 * settings.threshold,
        settings: *settings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedProblem {
    pub gate: GateFamily,
    pub fractions: Vec<Rational64>,
    pub tg_full: f64,
    pub envelope: EnvelopeKind,
    pub bounds: Bounds,
    pub device: DeviceParams<f64>,
}

impl SharedProblem {
    /// The asymmetric-anharmonicity device. The full iSWAP lasts `36 pi` ns, the
    /// time at which the quoted shared amplitude, read in rad/us, carries a
    /// quarter-turn of exchange area.
    pub fn asymmetric_device(fractions: Vec<Rational64>) -> Self {
        Self {
            gate: GateFamily::Iswap,
            fractions,
            tg_full: 36.0 * std::f64::consts::PI,
            envelope: EnvelopeKind::Cosine,
            bounds: Bounds::shared(),
            device: DeviceParams {
                delta1: 163.46,
                delta2: 254.655,
                ..DeviceParams::standard()
            },
        }
    }

    fn schedule(&self) -> Result<Vec<(f64, f64)>> {
        self.fractions
            .iter()
            .map(|&f| fractional_schedule(std::f64::consts::PI, f, self.tg_full))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedTuneResult {
    /// Waveform of the full rotation; fraction `k` uses `tg_full * k` with the same shape parameters.
    pub params: WaveformSpec<f64>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub evaluations: usize,
    pub generations: usize,
    pub seed: u64,
    pub converged: bool,
    pub settings: DeSettings,
}

/// Errors of one shared parameter set over every fraction of `problem`.
pub fn evaluate_shared(problem: &SharedProblem, params: &WaveformSpec<f64>, step: f64) -> Result<Vec<f64>> {
    let h = ControlHamiltonian::rotating(&problem.device, problem.gate.drive()?)?;
    let prop = Propagator::new(&h);
    problem
        .schedule()?
        .into_iter()
        .map(|(theta, tg)| {
            let mut wf = *params;
            wf.envelope.tg = tg;
            score(&prop, problem.gate, theta, &wf, step).map(|r| r.error)
        })
        .collect()
}

/// One shape `{A, f, (gamma), alpha, c}` for every fraction, minimizing the worst error.
pub fn tune_shared(problem: &SharedProblem, settings: &DeSettings, seed: u64) -> Result<SharedTuneResult> {
    if problem.fractions.len() < 2 {
        return Err(Error::InvalidParameter("shared tuning needs at least two fractions".into()));
    }
    problem.device.validate()?;
    settings.validate()?;
    let schedule = problem.schedule()?;
    let h = ControlHamiltonian::rotating(&problem.device, problem.gate.drive()?)?;
    let prop = Propagator::new(&h);
    let shape = TuneProblem {
        gate: problem.gate,
        fraction: Rational64::from_integer(1),
        tg: problem.tg_full,
        envelope: problem.envelope,
        alpha_mode: AlphaMode::Shared,
        bounds: problem.bounds,
        device: problem.device,
    };
    shape.validate()?;
    let objective = |step: f64| {
        let (prop, schedule) = (&prop, &schedule);
        move |x: &[f64]| {
            schedule
                .iter()
                .map(|&(theta, tg)| {
                    let wf = decode(x, problem.envelope, AlphaMode::Shared, tg);
                    score(prop, problem.gate, theta, &wf, step).map_or(1.0, |r| r.error)
                })
                .fold(0.0, f64::max)
        }
    };
    let (best, evaluations, generations) = search(
        &shape.intervals(),
        settings,
        seed,
        objective(settings.search_step),
        objective(settings.final_step),
    );
    let params = decode(&best, problem.envelope, AlphaMode::Shared, problem.tg_full);
    let errors = evaluate_shared(problem, &params, settings.final_step)?;
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(SharedTuneResult {
        params,
        errors,
        max_error,
        evaluations,
        generations,
        seed,
        converged: max_error <= 10.0 * settings.threshold,
        settings: *settings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub fraction: String,
    pub tg_ns: f64,
    #[serde(rename = "A_mhz")]
    pub amplitude: f64,
    pub f_mhz: f64,
    /// Empty for cosine envelopes.
    pub gamma: Option<f64>,
    pub envelope: EnvelopeKind,
    pub alpha_mode: AlphaMode,
    pub error: f64,
    pub converged: bool,
}

impl TableRow {
    fn from_result(problem: &TuneProblem, r: &TuneResult) -> Self {
        Self {
            fraction: problem.fraction.to_string(),
            tg_ns: problem.tg,
            amplitude: r.params.envelope.amplitude,
            f_mhz: r.params.modulation.frequency,
            gamma: (problem.envelope == EnvelopeKind::Tanh).then_some(r.params.envelope.gamma),
            envelope: problem.envelope,
            alpha_mode: problem.alpha_mode,
            error: r.error,
            converged: r.converged,
        }
    }
}

/// Tunes every `(fraction, envelope, mode)` combination, one row each.
pub fn generate_table(
    gate: GateFamily,
    envelopes: &[EnvelopeKind],
    modes: &[AlphaMode],
    fractions: &[Rational64],
    settings: &DeSettings,
    seed: u64,
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for &envelope in envelopes {
        for &mode in modes {
            for &fraction in fractions {
                let problem = TuneProblem::new(gate, fraction, envelope, mode)?;
                let r = tune(&problem, settings, seed)?;
                rows.push(TableRow::from_result(&problem, &r));
            }
        }
    }
    Ok(rows)
}

pub fn write_table_csv<W: std::io::Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fraction", "tg_ns", "A_mhz", "f_mhz", "gamma", "envelope", "alpha_mode", "error", "converged"])?;
    for r in rows {
        w.write_record([
            r.fraction.clone(),
            format!("{:.15e}", r.tg_ns),
            format!("{:.15e}", r.amplitude),
            format!("{:.15e}", r.f_mhz),
            r.gamma.map(|g| format!("{g:.15e}")).unwrap_or_default(),
            r.envelope.name().to_string(),
            r.alpha_mode.name().to_string(),
            format!("{:.15e}", r.error),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum()
    }

    #[test]
    fn de_minimizes_a_bowl() {
        let s = DeSettings {
            target_error: 1e-12,
            ..DeSettings::default()
        };
        let out = differential_evolution(&[(-1.0, 1.0); 3], &s, 1, sphere);
        assert!(out.population[0].1 < 1e-8, "{}", out.population[0].1);
        assert!(out.population.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn de_is_deterministic_and_seed_dependent() {
        let s = DeSettings::quick();
        let a = differential_evolution(&[(-1.0, 1.0); 2], &s, 9, sphere);
        let b = differential_evolution(&[(-1.0, 1.0); 2], &s, 9, sphere);
        let c = differential_evolution(&[(-1.0, 1.0); 2], &s, 10, sphere);
        assert_eq!(a.population, b.population);
        assert_ne!(a.population, c.population);
    }

    #[test]
    fn de_respects_bounds() {
        // unconstrained optimum sits outside the box
        let out = differential_evolution(&[(1.0, 2.0), (-3.0, -2.0)], &DeSettings::quick(), 3, sphere);
        for (x, _) in &out.population {
            assert!((1.0..=2.0).contains(&x[0]) && (-3.0..=-2.0).contains(&x[1]));
        }
        assert!((out.population[0].0[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn nelder_mead_refines() {
        let start = [0.8, -0.5];
        let (x, c, _) = nelder_mead(&start, sphere(&start), &[(-1.0, 1.0); 2], 200, sphere);
        assert!(c < 1e-10, "{c} at {x:?}");
    }

    #[test]
    fn decode_layouts() {
        let wf = decode(&[10.0, -500.0], EnvelopeKind::Cosine, AlphaMode::Free, 36.0);
        assert_eq!((wf.modulation.alpha, wf.modulation.c), (2.0, 1.0));
        let wf = decode(&[10.0, -500.0, 4.0], EnvelopeKind::Tanh, AlphaMode::Positive, 9.0);
        assert_eq!((wf.envelope.gamma, wf.modulation.alpha, wf.envelope.tg), (4.0, 1.0, 9.0));
        let wf = decode(&[80.0, 1800.0, 1.3, 0.3], EnvelopeKind::Cosine, AlphaMode::Shared, 18.0);
        assert_eq!((wf.modulation.alpha, wf.modulation.c), (1.3, 0.3));
    }

    #[test]
    fn problems_follow_the_family_gate_time() {
        let p = TuneProblem::new(GateFamily::Xx, Rational64::new(1, 6), EnvelopeKind::Tanh, AlphaMode::Free).unwrap();
        assert!((p.tg - 4.0).abs() < 1e-12);
        assert_eq!(p.intervals().len(), 3);
        assert!(TuneProblem::new(GateFamily::Cphase, Rational64::new(1, 2), EnvelopeKind::Tanh, AlphaMode::Free)
            .unwrap()
            .validate()
            .is_err());
        let mut bad = p.clone();
        bad.bounds.amplitude = (5.0, 5.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quick_tune_is_reproducible() {
        let p = TuneProblem::new(GateFamily::Iswap, Rational64::new(1, 4), EnvelopeKind::Cosine, AlphaMode::Free).unwrap();
        let s = DeSettings {
            max_generations: 3,
            polish_iterations: 5,
            ..DeSettings::quick()
        };
        let a = tune(&p, &s, 7).unwrap();
        let b = tune(&p, &s, 7).unwrap();
        assert_eq!(a, b);
        let again = evaluate_waveform(&p.device, p.gate, p.theta(), &a.params, s.final_step).unwrap();
        assert!((again.error - a.error).abs() <= 1e-12);
    }

    #[test]
    fn shared_needs_two_fractions() {
        let p = SharedProblem::asymmetric_device(vec![Rational64::from_integer(1)]);
        assert!(tune_shared(&p, &DeSettings::quick(), 1).is_err());
    }

    #[test]
    fn empty_table() {
        let rows = generate_table(GateFamily::Iswap, &[EnvelopeKind::Tanh], &[AlphaMode::Free], &[], &DeSettings::quick(), 1).unwrap();
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_table_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn settings_round_trip() {
        let s = DeSettings::default();
        let back: DeSettings = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
        assert_eq!("positive".parse::<AlphaMode>().unwrap(), AlphaMode::Positive);
    }
}
