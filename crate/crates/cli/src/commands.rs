use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pulsediv::circuits::{decomposition_library, NoiseMode};
use pulsediv::metrics::{parse_fraction, standard_fractions, GateFamily};
use pulsediv::propagate::{leakage_trace as trace_of, propagate_checked, write_trace_csv, PropagationSettings};
use pulsediv::tuner::{
    evaluate_waveform, generate_table, tune as run_tune, tune_shared, write_table_csv, AlphaMode, DeSettings,
    SharedProblem, TableRow, TuneProblem,
};
use pulsediv::vqe::{default_grids, optimize_schedule_with, run_benchmark_with, write_sweep_csv, RunOptions, ScheduleParams};
use pulsediv::waveform::{sample, write_waveform_csv, EnvelopeKind, EnvelopeSpec, ModulationSpec, WaveformSpec};
use pulsediv::{BenchmarkResult64, WaveformSpec64};
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::manifest::RunManifest;
use crate::{EvaluateArgs, PlotArgs, PlotKind, SweepArgs, TraceArgs, TuneArgs, Unconverged, VqeArgs};

/// Decomposition defects above this fail `decompose-check`.
const DECOMPOSITION_TOLERANCE: f64 = 1e-10;

fn parse<T: std::str::FromStr<Err = pulsediv::Error>>(s: &str) -> Result<T> {
    Ok(s.parse::<T>()?)
}

fn fraction_value(r: num_rational::Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn fractions_or_default(list: &Option<Vec<String>>) -> Result<Vec<num_rational::Rational64>> {
    match list {
        Some(v) => v.iter().map(|s| Ok(parse_fraction(s)?)).collect(),
        None => Ok(standard_fractions()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes pretty JSON to `out` (plus its manifest) or to stdout.
fn emit_json<S: Serialize>(value: &S, out: Option<&Path>, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => {
            create(p)?.write_all(text.as_bytes())?;
            manifest.write_beside(p)
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_waveform(path: &Path) -> Result<WaveformSpec64> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading waveform {}", path.display()))?;
    let wf: WaveformSpec64 = serde_json::from_str(&text).with_context(|| format!("parsing waveform {}", path.display()))?;
    wf.envelope.validate()?;
    Ok(wf)
}

fn settings(quick: bool) -> DeSettings {
    if quick {
        DeSettings::quick()
    } else {
        DeSettings::default()
    }
}

#[derive(Serialize)]
struct TuneOutput<'a> {
    problem: &'a TuneProblem,
    #[serde(flatten)]
    result: pulsediv::tuner::TuneResult,
}

#[derive(Serialize)]
struct SharedOutput<'a> {
    problem: &'a SharedProblem,
    #[serde(flatten)]
    result: pulsediv::tuner::SharedTuneResult,
}

pub fn tune(cfg: &Resolved, a: TuneArgs) -> Result<()> {
    let gate: GateFamily = parse(&a.gate)?;
    let envelope: EnvelopeKind = parse(&a.envelope)?;
    let mode: AlphaMode = parse(&a.alpha_mode)?;
    let de = settings(a.quick);
    let manifest = RunManifest::new(&cfg.config_paths, Some(a.seed));
    match (&a.fraction, mode) {
        (None, AlphaMode::Shared) => {
            let mut problem = SharedProblem::asymmetric_device(fractions_or_default(&a.fractions)?);
            problem.gate = gate;
            problem.envelope = envelope;
            // The asymmetric device stands unless the anharmonicities were overridden.
            let standard = pulsediv::DeviceParams64::standard();
            if (cfg.device.delta1, cfg.device.delta2) != (standard.delta1, standard.delta2) {
                problem.device = cfg.device;
            }
            problem.device.levels = cfg.device.levels;
            problem.tg_full = cfg.tg_full_override().unwrap_or(problem.tg_full);
            let result = tune_shared(&problem, &de, a.seed)?;
            let converged = result.converged;
            let max = result.max_error;
            emit_json(&SharedOutput { problem: &problem, result }, a.out.as_deref(), &manifest)?;
            if !converged {
                return Err(Unconverged(format!("shared set max error {max:.3e}")).into());
            }
            Ok(())
        }
        (None, _) => bail!("--fraction is required unless --alpha-mode shared"),
        (Some(fr), _) => {
            let fraction = parse_fraction(fr)?;
            let mut problem = TuneProblem::new(gate, fraction, envelope, mode)?;
            problem.device = cfg.device;
            problem.tg = cfg.tg_full(gate) * fraction_value(fraction);
            let result = run_tune(&problem, &de, a.seed)?;
            let (converged, err) = (result.converged, result.error);
            emit_json(&TuneOutput { problem: &problem, result }, a.out.as_deref(), &manifest)?;
            if !converged {
                return Err(Unconverged(format!("{} {} best error {err:.3e}", gate.name(), fraction)).into());
            }
            Ok(())
        }
    }
}

/// Unconverged rows are flagged in the table rather than failing the sweep.
pub fn sweep(cfg: &Resolved, a: SweepArgs) -> Result<()> {
    let gate: GateFamily = parse(&a.gate)?;
    let envelopes = a.envelopes.iter().map(|s| parse(s)).collect::<Result<Vec<EnvelopeKind>>>()?;
    let modes = a.modes.iter().map(|s| parse(s)).collect::<Result<Vec<AlphaMode>>>()?;
    if modes.contains(&AlphaMode::Shared) {
        bail!("sweep tunes per-fraction parameters; use `tune --alpha-mode shared` for the shared set");
    }
    let fractions = fractions_or_default(&a.fractions)?;
    let standard = cfg.device == pulsediv::DeviceParams64::standard() && cfg.tg_full_override().is_none();
    let rows = if standard {
        generate_table(gate, &envelopes, &modes, &fractions, &settings(a.quick), a.seed)?
    } else {
        custom_table(cfg, gate, &envelopes, &modes, &fractions, &settings(a.quick), a.seed)?
    };
    write_table_csv(&rows, create(&a.table)?)?;
    RunManifest::new(&cfg.config_paths, Some(a.seed)).write_beside(&a.table)?;
    let flagged = rows.iter().filter(|r| !r.converged).count();
    if flagged > 0 {
        eprintln!("{flagged} of {} rows did not converge", rows.len());
    }
    Ok(())
}

fn custom_table(
    cfg: &Resolved,
    gate: GateFamily,
    envelopes: &[EnvelopeKind],
    modes: &[AlphaMode],
    fractions: &[num_rational::Rational64],
    de: &DeSettings,
    seed: u64,
) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for &envelope in envelopes {
        for &mode in modes {
            for &fraction in fractions {
                let mut p = TuneProblem::new(gate, fraction, envelope, mode)?;
                p.device = cfg.device;
                p.tg = cfg.tg_full(gate) * fraction_value(fraction);
                let r = run_tune(&p, de, seed)?;
                rows.push(TableRow {
                    fraction: fraction.to_string(),
                    tg_ns: p.tg,
                    amplitude: r.params.envelope.amplitude,
                    f_mhz: r.params.modulation.frequency,
                    gamma: (envelope == EnvelopeKind::Tanh).then_some(r.params.envelope.gamma),
                    envelope,
                    alpha_mode: mode,
                    error: r.error,
                    converged: r.converged,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct EvaluateOutput {
    gate: GateFamily,
    device: pulsediv::DeviceParams64,
    theta: f64,
    step_ns: f64,
    waveform: WaveformSpec64,
    #[serde(flatten)]
    report: pulsediv::ErrorReport64,
}

pub fn evaluate(cfg: &Resolved, a: EvaluateArgs) -> Result<()> {
    let gate: GateFamily = parse(&a.gate)?;
    let wf = read_waveform(&a.waveform)?;
    anyhow::ensure!(a.step > 0.0, "--step must be positive");
    let fraction = match &a.fraction {
        Some(s) => fraction_value(parse_fraction(s)?),
        None => wf.tg() / cfg.tg_full(gate),
    };
    let theta = std::f64::consts::PI * fraction;
    let report = evaluate_waveform(&cfg.device, gate, theta, &wf, a.step)?;
    let manifest = RunManifest::new(&cfg.config_paths, None);
    if let Some(path) = &a.dump_waveform {
        anyhow::ensure!(a.sample_rate > 0.0, "--sample-rate must be positive");
        write_waveform_csv(&sample(&wf, a.sample_rate)?, create(path)?)?;
        manifest.write_beside(path)?;
    }
    let out = EvaluateOutput {
        gate,
        device: cfg.device,
        theta,
        step_ns: a.step,
        waveform: wf,
        report,
    };
    emit_json(&out, a.out.as_deref(), &manifest)
}

pub fn leakage_trace(cfg: &Resolved, a: TraceArgs) -> Result<()> {
    let gate: GateFamily = parse(&a.gate)?;
    let wf = read_waveform(&a.waveform)?;
    anyhow::ensure!(a.step > 0.0, "--step must be positive");
    let settings = PropagationSettings::with_step(a.step).traced(1);
    let result = propagate_checked(&cfg.device, &wf, gate.drive()?, &settings)?;
    let trace = trace_of(&result);
    write_trace_csv(&trace, create(&a.out)?)?;
    RunManifest::new(&cfg.config_paths, None).write_beside(&a.out)?;
    eprintln!("max p_out {:.6e} at t = {:.4} ns", trace.max_p_out, trace.t_at_max);
    Ok(())
}

fn parse_modes(list: &[String]) -> Result<Vec<NoiseMode>> {
    let mut modes = Vec::new();
    for s in list {
        if s.eq_ignore_ascii_case("all") {
            modes.extend(NoiseMode::NOISY);
        } else {
            modes.push(parse(s)?);
        }
    }
    Ok(modes)
}

pub fn vqe(cfg: &Resolved, a: VqeArgs) -> Result<()> {
    let options = RunOptions {
        allow_large: a.allow_large,
    };
    let manifest = RunManifest::new(&cfg.config_paths, None);
    let (t_grid, n_grid) = default_grids::<f64>();
    let best = |nq: usize, mode: NoiseMode| -> Result<BenchmarkResult64> {
        let policy = cfg.policy(mode);
        match (a.total_time, a.layers) {
            (Some(t), Some(n)) => Ok(run_benchmark_with(&ScheduleParams::new(nq, t, n), &policy, options)?),
            (None, None) => Ok(optimize_schedule_with(nq, &policy, &t_grid, &n_grid, options)?),
            _ => bail!("--total-time and --layers must be given together"),
        }
    };
    if a.sweep {
        let out = a.out.as_deref().context("--sweep needs --out")?;
        let modes = parse_modes(&a.modes)?;
        let mut rows = Vec::new();
        for &nq in &a.nq {
            for &mode in &modes {
                let r = best(nq, mode)?;
                log_row(&r);
                rows.push(r);
            }
        }
        write_sweep_csv(&rows, create(out)?)?;
        return manifest.write_beside(out);
    }
    let [nq] = a.nq[..] else {
        bail!("a single run takes one --nq; use --sweep for several");
    };
    let r = best(nq, parse(&a.mode)?)?;
    emit_json(&r, a.out.as_deref(), &manifest)
}

fn log_row(r: &BenchmarkResult64) {
    eprintln!(
        "nq {} {:<16} fraction {:.6} (T = {:.4}, N = {})",
        r.nq,
        r.mode.name(),
        r.fraction,
        r.best_t,
        r.best_n
    );
}

pub fn decompose_check(_cfg: &Resolved) -> Result<()> {
    let mut failed = Vec::new();
    println!("{:<28} {:>12}  result", "decomposition", "defect");
    for d in decomposition_library::<f64>() {
        let defect = d.defect()?;
        let ok = defect <= DECOMPOSITION_TOLERANCE;
        println!("{:<28} {:>12.3e}  {}", d.name, defect, if ok { "pass" } else { "FAIL" });
        if !ok {
            failed.push(d.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Unconverged(format!("decompositions above {DECOMPOSITION_TOLERANCE:e}: {}", failed.join(", "))).into())
    }
}

/// One row of a VQE sweep CSV as written by the `vqe --sweep` command.
#[derive(Debug, Deserialize)]
struct SweepRow {
    nq: usize,
    mode: String,
    fraction: f64,
}

fn read_table(paths: &[PathBuf]) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for p in paths {
        let mut r = csv::Reader::from_path(p).with_context(|| format!("reading {}", p.display()))?;
        for row in r.deserialize() {
            rows.push(row.with_context(|| format!("parsing {}", p.display()))?);
        }
    }
    Ok(rows)
}

fn row_waveform(r: &TableRow) -> Result<WaveformSpec64> {
    let env = match r.envelope {
        EnvelopeKind::Cosine => EnvelopeSpec::cosine(r.amplitude, r.tg_ns),
        EnvelopeKind::Tanh => EnvelopeSpec::tanh(r.amplitude, r.gamma.context("tanh row without gamma")?, r.tg_ns),
    };
    let alpha = match r.alpha_mode {
        AlphaMode::Free => 2.0,
        AlphaMode::Positive => 1.0,
        AlphaMode::Shared => bail!("shared-mode rows carry no alpha"),
    };
    Ok(WaveformSpec::new(env, ModulationSpec::new(alpha, r.f_mhz)))
}

fn file_safe(fraction: &str) -> String {
    fraction.replace('/', "_")
}

pub fn plotdata(cfg: &Resolved, a: PlotArgs) -> Result<()> {
    let manifest = RunManifest::new(&cfg.config_paths, None);
    match a.kind {
        PlotKind::Pulses => {
            let envelope = a.envelope.as_deref().map(parse::<EnvelopeKind>).transpose()?;
            let mode = a.alpha_mode.as_deref().map(parse::<AlphaMode>).transpose()?;
            anyhow::ensure!(a.sample_rate > 0.0, "--sample-rate must be positive");
            std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            let rows = read_table(&a.inputs)?;
            let mut written = 0;
            for r in &rows {
                if envelope.is_some_and(|e| e != r.envelope) || mode.is_some_and(|m| m != r.alpha_mode) {
                    continue;
                }
                let name = format!("pulse_{}_{}_{}.csv", r.envelope.name(), r.alpha_mode.name(), file_safe(&r.fraction));
                write_waveform_csv(&sample(&row_waveform(r)?, a.sample_rate)?, create(&a.out.join(name))?)?;
                written += 1;
            }
            anyhow::ensure!(written > 0, "no table rows matched the filters");
            manifest.write_beside(&a.out.join("pulses"))
        }
        PlotKind::Errors => {
            let rows = read_table(&a.inputs)?;
            let mut w = csv::Writer::from_writer(create(&a.out)?);
            w.write_record(["fraction", "fraction_value", "tg_ns", "envelope", "alpha_mode", "error"])?;
            for r in &rows {
                let value = fraction_value(parse_fraction(&r.fraction)?);
                w.write_record([
                    r.fraction.clone(),
                    format!("{value:.15e}"),
                    format!("{:.15e}", r.tg_ns),
                    r.envelope.name().to_string(),
                    r.alpha_mode.name().to_string(),
                    format!("{:.15e}", r.error),
                ])?;
            }
            w.flush()?;
            manifest.write_beside(&a.out)
        }
        PlotKind::Vqe => {
            let mut rows: Vec<SweepRow> = Vec::new();
            for p in &a.inputs {
                let mut r = csv::Reader::from_path(p).with_context(|| format!("reading {}", p.display()))?;
                for row in r.deserialize() {
                    rows.push(row.with_context(|| format!("parsing {}", p.display()))?);
                }
            }
            let mut nqs: Vec<usize> = rows.iter().map(|r| r.nq).collect();
            nqs.sort_unstable();
            nqs.dedup();
            let modes = NoiseMode::NOISY;
            let mut w = csv::Writer::from_writer(create(&a.out)?);
            let mut header = vec!["nq".to_string()];
            header.extend(modes.iter().map(|m| m.name().to_string()));
            w.write_record(&header)?;
            for nq in nqs {
                let mut rec = vec![nq.to_string()];
                for m in modes {
                    let cell = rows
                        .iter()
                        .find(|r| r.nq == nq && parse::<NoiseMode>(&r.mode).ok() == Some(m))
                        .map(|r| format!("{:.15e}", r.fraction))
                        .unwrap_or_default();
                    rec.push(cell);
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            manifest.write_beside(&a.out)
        }
    }
}
