//! Time-ordered evolution under `H(t) = drift + Omega(t) * control`.
//!
//! Each step of length `dt` uses the Hamiltonian at the step midpoint and is
//! exponentiated exactly, `exp(-i 2 pi 1e-3 H dt)`, so every step is unitary
//! and the scheme is second order in `dt`. Drift and control share a sparsity
//! pattern whose connected components are invariant subspaces; the propagator
//! works block by block on those components.

use nalgebra::DMatrix;
use nalgebra::ComplexField;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlHamiltonian, DeviceParams, DriveKind};
use crate::scalar::{cis, max_abs_diff, unitarity_residual, CMatrix, Real};
use crate::waveform::{WaveformSpec, MHZ_NS};

/// Largest step that still resolves a ~1 GHz counterterm with 20 points per period.
pub const MAX_STEP_NS: f64 = 0.05;
/// Step-halving change above which a propagation is declared unconverged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationSettings<T> {
    /// Integrator step in ns.
    pub step: T,
    /// Steps between recorded trace samples; 0 disables the trace.
    pub trace_stride: usize,
}

impl<T: Real> Default for PropagationSettings<T> {
    fn default() -> Self {
        Self {
            step: T::lit(0.01),
            trace_stride: 0,
        }
    }
}

impl<T: Real> PropagationSettings<T> {
    pub fn with_step(step: T) -> Self {
        Self {
            step,
            trace_stride: 0,
        }
    }

    pub fn traced(mut self, stride: usize) -> Self {
        self.trace_stride = stride;
        self
    }

    pub fn validate(&self, tg: T) -> Result<()> {
        let ok = self.step > T::zero()
            && self.step <= T::lit(MAX_STEP_NS) * T::lit(1.0 + 1e-12)
            && self.step <= tg / T::lit(100.0) * T::lit(1.0 + 1e-12);
        if ok {
            Ok(())
        } else {
            Err(Error::StepTooCoarse {
                step: self.step.to_f64_lossy(),
                what: format!(
                    "a {} ns gate (need step <= min(tg/100, {MAX_STEP_NS}))",
                    tg.to_f64_lossy()
                ),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<T> {
    pub t_ns: T,
    pub p_out: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult<T: Real> {
    pub unitary: CMatrix<T>,
    /// Probability of leaving `|11>` sampled along the evolution.
    pub trace: Vec<TracePoint<T>>,
}

#[derive(Debug, Clone)]
struct Block<T: Real> {
    indices: Vec<usize>,
    drift: DMatrix<T>,
    control: DMatrix<T>,
}

/// Reusable propagator for one [`ControlHamiltonian`].
#[derive(Debug, Clone)]
pub struct Propagator<T: Real> {
    dim: usize,
    blocks: Vec<Block<T>>,
}

fn connected_components<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if !seen[j] && (a[(i, j)] != T::zero() || b[(i, j)] != T::zero()) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// `exp(-i phi H)` for real symmetric `H`.
fn exp_symmetric<T: Real>(h: DMatrix<T>, phi: T) -> CMatrix<T> {
    let k = h.nrows();
    if k == 1 {
        return DMatrix::from_element(1, 1, cis(-phi * h[(0, 0)]));
    }
    let eig = h.symmetric_eigen();
    let phases: Vec<Complex<T>> = eig.eigenvalues.iter().map(|&l| cis(-phi * l)).collect();
    let v = &eig.eigenvectors;
    DMatrix::from_fn(k, k, |i, j| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (m, p) in phases.iter().enumerate() {
            acc += p.scale(v[(i, m)] * v[(j, m)]);
        }
        acc
    })
}

fn step_count<T: Real>(span: T, step: T) -> usize {
    let raw = span / step;
    let n = (raw * T::lit(1.0 - 1e-12)).ceil();
    n.to_usize().unwrap_or(1).max(1)
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &ControlHamiltonian<T>) -> Self {
        let a = h.drift.matrix();
        let b = h.control.matrix();
        let blocks = connected_components(a, b)
            .into_iter()
            .map(|indices| {
                let k = indices.len();
                let drift = DMatrix::from_fn(k, k, |i, j| a[(indices[i], indices[j])]);
                let control = DMatrix::from_fn(k, k, |i, j| b[(indices[i], indices[j])]);
                Block {
                    indices,
                    drift,
                    control,
                }
            })
            .collect();
        Self {
            dim: h.dim(),
            blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sizes of the invariant blocks.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// Propagates from `t0` to `t1` with the coefficient `coupling(t)` sampled at step
    /// midpoints. When `settings.trace_stride > 0` the survival of basis state `watch`
    /// is recorded.
    pub fn run<F>(
        &self,
        coupling: F,
        t0: T,
        t1: T,
        settings: &PropagationSettings<T>,
        watch: Option<usize>,
    ) -> PropagationResult<T>
    where
        F: Fn(T) -> T,
    {
        let n = step_count(t1 - t0, settings.step);
        let dt = (t1 - t0) / T::from_usize(n).unwrap();
        let phi = T::two_pi() * T::lit(MHZ_NS) * dt;
        let mut us: Vec<CMatrix<T>> = self
            .blocks
            .iter()
            .map(|b| CMatrix::identity(b.indices.len(), b.indices.len()))
            .collect();
        let watch_at = watch.and_then(|w| {
            self.blocks.iter().enumerate().find_map(|(bi, b)| {
                b.indices.iter().position(|&i| i == w).map(|li| (bi, li))
            })
        });
        let mut trace = Vec::new();
        let survival = |us: &[CMatrix<T>]| -> T {
            let (bi, li) = watch_at.unwrap();
            let amp = us[bi][(li, li)].norm_sqr();
            (T::one() - amp).max(T::zero()).min(T::one())
        };
        let tracing = settings.trace_stride > 0 && watch_at.is_some();
        if tracing {
            trace.push(TracePoint {
                t_ns: t0,
                p_out: survival(&us),
            });
        }
        for k in 0..n {
            let tm = t0 + dt * (T::from_usize(k).unwrap() + T::lit(0.5));
            let c = coupling(tm);
            for (b, u) in self.blocks.iter().zip(us.iter_mut()) {
                if c == T::zero() && b.indices.len() > 1 && is_diagonal(&b.drift) {
                    let step = DMatrix::from_fn(b.indices.len(), b.indices.len(), |i, j| {
                        if i == j {
                            cis(-phi * b.drift[(i, i)])
                        } else {
                            Complex::new(T::zero(), T::zero())
                        }
                    });
                    *u = step * &*u;
                    continue;
                }
                let h = &b.drift + &b.control * c;
                *u = exp_symmetric(h, phi) * &*u;
            }
            if tracing && ((k + 1) % settings.trace_stride == 0 || k + 1 == n) {
                trace.push(TracePoint {
                    t_ns: t0 + dt * T::from_usize(k + 1).unwrap(),
                    p_out: survival(&us),
                });
            }
        }
        let mut full = CMatrix::zeros(self.dim, self.dim);
        for (b, u) in self.blocks.iter().zip(us.iter()) {
            for (i, &gi) in b.indices.iter().enumerate() {
                for (j, &gj) in b.indices.iter().enumerate() {
                    full[(gi, gj)] = u[(i, j)];
                }
            }
        }
        PropagationResult {
            unitary: full,
            trace,
        }
    }
}

fn is_diagonal<T: Real>(m: &DMatrix<T>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == T::zero()))
}

/// Rotating-frame propagation of `wf` driven through the exchange coupler.
pub fn propagate<T: Real>(
    params: &DeviceParams<T>,
    wf: &WaveformSpec<T>,
    settings: &PropagationSettings<T>,
) -> Result<PropagationResult<T>> {
    propagate_drive(params, wf, DriveKind::Exchange, settings)
}

/// Rotating-frame propagation over the full gate `[0, tg]`.
pub fn propagate_drive<T: Real>(
    params: &DeviceParams<T>,
    wf: &WaveformSpec<T>,
    drive: DriveKind,
    settings: &PropagationSettings<T>,
) -> Result<PropagationResult<T>> {
    wf.envelope.validate()?;
    settings.validate(wf.tg())?;
    propagate_interval(params, wf, drive, T::zero(), wf.tg(), settings)
}

/// Rotating-frame propagation over a sub-interval of the gate.
pub fn propagate_interval<T: Real>(
    params: &DeviceParams<T>,
    wf: &WaveformSpec<T>,
    drive: DriveKind,
    t0: T,
    t1: T,
    settings: &PropagationSettings<T>,
) -> Result<PropagationResult<T>> {
    wf.envelope.validate()?;
    if !(t0 >= T::zero() && t1 <= wf.tg() && t0 < t1) {
        return Err(Error::OutsideSupport {
            t: t1.to_f64_lossy(),
            tg: wf.tg().to_f64_lossy(),
        });
    }
    let h = ControlHamiltonian::rotating(params, drive)?;
    let watch = params.index(1, 1);
    Ok(Propagator::new(&h).run(|t| wf.value_unchecked(t), t0, t1, settings, Some(watch)))
}

/// Propagates at `step` and `step / 2` and fails if the two differ by more than
/// [`CONVERGENCE_TOLERANCE`] in any entry. Returns the finer result.
pub fn propagate_checked<T: Real>(
    params: &DeviceParams<T>,
    wf: &WaveformSpec<T>,
    drive: DriveKind,
    settings: &PropagationSettings<T>,
) -> Result<PropagationResult<T>> {
    let coarse = propagate_drive(params, wf, drive, settings)?;
    let mut half = *settings;
    half.step = settings.step / T::lit(2.0);
    half.trace_stride = settings.trace_stride * 2;
    let fine = propagate_drive(params, wf, drive, &half)?;
    let delta = max_abs_diff(&coarse.unitary, &fine.unitary);
    if delta > T::lit(CONVERGENCE_TOLERANCE) {
        return Err(Error::NotConverged {
            delta: delta.to_f64_lossy(),
        });
    }
    Ok(fine)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageTrace<T> {
    pub samples: Vec<TracePoint<T>>,
    /// Largest excursion out of `|11>`.
    pub max_p_out: T,
    pub t_at_max: T,
}

/// `p_out(t) = 1 - |<11|U(t)|11>|^2` and its maximum along the gate.
pub fn leakage_trace<T: Real>(result: &PropagationResult<T>) -> LeakageTrace<T> {
    let mut max_p_out = T::zero();
    let mut t_at_max = T::zero();
    for p in &result.trace {
        if p.p_out > max_p_out {
            max_p_out = p.p_out;
            t_at_max = p.t_ns;
        }
    }
    LeakageTrace {
        samples: result.trace.clone(),
        max_p_out,
        t_at_max,
    }
}

pub fn write_trace_csv<W: std::io::Write>(trace: &LeakageTrace<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_ns", "p_out"])?;
    for p in &trace.samples {
        w.write_record([format!("{:.15e}", p.t_ns), format!("{:.15e}", p.p_out)])?;
    }
    w.flush()?;
    Ok(())
}

/// Compares the rotating-frame propagator with the lab-frame one moved into the
/// frame rotating at the qubit frequencies. Returns the largest entry-wise
/// difference on the computational block.
///
/// The lab drive is `g(t) = -2 Omega(t) cos(2 pi (w1 - w2) t)`; its resonant
/// half reproduces the rotating-frame coupling `-Omega(t)(a1+ a2 + a1 a2+)`.
pub fn validate_rwa<T: Real>(
    params: &DeviceParams<T>,
    wf: &WaveformSpec<T>,
    settings: &PropagationSettings<T>,
) -> Result<T> {
    params.validate()?;
    wf.envelope.validate()?;
    let fastest = (params.omega1 + params.omega2).abs();
    let period = T::one() / (fastest * T::lit(MHZ_NS));
    if settings.step > period / T::lit(20.0) {
        return Err(Error::StepTooCoarse {
            step: settings.step.to_f64_lossy(),
            what: format!(
                "lab-frame oscillations at {} MHz",
                fastest.to_f64_lossy()
            ),
        });
    }
    let tg = wf.tg();
    let quiet = PropagationSettings {
        step: settings.step,
        trace_stride: 0,
    };
    let rot = Propagator::new(&ControlHamiltonian::rotating(params, DriveKind::Exchange)?).run(
        |t| wf.value_unchecked(t),
        T::zero(),
        tg,
        &quiet,
        None,
    );
    let detuning = params.omega1 - params.omega2;
    let two = T::lit(2.0);
    let lab = Propagator::new(&ControlHamiltonian::lab(params)?).run(
        |t| -two * wf.value_unchecked(t) * (T::two_pi() * detuning * t * T::lit(MHZ_NS)).cos(),
        T::zero(),
        tg,
        &quiet,
        None,
    );
    let comp = params.computational_indices();
    let mut worst = T::zero();
    for &i in &comp {
        let (n1, n2) = (i / params.levels, i % params.levels);
        let energy = params.omega1 * T::from_usize(n1).unwrap() + params.omega2 * T::from_usize(n2).unwrap();
        let frame = cis(T::two_pi() * energy * tg * T::lit(MHZ_NS));
        for &j in &comp {
            let moved = frame * lab.unitary[(i, j)];
            worst = worst.max((moved - rot.unitary[(i, j)]).modulus());
        }
    }
    Ok(worst)
}

/// `max |U^dagger U - I|` of a propagation.
pub fn unitarity_defect<T: Real>(result: &PropagationResult<T>) -> T {
    unitarity_residual(&result.unitary)
}
