//! Trotterized adiabatic preparation of the open-chain antiferromagnetic
//! Heisenberg ground state, `H(s) = (1 - s) H_pin + s H_prob` with
//! `H_pin = V sum_{j even} Z_j` and `H_prob = J sum_j (XX + YY + ZZ)_{j,j+1}`.
//!
//! A layer at schedule point `s` and step `dt` is, per bond, `iSWAP(-4 J s dt)`
//! followed by `ZZ(2 J s dt)`, even bonds before odd bonds, then `Rz(2 V (1 - s) dt)`
//! on every even qubit. `XX + YY` commutes with `ZZ` on a bond, so each bond
//! factor equals `exp(-i s J dt (XX + YY + ZZ))` exactly and the only Trotter
//! error comes from the bond and pin splitting.

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    check_register, pauli_sum, run_noisy, Circuit, CircuitOp, DensityState, NoiseMode,
    NoisePolicy,
};
use crate::error::{Error, Result};
use crate::scalar::{max_abs_diff, CMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams<T> {
    /// Total adiabatic time `T` in units of `1/J`.
    #[serde(rename = "T")]
    pub total_time: T,
    /// Trotter layer count `N`.
    #[serde(rename = "N")]
    pub layers: usize,
    #[serde(rename = "J")]
    pub j: T,
    #[serde(rename = "V")]
    pub v: T,
    pub nq: usize,
}

impl<T: Real> ScheduleParams<T> {
    pub fn new(nq: usize, total_time: T, layers: usize) -> Self {
        Self {
            total_time,
            layers,
            j: T::one(),
            v: T::one(),
            nq,
        }
    }

    pub fn dt(&self) -> T {
        self.total_time / T::from_usize(self.layers).unwrap()
    }

    /// `s_k = k dt / T`.
    pub fn s(&self, k: usize) -> T {
        T::from_usize(k).unwrap() / T::from_usize(self.layers).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || !(self.total_time > T::zero()) || !self.total_time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "schedule needs T > 0 and N >= 1, got T = {}, N = {}",
                self.total_time.to_f64_lossy(),
                self.layers
            )));
        }
        if self.nq < 2 || self.nq % 2 != 0 {
            return Err(Error::InvalidParameter(format!("qubit count {} must be even and >= 2", self.nq)));
        }
        if !(self.j.is_finite() && self.v.is_finite()) {
            return Err(Error::InvalidParameter("J and V must be finite".into()));
        }
        Ok(())
    }
}

fn bonds(nq: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..nq - 1).step_by(2).chain((1..nq - 1).step_by(2)).map(|j| (j, j + 1))
}

/// `(coefficient, Pauli string)` terms of `H_prob`.
pub fn problem_terms<T: Real>(nq: usize, j: T) -> Vec<(T, Vec<(usize, char)>)> {
    (0..nq.saturating_sub(1))
        .flat_map(|q| ['x', 'y', 'z'].map(|p| (j, vec![(q, p), (q + 1, p)])))
        .collect()
}

pub fn pin_terms<T: Real>(nq: usize, v: T) -> Vec<(T, Vec<(usize, char)>)> {
    (0..nq).step_by(2).map(|q| (v, vec![(q, 'z')])).collect()
}

/// Dense `H(s)` for small registers.
pub fn hamiltonian_at<T: Real>(nq: usize, j: T, v: T, s: T) -> Result<CMatrix<T>> {
    let mut terms: Vec<_> = problem_terms(nq, j * s);
    terms.extend(pin_terms(nq, v * (T::one() - s)));
    pauli_sum(nq, &terms)
}

/// Lowest eigenvalue of `H_prob`, diagonalized sector by sector in total `S_z`.
pub fn exact_ground_energy<T: Real>(nq: usize, j: T) -> Result<T> {
    check_register(nq, true)?;
    if nq < 2 {
        return Err(Error::InvalidParameter("need at least two qubits".into()));
    }
    let two = T::lit(2.0);
    let mut best = T::max_value().unwrap_or_else(T::one);
    for up in 0..=nq {
        let states: Vec<usize> = (0..1usize << nq).filter(|s| s.count_ones() as usize == up).collect();
        let index: std::collections::HashMap<usize, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let d = states.len();
        let mut h = DMatrix::<T>::zeros(d, d);
        for (col, &s) in states.iter().enumerate() {
            for q in 0..nq - 1 {
                let (a, b) = (1usize << (nq - 1 - q), 1usize << (nq - 2 - q));
                let aligned = ((s & a) != 0) == ((s & b) != 0);
                h[(col, col)] += if aligned { j } else { -j };
                if !aligned {
                    // XX + YY = 2 (s+ s- + s- s+) flips an antiparallel pair
                    h[(index[&(s ^ a ^ b)], col)] += two * j;
                }
            }
        }
        let low = h
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or_else(T::one), |x, y| x.min(y));
        best = best.min(low);
    }
    Ok(best)
}

/// Néel state `|1010...>`: even qubits hold `|1>` (pinned to `Z = -1` for `V > 0`),
/// odd qubits, which the pin leaves free, hold `|0>`.
pub fn initial_state<T: Real>(nq: usize, v: T) -> Vec<u8> {
    if v == T::zero() {
        log::warn!("V = 0 leaves the pin degenerate; using the Neel convention");
    }
    let even = if v < T::zero() { 0 } else { 1 };
    (0..nq).map(|q| if q % 2 == 0 { even } else { 1 - even }).collect()
}

/// One Trotter layer at schedule point `s` with step `dt`. Gates with a zero
/// angle are omitted.
pub fn layer_at<T: Real>(nq: usize, j: T, v: T, s: T, dt: T) -> Circuit<T> {
    let exchange = -T::lit(4.0) * j * s * dt;
    let ising = T::lit(2.0) * j * s * dt;
    let pin = T::lit(2.0) * v * (T::one() - s) * dt;
    let mut out = Vec::new();
    for (a, b) in bonds(nq) {
        if exchange != T::zero() {
            out.push(CircuitOp::iswap(a, b, exchange));
        }
        if ising != T::zero() {
            out.push(CircuitOp::zz(a, b, ising));
        }
    }
    if pin != T::zero() {
        out.extend((0..nq).step_by(2).map(|q| CircuitOp::rz(q, pin)));
    }
    out
}

/// Layer `k` (1-based) of `schedule`.
pub fn build_layer<T: Real>(k: usize, schedule: &ScheduleParams<T>) -> Result<Circuit<T>> {
    schedule.validate()?;
    if k == 0 || k > schedule.layers {
        return Err(Error::InvalidParameter(format!(
            "layer {k} outside 1..={}",
            schedule.layers
        )));
    }
    Ok(layer_at(schedule.nq, schedule.j, schedule.v, schedule.s(k), schedule.dt()))
}

/// `exp(-i dt H)` for Hermitian `H`.
fn evolve<T: Real>(h: &CMatrix<T>, dt: T) -> CMatrix<T> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex::new((l * dt).cos(), -(l * dt).sin())),
    ));
    v * phases * v.adjoint()
}

/// Largest entrywise `|U_layer - exp(-i dt H(s_k))|` over the layers of `schedule`.
pub fn trotter_check<T: Real>(schedule: &ScheduleParams<T>) -> Result<T> {
    schedule.validate()?;
    if schedule.nq > 4 {
        return Err(Error::RegisterTooLarge { n: schedule.nq, max: 4 });
    }
    let dt = schedule.dt();
    let mut worst = T::zero();
    for k in 1..=schedule.layers {
        let s = schedule.s(k);
        let u = crate::circuits::circuit_unitary(&build_layer(k, schedule)?, schedule.nq)?;
        let exact = evolve(&hamiltonian_at(schedule.nq, schedule.j, schedule.v, s)?, dt);
        worst = worst.max(max_abs_diff(&u, &exact));
    }
    Ok(worst)
}

/// `Tr(rho P)` for a Pauli string.
fn pauli_expectation<T: Real>(state: &DensityState<T>, string: &[(usize, char)]) -> T {
    let n = state.n;
    let mut acc = Complex::new(T::zero(), T::zero());
    for col in 0..state.dim() {
        let mut row = col;
        let mut amp = Complex::new(T::one(), T::zero());
        for &(q, p) in string {
            let bit = 1usize << (n - 1 - q);
            let set = col & bit != 0;
            match p {
                'x' => row ^= bit,
                'y' => {
                    row ^= bit;
                    amp *= if set { Complex::new(T::zero(), -T::one()) } else { Complex::new(T::zero(), T::one()) };
                }
                _ => {
                    if set {
                        amp = -amp;
                    }
                }
            }
        }
        // P|col> = amp |row>, so <col| rho P |col> = amp rho[col, row]
        acc += amp * state.rho[(col, row)];
    }
    acc.re
}

/// `Tr(rho H_prob)` without forming the dense Hamiltonian.
pub fn problem_energy<T: Real>(state: &DensityState<T>, j: T) -> T {
    problem_terms(state.n, j)
        .iter()
        .map(|(c, s)| *c * pauli_expectation(state, s))
        .fold(T::zero(), |a, b| a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult<T> {
    /// `Tr(rho H_prob) / E_0`.
    pub fraction: T,
    pub best_t: T,
    pub best_n: usize,
    pub mode: NoiseMode,
    pub energy: T,
    pub ground_energy: T,
    pub nq: usize,
}

/// Options for registers beyond the default dense limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunOptions {
    pub allow_large: bool,
}

/// Runs the `N`-layer circuit from the Néel state under `policy`.
pub fn run_benchmark<T: Real>(schedule: &ScheduleParams<T>, policy: &NoisePolicy<T>) -> Result<BenchmarkResult<T>> {
    run_benchmark_with(schedule, policy, RunOptions::default())
}

pub fn run_benchmark_with<T: Real>(
    schedule: &ScheduleParams<T>,
    policy: &NoisePolicy<T>,
    options: RunOptions,
) -> Result<BenchmarkResult<T>> {
    let e0 = exact_ground_energy(schedule.nq, schedule.j)?;
    run_with_ground(schedule, policy, options, e0)
}

fn run_with_ground<T: Real>(
    schedule: &ScheduleParams<T>,
    policy: &NoisePolicy<T>,
    options: RunOptions,
    e0: T,
) -> Result<BenchmarkResult<T>> {
    schedule.validate()?;
    let mut state = DensityState::basis_with_limit(&initial_state(schedule.nq, schedule.v), options.allow_large)?;
    for k in 1..=schedule.layers {
        run_noisy(&mut state, &build_layer(k, schedule)?, policy)?;
    }
    let energy = problem_energy(&state, schedule.j);
    Ok(BenchmarkResult {
        fraction: energy / e0,
        best_t: schedule.total_time,
        best_n: schedule.layers,
        mode: policy.mode,
        energy,
        ground_energy: e0,
        nq: schedule.nq,
    })
}

/// The default scan: `T` in 1..=10, `N` in 2..=32.
pub fn default_grids<T: Real>() -> (Vec<T>, Vec<usize>) {
    ((1..=10).map(|t| T::from_usize(t).unwrap()).collect(), (2..=32).collect())
}

/// Best fraction over the `(T, N)` grid, refined by a pattern search in `T`
/// (continuous) and `N` (integer) around the best grid point.
pub fn optimize_schedule<T: Real>(
    nq: usize,
    policy: &NoisePolicy<T>,
    t_grid: &[T],
    n_grid: &[usize],
) -> Result<BenchmarkResult<T>> {
    optimize_schedule_with(nq, policy, t_grid, n_grid, RunOptions::default())
}

pub fn optimize_schedule_with<T: Real>(
    nq: usize,
    policy: &NoisePolicy<T>,
    t_grid: &[T],
    n_grid: &[usize],
    options: RunOptions,
) -> Result<BenchmarkResult<T>> {
    if t_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::InvalidParameter("schedule grids must be non-empty".into()));
    }
    let e0 = exact_ground_energy(nq, T::one())?;
    let run = |t: T, n: usize| run_with_ground(&ScheduleParams::new(nq, t, n), policy, options, e0);
    let points: Vec<(T, usize)> = t_grid.iter().flat_map(|&t| n_grid.iter().map(move |&n| (t, n))).collect();
    let scored: Vec<BenchmarkResult<T>> = points.par_iter().map(|&(t, n)| run(t, n)).collect::<Result<_>>()?;
    let better = |a: &BenchmarkResult<T>, b: &BenchmarkResult<T>| a.fraction > b.fraction;
    let mut best = scored[0];
    for r in &scored[1..] {
        if better(r, &best) {
            best = *r;
        }
    }
    if points.len() == 1 {
        return Ok(best);
    }
    let spacing = |xs: Vec<T>| -> T {
        let mut xs = xs;
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > T::zero())
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
    };
    let mut step = spacing(t_grid.to_vec());
    if step == T::max_value().unwrap_or_else(T::one) {
        step = best.best_t * T::lit(0.25);
    }
    step *= T::lit(0.5);
    let (n_lo, n_hi) = (1usize, n_grid.iter().copied().max().unwrap_or(1) * 2);
    let floor = T::lit(1e-3);
    while step > floor {
        let t = best.best_t;
        let n = best.best_n;
        let mut candidates = vec![(t + step, n), (t - step, n)];
        if n > n_lo {
            candidates.push((t, n - 1));
        }
        if n < n_hi {
            candidates.push((t, n + 1));
        }
        candidates.retain(|&(t, _)| t > T::zero());
        let tried: Vec<BenchmarkResult<T>> = candidates.par_iter().map(|&(t, n)| run(t, n)).collect::<Result<_>>()?;
        match tried.into_iter().filter(|r| better(r, &best)).reduce(|a, b| if better(&b, &a) { b } else { a }) {
            Some(r) => best = r,
            None => step *= T::lit(0.5),
        }
    }
    Ok(best)
}

/// Modes in sweep order.
pub fn sweep_modes() -> [NoiseMode; 3] {
    NoiseMode::NOISY
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[BenchmarkResult<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["nq", "mode", "fraction", "best_T", "best_N", "energy", "ground_energy"])?;
    for r in rows {
        w.write_record([
            r.nq.to_string(),
            r.mode.name().to_string(),
            format!("{:.15e}", r.fraction),
            format!("{:.15e}", r.best_t),
            r.best_n.to_string(),
            format!("{:.15e}", r.energy),
            format!("{:.15e}", r.ground_energy),
        ])?;
    }
    w.flush()?;
    Ok(())
}
