//! Gate-level circuits, depolarizing density-matrix simulation and reference
//! decompositions.
//!
//! Qubit 0 is the most significant bit of a basis index, so `|q0 q1 ...>` reads
//! left to right and a two-qubit matrix on `(a, b)` is `kron(U_a, U_b)`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{target_unitary, GateFamily, GateTarget};
use crate::scalar::{cis, phase_insensitive_overlap, CMatrix, Real};

/// Default ceiling for dense `2^n` matrices.
pub const MAX_QUBITS: usize = 10;
/// Ceiling when large registers are explicitly allowed.
pub const MAX_QUBITS_LARGE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Iswap,
    Zz,
    Cphase,
    Cnot,
    SqrtIswap,
    Rz,
    Rx,
    H,
    X,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Iswap | GateKind::Zz | GateKind::Cphase | GateKind::Cnot | GateKind::SqrtIswap => 2,
            GateKind::Rz | GateKind::Rx | GateKind::H | GateKind::X => 1,
        }
    }

    pub fn takes_angle(self) -> bool {
        matches!(self, GateKind::Iswap | GateKind::Zz | GateKind::Cphase | GateKind::Rz | GateKind::Rx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitOp<T> {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<T>,
}

pub type Circuit<T> = Vec<CircuitOp<T>>;

impl<T: Real> CircuitOp<T> {
    fn two(kind: GateKind, a: usize, b: usize, angle: Option<T>) -> Self {
        Self {
            kind,
            qubits: vec![a, b],
            angle,
        }
    }

    fn one(kind: GateKind, q: usize, angle: Option<T>) -> Self {
        Self {
            kind,
            qubits: vec![q],
            angle,
        }
    }

    pub fn iswap(a: usize, b: usize, theta: T) -> Self {
        Self::two(GateKind::Iswap, a, b, Some(theta))
    }
    pub fn zz(a: usize, b: usize, theta: T) -> Self {
        Self::two(GateKind::Zz, a, b, Some(theta))
    }
    pub fn cphase(a: usize, b: usize, theta: T) -> Self {
        Self::two(GateKind::Cphase, a, b, Some(theta))
    }
    pub fn cnot(control: usize, target: usize) -> Self {
        Self::two(GateKind::Cnot, control, target, None)
    }
    pub fn sqrt_iswap(a: usize, b: usize) -> Self {
        Self::two(GateKind::SqrtIswap, a, b, None)
    }
    pub fn rz(q: usize, phi: T) -> Self {
        Self::one(GateKind::Rz, q, Some(phi))
    }
    pub fn rx(q: usize, phi: T) -> Self {
        Self::one(GateKind::Rx, q, Some(phi))
    }
    pub fn h(q: usize) -> Self {
        Self::one(GateKind::H, q, None)
    }
    pub fn x(q: usize) -> Self {
        Self::one(GateKind::X, q, None)
    }

    /// Checks arity, angle presence and qubit indices against a register of `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidParameter(format!(
                "{:?} acts on {} qubits, got {:?}",
                self.kind,
                self.kind.arity(),
                self.qubits
            )));
        }
        if self.kind.takes_angle() != self.angle.is_some() {
            return Err(Error::InvalidParameter(format!("{:?} angle mismatch", self.kind)));
        }
        if let Some(a) = self.angle {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("{:?} angle is not finite", self.kind)));
            }
        }
        for &q in &self.qubits {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidParameter(format!("repeated qubit {}", self.qubits[0])));
        }
        Ok(())
    }

    /// `2^k x 2^k` matrix of the gate on its own qubits.
    pub fn matrix(&self) -> CMatrix<T> {
        let angle = self.angle.unwrap_or_else(T::zero);
        let half = T::lit(0.5);
        let z = Complex::new(T::zero(), T::zero());
        let o = Complex::new(T::one(), T::zero());
        match self.kind {
            GateKind::Iswap => target_unitary(&GateTarget::new(GateFamily::Iswap, angle)),
            GateKind::SqrtIswap => target_unitary(&GateTarget::new(GateFamily::Iswap, T::frac_pi_2())),
            GateKind::Zz => target_unitary(&GateTarget::new(GateFamily::Zz, angle)),
            GateKind::Cphase => target_unitary(&GateTarget::new(GateFamily::Cphase, angle)),
            GateKind::Cnot => {
                let mut m = CMatrix::identity(4, 4);
                m[(2, 2)] = z;
                m[(3, 3)] = z;
                m[(2, 3)] = o;
                m[(3, 2)] = o;
                m
            }
            GateKind::Rz => CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                cis(-angle * half),
                cis(angle * half),
            ])),
            GateKind::Rx => {
                let c = Complex::new((angle * half).cos(), T::zero());
                let s = Complex::new(T::zero(), -(angle * half).sin());
                CMatrix::from_row_slice(2, 2, &[c, s, s, c])
            }
            GateKind::H => {
                let r = Complex::new(T::lit(0.5).sqrt(), T::zero());
                CMatrix::from_row_slice(2, 2, &[r, r, r, -r])
            }
            GateKind::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Stock,
    Continuous,
    ErrorDivisible,
    Noiseless,
}

impl NoiseMode {
    pub const NOISY: [NoiseMode; 3] = [NoiseMode::Stock, NoiseMode::Continuous, NoiseMode::ErrorDivisible];

    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Stock => "stock",
            NoiseMode::Continuous => "continuous",
            NoiseMode::ErrorDivisible => "error_divisible",
            NoiseMode::Noiseless => "noiseless",
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "stock" => Ok(NoiseMode::Stock),
            "continuous" => Ok(NoiseMode::Continuous),
            "error_divisible" | "divisible" => Ok(NoiseMode::ErrorDivisible),
            "noiseless" | "ideal" => Ok(NoiseMode::Noiseless),
            other => Err(Error::InvalidParameter(format!("unknown noise mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePolicy<T> {
    pub mode: NoiseMode,
    pub p1q: T,
    pub p2q_base: T,
}

impl<T: Real> NoisePolicy<T> {
    pub fn new(mode: NoiseMode) -> Self {
        Self {
            mode,
            p1q: T::lit(0.001),
            p2q_base: T::lit(0.01),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: T| p >= T::zero() && p <= T::one();
        if unit(self.p1q) && unit(self.p2q_base) && unit(self.stock_block()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("noise probabilities must lie in [0, 1]".into()))
        }
    }

    /// A parametric two-qubit block rebuilt from two native two-qubit gates and four
    /// single-qubit gates.
    pub fn stock_block(&self) -> T {
        T::lit(2.0) * self.p2q_base + T::lit(4.0) * self.p1q
    }
}

/// Fraction of a full rotation carried by a two-qubit op. `ZZ(theta)` equals
/// `CPHASE(-2 theta)` up to local Z rotations, so it counts at twice its angle.
fn rotation_fraction<T: Real>(op: &CircuitOp<T>) -> T {
    let a = op.angle.unwrap_or_else(T::zero).abs();
    let f = match op.kind {
        GateKind::Iswap | GateKind::Cphase => a / T::pi(),
        GateKind::Zz => T::lit(2.0) * a / T::pi(),
        GateKind::SqrtIswap => T::lit(0.5),
        _ => T::one(),
    };
    f.max(T::zero()).min(T::one())
}

/// Depolarizing probability attached to `op` under `policy`.
pub fn noise_for<T: Real>(op: &CircuitOp<T>, policy: &NoisePolicy<T>) -> T {
    if policy.mode == NoiseMode::Noiseless {
        return T::zero();
    }
    if op.kind.arity() == 1 {
        return policy.p1q;
    }
    match policy.mode {
        NoiseMode::Stock if op.kind == GateKind::Cnot => policy.p2q_base,
        NoiseMode::Stock => policy.stock_block(),
        NoiseMode::Continuous => policy.p2q_base,
        NoiseMode::ErrorDivisible => policy.p2q_base * rotation_fraction(op),
        NoiseMode::Noiseless => T::zero(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T: Real> {
    pub n: usize,
    pub rho: CMatrix<T>,
}

pub(crate) fn check_register(n: usize, allow_large: bool) -> Result<()> {
    let max = if allow_large { MAX_QUBITS_LARGE } else { MAX_QUBITS };
    if n == 0 || n > max {
        return Err(Error::RegisterTooLarge { n, max });
    }
    Ok(())
}

fn bit_of(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Row offsets of the `2^k` basis states of `qubits`, in the gate's own ordering.
fn local_offsets(n: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|local| {
            qubits
                .iter()
                .enumerate()
                .filter(|(i, _)| local & (1 << (k - 1 - i)) != 0)
                .map(|(_, &q)| bit_of(n, q))
                .sum()
        })
        .collect()
}

/// Indices with every bit of `qubits` cleared.
fn base_indices(n: usize, qubits: &[usize]) -> Vec<usize> {
    let mask: usize = qubits.iter().map(|&q| bit_of(n, q)).sum();
    (0..1usize << n).filter(|i| i & mask == 0).collect()
}

/// `m <- U_Q m` for a gate `u` on `qubits`.
fn apply_left<T: Real>(m: &mut CMatrix<T>, n: usize, qubits: &[usize], u: &CMatrix<T>) {
    let offs = local_offsets(n, qubits);
    let bases = base_indices(n, qubits);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); offs.len()];
    for col in 0..m.ncols() {
        for &b in &bases {
            for (k, &o) in offs.iter().enumerate() {
                buf[k] = m[(b + o, col)];
            }
            for (r, &o) in offs.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (k, v) in buf.iter().enumerate() {
                    acc += u[(r, k)] * v;
                }
                m[(b + o, col)] = acc;
            }
        }
    }
}

/// `m <- m U_Q^dagger`.
fn apply_right_adjoint<T: Real>(m: &mut CMatrix<T>, n: usize, qubits: &[usize], u: &CMatrix<T>) {
    let offs = local_offsets(n, qubits);
    let bases = base_indices(n, qubits);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); offs.len()];
    for row in 0..m.nrows() {
        for &b in &bases {
            for (k, &o) in offs.iter().enumerate() {
                buf[k] = m[(row, b + o)];
            }
            for (c, &o) in offs.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (k, v) in buf.iter().enumerate() {
                    acc += v * u[(c, k)].conj();
                }
                m[(row, b + o)] = acc;
            }
        }
    }
}

impl<T: Real> DensityState<T> {
    /// `|b><b|` for the basis state whose qubit `q` is `bits[q]`.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        Self::basis_with_limit(bits, false)
    }

    pub fn basis_with_limit(bits: &[u8], allow_large: bool) -> Result<Self> {
        let n = bits.len();
        check_register(n, allow_large)?;
        let idx = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(|(q, _)| bit_of(n, q))
            .sum::<usize>();
        let d = 1 << n;
        let mut rho = CMatrix::zeros(d, d);
        rho[(idx, idx)] = Complex::new(T::one(), T::zero());
        Ok(Self { n, rho })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn trace(&self) -> Complex<T> {
        self.rho.trace()
    }

    pub fn purity(&self) -> T {
        (&self.rho * &self.rho).trace().re
    }

    /// `Tr(rho H)` for a dense Hermitian `H`.
    pub fn expectation(&self, h: &CMatrix<T>) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += (self.rho[(i, j)] * h[(j, i)]).re;
            }
        }
        acc
    }

    /// Smallest eigenvalue of the (Hermitian part of) `rho`.
    pub fn min_eigenvalue(&self) -> T {
        let herm = (&self.rho + self.rho.adjoint()).scale(T::lit(0.5));
        herm.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_defect(&self) -> T {
        let d = &self.rho - self.rho.adjoint();
        d.iter().map(|x| x.modulus()).fold(T::zero(), |a, b| a.max(b))
    }

    /// In-place `rho <- U rho U^dagger`.
    pub fn apply(&mut self, op: &CircuitOp<T>) -> Result<()> {
        op.validate(self.n)?;
        let u = op.matrix();
        apply_left(&mut self.rho, self.n, &op.qubits, &u);
        apply_right_adjoint(&mut self.rho, self.n, &op.qubits, &u);
        Ok(())
    }

    /// In-place `rho <- (1 - p) rho + p Tr_Q(rho) (x) I_Q / 2^k`.
    pub fn depolarize(&mut self, qubits: &[usize], p: T) -> Result<()> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing probability {} outside [0, 1]",
                p.to_f64_lossy()
            )));
        }
        for &q in qubits {
            if q >= self.n {
                return Err(Error::QubitOutOfRange { index: q, n: self.n });
            }
        }
        if p == T::zero() || qubits.is_empty() {
            return Ok(());
        }
        let offs = local_offsets(self.n, qubits);
        let bases = base_indices(self.n, qubits);
        let weight = p / T::from_usize(offs.len()).unwrap();
        let keep = T::one() - p;
        for &bi in &bases {
            for &bj in &bases {
                let mut reduced = Complex::new(T::zero(), T::zero());
                for &o in &offs {
                    reduced += self.rho[(bi + o, bj + o)];
                }
                for &oi in &offs {
                    for &oj in &offs {
                        let v = self.rho[(bi + oi, bj + oj)].scale(keep);
                        self.rho[(bi + oi, bj + oj)] = if oi == oj { v + reduced.scale(weight) } else { v };
                    }
                }
            }
        }
        Ok(())
    }
}

/// Functional form of [`DensityState::apply`].
pub fn apply_gate<T: Real>(mut state: DensityState<T>, op: &CircuitOp<T>) -> Result<DensityState<T>> {
    state.apply(op)?;
    Ok(state)
}

/// Functional form of [`DensityState::depolarize`].
pub fn depolarize<T: Real>(mut state: DensityState<T>, qubits: &[usize], p: T) -> Result<DensityState<T>> {
    state.depolarize(qubits, p)?;
    Ok(state)
}

/// Applies each gate followed by its depolarizing channel.
pub fn run_noisy<T: Real>(state: &mut DensityState<T>, circuit: &[CircuitOp<T>], policy: &NoisePolicy<T>) -> Result<()> {
    policy.validate()?;
    for op in circuit {
        state.apply(op)?;
        state.depolarize(&op.qubits, noise_for(op, policy))?;
    }
    Ok(())
}

/// Ordered product of the gate unitaries on `n` qubits.
pub fn circuit_unitary<T: Real>(circuit: &[CircuitOp<T>], n: usize) -> Result<CMatrix<T>> {
    circuit_unitary_with_limit(circuit, n, false)
}

pub fn circuit_unitary_with_limit<T: Real>(circuit: &[CircuitOp<T>], n: usize, allow_large: bool) -> Result<CMatrix<T>> {
    check_register(n, allow_large)?;
    if allow_large && n > MAX_QUBITS {
        log::warn!("dense {n}-qubit unitary needs {} MiB", (16usize << (2 * n)) >> 20);
    }
    let d = 1 << n;
    let mut u = CMatrix::identity(d, d);
    for op in circuit {
        op.validate(n)?;
        apply_left(&mut u, n, &op.qubits, &op.matrix());
    }
    Ok(u)
}

/// `|Tr(U^dagger V)| / d` is one within `tol`.
pub fn equivalent_up_to_global_phase<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>, tol: T) -> bool {
    u.shape() == v.shape() && (T::one() - phase_insensitive_overlap(u, v)).abs() <= tol
}

pub fn swap_matrix<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(4, 4);
    let o = Complex::new(T::one(), T::zero());
    m[(0, 0)] = o;
    m[(1, 2)] = o;
    m[(2, 1)] = o;
    m[(3, 3)] = o;
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T: Real> {
    pub name: &'static str,
    pub circuit: Circuit<T>,
    pub target: CMatrix<T>,
}

impl<T: Real> Decomposition<T> {
    /// `1 - |Tr(U^dagger V)| / 4` of the circuit against its target.
    pub fn defect(&self) -> Result<T> {
        let u = circuit_unitary(&self.circuit, 2)?;
        Ok(T::one() - phase_insensitive_overlap(&u, &self.target))
    }
}

pub fn swap_from_3_cnot<T: Real>() -> Decomposition<T> {
    Decomposition {
        name: "swap_from_3_cnot",
        circuit: vec![CircuitOp::cnot(0, 1), CircuitOp::cnot(1, 0), CircuitOp::cnot(0, 1)],
        target: swap_matrix(),
    }
}

/// iSWAP from two CNOTs, Hadamards and S gates.
pub fn iswap_from_cnot_plus_1q<T: Real>() -> Decomposition<T> {
    let s = T::frac_pi_2();
    Decomposition {
        name: "iswap_from_cnot_plus_1q",
        circuit: vec![
            CircuitOp::rz(0, s),
            CircuitOp::rz(1, s),
            CircuitOp::h(0),
            CircuitOp::cnot(0, 1),
            CircuitOp::cnot(1, 0),
            CircuitOp::h(1),
        ],
        target: target_unitary(&GateTarget::new(GateFamily::Iswap, T::pi())),
    }
}

/// SWAP from three sqrt(iSWAP). Each one generates `XX + YY`; local Clifford
/// frames turn the second into `YY + ZZ` and the third into `XX + ZZ`, and the
/// commuting product is `exp(i pi/4 (XX + YY + ZZ))`.
pub fn swap_from_sqrt_iswap<T: Real>() -> Decomposition<T> {
    let q = T::frac_pi_2();
    Decomposition {
        name: "swap_from_sqrt_iswap",
        circuit: vec![
            CircuitOp::sqrt_iswap(0, 1),
            CircuitOp::h(0),
            CircuitOp::h(1),
            CircuitOp::sqrt_iswap(0, 1),
            CircuitOp::h(0),
            CircuitOp::h(1),
            CircuitOp::rx(0, q),
            CircuitOp::rx(1, q),
            CircuitOp::sqrt_iswap(0, 1),
            CircuitOp::rx(0, -q),
            CircuitOp::rx(1, -q),
        ],
        target: swap_matrix(),
    }
}

/// iSWAP(theta) from two sqrt(iSWAP) and antisymmetric Z rotations, which leave
/// `|00>` and `|11>` untouched and act as `exp(-i b Z')` on the exchange pair.
pub fn iswap_theta_from_sqrt_iswap<T: Real>(theta: T) -> Decomposition<T> {
    let outer = -T::frac_pi_4();
    let middle = T::frac_pi_2() - theta * T::lit(0.5);
    Decomposition {
        name: "iswap_theta_from_sqrt_iswap",
        circuit: vec![
            CircuitOp::rz(0, outer),
            CircuitOp::rz(1, -outer),
            CircuitOp::sqrt_iswap(0, 1),
            CircuitOp::rz(0, middle),
            CircuitOp::rz(1, -middle),
            CircuitOp::sqrt_iswap(0, 1),
            CircuitOp::rz(0, outer),
            CircuitOp::rz(1, -outer),
        ],
        target: target_unitary(&GateTarget::new(GateFamily::Iswap, theta)),
    }
}

/// The four reference decompositions; the parametric one at `theta = pi/3`.
pub fn decomposition_library<T: Real>() -> Vec<Decomposition<T>> {
    vec![
        swap_from_3_cnot(),
        iswap_from_cnot_plus_1q(),
        swap_from_sqrt_iswap(),
        iswap_theta_from_sqrt_iswap(T::frac_pi_3()),
    ]
}

/// Dense `2^n` matrix of a sum of Pauli strings given as `(coefficient, [(qubit, 'x'|'y'|'z')])`.
pub fn pauli_sum<T: Real>(n: usize, terms: &[(T, Vec<(usize, char)>)]) -> Result<CMatrix<T>> {
    check_register(n, true)?;
    let d = 1usize << n;
    let mut h = DMatrix::from_element(d, d, Complex::new(T::zero(), T::zero()));
    for (c, string) in terms {
        for col in 0..d {
            let mut row = col;
            let mut amp = Complex::new(*c, T::zero());
            for &(q, p) in string {
                if q >= n {
                    return Err(Error::QubitOutOfRange { index: q, n });
                }
                let bit = bit_of(n, q);
                let set = col & bit != 0;
                match p {
                    'x' => row ^= bit,
                    'y' => {
                        row ^= bit;
                        // Y|0> = i|1>, Y|1> = -i|0>
                        amp *= if set { Complex::new(T::zero(), -T::one()) } else { Complex::new(T::zero(), T::one()) };
                    }
                    'z' => {
                        if set {
                            amp = -amp;
                        }
                    }
                    other => return Err(Error::InvalidParameter(format!("unknown Pauli '{other}'"))),
                }
            }
            h[(row, col)] += amp;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{kron, max_abs_diff, max_abs_diff_up_to_phase};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    fn paulis() -> [CMatrix<f64>; 4] {
        [
            CMatrix::identity(2, 2),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        ]
    }

    fn dense_of(op: &CircuitOp<f64>, n: usize) -> CMatrix<f64> {
        circuit_unitary(std::slice::from_ref(op), n).unwrap()
    }

    #[test]
    fn x_flips() {
        let s = apply_gate(DensityState::<f64>::basis(&[0]).unwrap(), &CircuitOp::x(0)).unwrap();
        assert!((s.rho[(1, 1)].re - 1.0).abs() < 1e-15 && s.rho[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn iswap_moves_population() {
        let s = DensityState::<f64>::basis(&[0, 1]).unwrap();
        let s = apply_gate(s, &CircuitOp::iswap(0, 1, std::f64::consts::PI)).unwrap();
        // |10> is index 2
        assert!((s.rho[(2, 2)].re - 1.0).abs() < 1e-12);
        assert!(s.rho[(2, 2)].im.abs() < 1e-12 && s.rho[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn cnot_twice_is_identity() {
        let u = circuit_unitary::<f64>(&[CircuitOp::cnot(0, 1), CircuitOp::cnot(0, 1)], 2).unwrap();
        assert!(max_abs_diff(&u, &CMatrix::identity(4, 4)) < 1e-15);
        let e = circuit_unitary::<f64>(&[], 3).unwrap();
        assert!(max_abs_diff(&e, &CMatrix::identity(8, 8)) == 0.0);
    }

    #[test]
    fn embedding_matches_kron() {
        // a gate on (0, 2) of three qubits against an explicit permutation oracle
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = CircuitOp::iswap(0, 2, rng.gen_range(0.0..6.0));
        let u = dense_of(&op, 3);
        let g = op.matrix();
        for col in 0..8usize {
            for row in 0..8usize {
                let (a, b, cq) = ((row >> 2) & 1, (row >> 1) & 1, row & 1);
                let (a2, b2, c2) = ((col >> 2) & 1, (col >> 1) & 1, col & 1);
                let expect = if b == b2 { g[(a * 2 + cq, a2 * 2 + c2)] } else { c(0., 0.) };
                assert!((u[(row, col)] - expect).norm() < 1e-14);
            }
        }
        // reversed qubit order swaps the roles
        let rev = dense_of(&CircuitOp::cnot(1, 0), 2);
        let sw = swap_matrix::<f64>();
        assert!(max_abs_diff(&rev, &(&sw * dense_of(&CircuitOp::cnot(0, 1), 2) * &sw)) < 1e-15);
        let hx = kron(&CircuitOp::<f64>::h(0).matrix(), &CircuitOp::<f64>::x(0).matrix());
        let both = circuit_unitary::<f64>(&[CircuitOp::h(0), CircuitOp::x(1)], 2).unwrap();
        assert!(max_abs_diff(&hx, &both) < 1e-15);
    }

    #[test]
    fn validation() {
        let s = DensityState::<f64>::basis(&[0, 0]).unwrap();
        assert!(matches!(
            apply_gate(s.clone(), &CircuitOp::x(2)),
            Err(Error::QubitOutOfRange { index: 2, n: 2 })
        ));
        assert!(apply_gate(s.clone(), &CircuitOp::cnot(1, 1)).is_err());
        let bad = CircuitOp::<f64> {
            kind: GateKind::Rz,
            qubits: vec![0],
            angle: None,
        };
        assert!(apply_gate(s, &bad).is_err());
        assert!(matches!(
            circuit_unitary::<f64>(&[], 11),
            Err(Error::RegisterTooLarge { n: 11, max: 10 })
        ));
        assert!(circuit_unitary_with_limit::<f64>(&[], 13, true).is_err());
    }

    #[test]
    fn depolarize_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = DensityState::<f64>::basis(&[1, 0]).unwrap();
        s.apply(&CircuitOp::h(0)).unwrap();
        s.apply(&CircuitOp::cnot(0, 1)).unwrap();
        s.apply(&CircuitOp::rx(1, rng.gen_range(0.0..3.0))).unwrap();
        let same = depolarize(s.clone(), &[0, 1], 0.0).unwrap();
        assert_eq!(same, s);
        let full = depolarize(s.clone(), &[1], 1.0).unwrap();
        // reduced state of qubit 1
        let r00 = full.rho[(0, 0)] + full.rho[(2, 2)];
        let r01 = full.rho[(0, 1)] + full.rho[(2, 3)];
        let r11 = full.rho[(1, 1)] + full.rho[(3, 3)];
        assert!((r00.re - 0.5).abs() < 1e-14 && (r11.re - 0.5).abs() < 1e-14 && r01.norm() < 1e-14);
        assert!(depolarize(s, &[0], 1.5).is_err());
    }

    #[test]
    fn depolarize_matches_two_qubit_kraus_oracle() {
        let p = 0.01;
        let s = DensityState::<f64>::basis(&[0, 0]).unwrap();
        let out = depolarize(s.clone(), &[0, 1], p).unwrap();
        // (1 - p) rho + p/16 sum_P P rho P^dagger over all 16 two-qubit Paulis
        let ps = paulis();
        let mut oracle = s.rho.scale(1.0 - p);
        for a in &ps {
            for b in &ps {
                let k = kron(a, b);
                oracle += (&k * &s.rho * k.adjoint()).scale(p / 16.0);
            }
        }
        assert!(max_abs_diff(&out.rho, &oracle) < 1e-15);
        let purity_oracle = (&oracle * &oracle).trace().re;
        assert!((out.purity() - purity_oracle).abs() < 1e-15);
        // |00> keeps 1 - 3p/4 on the diagonal, p/4 on the other three states
        let expect = (1.0 - 0.75 * p).powi(2) + 3.0 * (p / 4.0).powi(2);
        assert!((out.purity() - expect).abs() < 1e-14);
    }

    #[test]
    fn noise_policy() {
        let pi = std::f64::consts::PI;
        let ed = NoisePolicy::<f64>::new(NoiseMode::ErrorDivisible);
        assert!((noise_for(&CircuitOp::iswap(0, 1, pi), &ed) - 0.01).abs() < 1e-15);
        assert!((noise_for(&CircuitOp::iswap(0, 1, pi / 4.0), &ed) - 0.0025).abs() < 1e-15);
        assert!((noise_for(&CircuitOp::iswap(0, 1, -pi / 4.0), &ed) - 0.0025).abs() < 1e-15);
        assert!((noise_for(&CircuitOp::iswap(0, 1, 3.0 * pi), &ed) - 0.01).abs() < 1e-15);
        assert!((noise_for(&CircuitOp::zz(0, 1, pi / 8.0), &ed) - 0.0025).abs() < 1e-15);
        let stock = NoisePolicy::<f64>::new(NoiseMode::Stock);
        assert_eq!(stock.stock_block(), 2.0 * 0.01 + 4.0 * 0.001);
        assert!((noise_for(&CircuitOp::zz(0, 1, 0.123), &stock) - 0.024).abs() < 1e-15);
        assert!((noise_for(&CircuitOp::iswap(0, 1, 0.5), &stock) - 0.024).abs() < 1e-15);
        let cont = NoisePolicy::<f64>::new(NoiseMode::Continuous);
        assert_eq!(noise_for(&CircuitOp::iswap(0, 1, 0.01), &cont), 0.01);
        for m in NoiseMode::NOISY {
            assert_eq!(noise_for(&CircuitOp::rz(0, 0.3), &NoisePolicy::new(m)), 0.001);
        }
        let quiet = NoisePolicy::<f64>::new(NoiseMode::Noiseless);
        assert_eq!(noise_for(&CircuitOp::zz(0, 1, 1.0), &quiet), 0.0);
        assert_eq!("error-divisible".parse::<NoiseMode>().unwrap(), NoiseMode::ErrorDivisible);
        let mut bad = stock;
        bad.p2q_base = 0.6;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn library_entries_match_targets() {
        let lib = decomposition_library::<f64>();
        assert_eq!(lib.len(), 4);
        for d in &lib {
            let u = circuit_unitary(&d.circuit, 2).unwrap();
            assert!(equivalent_up_to_global_phase(&u, &d.target, 1e-10), "{}", d.name);
            assert!(max_abs_diff_up_to_phase(&u, &d.target) < 1e-10, "{}", d.name);
        }
        let u = circuit_unitary(&swap_from_3_cnot::<f64>().circuit, 2).unwrap();
        assert_eq!(u, swap_matrix());
    }

    #[test]
    fn half_iswap_is_one_sqrt_iswap() {
        let d = iswap_theta_from_sqrt_iswap(std::f64::consts::FRAC_PI_2);
        let u = circuit_unitary(&d.circuit, 2).unwrap();
        let single = CircuitOp::<f64>::sqrt_iswap(0, 1).matrix();
        assert!(max_abs_diff_up_to_phase(&u, &single) < 1e-12);
    }

    #[test]
    fn random_noisy_circuits_stay_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3;
        let mut s = DensityState::<f64>::basis(&[0, 1, 0]).unwrap();
        let policy = NoisePolicy::new(NoiseMode::Stock);
        for _ in 0..1000 {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            let t = rng.gen_range(-4.0..4.0);
            let op = match rng.gen_range(0..9) {
                0 => CircuitOp::iswap(a, b, t),
                1 => CircuitOp::zz(a, b, t),
                2 => CircuitOp::cphase(a, b, t),
                3 => CircuitOp::cnot(a, b),
                4 => CircuitOp::sqrt_iswap(a, b),
                5 => CircuitOp::rz(a, t),
                6 => CircuitOp::rx(a, t),
                7 => CircuitOp::h(a),
                _ => CircuitOp::x(a),
            };
            run_noisy(&mut s, std::slice::from_ref(&op), &policy).unwrap();
            assert!((s.trace() - c(1.0, 0.0)).norm() < 1e-10);
        }
        assert!(s.min_eigenvalue() >= -1e-9);
        assert!(s.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn pauli_sum_oracle() {
        let ps = paulis();
        let h = pauli_sum::<f64>(2, &[(1.0, vec![(0, 'x'), (1, 'x')]), (0.5, vec![(0, 'y'), (1, 'y')]), (2.0, vec![(1, 'z')])]).unwrap();
        let oracle = kron(&ps[1], &ps[1]) + kron(&ps[2], &ps[2]).scale(0.5) + kron(&ps[0], &ps[3]).scale(2.0);
        assert!(max_abs_diff(&h, &oracle) < 1e-15);
    }

    #[test]
    fn serde_shape() {
        let op = CircuitOp::iswap(0, 1, 0.5f64);
        let v: serde_json::Value = serde_json::to_value(&op).unwrap();
        assert_eq!(v["kind"], "iswap");
        assert_eq!(v["qubits"], serde_json::json!([0, 1]));
        let back: Circuit<f64> = serde_json::from_str(r#"[{"kind":"cnot","qubits":[1,0]},{"kind":"sqrt_iswap","qubits":[0,1]}]"#).unwrap();
        assert_eq!(back[0], CircuitOp::cnot(1, 0));
        assert_eq!(back[1].angle, None);
    }

    #[test]
    fn single_precision_channel() {
        let mut s = DensityState::<f32>::basis(&[0, 0]).unwrap();
        s.apply(&CircuitOp::h(0)).unwrap();
        s.depolarize(&[0, 1], 0.1).unwrap();
        assert!((s.trace().re - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn channels_preserve_trace(seed in 0u64..10_000, p in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = DensityState::<f64>::basis(&[1, 0, 1]).unwrap();
            s.apply(&CircuitOp::h(rng.gen_range(0..3))).unwrap();
            s.apply(&CircuitOp::iswap(0, 2, rng.gen_range(-3.0..3.0))).unwrap();
            s.depolarize(&[rng.gen_range(0..3)], p).unwrap();
            s.depolarize(&[0, 1], p).unwrap();
            prop_assert!((s.trace() - c(1.0, 0.0)).norm() < 1e-10);
            prop_assert!(s.hermiticity_defect() < 1e-12);
        }

        #[test]
        fn parametric_iswap_decomposes(theta in -10.0f64..10.0) {
            let d = iswap_theta_from_sqrt_iswap(theta);
            let u = circuit_unitary(&d.circuit, 2).unwrap();
            prop_assert!(max_abs_diff_up_to_phase(&u, &d.target) < 1e-10);
        }
    }
}
