//! Hamiltonians of two capacitively coupled anharmonic oscillators.
//!
//! Basis ordering: the Fock state `|n1 n2>` sits at index `n1 * levels + n2`.
//! Every Hamiltonian in this module is real symmetric, so it is stored as a
//! real matrix and promoted to complex only where a unitary is formed.
//!
//! Units: MHz. The angular factor and the MHz-ns scale are applied in
//! [`crate::propagate`] and nowhere else.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CMatrix, Real};

/// Device constants of the two-oscillator system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T> {
    #[serde(rename = "omega1_mhz")]
    pub omega1: T,
    #[serde(rename = "omega2_mhz")]
    pub omega2: T,
    /// Anharmonicity magnitude; the Hamiltonian carries the minus sign.
    #[serde(rename = "delta1_mhz")]
    pub delta1: T,
    #[serde(rename = "delta2_mhz")]
    pub delta2: T,
    /// Fock truncation per oscillator.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    3
}

impl<T: Real> DeviceParams<T> {
    /// Symmetric device with nonlinearity `delta` and the given truncation.
    /// Qubit frequencies default to 5000 / 5300 MHz; they only enter the lab frame.
    pub fn symmetric(delta: T, levels: usize) -> Self {
        Self {
            omega1: T::lit(5000.0),
            omega2: T::lit(5300.0),
            delta1: delta,
            delta2: delta,
            levels,
        }
    }

    /// The 300 MHz, three-level working point.
    pub fn standard() -> Self {
        Self::symmetric(T::lit(300.0), 3)
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn dim(&self) -> usize {
        self.levels * self.levels
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "levels must be >= 2, got {}",
                self.levels
            )));
        }
        for (name, v) in [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.delta1 <= T::zero() || self.delta2 <= T::zero() {
            return Err(Error::InvalidParameter(
                "anharmonicities must be positive magnitudes".into(),
            ));
        }
        Ok(())
    }

    /// Index of the Fock state `|n1 n2>`.
    pub fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * self.levels + n2
    }

    /// Indices of `|00>, |01>, |10>, |11>` in the truncated space.
    pub fn computational_indices(&self) -> [usize; 4] {
        [
            self.index(0, 0),
            self.index(0, 1),
            self.index(1, 0),
            self.index(1, 1),
        ]
    }
}

/// Real symmetric Hamiltonian in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<T: Real>(pub DMatrix<T>);

impl<T: Real> Hamiltonian<T> {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.0[(row, col)]
    }

    /// `max |H - H^T|`.
    pub fn max_asymmetry(&self) -> T {
        let m = &self.0;
        let mut worst = T::zero();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Hermiticity to `1e-12` relative to the largest entry.
    pub fn is_hermitian(&self) -> bool {
        self.max_asymmetry() <= T::lit(1e-12) * self.max_abs().max(T::one())
    }

    pub fn to_complex(&self) -> CMatrix<T> {
        self.0.map(|x| Complex::new(x, T::zero()))
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Self, scale: T) -> Self {
        Self(&self.0 + &other.0 * scale)
    }
}

/// Single-mode annihilation operator truncated to `levels`.
pub fn annihilation<T: Real>(levels: usize) -> DMatrix<T> {
    let mut a = DMatrix::zeros(levels, levels);
    for n in 1..levels {
        a[(n - 1, n)] = T::from_usize(n).unwrap().sqrt();
    }
    a
}

fn mode_operators<T: Real>(levels: usize) -> (DMatrix<T>, DMatrix<T>) {
    let a = annihilation::<T>(levels);
    let id = DMatrix::<T>::identity(levels, levels);
    (a.kronecker(&id), id.kronecker(&a))
}

/// `-(d1/2) a1+ a1+ a1 a1 - (d2/2) a2+ a2+ a2 a2`.
///
/// Built from `a+ a+ a a = n (n - 1)` on the diagonal so the entries are exact.
fn anharmonic_term<T: Real>(params: &DeviceParams<T>) -> DMatrix<T> {
    let l = params.levels;
    let half = T::lit(0.5);
    let pairs = |n: usize| T::from_usize(n * n.saturating_sub(1)).unwrap();
    DMatrix::from_fn(l * l, l * l, |i, j| {
        if i != j {
            return T::zero();
        }
        let (n1, n2) = (i / l, i % l);
        -(params.delta1 * half) * pairs(n1) - (params.delta2 * half) * pairs(n2)
    })
}

/// `a1+ a2 + a1 a2+`.
pub fn exchange_operator<T: Real>(levels: usize) -> DMatrix<T> {
    let (a1, a2) = mode_operators::<T>(levels);
    a1.transpose() * &a2 + &a1 * a2.transpose()
}

/// `(a1+ + a1)(a2+ + a2)`.
pub fn quadrature_coupling_operator<T: Real>(levels: usize) -> DMatrix<T> {
    let (a1, a2) = mode_operators::<T>(levels);
    (a1.transpose() + &a1) * (a2.transpose() + &a2)
}

fn number_operators<T: Real>(levels: usize) -> (DMatrix<T>, DMatrix<T>) {
    let d = levels * levels;
    let diag = |occupation: &dyn Fn(usize) -> usize| {
        DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                T::from_usize(occupation(i)).unwrap()
            } else {
                T::zero()
            }
        })
    };
    (diag(&|i| i / levels), diag(&|i| i % levels))
}

/// Rotating-frame Hamiltonian with the coupling strength folded into one number:
/// `-(d1/2) a1+a1+a1a1 - (d2/2) a2+a2+a2a2 - coupling (a1+ a2 + a1 a2+)`.
pub fn build_rotating_hamiltonian<T: Real>(
    params: &DeviceParams<T>,
    coupling: T,
) -> Result<Hamiltonian<T>> {
    params.validate()?;
    if !coupling.is_finite() {
        return Err(Error::InvalidParameter("coupling is not finite".into()));
    }
    let h = anharmonic_term(params) - exchange_operator::<T>(params.levels) * coupling;
    Ok(Hamiltonian(h))
}

/// Lab-frame Duffing Hamiltonian with the non-RWA coupling `g (a1+ + a1)(a2+ + a2)`.
pub fn build_lab_hamiltonian<T: Real>(params: &DeviceParams<T>, g: T) -> Result<Hamiltonian<T>> {
    params.validate()?;
    if !g.is_finite() {
        return Err(Error::InvalidParameter("coupling is not finite".into()));
    }
    let (n1, n2) = number_operators::<T>(params.levels);
    let h = n1 * params.omega1
        + n2 * params.omega2
        + anharmonic_term(params)
        + quadrature_coupling_operator::<T>(params.levels) * g;
    Ok(Hamiltonian(h))
}

/// Second-order effective Hamiltonian on the qubit subspace (basis `00, 01, 10, 11`):
/// `-c (s1+ s2- + s1- s2+) + (c^2/d)(1 + z1)(1 + z2)` with `z|1> = +|1>`.
///
/// For unequal anharmonicities the dispersive shift of `|11>` is `2c^2/d1 + 2c^2/d2`,
/// which reduces to `4c^2/d` in the symmetric case.
pub fn build_effective_hamiltonian<T: Real>(
    params: &DeviceParams<T>,
    coupling: T,
) -> Result<Hamiltonian<T>> {
    if params.delta1 == T::zero() || params.delta2 == T::zero() {
        return Err(Error::InvalidParameter(
            "effective Hamiltonian needs nonzero anharmonicity".into(),
        ));
    }
    if !coupling.is_finite() {
        return Err(Error::InvalidParameter("coupling is not finite".into()));
    }
    let two = T::lit(2.0);
    let mut h = DMatrix::zeros(4, 4);
    h[(1, 2)] = -coupling;
    h[(2, 1)] = -coupling;
    let c2 = coupling * coupling;
    h[(3, 3)] = two * c2 / params.delta1 + two * c2 / params.delta2;
    Ok(Hamiltonian(h))
}

/// Which coupler term the drive multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveKind {
    /// `-(a1+ a2 + a1 a2+)`: excitation exchange, generates iSWAP.
    Exchange,
    /// `-(a1+ a2 + a1 a2+ + a1+ a2+ + a1 a2)`: drive at both difference and sum
    /// frequencies, whose qubit-block limit is `-XX`.
    Xx,
}

/// `H(t) = drift + coupling(t) * control`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlHamiltonian<T: Real> {
    pub drift: Hamiltonian<T>,
    pub control: Hamiltonian<T>,
}

impl<T: Real> ControlHamiltonian<T> {
    /// Rotating-frame model driven through the given coupler term.
    pub fn rotating(params: &DeviceParams<T>, drive: DriveKind) -> Result<Self> {
        params.validate()?;
        let control = match drive {
            DriveKind::Exchange => -exchange_operator::<T>(params.levels),
            DriveKind::Xx => -quadrature_coupling_operator::<T>(params.levels),
        };
        Ok(Self {
            drift: Hamiltonian(anharmonic_term(params)),
            control: Hamiltonian(control),
        })
    }

    /// Lab-frame model; the time-dependent coefficient is `g(t)`.
    pub fn lab(params: &DeviceParams<T>) -> Result<Self> {
        let drift = build_lab_hamiltonian(params, T::zero())?;
        Ok(Self {
            drift,
            control: Hamiltonian(quadrature_coupling_operator::<T>(params.levels)),
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn at(&self, coupling: T) -> Hamiltonian<T> {
        self.drift.add_scaled(&self.control, coupling)
    }
}
