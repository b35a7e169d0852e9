//! Target gates and the intrinsic-error figure of merit.
//!
//! Qubit basis ordering is `|q1 q2>` = `00, 01, 10, 11`. For the pulse-level
//! targets the qubit is the bottom of an oscillator, so `sigma^+ = |1><0|`
//! and `sigma^z = diag(-1, 1)` (`sigma^z |1> = +|1>`).

use nalgebra::ComplexField;
use num_complex::Complex;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DriveKind;
use crate::scalar::{cis, unitarity_residual, CMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateFamily {
    Iswap,
    Xx,
    Xcx,
    Cphase,
    Zz,
}

impl GateFamily {
    pub fn name(self) -> &'static str {
        match self {
            GateFamily::Iswap => "iswap",
            GateFamily::Xx => "xx",
            GateFamily::Xcx => "xcx",
            GateFamily::Cphase => "cphase",
            GateFamily::Zz => "zz",
        }
    }

    /// Coupler drive that realizes this family at the pulse level, if any.
    pub fn drive(self) -> Result<DriveKind> {
        match self {
            GateFamily::Iswap => Ok(DriveKind::Exchange),
            GateFamily::Xx => Ok(DriveKind::Xx),
            other => Err(Error::Unsupported(format!(
                "no pulse-level drive model for {}",
                other.name()
            ))),
        }
    }

    /// Full-rotation gate time used for the fractional tables.
    pub fn default_full_gate_time(self) -> f64 {
        match self {
            GateFamily::Iswap => 36.0,
            _ => 24.0,
        }
    }
}

impl std::str::FromStr for GateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iswap" => Ok(GateFamily::Iswap),
            "xx" => Ok(GateFamily::Xx),
            "xcx" => Ok(GateFamily::Xcx),
            "cphase" => Ok(GateFamily::Cphase),
            "zz" => Ok(GateFamily::Zz),
            other => Err(Error::InvalidParameter(format!("unknown gate family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTarget<T> {
    pub family: GateFamily,
    /// Rotation angle in radians; `pi` is the full gate.
    pub theta: T,
}

impl<T: Real> GateTarget<T> {
    pub fn new(family: GateFamily, theta: T) -> Self {
        Self { family, theta }
    }

    pub fn full(family: GateFamily) -> Self {
        Self::new(family, T::pi())
    }
}

fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Exact 4x4 unitary of the target gate.
pub fn target_unitary<T: Real>(target: &GateTarget<T>) -> CMatrix<T> {
    let th = target.theta;
    let zero = T::zero();
    let one = T::one();
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    match target.family {
        // exp[i th/2 (s1+ s2- + s1- s2+)]
        GateFamily::Iswap => {
            let (s, co) = (th * half).sin_cos();
            let mut u = CMatrix::identity(4, 4);
            u[(1, 1)] = c(co, zero);
            u[(2, 2)] = c(co, zero);
            u[(1, 2)] = c(zero, s);
            u[(2, 1)] = c(zero, s);
            u
        }
        // exp[i th/4 X1 X2]
        GateFamily::Xx => {
            let (s, co) = (th * quarter).sin_cos();
            let mut u = CMatrix::identity(4, 4).map(|x| x * co);
            for (i, j) in [(0, 3), (3, 0), (1, 2), (2, 1)] {
                u[(i, j)] = c(zero, s);
            }
            u
        }
        // exp[i th/4 (1 + X1)(1 + X2)] = 1 + (e^{i th} - 1) |++><++|
        GateFamily::Xcx => {
            let w = cis(th) - c(one, zero);
            CMatrix::from_fn(4, 4, |i, j| {
                let id = if i == j { one } else { zero };
                c(id, zero) + w * quarter
            })
        }
        GateFamily::Cphase => {
            let mut u = CMatrix::identity(4, 4);
            u[(3, 3)] = cis(th);
            u
        }
        // exp[-i th/2 Z1 Z2]; the sign convention of sigma^z drops out of Z1 Z2
        GateFamily::Zz => {
            let mut u = CMatrix::zeros(4, 4);
            u[(0, 0)] = cis(-th * half);
            u[(1, 1)] = cis(th * half);
            u[(2, 2)] = cis(th * half);
            u[(3, 3)] = cis(-th * half);
            u
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport<T> {
    /// `1 - F_avg` after virtual-Z optimization.
    pub error: T,
    /// Population lost from the computational block, averaged over its four inputs.
    pub leakage: T,
    #[serde(rename = "vz_phi1")]
    pub phi1: T,
    #[serde(rename = "vz_phi2")]
    pub phi2: T,
}

const GRID: usize = 64;

/// Sum `w0 + w1 e^{i p2} + w2 e^{i p1} + w3 e^{i(p1 + p2)}` where `w` is the diagonal of
/// `U_c V^dagger`; `|S|^2` is the phase-dependent part of `F_avg`.
fn vz_sum<T: Real>(w: &[Complex<T>; 4], p1: T, p2: T) -> Complex<T> {
    w[0] + w[1] * cis(p2) + w[2] * cis(p1) + w[3] * cis(p1 + p2)
}

fn wrap<T: Real>(x: T) -> T {
    let tau = T::two_pi();
    let r = x % tau;
    if r < T::zero() {
        r + tau
    } else {
        r
    }
}

/// Maximizes `|S(p1, p2)|` over the two virtual-Z phases.
///
/// A 64x64 grid seeds an exact coordinate ascent: for fixed `p2` the optimum of
/// `|a + b e^{i p1}|` is `p1 = arg a - arg b`, and symmetrically for `p2`.
fn optimize_virtual_z<T: Real>(w: &[Complex<T>; 4]) -> (T, T, T) {
    let step = T::two_pi() / T::from_usize(GRID).unwrap();
    let (mut p1, mut p2, mut best) = (T::zero(), T::zero(), vz_sum(w, T::zero(), T::zero()).modulus());
    for i in 0..GRID {
        for j in 0..GRID {
            let a = step * T::from_usize(i).unwrap();
            let b = step * T::from_usize(j).unwrap();
            let v = vz_sum(w, a, b).modulus();
            if v > best {
                best = v;
                p1 = a;
                p2 = b;
            }
        }
    }
    let tol = T::lit(1e-10);
    for _ in 0..200 {
        let a = w[0] + w[1] * cis(p2);
        let b = w[2] + w[3] * cis(p2);
        if b.modulus() > T::zero() {
            p1 = a.argument() - b.argument();
        }
        let a = w[0] + w[2] * cis(p1);
        let b = w[1] + w[3] * cis(p1);
        if b.modulus() > T::zero() {
            p2 = a.argument() - b.argument();
        }
        let v = vz_sum(w, p1, p2).modulus();
        let gain = v - best;
        if v > best {
            best = v;
        }
        if gain <= tol * tol {
            break;
        }
    }
    (wrap(p1), wrap(p2), best)
}

/// Projects a `levels^2` propagator onto the computational block.
pub fn computational_block<T: Real>(u: &CMatrix<T>) -> Result<CMatrix<T>> {
    let dim = u.nrows();
    let levels = (dim as f64).sqrt().round() as usize;
    if levels * levels != dim || levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not a two-oscillator space"
        )));
    }
    let idx = [0, 1, levels, levels + 1];
    Ok(CMatrix::from_fn(4, 4, |i, j| u[(idx[i], idx[j])]))
}

/// Intrinsic error of a simulated propagator against `target`.
///
/// With `M = V^dagger Z(p1) (x) Z(p2) P U P`, the error is
/// `1 - max_{p1,p2} [Tr(M^dagger M) + |Tr M|^2] / 20` and the leakage is
/// `1 - Tr(M^dagger M) / 4`. The global phase drops out of `|Tr M|`.
pub fn gate_error<T: Real>(u_sim: &CMatrix<T>, target: &GateTarget<T>) -> Result<ErrorReport<T>> {
    let residual = unitarity_residual(u_sim);
    if !(residual <= T::unitarity_slack()) {
        return Err(Error::NotUnitary {
            residual: residual.to_f64_lossy(),
        });
    }
    let uc = computational_block(u_sim)?;
    let v = target_unitary(target);
    let wmat = &uc * v.adjoint();
    let w = [wmat[(0, 0)], wmat[(1, 1)], wmat[(2, 2)], wmat[(3, 3)]];
    let (phi1, phi2, tr_abs) = optimize_virtual_z(&w);
    let kept = uc.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b);
    let dim = T::lit(4.0);
    let fidelity = (kept + tr_abs * tr_abs) / (dim * (dim + T::one()));
    let error = (T::one() - fidelity).max(T::zero()).min(T::one());
    let leakage = (T::one() - kept / dim).max(T::zero()).min(T::one());
    Ok(ErrorReport {
        error,
        leakage,
        phi1,
        phi2,
    })
}

/// Average gate fidelity at fixed virtual-Z phases.
pub fn fidelity_at<T: Real>(u_sim: &CMatrix<T>, target: &GateTarget<T>, phi1: T, phi2: T) -> Result<T> {
    let uc = computational_block(u_sim)?;
    let v = target_unitary(target);
    let wmat = &uc * v.adjoint();
    let w = [wmat[(0, 0)], wmat[(1, 1)], wmat[(2, 2)], wmat[(3, 3)]];
    let tr = vz_sum(&w, phi1, phi2).modulus();
    let kept = uc.iter().map(|x| x.norm_sqr()).fold(T::zero(), |a, b| a + b);
    Ok((kept + tr * tr) / T::lit(20.0))
}

/// Embeds a 4x4 qubit unitary into the `levels^2` oscillator space, identity elsewhere.
pub fn embed<T: Real>(u: &CMatrix<T>, levels: usize) -> CMatrix<T> {
    let dim = levels * levels;
    let idx = [0, 1, levels, levels + 1];
    let mut out = CMatrix::identity(dim, dim);
    for i in 0..4 {
        for j in 0..4 {
            out[(idx[i], idx[j])] = u[(i, j)];
        }
    }
    out
}

/// `theta0 / n` executed in `tg / n`.
pub fn fractional_schedule<T: Real>(theta0: T, fraction: Rational64, tg_full: T) -> Result<(T, T)> {
    let f = fraction.to_f64().unwrap_or(f64::NAN);
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let f = T::lit(f);
    Ok((theta0 * f, tg_full * f))
}

/// The fractional series of the tables: 1, 3/4, 1/2, 1/4, 1/6, 1/8, 1/12.
pub fn standard_fractions() -> Vec<Rational64> {
    [(1, 1), (3, 4), (1, 2), (1, 4), (1, 6), (1, 8), (1, 12)]
        .into_iter()
        .map(|(n, d)| Rational64::new(n, d))
        .collect()
}

pub fn parse_fraction(s: &str) -> Result<Rational64> {
    let bad = || Error::InvalidParameter(format!("cannot parse fraction '{s}'"));
    let r = match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Rational64::new(n, d)
        }
        None => Rational64::from_integer(s.trim().parse().map_err(|_| bad())?),
    };
    Ok(r)
}
