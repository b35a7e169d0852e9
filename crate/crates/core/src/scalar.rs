//! Scalar abstraction shared by the pulse-level and gate-level simulators.

use nalgebra::{DMatrix, RealField};
use nalgebra::ComplexField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Loosest residual we still call "unitary" at this precision.
    fn unitarity_slack() -> Self {
        let eps = Self::default_epsilon() * Self::lit(1.0e4);
        if eps > Self::lit(1.0e-6) {
            eps
        } else {
            Self::lit(1.0e-6)
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dense complex matrix over a [`Real`] scalar.
pub type CMatrix<T> = DMatrix<Complex<T>>;

pub(crate) fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// `max_ij |a_ij - b_ij|`.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).modulus()))
}

/// `max_ij |(U^dagger U - I)_ij|`.
pub fn unitarity_residual<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((prod[(i, j)] - Complex::new(target, T::zero())).modulus());
        }
    }
    worst
}

/// Kronecker product `a (x) b` with `a` acting on the more significant index.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// `|Tr(U^dagger V)| / d`, equal to one iff `U` and `V` agree up to a global phase.
pub fn phase_insensitive_overlap<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>) -> T {
    let d = T::from_usize(u.nrows()).unwrap();
    (u.adjoint() * v).trace().modulus() / d
}

/// `min_phi max_ij |U - e^{i phi} V|`, with the phase fixed by `Tr(V^dagger U)`.
pub fn max_abs_diff_up_to_phase<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>) -> T {
    let tr = (v.adjoint() * u).trace();
    let phase = if tr.modulus() > T::zero() {
        tr / Complex::new(tr.modulus(), T::zero())
    } else {
        Complex::new(T::one(), T::zero())
    };
    max_abs_diff(u, &v.map(|x| x * phase))
}
