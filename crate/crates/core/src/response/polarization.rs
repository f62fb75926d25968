//! Circular polarization basis e₀ = e_Z, e_{±1} = ∓(e_X ± i e_Y)/√2.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub type CVector3 = Vector3<Complex64>;
pub type CMatrix3 = Matrix3<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub struct PolarizationBasis;

impl PolarizationBasis {
    /// Unit vector e_q for q ∈ {−1, 0, +1}.
    pub fn spherical(q: i32) -> CVector3 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match q {
            0 => CVector3::new(ZERO, ZERO, Complex64::new(1.0, 0.0)),
            1 => CVector3::new(Complex64::new(-s, 0.0), Complex64::new(0.0, -s), ZERO),
            -1 => CVector3::new(Complex64::new(s, 0.0), Complex64::new(0.0, -s), ZERO),
            _ => panic!("polarization index {q} outside {{-1, 0, 1}}"),
        }
    }

    /// Unitary matrix whose columns are e_{−1}, e₀, e_{+1}.
    pub fn to_cartesian() -> CMatrix3 {
        CMatrix3::from_columns(&[Self::spherical(-1), Self::spherical(0), Self::spherical(1)])
    }

    /// Builds α_ij = Σ_pq (e_p)_i A_pq (e_q*)_j from spherical components
    /// `a[p + 1][q + 1]` = e_p*·α·e_q.
    pub fn tensor_from_spherical(a: &[[Complex64; 3]; 3]) -> CMatrix3 {
        let u = Self::to_cartesian();
        let s = CMatrix3::from_fn(|p, q| a[p][q]);
        u * s * u.adjoint()
    }
}

pub fn real_vector(x: f64, y: f64, z: f64) -> CVector3 {
    CVector3::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0), Complex64::new(z, 0.0))
}

/// Conjugate-linear inner product a†b.
pub fn inner(a: &CVector3, b: &CVector3) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
