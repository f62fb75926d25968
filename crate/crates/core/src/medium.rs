//! Gaussian cloud geometry, optical depths and ray transfer functions.
//!
//! The local wave number is k(ω, r) = √(1 + 4πχ̂(ω) n(r)) in units of
//! ω/c, with χ̂ the susceptibility per unit density. Phases are reported in
//! the retarded frame: the vacuum contribution k = 1 is dropped, so an
//! empty path transfers with unit value.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::response::{SusceptibilityTensor, CVector3};

/// Spherical Gaussian cloud n(r) = n₀ exp(−r²/2r₀²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudConfig {
    /// Peak density in ƛ⁻³.
    pub n0: f64,
    /// Gaussian radius in ƛ.
    pub r0: f64,
    /// Resonant per-atom cross section in ƛ².
    pub sigma0: f64,
}

impl CloudConfig {
    pub fn from_b0(b0: f64, r0: f64, sigma0: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(Error::parameter("cloud.b0", b0, "must be positive"));
        }
        Self::check(r0, sigma0)?;
        Ok(CloudConfig { n0: b0 / ((2.0 * PI).sqrt() * sigma0 * r0), r0, sigma0 })
    }

    pub fn from_density(n0: f64, r0: f64, sigma0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::parameter("cloud.n0_lambda3", n0, "must be positive"));
        }
        Self::check(r0, sigma0)?;
        Ok(CloudConfig { n0, r0, sigma0 })
    }

    fn check(r0: f64, sigma0: f64) -> Result<()> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::parameter("cloud.r0_lambda", r0, "must be positive"));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::parameter("sigma0", sigma0, "must be positive"));
        }
        Ok(())
    }

    /// Peak optical depth across the diameter, √(2π) σ₀ n₀ r₀.
    pub fn b0(&self) -> f64 {
        (2.0 * PI).sqrt() * self.sigma0 * self.n0 * self.r0
    }

    /// Resonant mean free path at peak density, 1/(n₀σ₀).
    pub fn mean_free_path(&self) -> f64 {
        1.0 / (self.n0 * self.sigma0)
    }

    pub fn density(&self, r: [f64; 3]) -> f64 {
        let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        self.n0 * (-r2 / (2.0 * self.r0 * self.r0)).exp()
    }

    /// Total atom number (2π)^{3/2} n₀ r₀³.
    pub fn atom_number(&self) -> f64 {
        (2.0 * PI).powf(1.5) * self.n0 * self.r0.powi(3)
    }
}

/// Straight segment from `from` along unit `dir` over `length` (may be ∞).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub from: [f64; 3],
    pub dir: [f64; 3],
    pub length: f64,
}

impl Ray {
    pub fn to_infinity(from: [f64; 3], dir: [f64; 3]) -> Self {
        Ray { from, dir, length: f64::INFINITY }
    }

    pub fn segment(from: [f64; 3], to: [f64; 3]) -> Self {
        let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if len == 0.0 {
            return Ray { from, dir: [0.0, 0.0, 1.0], length: 0.0 };
        }
        Ray { from, dir: [d[0] / len, d[1] / len, d[2] / len], length: len }
    }

    pub fn reversed(&self) -> Result<Self> {
        if !self.length.is_finite() {
            return Err(Error::Contract("cannot reverse a semi-infinite ray".into()));
        }
        let to = self.point(self.length);
        Ok(Ray { from: to, dir: [-self.dir[0], -self.dir[1], -self.dir[2]], length: self.length })
    }

    pub fn point(&self, s: f64) -> [f64; 3] {
        [self.from[0] + s * self.dir[0], self.from[1] + s * self.dir[1], self.from[2] + s * self.dir[2]]
    }
}

/// Number of density moments kept in the series expansion of √(1+x) − 1.
const MAX_ORDER: usize = 48;

/// Density moments C_p = ∫ (n/n₀)^p dl along a ray, p = 1, 2, …
#[derive(Clone, Debug)]
pub struct Chord {
    moments: Vec<f64>,
}

impl Chord {
    pub fn new(cloud: &CloudConfig, ray: &Ray, orders: usize) -> Self {
        let orders = orders.clamp(1, MAX_ORDER);
        let f = ray.from;
        let d = ray.dir;
        let s0 = -(f[0] * d[0] + f[1] * d[1] + f[2] * d[2]);
        let rho2 = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2] - s0 * s0).max(0.0);
        let r0 = cloud.r0;
        let moments = (1..=orders)
            .map(|p| {
                let p = p as f64;
                let scale = (p / 2.0).sqrt() / r0;
                let lo = (0.0 - s0) * scale;
                let hi = if ray.length.is_finite() { (ray.length - s0) * scale } else { f64::INFINITY };
                let span = erf_difference(lo, hi);
                (-p * rho2 / (2.0 * r0 * r0)).exp() * r0 * (PI / (2.0 * p)).sqrt() * span
            })
            .collect();
        Chord { moments }
    }

    /// ∫ n/n₀ dl.
    pub fn column(&self) -> f64 {
        self.moments[0]
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// ∫ (k − 1) dl for peak-density argument x₀ = 4πχ̂n₀.
    pub fn phase(&self, x0: Complex64) -> Option<Complex64> {
        if x0.norm() > 0.5 {
            return None;
        }
        let mut c = 0.5;
        let mut xp = x0;
        let mut sum = Complex64::new(0.0, 0.0);
        for (p, m) in self.moments.iter().enumerate() {
            let term = xp * (c * m);
            sum += term;
            if term.norm() <= 1e-17 * sum.norm() {
                return Some(sum);
            }
            // binomial(1/2, p+1) / binomial(1/2, p)
            let pf = (p + 1) as f64;
            c *= (0.5 - pf) / (pf + 1.0);
            xp *= x0;
        }
        None
    }
}

/// erf(b) − erf(a), using the complementary function for same-sign tails.
fn erf_difference(a: f64, b: f64) -> f64 {
    use statrs::function::erf::erfc;
    let (a, b) = (a.clamp(-40.0, 40.0), b.clamp(-40.0, 40.0));
    if a >= 0.0 && b >= 0.0 {
        erfc(a) - erfc(b)
    } else if a <= 0.0 && b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Ordinary and extraordinary polarization modes for propagation along
/// `dir` in a uniaxial medium with optic axis Z.
pub fn mode_basis(dir: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let (kx, ky, kz) = (dir[0], dir[1], dir[2]);
    let t = (kx * kx + ky * ky).sqrt();
    let o = if t < 1e-12 { [1.0, 0.0, 0.0] } else { [ky / t, -kx / t, 0.0] };
    let e = [ky * o[2] - kz * o[1], kz * o[0] - kx * o[2], kx * o[1] - ky * o[0]];
    (o, e)
}

/// ∫ (k − 1) dl for a mode with effective susceptibility χ̂ (per n₀ƛ³ units)
/// along a ray.
pub fn mode_phase(cloud: &CloudConfig, chord: &Chord, ray: &Ray, chi_hat: Complex64) -> Complex64 {
    let x0 = 4.0 * PI * chi_hat * cloud.n0;
    chord.phase(x0).unwrap_or_else(|| adaptive_phase(cloud, ray, chi_hat, 1e-12))
}

/// Direct adaptive Gauss–Kronrod evaluation of ∫ (k − 1) dl.
pub fn adaptive_phase(cloud: &CloudConfig, ray: &Ray, chi_hat: Complex64, tol: f64) -> Complex64 {
    let integrand = |s: f64| {
        let n = cloud.density(ray.point(s));
        (Complex64::new(1.0, 0.0) + 4.0 * PI * chi_hat * n).sqrt() - 1.0
    };
    let f = ray.from;
    let d = ray.dir;
    let s0 = -(f[0] * d[0] + f[1] * d[1] + f[2] * d[2]);
    let reach = 12.0 * cloud.r0;
    let lo = 0.0f64.max(s0 - reach);
    let hi = ray.length.min(s0 + reach);
    if hi <= lo {
        return Complex64::new(0.0, 0.0);
    }
    // split at the point of closest approach so each half is monotone
    let mut total = Complex64::new(0.0, 0.0);
    let knots: Vec<f64> = if s0 > lo && s0 < hi { vec![lo, s0, hi] } else { vec![lo, hi] };
    for w in knots.windows(2) {
        total += adaptive_gk(&integrand, w[0], w[1], tol, 2000);
    }
    total
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kron += pair * GK_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * G_WEIGHTS[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

fn adaptive_gk<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, max_intervals: usize) -> Complex64 {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: Complex64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= tol * total.norm() || parts.len() >= max_intervals {
            return total;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty interval list");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(f, lo, mid);
        let (vr, er) = gk15(f, mid, hi);
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
}

/// Polarization-resolved transfer through a uniaxial medium at one frequency.
#[derive(Clone, Copy, Debug)]
pub struct ModeTransfer {
    pub ordinary: Complex64,
    pub extraordinary: Complex64,
    pub o: [f64; 3],
    pub e: [f64; 3],
}

impl ModeTransfer {
    pub fn identity(dir: [f64; 3]) -> Self {
        let (o, e) = mode_basis(dir);
        let one = Complex64::new(1.0, 0.0);
        ModeTransfer { ordinary: one, extraordinary: one, o, e }
    }

    /// Propagates a transverse field vector.
    pub fn apply(&self, field: &CVector3) -> CVector3 {
        let proj = |u: &[f64; 3]| field[0] * u[0] + field[1] * u[1] + field[2] * u[2];
        let (ao, ae) = (proj(&self.o) * self.ordinary, proj(&self.e) * self.extraordinary);
        CVector3::new(
            ao * self.o[0] + ae * self.e[0],
            ao * self.o[1] + ae * self.e[1],
            ao * self.o[2] + ae * self.e[2],
        )
    }

    /// Transfer for a principal mode, or for a field already aligned with one.
    pub fn for_polarization(&self, pol: [f64; 3]) -> Complex64 {
        let po = (pol[0] * self.o[0] + pol[1] * self.o[1] + pol[2] * self.o[2]).powi(2);
        let pe = (pol[0] * self.e[0] + pol[1] * self.e[1] + pol[2] * self.e[2]).powi(2);
        self.ordinary * po + self.extraordinary * pe
    }
}

/// Effective (ordinary, extraordinary) susceptibilities for a direction.
pub fn mode_susceptibilities(chi: &SusceptibilityTensor, dir: [f64; 3]) -> (Complex64, Complex64) {
    let (o, e) = mode_basis(dir);
    (chi.along(o), chi.along(e))
}

/// exp(i∫(k_j − 1)dl) per mode on a grid of susceptibilities.
pub fn transfer_function(cloud: &CloudConfig, ray: &Ray, chis: &[SusceptibilityTensor]) -> Vec<ModeTransfer> {
    let chord = Chord::new(cloud, ray, MAX_ORDER);
    let (o, e) = mode_basis(ray.dir);
    chis.iter()
        .map(|chi| {
            let (co, ce) = (chi.along(o), chi.along(e));
            let po = mode_phase(cloud, &chord, ray, co);
            let pe = if ce == co { po } else { mode_phase(cloud, &chord, ray, ce) };
            ModeTransfer {
                ordinary: (Complex64::i() * po).exp(),
                extraordinary: (Complex64::i() * pe).exp(),
                o,
                e,
            }
        })
        .collect()
}

/// Intensity optical depth 2 Im ∫ k dl for the ordinary and extraordinary
/// modes along a ray.
pub fn optical_depths(cloud: &CloudConfig, ray: &Ray, chi: &SusceptibilityTensor) -> (f64, f64) {
    let chord = Chord::new(cloud, ray, MAX_ORDER);
    let (co, ce) = mode_susceptibilities(chi, ray.dir);
    (
        2.0 * mode_phase(cloud, &chord, ray, co).im,
        2.0 * mode_phase(cloud, &chord, ray, ce).im,
    )
}

/// Optical depth seen by a real transverse polarization `pol`, weighting
/// the two modes by their intensity fractions.
pub fn optical_depth(
    cloud: &CloudConfig,
    from: [f64; 3],
    dir: [f64; 3],
    chi: &SusceptibilityTensor,
    pol: [f64; 3],
) -> f64 {
    let ray = Ray::to_infinity(from, dir);
    let (o, e) = mode_basis(dir);
    let (bo, be) = optical_depths(cloud, &ray, chi);
    let wo = (pol[0] * o[0] + pol[1] * o[1] + pol[2] * o[2]).powi(2);
    let we = (pol[0] * e[0] + pol[1] * e[1] + pol[2] * e[2]).powi(2);
    -((wo * (-bo).exp() + we * (-be).exp()) / (wo + we)).ln()
}

/// Group delay d(Re Φ)/dΔ in γ⁻¹ of a principal mode, from a centred
/// difference of the phase over a susceptibility evaluator.
pub fn group_delay<F>(cloud: &CloudConfig, ray: &Ray, pol: [f64; 3], detuning: f64, step: f64, chi_at: F) -> Result<f64>
where
    F: Fn(f64) -> Result<SusceptibilityTensor>,
{
    let chord = Chord::new(cloud, ray, MAX_ORDER);
    let phase = |d: f64| -> Result<f64> {
        let chi = chi_at(d)?;
        Ok(mode_phase(cloud, &chord, ray, chi.along(pol)).re)
    };
    Ok((phase(detuning + step)? - phase(detuning - step)?) / (2.0 * step))
}
