//! Sampling volumes: the Gaussian cloud and a uniform slab.

use std::f64::consts::PI;

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};

/// Density profile n(r)/n₀ with column integrals along rays.
pub trait Geometry: Sync {
    /// ∫₀^∞ n/n₀ dl from `from` along unit `dir`.
    fn column_to_exit(&self, from: [f64; 3], dir: [f64; 3]) -> f64;

    /// Distance s with ∫₀^s n/n₀ dl = `column`, for column below
    /// [`Geometry::column_to_exit`].
    fn distance_for_column(&self, from: [f64; 3], dir: [f64; 3], column: f64) -> f64;

    fn density_ratio(&self, r: [f64; 3]) -> f64;

    /// Entry point and direction of a collimated +Y beam spread uniformly
    /// over a disc of radius `aperture` in the X-Z plane.
    fn entry<R: Rng + ?Sized>(&self, rng: &mut R, aperture: f64) -> ([f64; 3], [f64; 3]);
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Uniform disc sample of radius `radius` in the X-Z plane.
pub fn disc_sample<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    (r * phi.cos(), r * phi.sin())
}

/// n(r)/n₀ = exp(−r²/2r₀²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianSphere {
    pub r0: f64,
}

impl GaussianSphere {
    /// Prefactor r₀√(π/2)·exp(−ρ²/2r₀²), closest-approach distance s₀
    /// and the scaled starting coordinate u₀ = −s₀/(√2 r₀).
    fn chord(&self, from: [f64; 3], dir: [f64; 3]) -> (f64, f64, f64) {
        let s0 = -dot(from, dir);
        let rho2 = (dot(from, from) - s0 * s0).max(0.0);
        let k = self.r0 * (PI / 2.0).sqrt() * (-rho2 / (2.0 * self.r0 * self.r0)).exp();
        (k, s0, -s0 / (2f64.sqrt() * self.r0))
    }
}

impl Geometry for GaussianSphere {
    fn column_to_exit(&self, from: [f64; 3], dir: [f64; 3]) -> f64 {
        let (k, _, u0) = self.chord(from, dir);
        k * erfc(u0)
    }

    fn distance_for_column(&self, from: [f64; 3], dir: [f64; 3], column: f64) -> f64 {
        let (k, s0, u0) = self.chord(from, dir);
        let target = erfc(u0) - column / k;
        let u = if target > 1.0 {
            // erfc(u) = 2 − erfc(−u) keeps precision deep on the near side
            let back = erfc(-u0) + column / k;
            -erfc_inv(back.clamp(f64::MIN_POSITIVE, 2.0))
        } else {
            erfc_inv(target.clamp(f64::MIN_POSITIVE, 2.0))
        };
        (s0 + 2f64.sqrt() * self.r0 * u).max(0.0)
    }

    fn density_ratio(&self, r: [f64; 3]) -> f64 {
        (-dot(r, r) / (2.0 * self.r0 * self.r0)).exp()
    }

    fn entry<R: Rng + ?Sized>(&self, rng: &mut R, aperture: f64) -> ([f64; 3], [f64; 3]) {
        let (x, z) = disc_sample(rng, aperture);
        ([x, -12.0 * self.r0, z], [0.0, 1.0, 0.0])
    }
}

/// n/n₀ = 1 for 0 ≤ y ≤ L, unbounded in X and Z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformSlab {
    pub thickness: f64,
}

impl UniformSlab {
    /// Parameter interval of the ray inside the slab.
    fn inside(&self, from: [f64; 3], dir: [f64; 3]) -> Option<(f64, f64)> {
        let (y, dy) = (from[1], dir[1]);
        if dy.abs() < 1e-300 {
            return (0.0..=self.thickness).contains(&y).then_some((0.0, f64::INFINITY));
        }
        let (a, b) = ((0.0 - y) / dy, (self.thickness - y) / dy);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let lo = lo.max(0.0);
        (hi > lo).then_some((lo, hi))
    }
}

impl Geometry for UniformSlab {
    fn column_to_exit(&self, from: [f64; 3], dir: [f64; 3]) -> f64 {
        self.inside(from, dir).map_or(0.0, |(lo, hi)| hi - lo)
    }

    fn distance_for_column(&self, from: [f64; 3], dir: [f64; 3], column: f64) -> f64 {
        self.inside(from, dir).map_or(0.0, |(lo, _)| lo + column)
    }

    fn density_ratio(&self, r: [f64; 3]) -> f64 {
        if (0.0..=self.thickness).contains(&r[1]) {
            1.0
        } else {
            0.0
        }
    }

    fn entry<R: Rng + ?Sized>(&self, rng: &mut R, aperture: f64) -> ([f64; 3], [f64; 3]) {
        let (x, z) = disc_sample(rng, aperture);
        ([x, 0.0, z], [0.0, 1.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_columns() {
        let g = GaussianSphere { r0: 100.0 };
        let full = g.column_to_exit([0.0, -2000.0, 0.0], [0.0, 1.0, 0.0]);
        assert_relative_eq!(full, (2.0 * PI).sqrt() * 100.0, max_relative = 1e-12);
        let half = g.column_to_exit([0.0; 3], [0.0, 1.0, 0.0]);
        assert_relative_eq!(half, 0.5 * full, max_relative = 1e-12);
        assert!(g.column_to_exit([0.0, 2000.0, 0.0], [0.0, 1.0, 0.0]) < 1e-60);
    }

    #[test]
    fn gaussian_inversion_round_trip() {
        let g = GaussianSphere { r0: 50.0 };
        for (from, dir) in [
            ([0.0, -600.0, 10.0], [0.0, 1.0, 0.0]),
            ([20.0, -5.0, 30.0], [0.6, 0.0, 0.8]),
            ([40.0, 40.0, -40.0], [-0.48, -0.6, 0.64]),
        ] {
            let total = g.column_to_exit(from, dir);
            for frac in [1e-6, 0.1, 0.5, 0.9, 0.999] {
                let s = g.distance_for_column(from, dir, frac * total);
                let rest = g.column_to_exit([from[0] + s * dir[0], from[1] + s * dir[1], from[2] + s * dir[2]], dir);
                assert_relative_eq!(total - rest, frac * total, max_relative = 1e-8, epsilon = 1e-9 * total);
            }
        }
    }

    #[test]
    fn slab_columns() {
        let s = UniformSlab { thickness: 3.0 };
        assert_relative_eq!(s.column_to_exit([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 3.0);
        assert_relative_eq!(s.column_to_exit([0.0, 1.0, 0.0], [0.0, -0.5, 0.8660254037844386]), 2.0, max_relative = 1e-12);
        assert_eq!(s.column_to_exit([0.0, 4.0, 0.0], [0.0, 1.0, 0.0]), 0.0);
        assert_relative_eq!(s.distance_for_column([0.0, -1.0, 0.0], [0.0, 1.0, 0.0], 0.5), 1.5);
    }

    #[test]
    fn disc_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean_r2: f64 = (0..n)
            .map(|_| {
                let (x, z) = disc_sample(&mut rng, 2.0);
                x * x + z * z
            })
            .sum::<f64>()
            / n as f64;
        // uniform disc: ⟨r²⟩ = R²/2, std of r² is R²/√12
        assert!((mean_r2 - 2.0).abs() < 3.0 * 4.0 / 12f64.sqrt() / (n as f64).sqrt());
    }
}
