//! Levenberg–Marquardt fit of a Lorentzian on a linear background.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

/// y(x) = A (Γ/2)² / ((x − x₀)² + (Γ/2)²) + b₀ + b₁ (x − x₀)
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorentzian {
    pub amplitude: f64,
    pub center: f64,
    /// Full width at half maximum.
    pub width: f64,
    pub offset: f64,
    pub slope: f64,
}

impl Lorentzian {
    pub fn eval(&self, x: f64) -> f64 {
        let h = 0.5 * self.width;
        let dx = x - self.center;
        self.amplitude * h * h / (dx * dx + h * h) + self.offset + self.slope * dx
    }

    fn params(&self) -> SVector<f64, 5> {
        SVector::from([self.amplitude, self.center, self.width, self.offset, self.slope])
    }

    fn from_params(p: &SVector<f64, 5>) -> Self {
        Lorentzian { amplitude: p[0], center: p[1], width: p[2].abs(), offset: p[3], slope: p[4] }
    }

    fn gradient(&self, x: f64) -> SVector<f64, 5> {
        let h = 0.5 * self.width;
        let dx = x - self.center;
        let den = dx * dx + h * h;
        let shape = h * h / den;
        let d_center = self.amplitude * h * h * 2.0 * dx / (den * den) - self.slope;
        let d_width = self.amplitude * (h * dx * dx / (den * den));
        SVector::from([shape, d_center, d_width, 1.0, dx])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FitReport {
    pub model: Lorentzian,
    pub rms_residual: f64,
    pub iterations: usize,
}

/// Fits `ys` against `xs`, starting from `guess`.
pub fn fit_lorentzian(xs: &[f64], ys: &[f64], guess: Lorentzian) -> Result<FitReport> {
    if xs.len() != ys.len() || xs.len() < 6 {
        return Err(Error::Contract("Lorentzian fit needs at least 6 paired samples".into()));
    }
    let sse = |m: &Lorentzian| xs.iter().zip(ys).map(|(x, y)| (m.eval(*x) - y).powi(2)).sum::<f64>();
    let mut model = guess;
    let mut cost = sse(&model);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let mut jtj = SMatrix::<f64, 5, 5>::zeros();
        let mut jtr = SVector::<f64, 5>::zeros();
        for (x, y) in xs.iter().zip(ys) {
            let g = model.gradient(*x);
            let r = y - model.eval(*x);
            jtj += g * g.transpose();
            jtr += g * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for i in 0..5 {
                a[(i, i)] *= 1.0 + lambda;
                a[(i, i)] += 1e-300;
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = Lorentzian::from_params(&(model.params() + step));
            let c = sse(&trial);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                model = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !model.width.is_finite() || model.width == 0.0 {
        return Err(Error::Internal("Lorentzian fit collapsed".into()));
    }
    Ok(FitReport { model, rms_residual: (cost / xs.len() as f64).sqrt(), iterations })
}
