//! Figures of merit of a lossy, noisy single-photon memory channel.
//!
//! Phase-space convention: α = x + ip with vacuum variance 1/4 per
//! quadrature, so the vacuum Wigner function is (2/π)e^{−2|α|²} and
//! Tr(ρσ) = π∫W_ρW_σ d²α.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse_transport::TimeSeries;

/// Classical measure-and-resend fidelity bound.
pub const CLASSICAL_BENCHMARK: f64 = 2.0 / 3.0;
/// Optimal universal cloning fidelity bound.
pub const CLONING_BENCHMARK: f64 = 5.0 / 6.0;

/// Beamsplitter model of the memory: transmission η and n̄ thermal noise
/// photons per mode in the observation channel.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelState {
    pub eta: f64,
    pub nbar: f64,
}

impl ChannelState {
    pub fn new(eta: f64, nbar: f64) -> Result<Self> {
        let c = ChannelState { eta, nbar };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::parameter("memory.eta", self.eta, "must lie in [0, 1]"));
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::parameter("memory.nbar", self.nbar, "must be non-negative"));
        }
        Ok(())
    }

    /// Output Gaussian width s = n̄ + 1/2.
    fn width(&self) -> f64 {
        self.nbar + 0.5
    }

    /// Pointwise output Wigner function
    /// W = 4/(πs)[η|α|²/(4s²) − 1/4 + (n̄ + (1−η)/2)/(2s)] e^{−|α|²/s}.
    pub fn wigner(&self, alpha2: f64) -> f64 {
        let s = self.width();
        let bracket = self.eta * alpha2 / (4.0 * s * s) - 0.25 + (self.nbar + 0.5 * (1.0 - self.eta)) / (2.0 * s);
        4.0 / (PI * s) * bracket * (-alpha2 / s).exp()
    }

    /// Weight q = η/(1 + n̄) of the photon-added thermal component in
    /// ρ = (1 − q)ρ_th + q ρ_PAT.
    pub fn signal_weight(&self) -> f64 {
        self.eta / (1.0 + self.nbar)
    }
}

/// W^(1)(α) = (8/π)(|α|² − 1/4)e^{−2|α|²}.
pub fn single_photon_wigner(alpha2: f64) -> f64 {
    8.0 / PI * (alpha2 - 0.25) * (-2.0 * alpha2).exp()
}

/// Fock-state Wigner function W_n = (2/π)(−1)ⁿ Lₙ(4|α|²) e^{−2|α|²}.
pub fn fock_wigner(n: usize, alpha2: f64) -> f64 {
    let x = 4.0 * alpha2;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    2.0 / PI * sign * laguerre(n, x) * (-2.0 * alpha2).exp()
}

fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Square grid of W over α = x + ip, row-major in (x, p).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    fn build(points: usize, extent: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 3 || points % 2 == 0 {
            return Err(Error::parameter("memory.grid_points", points as f64, "must be odd and at least 3"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::parameter("memory.grid_extent", extent, "must be positive"));
        }
        let h = 2.0 * extent / (points - 1) as f64;
        let axis: Vec<f64> = (0..points).map(|i| -extent + h * i as f64).collect();
        let mut values = Vec::with_capacity(points * points);
        for x in &axis {
            for p in &axis {
                values.push(f(x * x + p * p));
            }
        }
        Ok(WignerGrid { axis, values })
    }

    pub fn step(&self) -> f64 {
        self.axis[1] - self.axis[0]
    }

    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.axis.len() + ip]
    }

    /// Trapezoidal ∫ f(α)·W(α) d²α for a weight evaluated at |α|².
    pub fn integrate(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let n = self.axis.len();
        let h = self.step();
        let end = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for ix in 0..n {
            for ip in 0..n {
                let r2 = self.axis[ix].powi(2) + self.axis[ip].powi(2);
                s += end(ix) * end(ip) * weight(r2) * self.value(ix, ip);
            }
        }
        s * h * h
    }

    pub fn normalization(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

/// Default grid: 257 points per axis over [−L, L] with
/// L = max(4, 5√(n̄ + 1/2)) so the thermal tail is resolved.
pub fn default_extent(ch: &ChannelState) -> f64 {
    (5.0 * ch.width().sqrt()).max(4.0)
}

pub const DEFAULT_GRID_POINTS: usize = 257;

pub fn wigner_single_photon(points: usize, extent: f64) -> Result<WignerGrid> {
    WignerGrid::build(points, extent, single_photon_wigner)
}

pub fn wigner_channel(points: usize, extent: f64, ch: &ChannelState) -> Result<WignerGrid> {
    ch.validate()?;
    WignerGrid::build(points, extent, |a2| ch.wigner(a2))
}

/// Photon-number statistics of the channel output.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PhotonStatistics {
    pub probabilities: Vec<f64>,
    /// 1 − Σ P(n) over the listed n.
    pub tail: f64,
    /// Share of P(n) carried by the signal component.
    pub signal_fraction: Vec<f64>,
}

/// P(n) = pₙ[1 + η(n − n̄)/(n̄(1 + n̄))] with thermal pₙ = n̄ⁿ/(1 + n̄)ⁿ⁺¹,
/// from the thermal plus photon-added-thermal mixture.
pub fn photon_number_distribution(ch: &ChannelState, n_max: usize) -> Result<PhotonStatistics> {
    ch.validate()?;
    if n_max < 2 {
        return Err(Error::Contract(format!("photon-number table needs n_max >= 2, got {n_max}")));
    }
    let q = ch.signal_weight();
    let nb = ch.nbar;
    let mut probabilities = Vec::with_capacity(n_max + 1);
    let mut signal_fraction = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let (thermal, added) = if nb == 0.0 {
            (if n == 0 { 1.0 } else { 0.0 }, if n == 1 { 1.0 } else { 0.0 })
        } else {
            let p = (nb / (1.0 + nb)).powi(n as i32) / (1.0 + nb);
            (p, n as f64 * p / nb)
        };
        let signal = q * added;
        let total = (1.0 - q) * thermal + signal;
        probabilities.push(total);
        signal_fraction.push(if total > 0.0 { signal / total } else { 0.0 });
    }
    let tail = 1.0 - probabilities.iter().sum::<f64>();
    Ok(PhotonStatistics { probabilities, tail, signal_fraction })
}

/// P(n) = π∫W W_n d²α on a trapezoidal grid.
pub fn photon_number_by_quadrature(n_max: usize, grid: &WignerGrid) -> Vec<f64> {
    (0..=n_max).map(|n| PI * grid.integrate(|a2| fock_wigner(n, a2))).collect()
}

/// Werner-type polarization state x|ψ⟩⟨ψ| + (1 − x)/2·I.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerState {
    pub x: f64,
    pub psi: [Complex64; 2],
}

impl WernerState {
    pub fn new(x: f64, psi: [Complex64; 2]) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::parameter("werner.x", x, "must lie in [0, 1]"));
        }
        let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("polarization state has norm² {norm}, expected 1")));
        }
        Ok(WernerState { x, psi })
    }

    pub fn density_matrix(&self) -> Matrix2<Complex64> {
        let v = nalgebra::Vector2::new(self.psi[0], self.psi[1]);
        v * v.adjoint() * Complex64::new(self.x, 0.0)
            + Matrix2::identity() * Complex64::new(0.5 * (1.0 - self.x), 0.0)
    }
}

/// F = ⟨ψ|ρ|ψ⟩ = x + (1 − x)/2.
pub fn werner_fidelity(w: &WernerState) -> f64 {
    w.x + 0.5 * (1.0 - w.x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    BelowClassical,
    Between,
    AboveCloning,
}

/// F ≤ 2/3 is reachable classically, 2/3 < F ≤ 5/6 beats it, F > 5/6
/// beats optimal cloning.
pub fn benchmark_comparison(fidelity: f64) -> Result<Benchmark> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::parameter("fidelity", fidelity, "must lie in [0, 1]"));
    }
    Ok(if fidelity <= CLASSICAL_BENCHMARK {
        Benchmark::BelowClassical
    } else if fidelity <= CLONING_BENCHMARK {
        Benchmark::Between
    } else {
        Benchmark::AboveCloning
    })
}

/// Two-photon coincidence probability (1 − |⟨a|b⟩|²)/2 behind a balanced
/// beamsplitter for L²-normalized temporal modes.
pub fn hom_coincidence(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    for (name, w) in [("a", a), ("b", b)] {
        let e = w.energy();
        if (e - 1.0).abs() > 1e-6 {
            return Err(Error::Contract(format!("wavepacket {name} has norm {e}, expected 1")));
        }
    }
    let ov = a.overlap(b)?;
    Ok((0.5 * (1.0 - ov.norm_sqr())).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_photon_values() {
        assert!((single_photon_wigner(0.0) + 2.0 / PI).abs() < 1e-15);
        assert!(single_photon_wigner(0.2499) < 0.0 && single_photon_wigner(0.2501) > 0.0);
        let g = wigner_single_photon(DEFAULT_GRID_POINTS, 4.0).unwrap();
        assert!((g.normalization() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lossless_noiseless_reduces_to_single_photon() {
        let ch = ChannelState::new(1.0, 0.0).unwrap();
        for i in 0..200 {
            let a2 = i as f64 * 0.05;
            assert!((ch.wigner(a2) - single_photon_wigner(a2)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_loss_is_thermal() {
        let ch = ChannelState::new(0.0, 0.7).unwrap();
        let s = 1.2;
        for i in 0..100 {
            let a2 = i as f64 * 0.1;
            let thermal = (-a2 / s).exp() / (PI * s);
            assert!((ch.wigner(a2) - thermal).abs() < 1e-15);
            assert!(ch.wigner(a2) > 0.0);
        }
    }

    #[test]
    fn half_loss_balance_point() {
        let ch = ChannelState::new(0.5, 0.0).unwrap();
        assert!(ch.wigner(0.0).abs() < 1e-15);
        let g = wigner_channel(DEFAULT_GRID_POINTS, 4.0, &ch).unwrap();
        assert!((g.normalization() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn photon_numbers() {
        let stats = photon_number_distribution(&ChannelState::new(1.0, 0.0).unwrap(), 4).unwrap();
        assert_eq!(stats.probabilities, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        let stats = photon_number_distribution(&ChannelState::new(0.3, 0.0).unwrap(), 4).unwrap();
        assert_eq!(stats.probabilities[0], 0.7);
        assert_eq!(stats.probabilities[1], 0.3);
        let stats = photon_number_distribution(&ChannelState::new(1.0, 1.0).unwrap(), 40).unwrap();
        assert!((stats.signal_fraction[1] - 0.5).abs() < 1e-15);
        assert!(stats.tail > 0.0 && stats.tail < 1e-10);
        assert!(photon_number_distribution(&ChannelState { eta: 1.0, nbar: 1.0 }, 1).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for (eta, nbar) in [(1.0, 0.0), (0.6, 0.0), (0.8, 0.4), (0.3, 2.0)] {
            let ch = ChannelState::new(eta, nbar).unwrap();
            let g = wigner_channel(DEFAULT_GRID_POINTS, default_extent(&ch), &ch).unwrap();
            let quad = photon_number_by_quadrature(6, &g);
            let closed = photon_number_distribution(&ch, 6).unwrap().probabilities;
            for (a, b) in quad.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-9, "{eta} {nbar}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fidelity_and_benchmarks() {
        let psi = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let w = WernerState::new(0.5, psi).unwrap();
        assert_eq!(werner_fidelity(&w), 0.75);
        let v = nalgebra::Vector2::new(psi[0], psi[1]);
        let direct = (v.adjoint() * w.density_matrix() * v)[(0, 0)];
        assert!((direct.re - 0.75).abs() < 1e-15 && direct.im.abs() < 1e-15);
        assert_eq!(benchmark_comparison(0.75).unwrap(), Benchmark::Between);
        assert_eq!(benchmark_comparison(0.9).unwrap(), Benchmark::AboveCloning);
        assert_eq!(benchmark_comparison(0.5).unwrap(), Benchmark::BelowClassical);
        assert_eq!(benchmark_comparison(CLASSICAL_BENCHMARK).unwrap(), Benchmark::BelowClassical);
        assert_eq!(benchmark_comparison(CLONING_BENCHMARK).unwrap(), Benchmark::Between);
        assert!(WernerState::new(1.2, psi).is_err());
    }

    fn gaussian(centre: f64, sigma: f64) -> TimeSeries {
        let step = 0.01;
        let values = (0..20_000)
            .map(|i| {
                let t = -100.0 + step * i as f64;
                Complex64::new((-(t - centre).powi(2) / (4.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powf(0.25), 0.0)
            })
            .collect();
        TimeSeries { start: -100.0, step, values }
    }

    #[test]
    fn coincidence_cases() {
        let a = gaussian(0.0, 1.0);
        assert!(hom_coincidence(&a, &a).unwrap() < 1e-12);
        assert!((hom_coincidence(&a, &gaussian(50.0, 1.0)).unwrap() - 0.5).abs() < 1e-12);
        let tau: f64 = 2.0;
        for sigma in [1.0, 2.0, 4.0] {
            let p = hom_coincidence(&gaussian(-tau / 2.0, sigma), &gaussian(tau / 2.0, sigma)).unwrap();
            let expected = 0.5 * (1.0 - (-tau * tau / (4.0 * sigma * sigma)).exp());
            assert!((p - expected).abs() < 1e-9);
        }
        let mut bad = a.clone();
        bad.values.iter_mut().for_each(|v| *v *= 2.0);
        assert!(hom_coincidence(&a, &bad).is_err());
    }
}
