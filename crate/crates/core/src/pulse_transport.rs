//! Gaussian signal pulse, FFT grids and the single-scattering response of
//! an atom at the cloud centre.
//!
//! Fourier convention: α(ω) = ∫ α(t) e^{iωt} dt and
//! α(t) = ∫ α(ω) e^{−iωt} dω/2π, with ω the detuning from ω₄₃.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::medium::{transfer_function, CloudConfig, ModeTransfer, Ray};
use crate::response::{real_vector, Channel, ResponseModel};

/// Signal pulse α(t) = 2/(2πT²)^{1/4} exp[−iΔt − 4(t−T)²/T²].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseConfig {
    /// T in γ⁻¹.
    pub duration: f64,
    /// Carrier detuning Δ = ω − ω₄₃ in γ.
    pub detuning: f64,
    /// Radius of the flat input profile in units of r₀.
    pub aperture: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig { duration: 60.0, detuning: 0.025, aperture: 0.5 }
    }
}

impl PulseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::parameter("pulse.T", self.duration, "must be positive"));
        }
        if !self.detuning.is_finite() {
            return Err(Error::parameter("pulse.detuning", self.detuning, "must be finite"));
        }
        if !(self.aperture > 0.0 && self.aperture.is_finite()) {
            return Err(Error::parameter("pulse.aperture", self.aperture, "must be positive"));
        }
        Ok(())
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        let tt = self.duration;
        let norm = 2.0 / (2.0 * PI * tt * tt).powf(0.25);
        let x = t - tt;
        norm * Complex64::from_polar((-4.0 * x * x / (tt * tt)).exp(), -self.detuning * t)
    }

    /// Analytic Fourier transform of [`PulseConfig::amplitude`].
    pub fn spectral_amplitude(&self, omega: f64) -> Complex64 {
        let tt = self.duration;
        let norm = 2.0 / (2.0 * PI * tt * tt).powf(0.25);
        let d = omega - self.detuning;
        let mag = norm * (PI * tt * tt / 4.0).sqrt() * (-d * d * tt * tt / 16.0).exp();
        Complex64::from_polar(mag, d * tt)
    }

    /// Standard deviation of |α(ω)|, 2√2/T.
    pub fn spectral_std(&self) -> f64 {
        2.0 * 2f64.sqrt() / self.duration
    }

    /// Full width at half maximum of the spectral intensity |α(ω)|².
    pub fn spectral_intensity_fwhm(&self) -> f64 {
        2.0 * (8.0 * 2f64.ln()).sqrt() / self.duration
    }
}

/// Uniformly sampled complex signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub start: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl TimeSeries {
    pub fn time(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    /// ∫|α|² dt by the rectangle rule.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.step
    }

    pub fn intensity(&self) -> IntensityTrace {
        IntensityTrace { start: self.start, step: self.step, values: self.values.iter().map(|v| v.norm_sqr()).collect() }
    }

    /// ⟨a|b⟩ = ∫ a*(t) b(t) dt on a shared grid.
    pub fn overlap(&self, other: &TimeSeries) -> Result<Complex64> {
        if self.values.len() != other.values.len()
            || (self.start - other.start).abs() > 1e-12 * self.step
            || (self.step - other.step).abs() > 1e-12 * self.step
        {
            return Err(Error::Contract("wavepackets are sampled on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.step)
    }
}

/// Uniformly sampled intensity I(t) ≥ 0.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityTrace {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl IntensityTrace {
    pub fn zeros(start: f64, step: f64, n: usize) -> Self {
        IntensityTrace { start, step, values: vec![0.0; n] }
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    /// ∫_{t > after} I dt.
    pub fn energy_after(&self, after: f64) -> f64 {
        self.values.iter().enumerate().filter(|(i, _)| self.time(*i) > after).map(|(_, v)| v).sum::<f64>() * self.step
    }

    /// ∫_{t < before} I dt.
    pub fn energy_before(&self, before: f64) -> f64 {
        self.values.iter().enumerate().filter(|(i, _)| self.time(*i) < before).map(|(_, v)| v).sum::<f64>() * self.step
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn add_scaled(&mut self, other: &IntensityTrace, scale: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn scaled(&self, scale: f64) -> IntensityTrace {
        IntensityTrace { start: self.start, step: self.step, values: self.values.iter().map(|v| v * scale).collect() }
    }
}

/// ∫ t I(t) dt / ∫ I(t) dt.
pub fn mean_arrival_time(trace: &IntensityTrace) -> Result<f64> {
    let total: f64 = trace.values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let first: f64 = trace.values.iter().enumerate().map(|(i, v)| trace.time(i) * v).sum();
    Ok(first / total)
}

/// Spectrum on ascending uniform frequencies ω_k = start + k·step.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub start: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn omega(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    /// ∫|α(ω)|² dω/2π.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.step / (2.0 * PI)
    }
}

/// Time grid t_j = t₀ + j·dt, j < n, with its conjugate frequency grid.
#[derive(Clone)]
pub struct FftGrid {
    pub n: usize,
    pub dt: f64,
    pub t0: f64,
    analysis: Arc<dyn Fft<f64>>,
    synthesis: Arc<dyn Fft<f64>>,
    /// e^{−iω_k t₀}·dω/2π for synthesis slot k.
    twiddle: Arc<Vec<Complex64>>,
}

impl std::fmt::Debug for FftGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftGrid").field("n", &self.n).field("dt", &self.dt).field("t0", &self.t0).finish()
    }
}

impl FftGrid {
    pub fn new(n: usize, dt: f64, t0: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::parameter("grid.points", n as f64, "must be even and at least 2"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::parameter("grid.dt", dt, "must be positive"));
        }
        let mut planner = FftPlanner::new();
        let dw = 2.0 * PI / (n as f64 * dt);
        let twiddle = (0..n)
            .map(|k| Complex64::from_polar(dw / (2.0 * PI), -((k as f64) - (n / 2) as f64) * dw * t0))
            .collect();
        Ok(FftGrid {
            n,
            dt,
            t0,
            analysis: planner.plan_fft(n, FftDirection::Inverse),
            synthesis: planner.plan_fft(n, FftDirection::Forward),
            twiddle: Arc::new(twiddle),
        })
    }

    /// Grid suited to a pulse: starts at −2T and spans `points` samples.
    pub fn for_pulse(pulse: &PulseConfig, points: usize, dt: f64) -> Result<Self> {
        Self::new(points, dt, -2.0 * pulse.duration)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + self.dt * j as f64
    }

    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn dw(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dt)
    }

    /// Ascending frequency of spectrum slot k.
    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dw()
    }

    pub fn zero_series(&self) -> TimeSeries {
        TimeSeries { start: self.t0, step: self.dt, values: vec![Complex64::new(0.0, 0.0); self.n] }
    }

    fn check(&self, ts: &TimeSeries) -> Result<()> {
        if ts.values.len() != self.n || (ts.start - self.t0).abs() > 1e-9 * self.dt || (ts.step - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Contract("time series does not match the FFT grid".into()));
        }
        Ok(())
    }

    pub fn analyze(&self, ts: &TimeSeries) -> Result<Spectrum> {
        self.check(ts)?;
        let mut buf = ts.values.clone();
        self.analysis.process(&mut buf);
        let half = self.n / 2;
        let dw = self.dw();
        let values = (0..self.n)
            .map(|k| {
                let idx = (k + half) % self.n;
                let omega = self.omega(k);
                buf[idx] * Complex64::from_polar(self.dt, omega * self.t0)
            })
            .collect();
        Ok(Spectrum { start: -(half as f64) * dw, step: dw, values })
    }

    pub fn synthesize(&self, spectrum: &Spectrum) -> Result<TimeSeries> {
        if spectrum.values.len() != self.n {
            return Err(Error::Contract("spectrum does not match the FFT grid".into()));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        self.synthesize_band(0, &spectrum.values, &mut buf);
        Ok(TimeSeries { start: self.t0, step: self.dt, values: buf })
    }

    /// Synthesizes slots `first..first + band.len()` into `buf` (length n).
    fn synthesize_band(&self, first: usize, band: &[Complex64], buf: &mut [Complex64]) {
        let half = self.n / 2;
        buf.fill(Complex64::new(0.0, 0.0));
        for (i, v) in band.iter().enumerate() {
            let k = first + i;
            buf[(k + half) % self.n] = v * self.twiddle[k];
        }
        self.synthesis.process(buf);
    }

    /// Adds `scale`·|α(t)|² of a band-limited spectrum to `out`, using
    /// `buf` (length n) as workspace.
    pub fn accumulate_band_intensity(
        &self,
        first: usize,
        band: &[Complex64],
        scale: f64,
        buf: &mut [Complex64],
        out: &mut [f64],
    ) -> Result<()> {
        if first + band.len() > self.n || buf.len() != self.n || out.len() != self.n {
            return Err(Error::Contract("band or buffers do not match the FFT grid".into()));
        }
        self.synthesize_band(first, band, buf);
        for (o, v) in out.iter_mut().zip(buf.iter()) {
            *o += scale * v.norm_sqr();
        }
        Ok(())
    }

    /// |α(t)|² for a spectrum given only on a contiguous band of slots
    /// `first..first + band.len()`.
    pub fn band_intensity(&self, first: usize, band: &[Complex64]) -> Result<IntensityTrace> {
        if first + band.len() > self.n {
            return Err(Error::Contract("band exceeds the FFT grid".into()));
        }
        let mut full = vec![Complex64::new(0.0, 0.0); self.n];
        full[first..first + band.len()].copy_from_slice(band);
        let spec = Spectrum { start: self.omega(0), step: self.dw(), values: full };
        Ok(self.synthesize(&spec)?.intensity())
    }
}

/// Samples the pulse on the grid; the grid must cover [0, 4T] with at
/// least 2048 points.
pub fn pulse_time(grid: &FftGrid, cfg: &PulseConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    if grid.n < 2048 {
        return Err(Error::Contract(format!("pulse grid has {} points, needs at least 2048", grid.n)));
    }
    if grid.t0 > 0.0 || grid.end() < 4.0 * cfg.duration {
        return Err(Error::Contract("pulse grid must cover [0, 4T]".into()));
    }
    let values = (0..grid.n).map(|j| cfg.amplitude(grid.time(j))).collect();
    Ok(TimeSeries { start: grid.t0, step: grid.dt, values })
}

/// Analytic pulse spectrum on the grid's frequencies; the grid must
/// resolve ±20/T around the carrier.
pub fn pulse_spectrum(grid: &FftGrid, cfg: &PulseConfig) -> Result<Spectrum> {
    cfg.validate()?;
    let reach = 20.0 / cfg.duration;
    if grid.omega(0) > cfg.detuning - reach || grid.omega(grid.n - 1) < cfg.detuning + reach {
        return Err(Error::Contract("frequency grid does not cover ±20/T around the carrier".into()));
    }
    let values = (0..grid.n).map(|k| cfg.spectral_amplitude(grid.omega(k))).collect();
    Ok(Spectrum { start: grid.omega(0), step: grid.dw(), values })
}

/// Contiguous spectrum slots where |α(ω)| exceeds `cut` times its peak.
pub fn pulse_band(grid: &FftGrid, cfg: &PulseConfig, cut: f64) -> (usize, usize) {
    let peak = cfg.spectral_amplitude(cfg.detuning).norm();
    let inside = |k: usize| cfg.spectral_amplitude(grid.omega(k)).norm() > cut * peak;
    let mut lo = grid.n;
    let mut hi = 0;
    for k in 0..grid.n {
        if inside(k) {
            lo = lo.min(k);
            hi = k + 1;
        }
    }
    if lo >= hi {
        let centre = ((cfg.detuning / grid.dw()).round() as i64 + (grid.n / 2) as i64).clamp(0, grid.n as i64 - 1) as usize;
        return (centre, centre + 1);
    }
    (lo, hi)
}

/// Detector axes served by the single-scattering calculation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusZ,
    MinusZ,
}

impl Axis {
    pub fn vector(self) -> [f64; 3] {
        match self {
            Axis::PlusX => [1.0, 0.0, 0.0],
            Axis::MinusX => [-1.0, 0.0, 0.0],
            Axis::PlusY => [0.0, 1.0, 0.0],
            Axis::MinusY => [0.0, -1.0, 0.0],
            Axis::PlusZ => [0.0, 0.0, 1.0],
            Axis::MinusZ => [0.0, 0.0, -1.0],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::PlusX => "+X",
            Axis::MinusX => "-X",
            Axis::PlusY => "+Y",
            Axis::MinusY => "-Y",
            Axis::PlusZ => "+Z",
            Axis::MinusZ => "-Z",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "X" | "+X" => Ok(Axis::PlusX),
            "-X" => Ok(Axis::MinusX),
            "Y" | "+Y" => Ok(Axis::PlusY),
            "-Y" => Ok(Axis::MinusY),
            "Z" | "+Z" => Ok(Axis::PlusZ),
            "-Z" => Ok(Axis::MinusZ),
            other => Err(Error::UnsupportedDirection(other.to_string())),
        }
    }
}

/// Time-resolved single-scattering output toward one detector axis, in
/// units of input pulse energy per steradian per unit time.
#[derive(Clone, Debug)]
pub struct ScatterSignal {
    pub axis: Axis,
    pub control_on: bool,
    /// m'' = m plus same-level Zeeman changes (resonant, attenuated).
    pub elastic: IntensityTrace,
    /// Other ground hyperfine level (escapes freely).
    pub inelastic: IntensityTrace,
    /// Input pulse intensity times the reference scale.
    pub reference: IntensityTrace,
    /// Attenuation exp(−2 Im Φ) of the outgoing leg at the carrier, for
    /// the polarization-summed elastic field.
    pub out_leg_attenuation: f64,
}

impl ScatterSignal {
    pub fn elastic_energy(&self) -> f64 {
        self.elastic.energy()
    }

    pub fn inelastic_energy(&self) -> f64 {
        self.inelastic.energy()
    }
}

/// Shared inputs for single-scattering runs.
#[derive(Clone, Debug)]
pub struct SingleScatterSetup {
    pub model: ResponseModel,
    pub cloud: CloudConfig,
    pub pulse: PulseConfig,
    pub grid: FftGrid,
    /// Relative spectral amplitude below which frequencies are dropped.
    pub band_cut: f64,
    /// Scale applied to the input pulse for the reference trace.
    pub reference_scale: f64,
}

impl SingleScatterSetup {
    /// Input-leg transfer of the X-polarized incident field at the centre.
    fn input_leg(&self, model: &ResponseModel, omegas: &[f64]) -> Result<Vec<ModeTransfer>> {
        let chis = omegas.iter().map(|w| model.susceptibility(*w)).collect::<Result<Vec<_>>>()?;
        // the reversed semi-infinite ray has the same transfer as the incoming one
        Ok(transfer_function(&self.cloud, &Ray::to_infinity([0.0; 3], [0.0, -1.0, 0.0]), &chis))
    }
}

/// Scattered intensity from an atom at the cloud centre toward `axis`.
///
/// The incident field travels along +Y with X polarization. Sublevels are
/// averaged incoherently over the populated manifold and summed over m''
/// and both outgoing polarizations. The elastic field is propagated
/// through the medium on both legs and the inelastic field escapes freely.
pub fn single_scatter_signal(setup: &SingleScatterSetup, axis: Axis, control_on: bool) -> Result<ScatterSignal> {
    setup.pulse.validate()?;
    let model = if control_on { setup.model.clone() } else { setup.model.control_off() };
    let grid = &setup.grid;
    let input = pulse_time(grid, &setup.pulse)?;
    let spectrum = grid.analyze(&input)?;
    let (lo, hi) = pulse_band(grid, &setup.pulse, setup.band_cut);
    let omegas: Vec<f64> = (lo..hi).map(|k| grid.omega(k)).collect();
    let dir = axis.vector();

    let t_in = setup.input_leg(&model, &omegas)?;
    let chis = omegas.iter().map(|w| model.susceptibility(*w)).collect::<Result<Vec<_>>>()?;
    let t_out = transfer_function(&setup.cloud, &Ray::to_infinity([0.0; 3], dir), &chis);
    let x = real_vector(1.0, 0.0, 0.0);
    let (o, e) = (t_out[0].o, t_out[0].e);

    // amplitude spectra keyed by (initial, final, output mode)
    struct Track {
        elastic: bool,
        values: Vec<Complex64>,
    }
    let populated = model.populated().to_vec();
    let per_freq: Vec<Vec<(usize, usize, usize, bool, Complex64)>> = omegas
        .par_iter()
        .enumerate()
        .map(|(b, &w)| -> Result<_> {
            let drive = spectrum.values[lo + b];
            let field_in = t_in[b].apply(&x) * drive;
            let mut out = Vec::new();
            for &m in &populated {
                for ch in model.final_channels(w, m)? {
                    let scattered = ch.tensor * field_in;
                    for (slot, u) in [o, e].iter().enumerate() {
                        let mut a = scattered[0] * u[0] + scattered[1] * u[1] + scattered[2] * u[2];
                        let elastic = ch.channel.is_elastic();
                        if elastic {
                            a *= if slot == 0 { t_out[b].ordinary } else { t_out[b].extraordinary };
                        }
                        out.push((m, ch.final_index, slot, elastic, a));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut tracks: std::collections::BTreeMap<(usize, usize, usize), Track> = Default::default();
    for (b, entries) in per_freq.into_iter().enumerate() {
        for (m, f, slot, elastic, a) in entries {
            let tr = tracks
                .entry((m, f, slot))
                .or_insert_with(|| Track { elastic, values: vec![Complex64::new(0.0, 0.0); omegas.len()] });
            tr.values[b] = a;
        }
    }

    let area = PI * (setup.pulse.aperture * setup.cloud.r0).powi(2);
    let weight = 1.0 / (populated.len() as f64 * area);
    let traces: Vec<(bool, IntensityTrace)> = tracks
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|tr| grid.band_intensity(lo, &tr.values).map(|i| (tr.elastic, i)))
        .collect::<Result<_>>()?;
    let mut elastic = IntensityTrace::zeros(grid.t0, grid.dt, grid.n);
    let mut inelastic = elastic.clone();
    for (is_elastic, tr) in &traces {
        if *is_elastic {
            elastic.add_scaled(tr, weight);
        } else {
            inelastic.add_scaled(tr, weight);
        }
    }

    let carrier = model.susceptibility(setup.pulse.detuning)?;
    let leg = transfer_function(&setup.cloud, &Ray::to_infinity([0.0; 3], dir), &[carrier])[0];
    let out_leg_attenuation = 0.5 * (leg.ordinary.norm_sqr() + leg.extraordinary.norm_sqr());

    Ok(ScatterSignal {
        axis,
        control_on,
        elastic,
        inelastic,
        reference: input.intensity().scaled(setup.reference_scale),
        out_leg_attenuation,
    })
}

/// Energy-weighted channel strengths at the scatterer (no outgoing-leg
/// transfer), integrated over 4π and summed over m'' with the input leg.
#[derive(Clone, Copy, Debug)]
pub struct ChannelBudget {
    pub elastic: f64,
    pub inelastic: f64,
}

/// Total scattered energy per channel class from an atom at the centre,
/// using the angle-integrated cross section (8π/3)|α·E|².
pub fn channel_budget(setup: &SingleScatterSetup, control_on: bool) -> Result<ChannelBudget> {
    let model = if control_on { setup.model.clone() } else { setup.model.control_off() };
    let grid = &setup.grid;
    let (lo, hi) = pulse_band(grid, &setup.pulse, setup.band_cut);
    let omegas: Vec<f64> = (lo..hi).map(|k| grid.omega(k)).collect();
    let t_in = setup.input_leg(&model, &omegas)?;
    let x = real_vector(1.0, 0.0, 0.0);
    let mut budget = ChannelBudget { elastic: 0.0, inelastic: 0.0 };
    for (b, &w) in omegas.iter().enumerate() {
        let s = setup.pulse.spectral_amplitude(w).norm_sqr() * grid.dw() / (2.0 * PI);
        let field = t_in[b].apply(&x);
        for &m in model.populated() {
            for ch in model.final_channels(w, m)? {
                let v = (ch.tensor * field).norm_squared() * 8.0 * PI / 3.0 * s / model.populated().len() as f64;
                match ch.channel {
                    Channel::RamanInelastic => budget.inelastic += v,
                    _ => budget.elastic += v,
                }
            }
        }
    }
    Ok(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> (FftGrid, PulseConfig) {
        let p = PulseConfig::default();
        (FftGrid::for_pulse(&p, 4096, 0.5).unwrap(), p)
    }

    #[test]
    fn pulse_peak_and_norm() {
        let (g, p) = grid();
        let ts = pulse_time(&g, &p).unwrap();
        let (imax, _) = ts.values.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
        assert_relative_eq!(ts.time(imax), p.duration, epsilon = 1e-12);
        assert_relative_eq!(ts.energy(), 1.0, epsilon = 1e-12);
        // carrier phase −ΔT at the envelope centre
        assert_relative_eq!(p.amplitude(p.duration).arg(), -1.5, epsilon = 1e-12);
    }

    #[test]
    fn grid_contract() {
        let p = PulseConfig::default();
        let short = FftGrid::new(1024, 1.0, -120.0).unwrap();
        assert!(pulse_time(&short, &p).is_err());
        let late = FftGrid::new(4096, 1.0, 10.0).unwrap();
        assert!(pulse_time(&late, &p).is_err());
    }

    #[test]
    fn fft_round_trip_and_parseval() {
        let (g, p) = grid();
        let ts = pulse_time(&g, &p).unwrap();
        let spec = g.analyze(&ts).unwrap();
        assert_relative_eq!(spec.energy(), ts.energy(), max_relative = 1e-12);
        let back = g.synthesize(&spec).unwrap();
        for (a, b) in back.values.iter().zip(&ts.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn analytic_spectrum_matches_fft() {
        let (g, p) = grid();
        let num = g.analyze(&pulse_time(&g, &p).unwrap()).unwrap();
        let ana = pulse_spectrum(&g, &p).unwrap();
        let peak = ana.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in num.values.iter().zip(&ana.values) {
            assert!((a - b).norm() < 1e-10 * peak);
        }
        let (kmax, _) = ana.values.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
        assert!((ana.omega(kmax) - p.detuning).abs() <= g.dw());
    }

    #[test]
    fn spectral_widths() {
        let p = PulseConfig::default();
        let s = p.spectral_std();
        let ratio = p.spectral_amplitude(p.detuning + s).norm() / p.spectral_amplitude(p.detuning).norm();
        assert_relative_eq!(ratio, (-0.5f64).exp(), max_relative = 1e-12);
        let h = 0.5 * p.spectral_intensity_fwhm();
        let half = p.spectral_amplitude(p.detuning + h).norm_sqr() / p.spectral_amplitude(p.detuning).norm_sqr();
        assert_relative_eq!(half, 0.5, max_relative = 1e-12);
        assert!(p.spectral_intensity_fwhm() < 1.0);
    }

    #[test]
    fn arrival_time_moments() {
        let (g, p) = grid();
        let tr = pulse_time(&g, &p).unwrap().intensity();
        assert_relative_eq!(mean_arrival_time(&tr).unwrap(), p.duration, epsilon = 1e-9);
        let tau = 37.0;
        let shifted = PulseConfig { duration: p.duration, ..p };
        let vals: Vec<f64> = (0..g.n).map(|j| shifted.amplitude(g.time(j) - tau).norm_sqr()).collect();
        let tr2 = IntensityTrace { start: g.t0, step: g.dt, values: vals };
        assert_relative_eq!(mean_arrival_time(&tr2).unwrap(), p.duration + tau, epsilon = 1e-9);
        assert!(matches!(mean_arrival_time(&IntensityTrace::zeros(0.0, 1.0, 8)), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(Axis::parse("x").unwrap(), Axis::PlusX);
        assert_eq!(Axis::parse("-Z").unwrap(), Axis::MinusZ);
        assert!(matches!(Axis::parse("XY"), Err(Error::UnsupportedDirection(_))));
    }
}
