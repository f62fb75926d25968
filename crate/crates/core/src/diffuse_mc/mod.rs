//! Monte-Carlo ladder series for multiply scattered light.
//!
//! Each path carries the full band-limited spectrum of the input pulse as
//! a coherent field in the two propagation modes. Free flights attenuate
//! and phase-shift every frequency with the dilute-medium wavenumber
//! κ = 2πn₀χ̂, and vertices apply the frequency-dependent scattering
//! amplitudes of one (initial, final) sublevel pair. Interaction columns,
//! pairs and directions are sampled in proportion to the band-integrated
//! energy, so a lossless vertex keeps the path energy unchanged. Distinct
//! paths add in intensity.

mod accumulator;
mod geometry;
mod kernel;
mod path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use accumulator::{delay_statistics, DelayReport, DetectorTally, Estimate, OrderAccumulator, OrderBin, OrderStatistics};
pub use geometry::{disc_sample, GaussianSphere, Geometry, UniformSlab};
pub use kernel::{AtomicKernel, Entry, IsotropicKernel, Kernel, KernelTable, Pair};
pub use path::{
    angular_pdf, isotropic_direction, pair_strengths, sample_free_path, spherical_components, FreeFlight, PathChain,
    PathFate,
};

use crate::error::{Error, Result};
use crate::medium::CloudConfig;
use crate::pulse_transport::{pulse_band, FftGrid, PulseConfig};
use path::{Transport, Workspace};

/// Experimental spin-coherence storage step: after `switch_time` the
/// spectral content within `half_width` of `center` is delayed by `hold`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageGate {
    pub switch_time: f64,
    pub hold: f64,
    pub center: f64,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    /// Highest vertex count kept; defaults to ⌈b₀²⌉.
    pub max_order: Option<usize>,
    /// Relative path energy below which Russian roulette applies.
    pub roulette_threshold: f64,
    pub roulette_survival: f64,
    /// Unit directions for next-event detectors.
    pub detectors: Vec<[f64; 3]>,
    /// Paths per work unit; fixes the summation order.
    pub chunk_size: usize,
    pub workers: usize,
    /// Relative spectral amplitude below which input frequencies are dropped.
    pub band_cut: f64,
    /// Number of leading paths whose chains are returned.
    pub record_chains: usize,
    pub storage: Option<StorageGate>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 10_000,
            seed: 1,
            max_order: None,
            roulette_threshold: 1e-12,
            roulette_survival: 0.1,
            detectors: Vec::new(),
            chunk_size: 64,
            workers: rayon::current_num_threads(),
            band_cut: 1e-6,
            record_chains: 0,
            storage: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::parameter("mc.paths", 0.0, "must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(Error::parameter("mc.chunk_size", 0.0, "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::parameter("mc.workers", 0.0, "must be at least 1"));
        }
        if !(self.roulette_survival > 0.0 && self.roulette_survival <= 1.0) {
            return Err(Error::parameter("mc.roulette_survival", self.roulette_survival, "must lie in (0, 1]"));
        }
        if !(self.roulette_threshold >= 0.0 && self.roulette_threshold < 1.0) {
            return Err(Error::parameter("mc.roulette_threshold", self.roulette_threshold, "must lie in [0, 1)"));
        }
        if !(self.band_cut > 0.0 && self.band_cut < 1.0) {
            return Err(Error::parameter("mc.band_cut", self.band_cut, "must lie in (0, 1)"));
        }
        if self.max_order == Some(0) {
            return Err(Error::parameter("mc.max_order", 0.0, "must be at least 1"));
        }
        for d in &self.detectors {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if !((n - 1.0).abs() < 1e-9) {
                return Err(Error::parameter("mc.detectors", n, "detector directions must be unit vectors"));
            }
        }
        Ok(())
    }
}

/// Scattering volume with its peak density and input aperture.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene<G> {
    pub geometry: G,
    /// Peak density in ƛ⁻³.
    pub n0: f64,
    /// Radius of the flat input profile in ƛ.
    pub aperture: f64,
    /// Resonant optical depth used for the default order cap.
    pub optical_depth: f64,
}

impl Scene<GaussianSphere> {
    pub fn cloud(cloud: &CloudConfig, pulse: &PulseConfig) -> Self {
        Scene {
            geometry: GaussianSphere { r0: cloud.r0 },
            n0: cloud.n0,
            aperture: pulse.aperture * cloud.r0,
            optical_depth: cloud.b0(),
        }
    }
}

/// Accumulated tallies plus the recorded chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffusion {
    pub accumulator: OrderAccumulator,
    pub chains: Vec<PathChain>,
    pub max_order: usize,
    /// Input frequency band as grid slots `first..first + bands`.
    pub first: usize,
    pub bands: usize,
}

/// Runs `cfg.paths` independent paths. Path i draws from ChaCha8 stream i
/// of the master seed, and work units are merged in index order, so the
/// result does not depend on the worker count.
pub fn run_diffusion<G: Geometry, K: Kernel>(
    scene: &Scene<G>,
    kernel: &K,
    pulse: &PulseConfig,
    grid: &FftGrid,
    cfg: &McConfig,
) -> Result<Diffusion> {
    cfg.validate()?;
    pulse.validate()?;
    if !(scene.n0 > 0.0 && scene.n0.is_finite()) {
        return Err(Error::parameter("cloud.n0", scene.n0, "must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let (lo, hi) = pulse_band(grid, pulse, cfg.band_cut);
    let omegas: Vec<f64> = (lo..hi).map(|k| grid.omega(k)).collect();
    let table = pool.install(|| kernel.tabulate(&omegas))?;
    let input: Vec<_> = omegas.iter().map(|w| pulse.spectral_amplitude(*w)).collect();
    let max_order = cfg.max_order.unwrap_or_else(|| (scene.optical_depth * scene.optical_depth).ceil().max(1.0) as usize);

    let transport = Transport {
        scene,
        table: &table,
        grid,
        first: lo,
        input: &input,
        detectors: &cfg.detectors,
        cfg,
        max_order,
    };
    let chunks: Vec<(usize, usize)> =
        (0..cfg.paths).step_by(cfg.chunk_size).map(|s| (s, (s + cfg.chunk_size).min(cfg.paths))).collect();
    let run_chunk = |&(start, end): &(usize, usize)| -> Result<(OrderAccumulator, Vec<PathChain>)> {
        let mut acc = OrderAccumulator::new(grid.t0, grid.dt, grid.n, &cfg.detectors);
        let mut ws = Workspace::new(grid.n, table.bands());
        let mut chains = Vec::new();
        for index in start..end {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            if let Some(c) = transport.run_path(index, &mut rng, &mut ws, &mut acc, index < cfg.record_chains)? {
                chains.push(c);
            }
        }
        Ok((acc, chains))
    };

    let mut total = OrderAccumulator::new(grid.t0, grid.dt, grid.n, &cfg.detectors);
    let mut chains = Vec::new();
    // bounded windows keep at most a few chunk accumulators alive
    let window = 4 * cfg.workers.max(1);
    for group in chunks.chunks(window) {
        let parts = pool.install(|| group.par_iter().map(run_chunk).collect::<Result<Vec<_>>>())?;
        for (acc, c) in parts {
            total.merge(&acc)?;
            chains.extend(c);
        }
    }
    let report_truncation = total.input_energy > 0.0 && total.truncated / total.input_energy > 0.01;
    if report_truncation {
        log::warn!(
            "order cap {max_order} discards {:.2}% of the input energy",
            100.0 * total.truncated / total.input_energy
        );
    }
    Ok(Diffusion { accumulator: total, chains, max_order, first: lo, bands: omegas.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn slab_scene() -> Scene<UniformSlab> {
        Scene { geometry: UniformSlab { thickness: 1.0 }, n0: 1.0 / (6.0 * std::f64::consts::PI), aperture: 1.0, optical_depth: 1.0 }
    }

    fn small() -> (PulseConfig, FftGrid) {
        let p = PulseConfig::default();
        (p, FftGrid::new(2048, 1.0, -120.0).unwrap())
    }

    #[test]
    fn zero_paths_rejected() {
        let (p, g) = small();
        let cfg = McConfig { paths: 0, ..McConfig::default() };
        let err = run_diffusion(&slab_scene(), &IsotropicKernel::resonant(), &p, &g, &cfg).unwrap_err();
        assert!(matches!(err, Error::Parameter { name: "mc.paths", .. }));
    }

    #[test]
    fn lossless_kernel_conserves_energy() {
        let (p, g) = small();
        let cfg = McConfig { paths: 300, max_order: Some(200), workers: 1, record_chains: 5, ..McConfig::default() };
        let run = run_diffusion(&slab_scene(), &IsotropicKernel::resonant(), &p, &g, &cfg).unwrap();
        let acc = &run.accumulator;
        let rep = delay_statistics(acc).unwrap();
        assert!((rep.escaped.mean - rep.input_energy).abs() < 1e-9);
        assert!(rep.escaped.error < 1e-6, "{:?}", rep.escaped);
        assert_eq!(run.chains.len(), 5);
        assert!(run.chains.iter().all(|c| c.weight > 0.0));
        // the slab has no inelastic channel
        assert_eq!(acc.inelastic_vertices, 0);
    }

    #[test]
    fn dilute_limit_single_order() {
        let (p, g) = small();
        let mut scene = slab_scene();
        scene.geometry.thickness = 1e-3;
        let cfg = McConfig { paths: 2000, workers: 1, ..McConfig::default() };
        let run = run_diffusion(&scene, &IsotropicKernel::resonant(), &p, &g, &cfg).unwrap();
        let rep = delay_statistics(&run.accumulator).unwrap();
        let e1 = rep.elastic.get(1).map_or(0.0, |s| s.energy.mean);
        let e2: f64 = rep.elastic.iter().skip(2).map(|s| s.energy.mean).sum();
        assert!(e1 > 0.0);
        assert!(e2 < 1e-2 * e1);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let (p, g) = small();
        let base = McConfig { paths: 150, chunk_size: 16, workers: 1, detectors: vec![[0.0, 1.0, 0.0]], ..McConfig::default() };
        let kernel = IsotropicKernel { alpha: Complex64::new(0.2, 1.5) };
        let a = run_diffusion(&slab_scene(), &kernel, &p, &g, &base).unwrap();
        let b = run_diffusion(&slab_scene(), &kernel, &p, &g, &McConfig { workers: 3, ..base }).unwrap();
        assert_eq!(a.accumulator, b.accumulator);
    }
}
