//! Transport of one frequency-resolved photon path.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::accumulator::{OrderAccumulator, PathScore};
use super::geometry::Geometry;
use super::kernel::KernelTable;
use super::{McConfig, Scene, StorageGate};
use crate::error::{Error, Result};
use crate::medium::mode_basis;
use crate::pulse_transport::FftGrid;
use crate::response::{CMatrix3, CVector3, PolarizationBasis};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Outcome of a free-flight draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeFlight {
    Escape { probability: f64 },
    Scatter { column: f64, distance: f64, escape_probability: f64 },
}

/// Draws the next interaction along a ray for a mixture of exponentially
/// decaying components: `weights[j]` carries intensity that decays as
/// exp(−rates[j]·C) with column C. Escape happens with the surviving
/// fraction of the total column to the boundary.
pub fn sample_free_path<G: Geometry + ?Sized, R: Rng + ?Sized>(
    geometry: &G,
    from: [f64; 3],
    dir: [f64; 3],
    weights: &[f64],
    rates: &[f64],
    rng: &mut R,
) -> FreeFlight {
    let total: f64 = weights.iter().sum();
    let column_max = geometry.column_to_exit(from, dir);
    let survival = |c: f64| weights.iter().zip(rates).map(|(a, m)| a * (-m * c).exp()).sum::<f64>() / total;
    let escape = survival(column_max);
    let xi: f64 = rng.random();
    if !(total > 0.0) || xi < escape {
        return FreeFlight::Escape { probability: escape };
    }
    // S(C) is convex and decreasing, so Newton from C = 0 climbs monotonically
    let mut c = 0.0f64;
    for _ in 0..200 {
        let (mut s, mut p) = (0.0, 0.0);
        for (a, m) in weights.iter().zip(rates) {
            let x = a * (-m * c).exp();
            s += x;
            p += m * x;
        }
        let f = (s / total) - xi;
        if f <= 0.0 || p <= 0.0 {
            break;
        }
        let step = f * total / p;
        c += step;
        if step <= 1e-14 * c {
            break;
        }
    }
    let column = c.min(column_max);
    FreeFlight::Scatter { column, distance: geometry.distance_for_column(from, dir, column), escape_probability: escape }
}

/// Uniform direction on the unit sphere.
pub fn isotropic_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Normalized angular density of the outgoing direction for a scattered
/// field with coherence matrix Q = Σ_ω w v v†: (tr Q − k̂ᵀQk̂)/((8π/3) tr Q).
pub fn angular_pdf(q: &CMatrix3, k: [f64; 3]) -> f64 {
    let tr = q.trace().re;
    (tr - quadratic(q, k)) / (8.0 * PI / 3.0 * tr)
}

fn quadratic(q: &CMatrix3, k: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += k[i] * k[j] * q[(i, j)].re;
        }
    }
    s
}

/// Spherical components e_q†·E of Cartesian fields.
pub fn spherical_components(field: &CVector3) -> [Complex64; 3] {
    let mut out = [ZERO; 3];
    for (slot, q) in (-1..=1).enumerate() {
        out[slot] = PolarizationBasis::spherical(q).dotc(field);
    }
    out
}

/// Weighted scattered power Σ_b w_b Σ_p |Σ_q A_pq(b) E_q(b)|² of every
/// kernel pair for incident spherical fields `fields[b]`.
pub fn pair_strengths(table: &KernelTable, fields: &[[Complex64; 3]], weight: f64) -> Vec<f64> {
    let np = table.pairs.len();
    let mut out = vec![0.0; np];
    let mut v = vec![[ZERO; 3]; np];
    for (b, e) in fields.iter().enumerate() {
        v.iter_mut().for_each(|x| *x = [ZERO; 3]);
        for (entry, a) in table.entries.iter().zip(table.band_values(b)) {
            v[entry.pair][entry.p] += a * e[entry.q];
        }
        for (o, vp) in out.iter_mut().zip(&v) {
            *o += weight * (vp[0].norm_sqr() + vp[1].norm_sqr() + vp[2].norm_sqr());
        }
    }
    out
}

/// Fate of a finished path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFate {
    /// Left the medium along its current direction.
    Escaped,
    /// Ended by an inelastic vertex; the shifted light leaves freely.
    Inelastic,
    /// Reached the maximum scattering order.
    Truncated,
    /// Removed by Russian roulette.
    Killed,
}

/// One sampled multiple-scattering trajectory.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PathChain {
    pub index: usize,
    pub vertices: Vec<[f64; 3]>,
    /// (initial, final) ground-table indices per vertex.
    pub transitions: Vec<(usize, usize)>,
    /// Dominant outgoing mode per vertex: 0 ordinary, 1 extraordinary.
    pub out_modes: Vec<usize>,
    /// Path energy after the last vertex, relative to the input pulse.
    pub weight: f64,
    pub fate: PathFate,
}

impl PathChain {
    pub fn order(&self) -> usize {
        self.vertices.len()
    }
}

/// Reusable per-worker buffers.
pub(crate) struct Workspace {
    fft: Vec<Complex64>,
    trace: Vec<f64>,
    band: Vec<Complex64>,
    band_e: Vec<Complex64>,
    sph: Vec<[Complex64; 3]>,
    v: Vec<CVector3>,
    weights: Vec<f64>,
    rates: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(n: usize, bands: usize) -> Self {
        Workspace {
            fft: vec![ZERO; n],
            trace: vec![0.0; n],
            band: vec![ZERO; bands],
            band_e: vec![ZERO; bands],
            sph: vec![[ZERO; 3]; bands],
            v: vec![CVector3::zeros(); bands],
            weights: vec![0.0; 2 * bands],
            rates: vec![0.0; 2 * bands],
        }
    }
}

/// Frequency-resolved field in the (ordinary, extraordinary) basis of the
/// propagation direction.
struct Field {
    dir: [f64; 3],
    o: [f64; 3],
    e: [f64; 3],
    amp: Vec<[Complex64; 2]>,
}

impl Field {
    fn new(dir: [f64; 3], amp: Vec<[Complex64; 2]>) -> Self {
        let (o, e) = mode_basis(dir);
        Field { dir, o, e, amp }
    }

    fn energy(&self, w: f64) -> f64 {
        w * self.amp.iter().map(|a| a[0].norm_sqr() + a[1].norm_sqr()).sum::<f64>()
    }

    fn cartesian(&self, b: usize) -> CVector3 {
        let [ao, ae] = self.amp[b];
        CVector3::new(
            ao * self.o[0] + ae * self.e[0],
            ao * self.o[1] + ae * self.e[1],
            ao * self.o[2] + ae * self.e[2],
        )
    }
}

/// Shared read-only inputs of the transport loop.
pub(crate) struct Transport<'a, G: Geometry> {
    pub scene: &'a Scene<G>,
    pub table: &'a KernelTable,
    pub grid: &'a FftGrid,
    pub first: usize,
    pub input: &'a [Complex64],
    pub detectors: &'a [[f64; 3]],
    pub cfg: &'a McConfig,
    pub max_order: usize,
}

impl<G: Geometry> Transport<'_, G> {
    fn weight(&self) -> f64 {
        self.grid.dw() / (2.0 * PI)
    }

    /// Complex wavenumber excess κ = 2πn₀χ̂ per column for both modes.
    fn wavenumbers(&self, dir: [f64; 3], b: usize) -> [Complex64; 2] {
        let kz2 = dir[2] * dir[2];
        let perp = self.table.chi_perp[b];
        let ext = perp * kz2 + self.table.chi_par[b] * (1.0 - kz2);
        let scale = 2.0 * PI * self.scene.n0;
        [perp * scale, ext * scale]
    }

    fn transfer(&self, dir: [f64; 3], column: f64, b: usize) -> [Complex64; 2] {
        let k = self.wavenumbers(dir, b);
        [(Complex64::i() * k[0] * column).exp(), (Complex64::i() * k[1] * column).exp()]
    }

    /// Writes the time-resolved intensity of `amp` (scaled by `scale`)
    /// into `ws.trace`.
    fn render(&self, amp: &[[Complex64; 2]], scale: f64, ws: &mut Workspace) -> Result<()> {
        ws.trace.fill(0.0);
        for mode in 0..2 {
            for (dst, a) in ws.band.iter_mut().zip(amp) {
                *dst = a[mode];
            }
            match &self.cfg.storage {
                Some(gate) => gate_intensity(self.grid, self.first, &ws.band, gate, scale, &mut ws.trace)?,
                None => self.grid.accumulate_band_intensity(self.first, &ws.band, scale, &mut ws.fft, &mut ws.trace)?,
            }
        }
        Ok(())
    }

    /// Transports path `index` and records its contributions in `acc`.
    pub(crate) fn run_path<R: Rng>(
        &self,
        index: usize,
        rng: &mut R,
        ws: &mut Workspace,
        acc: &mut OrderAccumulator,
        record: bool,
    ) -> Result<Option<PathChain>> {
        let table = self.table;
        let w = self.weight();
        let bands = table.bands();
        let n0 = self.scene.n0;
        let states = table.states as f64;

        let (mut pos, dir) = self.scene.geometry.entry(rng, self.scene.aperture);
        let mut field = Field::new(dir, self.input.iter().map(|a| [*a, ZERO]).collect());
        let input_energy = field.energy(w);
        let mut energy = input_energy;
        let mut order = 0usize;
        let mut length = 0.0;
        let mut expected_escape = 0.0;
        let mut chain = record.then(|| PathChain {
            index,
            vertices: Vec::new(),
            transitions: Vec::new(),
            out_modes: Vec::new(),
            weight: energy,
            fate: PathFate::Escaped,
        });

        let fate = loop {
            for b in 0..bands {
                let k = self.wavenumbers(field.dir, b);
                for m in 0..2 {
                    ws.weights[2 * b + m] = w * field.amp[b][m].norm_sqr();
                    ws.rates[2 * b + m] = (2.0 * k[m].im).max(0.0);
                }
            }
            let flight = sample_free_path(&self.scene.geometry, pos, field.dir, &ws.weights, &ws.rates, rng);
            let escape = match flight {
                FreeFlight::Escape { probability } | FreeFlight::Scatter { escape_probability: probability, .. } => {
                    probability
                }
            };
            expected_escape += energy * escape;

            let (column, distance) = match flight {
                FreeFlight::Escape { probability } => {
                    let column = self.scene.geometry.column_to_exit(pos, field.dir);
                    for b in 0..bands {
                        let t = self.transfer(field.dir, column, b);
                        field.amp[b][0] *= t[0];
                        field.amp[b][1] *= t[1];
                    }
                    self.render(&field.amp, 1.0 / probability, ws)?;
                    acc.score_escape(order, &ws.trace, length, false);
                    break PathFate::Escaped;
                }
                FreeFlight::Scatter { column, distance, .. } => (column, distance),
            };

            for b in 0..bands {
                let t = self.transfer(field.dir, column, b);
                field.amp[b][0] *= t[0];
                field.amp[b][1] *= t[1];
            }
            for d in 0..3 {
                pos[d] += distance * field.dir[d];
            }
            if order > 0 {
                length += distance;
            }
            // column density of the interaction point
            let pdf_column: f64 = (0..bands)
                .map(|b| {
                    let k = self.wavenumbers(field.dir, b);
                    w * (field.amp[b][0].norm_sqr() * (2.0 * k[0].im).max(0.0)
                        + field.amp[b][1].norm_sqr() * (2.0 * k[1].im).max(0.0))
                })
                .sum::<f64>()
                / energy;

            // vertex: choose (state, final) by scattered power
            for b in 0..bands {
                ws.sph[b] = spherical_components(&field.cartesian(b));
            }
            let strengths = pair_strengths(table, &ws.sph, w);
            let total: f64 = strengths.iter().sum();
            if !(total > 0.0) || !(pdf_column > 0.0) {
                return Err(Error::Internal("zero total cross section at a scattering vertex".into()));
            }
            let mut pick = rng.random::<f64>() * total;
            let mut pair = strengths.len() - 1;
            for (i, s) in strengths.iter().enumerate() {
                if pick < *s {
                    pair = i;
                    break;
                }
                pick -= s;
            }
            while strengths[pair] <= 0.0 {
                pair -= 1;
            }
            let info = table.pairs[pair];

            let mut q = CMatrix3::zeros();
            for b in 0..bands {
                let mut sph = [ZERO; 3];
                for (entry, a) in table.entries.iter().zip(table.band_values(b)) {
                    if entry.pair == pair {
                        sph[entry.p] += a * ws.sph[b][entry.q];
                    }
                }
                let v = PolarizationBasis::spherical(-1) * sph[0]
                    + PolarizationBasis::spherical(0) * sph[1]
                    + PolarizationBasis::spherical(1) * sph[2];
                q += v * v.adjoint() * Complex64::new(w, 0.0);
                ws.v[b] = v;
            }
            let tr_q = q.trace().re;
            let pair_prob = strengths[pair] / total;
            order += 1;

            // next-event estimate per steradian toward each detector
            let per_sr = n0 / (states * pdf_column * pair_prob);
            for (di, &d) in self.detectors.iter().enumerate() {
                self.score_detector(di, d, pos, info.inelastic, per_sr, acc, ws)?;
            }

            let out = loop {
                let k = isotropic_direction(rng);
                if rng.random::<f64>() * tr_q < tr_q - quadratic(&q, k) {
                    break k;
                }
            };
            let pdf_dir = angular_pdf(&q, out);
            let scale = (n0 / (states * pdf_column * pair_prob * pdf_dir)).sqrt();
            let (o, e) = mode_basis(out);
            let amp: Vec<[Complex64; 2]> = ws
                .v
                .iter()
                .map(|v| {
                    let ao = v[0] * o[0] + v[1] * o[1] + v[2] * o[2];
                    let ae = v[0] * e[0] + v[1] * e[1] + v[2] * e[2];
                    [ao * scale, ae * scale]
                })
                .collect();
            field = Field { dir: out, o, e, amp };
            let new_energy = field.energy(w);
            acc.count_vertex(info.inelastic);

            if let Some(ch) = chain.as_mut() {
                ch.vertices.push(pos);
                ch.transitions.push((table.state_levels[info.state], info.final_));
                let (po, pe) = field.amp.iter().fold((0.0, 0.0), |s, a| (s.0 + a[0].norm_sqr(), s.1 + a[1].norm_sqr()));
                ch.out_modes.push(usize::from(pe > po));
                ch.weight = new_energy;
            }

            if order > self.max_order {
                acc.score_truncated(new_energy);
                break PathFate::Truncated;
            }
            if info.inelastic {
                self.render(&field.amp, 1.0, ws)?;
                acc.score_escape(order, &ws.trace, length, true);
                break PathFate::Inelastic;
            }
            energy = new_energy;
            if energy < self.cfg.roulette_threshold * input_energy {
                if rng.random::<f64>() < self.cfg.roulette_survival {
                    let boost = 1.0 / self.cfg.roulette_survival.sqrt();
                    field.amp.iter_mut().for_each(|a| {
                        a[0] *= boost;
                        a[1] *= boost;
                    });
                    energy = field.energy(w);
                } else {
                    acc.score_killed();
                    break PathFate::Killed;
                }
            }
        };
        acc.finish_path(PathScore { input_energy, expected_escape });
        Ok(chain.map(|mut c| {
            c.fate = fate;
            c
        }))
    }

    #[allow(clippy::too_many_arguments)]
    fn score_detector(
        &self,
        slot: usize,
        d: [f64; 3],
        pos: [f64; 3],
        inelastic: bool,
        per_sr: f64,
        acc: &mut OrderAccumulator,
        ws: &mut Workspace,
    ) -> Result<()> {
        let (o, e) = mode_basis(d);
        let column = if inelastic { 0.0 } else { self.scene.geometry.column_to_exit(pos, d) };
        let root = per_sr.sqrt();
        for b in 0..self.table.bands() {
            let v = &ws.v[b];
            let mut ao = (v[0] * o[0] + v[1] * o[1] + v[2] * o[2]) * root;
            let mut ae = (v[0] * e[0] + v[1] * e[1] + v[2] * e[2]) * root;
            if !inelastic {
                let t = self.transfer(d, column, b);
                ao *= t[0];
                ae *= t[1];
            }
            ws.band[b] = ao;
            ws.band_e[b] = ae;
        }
        ws.trace.fill(0.0);
        self.grid.accumulate_band_intensity(self.first, &ws.band, 1.0, &mut ws.fft, &mut ws.trace)?;
        self.grid.accumulate_band_intensity(self.first, &ws.band_e, 1.0, &mut ws.fft, &mut ws.trace)?;
        acc.score_detector(slot, &ws.trace, inelastic);
        Ok(())
    }
}

/// Intensity of a band-limited mode after the experimental storage gate:
/// the part of the field arriving after the switch time has its spectral
/// components inside the window delayed by the hold time.
fn gate_intensity(
    grid: &FftGrid,
    first: usize,
    band: &[Complex64],
    gate: &StorageGate,
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    use crate::pulse_transport::Spectrum;
    let mut full = vec![ZERO; grid.n];
    full[first..first + band.len()].copy_from_slice(band);
    let ts = grid.synthesize(&Spectrum { start: grid.omega(0), step: grid.dw(), values: full })?;
    let mut early = ts.clone();
    let mut late = ts;
    for j in 0..grid.n {
        if grid.time(j) < gate.switch_time {
            late.values[j] = ZERO;
        } else {
            early.values[j] = ZERO;
        }
    }
    let mut spec = grid.analyze(&late)?;
    for k in 0..grid.n {
        let omega = spec.omega(k);
        if (omega - gate.center).abs() <= gate.half_width {
            spec.values[k] *= Complex64::from_polar(1.0, omega * gate.hold);
        }
    }
    let late = grid.synthesize(&spec)?;
    for j in 0..grid.n {
        out[j] += scale * (early.values[j] + late.values[j]).norm_sqr();
    }
    Ok(())
}
