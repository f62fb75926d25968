//! Order-resolved tallies and their statistics.

use crate::error::{Error, Result};
use crate::pulse_transport::IntensityTrace;

/// Tallies of one scattering order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrderBin {
    /// Σ over paths of the escaped intensity; empty until first use.
    pub trace: Vec<f64>,
    pub paths: u64,
    /// Σe, Σe², Σm, Σm², Σe·m with e = ∫I dt and m = ∫t I dt per path.
    pub energy: f64,
    pub energy_sq: f64,
    pub moment: f64,
    pub moment_sq: f64,
    pub cross: f64,
    /// Σ e·L with L the path length between first and last vertex.
    pub length: f64,
}

impl OrderBin {
    fn merge(&mut self, other: &OrderBin) {
        if !other.trace.is_empty() {
            if self.trace.is_empty() {
                self.trace = vec![0.0; other.trace.len()];
            }
            for (a, b) in self.trace.iter_mut().zip(&other.trace) {
                *a += b;
            }
        }
        self.paths += other.paths;
        self.energy += other.energy;
        self.energy_sq += other.energy_sq;
        self.moment += other.moment;
        self.moment_sq += other.moment_sq;
        self.cross += other.cross;
        self.length += other.length;
    }
}

/// Next-event tallies toward one detector direction, per steradian.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorTally {
    pub direction: [f64; 3],
    pub elastic: Vec<f64>,
    pub inelastic: Vec<f64>,
}

/// Per-path quantities passed to the accumulator when a path ends.
pub(crate) struct PathScore {
    pub input_energy: f64,
    pub expected_escape: f64,
}

/// Escaped intensity by scattering order, summed over paths.
///
/// Order 0 is the coherently transmitted beam. All sums are unnormalized;
/// divide by `paths` for values per input pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderAccumulator {
    pub start: f64,
    pub step: f64,
    pub points: usize,
    pub paths: u64,
    pub input_energy: f64,
    pub elastic: Vec<OrderBin>,
    pub inelastic: Vec<OrderBin>,
    pub detectors: Vec<DetectorTally>,
    /// Σ over paths of the expected escaped energy scored at every flight.
    pub expected_escape: f64,
    pub expected_escape_sq: f64,
    pub truncated: f64,
    pub truncated_paths: u64,
    pub killed_paths: u64,
    pub vertices: u64,
    pub inelastic_vertices: u64,
}

impl OrderAccumulator {
    pub fn new(start: f64, step: f64, points: usize, detectors: &[[f64; 3]]) -> Self {
        OrderAccumulator {
            start,
            step,
            points,
            paths: 0,
            input_energy: 0.0,
            elastic: Vec::new(),
            inelastic: Vec::new(),
            detectors: detectors
                .iter()
                .map(|d| DetectorTally { direction: *d, elastic: vec![0.0; points], inelastic: vec![0.0; points] })
                .collect(),
            expected_escape: 0.0,
            expected_escape_sq: 0.0,
            truncated: 0.0,
            truncated_paths: 0,
            killed_paths: 0,
            vertices: 0,
            inelastic_vertices: 0,
        }
    }

    fn bin(bins: &mut Vec<OrderBin>, order: usize) -> &mut OrderBin {
        if bins.len() <= order {
            bins.resize(order + 1, OrderBin::default());
        }
        &mut bins[order]
    }

    pub(crate) fn score_escape(&mut self, order: usize, trace: &[f64], length: f64, inelastic: bool) {
        let (start, step, points) = (self.start, self.step, self.points);
        let bins = if inelastic { &mut self.inelastic } else { &mut self.elastic };
        let bin = Self::bin(bins, order);
        if bin.trace.is_empty() {
            bin.trace = vec![0.0; points];
        }
        let (mut e, mut m) = (0.0, 0.0);
        for (j, (acc, v)) in bin.trace.iter_mut().zip(trace).enumerate() {
            *acc += v;
            e += v;
            m += (start + step * j as f64) * v;
        }
        e *= step;
        m *= step;
        bin.paths += 1;
        bin.energy += e;
        bin.energy_sq += e * e;
        bin.moment += m;
        bin.moment_sq += m * m;
        bin.cross += e * m;
        bin.length += e * length;
    }

    pub(crate) fn score_detector(&mut self, slot: usize, trace: &[f64], inelastic: bool) {
        let d = &mut self.detectors[slot];
        let dst = if inelastic { &mut d.inelastic } else { &mut d.elastic };
        for (a, v) in dst.iter_mut().zip(trace) {
            *a += v;
        }
    }

    pub(crate) fn score_truncated(&mut self, energy: f64) {
        self.truncated += energy;
        self.truncated_paths += 1;
    }

    pub(crate) fn score_killed(&mut self) {
        self.killed_paths += 1;
    }

    pub(crate) fn count_vertex(&mut self, inelastic: bool) {
        self.vertices += 1;
        if inelastic {
            self.inelastic_vertices += 1;
        }
    }

    pub(crate) fn finish_path(&mut self, score: PathScore) {
        self.paths += 1;
        self.input_energy += score.input_energy;
        self.expected_escape += score.expected_escape;
        self.expected_escape_sq += score.expected_escape * score.expected_escape;
    }

    /// Adds `other`; used in path-index order for reproducible sums.
    pub fn merge(&mut self, other: &OrderAccumulator) -> Result<()> {
        if other.points != self.points || other.detectors.len() != self.detectors.len() {
            return Err(Error::Contract("accumulators differ in layout".into()));
        }
        self.paths += other.paths;
        self.input_energy += other.input_energy;
        for (bins, others) in [(&mut self.elastic, &other.elastic), (&mut self.inelastic, &other.inelastic)] {
            for (order, b) in others.iter().enumerate() {
                Self::bin(bins, order).merge(b);
            }
        }
        for (d, o) in self.detectors.iter_mut().zip(&other.detectors) {
            for (a, b) in d.elastic.iter_mut().zip(&o.elastic) {
                *a += b;
            }
            for (a, b) in d.inelastic.iter_mut().zip(&o.inelastic) {
                *a += b;
            }
        }
        self.expected_escape += other.expected_escape;
        self.expected_escape_sq += other.expected_escape_sq;
        self.truncated += other.truncated;
        self.truncated_paths += other.truncated_paths;
        self.killed_paths += other.killed_paths;
        self.vertices += other.vertices;
        self.inelastic_vertices += other.inelastic_vertices;
        Ok(())
    }

    fn normalized(&self, values: &[f64]) -> IntensityTrace {
        let scale = 1.0 / self.paths.max(1) as f64;
        IntensityTrace { start: self.start, step: self.step, values: values.iter().map(|v| v * scale).collect() }
    }

    /// Mean escaped intensity of one elastic order per input pulse.
    pub fn elastic_trace(&self, order: usize) -> IntensityTrace {
        match self.elastic.get(order) {
            Some(b) if !b.trace.is_empty() => self.normalized(&b.trace),
            _ => IntensityTrace::zeros(self.start, self.step, self.points),
        }
    }

    pub fn inelastic_trace(&self, order: usize) -> IntensityTrace {
        match self.inelastic.get(order) {
            Some(b) if !b.trace.is_empty() => self.normalized(&b.trace),
            _ => IntensityTrace::zeros(self.start, self.step, self.points),
        }
    }

    /// Sum of the elastic orders in `orders`.
    pub fn elastic_sum(&self, orders: std::ops::RangeFrom<usize>) -> IntensityTrace {
        let mut out = IntensityTrace::zeros(self.start, self.step, self.points);
        for n in orders.start..self.elastic.len() {
            out.add_scaled(&self.elastic_trace(n), 1.0);
        }
        out
    }

    pub fn detector_trace(&self, slot: usize, inelastic: bool) -> Option<IntensityTrace> {
        self.detectors.get(slot).map(|d| self.normalized(if inelastic { &d.inelastic } else { &d.elastic }))
    }

    /// Total escaped energy per input pulse, all orders and channels.
    pub fn escaped_energy(&self) -> f64 {
        let e: f64 = self.elastic.iter().chain(&self.inelastic).map(|b| b.energy).sum();
        e / self.paths.max(1) as f64
    }

    pub fn max_order(&self) -> usize {
        self.elastic.len().max(self.inelastic.len()).saturating_sub(1)
    }
}

/// Mean and MC standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub error: f64,
}

/// Statistics of one order (or of a group of orders).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OrderStatistics {
    pub order: usize,
    pub paths: u64,
    pub energy: Estimate,
    /// Mean arrival time ∫t I dt / ∫I dt; None without escaped energy.
    pub mean_time: Option<Estimate>,
    /// Share of the total escaped energy.
    pub fraction: f64,
    /// Energy-weighted mean path length.
    pub mean_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DelayReport {
    pub paths: u64,
    pub elastic: Vec<OrderStatistics>,
    pub inelastic: Vec<OrderStatistics>,
    /// Elastic escape of orders ≥ 1.
    pub diffuse: OrderStatistics,
    /// All inelastic escape.
    pub inelastic_total: OrderStatistics,
    /// All escaped energy by the termination estimator.
    pub escaped: Estimate,
    /// All escaped energy by the expected-value estimator.
    pub expected_escape: Estimate,
    pub input_energy: f64,
    pub truncated_fraction: f64,
    pub inelastic_vertex_fraction: f64,
}

struct Sums {
    paths: u64,
    e: f64,
    e2: f64,
    m: f64,
    m2: f64,
    em: f64,
    len: f64,
}

impl Sums {
    fn of<'a>(bins: impl Iterator<Item = &'a OrderBin>) -> Sums {
        let mut s = Sums { paths: 0, e: 0.0, e2: 0.0, m: 0.0, m2: 0.0, em: 0.0, len: 0.0 };
        for b in bins {
            s.paths += b.paths;
            s.e += b.energy;
            s.e2 += b.energy_sq;
            s.m += b.moment;
            s.m2 += b.moment_sq;
            s.em += b.cross;
            s.len += b.length;
        }
        s
    }

    fn stats(&self, order: usize, n: u64, total: f64) -> OrderStatistics {
        let nf = n as f64;
        let mean_e = self.e / nf;
        let var = |sq: f64, mean: f64| ((sq / nf - mean * mean) / (nf - 1.0).max(1.0)).max(0.0);
        let energy = Estimate { mean: mean_e, error: var(self.e2, mean_e).sqrt() };
        let mean_time = (self.e > 0.0).then(|| {
            let tau = self.m / self.e;
            let mean_m = self.m / nf;
            let cov = ((self.em / nf - mean_e * mean_m) / (nf - 1.0).max(1.0)).max(f64::MIN);
            let v = (var(self.m2, mean_m) - 2.0 * tau * cov + tau * tau * var(self.e2, mean_e)) / (mean_e * mean_e);
            Estimate { mean: tau, error: v.max(0.0).sqrt() }
        });
        OrderStatistics {
            order,
            paths: self.paths,
            energy,
            mean_time,
            fraction: if total > 0.0 { mean_e / total } else { 0.0 },
            mean_length: (self.e > 0.0).then(|| self.len / self.e),
        }
    }
}

/// Per-order and total energies and mean delays with MC errors.
pub fn delay_statistics(acc: &OrderAccumulator) -> Result<DelayReport> {
    if acc.paths == 0 {
        return Err(Error::EmptyAccumulator);
    }
    let n = acc.paths;
    let nf = n as f64;
    let all = Sums::of(acc.elastic.iter().chain(&acc.inelastic));
    let total = all.e / nf;
    let per = |bins: &[OrderBin]| {
        bins.iter().enumerate().map(|(k, b)| Sums::of(std::iter::once(b)).stats(k, n, total)).collect::<Vec<_>>()
    };
    let escaped = all.stats(0, n, total).energy;
    let mean_x = acc.expected_escape / nf;
    let var_x = ((acc.expected_escape_sq / nf - mean_x * mean_x) / (nf - 1.0).max(1.0)).max(0.0);
    Ok(DelayReport {
        paths: n,
        elastic: per(&acc.elastic),
        inelastic: per(&acc.inelastic),
        diffuse: Sums::of(acc.elastic.iter().skip(1)).stats(1, n, total),
        inelastic_total: Sums::of(acc.inelastic.iter()).stats(1, n, total),
        escaped,
        expected_escape: Estimate { mean: mean_x, error: var_x.sqrt() },
        input_energy: acc.input_energy / nf,
        truncated_fraction: if acc.input_energy > 0.0 { acc.truncated / acc.input_energy } else { 0.0 },
        inelastic_vertex_fraction: if acc.vertices > 0 {
            acc.inelastic_vertices as f64 / acc.vertices as f64
        } else {
            0.0
        },
    })
}
