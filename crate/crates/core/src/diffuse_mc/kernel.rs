//! Frequency-tabulated scattering kernels in the circular basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::response::{Channel, ResponseModel};

/// One nonzero spherical amplitude A_pq for a (state, final) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Entry {
    pub pair: usize,
    pub p: usize,
    pub q: usize,
}

/// Pair of initial state and final state of one scattering event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pair {
    pub state: usize,
    pub final_: usize,
    pub inelastic: bool,
}

/// Scattering amplitudes and forward susceptibility on a frequency band.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub omegas: Vec<f64>,
    /// Per-unit-density χ̂_⊥ and χ̂_∥ at each frequency.
    pub chi_perp: Vec<Complex64>,
    pub chi_par: Vec<Complex64>,
    /// Number of equally populated initial states.
    pub states: usize,
    /// Ground-table index of each initial state.
    pub state_levels: Vec<usize>,
    pub pairs: Vec<Pair>,
    pub entries: Vec<Entry>,
    /// Amplitudes indexed `[band * entries.len() + entry]`.
    pub values: Vec<Complex64>,
}

impl KernelTable {
    pub fn bands(&self) -> usize {
        self.omegas.len()
    }

    pub fn value(&self, band: usize, entry: usize) -> Complex64 {
        self.values[band * self.entries.len() + entry]
    }

    pub fn band_values(&self, band: usize) -> &[Complex64] {
        let n = self.entries.len();
        &self.values[band * n..(band + 1) * n]
    }
}

/// Source of [`KernelTable`]s.
pub trait Kernel: Sync {
    fn tabulate(&self, omegas: &[f64]) -> Result<KernelTable>;
}

/// Dressed ⁸⁵Rb kernel with uniform population of the upper ground level.
#[derive(Clone, Debug)]
pub struct AtomicKernel {
    pub model: ResponseModel,
}

impl Kernel for AtomicKernel {
    fn tabulate(&self, omegas: &[f64]) -> Result<KernelTable> {
        use rayon::prelude::*;
        let model = &self.model;
        let populated = model.populated().to_vec();
        let ground = model.table().ground_levels().to_vec();
        let per_band: Vec<(Complex64, Complex64, Vec<Vec<[[Complex64; 3]; 3]>>)> = omegas
            .par_iter()
            .map(|&w| -> Result<_> {
                let chi = model.susceptibility(w)?;
                let tensors = populated.iter().map(|&m| model.spherical_tensors(w, m)).collect::<Result<Vec<_>>>()?;
                Ok((chi.chi_perp, chi.chi_par, tensors))
            })
            .collect::<Result<_>>()?;

        let mut pairs = Vec::new();
        let mut entries = Vec::new();
        for (si, &m) in populated.iter().enumerate() {
            for f in 0..ground.len() {
                let mut used = false;
                let pair_index = pairs.len();
                for p in 0..3 {
                    for q in 0..3 {
                        if per_band.iter().any(|b| b.2[si][f][p][q] != Complex64::new(0.0, 0.0)) {
                            entries.push(Entry { pair: pair_index, p, q });
                            used = true;
                        }
                    }
                }
                if used {
                    let channel = Channel::classify(&ground[m], &ground[f]);
                    pairs.push(Pair { state: si, final_: f, inelastic: !channel.is_elastic() });
                }
            }
        }
        let mut values = Vec::with_capacity(omegas.len() * entries.len());
        for band in &per_band {
            for e in &entries {
                let pair = pairs[e.pair];
                values.push(band.2[pair.state][pair.final_][e.p][e.q]);
            }
        }
        if entries.is_empty() {
            return Err(Error::Internal("kernel has no open scattering channel".into()));
        }
        Ok(KernelTable {
            omegas: omegas.to_vec(),
            chi_perp: per_band.iter().map(|b| b.0).collect(),
            chi_par: per_band.iter().map(|b| b.1).collect(),
            states: populated.len(),
            state_levels: populated.clone(),
            pairs,
            entries,
            values,
        })
    }
}

/// Frequency-independent isotropic polarizability α δ_ij with a single
/// internal state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicKernel {
    pub alpha: Complex64,
}

impl IsotropicKernel {
    /// Resonant two-level value α = (3/2)i, for which (8π/3)|α|² = 4π Im α.
    pub fn resonant() -> Self {
        IsotropicKernel { alpha: Complex64::new(0.0, 1.5) }
    }
}

impl Kernel for IsotropicKernel {
    fn tabulate(&self, omegas: &[f64]) -> Result<KernelTable> {
        let entries: Vec<Entry> = (0..3).map(|p| Entry { pair: 0, p, q: p }).collect();
        Ok(KernelTable {
            omegas: omegas.to_vec(),
            chi_perp: vec![self.alpha; omegas.len()],
            chi_par: vec![self.alpha; omegas.len()],
            states: 1,
            state_levels: vec![0],
            pairs: vec![Pair { state: 0, final_: 0, inelastic: false }],
            values: vec![self.alpha; omegas.len() * entries.len()],
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic_data::TransitionTable;
    use crate::dressed_green::ControlField;

    #[test]
    fn atomic_kernel_layout() {
        let t = TransitionTable::default();
        let k = AtomicKernel { model: ResponseModel::new(&t, ControlField::off()) };
        let table = k.tabulate(&[0.0, 0.01]).unwrap();
        assert_eq!(table.states, 7);
        assert!(table.pairs.iter().any(|p| p.inelastic));
        assert_eq!(table.state_levels.len(), 7);
        assert_eq!(table.values.len(), 2 * table.entries.len());
    }
}
