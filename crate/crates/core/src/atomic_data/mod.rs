//! ⁸⁵Rb D₂ hyperfine structure and Zeeman-resolved dipole matrix elements.
//!
//! Units: frequencies and energies in the natural linewidth γ (ħ = 1),
//! dipole elements in √(ħγƛ³), so that the total decay strength
//! Σ_{m,q} |d_{nm,q}|² of every excited sublevel equals 3/4 (the radiative
//! decay rate γ = 4|d|²/3ħƛ³ then reads γ = 1).
//!
//! Energies use a frame rotating at the F₀=3 → F=4 optical frequency:
//! excited levels are measured from F=4, ground levels are offset by ħω₄₃,
//! which puts F₀=3 at 0 and F₀=2 at −Δ_g. A signal photon at detuning
//! Δ = ω − ω₄₃ absorbed from ground level m therefore probes the excited
//! manifold at E = Δ + E_m.
//!
//! Default hyperfine splittings are the tabulated ⁸⁵Rb D₂ values
//! (D. A. Steck, "Rubidium 85 D Line Data", rev. 2.3), converted with
//! γ/2π = 6.0666 MHz. They can be replaced from a TOML table, see
//! [`HyperfineData::from_toml_str`].

pub mod angular;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use angular::{wigner_3j, wigner_6j, Half};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manifold {
    Ground,
    Excited,
}

/// One Zeeman sublevel |F, M⟩ of the ground or excited manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelId {
    pub manifold: Manifold,
    pub f: Half,
    pub m: Half,
}

impl LevelId {
    pub fn new(manifold: Manifold, f: Half, m: Half) -> Result<Self> {
        if m.abs() > f || (f - m).twice() % 2 != 0 {
            return Err(Error::InvalidLevel(format!("|M| = {} exceeds F = {}", m.abs(), f)));
        }
        Ok(LevelId { manifold, f, m })
    }

    pub fn ground(f: i32, m: i32) -> Result<Self> {
        Self::new(Manifold::Ground, Half::int(f), Half::int(m))
    }

    pub fn excited(f: i32, m: i32) -> Result<Self> {
        Self::new(Manifold::Excited, Half::int(f), Half::int(m))
    }
}

impl fmt::Display for LevelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.manifold {
            Manifold::Ground => "g",
            Manifold::Excited => "e",
        };
        write!(f, "{tag}(F={}, M={})", self.f, self.m)
    }
}

/// Hyperfine splittings in units of γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperfineData {
    /// Natural linewidth γ/2π in MHz; only used to document the conversion.
    pub linewidth_mhz: f64,
    /// F=4 − F=3 excited splitting.
    pub excited_4_3: f64,
    /// F=3 − F=2 excited splitting.
    pub excited_3_2: f64,
    /// F=2 − F=1 excited splitting.
    pub excited_2_1: f64,
    /// F₀=3 − F₀=2 ground splitting.
    pub ground: f64,
}

impl Default for HyperfineData {
    fn default() -> Self {
        const LINEWIDTH_MHZ: f64 = 6.0666;
        HyperfineData {
            linewidth_mhz: LINEWIDTH_MHZ,
            excited_4_3: 120.640 / LINEWIDTH_MHZ,
            excited_3_2: 63.401 / LINEWIDTH_MHZ,
            excited_2_1: 29.372 / LINEWIDTH_MHZ,
            ground: 3035.732_439 / LINEWIDTH_MHZ,
        }
    }
}

impl HyperfineData {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let data: HyperfineData = toml::from_str(text).map_err(|e| Error::Table(e.to_string()))?;
        data.validate()?;
        Ok(data)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Table(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("excited_4_3", self.excited_4_3),
            ("excited_3_2", self.excited_3_2),
            ("excited_2_1", self.excited_2_1),
            ("ground", self.ground),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Table(format!("splitting `{name}` must be positive, got {v}")));
            }
        }
        if !(self.ground > self.excited_4_3
            && self.excited_4_3 > self.excited_3_2
            && self.excited_3_2 > self.excited_2_1)
        {
            return Err(Error::Table("splittings must be ordered Δ_g > Δ₄₃ > Δ₃₂ > Δ₂₁".into()));
        }
        Ok(())
    }
}

/// Immutable level table with all dipole and control couplings.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    splittings: HyperfineData,
    nuclear_spin: Half,
    ground: Vec<LevelId>,
    excited: Vec<LevelId>,
    ground_energy: Vec<f64>,
    excited_energy: Vec<f64>,
    index: HashMap<LevelId, usize>,
    // [excited][ground][q + 1]
    dipole: Vec<f64>,
}

impl Default for TransitionTable {
    fn default() -> Self {
        Self::rb85(HyperfineData::default()).expect("compiled-in table is valid")
    }
}

impl TransitionTable {
    /// ⁸⁵Rb D₂ line: I = 5/2, 5S₁/₂ → 5P₃/₂.
    pub fn rb85(splittings: HyperfineData) -> Result<Self> {
        splittings.validate()?;
        let nuclear_spin = Half::halves(5);
        let jg = Half::halves(1);
        let je = Half::halves(3);

        let mut ground = Vec::new();
        let mut ground_energy = Vec::new();
        for f in [3, 2] {
            let e = if f == 3 { 0.0 } else { -splittings.ground };
            for m in Half::int(f).projections() {
                ground.push(LevelId::new(Manifold::Ground, Half::int(f), m)?);
                ground_energy.push(e);
            }
        }
        let mut excited = Vec::new();
        let mut excited_energy = Vec::new();
        let e3 = -splittings.excited_4_3;
        let e2 = e3 - splittings.excited_3_2;
        let e1 = e2 - splittings.excited_2_1;
        for (f, e) in [(4, 0.0), (3, e3), (2, e2), (1, e1)] {
            for m in Half::int(f).projections() {
                excited.push(LevelId::new(Manifold::Excited, Half::int(f), m)?);
                excited_energy.push(e);
            }
        }

        let mut index = HashMap::new();
        for (i, l) in ground.iter().enumerate() {
            index.insert(*l, i);
        }
        for (i, l) in excited.iter().enumerate() {
            index.insert(*l, i);
        }

        // |<J||d||J0>|² = (3/4)(2J+1) fixes Σ_{m,q}|d|² = 3/4 per excited sublevel
        let reduced_fine = (0.75 * f64::from(je.multiplicity())).sqrt();
        let mut dipole = vec![0.0; excited.len() * ground.len() * 3];
        for (ni, n) in excited.iter().enumerate() {
            for (mi, m) in ground.iter().enumerate() {
                for q in -1..=1 {
                    let value = hyperfine_dipole(n, m, q, nuclear_spin, jg, je, reduced_fine);
                    dipole[(ni * ground.len() + mi) * 3 + (q + 1) as usize] = value;
                }
            }
        }

        Ok(TransitionTable {
            splittings,
            nuclear_spin,
            ground,
            excited,
            ground_energy,
            excited_energy,
            index,
            dipole,
        })
    }

    pub fn splittings(&self) -> &HyperfineData {
        &self.splittings
    }

    pub fn nuclear_spin(&self) -> Half {
        self.nuclear_spin
    }

    pub fn ground_levels(&self) -> &[LevelId] {
        &self.ground
    }

    pub fn excited_levels(&self) -> &[LevelId] {
        &self.excited
    }

    /// The optically populated manifold F₀ = I + 1/2.
    pub fn upper_ground_f(&self) -> Half {
        self.nuclear_spin + Half::halves(1)
    }

    /// The control-coupled manifold F₀ = I − 1/2.
    pub fn lower_ground_f(&self) -> Half {
        self.nuclear_spin - Half::halves(1)
    }

    /// F = I + 3/2, not dressed by the control.
    pub fn top_excited_f(&self) -> Half {
        self.nuclear_spin + Half::halves(3)
    }

    pub fn index_of(&self, level: &LevelId) -> Result<usize> {
        self.index
            .get(level)
            .copied()
            .ok_or_else(|| Error::InvalidLevel(format!("{level} is not a ⁸⁵Rb D₂ sublevel")))
    }

    pub fn energy(&self, level: &LevelId) -> Result<f64> {
        let i = self.index_of(level)?;
        Ok(match level.manifold {
            Manifold::Ground => self.ground_energy[i],
            Manifold::Excited => self.excited_energy[i],
        })
    }

    pub fn ground_energy(&self, index: usize) -> f64 {
        self.ground_energy[index]
    }

    pub fn excited_energy(&self, index: usize) -> f64 {
        self.excited_energy[index]
    }

    /// F₀=3 → F=4 transition frequency ω₄₃ in the rotating frame (zero).
    pub fn omega_43(&self) -> f64 {
        0.0
    }

    /// F₀=2 → F=4 transition frequency ω₄₂ in the rotating frame.
    pub fn omega_42(&self) -> f64 {
        self.splittings.ground
    }

    /// Spherical component ⟨n|d_q|m⟩ by table index.
    pub fn dipole_by_index(&self, excited: usize, ground: usize, q: i32) -> f64 {
        debug_assert!((-1..=1).contains(&q));
        self.dipole[(excited * self.ground.len() + ground) * 3 + (q + 1) as usize]
    }

    /// ⟨n|d_q|m⟩ for excited `n`, ground `m` and q ∈ {−1, 0, +1}.
    pub fn dipole_matrix_element(&self, n: &LevelId, m: &LevelId, q: i32) -> Result<f64> {
        if n.manifold != Manifold::Excited || m.manifold != Manifold::Ground {
            return Err(Error::InvalidLevel(format!("dipole element needs excited {n} and ground {m}")));
        }
        if !(-1..=1).contains(&q) {
            return Err(Error::InvalidLevel(format!("polarization index q = {q}")));
        }
        Ok(self.dipole_by_index(self.index_of(n)?, self.index_of(m)?, q))
    }

    /// Control matrix element V_{nm'} for a π-polarized control with Rabi
    /// frequency `rabi` on the reference transition
    /// |F₀=2, M₀=2⟩ → |F=3, M=2⟩ (Ω_c = 2|V| there).
    pub fn control_coupling(&self, n: &LevelId, rabi: f64) -> Complex64 {
        let Ok(ni) = self.index_of(n) else {
            return Complex64::new(0.0, 0.0);
        };
        match self.control_partner(n) {
            Some(mi) => Complex64::new(0.5 * rabi * self.dipole_by_index(ni, mi, 0) / self.reference_control_dipole(), 0.0),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Index of the lower-ground partner |F₀=2, M₀=M⟩ of excited `n`, if any.
    pub fn control_partner(&self, n: &LevelId) -> Option<usize> {
        if n.manifold != Manifold::Excited {
            return None;
        }
        let partner = LevelId::new(Manifold::Ground, self.lower_ground_f(), n.m).ok()?;
        self.index.get(&partner).copied()
    }

    fn reference_control_dipole(&self) -> f64 {
        let n = LevelId::new(Manifold::Excited, self.upper_ground_f(), Half::int(2)).expect("valid");
        let m = LevelId::new(Manifold::Ground, self.lower_ground_f(), Half::int(2)).expect("valid");
        self.dipole_matrix_element(&n, &m, 0).expect("valid").abs()
    }
}

/// Wigner–Eckart factorization through the fine-structure reduced element.
fn hyperfine_dipole(
    n: &LevelId,
    m: &LevelId,
    q: i32,
    i: Half,
    jg: Half,
    je: Half,
    reduced_fine: f64,
) -> f64 {
    let one = Half::int(1);
    let (f, mf) = (n.f, n.m);
    let (f0, m0) = (m.f, m.m);
    let three_j = angular::wigner_3j(f, one, f0, -mf, Half::int(q), m0);
    if three_j == 0.0 {
        return 0.0;
    }
    let six_j = angular::wigner_6j(je, f, i, f0, jg, one);
    if six_j == 0.0 {
        return 0.0;
    }
    let phase_we = sign_of((f - mf).twice() / 2);
    let phase_red = sign_of((f0 + je + one + i).twice() / 2);
    let reduced_hf = phase_red
        * (f64::from(f.multiplicity()) * f64::from(f0.multiplicity())).sqrt()
        * six_j
        * reduced_fine;
    phase_we * three_j * reduced_hf
}

fn sign_of(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> TransitionTable {
        TransitionTable::default()
    }

    #[test]
    fn default_splittings_in_linewidths() {
        let s = HyperfineData::default();
        assert_relative_eq!(s.excited_4_3, 19.886, epsilon = 0.01);
        assert_relative_eq!(s.excited_3_2, 10.451, epsilon = 0.01);
        assert_relative_eq!(s.excited_2_1, 4.842, epsilon = 0.01);
        assert_relative_eq!(s.ground, 500.4, epsilon = 0.1);
    }

    #[test]
    fn level_counts_and_energies() {
        let t = table();
        assert_eq!(t.ground_levels().len(), 12);
        assert_eq!(t.excited_levels().len(), 24);
        assert_eq!(t.energy(&LevelId::excited(4, 1).unwrap()).unwrap(), 0.0);
        let e3 = t.energy(&LevelId::excited(3, 0).unwrap()).unwrap();
        assert_relative_eq!(e3, -t.splittings().excited_4_3);
        assert_eq!(t.energy(&LevelId::ground(3, -2).unwrap()).unwrap(), 0.0);
        assert_relative_eq!(t.energy(&LevelId::ground(2, 0).unwrap()).unwrap(), -t.splittings().ground);
        assert_relative_eq!(t.omega_42() - t.omega_43(), t.splittings().ground);
    }

    #[test]
    fn invalid_levels_rejected() {
        assert!(LevelId::ground(2, 3).is_err());
        let t = table();
        assert!(t.index_of(&LevelId::excited(5, 0).unwrap()).is_err());
        let n = LevelId::excited(4, 4).unwrap();
        assert!(t.dipole_matrix_element(&n, &n, 0).is_err());
    }

    #[test]
    fn cycling_transition_is_closed() {
        let t = table();
        let m = LevelId::ground(3, 3).unwrap();
        for n in t.excited_levels() {
            let d = t.dipole_matrix_element(n, &m, 1).unwrap();
            if *n == LevelId::excited(4, 4).unwrap() {
                // stretched state carries the entire decay strength 3/4
                assert_relative_eq!(d * d, 0.75, max_relative = 1e-13);
            } else {
                assert_eq!(d, 0.0, "{n}");
            }
        }
    }

    #[test]
    fn delta_f_two_forbidden() {
        let t = table();
        for m in t.ground_levels().iter().filter(|m| m.f == Half::int(3)) {
            for n in t.excited_levels().iter().filter(|n| n.f == Half::int(1)) {
                for q in -1..=1 {
                    assert_eq!(t.dipole_matrix_element(n, m, q).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn control_coupling_reference_and_zeros() {
        let t = table();
        let v = t.control_coupling(&LevelId::excited(3, 2).unwrap(), 3.0);
        assert_relative_eq!(v.norm(), 1.5, max_relative = 1e-13);
        assert!(v.re > 0.0);
        assert_eq!(t.control_coupling(&LevelId::excited(3, 3).unwrap(), 3.0).norm(), 0.0);
        for m in -4..=4 {
            assert_eq!(t.control_coupling(&LevelId::excited(4, m).unwrap(), 3.0).norm(), 0.0);
        }
        assert!(t.control_coupling(&LevelId::excited(1, 0).unwrap(), 3.0).norm() > 0.0);
    }

    #[test]
    fn table_from_toml() {
        let text = "linewidth_mhz = 6.0\nexcited_4_3 = 20.0\nexcited_3_2 = 10.0\nexcited_2_1 = 5.0\nground = 500.0\n";
        let data = HyperfineData::from_toml_str(text).unwrap();
        assert_eq!(data.excited_4_3, 20.0);
        let t = TransitionTable::rb85(data).unwrap();
        assert_relative_eq!(t.energy(&LevelId::excited(1, 0).unwrap()).unwrap(), -35.0);
        assert!(HyperfineData::from_toml_str("excited_4_3 = 1.0").is_err());
        let bad = text.replace("ground = 500.0", "ground = 5.0");
        assert!(HyperfineData::from_toml_str(&bad).is_err());
    }
}
