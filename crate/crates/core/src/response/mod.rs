//! Mesoscopic susceptibility tensor and single-atom scattering tensor.
//!
//! Both quantities come from one contraction of dipole elements with the
//! excited-state propagator,
//!
//! ```text
//! A_pq^(m''m)(ω) = − Σ_nn' ⟨n|d_p|m''⟩ G_nn'(ω + E_m + iε) ⟨n'|d_q|m⟩,
//! ```
//!
//! where the forward elastic part (m'' = m) averaged over the populated
//! sublevels is the susceptibility per unit density n₀ƛ³.
//! Lengths are in ƛ = c/ω, so k = 1 and the polarizability is also the
//! scattering amplitude f = k²α.

pub mod fit;
pub mod polarization;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::atomic_data::{LevelId, Manifold, TransitionTable};
use crate::dressed_green::{ControlField, DressedGreen, Propagator, DEFAULT_EPSILON};
use crate::error::{Error, Result};
pub use polarization::{inner, real_vector, CMatrix3, CVector3, PolarizationBasis};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Principal components of the susceptibility in the frame with Z along
/// the control polarization.
#[derive(Clone, Copy, Debug)]
pub struct SusceptibilityTensor {
    /// Signal detuning Δ = ω − ω₄₃ in γ.
    pub detuning: f64,
    /// χ_XX = χ_YY.
    pub chi_perp: Complex64,
    /// χ_ZZ.
    pub chi_par: Complex64,
    /// Full Cartesian tensor; diagonal up to rounding.
    pub cartesian: CMatrix3,
}

impl SusceptibilityTensor {
    pub fn scaled(&self, density: f64) -> Self {
        SusceptibilityTensor {
            detuning: self.detuning,
            chi_perp: self.chi_perp * density,
            chi_par: self.chi_par * density,
            cartesian: self.cartesian * Complex64::new(density, 0.0),
        }
    }

    /// Effective susceptibility seen by a real unit polarization vector.
    pub fn along(&self, pol: [f64; 3]) -> Complex64 {
        let perp2 = pol[0] * pol[0] + pol[1] * pol[1];
        self.chi_perp * perp2 + self.chi_par * pol[2] * pol[2]
    }
}

/// Isotropic part χ₀ (control off) and the control-induced remainder.
#[derive(Clone, Copy, Debug)]
pub struct AtDecomposition {
    pub chi0: Complex64,
    /// Diagonal of χ^(AT) = χ − χ₀·1 in the major frame (XX, YY, ZZ).
    pub at: [Complex64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// m'' = m.
    RayleighElastic,
    /// m'' ≠ m inside the same ground hyperfine level.
    RamanElastic,
    /// m'' in the other ground hyperfine level.
    RamanInelastic,
}

impl Channel {
    pub fn classify(initial: &LevelId, final_: &LevelId) -> Channel {
        if initial == final_ {
            Channel::RayleighElastic
        } else if initial.f == final_.f {
            Channel::RamanElastic
        } else {
            Channel::RamanInelastic
        }
    }

    pub fn is_elastic(self) -> bool {
        !matches!(self, Channel::RamanInelastic)
    }
}

/// One spherical component α_pq^(m''m) of the scattering tensor.
#[derive(Clone, Copy, Debug)]
pub struct ScatteringAmplitude {
    pub initial: LevelId,
    pub final_: LevelId,
    pub in_pol: i32,
    pub out_pol: i32,
    pub amplitude: Complex64,
    pub channel: Channel,
    /// (E_m − E_m'')/ħ in γ: frequency gained by the scattered photon.
    pub out_frequency_shift: f64,
}

/// Cartesian scattering tensor toward one final sublevel.
#[derive(Clone, Debug)]
pub struct FinalChannel {
    /// Ground-table index of m''.
    pub final_index: usize,
    pub channel: Channel,
    pub out_frequency_shift: f64,
    pub tensor: CMatrix3,
}

/// Linear response of the dressed ⁸⁵Rb ensemble.
#[derive(Clone, Debug)]
pub struct ResponseModel {
    table: TransitionTable,
    green: DressedGreen,
    reference: DressedGreen,
    epsilon: f64,
    populated: Vec<usize>,
}

impl ResponseModel {
    pub fn new(table: &TransitionTable, control: ControlField) -> Self {
        let upper = table.upper_ground_f();
        let populated = table
            .ground_levels()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.f == upper)
            .map(|(i, _)| i)
            .collect();
        ResponseModel {
            table: table.clone(),
            green: DressedGreen::new(table, control),
            reference: DressedGreen::new(table, ControlField::off()),
            epsilon: DEFAULT_EPSILON,
            populated,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }

    pub fn control(&self) -> ControlField {
        self.green.control()
    }

    /// Same ensemble with the control switched off.
    pub fn control_off(&self) -> ResponseModel {
        let mut m = self.clone();
        m.green = m.reference.clone();
        m
    }

    /// Ground-table indices of the equally populated sublevels.
    pub fn populated(&self) -> &[usize] {
        &self.populated
    }

    fn propagator(&self, green: &DressedGreen, detuning: f64, ground: usize) -> Result<Propagator> {
        let e = Complex64::new(detuning + self.table.ground_energy(ground), self.epsilon);
        green.propagator(e)
    }

    /// Spherical amplitudes e_p*·α^(m''m)·e_q for every final sublevel,
    /// indexed `[final][p + 1][q + 1]`.
    fn spherical_with(&self, prop: &Propagator, initial: usize) -> Vec<[[Complex64; 3]; 3]> {
        let t = &self.table;
        let n_exc = t.excited_levels().len();
        let n_gnd = t.ground_levels().len();
        // u_n(q) = Σ_n' G_nn' ⟨n'|d_q|m⟩
        let mut u = vec![[ZERO; 3]; n_exc];
        for (n, un) in u.iter_mut().enumerate() {
            for np in 0..n_exc {
                let g = prop.element(n, np);
                if g == ZERO {
                    continue;
                }
                for q in 0..3 {
                    let d = t.dipole_by_index(np, initial, q as i32 - 1);
                    if d != 0.0 {
                        un[q] += g * d;
                    }
                }
            }
        }
        let mut out = vec![[[ZERO; 3]; 3]; n_gnd];
        for (mf, a) in out.iter_mut().enumerate() {
            for (n, un) in u.iter().enumerate() {
                for p in 0..3 {
                    let d = t.dipole_by_index(n, mf, p as i32 - 1);
                    if d == 0.0 {
                        continue;
                    }
                    for q in 0..3 {
                        a[p][q] -= d * un[q];
                    }
                }
            }
        }
        out
    }

    fn susceptibility_with(&self, green: &DressedGreen, detuning: f64) -> Result<SusceptibilityTensor> {
        let mut acc = [[ZERO; 3]; 3];
        let mut cached: Option<(f64, Propagator)> = None;
        for &m in &self.populated {
            let em = self.table.ground_energy(m);
            let prop = match &cached {
                Some((e, p)) if *e == em => p.clone(),
                _ => {
                    let p = self.propagator(green, detuning, m)?;
                    cached = Some((em, p.clone()));
                    p
                }
            };
            let a = &self.spherical_with(&prop, m)[m];
            for p in 0..3 {
                for q in 0..3 {
                    acc[p][q] += a[p][q];
                }
            }
        }
        let norm = 1.0 / self.populated.len() as f64;
        for row in acc.iter_mut() {
            for v in row.iter_mut() {
                *v *= norm;
            }
        }
        let cartesian = PolarizationBasis::tensor_from_spherical(&acc);
        Ok(SusceptibilityTensor {
            detuning,
            chi_perp: cartesian[(0, 0)],
            chi_par: cartesian[(2, 2)],
            cartesian,
        })
    }

    /// Susceptibility per unit density (units n₀ƛ³) at detuning Δ.
    pub fn susceptibility(&self, detuning: f64) -> Result<SusceptibilityTensor> {
        self.susceptibility_with(&self.green, detuning)
    }

    /// χ₀ from the undressed ensemble and χ^(AT) = χ − χ₀.
    pub fn at_decomposition(&self, detuning: f64) -> Result<AtDecomposition> {
        let full = self.susceptibility(detuning)?;
        let iso = self.susceptibility_with(&self.reference, detuning)?;
        let chi0 = iso.chi_perp;
        Ok(AtDecomposition {
            chi0,
            at: [full.cartesian[(0, 0)] - chi0, full.cartesian[(1, 1)] - chi0, full.cartesian[(2, 2)] - chi0],
        })
    }

    /// Cartesian tensors α^(m''m) for every final sublevel reachable from
    /// populated sublevel `initial` (ground-table index).
    pub fn final_channels(&self, detuning: f64, initial: usize) -> Result<Vec<FinalChannel>> {
        let prop = self.propagator(&self.green, detuning, initial)?;
        let spherical = self.spherical_with(&prop, initial);
        let t = &self.table;
        let init = t.ground_levels()[initial];
        let mut out = Vec::new();
        for (mf, a) in spherical.iter().enumerate() {
            if a.iter().flatten().all(|v| *v == ZERO) {
                continue;
            }
            let fin = t.ground_levels()[mf];
            out.push(FinalChannel {
                final_index: mf,
                channel: Channel::classify(&init, &fin),
                out_frequency_shift: t.ground_energy(initial) - t.ground_energy(mf),
                tensor: PolarizationBasis::tensor_from_spherical(a),
            });
        }
        Ok(out)
    }

    /// Spherical components `[final][p + 1][q + 1]` out of ground-table
    /// index `initial`.
    pub fn spherical_tensors(&self, detuning: f64, initial: usize) -> Result<Vec<[[Complex64; 3]; 3]>> {
        let prop = self.propagator(&self.green, detuning, initial)?;
        Ok(self.spherical_with(&prop, initial))
    }

    /// Nonzero spherical amplitudes α_pq^(m''m)(ω) out of ground sublevel `m`.
    pub fn scattering_tensor(&self, detuning: f64, m: &LevelId) -> Result<Vec<ScatteringAmplitude>> {
        if m.manifold != Manifold::Ground || m.f != self.table.upper_ground_f() {
            return Err(Error::InvalidLevel(format!("{m} is not a populated sublevel")));
        }
        let initial = self.table.index_of(m)?;
        let prop = self.propagator(&self.green, detuning, initial)?;
        let spherical = self.spherical_with(&prop, initial);
        let mut out = Vec::new();
        for (mf, a) in spherical.iter().enumerate() {
            let fin = self.table.ground_levels()[mf];
            for p in 0..3 {
                for q in 0..3 {
                    if a[p][q] == ZERO {
                        continue;
                    }
                    out.push(ScatteringAmplitude {
                        initial: *m,
                        final_: fin,
                        in_pol: q as i32 - 1,
                        out_pol: p as i32 - 1,
                        amplitude: a[p][q],
                        channel: Channel::classify(m, &fin),
                        out_frequency_shift: self.table.ground_energy(initial)
                            - self.table.ground_energy(mf),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Per-atom extinction cross section σ₀ = 4π Im χ at the F₀=3 → F=4
    /// line center with the control off, in ƛ².
    pub fn resonant_cross_section(&self) -> Result<f64> {
        let chi = self.susceptibility_with(&self.reference, self.table.omega_43())?;
        Ok(4.0 * PI * chi.chi_perp.im)
    }
}

/// Cartesian tensor α^(m''m) assembled from a set of spherical amplitudes
/// sharing one final state.
pub fn tensor_of(amplitudes: &[ScatteringAmplitude]) -> CMatrix3 {
    let mut a = [[ZERO; 3]; 3];
    for amp in amplitudes {
        a[(amp.out_pol + 1) as usize][(amp.in_pol + 1) as usize] += amp.amplitude;
    }
    PolarizationBasis::tensor_from_spherical(&a)
}

fn check_transverse(dir: &[f64; 3], pol: &CVector3, what: &str) -> Result<()> {
    let k = real_vector(dir[0], dir[1], dir[2]);
    let norm_dir = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if (norm_dir - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("{what} direction is not unit length")));
    }
    let norm_pol = pol.norm();
    if (norm_pol - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("{what} polarization is not unit length")));
    }
    if inner(&k, pol).norm() > 1e-9 {
        return Err(Error::Contract(format!("{what} polarization is not transverse to its direction")));
    }
    Ok(())
}

/// dσ/dΩ = Σ_m'' |e'*·α^(m''m)·e|² in ƛ²/sr, summed over the final
/// sublevels present in `amplitudes` (one initial sublevel).
pub fn differential_cross_section(
    amplitudes: &[ScatteringAmplitude],
    in_dir: [f64; 3],
    out_dir: [f64; 3],
    in_pol: &CVector3,
    out_pol: &CVector3,
) -> Result<f64> {
    check_transverse(&in_dir, in_pol, "incident")?;
    check_transverse(&out_dir, out_pol, "outgoing")?;
    let mut finals: Vec<LevelId> = amplitudes.iter().map(|a| a.final_).collect();
    finals.sort();
    finals.dedup();
    let mut total = 0.0;
    for f in finals {
        let group: Vec<ScatteringAmplitude> = amplitudes.iter().filter(|a| a.final_ == f).copied().collect();
        let t = tensor_of(&group);
        total += inner(out_pol, &(t * in_pol)).norm_sqr();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model_off() -> ResponseModel {
        ResponseModel::new(&TransitionTable::default(), ControlField::off())
    }

    #[test]
    fn far_detuned_response_decays() {
        let m = model_off();
        let a = m.susceptibility(50.0).unwrap().chi_perp.norm();
        let b = m.susceptibility(200.0).unwrap().chi_perp.norm();
        assert!(a < 1e-2);
        assert!(b < a);
    }

    #[test]
    fn closed_line_peak_height() {
        let m = model_off();
        let chi = m.susceptibility(0.0).unwrap();
        // F=4 contribution alone is 9/14; the F=3, 2 tails add < 1e-3
        assert_relative_eq!(chi.chi_perp.im, 9.0 / 14.0, max_relative = 2e-3);
        assert_relative_eq!(chi.chi_par.im, chi.chi_perp.im, max_relative = 1e-12);
    }

    #[test]
    fn tensor_is_diagonal_in_major_frame() {
        let t = TransitionTable::default();
        let m = ResponseModel::new(&t, ControlField::from_omega_42(&t, 3.0, -0.4));
        for d in [-0.2, 0.0, 0.025, 0.3, -19.0] {
            let chi = m.susceptibility(d).unwrap();
            let c = chi.cartesian;
            for r in 0..3 {
                for s in 0..3 {
                    if r != s {
                        assert!(c[(r, s)].norm() < 1e-12 * c[(0, 0)].norm());
                    }
                }
            }
            assert!((c[(0, 0)] - c[(1, 1)]).norm() < 1e-12 * c[(0, 0)].norm());
            assert!(chi.chi_perp.im >= 0.0 && chi.chi_par.im >= 0.0);
        }
    }

    #[test]
    fn control_off_has_no_at_part() {
        let m = model_off();
        for d in [-30.0, -19.9, -1.0, 0.0, 0.5] {
            let dec = m.at_decomposition(d).unwrap();
            for v in dec.at {
                assert!(v.norm() < 1e-14 * dec.chi0.norm());
            }
        }
    }

    #[test]
    fn stretched_state_single_channel() {
        let m = model_off();
        let s = LevelId::ground(3, 3).unwrap();
        let amps: Vec<_> = m.scattering_tensor(0.0, &s).unwrap().into_iter().filter(|a| a.in_pol == 1).collect();
        assert_eq!(amps.len(), 1);
        assert_eq!(amps[0].final_, s);
        assert_eq!(amps[0].out_pol, 1);
        assert_eq!(amps[0].channel, Channel::RayleighElastic);
        // two-level resonant amplitude 2i|d|² with |d|² = 3/4
        assert_relative_eq!(amps[0].amplitude.im, 1.5, max_relative = 1e-7);
        assert!(amps[0].amplitude.re.abs() < 1e-12);
    }

    #[test]
    fn channel_classification_and_shift() {
        let m = model_off();
        let s = LevelId::ground(3, 0).unwrap();
        for a in m.scattering_tensor(-5.0, &s).unwrap() {
            match a.channel {
                Channel::RayleighElastic => assert_eq!(a.final_, s),
                Channel::RamanElastic => {
                    assert_eq!(a.final_.f, s.f);
                    assert_ne!(a.final_, s);
                    assert_eq!(a.out_frequency_shift, 0.0);
                }
                Channel::RamanInelastic => {
                    assert_ne!(a.final_.f, s.f);
                    assert_relative_eq!(a.out_frequency_shift, m.table().splittings().ground);
                }
            }
        }
        assert!(m.scattering_tensor(0.0, &LevelId::ground(2, 0).unwrap()).is_err());
    }

    #[test]
    fn forward_circular_and_transversality() {
        let m = model_off();
        let s = LevelId::ground(3, 3).unwrap();
        let amps = m.scattering_tensor(0.0, &s).unwrap();
        let e_in = PolarizationBasis::spherical(1);
        let forward = differential_cross_section(&amps, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], &e_in, &e_in).unwrap();
        assert_relative_eq!(forward, 2.25, max_relative = 1e-7);
        let x = real_vector(1.0, 0.0, 0.0);
        let bad = differential_cross_section(&amps, [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], &x, &x);
        assert!(matches!(bad, Err(Error::Contract(_))));
    }
}
