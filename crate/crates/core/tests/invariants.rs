use lightstore::atomic_data::TransitionTable;
use lightstore::diffuse_mc::{delay_statistics, run_diffusion, IsotropicKernel, McConfig, Scene, UniformSlab};
use lightstore::dressed_green::ControlField;
use lightstore::medium::{transfer_function, CloudConfig, Ray};
use lightstore::memory_channel::{self as mem, ChannelState, WernerState};
use lightstore::pulse_transport::{FftGrid, PulseConfig};
use lightstore::response::{CMatrix3, CVector3, ResponseModel};
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

fn model(rabi: f64, offset: f64) -> ResponseModel {
    let t = TransitionTable::default();
    let control = if rabi == 0.0 { ControlField::off() } else { ControlField::from_omega_42(&t, rabi, offset) };
    ResponseModel::new(&t, control)
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// e† (χ − χ†)/2i e, the absorbed power for polarization e.
fn absorption(chi: &CMatrix3, e: &CVector3) -> f64 {
    let anti = (chi - chi.adjoint()) * Complex64::new(0.0, -0.5);
    (e.adjoint() * anti * e)[(0, 0)].re
}

#[test]
fn dipole_selection_rules_and_sum_rule() {
    let t = TransitionTable::default();
    let mut totals = Vec::new();
    for (ground, g) in t.ground_levels().iter().enumerate() {
        let mut total = 0.0;
        for (excited, e) in t.excited_levels().iter().enumerate() {
            for q in -1..=1 {
                let d = t.dipole_by_index(excited, ground, q);
                if d != 0.0 {
                    assert_eq!((e.m - g.m).twice(), 2 * q, "{e} <- {g} via q = {q}");
                    assert!((e.f - g.f).abs().twice() <= 2);
                }
                total += d * d;
            }
        }
        totals.push((g.f, total));
    }
    for (f, total) in &totals {
        let (_, reference) = totals.iter().find(|(g, _)| g == f).unwrap();
        assert!((total - reference).abs() <= 1e-12 * reference, "F0 = {f}: {total} vs {reference}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn susceptibility_is_passive(
        detuning in -60.0f64..60.0,
        rabi in 0.0f64..6.0,
        offset in -2.0f64..2.0,
        re in prop::array::uniform3(-1.0f64..1.0),
        im in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let chi = model(rabi, offset).susceptibility(detuning).unwrap();
        let e = CVector3::new(
            Complex64::new(re[0], im[0]),
            Complex64::new(re[1], im[1]),
            Complex64::new(re[2], im[2]),
        );
        let scale = chi.cartesian.norm() * e.norm_squared();
        prop_assert!(absorption(&chi.cartesian, &e) >= -1e-12 * scale);
    }

    #[test]
    fn tensor_rotation_round_trips(
        detuning in -30.0f64..5.0,
        axis in (0.0f64..std::f64::consts::PI, 0.0f64..6.283),
        angle in -3.0f64..3.0,
    ) {
        let chi = model(3.0, -0.4).susceptibility(detuning).unwrap().cartesian;
        let a = unit(axis.0, axis.1);
        let r: Matrix3<f64> = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(a[0], a[1], a[2])), angle).into();
        let rc: CMatrix3 = r.map(|x| Complex64::new(x, 0.0));
        let back = rc.transpose() * (rc * chi * rc.transpose()) * rc;
        prop_assert!((back - chi).norm() <= 1e-12 * chi.norm());
    }

    #[test]
    fn control_induced_part_vanishes_with_the_control(detuning in prop_oneof![-15.0f64..-5.0, 2.0f64..20.0]) {
        let norms: Vec<f64> = [0.0, 0.01, 0.02, 0.04]
            .iter()
            .map(|rabi| {
                let at = model(*rabi, -0.4).at_decomposition(detuning).unwrap().at;
                at.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
            })
            .collect();
        prop_assert!(norms[0] <= 1e-14, "{norms:?}");
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1]), "{norms:?}");
    }

    #[test]
    fn transfer_is_passive(
        detuning in -40.0f64..10.0,
        rabi in 0.0f64..6.0,
        start in prop::array::uniform3(-3000.0f64..3000.0),
        dir in (0.0f64..std::f64::consts::PI, 0.0f64..6.283),
    ) {
        let m = model(rabi, -0.4);
        let cloud = CloudConfig::from_b0(10.0, 2000.0, m.resonant_cross_section().unwrap()).unwrap();
        let chi = m.susceptibility(detuning).unwrap();
        let ray = Ray::to_infinity(start, unit(dir.0, dir.1));
        let tf = &transfer_function(&cloud, &ray, &[chi])[0];
        prop_assert!(tf.ordinary.norm() <= 1.0 + 1e-12);
        prop_assert!(tf.extraordinary.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn photon_numbers_are_a_decaying_distribution(eta in 0.0f64..=1.0, nbar in 0.0f64..8.0) {
        let ch = ChannelState::new(eta, nbar).unwrap();
        let p = mem::photon_number_distribution(&ch, 80).unwrap().probabilities;
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        let start = (nbar + 1.0).floor() as usize + 1;
        for n in start..p.len() - 1 {
            prop_assert!(p[n + 1] <= p[n] * (1.0 + 1e-12), "P({}) = {} > P({n}) = {}", n + 1, p[n + 1], p[n]);
        }
    }

    #[test]
    fn fidelity_is_affine(x in 0.0f64..=1.0, y in 0.0f64..=1.0, t in 0.0f64..6.283) {
        let psi = [Complex64::new(t.cos(), 0.0), Complex64::new(0.0, t.sin())];
        let f = |x: f64| mem::werner_fidelity(&WernerState::new(x, psi).unwrap());
        prop_assert!((f(x) - (0.5 + 0.5 * x)).abs() < 1e-15);
        prop_assert!((f(0.5 * (x + y)) - 0.5 * (f(x) + f(y))).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn diffusion_never_creates_energy(seed in any::<u64>(), re in -1.0f64..1.0, frac in 0.0f64..1.0, depth in 0.1f64..3.0) {
        // any α with Im α ≥ (2/3)|α|² removes at least as much as it scatters
        let im_max = 1.5;
        let im = im_max * (0.2 + 0.8 * frac);
        let bound = (1.5 * im - im * im).max(0.0).sqrt();
        let alpha = Complex64::new(re * bound, im);
        let scene = Scene {
            geometry: UniformSlab { thickness: depth },
            n0: 1.0 / (6.0 * std::f64::consts::PI),
            aperture: 1.0,
            optical_depth: depth,
        };
        let grid = FftGrid::new(2048, 1.0, -120.0).unwrap();
        let cfg = McConfig { paths: 40, seed, max_order: Some(60), workers: 1, ..McConfig::default() };
        let run = run_diffusion(&scene, &IsotropicKernel { alpha }, &PulseConfig::default(), &grid, &cfg).unwrap();
        let acc = &run.accumulator;
        prop_assert!(acc.elastic.iter().all(|b| b.trace.iter().all(|v| *v >= 0.0)));
        let rep = delay_statistics(acc).unwrap();
        prop_assert!(rep.escaped.mean + rep.truncated_fraction * rep.input_energy <= rep.input_energy * (1.0 + 1e-9));
    }
}
