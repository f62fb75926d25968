//! Scenario orchestration.

use std::path::Path;
use std::time::Instant;

use lightstore::atomic_data::TransitionTable;
use lightstore::diffuse_mc::{self, AtomicKernel, McConfig, Scene};
use lightstore::dressed_green::ControlField;
use lightstore::medium::CloudConfig;
use lightstore::memory_channel::{self as mem, ChannelState, WernerState};
use lightstore::pulse_transport::{self as pt, Axis, FftGrid, PulseConfig, SingleScatterSetup};
use lightstore::response::fit::{fit_lorentzian, Lorentzian};
use lightstore::response::ResponseModel;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::config::{echo, ControlMode, RunConfig, Scenario};
use crate::output::{sha256_hex, Cell, Csv, OutputDir};
use crate::CliError;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub fidelity_sweep: bool,
}

pub fn mc_config(cfg: &RunConfig) -> McConfig {
    let m = &cfg.mc;
    let defaults = McConfig::default();
    McConfig {
        paths: m.paths,
        seed: cfg.seed,
        max_order: m.max_order,
        roulette_threshold: m.roulette_threshold,
        roulette_survival: m.roulette_survival,
        detectors: m.detectors.clone(),
        chunk_size: m.chunk_size,
        workers: m.workers.unwrap_or(defaults.workers),
        band_cut: m.band_cut,
        record_chains: m.record_chains,
        storage: m.storage,
    }
}

struct Physics {
    table: TransitionTable,
    model: ResponseModel,
    cloud: CloudConfig,
    pulse: PulseConfig,
}

fn physics(cfg: &RunConfig) -> Result<Physics, CliError> {
    let table = TransitionTable::rb85(cfg.atom.clone()).map_err(CliError::compute("atomic_data"))?;
    let control = if cfg.control.omega_c == 0.0 {
        ControlField::off()
    } else {
        ControlField::from_omega_42(&table, cfg.control.omega_c, cfg.control.offset)
    };
    let model = ResponseModel::new(&table, control);
    let sigma0 = model.resonant_cross_section().map_err(CliError::compute("response"))?;
    let cloud = match (cfg.cloud.b0, cfg.cloud.n0) {
        (Some(b0), None) => CloudConfig::from_b0(b0, cfg.cloud.r0, sigma0),
        (None, Some(n0)) => CloudConfig::from_density(n0, cfg.cloud.r0, sigma0),
        _ => return Err(CliError::Config("exactly one of `cloud.b0` and `cloud.n0` must be set".into())),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let pulse = PulseConfig { duration: cfg.pulse.duration, detuning: cfg.pulse.detuning, aperture: cfg.pulse.aperture };
    Ok(Physics { table, model, cloud, pulse })
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    version: &'a str,
    seed: u64,
    config_hash: String,
    config: String,
    wall_time_seconds: f64,
    outputs: &'a [crate::output::OutputFile],
}

/// Runs the configured scenario and writes its outputs plus `manifest.json`
/// into `cfg.output`.
pub fn run(cfg: &RunConfig, opts: RunOptions) -> Result<(), CliError> {
    let scenario = cfg.scenario.ok_or_else(|| CliError::Config("no scenario selected".into()))?;
    let started = Instant::now();
    let mut out = OutputDir::create(Path::new(&cfg.output))?;
    match scenario {
        Scenario::Spectrum => spectrum(cfg, &mut out)?,
        Scenario::Scatter => scatter(cfg, &mut out)?,
        Scenario::Diffuse => diffuse(cfg, &mut out)?,
        Scenario::Memory => memory(cfg, opts, &mut out)?,
    }
    let config = echo(cfg)?;
    let manifest = Manifest {
        scenario: scenario.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config_hash: sha256_hex(format!("{}\n{}", env!("CARGO_PKG_VERSION"), config).as_bytes()),
        config,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: &out.files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    let path = out.root().join("manifest.json");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Serialize)]
struct PeakFit {
    center: f64,
    height: f64,
    fwhm: f64,
    rms_residual: f64,
}

/// Local maxima above 1% of the global maximum, each refined by a
/// Lorentzian fit on ±`half` around it.
fn fitted_peaks(xs: &[f64], ys: &[f64], half: f64, width: f64) -> Vec<PeakFit> {
    let top = ys.iter().cloned().fold(f64::MIN, f64::max);
    let mut out = Vec::new();
    for i in 1..ys.len() - 1 {
        if !(ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] && ys[i] > 0.01 * top) {
            continue;
        }
        let (wx, wy): (Vec<f64>, Vec<f64>) =
            xs.iter().zip(ys).filter(|(x, _)| (**x - xs[i]).abs() <= half).map(|(x, y)| (*x, *y)).unzip();
        let guess = Lorentzian { amplitude: ys[i], center: xs[i], width, offset: 0.0, slope: 0.0 };
        if let Ok(rep) = fit_lorentzian(&wx, &wy, guess) {
            out.push(PeakFit {
                center: rep.model.center,
                height: rep.model.amplitude + rep.model.offset,
                fwhm: rep.model.width,
                rms_residual: rep.rms_residual,
            });
        }
    }
    out
}

fn spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let ph = physics(cfg)?;
    let reference = ph.model.control_off();
    let s = &cfg.spectrum;
    let err = CliError::compute("response");
    let xs = linspace(s.start, s.stop, s.points);
    let mut csv = Csv::new(
        "susceptibility per unit density versus detuning",
        "detuning in gamma; chi in n0*lambdabar^3",
        &["detuning", "re_chi_perp", "im_chi_perp", "re_chi_par", "im_chi_par", "re_chi0", "im_chi0"],
    );
    let mut im0 = Vec::with_capacity(xs.len());
    for &d in &xs {
        let on = ph.model.susceptibility(d).map_err(&err)?;
        let off = reference.susceptibility(d).map_err(&err)?;
        im0.push(off.chi_perp.im);
        csv.row(&[
            Cell::Num(d),
            Cell::Num(on.chi_perp.re),
            Cell::Num(on.chi_perp.im),
            Cell::Num(on.chi_par.re),
            Cell::Num(on.chi_par.im),
            Cell::Num(off.chi_perp.re),
            Cell::Num(off.chi_perp.im),
        ]);
    }
    out.write("spectrum.csv", &csv.into_string())?;

    let fine = linspace(-s.fine_half_width, s.fine_half_width, s.fine_points);
    let mut csv = Csv::new(
        "control-induced part of the susceptibility near the F0=3 to F=4 line",
        "detuning in gamma; chi in n0*lambdabar^3",
        &["detuning", "re_chi_perp", "im_chi_perp", "re_at_perp", "im_at_perp", "re_at_par", "im_at_par"],
    );
    let mut at_im = Vec::with_capacity(fine.len());
    for &d in &fine {
        let on = ph.model.susceptibility(d).map_err(&err)?;
        let at = ph.model.at_decomposition(d).map_err(&err)?;
        at_im.push(at.at[0].im);
        csv.row(&[
            Cell::Num(d),
            Cell::Num(on.chi_perp.re),
            Cell::Num(on.chi_perp.im),
            Cell::Num(at.at[0].re),
            Cell::Num(at.at[0].im),
            Cell::Num(at.at[2].re),
            Cell::Num(at.at[2].im),
        ]);
    }
    out.write("spectrum_fine.csv", &csv.into_string())?;

    let peaks = fitted_peaks(&xs, &im0, 1.5, 1.0);
    let (imax, _) = at_im.iter().enumerate().fold((0, f64::MIN), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
    let at_fit = fitted_peaks(&fine, &at_im, 0.05, 0.02).into_iter().min_by(|a, b| {
        (a.center - fine[imax]).abs().total_cmp(&(b.center - fine[imax]).abs())
    });
    let summary = json!({
        "sigma0": ph.model.resonant_cross_section().map_err(&err)?,
        "control": { "omega_c": cfg.control.omega_c, "offset": cfg.control.offset },
        "control_off_peaks": peaks,
        "at_feature": at_fit,
        "at_width_estimate": cfg.control.omega_c.powi(2) / ph.table.splittings().excited_4_3.powi(2),
    });
    out.write_json("summary.json", &summary)
}

fn scatter(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let ph = physics(cfg)?;
    let sc = &cfg.scatter;
    let grid =
        FftGrid::new(sc.grid_points, sc.dt, -2.0 * ph.pulse.duration).map_err(|e| CliError::Config(e.to_string()))?;
    let setup = SingleScatterSetup {
        model: ph.model.clone(),
        cloud: ph.cloud,
        pulse: ph.pulse,
        grid,
        band_cut: sc.band_cut,
        reference_scale: sc.reference_scale,
    };
    let err = CliError::compute("pulse_transport");
    let mut csv = Csv::new(
        "single-scattering intensity from the cloud centre",
        "t in 1/gamma; intensity per unit input energy per steradian per 1/gamma",
        &["t", "I_rayleigh", "I_raman", "I_reference", "control_on", "direction"],
    );
    let mut rows = Vec::new();
    for on in [false, true] {
        let budget = pt::channel_budget(&setup, on).map_err(&err)?;
        for d in &sc.directions {
            let axis = Axis::parse(d).map_err(|e| CliError::Config(e.to_string()))?;
            let s = pt::single_scatter_signal(&setup, axis, on).map_err(&err)?;
            for j in 0..s.elastic.values.len() {
                csv.row(&[
                    Cell::Num(s.elastic.time(j)),
                    Cell::Num(s.elastic.values[j]),
                    Cell::Num(s.inelastic.values[j]),
                    Cell::Num(s.reference.values[j]),
                    Cell::Int(i64::from(on)),
                    Cell::Text(axis.label()),
                ]);
            }
            let two_t = 2.0 * ph.pulse.duration;
            rows.push(json!({
                "direction": axis.label(),
                "control_on": on,
                "elastic_energy": s.elastic_energy(),
                "inelastic_energy": s.inelastic_energy(),
                "mean_elastic_time": pt::mean_arrival_time(&s.elastic).ok(),
                "elastic_tail_after_2T": s.elastic.energy_after(two_t),
                "out_leg_attenuation": s.out_leg_attenuation,
                "emission_inelastic_to_elastic": budget.inelastic / budget.elastic,
            }));
        }
    }
    out.write("scatter.csv", &csv.into_string())?;
    out.write_json("summary.json", &json!({ "b0": ph.cloud.b0(), "n0": ph.cloud.n0, "signals": rows }))
}

fn diffuse(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let ph = physics(cfg)?;
    let mc = mc_config(cfg);
    let grid = FftGrid::new(cfg.mc.grid_points, cfg.mc.dt, -2.0 * ph.pulse.duration)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let scene = Scene::cloud(&ph.cloud, &ph.pulse);
    let modes: &[bool] = match cfg.mc.control {
        ControlMode::On => &[true],
        ControlMode::Off => &[false],
        ControlMode::Both => &[false, true],
    };
    let err = CliError::compute("diffuse_mc");
    let mut reports = serde_json::Map::new();
    for &on in modes {
        let model = if on { ph.model.clone() } else { ph.model.control_off() };
        let run = diffuse_mc::run_diffusion(&scene, &AtomicKernel { model }, &ph.pulse, &grid, &mc).map_err(&err)?;
        let acc = &run.accumulator;
        let report = diffuse_mc::delay_statistics(acc).map_err(&err)?;
        let orders = acc.elastic.len();
        let mut names: Vec<String> = (0..orders).map(|n| format!("I_{n}")).collect();
        names.insert(0, "t".into());
        names.push("I_inelastic".into());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut csv = Csv::new(
            &format!("escaped intensity by scattering order, control {}", if on { "on" } else { "off" }),
            "t in 1/gamma; intensity per unit input energy per 1/gamma",
            &refs,
        );
        let traces: Vec<_> = (0..orders).map(|n| acc.elastic_trace(n)).collect();
        let mut inelastic = pt::IntensityTrace::zeros(grid.t0, grid.dt, grid.n);
        for n in 0..acc.inelastic.len() {
            inelastic.add_scaled(&acc.inelastic_trace(n), 1.0);
        }
        for j in 0..grid.n {
            let mut cells = vec![Cell::Num(grid.time(j))];
            cells.extend(traces.iter().map(|t| Cell::Num(t.values[j])));
            cells.push(Cell::Num(inelastic.values[j]));
            csv.row(&cells);
        }
        let tag = if on { "on" } else { "off" };
        out.write(&format!("diffuse_{tag}.csv"), &csv.into_string())?;
        for (slot, d) in acc.detectors.iter().enumerate() {
            let mut csv = Csv::new(
                &format!("next-event detector toward [{}, {}, {}], control {tag}", d.direction[0], d.direction[1], d.direction[2]),
                "t in 1/gamma; intensity per unit input energy per steradian per 1/gamma",
                &["t", "I_elastic", "I_inelastic"],
            );
            let (el, inel) = (acc.detector_trace(slot, false), acc.detector_trace(slot, true));
            if let (Some(el), Some(inel)) = (el, inel) {
                for j in 0..grid.n {
                    csv.row(&[Cell::Num(grid.time(j)), Cell::Num(el.values[j]), Cell::Num(inel.values[j])]);
                }
            }
            out.write(&format!("detector_{slot}_{tag}.csv"), &csv.into_string())?;
        }
        if !run.chains.is_empty() {
            out.write_json(&format!("chains_{tag}.json"), &run.chains)?;
        }
        reports.insert(
            tag.into(),
            json!({ "max_order": run.max_order, "bands": run.bands, "statistics": report }),
        );
    }
    out.write_json(
        "summary.json",
        &json!({ "seed": cfg.seed, "paths": cfg.mc.paths, "b0": ph.cloud.b0(), "runs": reports }),
    )
}

fn memory(cfg: &RunConfig, opts: RunOptions, out: &mut OutputDir) -> Result<(), CliError> {
    let m = &cfg.memory;
    let err = CliError::compute("memory_channel");
    let ch = ChannelState::new(m.eta, m.nbar).map_err(|e| CliError::Config(e.to_string()))?;
    let extent = m.extent.unwrap_or_else(|| mem::default_extent(&ch));
    let grid = mem::wigner_channel(m.grid_points, extent, &ch).map_err(&err)?;
    let mut csv = Csv::new("channel Wigner function", "x, p dimensionless quadratures", &["x", "p", "W"]);
    for (ix, x) in grid.axis.iter().enumerate() {
        for (ip, p) in grid.axis.iter().enumerate() {
            csv.row(&[Cell::Num(*x), Cell::Num(*p), Cell::Num(grid.value(ix, ip))]);
        }
    }
    out.write("wigner.csv", &csv.into_string())?;

    let stats = mem::photon_number_distribution(&ch, m.n_max).map_err(&err)?;
    let quad = mem::photon_number_by_quadrature(m.n_max, &grid);
    let mut csv = Csv::new("photon-number distribution", "probabilities", &["n", "P", "P_quadrature", "signal_fraction"]);
    for n in 0..=m.n_max {
        csv.row(&[
            Cell::Int(n as i64),
            Cell::Num(stats.probabilities[n]),
            Cell::Num(quad[n]),
            Cell::Num(stats.signal_fraction[n]),
        ]);
    }
    out.write("photon_numbers.csv", &csv.into_string())?;

    let x = stats.signal_fraction[1];
    let psi = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let werner = WernerState::new(x.clamp(0.0, 1.0), psi).map_err(&err)?;
    let fidelity = mem::werner_fidelity(&werner);
    let normalization = grid.normalization();
    if (normalization - 1.0).abs() > 1e-6 {
        log::warn!("Wigner grid normalization is {normalization}, outside 1 ± 1e-6");
    }
    if opts.fidelity_sweep {
        let mut csv = Csv::new(
            "Werner-state fidelity versus signal weight",
            "dimensionless",
            &["x", "F", "classical", "cloning", "class"],
        );
        for xi in linspace(0.0, 1.0, m.sweep_points) {
            let f = mem::werner_fidelity(&WernerState::new(xi, psi).map_err(&err)?);
            let class = mem::benchmark_comparison(f).map_err(&err)?;
            let label = serde_json::to_value(class).map_err(|e| CliError::Internal(e.to_string()))?;
            csv.row(&[
                Cell::Num(xi),
                Cell::Num(f),
                Cell::Num(mem::CLASSICAL_BENCHMARK),
                Cell::Num(mem::CLONING_BENCHMARK),
                Cell::Text(label.as_str().unwrap_or("")),
            ]);
        }
        out.write("fidelity.csv", &csv.into_string())?;
    }
    out.write_json(
        "summary.json",
        &json!({
            "eta": ch.eta,
            "nbar": ch.nbar,
            "wigner_at_origin": ch.wigner(0.0),
            "normalization": normalization,
            "tail": stats.tail,
            "signal_fraction_n1": x,
            "fidelity": fidelity,
            "benchmark": mem::benchmark_comparison(fidelity).map_err(&err)?,
            "classical_benchmark": mem::CLASSICAL_BENCHMARK,
            "cloning_benchmark": mem::CLONING_BENCHMARK,
        }),
    )
}
