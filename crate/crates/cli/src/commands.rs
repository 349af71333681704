use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use sweetspot::cavity::{fidelity_sweep, population_trace, rwa_warnings, EntanglerSpec, NoiseDraw};
use sweetspot::dynamics::{propagate, DensityMatrix3, RotatingFrameModel};
use sweetspot::filter::{fidelity_from_spectrum_with, filter_fn as sample_filter, log_grid};
use sweetspot::hamiltonian::{eigensystem, find_tss, DeviceParams, DriveConfig, E, F, G};
use sweetspot::noise::generate_trace;
use sweetspot::presets::OperatingPoint;
use sweetspot::pulses::{clifford_catalog, GateFamily, PulseSegment, PulseSequence, Rotation};
use sweetspot::units::{ghz, to_ghz};

use crate::config::{DeviceSection, RunConfig};
use crate::output::Context;
use crate::CliError;

#[derive(Serialize)]
struct TssReport {
    delta_b_ghz: f64,
    tau_ghz: f64,
    epsilon_ss_ghz: f64,
    energies_ghz: [f64; 3],
    qubit_frequency_ghz: f64,
    leakage_frequency_ghz: f64,
    d_ge: f64,
    rabi_frequency_ghz: f64,
}

pub fn tss(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let d = &cfg.device;
    let eps = find_tss(ghz(d.delta_b_ghz), ghz(d.tau_ghz), None, None)?;
    let op = DeviceSection {
        epsilon_ghz: Some(to_ghz(eps)),
        ..d.clone()
    }
    .operating_point()?;
    let e = &op.eigen;
    let report = TssReport {
        delta_b_ghz: d.delta_b_ghz,
        tau_ghz: d.tau_ghz,
        epsilon_ss_ghz: to_ghz(eps),
        energies_ghz: [to_ghz(e.energies[G]), to_ghz(e.energies[E]), to_ghz(e.energies[F])],
        qubit_frequency_ghz: to_ghz(e.qubit_frequency()),
        leakage_frequency_ghz: to_ghz(e.leakage_frequency()),
        d_ge: e.d_ge(),
        rabi_frequency_ghz: to_ghz(op.rabi_frequency()),
    };
    println!(
        "eps_SS/2pi = {:.6} GHz, omega_q/2pi = {:.6} GHz, d_ge = {:.6}",
        report.epsilon_ss_ghz, report.qubit_frequency_ghz, report.d_ge
    );
    ctx.json("tss.json", &report)
}

pub fn spectrum(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let s = &cfg.spectrum;
    if s.points == 0 || !(s.eps_max_ghz >= s.eps_min_ghz) {
        return Err(CliError::Config(
            "spectrum needs points >= 1 and eps_max >= eps_min".into(),
        ));
    }
    let (db, tau) = (ghz(cfg.device.delta_b_ghz), ghz(cfg.device.tau_ghz));
    let n = if s.eps_max_ghz == s.eps_min_ghz { 1 } else { s.points };
    let grid: Vec<f64> = (0..n)
        .map(|k| s.eps_min_ghz + (s.eps_max_ghz - s.eps_min_ghz) * k as f64 / (n.max(2) - 1) as f64)
        .collect();
    let marker = find_tss(db, tau, None, None).ok().map(|eps| {
        let target = to_ghz(eps);
        (0..n)
            .min_by(|&a, &b| (grid[a] - target).abs().total_cmp(&(grid[b] - target).abs()))
            .unwrap_or(0)
    });
    let mut w = ctx.csv("spectrum.csv")?;
    writeln!(w, "eps_ghz,E_g_ghz,E_e_ghz,E_f_ghz,omega_q_ghz,tss")?;
    for (k, &e) in grid.iter().enumerate() {
        let sys = eigensystem(&DeviceParams::new(db, tau, ghz(e))?);
        writeln!(
            w,
            "{e:.9},{:.12},{:.12},{:.12},{:.12},{}",
            to_ghz(sys.energies[G]),
            to_ghz(sys.energies[E]),
            to_ghz(sys.energies[F]),
            to_ghz(sys.qubit_frequency()),
            u8::from(marker == Some(k))
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_filter_functions(cfg: &RunConfig, ctx: &Context, w0: f64) -> Result<(), CliError> {
    let f = &cfg.filter;
    if f.points == 0 || !(f.omega_min > 0.0) || !(f.omega_max >= f.omega_min) {
        return Err(CliError::Config(
            "filter grid needs points >= 1 and 0 < omega_min <= omega_max".into(),
        ));
    }
    let grid = log_grid(f.omega_min * w0, f.omega_max * w0, f.points);
    for entry in clifford_catalog() {
        let seq = entry.sequence.with_omega0(w0);
        let ff = sample_filter(&seq, &grid);
        let mut w = ctx.csv(&format!("filter_{}_{}.csv", entry.gate, seq.family))?;
        ff.write_csv(w0, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn filter_fn(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let op = cfg.device.operating_point()?;
    write_filter_functions(cfg, ctx, op.rabi_frequency())
}

pub fn fig4(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let op = cfg.device.operating_point()?;
    let w0 = op.rabi_frequency();
    let model = cfg.noise.model(w0)?;
    let factor = cfg.noise.convention.to_qubit_frequency() / 4.0;
    let model = model.with_amplitude(model.amplitude * factor);
    let opts = cfg.noise.integration()?;
    let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for entry in clifford_catalog() {
        let seq = entry.sequence.with_omega0(w0);
        let f = fidelity_from_spectrum_with(&seq, &model, opts)?;
        table
            .entry(entry.gate.to_string())
            .or_default()
            .insert(seq.family.to_string(), f);
    }
    for (gate, row) in &table {
        let cells: Vec<String> = GateFamily::ALL
            .iter()
            .map(|fam| format!("{fam}={:.4}", row[&fam.to_string()]))
            .collect();
        println!("{gate}: {}", cells.join(" "));
    }
    ctx.json("fig4.json", &table)?;
    write_filter_functions(cfg, ctx, w0)
}

#[derive(Serialize)]
struct LeakageReport {
    duration_ns: f64,
    max_p_f: f64,
    final_p0: f64,
    final_p1: f64,
}

pub fn leakage(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let op = cfg.device.operating_point()?;
    let drive = DriveConfig::resonant(&op.eigen, op.eps_ac)?;
    let model = RotatingFrameModel::new(op.eigen.clone(), drive, false);
    let angle = cfg.leakage.angle_over_pi * PI;
    let seq = PulseSequence::new(
        GateFamily::Naive,
        Rotation::new([1.0, 0.0, 0.0], angle),
        vec![PulseSegment::new(0.0, angle)],
    )?
    .with_omega0(model.rabi_frequency());
    let tr = propagate(&model, &seq, &DensityMatrix3::zero(), cfg.leakage.dt_ns)?;
    let (p0, p1, _) = tr.last().populations();
    let report = LeakageReport {
        duration_ns: seq.duration(),
        max_p_f: tr.max_leakage(),
        final_p0: p0,
        final_p1: p1,
    };
    println!("max P_f = {:.3e}, final P_0 = {:.3e}", report.max_p_f, report.final_p0);
    let mut w = ctx.csv("leakage.csv")?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    ctx.json("leakage.json", &report)
}

pub fn noise_gen(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let op = cfg.device.operating_point()?;
    let model = cfg.noise.model(op.rabi_frequency())?;
    let factor = cfg.noise.convention.to_qubit_frequency();
    let model = model.with_amplitude(model.amplitude * factor);
    let g = &cfg.noise_gen;
    let trace = generate_trace(&model, g.dt_ns, g.samples, cfg.seed)?;
    println!("{} samples, variance {:.4e} (rad/ns)^2", trace.len(), trace.variance());
    let mut w = ctx.csv("noise.csv")?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

const LEVELS: [char; 3] = ['g', 'e', 'f'];

#[derive(Serialize)]
struct Fig5Device {
    label: String,
    xi: f64,
    omega_ghz: f64,
    duration_ns: f64,
    final_p_eg0: f64,
    rwa_warnings: usize,
    sweep: Vec<sweetspot::cavity::SweepPoint>,
}

pub fn fig5(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let c = &cfg.cavity;
    if c.population_points == 0 {
        return Err(CliError::Config("population_points must be positive".into()));
    }
    let mut summary = Vec::new();
    for (i, dev) in c.devices.iter().enumerate() {
        let label = if dev.label.is_empty() {
            format!("device{i}")
        } else {
            dev.label.clone()
        };
        let op: OperatingPoint = dev.operating_point()?;
        let cav = c.config(&op)?;
        let eig = [op.eigen.clone(), op.eigen.clone()];
        let spec = EntanglerSpec::for_devices(&cav, &eig)?;
        let warnings = rwa_warnings(&cav, &eig);
        for w in &warnings {
            eprintln!(
                "warning: {label} qubit {} term {}{} oscillates only {:.1}x faster than its coupling",
                w.qubit + 1,
                LEVELS[w.m],
                LEVELS[w.n],
                w.margin
            );
        }
        let dt = spec.duration / c.population_points as f64;
        let pops = population_trace(&cav, &eig, &NoiseDraw::none(), Some(dt))?;
        let mut w = ctx.csv(&format!("fig5_{label}_population.csv"))?;
        pops.write_csv(&mut w)?;
        w.flush()?;
        let sweep = fidelity_sweep(&cav, &eig, &c.sigma_over_g, c.realizations, cfg.seed)?;
        let mut w = ctx.csv(&format!("fig5_{label}_sweep.csv"))?;
        sweep.write_csv(&mut w)?;
        w.flush()?;
        for p in &sweep.points {
            println!(
                "{label}: sigma/g = {:.3} F = {:.4} ± {:.4}",
                p.sigma_over_g, p.mean_fidelity, p.stderr
            );
        }
        summary.push(Fig5Device {
            label,
            xi: spec.xi,
            omega_ghz: to_ghz(spec.omega),
            duration_ns: spec.duration,
            final_p_eg0: pops.last().population(E, G, 0),
            rwa_warnings: warnings.len(),
            sweep: sweep.points,
        });
    }
    ctx.json("fig5.json", &summary)
}
