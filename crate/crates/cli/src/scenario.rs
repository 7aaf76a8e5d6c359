//! Experiment scenarios: each turns a config into tables and pass/fail checks.

use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use modint::characteristics::{analytic_solution, default_step};
use modint::diagnostics::{
    convergence_order, delta_energy, energy_balance_residual, error_norm, harmonic_peak_ratios,
    nonreciprocity_measure, reference_norm, EnergyRecord,
};
use modint::fdtd::FieldState;
use modint::hbm::{solve_scattering, static_rt, ScatteringSpectrum};
use modint::model::{
    Forcing, InterfaceLaw, InterfaceParams, MaterialHalfSpaces, ModulationKind, Side, Waveform,
};
use modint::simulation::{run, RunOutput, RunRequest, Setup};

use crate::config::{parse_config, ExperimentConfig};
use crate::output::Table;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Simulate,
    Validate,
    Converge,
    Energy,
    Hbm,
    Harmonics,
    Impedance,
    Nonreciprocity,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Simulate,
        Scenario::Validate,
        Scenario::Converge,
        Scenario::Energy,
        Scenario::Hbm,
        Scenario::Harmonics,
        Scenario::Impedance,
        Scenario::Nonreciprocity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::Validate => "validate",
            Scenario::Converge => "converge",
            Scenario::Energy => "energy",
            Scenario::Hbm => "hbm",
            Scenario::Harmonics => "harmonics",
            Scenario::Impedance => "impedance",
            Scenario::Nonreciprocity => "nonreciprocity",
        }
    }

    /// Built-in config used when none is given.
    pub fn preset(self) -> &'static str {
        match self {
            Scenario::Simulate => include_str!("../presets/simulate.toml"),
            Scenario::Validate => include_str!("../presets/validate.toml"),
            Scenario::Converge => include_str!("../presets/converge.toml"),
            Scenario::Energy => include_str!("../presets/energy.toml"),
            Scenario::Hbm => include_str!("../presets/hbm.toml"),
            Scenario::Harmonics => include_str!("../presets/harmonics.toml"),
            Scenario::Impedance => include_str!("../presets/impedance.toml"),
            Scenario::Nonreciprocity => include_str!("../presets/nonreciprocity.toml"),
        }
    }

    pub fn preset_config(self) -> ExperimentConfig {
        parse_config(self.preset()).expect("built-in preset parses")
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario {s:?}")))
    }
}

/// One named comparison against a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("< {limit:e}"),
            passed: value < limit,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            limit: "holds".into(),
            passed,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit
        )
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    /// Use a fixed seed for randomised checks.
    pub seedless: bool,
}

pub fn run_scenario(cfg: &ExperimentConfig, scenario: Scenario, opts: Options) -> Result<Report, CliError> {
    cfg.check()?;
    let (checks, tables) = match scenario {
        Scenario::Simulate => simulate(cfg)?,
        Scenario::Validate => validate(cfg)?,
        Scenario::Converge => converge(cfg)?,
        Scenario::Energy => energy(cfg)?,
        Scenario::Hbm => hbm(cfg, opts)?,
        Scenario::Harmonics => harmonics(cfg)?,
        Scenario::Impedance => impedance(cfg)?,
        Scenario::Nonreciprocity => nonreciprocity(cfg)?,
    };
    for c in &checks {
        log::info!("{scenario}: {c}");
    }
    Ok(Report {
        scenario,
        checks,
        tables,
    })
}

type Outcome = (Vec<Check>, Vec<Table>);

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn request(cfg: &ExperimentConfig) -> RunRequest {
    RunRequest {
        receivers: cfg.receivers.clone(),
        energy_stride: cfg.energy_stride,
    }
}

fn snapshot_table(out: &RunOutput) -> Table {
    let mut t = Table::new("snapshot", &["x", "v", "sigma"]);
    for (j, x) in out.grid.positions().into_iter().enumerate() {
        t.push(vec![x, out.final_state.v[j], out.final_state.sigma[j]]);
    }
    t
}

fn receiver_table(out: &RunOutput, receivers: &[f64]) -> Table {
    let mut headers = vec!["t".to_string()];
    for i in 0..receivers.len() {
        headers.push(format!("v_{i}"));
        headers.push(format!("sigma_{i}"));
    }
    let mut t = Table {
        name: "receivers".into(),
        headers,
        rows: Vec::with_capacity(out.times.len()),
    };
    for (n, &time) in out.times.iter().enumerate() {
        let mut row = vec![time];
        for i in 0..receivers.len() {
            row.push(out.receiver_v[i][n]);
            row.push(out.receiver_sigma[i][n]);
        }
        t.push(row);
    }
    t
}

fn energy_table(records: &[EnergyRecord]) -> Table {
    let mut t = Table::new("energy", &["t", "e_b", "e_i", "e_m", "p"]);
    for r in records {
        t.push(vec![r.t, r.bulk, r.interface, r.total, r.power]);
    }
    t
}

fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let out = run(cfg.setup.clone(), cfg.t_end, &request(cfg))?;
    let finite = out.final_state.check_finite().is_ok();
    let mut tables = vec![snapshot_table(&out)];
    if !cfg.receivers.is_empty() {
        tables.push(receiver_table(&out, &cfg.receivers));
    }
    if !out.energy.is_empty() {
        tables.push(energy_table(&out.energy));
    }
    Ok((vec![Check::holds("fields finite", finite)], tables))
}

/// Relative L2 tolerance against the characteristics solution, scaled at
/// fourth order from `1e-4` at 3200 cells and capped at 1%.
pub fn oracle_tolerance(nx: usize) -> f64 {
    (1e-4 * (3200.0 / nx as f64).powi(4)).min(1e-2)
}

/// Velocity error against the characteristics solution at `t_end`.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub dx: f64,
    pub eps_v: f64,
    pub relative: f64,
    pub output: RunOutput,
    pub exact_v: Vec<f64>,
    pub exact_sigma: Vec<f64>,
}

pub fn compare_with_oracle(setup: &Setup, t_end: f64) -> Result<OracleComparison, CliError> {
    let output = run(setup.clone(), t_end, &RunRequest::default())?;
    let grid = output.grid;
    let sol = analytic_solution(
        &setup.material,
        &setup.law,
        &setup.source,
        t_end,
        default_step(grid.dt),
    )?;
    let exact = |x: f64| sol.eval(x, t_end);
    let eps_v = error_norm(&output.final_state, |x| exact(x).0, &grid);
    let norm = reference_norm(|x| exact(x).0, &grid);
    let (exact_v, exact_sigma) = grid.positions().into_iter().map(exact).unzip();
    Ok(OracleComparison {
        dx: grid.dx,
        eps_v,
        relative: eps_v / norm,
        output,
        exact_v,
        exact_sigma,
    })
}

fn validate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let cmp = compare_with_oracle(&cfg.setup, cfg.t_end)?;
    let mut snap = Table::new("snapshot", &["x", "v", "sigma", "v_exact", "sigma_exact"]);
    let st: &FieldState = &cmp.output.final_state;
    for (j, x) in cmp.output.grid.positions().into_iter().enumerate() {
        snap.push(vec![x, st.v[j], st.sigma[j], cmp.exact_v[j], cmp.exact_sigma[j]]);
    }
    let mut err = Table::new("error", &["nx", "dx", "eps_v", "relative"]);
    err.push(vec![cfg.setup.nx as f64, cmp.dx, cmp.eps_v, cmp.relative]);
    let check = Check::below(
        format!("relative L2 velocity error at nx = {}", cfg.setup.nx),
        cmp.relative,
        oracle_tolerance(cfg.setup.nx),
    );
    Ok((vec![check], vec![snap, err]))
}

/// `(dx, eps_v)` for `nx, 2nx, 4nx, 8nx`.
pub fn refinement_ladder(setup: &Setup, t_end: f64, levels: usize) -> Result<Vec<(f64, f64)>, CliError> {
    (0..levels)
        .into_par_iter()
        .map(|l| {
            let s = setup.clone().with_nx(setup.nx << l);
            compare_with_oracle(&s, t_end).map(|c| (c.dx, c.eps_v))
        })
        .collect()
}

fn converge(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ladder = refinement_ladder(&cfg.setup, cfg.t_end, 4)?;
    let slope = convergence_order(&ladder, 0)?;
    let mut t = Table::new("convergence", &["dx", "eps_v"]);
    for &(dx, e) in &ladder {
        t.push(vec![dx, e]);
    }
    Ok((vec![Check::within("log-log slope of eps_v", slope, 3.5, 4.5)], vec![t]))
}

/// Law with each modulated channel's depth replaced by `eps`.
fn with_eps(law: &InterfaceLaw, eps: f64) -> InterfaceLaw {
    let mut l = *law;
    let d = &mut l.depth;
    for (depth, base) in [
        (&mut d.compliance, law.base.compliance),
        (&mut d.inertia, law.base.inertia),
    ] {
        if base > 0.0 {
            *depth = eps;
        }
    }
    l
}

fn energy(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut req = request(cfg);
    req.energy_stride = Some(cfg.energy_stride.unwrap_or(1));
    let out = run(cfg.setup.clone(), cfg.t_end, &req)?;
    let law = &cfg.setup.law;
    let first = out.energy.first().map(|r| r.total).unwrap_or(0.0);
    let last = out.energy.last().map(|r| r.total).unwrap_or(0.0);
    let mut checks = Vec::new();
    let lossless = law.base.compliance_loss == 0.0 && law.base.inertia_loss == 0.0;
    let forced = matches!(cfg.setup.source.forcing, Forcing::DiracPoint { .. });
    if law.is_static() && lossless && !forced {
        checks.push(Check::below("relative energy drift", (last / first - 1.0).abs(), 1e-6));
    } else if law.is_static() {
        let end = if forced { cfg.setup.source.duration() } else { 0.0 };
        let tail: Vec<f64> = out.energy.iter().filter(|r| r.t >= end).map(|r| r.total).collect();
        let rises = tail.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
        checks.push(Check::holds("energy non-increasing after forcing", rises == 0));
    } else {
        let traces: Vec<_> = out.traces.iter().map(|(_, tr)| *tr).collect();
        let res = energy_balance_residual(&out.energy, &traces, law)?;
        checks.push(Check::below("energy balance residual / max|dE/dt|", res.relative_max(), 0.02));
    }
    let mut tables = vec![energy_table(&out.energy)];

    if !law.is_static() {
        let grid: Vec<f64> = (-3..=3).map(|i| 0.25 * i as f64).collect();
        let rows: Vec<Result<Vec<f64>, CliError>> = grid
            .par_iter()
            .map(|&eps| {
                let mut s = cfg.setup.clone();
                s.law = with_eps(law, eps);
                let o = run(s, cfg.t_end, &RunRequest { receivers: vec![], energy_stride: Some(1) })?;
                let e0 = o.energy[0].total;
                let de = delta_energy(&o.energy, cfg.t_end).unwrap_or(f64::NAN);
                Ok(vec![eps, de, (e0 + de) / e0])
            })
            .collect();
        let mut sweep = Table::new("delta_energy", &["eps", "delta_e", "ratio"]);
        for r in rows {
            sweep.push(r?);
        }
        tables.push(sweep);
    }
    let mut summary = Table::new("energy_summary", &["e_initial", "e_final", "ratio"]);
    summary.push(vec![first, last, last / first]);
    tables.push(summary);
    Ok((checks, tables))
}

fn spectrum_table(s: &ScatteringSpectrum) -> Table {
    let mut t = Table::new(
        "spectrum",
        &["k", "omega_k", "re_r", "im_r", "abs_r", "re_t", "im_t", "abs_t"],
    );
    for (i, k) in s.ks().enumerate() {
        let (r, tr) = (s.r[i], s.t[i]);
        t.push(vec![k as f64, s.omega_k(k), r.re, r.im, r.norm(), tr.re, tr.im, tr.norm()]);
    }
    t
}

/// Largest relative gap between harmonic balance at zero depth and the
/// static closed form over `draws` random parameter sets.
pub fn static_limit_gap(draws: usize, rng: &mut impl Rng) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let rho = rng.random_range(500.0..8000.0);
        let c = rng.random_range(500.0..6000.0);
        let z = rho * c;
        let base = InterfaceParams {
            compliance: rng.random_range(0.0..4.0) / (z * 100.0),
            inertia: rng.random_range(0.0..4.0) * z / 100.0,
            compliance_loss: rng.random_range(0.0..2.0) / z,
            inertia_loss: rng.random_range(0.0..2.0) * z,
        };
        let f_c = rng.random_range(1.0..200.0);
        let material = MaterialHalfSpaces::homogeneous(rho, c, 0.0)?;
        let law = InterfaceLaw::fixed(base);
        let hb = solve_scattering(&law, &material, f_c, 4)?;
        let (r, t) = static_rt(&material, &law, 2.0 * std::f64::consts::PI * f_c);
        let r0 = hb.r_k(0).unwrap_or_default();
        let t0 = hb.t_k(0).unwrap_or_default();
        let scale = r.norm().max(t.norm());
        worst = worst.max((r0 - r).norm() / scale).max((t0 - t).norm() / scale);
    }
    Ok(worst)
}

fn rng(opts: Options) -> StdRng {
    if opts.seedless {
        StdRng::seed_from_u64(0x6d6f_6469_6e74)
    } else {
        let seed = rand::rng().random();
        log::info!("random seed {seed}");
        StdRng::seed_from_u64(seed)
    }
}

fn impedance_matched(law: &InterfaceLaw, z: f64) -> bool {
    let b = &law.base;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    b.compliance > 0.0
        && close(b.inertia, z * z * b.compliance)
        && close(b.inertia_loss, z * z * b.compliance_loss)
        && law.depth.compliance == law.depth.inertia
        && law.depth.compliance_loss == law.depth.inertia_loss
}

fn hbm(cfg: &ExperimentConfig, opts: Options) -> Result<Outcome, CliError> {
    let s = solve_scattering(&cfg.setup.law, &cfg.setup.material, cfg.setup.source.f_c, cfg.harmonics)?;
    let mut checks = vec![Check::below(
        "static limit vs closed form (100 draws)",
        static_limit_gap(100, &mut rng(opts))?,
        1e-12,
    )];
    if impedance_matched(&cfg.setup.law, cfg.setup.material.impedance(Side::Minus)) {
        checks.push(Check::below("max |R_k| for a matched interface", s.max_reflection(), 1e-12));
    }
    Ok((checks, vec![spectrum_table(&s)]))
}

/// Nearest node centre of a grid of `nx` cells on `[0, length]`.
fn snap_to_node(x: f64, length: f64, nx: usize) -> f64 {
    let dx = length / nx as f64;
    let j = ((x / dx - 0.5).round().max(0.0) as usize).min(nx - 1);
    (j as f64 + 0.5) * dx
}

/// Simulated and harmonic-balance `|T_k|`, `|R_k|` for `k = -order..=order`.
#[derive(Debug, Clone)]
pub struct HarmonicComparison {
    pub rows: Vec<(i32, f64, f64, f64, f64, f64)>,
    pub spectrum: ScatteringSpectrum,
}

pub fn compare_harmonics(cfg: &ExperimentConfig, order: i32) -> Result<HarmonicComparison, CliError> {
    let setup = &cfg.setup;
    if !matches!(setup.source.waveform, Waveform::Continuous { .. })
        || !matches!(setup.source.forcing, Forcing::DiracPoint { .. })
    {
        return Err(CliError::Config("harmonics needs a continuous point source".into()));
    }
    let window = cfg
        .window
        .ok_or_else(|| CliError::Config("harmonics needs run.window".into()))?;
    let blocks = cfg.t_end / window;
    if (blocks - blocks.round()).abs() > 1e-9 {
        return Err(CliError::Config("run.t_end must be a whole number of windows".into()));
    }
    let x0 = setup.material.x0;
    let (xr, xt) = match cfg.receivers.as_slice() {
        [a, b] if *a < x0 && *b > x0 => (*a, *b),
        _ => {
            return Err(CliError::Config(
                "harmonics needs receivers = [reflected side, transmitted side]".into(),
            ))
        }
    };
    let receivers = vec![
        snap_to_node(xr, setup.length, setup.nx),
        snap_to_node(xt, setup.length, setup.nx),
    ];
    let mut modulated = setup.clone();
    modulated.step_multiple = blocks.round() as usize;
    let mut free = modulated.clone();
    free.law = InterfaceLaw::perfect();
    let req = RunRequest {
        receivers,
        energy_stride: None,
    };
    let (a, b) = rayon::join(|| run(modulated, cfg.t_end, &req), || run(free, cfg.t_end, &req));
    let (a, b) = (a?, b?);
    let dt = a.grid.dt;
    let n = a.times.len() - 1;
    let start = n - (window / dt).round() as usize;
    let reflected: Vec<f64> = a.receiver_v[0][start..n]
        .iter()
        .zip(&b.receiver_v[0][start..n])
        .map(|(x, y)| x - y)
        .collect();
    let incident = &b.receiver_v[1][start..n];
    let transmitted = &a.receiver_v[1][start..n];
    let (f_c, f_m) = (setup.source.f_c, setup.law.f_m);
    let t_sim = harmonic_peak_ratios(transmitted, incident, dt, f_c, f_m, order);
    let r_sim = harmonic_peak_ratios(&reflected, incident, dt, f_c, f_m, order);
    let spectrum = solve_scattering(&setup.law, &setup.material, f_c, cfg.harmonics)?;
    let rows = t_sim
        .iter()
        .zip(&r_sim)
        .map(|(&(k, ts), &(_, rs))| {
            let kk = k as i64;
            (
                k,
                (f_c + k as f64 * f_m).abs(),
                ts,
                spectrum.t_k(kk).map(|z| z.norm()).unwrap_or(0.0),
                rs,
                spectrum.r_k(kk).map(|z| z.norm()).unwrap_or(0.0),
            )
        })
        .collect();
    Ok(HarmonicComparison { rows, spectrum })
}

/// Largest relative mismatch over coefficients whose harmonic-balance
/// magnitude exceeds `floor`.
pub fn harmonic_mismatch(cmp: &HarmonicComparison, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &(_, _, ts, th, rs, rh) in &cmp.rows {
        if th > floor {
            worst = worst.max((ts / th - 1.0).abs());
        }
        if rh > floor {
            worst = worst.max((rs / rh - 1.0).abs());
        }
    }
    worst
}

fn harmonics(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let cmp = compare_harmonics(cfg, 6)?;
    let mut t = Table::new("harmonics", &["k", "f_k", "t_sim", "t_hbm", "r_sim", "r_hbm"]);
    for &(k, f, ts, th, rs, rh) in &cmp.rows {
        t.push(vec![k as f64, f, ts, th, rs, rh]);
    }
    let mut checks = vec![Check::below(
        "max relative mismatch of |T_k|, |R_k| > 0.01",
        harmonic_mismatch(&cmp, 0.01),
        0.05,
    )];
    let (f_c, f_m) = (cfg.setup.source.f_c, cfg.setup.law.f_m);
    if (f_c - f_m).abs() <= 1e-12 * f_c {
        let s = &cmp.spectrum;
        let v = s.r_k(-1).unwrap_or_default().norm().max(s.t_k(-1).unwrap_or_default().norm());
        checks.push(Check::below("|R_-1|, |T_-1| when f_c = f_m", v, 1e-12));
    }
    Ok((checks, vec![t, spectrum_table(&cmp.spectrum)]))
}

/// Rectangular duty cycle used by the impedance scenario.
pub const RECT_NU: f64 = 0.65;

/// The three modulation shapes compared for impedance matching. The
/// quasi-periodic profile peaks at 2, so its depth is halved.
pub fn matched_variants(law: &InterfaceLaw) -> [(&'static str, InterfaceLaw); 3] {
    let eps = law.depth.compliance;
    let shape = |kind: ModulationKind, e: f64| {
        let mut l = *law;
        l.kind = kind;
        l.depth.compliance = e;
        l.depth.inertia = e;
        l
    };
    [
        ("sinusoidal", shape(ModulationKind::Sinusoidal, eps)),
        ("quasi_periodic", shape(ModulationKind::QuasiPeriodic, eps / 2.0)),
        ("rectangular", shape(ModulationKind::Rectangular { nu: RECT_NU }, eps)),
    ]
}

/// Peak reflected velocity at `x_r` over the incident peak.
pub fn reflected_ratio(setup: &Setup, t_end: f64, x_r: f64) -> Result<(f64, Vec<f64>, Vec<f64>), CliError> {
    let Forcing::CauchyPulse { t0 } = setup.source.forcing else {
        return Err(CliError::Config("impedance needs a pulse source (front or t0)".into()));
    };
    let c = setup.material.c(Side::Minus);
    let tail = c * t0 - setup.source.duration() * c;
    if x_r >= tail {
        return Err(CliError::Config(format!(
            "receiver at {x_r} m must lie left of the initial pulse (tail at {tail} m)"
        )));
    }
    let out = run(setup.clone(), t_end, &RunRequest { receivers: vec![x_r], energy_stride: None })?;
    let mut free = setup.clone();
    free.law = InterfaceLaw::perfect();
    let incident_peak = max_abs(&modint::fdtd::initial_state(&out.grid, &free.material, &free.source)?.v);
    let v = out.receiver_v[0].clone();
    Ok((max_abs(&v) / incident_peak, out.times, v))
}

fn impedance(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let x_r = *cfg
        .receivers
        .first()
        .ok_or_else(|| CliError::Config("impedance needs one receiver left of the pulse".into()))?;
    let variants = matched_variants(&cfg.setup.law);
    let results: Vec<Result<(f64, Vec<f64>, Vec<f64>), CliError>> = variants
        .par_iter()
        .map(|(_, law)| {
            let mut s = cfg.setup.clone();
            s.law = *law;
            reflected_ratio(&s, cfg.t_end, x_r)
        })
        .collect();
    let mut checks = Vec::new();
    let mut series = Table::new("reflected", &["t", "v_sinusoidal", "v_quasi_periodic", "v_rectangular"]);
    let mut ratios = Vec::new();
    for ((name, _), r) in variants.iter().zip(results) {
        let (ratio, times, v) = r?;
        checks.push(Check::below(format!("reflected peak / incident peak ({name})"), ratio, 1e-3));
        ratios.push((times, v));
    }
    for n in 0..ratios[0].0.len() {
        series.push(vec![ratios[0].0[n], ratios[0].1[n], ratios[1].1[n], ratios[2].1[n]]);
    }
    let s = solve_scattering(&variants[0].1, &cfg.setup.material, cfg.setup.source.f_c, cfg.harmonics)?;
    checks.push(Check::below("harmonic-balance max |R_k|", s.max_reflection(), 1e-12));
    Ok((checks, vec![series, spectrum_table(&s)]))
}

/// `theta_v` for swapped source and receiver.
pub fn theta(setup: &Setup, t_end: f64, x_s: f64, x_r: f64) -> Result<f64, CliError> {
    let go = |a: f64, b: f64| -> Result<Vec<f64>, CliError> {
        let mut s = setup.clone();
        s.source.forcing = Forcing::DiracPoint { x_s: a };
        let mut out = run(s, t_end, &RunRequest { receivers: vec![b], energy_stride: None })?;
        Ok(out.receiver_v.remove(0))
    };
    let (a, b) = rayon::join(|| go(x_s, x_r), || go(x_r, x_s));
    Ok(nonreciprocity_measure(&a?, &b?, setup.source.f_c)?)
}

/// `theta_v` for `f_m = f_max i / count`, `i = 1..=count`, in input order.
pub fn theta_sweep(
    setup: &Setup,
    law: &InterfaceLaw,
    t_end: f64,
    x_s: f64,
    x_r: f64,
    f_max: f64,
    count: usize,
) -> Result<Vec<(f64, f64)>, CliError> {
    (1..=count)
        .into_par_iter()
        .map(|i| {
            let f_m = f_max * i as f64 / count as f64;
            let mut s = setup.clone();
            s.law = *law;
            s.law.f_m = f_m;
            theta(&s, t_end, x_s, x_r).map(|th| (f_m, th))
        })
        .collect()
}

/// Indices of local minima (endpoints compare with their single neighbour).
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (0..values.len())
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i + 1 == values.len() || values[i] <= values[i + 1];
            left && right
        })
        .collect()
}

/// Frequencies `p c / |l_s - l_r|` up to `f_max`.
pub fn reciprocity_frequencies(c: f64, l_s: f64, l_r: f64, f_max: f64) -> Vec<f64> {
    let d = (l_s - l_r).abs();
    if d == 0.0 {
        return Vec::new();
    }
    (1..).map(|p| p as f64 * c / d).take_while(|&f| f <= f_max).collect()
}

pub const SWEEP_MAX_HZ: f64 = 400.0;
pub const SWEEP_COUNT: usize = 100;

fn nonreciprocity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let setup = &cfg.setup;
    let Forcing::DiracPoint { x_s } = setup.source.forcing else {
        return Err(CliError::Config("nonreciprocity needs a point source x_s".into()));
    };
    let x_r = *cfg
        .receivers
        .first()
        .ok_or_else(|| CliError::Config("nonreciprocity needs a receiver".into()))?;
    let [(_, sin), (_, qp), _] = matched_variants(&setup.law);
    let a = theta_sweep(setup, &sin, cfg.t_end, x_s, x_r, SWEEP_MAX_HZ, SWEEP_COUNT)?;
    let b = theta_sweep(setup, &qp, cfg.t_end, x_s, x_r, SWEEP_MAX_HZ, SWEEP_COUNT)?;
    let mut t = Table::new("theta", &["f_m", "theta_sinusoidal", "theta_quasi_periodic"]);
    for (p, q) in a.iter().zip(&b) {
        t.push(vec![p.0, p.1, q.1]);
    }
    let mut checks = Vec::new();
    let x0 = setup.material.x0;
    let c = setup.material.c(Side::Minus);
    let (th_a, th_b): (Vec<f64>, Vec<f64>) = a.iter().zip(&b).map(|(p, q)| (p.1, q.1)).unzip();
    let max_a = th_a.iter().cloned().fold(0.0, f64::max);
    let minima = local_minima(&th_a);
    for f in reciprocity_frequencies(c, (x_s - x0).abs(), (x_r - x0).abs(), SWEEP_MAX_HZ) {
        let best = minima
            .iter()
            .filter(|&&i| (a[i].0 - f).abs() <= 4.0)
            .map(|&i| th_a[i] / max_a)
            .fold(f64::INFINITY, f64::min);
        checks.push(Check::below(format!("sinusoidal minimum near {f:.1} Hz / max"), best, 0.01));
    }
    let max_b = th_b.iter().cloned().fold(0.0, f64::max);
    let lowest = local_minima(&th_b)
        .into_iter()
        .map(|i| th_b[i] / max_b)
        .fold(f64::INFINITY, f64::min);
    if (x_s - x0).abs() != (x_r - x0).abs() {
        checks.push(Check::holds("quasi-periodic minima stay above 1% of max", lowest >= 0.01));
    }
    Ok((checks, vec![t]))
}
