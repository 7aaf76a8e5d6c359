//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[grid]`, `[material]`,
//! `[interface]`, `[modulation]`, `[source]`, `[esim]` and `[run]`. Every
//! section is optional except `[source]`; unknown keys are rejected.

use std::path::PathBuf;

use serde::Deserialize;

use modint::esim::{DerivativeMode, EsimConfig};
use modint::fdtd::BoundaryPolicy;
use modint::model::{
    InterfaceLaw, InterfaceParams, MaterialHalfSpaces, ModulationKind, SourceSpec, Waveform,
};
use modint::simulation::Setup;

use crate::CliError;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    output: Option<PathBuf>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    material: RawMaterial,
    #[serde(default)]
    interface: RawInterface,
    #[serde(default)]
    modulation: RawModulation,
    source: Option<RawSource>,
    #[serde(default)]
    esim: RawEsim,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default = "default_length")]
    length: f64,
    #[serde(default = "default_nx")]
    nx: usize,
    #[serde(default = "default_zeta")]
    zeta: f64,
    #[serde(default)]
    boundary: RawBoundary,
}

impl Default for RawGrid {
    fn default() -> Self {
        Self {
            length: default_length(),
            nx: default_nx(),
            zeta: default_zeta(),
            boundary: RawBoundary::default(),
        }
    }
}

fn default_length() -> f64 {
    400.0
}
fn default_nx() -> usize {
    400
}
fn default_zeta() -> f64 {
    0.95
}

#[derive(Debug, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum RawBoundary {
    #[default]
    Absorbing,
    Reflecting,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default = "default_c")]
    c: f64,
    rho_plus: Option<f64>,
    c_plus: Option<f64>,
    x0: Option<f64>,
}

impl Default for RawMaterial {
    fn default() -> Self {
        Self {
            rho: default_rho(),
            c: default_c(),
            rho_plus: None,
            c_plus: None,
            x0: None,
        }
    }
}

fn default_rho() -> f64 {
    1200.0
}
fn default_c() -> f64 {
    2800.0
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInterface {
    stiffness: Option<f64>,
    compliance: Option<f64>,
    #[serde(default)]
    inertia: f64,
    #[serde(default)]
    compliance_loss: f64,
    #[serde(default)]
    inertia_loss: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawModulation {
    #[serde(default)]
    kind: RawKind,
    nu: Option<f64>,
    #[serde(default)]
    f_m: f64,
    eps: Option<f64>,
    eps_c: Option<f64>,
    eps_m: Option<f64>,
    #[serde(default)]
    eps_qc: f64,
    #[serde(default)]
    eps_qm: f64,
    #[serde(default)]
    allow_sign_change: bool,
}

#[derive(Debug, Deserialize, Default, Clone, Copy, PartialEq)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    #[default]
    Sinusoidal,
    QuasiPeriodic,
    Rectangular,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    f_c: f64,
    x_s: Option<f64>,
    front: Option<f64>,
    t0: Option<f64>,
    #[serde(default)]
    waveform: RawWaveform,
    cycles: Option<f64>,
    ramp_cycles: Option<f64>,
    #[serde(default = "default_amplitude")]
    amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum RawWaveform {
    #[default]
    Wavelet,
    ToneBurst,
    Continuous,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEsim {
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_q")]
    q: usize,
    #[serde(default = "default_true")]
    joint_fit: bool,
    #[serde(default)]
    frozen: bool,
}

impl Default for RawEsim {
    fn default() -> Self {
        Self {
            k: default_k(),
            q: default_q(),
            joint_fit: true,
            frozen: false,
        }
    }
}

fn default_k() -> usize {
    5
}
fn default_q() -> usize {
    EsimConfig::default().q
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    t_end: Option<f64>,
    #[serde(default)]
    receivers: Vec<f64>,
    energy_stride: Option<usize>,
    window: Option<f64>,
    harmonics: Option<usize>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setup: Setup,
    pub t_end: f64,
    pub receivers: Vec<f64>,
    pub energy_stride: Option<usize>,
    /// Length of the spectral analysis window (s), for harmonic runs.
    pub window: Option<f64>,
    /// Harmonic truncation `N`.
    pub harmonics: usize,
    pub output: Option<PathBuf>,
    pub scenario: Option<String>,
}

impl ExperimentConfig {
    /// Courant-limited time step of the configured grid.
    pub fn dt(&self) -> f64 {
        let dx = self.setup.length / self.setup.nx as f64;
        self.setup.zeta * dx / self.setup.material.c_max()
    }

    pub fn with_nx(mut self, nx: usize) -> Self {
        self.setup.nx = nx;
        self
    }

    /// Replace the modulation frequency of the interface law.
    pub fn with_fm(mut self, f_m: f64) -> Self {
        self.setup.law.f_m = f_m;
        self
    }

    /// Re-check the invariants after overrides.
    pub fn check(&self) -> Result<(), CliError> {
        self.setup
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for &x in &self.receivers {
            if !(x > 0.0 && x < self.setup.length) {
                return Err(CliError::Config(format!(
                    "receiver at {x} m lies outside [0, {}]",
                    self.setup.length
                )));
            }
        }
        Ok(())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level when `section` is empty).
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        let line = locate(self.text, section, key)
            .or_else(|| locate_section(self.text, section))
            .unwrap_or(1);
        CliError::ConfigAt {
            line,
            message: message.into(),
        }
    }
}

fn locate_section(text: &str, section: &str) -> Option<usize> {
    text.lines()
        .position(|l| l.trim() == format!("[{section}]"))
        .map(|i| i + 1)
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(1);
        CliError::ConfigAt {
            line,
            message: e.message().to_string(),
        }
    })?;
    build(raw, &Ctx { text })
}

fn positive(ctx: &Ctx, section: &str, key: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ctx.err(section, key, format!("{key} must be > 0, got {value}")))
    }
}

fn non_negative(ctx: &Ctx, section: &str, key: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ctx.err(section, key, format!("{key} must be >= 0, got {value}")))
    }
}

fn build(raw: RawConfig, ctx: &Ctx) -> Result<ExperimentConfig, CliError> {
    let g = &raw.grid;
    let length = positive(ctx, "grid", "length", g.length)?;
    if g.nx < 16 {
        return Err(ctx.err("grid", "nx", format!("nx must be >= 16, got {}", g.nx)));
    }
    if !(g.zeta > 0.0 && g.zeta <= 1.0) {
        return Err(ctx.err("grid", "zeta", format!("zeta must lie in (0, 1], got {}", g.zeta)));
    }

    let m = &raw.material;
    let rho = positive(ctx, "material", "rho", m.rho)?;
    let c = positive(ctx, "material", "c", m.c)?;
    let rho_plus = positive(ctx, "material", "rho_plus", m.rho_plus.unwrap_or(rho))?;
    let c_plus = positive(ctx, "material", "c_plus", m.c_plus.unwrap_or(c))?;
    let x0 = m.x0.unwrap_or(length / 2.0);
    if !(x0 > 0.0 && x0 < length) {
        return Err(ctx.err("material", "x0", format!("x0 = {x0} lies outside (0, {length})")));
    }
    let material = MaterialHalfSpaces::new(rho, c, rho_plus, c_plus, x0)
        .map_err(|e| ctx.err("material", "rho", e.to_string()))?;

    let i = &raw.interface;
    let compliance = match (i.stiffness, i.compliance) {
        (Some(_), Some(_)) => {
            return Err(ctx.err("interface", "compliance", "give either stiffness or compliance"))
        }
        (Some(k), None) => 1.0 / positive(ctx, "interface", "stiffness", k)?,
        (None, Some(c)) => non_negative(ctx, "interface", "compliance", c)?,
        (None, None) => 0.0,
    };
    let base = InterfaceParams {
        compliance,
        inertia: non_negative(ctx, "interface", "inertia", i.inertia)?,
        compliance_loss: non_negative(ctx, "interface", "compliance_loss", i.compliance_loss)?,
        inertia_loss: non_negative(ctx, "interface", "inertia_loss", i.inertia_loss)?,
    };

    let md = &raw.modulation;
    let kind = match (md.kind, md.nu) {
        (RawKind::Rectangular, Some(nu)) => ModulationKind::Rectangular { nu },
        (RawKind::Rectangular, None) => {
            return Err(ctx.err("modulation", "kind", "rectangular modulation needs nu"))
        }
        (_, Some(_)) => return Err(ctx.err("modulation", "nu", "nu only applies to rectangular modulation")),
        (RawKind::Sinusoidal, None) => ModulationKind::Sinusoidal,
        (RawKind::QuasiPeriodic, None) => ModulationKind::QuasiPeriodic,
    };
    let f_m = non_negative(ctx, "modulation", "f_m", md.f_m)?;
    let depth = InterfaceParams {
        compliance: md.eps_c.or(md.eps).unwrap_or(0.0),
        inertia: md.eps_m.or(md.eps).unwrap_or(0.0),
        compliance_loss: md.eps_qc,
        inertia_loss: md.eps_qm,
    };
    let mut law = InterfaceLaw::fixed(base).modulated(kind, f_m, depth);
    law.allow_sign_change = md.allow_sign_change;
    law.validate().map_err(|e| ctx.err("modulation", "eps", e.to_string()))?;

    let s = raw
        .source
        .as_ref()
        .ok_or_else(|| CliError::ConfigAt { line: 1, message: "missing [source] section".into() })?;
    let f_c = positive(ctx, "source", "f_c", s.f_c)?;
    let mut source = match (s.x_s, s.front, s.t0) {
        (Some(x_s), None, None) => SourceSpec::point(f_c, x_s),
        (None, Some(front), None) => SourceSpec::cauchy(f_c, front / c),
        (None, None, Some(t0)) => SourceSpec::cauchy(f_c, t0),
        (None, None, None) => {
            return Err(ctx.err("source", "f_c", "source needs one of x_s, front or t0"))
        }
        _ => return Err(ctx.err("source", "x_s", "give only one of x_s, front or t0")),
    };
    source = source.with_amplitude(s.amplitude).with_waveform(match s.waveform {
        RawWaveform::Wavelet => Waveform::Wavelet,
        RawWaveform::ToneBurst => Waveform::ToneBurst {
            cycles: s
                .cycles
                .ok_or_else(|| ctx.err("source", "waveform", "tone_burst needs cycles"))?,
        },
        RawWaveform::Continuous => Waveform::Continuous {
            ramp_cycles: s.ramp_cycles.unwrap_or(2.0),
        },
    });
    let source_key = if s.x_s.is_some() { "x_s" } else if s.front.is_some() { "front" } else { "t0" };
    source
        .validate(&material, length)
        .map_err(|e| ctx.err("source", source_key, e.to_string()))?;

    let e = &raw.esim;
    let esim = EsimConfig {
        k: e.k,
        q: e.q,
        mode: if e.frozen { DerivativeMode::Frozen } else { DerivativeMode::Full },
        joint_fit: e.joint_fit,
    };
    esim.validate().map_err(|err| ctx.err("esim", "k", err.to_string()))?;

    let r = &raw.run;
    let t_end = positive(ctx, "run", "t_end", r.t_end.unwrap_or(0.045))?;
    for &x in &r.receivers {
        if !(x > 0.0 && x < length) {
            return Err(ctx.err("run", "receivers", format!("receiver at {x} m lies outside (0, {length})")));
        }
    }
    if let Some(w) = r.window {
        positive(ctx, "run", "window", w)?;
        if w > t_end {
            return Err(ctx.err("run", "window", "window is longer than the run"));
        }
    }
    if r.energy_stride == Some(0) {
        return Err(ctx.err("run", "energy_stride", "energy_stride must be >= 1"));
    }
    let harmonics = r.harmonics.unwrap_or(12);
    if harmonics == 0 {
        return Err(ctx.err("run", "harmonics", "harmonics must be >= 1"));
    }

    let mut setup = Setup::new(length, g.nx, material, law, source);
    setup.zeta = g.zeta;
    setup.esim = esim;
    setup.boundary = match g.boundary {
        RawBoundary::Absorbing => BoundaryPolicy::Absorbing,
        RawBoundary::Reflecting => BoundaryPolicy::ReflectingZero,
    };
    let cfg = ExperimentConfig {
        setup,
        t_end,
        receivers: r.receivers.clone(),
        energy_stride: r.energy_stride,
        window: r.window,
        harmonics,
        output: raw.output,
        scenario: raw.scenario,
    };
    cfg.setup
        .validate()
        .map_err(|err| ctx.err("source", source_key, err.to_string()))?;
    Ok(cfg)
}
