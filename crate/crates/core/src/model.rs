//! Domain types: bulk media, the modulated interface law and the source signal.
//!
//! The interface carries four channels (compliance, inertia and their two
//! dissipation terms). Each channel is `X(t) = X0 (1 + eps_X phi(t))` with a
//! shared modulation function `phi`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest time derivative of the modulation the interface scheme asks for.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// Side of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Piecewise-constant bulk parameters on either side of the interface at `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialHalfSpaces {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub x0: f64,
}

impl MaterialHalfSpaces {
    pub fn new(rho_minus: f64, c_minus: f64, rho_plus: f64, c_plus: f64, x0: f64) -> Result<Self> {
        let m = Self {
            rho_minus,
            rho_plus,
            c_minus,
            c_plus,
            x0,
        };
        m.validate()?;
        Ok(m)
    }

    /// Same medium on both sides.
    pub fn homogeneous(rho: f64, c: f64, x0: f64) -> Result<Self> {
        Self::new(rho, c, rho, c, x0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho_minus", self.rho_minus),
            ("rho_plus", self.rho_plus),
            ("c_minus", self.c_minus),
            ("c_plus", self.c_plus),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.x0.is_finite() {
            return Err(Error::Config("x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn side_of(&self, x: f64) -> Side {
        if x < self.x0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }

    pub fn rho(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.rho_minus,
            Side::Plus => self.rho_plus,
        }
    }

    pub fn c(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.c_minus,
            Side::Plus => self.c_plus,
        }
    }

    /// Young's modulus `rho c^2`.
    pub fn young(&self, side: Side) -> f64 {
        self.rho(side) * self.c(side).powi(2)
    }

    /// Acoustic impedance `rho c`.
    pub fn impedance(&self, side: Side) -> f64 {
        self.rho(side) * self.c(side)
    }

    pub fn c_max(&self) -> f64 {
        self.c_minus.max(self.c_plus)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rho_minus == self.rho_plus && self.c_minus == self.c_plus
    }
}

/// Time profile shared by all modulated channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModulationKind {
    Sinusoidal,
    /// `sin(Ωt) + sin(√2 Ωt)`.
    QuasiPeriodic,
    /// Square wave: `-1` on the first `nu` fraction of each period, `+1` after.
    Rectangular { nu: f64 },
}

impl ModulationKind {
    /// `max_t |phi(t)|`.
    pub fn peak(&self) -> f64 {
        match self {
            ModulationKind::QuasiPeriodic => 2.0,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ModulationKind::Rectangular { nu } = *self {
            if !(nu > 0.0 && nu < 1.0) {
                return Err(Error::Config(format!(
                    "rectangular duty offset nu must lie in (0, 1), got {nu}"
                )));
            }
        }
        Ok(())
    }
}

/// `d^order phi / dt^order` at time `t` for angular modulation frequency `omega`.
///
/// The rectangular profile is piecewise constant, so all of its derivatives
/// are reported as zero.
pub fn modulation_phi(kind: ModulationKind, omega: f64, t: f64, order: usize) -> Result<f64> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let shifted_sin = |w: f64| w.powi(order as i32) * (w * t + order as f64 * FRAC_PI_2).sin();
    Ok(match kind {
        ModulationKind::Sinusoidal => shifted_sin(omega),
        ModulationKind::QuasiPeriodic => shifted_sin(omega) + shifted_sin(SQRT_2 * omega),
        ModulationKind::Rectangular { nu } => {
            if order > 0 {
                0.0
            } else {
                let phase = (omega * t / (2.0 * PI)).rem_euclid(1.0);
                if (phase - nu).floor() < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    })
}

/// The four interface channels, or their time derivatives of a given order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InterfaceParams {
    /// Compliance `C` (m/Pa).
    pub compliance: f64,
    /// Inertia `M` (kg/m^2).
    pub inertia: f64,
    /// Compliance dissipation `Q_C` (m^2 s/kg).
    pub compliance_loss: f64,
    /// Inertia dissipation `Q_M` (kg/(m^2 s)).
    pub inertia_loss: f64,
}

impl InterfaceParams {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.compliance,
            self.inertia,
            self.compliance_loss,
            self.inertia_loss,
        ]
    }

    fn map2(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            compliance: f(self.compliance, other.compliance),
            inertia: f(self.inertia, other.inertia),
            compliance_loss: f(self.compliance_loss, other.compliance_loss),
            inertia_loss: f(self.inertia_loss, other.inertia_loss),
        }
    }
}

/// Jump-condition parameters with their modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceLaw {
    /// Base values `C0, M0, QC0, QM0`.
    pub base: InterfaceParams,
    /// Dimensionless modulation depths `eps_X`, one per channel.
    pub depth: InterfaceParams,
    pub kind: ModulationKind,
    /// Modulation frequency (Hz).
    pub f_m: f64,
    /// Accept depths that let a channel change sign (a warning is logged instead).
    #[serde(default)]
    pub allow_sign_change: bool,
}

impl InterfaceLaw {
    /// Perfect bonding: every channel zero.
    pub fn perfect() -> Self {
        Self::fixed(InterfaceParams::default())
    }

    /// Unmodulated law.
    pub fn fixed(base: InterfaceParams) -> Self {
        Self {
            base,
            depth: InterfaceParams::default(),
            kind: ModulationKind::Sinusoidal,
            f_m: 0.0,
            allow_sign_change: false,
        }
    }

    /// Spring-mass law from a stiffness `K0 = 1/C0` (Pa/m) and an inertia.
    pub fn spring_mass(stiffness: f64, inertia: f64) -> Self {
        let compliance = if stiffness > 0.0 { 1.0 / stiffness } else { 0.0 };
        Self::fixed(InterfaceParams {
            compliance,
            inertia,
            ..Default::default()
        })
    }

    pub fn modulated(mut self, kind: ModulationKind, f_m: f64, depth: InterfaceParams) -> Self {
        self.kind = kind;
        self.f_m = f_m;
        self.depth = depth;
        self
    }

    /// Same depth on the compliance and inertia channels.
    pub fn with_depth(self, kind: ModulationKind, f_m: f64, eps: f64) -> Self {
        self.modulated(
            kind,
            f_m,
            InterfaceParams {
                compliance: eps,
                inertia: eps,
                ..Default::default()
            },
        )
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f_m
    }

    pub fn period(&self) -> Option<f64> {
        (self.f_m > 0.0).then(|| 1.0 / self.f_m)
    }

    pub fn is_static(&self) -> bool {
        self.f_m == 0.0 || self.depth.as_array().iter().all(|&e| e == 0.0)
    }

    pub fn is_perfect(&self) -> bool {
        self.base.as_array().iter().all(|&x| x == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if !(self.f_m.is_finite() && self.f_m >= 0.0) {
            return Err(Error::Config(format!(
                "modulation frequency must be non-negative, got {}",
                self.f_m
            )));
        }
        let names = ["C0", "M0", "QC0", "QM0"];
        let peak = self.kind.peak();
        for ((name, base), eps) in names
            .iter()
            .zip(self.base.as_array())
            .zip(self.depth.as_array())
        {
            if !(base.is_finite() && base >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {base}")));
            }
            if !eps.is_finite() {
                return Err(Error::Config(format!("depth of {name} must be finite")));
            }
            if base > 0.0 && eps.abs() * peak >= 1.0 {
                if self.allow_sign_change {
                    log::warn!(
                        "{name} modulation depth {eps} with peak |phi| = {peak} lets the channel change sign"
                    );
                } else {
                    return Err(Error::Config(format!(
                        "depth of {name} must satisfy |eps| * {peak} < 1, got {eps}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest compliance / inertia value sampled over `[t_start, t_end]`.
    ///
    /// Logs a warning when a positive channel reaches zero or below.
    pub fn check_window(&self, t_start: f64, t_end: f64, samples: usize) -> InterfaceParams {
        let mut min = InterfaceParams {
            compliance: f64::INFINITY,
            inertia: f64::INFINITY,
            compliance_loss: f64::INFINITY,
            inertia_loss: f64::INFINITY,
        };
        let n = samples.max(2);
        for i in 0..n {
            let t = t_start + (t_end - t_start) * i as f64 / (n - 1) as f64;
            if let Ok(p) = interface_params(self, t, 0) {
                min = min.map2(&p, f64::min);
            }
        }
        let names = ["compliance", "inertia", "compliance loss", "inertia loss"];
        for ((name, base), m) in names
            .iter()
            .zip(self.base.as_array())
            .zip(min.as_array())
        {
            if base > 0.0 && m <= 0.0 {
                log::warn!("{name} reaches {m:.3e} <= 0 inside [{t_start}, {t_end}] s");
            }
        }
        min
    }
}

/// Channel values (`order = 0`) or their `order`-th time derivatives at `t`.
pub fn interface_params(law: &InterfaceLaw, t: f64, order: usize) -> Result<InterfaceParams> {
    if law.f_m == 0.0 {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        return Ok(if order == 0 {
            law.base
        } else {
            InterfaceParams::default()
        });
    }
    let phi = modulation_phi(law.kind, law.omega(), t, order)?;
    Ok(law.base.map2(&law.depth, |x0, eps| {
        if order == 0 {
            x0 * (1.0 + eps * phi)
        } else {
            x0 * eps * phi
        }
    }))
}

/// Weights of the four truncated sinusoids of the source wavelet.
pub const WAVELET_WEIGHTS: [(i64, i64); 4] = [(1, 1), (-21, 32), (63, 768), (-1, 512)];

/// Source wavelet: `sum a_m sin(2^(m-1) ω_c ξ)` on `0 < ξ < 1/f_c`, zero elsewhere.
///
/// Its first six derivatives vanish at both ends of the support.
pub fn source_signal(f_c: f64, xi: f64) -> f64 {
    if !(xi > 0.0 && xi < 1.0 / f_c) {
        return 0.0;
    }
    let omega_c = 2.0 * PI * f_c;
    WAVELET_WEIGHTS
        .iter()
        .enumerate()
        .map(|(m, &(num, den))| {
            let a = num as f64 / den as f64;
            a * ((1u32 << m) as f64 * omega_c * xi).sin()
        })
        .sum()
}

/// Hann-windowed tone burst of `cycles` periods at `f_c`.
pub fn tone_burst(f_c: f64, cycles: f64, xi: f64) -> f64 {
    let duration = cycles / f_c;
    if !(xi > 0.0 && xi < duration) {
        return 0.0;
    }
    let window = (PI * xi / duration).sin().powi(2);
    window * (2.0 * PI * f_c * xi).sin()
}

/// Time signature of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Waveform {
    /// The four-sinusoid wavelet of [`source_signal`].
    Wavelet,
    /// Narrowband burst, see [`tone_burst`].
    ToneBurst { cycles: f64 },
    /// `sin(2π f_c t)` switched on with a smooth ramp of `ramp_cycles` periods.
    Continuous { ramp_cycles: f64 },
}

/// How the source enters the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Forcing {
    /// Right-going initial data `v = S(t0 - x/c)`, `σ = -ρ c v`.
    CauchyPulse { t0: f64 },
    /// Point force `S(t) δ(x - x_s)` from zero initial data.
    DiracPoint { x_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Central frequency (Hz).
    pub f_c: f64,
    pub forcing: Forcing,
    pub amplitude: f64,
    pub waveform: Waveform,
}

impl SourceSpec {
    pub fn cauchy(f_c: f64, t0: f64) -> Self {
        Self {
            f_c,
            forcing: Forcing::CauchyPulse { t0 },
            amplitude: 1.0,
            waveform: Waveform::Wavelet,
        }
    }

    pub fn point(f_c: f64, x_s: f64) -> Self {
        Self {
            f_c,
            forcing: Forcing::DiracPoint { x_s },
            amplitude: 1.0,
            waveform: Waveform::Wavelet,
        }
    }

    pub fn with_waveform(mut self, waveform: Waveform) -> Self {
        self.waveform = waveform;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Length of the support of the signal in time (infinite for continuous forcing).
    pub fn duration(&self) -> f64 {
        match self.waveform {
            Waveform::Wavelet => 1.0 / self.f_c,
            Waveform::ToneBurst { cycles } => cycles / self.f_c,
            Waveform::Continuous { .. } => f64::INFINITY,
        }
    }

    /// Scaled source value `amplitude * S(ξ)`.
    pub fn signal(&self, xi: f64) -> f64 {
        let s = match self.waveform {
            Waveform::Wavelet => source_signal(self.f_c, xi),
            Waveform::ToneBurst { cycles } => tone_burst(self.f_c, cycles, xi),
            Waveform::Continuous { ramp_cycles } => {
                if xi <= 0.0 {
                    0.0
                } else {
                    let ramp_len = ramp_cycles / self.f_c;
                    let ramp = if xi < ramp_len {
                        (0.5 * PI * xi / ramp_len).sin().powi(2)
                    } else {
                        1.0
                    };
                    ramp * (2.0 * PI * self.f_c * xi).sin()
                }
            }
        };
        self.amplitude * s
    }

    pub fn validate(&self, material: &MaterialHalfSpaces, length: f64) -> Result<()> {
        if !(self.f_c.is_finite() && self.f_c > 0.0) {
            return Err(Error::Config(format!(
                "central frequency must be positive, got {}",
                self.f_c
            )));
        }
        match self.waveform {
            Waveform::ToneBurst { cycles } if !(cycles > 0.0) => {
                return Err(Error::Config("tone burst needs a positive cycle count".into()))
            }
            Waveform::Continuous { ramp_cycles } if !(ramp_cycles >= 0.0) => {
                return Err(Error::Config("ramp length must be non-negative".into()))
            }
            _ => {}
        }
        match self.forcing {
            Forcing::CauchyPulse { t0 } => {
                if matches!(self.waveform, Waveform::Continuous { .. }) {
                    return Err(Error::Config(
                        "a Cauchy pulse needs a compactly supported waveform".into(),
                    ));
                }
                let c = material.c_minus;
                let (lo, hi) = (c * (t0 - self.duration()), c * t0);
                if !(lo > 0.0 && hi < material.x0) {
                    return Err(Error::Config(format!(
                        "initial pulse support [{lo:.3}, {hi:.3}] m must lie inside (0, x0 = {})",
                        material.x0
                    )));
                }
            }
            Forcing::DiracPoint { x_s } => {
                if !(x_s > 0.0 && x_s < length) {
                    return Err(Error::Config(format!(
                        "source position {x_s} lies outside the domain"
                    )));
                }
                if x_s == material.x0 {
                    return Err(Error::Config("source cannot sit on the interface".into()));
                }
            }
        }
        Ok(())
    }
}
