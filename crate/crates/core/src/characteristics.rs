//! Reference solutions from Riemann invariants.
//!
//! With `J^R = ½(v - σ/Z)` and `J^L = ½(v + σ/Z)` constant along `dx/dt = c`
//! and `dx/dt = -c`, a right-going Cauchy pulse hitting the interface reduces
//! the problem to one scalar ODE for the transmitted trace: `v+` when only the
//! compliance channels are active, `σ+` when only the inertia channels are.
//! The trace is integrated by RK4 and the fields anywhere follow by
//! travelling back along the characteristics.

use crate::error::{Error, Result};
use crate::model::{interface_params, Forcing, InterfaceLaw, MaterialHalfSpaces, Side, SourceSpec};

/// Which pair of channels the law uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// `C`, `Q_C` only: stress is continuous, the trace is `v+`.
    Compliance,
    /// `M`, `Q_M` only: velocity is continuous, the trace is `σ+`.
    Inertia,
}

impl Channel {
    /// Channel used by `law`, or an error if both are active.
    pub fn of(law: &InterfaceLaw) -> Result<Self> {
        let b = &law.base;
        let c_active = b.compliance > 0.0 || b.compliance_loss > 0.0;
        let m_active = b.inertia > 0.0 || b.inertia_loss > 0.0;
        match (c_active, m_active) {
            (true, true) => Err(Error::Config(
                "no characteristics solution when compliance and inertia channels are both active"
                    .into(),
            )),
            (false, true) => Ok(Channel::Inertia),
            _ => Ok(Channel::Compliance),
        }
    }
}

#[derive(Debug, Clone)]
enum Trace {
    /// Samples of the trace and its derivative on a uniform time grid from 0.
    Ode { h: f64, y: Vec<f64>, dy: Vec<f64> },
    /// No stored derivative term: the trace is algebraic in the incident wave.
    Closed,
}

/// Interface trace plus what is needed to rebuild `(v, σ)` anywhere.
#[derive(Debug, Clone)]
pub struct CharacteristicSolution {
    pub material: MaterialHalfSpaces,
    pub law: InterfaceLaw,
    pub source: SourceSpec,
    pub channel: Channel,
    t0: f64,
    trace: Trace,
}

fn cauchy_offset(source: &SourceSpec) -> Result<f64> {
    match source.forcing {
        Forcing::CauchyPulse { t0 } => Ok(t0),
        Forcing::DiracPoint { .. } => Err(Error::Config(
            "the characteristics solution needs a Cauchy pulse".into(),
        )),
    }
}

/// `J0R(y) = S(t0 - y / c-)`: right-going invariant of the initial data.
fn j0r(source: &SourceSpec, t0: f64, c: f64, y: f64) -> f64 {
    source.signal(t0 - y / c)
}

impl CharacteristicSolution {
    /// Incident invariant at `x0-` at time `t`.
    pub fn incident(&self, t: f64) -> f64 {
        let c0 = self.material.c(Side::Minus);
        j0r(&self.source, self.t0, c0, self.material.x0 - c0 * t)
    }

    fn impedances(&self) -> (f64, f64) {
        (
            self.material.impedance(Side::Minus),
            self.material.impedance(Side::Plus),
        )
    }

    /// Right-hand side of the trace ODE.
    fn rhs(&self, t: f64, y: f64) -> Result<f64> {
        let (z0, z1) = self.impedances();
        let p = interface_params(&self.law, t, 0)?;
        let dp = interface_params(&self.law, t, 1)?;
        let j = self.incident(t);
        Ok(match self.channel {
            Channel::Compliance => {
                if !(p.compliance > 0.0) {
                    return Err(Error::SingularCompliance { value: p.compliance, t });
                }
                let k = 1.0 + z1 / z0 + z1 * (dp.compliance + p.compliance_loss);
                (2.0 * j - k * y) / (z1 * p.compliance)
            }
            Channel::Inertia => {
                if !(p.inertia > 0.0) {
                    return Err(Error::SingularCompliance { value: p.inertia, t });
                }
                let k = 1.0 + z0 / z1 + (dp.inertia + p.inertia_loss) / z1;
                -(z1 / p.inertia) * (2.0 * z0 * j + k * y)
            }
        })
    }

    /// Algebraic trace when the differential channel is absent.
    fn closed_trace(&self, t: f64) -> f64 {
        let (z0, z1) = self.impedances();
        let p = interface_params(&self.law, t, 0).unwrap_or_default();
        let j = self.incident(t);
        match self.channel {
            Channel::Compliance => 2.0 * j / (1.0 + z1 / z0 + z1 * p.compliance_loss),
            Channel::Inertia => -2.0 * z0 * j / (1.0 + z0 / z1 + p.inertia_loss / z1),
        }
    }

    /// The interface trace: `v+(t)` or `σ+(t)`; zero for `t <= 0`.
    pub fn trace(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.trace {
            Trace::Closed => self.closed_trace(t),
            Trace::Ode { h, y, dy } => {
                let s = t / h;
                let i = (s.floor() as usize).min(y.len().saturating_sub(2));
                let u = s - i as f64;
                // cubic Hermite between samples i and i+1
                let (h00, h10, h01, h11) = (
                    (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u),
                    u * (1.0 - u) * (1.0 - u),
                    u * u * (3.0 - 2.0 * u),
                    u * u * (u - 1.0),
                );
                h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]
            }
        }
    }

    /// Last time covered by the trace.
    pub fn t_end(&self) -> f64 {
        match &self.trace {
            Trace::Ode { h, y, .. } => h * (y.len() - 1) as f64,
            Trace::Closed => f64::INFINITY,
        }
    }

    /// `(v, σ)` at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let m = &self.material;
        let (z0, z1) = self.impedances();
        let (c0, c1) = (m.c(Side::Minus), m.c(Side::Plus));
        if x < m.x0 {
            let jr = j0r(&self.source, self.t0, c0, x - c0 * t);
            let t_a = t - (m.x0 - x) / c0;
            // reflected invariant leaving x0- at t_a
            let jl = if t_a > 0.0 {
                let tr = self.trace(t_a);
                let j = self.incident(t_a);
                match self.channel {
                    Channel::Compliance => j - (z1 / z0) * tr,
                    Channel::Inertia => -tr / z1 - j,
                }
            } else {
                0.0
            };
            (jr + jl, z0 * (jl - jr))
        } else {
            let t_b = t - (x - m.x0) / c1;
            let tr = self.trace(t_b);
            match self.channel {
                Channel::Compliance => (tr, -z1 * tr),
                Channel::Inertia => (-tr / z1, tr),
            }
        }
    }
}

/// Default RK4 step: a tenth of the scheme's time step.
pub fn default_step(dt: f64) -> f64 {
    dt / 10.0
}

fn integrate(mut sol: CharacteristicSolution, t_end: f64, step: f64) -> Result<CharacteristicSolution> {
    if !(step > 0.0 && t_end > 0.0) {
        return Err(Error::Config("ODE step and end time must be positive".into()));
    }
    let n = (t_end / step).ceil() as usize + 1;
    let h = t_end / n as f64;
    let mut y = Vec::with_capacity(n + 2);
    let mut dy = Vec::with_capacity(n + 2);
    let mut yi = 0.0;
    for i in 0..=n + 1 {
        let t = i as f64 * h;
        let k1 = sol.rhs(t, yi)?;
        y.push(yi);
        dy.push(k1);
        if i == n + 1 {
            break;
        }
        let k2 = sol.rhs(t + 0.5 * h, yi + 0.5 * h * k1)?;
        let k3 = sol.rhs(t + 0.5 * h, yi + 0.5 * h * k2)?;
        let k4 = sol.rhs(t + h, yi + h * k3)?;
        yi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    sol.trace = Trace::Ode { h, y, dy };
    Ok(sol)
}

fn base(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    source: &SourceSpec,
    channel: Channel,
) -> Result<CharacteristicSolution> {
    material.validate()?;
    let t0 = cauchy_offset(source)?;
    Ok(CharacteristicSolution {
        material: *material,
        law: *law,
        source: *source,
        channel,
        t0,
        trace: Trace::Closed,
    })
}

/// Compliance-only law (`M0 = QM0 = 0`, `C0 > 0`), integrated up to `t_end`.
pub fn analytic_solution_c(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    source: &SourceSpec,
    t_end: f64,
    step: f64,
) -> Result<CharacteristicSolution> {
    if law.base.inertia != 0.0 || law.base.inertia_loss != 0.0 {
        return Err(Error::Config("compliance solution needs M0 = QM0 = 0".into()));
    }
    if !(law.base.compliance > 0.0) {
        return Err(Error::Config(
            "compliance solution needs C0 > 0; use the dissipation-only form".into(),
        ));
    }
    integrate(base(material, law, source, Channel::Compliance)?, t_end, step)
}

/// Inertia-only law (`C0 = QC0 = 0`, `M0 > 0`), integrated up to `t_end`.
pub fn analytic_solution_m(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    source: &SourceSpec,
    t_end: f64,
    step: f64,
) -> Result<CharacteristicSolution> {
    if law.base.compliance != 0.0 || law.base.compliance_loss != 0.0 {
        return Err(Error::Config("inertia solution needs C0 = QC0 = 0".into()));
    }
    if !(law.base.inertia > 0.0) {
        return Err(Error::Config(
            "inertia solution needs M0 > 0; use the dissipation-only form".into(),
        ));
    }
    integrate(base(material, law, source, Channel::Inertia)?, t_end, step)
}

/// Dissipation-only law: one of `QC0`, `QM0` positive, `C0 = M0 = 0`.
pub fn analytic_solution_qonly(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    source: &SourceSpec,
) -> Result<CharacteristicSolution> {
    let b = &law.base;
    if b.compliance != 0.0 || b.inertia != 0.0 {
        return Err(Error::Config("dissipation-only solution needs C0 = M0 = 0".into()));
    }
    let channel = match (b.compliance_loss > 0.0, b.inertia_loss > 0.0) {
        (true, false) => Channel::Compliance,
        (false, true) => Channel::Inertia,
        _ => {
            return Err(Error::Config(
                "dissipation-only solution needs exactly one of QC0, QM0 positive".into(),
            ))
        }
    };
    base(material, law, source, channel)
}

/// Pick the right solution for a single-channel law.
pub fn analytic_solution(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    source: &SourceSpec,
    t_end: f64,
    step: f64,
) -> Result<CharacteristicSolution> {
    let b = &law.base;
    if b.compliance == 0.0 && b.inertia == 0.0 && (b.compliance_loss > 0.0 || b.inertia_loss > 0.0)
    {
        return analytic_solution_qonly(material, law, source);
    }
    match Channel::of(law)? {
        Channel::Compliance if b.compliance > 0.0 => {
            analytic_solution_c(material, law, source, t_end, step)
        }
        Channel::Inertia => analytic_solution_m(material, law, source, t_end, step),
        Channel::Compliance => {
            // perfect bonding
            base(material, law, source, Channel::Compliance)
        }
    }
}

/// Pointwise bounds for a dissipation-only law, from the static solutions at
/// the extreme values of the modulated channel.
#[derive(Debug, Clone)]
pub struct Envelope {
    low: CharacteristicSolution,
    high: CharacteristicSolution,
}

/// `(lower, upper)` of `v` and of `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeBounds {
    pub v: (f64, f64),
    pub sigma: (f64, f64),
}

impl Envelope {
    pub fn new(
        material: &MaterialHalfSpaces,
        law: &InterfaceLaw,
        source: &SourceSpec,
    ) -> Result<Self> {
        let sol = analytic_solution_qonly(material, law, source)?;
        let peak = law.kind.peak();
        let (q0, eps) = match sol.channel {
            Channel::Compliance => (law.base.compliance_loss, law.depth.compliance_loss),
            Channel::Inertia => (law.base.inertia_loss, law.depth.inertia_loss),
        };
        let extreme = |value: f64| -> Result<CharacteristicSolution> {
            let mut l = InterfaceLaw::fixed(Default::default());
            match sol.channel {
                Channel::Compliance => l.base.compliance_loss = value,
                Channel::Inertia => l.base.inertia_loss = value,
            }
            let mut s = sol.clone();
            s.law = l;
            Ok(s)
        };
        let lo = q0 * (1.0 - eps.abs() * peak);
        let hi = q0 * (1.0 + eps.abs() * peak);
        Ok(Self {
            low: extreme(lo.max(0.0))?,
            high: extreme(hi)?,
        })
    }

    pub fn bounds(&self, x: f64, t: f64) -> EnvelopeBounds {
        let (va, sa) = self.low.eval(x, t);
        let (vb, sb) = self.high.eval(x, t);
        EnvelopeBounds {
            v: (va.min(vb), va.max(vb)),
            sigma: (sa.min(sb), sa.max(sb)),
        }
    }
}

/// Convenience wrapper around [`Envelope`].
pub fn envelope_bounds(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    source: &SourceSpec,
    x: f64,
    t: f64,
) -> Result<EnvelopeBounds> {
    Ok(Envelope::new(material, law, source)?.bounds(x, t))
}

/// `g(a, b) = 1 + (a/b)(sqrt(1 - b²) - 1)`, equal to 1 at `b = 0`.
pub fn g_lemma(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else {
        1.0 + (a / b) * ((1.0 - b * b).sqrt() - 1.0)
    }
}

/// Period mean of the decay coefficient `a(t)` of the compliance trace ODE in a
/// homogeneous medium of impedance `z`, for sinusoidal modulation of `C` and `Q_C`.
pub fn mean_alpha(z: f64, c0: f64, qc0: f64, eps_c: f64, eps_qc: f64) -> f64 {
    let root = (1.0 - eps_c * eps_c).sqrt();
    -(2.0 + z * qc0 * g_lemma(eps_qc, eps_c)) / (z * c0 * root)
}

/// `a(t) = -(2 + Z (C'(t) + Q_C(t))) / (Z C(t))`.
pub fn alpha_t(z: f64, law: &InterfaceLaw, t: f64) -> Result<f64> {
    let p = interface_params(law, t, 0)?;
    let dp = interface_params(law, t, 1)?;
    Ok(-(2.0 + z * (dp.compliance + p.compliance_loss)) / (z * p.compliance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InterfaceParams, ModulationKind};
    use approx::assert_relative_eq;

    fn plexi() -> MaterialHalfSpaces {
        MaterialHalfSpaces::homogeneous(1200.0, 2800.0, 200.0).unwrap()
    }

    fn pulse() -> SourceSpec {
        SourceSpec::cauchy(45.0, 172.0 / 2800.0)
    }

    #[test]
    fn free_translation_before_arrival() {
        let law = InterfaceLaw::spring_mass(2.45e9, 0.0);
        let sol = analytic_solution_c(&plexi(), &law, &pulse(), 0.05, 1e-6).unwrap();
        for &(x, t) in &[(150.0, 0.002), (120.0, 0.0), (180.0, 0.004)] {
            let (v, s) = sol.eval(x, t);
            let exact = pulse().signal(172.0 / 2800.0 - (x - 2800.0 * t) / 2800.0);
            assert_relative_eq!(v, exact, epsilon = 1e-15);
            assert_relative_eq!(s, -1200.0 * 2800.0 * exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn perfect_inertia_free_transmission() {
        let law = InterfaceLaw::fixed(InterfaceParams { inertia: 1.0, ..Default::default() });
        let sol = analytic_solution_m(&plexi(), &law, &pulse(), 0.05, 1e-7).unwrap();
        let (v, _) = sol.eval(300.0, 0.05);
        let exact = pulse().signal(172.0 / 2800.0 - (300.0 - 2800.0 * 0.05) / 2800.0);
        assert_relative_eq!(v, exact, epsilon = 1e-3);
    }

    #[test]
    fn zero_loss_transmits() {
        let law = InterfaceLaw::fixed(InterfaceParams {
            compliance_loss: 1e-30,
            ..Default::default()
        });
        let sol = analytic_solution_qonly(&plexi(), &law, &pulse()).unwrap();
        let t = 0.02;
        assert_relative_eq!(sol.trace(t), sol.incident(t), max_relative = 1e-20, epsilon = 1e-20);
    }

    #[test]
    fn rk4_step_halving_is_fourth_order() {
        let law = InterfaceLaw::spring_mass(2.45e9, 0.0).with_depth(ModulationKind::Sinusoidal, 100.0, 0.75);
        let tr = |h: f64| analytic_solution_c(&plexi(), &law, &pulse(), 0.04, h).unwrap().trace(0.02);
        let (a, b, c) = (tr(2e-5), tr(1e-5), tr(5e-6));
        let ratio = (a - b).abs() / (b - c).abs();
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn singular_compliance_is_reported() {
        let mut law = InterfaceLaw::spring_mass(2.45e9, 0.0).with_depth(ModulationKind::QuasiPeriodic, 100.0, 0.75);
        law.allow_sign_change = true;
        let r = analytic_solution_c(&plexi(), &law, &pulse(), 0.05, 1e-6);
        assert!(matches!(r, Err(Error::SingularCompliance { .. })));
    }

    #[test]
    fn both_channels_rejected() {
        let law = InterfaceLaw::spring_mass(2.45e9, 2e4);
        assert!(Channel::of(&law).is_err());
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_lemma(0.0, 0.5), 1.0);
        assert_relative_eq!(g_lemma(0.5, 0.5), 0.75f64.sqrt(), max_relative = 1e-15);
        assert_eq!(g_lemma(0.3, 0.0), 1.0);
    }
}
