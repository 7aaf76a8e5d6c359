//! Energies, error norms, convergence slopes and spectral measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::esim::InterfaceTraces;
use crate::fdtd::{FieldState, Grid};
use crate::model::{interface_params, InterfaceLaw, MaterialHalfSpaces};

/// Energy budget at one instant (J per unit area, W per unit area).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyRecord {
    pub t: f64,
    pub bulk: f64,
    pub interface: f64,
    pub total: f64,
    /// Power injected by the forcing.
    pub power: f64,
    /// Net power entering through the two ends, `v σ |_L - v σ |_0`.
    pub boundary_flux: f64,
}

/// Bulk and interface energies of `state`; `power` is the forcing power at `state.t`.
pub fn energies(
    state: &FieldState,
    traces: &InterfaceTraces,
    law: &InterfaceLaw,
    grid: &Grid,
    material: &MaterialHalfSpaces,
    power: f64,
) -> EnergyRecord {
    let mut bulk = 0.0;
    for j in 0..state.len() {
        let side = material.side_of(grid.x(j));
        let (rho, young) = (material.rho(side), material.young(side));
        bulk += rho * state.v[j] * state.v[j] + state.sigma[j] * state.sigma[j] / young;
    }
    bulk *= 0.5 * grid.dx;
    let p = interface_params(law, state.t, 0).unwrap_or_default();
    let interface = 0.5 * p.inertia * traces.mean_v.powi(2)
        + 0.5 * p.compliance * traces.mean_sigma.powi(2);
    let n = state.len();
    let boundary_flux = if n > 0 {
        state.v[n - 1] * state.sigma[n - 1] - state.v[0] * state.sigma[0]
    } else {
        0.0
    };
    EnergyRecord {
        t: state.t,
        bulk,
        interface,
        total: bulk + interface,
        power,
        boundary_flux,
    }
}

/// Residual of the energy balance along a uniformly sampled record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BalanceResidual {
    pub t: Vec<f64>,
    pub residual: Vec<f64>,
    pub de_dt: Vec<f64>,
}

impl BalanceResidual {
    /// `max |residual| / max |dE/dt|`.
    pub fn relative_max(&self) -> f64 {
        let r = self.residual.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let d = self.de_dt.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if d == 0.0 {
            r
        } else {
            r / d
        }
    }
}

/// `dE_m/dt - P - flux + ½(M'<v>² + C'<σ>²) + Q_C<σ>² + Q_M<v>²` at the
/// interior samples, with `dE_m/dt` from fourth-order central differences.
pub fn energy_balance_residual(
    records: &[EnergyRecord],
    traces: &[InterfaceTraces],
    law: &InterfaceLaw,
) -> Result<BalanceResidual> {
    if records.len() != traces.len() {
        return Err(Error::Config("energy and trace series differ in length".into()));
    }
    let n = records.len();
    if n < 5 {
        return Ok(BalanceResidual::default());
    }
    let h = records[1].t - records[0].t;
    for w in records.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-6 * h.abs() {
            return Err(Error::Config("energy record is not uniformly sampled".into()));
        }
    }
    let mut out = BalanceResidual::default();
    for i in 2..n - 2 {
        let e = |k: usize| records[k].total;
        let de = (-e(i + 2) + 8.0 * e(i + 1) - 8.0 * e(i - 1) + e(i - 2)) / (12.0 * h);
        let t = records[i].t;
        let p = interface_params(law, t, 0)?;
        let dp = interface_params(law, t, 1)?;
        let tr = &traces[i];
        let (mv2, ms2) = (tr.mean_v.powi(2), tr.mean_sigma.powi(2));
        let res = de - records[i].power - records[i].boundary_flux
            + 0.5 * (dp.inertia * mv2 + dp.compliance * ms2)
            + p.compliance_loss * ms2
            + p.inertia_loss * mv2;
        out.t.push(t);
        out.residual.push(res);
        out.de_dt.push(de);
    }
    Ok(out)
}

/// `sqrt(dx Σ (v(x_j) - v_j)²)`.
pub fn error_norm(numeric: &FieldState, exact: impl Fn(f64) -> f64, grid: &Grid) -> f64 {
    let s: f64 = numeric
        .v
        .iter()
        .enumerate()
        .map(|(j, v)| (exact(grid.x(j)) - v).powi(2))
        .sum();
    (grid.dx * s).sqrt()
}

/// `sqrt(dx Σ v(x_j)²)`, the norm used to make [`error_norm`] relative.
pub fn reference_norm(exact: impl Fn(f64) -> f64, grid: &Grid) -> f64 {
    let s: f64 = (0..grid.nx).map(|j| exact(grid.x(j)).powi(2)).sum();
    (grid.dx * s).sqrt()
}

/// Least-squares slope of `log ε` against `log dx`, ignoring the
/// `drop_coarsest` largest spacings.
pub fn convergence_order(points: &[(f64, f64)], drop_coarsest: usize) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pts = &pts[drop_coarsest.min(pts.len())..];
    if pts.len() < 2 {
        return Err(Error::Config("need at least two grids for a slope".into()));
    }
    if pts.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0)) {
        return Err(Error::Numerical("spacings and errors must be positive".into()));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(h, e)| (a + h.ln(), b + e.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for &(h, e) in pts {
        num += (h.ln() - mx) * (e.ln() - my);
        den += (h.ln() - mx).powi(2);
    }
    Ok(num / den)
}

/// One-sided spectrum of a real record: bin frequencies `k/(N dt)` for
/// `k = 0..=N/2` and `dt Σ_n x_n exp(-2πi kn/N)`.
pub fn dft_spectrum(series: &[f64], dt: f64) -> (Vec<f64>, Vec<Complex64>) {
    let n = series.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut buf: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    let freqs = (0..half).map(|k| k as f64 / (n as f64 * dt)).collect();
    let amps = buf[..half].iter().map(|z| z * dt).collect();
    (freqs, amps)
}

/// `dt Σ_n x_n exp(-2πi f t_n)` with `t_n = t0 + n dt`, at an arbitrary frequency.
pub fn dft_at(series: &[f64], dt: f64, t0: f64, f: f64) -> Complex64 {
    let w = -2.0 * PI * f;
    series
        .iter()
        .enumerate()
        .map(|(n, &x)| x * Complex64::from_polar(1.0, w * (t0 + n as f64 * dt)))
        .sum::<Complex64>()
        * dt
}

/// Estimates of `|T_k|` (or `|R_k|`) for `k = -order..=order`: the spectral
/// magnitude of `scattered` at `|f_c + k f_m|` over that of `incident` at `f_c`.
pub fn harmonic_peak_ratios(
    scattered: &[f64],
    incident: &[f64],
    dt: f64,
    f_c: f64,
    f_m: f64,
    order: i32,
) -> Vec<(i32, f64)> {
    let reference = dft_at(incident, dt, 0.0, f_c).norm();
    (-order..=order)
        .map(|k| {
            let f = (f_c + k as f64 * f_m).abs();
            let ratio = if reference > 0.0 {
                dft_at(scattered, dt, 0.0, f).norm() / reference
            } else {
                0.0
            };
            (k, ratio)
        })
        .collect()
}

/// `f_c sqrt(Σ (v_s - v_r)²)`.
pub fn nonreciprocity_measure(v_s: &[f64], v_r: &[f64], f_c: f64) -> Result<f64> {
    if v_s.len() != v_r.len() {
        return Err(Error::Config(format!(
            "series lengths differ: {} vs {}",
            v_s.len(),
            v_r.len()
        )));
    }
    let s: f64 = v_s.iter().zip(v_r).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(f_c * s.sqrt())
}

/// `E_m(t_end) - E_m(0)`, taking the last record at or before `t_end`.
pub fn delta_energy(records: &[EnergyRecord], t_end: f64) -> Option<f64> {
    let first = records.first()?;
    let last = records.iter().rev().find(|r| r.t <= t_end + 1e-12)?;
    Some(last.total - first.total)
}
