//! Harmonic balance against a direct time integration of the interface ODE
//! in the periodic steady state.

use std::f64::consts::PI;

use modint::hbm::{solve_scattering, static_rt};
use modint::model::{InterfaceLaw, InterfaceParams, MaterialHalfSpaces, ModulationKind};
use num_complex::Complex64;

const Z: f64 = 1200.0 * 2800.0;

fn medium() -> MaterialHalfSpaces {
    MaterialHalfSpaces::homogeneous(1200.0, 2800.0, 0.0).unwrap()
}

/// Transmitted velocity `u(t)` for unit incident `e^{iωt}` on a compliance-only
/// (`mass = false`) or inertia-only (`mass = true`) interface:
/// `(X u)' + (Q + 2Z) u = 2Z e^{iωt}` for mass, and in compliance form
/// `(X s)' + (Q + 2/Z) s = -2 e^{iωt}` with `u = -s/Z`.
fn steady_transmission(x0: f64, eps: f64, q0: f64, f: f64, f_m: f64, mass: bool, k_max: i64) -> Vec<Complex64> {
    let (w, wm) = (2.0 * PI * f, 2.0 * PI * f_m);
    let x = |t: f64| x0 * (1.0 + eps * (wm * t).sin());
    let dx = |t: f64| x0 * eps * wm * (wm * t).cos();
    let (gain, drive) = if mass { (2.0 * Z, 2.0 * Z) } else { (2.0 / Z, -2.0) };
    let rhs = |t: f64, y: Complex64| {
        (Complex64::from_polar(drive, w * t) - (dx(t) + q0 + gain) * y) / x(t)
    };
    let period = 1.0 / f_m;
    let n = 8192;
    let h = period / n as f64;
    let mut y = Complex64::new(0.0, 0.0);
    let mut t = 0.0;
    let settle = 60;
    let mut samples = Vec::with_capacity(n);
    for p in 0..=settle {
        for _ in 0..n {
            if p == settle {
                samples.push((t, y));
            }
            let k1 = rhs(t, y);
            let k2 = rhs(t + h / 2.0, y + k1 * (h / 2.0));
            let k3 = rhs(t + h / 2.0, y + k2 * (h / 2.0));
            let k4 = rhs(t + h, y + k3 * h);
            y += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
            t += h;
        }
    }
    let scale = if mass { 1.0 } else { -1.0 / Z };
    (-k_max..=k_max)
        .map(|k| {
            let wk = w + k as f64 * wm;
            samples
                .iter()
                .map(|&(t, y)| y * scale * Complex64::from_polar(1.0, -wk * t))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

#[test]
fn compliance_harmonics_match_time_integration() {
    let (f_c, f_m, eps, qc) = (100.0, 30.0, 0.75, 1e-7);
    let law = InterfaceLaw::fixed(InterfaceParams {
        compliance: 1.0 / 2.45e9,
        compliance_loss: qc,
        ..Default::default()
    })
    .with_depth(ModulationKind::Sinusoidal, f_m, eps);
    let s = solve_scattering(&law, &medium(), f_c, 24).unwrap();
    let td = steady_transmission(1.0 / 2.45e9, eps, qc, f_c, f_m, false, 6);
    for (i, k) in (-6..=6).enumerate() {
        let t = s.t_k(k).unwrap();
        assert!((t - td[i]).norm() < 1e-7, "T_{k}: {t} vs {}", td[i]);
        let r = s.r_k(k).unwrap();
        let expect = if k == 0 { Complex64::new(1.0, 0.0) - t } else { -t };
        assert!((r - expect).norm() < 1e-12, "R_{k}");
    }
}

#[test]
fn inertia_harmonics_match_time_integration() {
    let (f_c, f_m, eps) = (30.0, 100.0, 0.75);
    let law = InterfaceLaw::spring_mass(0.0, 2e4).with_depth(ModulationKind::Sinusoidal, f_m, eps);
    let s = solve_scattering(&law, &medium(), f_c, 24).unwrap();
    let td = steady_transmission(2e4, eps, 0.0, f_c, f_m, true, 6);
    for (i, k) in (-6..=6).enumerate() {
        let t = s.t_k(k).unwrap();
        assert!((t - td[i]).norm() < 1e-7, "T_{k}: {t} vs {}", td[i]);
        let r = s.r_k(k).unwrap();
        let expect = if k == 0 { t - 1.0 } else { t };
        assert!((r - expect).norm() < 1e-12, "R_{k}");
    }
}

#[test]
fn truncation_error_decays_geometrically() {
    let law = InterfaceLaw::spring_mass(2.45e9, 2e4).with_depth(ModulationKind::Sinusoidal, 30.0, 0.75);
    let change = |n: usize| {
        let a = solve_scattering(&law, &medium(), 100.0, n).unwrap();
        let b = solve_scattering(&law, &medium(), 100.0, 2 * n).unwrap();
        (-6..=6)
            .map(|k| (a.t_k(k).unwrap() - b.t_k(k).unwrap()).norm())
            .fold(0.0, f64::max)
    };
    let (c8, c12, c16) = (change(8), change(12), change(16));
    assert!(c12 < c8 / 10.0 && c16 < c12 / 10.0, "{c8:e} {c12:e} {c16:e}");
    assert!(c16 < 1e-10);
}

#[test]
fn zero_depth_reduces_to_static_coefficients() {
    let law = InterfaceLaw::fixed(InterfaceParams {
        compliance: 4e-10,
        inertia: 1.5e4,
        compliance_loss: 1e-7,
        inertia_loss: 3e5,
    });
    for f in [5.0, 45.0, 300.0] {
        let s = solve_scattering(&law, &medium(), f, 6).unwrap();
        let (r, t) = static_rt(&medium(), &law, 2.0 * PI * f);
        assert!((s.r_k(0).unwrap() - r).norm() < 1e-14);
        assert!((s.t_k(0).unwrap() - t).norm() < 1e-14);
        assert!((s.max_reflection() - r.norm()).abs() < 1e-14);
    }
}
