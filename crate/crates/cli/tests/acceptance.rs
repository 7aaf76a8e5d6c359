//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;

use modint::characteristics::{
    alpha_t, analytic_solution_qonly, g_lemma, mean_alpha, Envelope,
};
use modint::diagnostics::convergence_order;
use modint::hbm::solve_scattering;
use modint::model::{
    InterfaceLaw, InterfaceParams, MaterialHalfSpaces, ModulationKind, SourceSpec, Waveform,
};
use modint::simulation::{run, RunRequest, Setup};
use modint_cli::scenario::{
    compare_harmonics, compare_with_oracle, harmonic_mismatch, refinement_ladder,
    static_limit_gap,
};
use modint_cli::{run_scenario, Options, Report, Scenario};

const RHO: f64 = 1200.0;
const C: f64 = 2800.0;
const K0: f64 = 2.45e9;
const M0: f64 = 2e4;
const QC0: f64 = 2e-7;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn plexi() -> MaterialHalfSpaces {
    MaterialHalfSpaces::homogeneous(RHO, C, 200.0).unwrap()
}

fn pulse() -> SourceSpec {
    SourceSpec::cauchy(45.0, 172.0 / C)
}

fn c_law(eps: f64, f_m: f64) -> InterfaceLaw {
    InterfaceLaw::spring_mass(K0, 0.0).with_depth(ModulationKind::Sinusoidal, f_m, eps)
}

fn m_law(eps: f64, f_m: f64) -> InterfaceLaw {
    InterfaceLaw::fixed(InterfaceParams {
        inertia: M0,
        ..Default::default()
    })
    .with_depth(ModulationKind::Sinusoidal, f_m, eps)
}

fn failed_checks(r: &Report) -> String {
    r.checks
        .iter()
        .map(|c| format!("{} = {:.3e} ({})", c.name, c.value, c.limit))
        .collect::<Vec<_>>()
        .join("; ")
}

fn convergence() -> Outcome {
    let cases = [
        ("C f_m=10", c_law(0.75, 10.0)),
        ("C f_m=100", c_law(0.75, 100.0)),
        ("M f_m=10", m_law(0.75, 10.0)),
        ("M f_m=100", m_law(0.75, 100.0)),
    ];
    let slopes: Vec<(&str, f64)> = cases
        .par_iter()
        .map(|(name, law)| {
            let s = Setup::new(400.0, 400, plexi(), *law, pulse());
            let ladder = refinement_ladder(&s, 0.045, 4).unwrap();
            (*name, convergence_order(&ladder, 0).unwrap())
        })
        .collect();
    let ok = slopes.iter().all(|(_, s)| (3.5..=4.5).contains(s));
    let d = slopes.iter().map(|(n, s)| format!("{n}: {s:.3}")).collect::<Vec<_>>();
    outcome(ok, format!("slopes {}", d.join(", ")))
}

fn oracle_agreement() -> Outcome {
    let mut cases = vec![("static C".to_string(), c_law(0.0, 100.0))];
    for f_m in [100.0, 500.0] {
        cases.push((format!("C f_m={f_m}"), c_law(0.9, f_m)));
        let mut l = c_law(0.9, f_m);
        l.base.compliance_loss = QC0;
        l.depth.compliance_loss = 0.9;
        cases.push((format!("C+Q_C f_m={f_m}"), l));
    }
    let q = InterfaceLaw::fixed(InterfaceParams {
        compliance_loss: QC0,
        ..Default::default()
    })
    .modulated(
        ModulationKind::Sinusoidal,
        500.0,
        InterfaceParams {
            compliance_loss: 0.9,
            ..Default::default()
        },
    );
    cases.push(("Q_C f_m=500".into(), q));
    let errs: Vec<(String, f64)> = cases
        .into_par_iter()
        .map(|(name, law)| {
            let s = Setup::new(400.0, 3200, plexi(), law, pulse());
            (name, compare_with_oracle(&s, 0.045).unwrap().relative)
        })
        .collect();
    let ok = errs.iter().all(|(_, e)| *e < 1e-4);
    let d = errs.iter().map(|(n, e)| format!("{n}: {e:.2e}")).collect::<Vec<_>>();
    outcome(ok, format!("relative L2 < 1e-4: {}", d.join(", ")))
}

fn envelope() -> Outcome {
    let law = InterfaceLaw::fixed(InterfaceParams {
        compliance_loss: QC0,
        ..Default::default()
    })
    .modulated(
        ModulationKind::Sinusoidal,
        500.0,
        InterfaceParams {
            compliance_loss: 0.9,
            ..Default::default()
        },
    );
    let sol = analytic_solution_qonly(&plexi(), &law, &pulse()).unwrap();
    let env = Envelope::new(&plexi(), &law, &pulse()).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..=90 {
        let t = 0.0005 * i as f64;
        for j in 0..800 {
            let x = 0.25 + 0.5 * j as f64;
            let (v, s) = sol.eval(x, t);
            let b = env.bounds(x, t);
            scale = scale.max(v.abs()).max(s.abs() / (RHO * C));
            let out = |y: f64, (lo, hi): (f64, f64)| (lo - y).max(y - hi).max(0.0);
            worst = worst.max(out(v, b.v)).max(out(s, b.sigma) / (RHO * C));
        }
    }
    let rel = worst / scale;
    outcome(rel < 1e-12, format!("largest excursion / peak = {rel:.2e} < 1e-12"))
}

fn static_limit() -> Outcome {
    let gap = static_limit_gap(100, &mut StdRng::seed_from_u64(2024)).unwrap();
    outcome(gap < 1e-12, format!("max relative gap over 100 draws = {gap:.2e} < 1e-12"))
}

fn section42() -> InterfaceLaw {
    InterfaceLaw::spring_mass(K0, M0).with_depth(ModulationKind::Sinusoidal, 30.0, 0.75)
}

fn truncation() -> Outcome {
    let mat = MaterialHalfSpaces::homogeneous(RHO, C, 0.0).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (f_c, f_m) in [(100.0, 30.0), (30.0, 30.0), (30.0, 100.0)] {
        let mut law = section42();
        law.f_m = f_m;
        let a = solve_scattering(&law, &mat, f_c, 12).unwrap();
        let b = solve_scattering(&law, &mat, f_c, 24).unwrap();
        let mut d: f64 = 0.0;
        for k in -6..=6 {
            d = d
                .max((a.r_k(k).unwrap().norm() - b.r_k(k).unwrap().norm()).abs())
                .max((a.t_k(k).unwrap().norm() - b.t_k(k).unwrap().norm()).abs());
        }
        ok &= d < 1e-8;
        parts.push(format!("({f_c},{f_m}): {d:.2e}"));
    }
    outcome(ok, format!("N=12 vs N=24 change < 1e-8: {}", parts.join(", ")))
}

fn harmonics() -> Outcome {
    let base = Scenario::Harmonics.preset_config();
    let results: Vec<(f64, f64, f64, Option<f64>)> = [(100.0, 30.0), (30.0, 30.0), (30.0, 100.0)]
        .par_iter()
        .map(|&(f_c, f_m)| {
            let mut cfg = base.clone();
            cfg.setup.source.f_c = f_c;
            cfg.setup.law.f_m = f_m;
            let cmp = compare_harmonics(&cfg, 6).unwrap();
            let minus = (f_c == f_m).then(|| {
                let s = &cmp.spectrum;
                s.r_k(-1).unwrap().norm().max(s.t_k(-1).unwrap().norm())
            });
            (f_c, f_m, harmonic_mismatch(&cmp, 0.01), minus)
        })
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (f_c, f_m, mis, minus) in results {
        ok &= mis < 0.05;
        parts.push(format!("({f_c},{f_m}): {mis:.2e}"));
        if let Some(m) = minus {
            ok &= m < 1e-12;
            parts.push(format!("|R_-1|,|T_-1| = {m:.1e}"));
        }
    }
    outcome(ok, format!("mismatch < 5%: {}", parts.join(", ")))
}

fn impedance() -> Outcome {
    let r = run_scenario(&Scenario::Impedance.preset_config(), Scenario::Impedance, Options::default())
        .unwrap();
    outcome(r.passed(), failed_checks(&r))
}

fn energy_conservation() -> Outcome {
    let req = RunRequest {
        receivers: vec![],
        energy_stride: Some(1),
    };
    let lossless = Setup::new(400.0, 1600, plexi(), c_law(0.0, 100.0), pulse());
    let e = run(lossless, 0.06, &req).unwrap().energy;
    let drift = (e.last().unwrap().total / e[0].total - 1.0).abs();
    let mut law = c_law(0.0, 100.0);
    law.base.compliance_loss = QC0;
    let lossy = Setup::new(400.0, 1600, plexi(), law, pulse());
    let e = run(lossy, 0.06, &req).unwrap().energy;
    let rises = e
        .windows(2)
        .filter(|w| w[1].total > w[0].total * (1.0 + 1e-12))
        .count();
    let lost = 1.0 - e.last().unwrap().total / e[0].total;
    outcome(
        drift < 1e-6 && rises == 0,
        format!("lossless drift {drift:.2e} < 1e-6, lossy increases {rises} (loses {lost:.3})"),
    )
}

fn energy_modulation() -> Outcome {
    let r = run_scenario(&Scenario::Energy.preset_config(), Scenario::Energy, Options::default())
        .unwrap();
    let sweep = r.table("delta_energy").unwrap();
    let eps = sweep.column("eps").unwrap();
    let ratio = sweep.column("ratio").unwrap();
    let at = |e: f64| ratio[eps.iter().position(|&x| (x - e).abs() < 1e-12).unwrap()];
    let (up, down) = (at(0.75), at(-0.75));
    let near = |x: f64, target: f64| (x / target - 1.0).abs() <= 0.1;
    let ok = r.passed() && near(up, 1.86) && near(down, 0.857);
    outcome(
        ok,
        format!("ratio(+0.75) = {up:.3} ~ 1.86, ratio(-0.75) = {down:.3} ~ 0.857, {}", failed_checks(&r)),
    )
}

fn boundedness() -> Outcome {
    let law = c_law(0.75, 100.0);
    let src = SourceSpec::point(45.0, 100.0).with_waveform(Waveform::Continuous { ramp_cycles: 2.0 });
    let mut s = Setup::new(400.0, 800, plexi(), law, src);
    s.step_multiple = 2;
    let receivers = vec![50.0, 150.0, 250.0, 350.0];
    let out = run(
        s,
        100.0 / law.f_m,
        &RunRequest {
            receivers,
            energy_stride: None,
        },
    )
    .unwrap();
    let half = out.times.len() / 2;
    let peak = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let growth = out
        .receiver_v
        .iter()
        .map(|v| peak(&v[half..]) / peak(&v[..half]))
        .fold(0.0, f64::max);

    // Mean of a(t) over one period against trapezoidal quadrature (spectral
    // for periodic integrands).
    let z = RHO * C;
    let mut worst_alpha: f64 = 0.0;
    let mut negative = true;
    for (eps_c, eps_qc, qc0) in [(0.75, 0.0, 0.0), (0.75, 0.5, QC0), (0.3, -0.9, QC0), (0.95, 0.95, 5e-8)] {
        let mut l = c_law(eps_c, 100.0);
        l.base.compliance_loss = qc0;
        l.depth.compliance_loss = eps_qc;
        let n = 1 << 14;
        let period = 1.0 / l.f_m;
        let quad = (0..n)
            .map(|i| alpha_t(z, &l, period * i as f64 / n as f64).unwrap())
            .sum::<f64>()
            / n as f64;
        let closed = mean_alpha(z, 1.0 / K0, qc0, eps_c, eps_qc);
        negative &= closed < 0.0;
        worst_alpha = worst_alpha.max((closed - quad).abs() / quad.abs());
    }
    let mut g_min = f64::INFINITY;
    for i in 0..200 {
        for j in 0..200 {
            let a = -1.0 + (2 * i + 1) as f64 / 200.0;
            let b = -1.0 + (2 * j + 1) as f64 / 200.0;
            g_min = g_min.min(g_lemma(a, b));
        }
    }
    outcome(
        growth < 1.01 && negative && worst_alpha < 1e-10 && g_min > 0.0,
        format!(
            "late/early peak = {growth:.5} < 1.01, mean alpha gap {worst_alpha:.1e} < 1e-10, min g = {g_min:.3e} > 0"
        ),
    )
}

fn nonreciprocity() -> Outcome {
    let r = run_scenario(
        &Scenario::Nonreciprocity.preset_config(),
        Scenario::Nonreciprocity,
        Options::default(),
    )
    .unwrap();
    outcome(r.passed(), failed_checks(&r))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("order-4 convergence", convergence),
        ("oracle agreement at Nx = 3200", oracle_agreement),
        ("envelope containment", envelope),
        ("harmonic balance static limit", static_limit),
        ("harmonic balance truncation", truncation),
        ("harmonics against simulation", harmonics),
        ("impedance matching", impedance),
        ("energy conservation and dissipation", energy_conservation),
        ("energy modulation", energy_modulation),
        ("boundedness", boundedness),
        ("non-reciprocity", nonreciprocity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let results: Vec<(usize, &str, Outcome)> = criteria
        .par_iter()
        .enumerate()
        .filter(|(_, (name, _))| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str())))
        .map(|(i, (name, f))| (i + 1, *name, f()))
        .collect();
    let mut all = true;
    for (i, name, o) in &results {
        all &= o.passed;
        println!(
            "{} criterion {i} ({name}): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
