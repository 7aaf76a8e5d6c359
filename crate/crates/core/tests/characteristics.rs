use modint::characteristics::{alpha_t, analytic_solution, g_lemma, mean_alpha, Envelope};
use modint::model::{InterfaceLaw, InterfaceParams, MaterialHalfSpaces, ModulationKind, SourceSpec};

const Z: f64 = 1200.0 * 2800.0;

fn plexi() -> MaterialHalfSpaces {
    MaterialHalfSpaces::homogeneous(1200.0, 2800.0, 200.0).unwrap()
}

fn pulse() -> SourceSpec {
    SourceSpec::cauchy(45.0, 172.0 / 2800.0)
}

#[test]
fn mean_alpha_matches_quadrature() {
    for (eps_c, eps_qc, qc0) in [(0.0, 0.0, 0.0), (0.6, 0.0, 1e-7), (-0.8, 0.9, 2e-7), (0.99, -0.5, 5e-8)] {
        let law = InterfaceLaw::fixed(InterfaceParams {
            compliance: 1.0 / 2.45e9,
            compliance_loss: qc0,
            ..Default::default()
        })
        .modulated(
            ModulationKind::Sinusoidal,
            50.0,
            InterfaceParams { compliance: eps_c, compliance_loss: eps_qc, ..Default::default() },
        );
        let n = 1 << 15;
        let quad: f64 = (0..n).map(|i| alpha_t(Z, &law, i as f64 / (50.0 * n as f64)).unwrap()).sum::<f64>() / n as f64;
        let closed = mean_alpha(Z, 1.0 / 2.45e9, qc0, eps_c, eps_qc);
        assert!(((closed - quad) / quad).abs() < 1e-10, "{closed} vs {quad}");
    }
}

#[test]
fn g_is_positive_on_open_square() {
    for i in 0..200 {
        for j in 0..200 {
            let a = -1.0 + (2 * i + 1) as f64 / 200.0;
            let b = -1.0 + (2 * j + 1) as f64 / 200.0;
            assert!(g_lemma(a, b) > 0.0, "g({a}, {b})");
        }
    }
}

#[test]
fn loss_only_solution_stays_inside_envelope() {
    for kind in [ModulationKind::Sinusoidal, ModulationKind::Rectangular { nu: 0.3 }] {
        let law = InterfaceLaw::fixed(InterfaceParams { compliance_loss: 2e-7, ..Default::default() })
            .modulated(kind, 500.0, InterfaceParams { compliance_loss: 0.9, ..Default::default() });
        let sol = analytic_solution(&plexi(), &law, &pulse(), 0.045, 1e-6).unwrap();
        let env = Envelope::new(&plexi(), &law, &pulse()).unwrap();
        for i in 0..=45 {
            let t = 1e-3 * i as f64;
            for j in 0..400 {
                let x = 0.5 + j as f64;
                let (v, s) = sol.eval(x, t);
                let b = env.bounds(x, t);
                assert!(v >= b.v.0 - 1e-12 && v <= b.v.1 + 1e-12, "v at ({x}, {t})");
                assert!(s >= b.sigma.0 - 1e-12 * Z && s <= b.sigma.1 + 1e-12 * Z, "sigma at ({x}, {t})");
            }
        }
    }
}

#[test]
fn static_compliance_transmits_the_closed_form_amplitude_at_low_frequency() {
    // A very soft spring passes a slow pulse almost unchanged.
    let law = InterfaceLaw::spring_mass(1e13, 0.0);
    let src = SourceSpec::cauchy(2.0, 180.0 / 2800.0);
    let sol = analytic_solution(&plexi(), &law, &src, 0.3, 1e-5).unwrap();
    let free = |x: f64, t: f64| src.signal(180.0 / 2800.0 + t - x / 2800.0);
    let mut worst: f64 = 0.0;
    for j in 0..200 {
        let x = 200.5 + j as f64;
        worst = worst.max((sol.eval(x, 0.3).0 - free(x, 0.3)).abs());
    }
    assert!(worst < 1e-4, "{worst}");
}
