use modint::diagnostics::{convergence_order, error_norm};
use modint::fdtd::{ader4_step, cfl_timestep, apply_boundary, initial_state, BoundaryPolicy, Grid};
use modint::model::{InterfaceLaw, MaterialHalfSpaces, SourceSpec};
use modint::simulation::{run, RunRequest, Setup, Simulation};

fn plexi() -> MaterialHalfSpaces {
    MaterialHalfSpaces::homogeneous(1200.0, 2800.0, 200.0).unwrap()
}

#[test]
fn homogeneous_self_convergence_is_fourth_order() {
    let src = SourceSpec::cauchy(45.0, 100.0 / 2800.0);
    let t_end = 0.03;
    let mut pts = Vec::new();
    for nx in [200, 400, 800, 1600] {
        let s = Setup::new(400.0, nx, plexi(), InterfaceLaw::perfect(), src);
        let out = run(s, t_end, &RunRequest::default()).unwrap();
        let exact = |x: f64| src.signal(100.0 / 2800.0 + t_end - x / 2800.0);
        pts.push((out.grid.dx, error_norm(&out.final_state, exact, &out.grid)));
    }
    let slope = convergence_order(&pts, 0).unwrap();
    assert!((3.7..4.3).contains(&slope), "slope {slope} from {pts:?}");
}

#[test]
fn no_growth_over_ten_thousand_steps() {
    let src = SourceSpec::cauchy(45.0, 172.0 / 2800.0);
    let s = Setup::new(400.0, 400, plexi(), InterfaceLaw::perfect(), src);
    let dt = cfl_timestep(1.0, &plexi(), 0.95).unwrap();
    let mut sim = Simulation::new(s, 1e4 * dt).unwrap();
    let peak0 = sim.state.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    sim.run_with(|s| {
        worst = worst.max(s.state.v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    })
    .unwrap();
    assert!(sim.steps >= 10_000);
    assert!(worst <= peak0 * (1.0 + 1e-12), "{worst} vs {peak0}");
    // everything has left through the absorbing ends
    assert!(sim.state.v.iter().all(|v| v.abs() < 1e-6 * peak0));
}

#[test]
fn unit_courant_number_shifts_one_cell() {
    let mat = plexi();
    let grid = Grid::new(400.0, 400, &mat, 1.0).unwrap();
    let src = SourceSpec::cauchy(45.0, 172.0 / 2800.0);
    let s0 = initial_state(&grid, &mat, &src).unwrap();
    let ghosts = apply_boundary(&s0, &mat, BoundaryPolicy::Absorbing);
    let s1 = ader4_step(&s0, &grid, &mat, &ghosts, None).unwrap();
    for j in 1..grid.nx {
        assert!((s1.v[j] - s0.v[j - 1]).abs() < 1e-12, "v at {j}");
        assert!((s1.sigma[j] - s0.sigma[j - 1]).abs() < 1e-12 * 3.36e6, "sigma at {j}");
    }
}
