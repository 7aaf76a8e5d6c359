//! Time loop tying the bulk scheme, the interface treatment, boundaries and
//! forcing together.

use nalgebra::DMatrix;

use crate::diagnostics::{energies, EnergyRecord};
use crate::error::{Error, Result};
use crate::esim::{
    build_jump_matrices, fit_boundary_derivatives, fit_boundary_derivatives_joint, interface_traces, modified_values,
    transfer_matrix, BoundaryDerivatives, EsimConfig, InterfaceTraces,
};
use crate::fdtd::{
    ader4_step, apply_boundary, initial_state, inject_point_source, BoundaryPolicy, FieldState,
    Grid, InterfaceOverrides, PointSource,
};
use crate::model::{Forcing, InterfaceLaw, MaterialHalfSpaces, Side, SourceSpec};

/// Everything needed to build a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub length: f64,
    pub nx: usize,
    pub zeta: f64,
    pub material: MaterialHalfSpaces,
    pub law: InterfaceLaw,
    pub source: SourceSpec,
    pub boundary: BoundaryPolicy,
    pub esim: EsimConfig,
    /// Use the interface treatment even when it could be skipped
    /// (homogeneous medium, perfect bonding).
    pub force_interface: bool,
    /// Force the number of time steps to a multiple of this.
    pub step_multiple: usize,
}

impl Setup {
    pub fn new(
        length: f64,
        nx: usize,
        material: MaterialHalfSpaces,
        law: InterfaceLaw,
        source: SourceSpec,
    ) -> Self {
        Self {
            length,
            nx,
            zeta: 0.95,
            material,
            law,
            source,
            boundary: BoundaryPolicy::Absorbing,
            esim: EsimConfig::default(),
            force_interface: false,
            step_multiple: 1,
        }
    }

    pub fn with_nx(mut self, nx: usize) -> Self {
        self.nx = nx;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.law.validate()?;
        self.esim.validate()?;
        self.source.validate(&self.material, self.length)?;
        if !(self.material.x0 > 0.0 && self.material.x0 < self.length) {
            return Err(Error::Config(format!(
                "interface at {} m lies outside [0, {}]",
                self.material.x0, self.length
            )));
        }
        Ok(())
    }
}

/// A running simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub setup: Setup,
    pub grid: Grid,
    pub steps: usize,
    pub state: FieldState,
    point: Option<PointSource>,
    uses_interface: bool,
    static_transfer: Option<DMatrix<f64>>,
    /// Fit at the current time level, if the interface is active.
    fit: Option<(BoundaryDerivatives, InterfaceOverrides)>,
    step_index: usize,
}

impl Simulation {
    /// Build a run reaching `t_end` after a whole number of steps.
    pub fn new(setup: Setup, t_end: f64) -> Result<Self> {
        setup.validate()?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Config(format!("end time must be positive, got {t_end}")));
        }
        let grid = Grid::new(setup.length, setup.nx, &setup.material, setup.zeta)?;
        let (grid, steps) = grid.fitted_to_multiple(t_end, setup.step_multiple);
        let x0 = setup.material.x0;
        let uses_interface =
            setup.force_interface || !(setup.material.is_homogeneous() && setup.law.is_perfect());
        if uses_interface {
            grid.interface_index(x0)?;
        }
        let point = match setup.source.forcing {
            Forcing::DiracPoint { x_s } => Some(PointSource::new(&grid, x_s, Some(x0))?),
            Forcing::CauchyPulse { .. } => None,
        };
        let static_transfer = if uses_interface && setup.law.is_static() {
            let jm = build_jump_matrices(&setup.law, &setup.material, 0.0, setup.esim.k, setup.esim.mode)?;
            Some(transfer_matrix(&jm)?)
        } else {
            None
        };
        setup.law.check_window(0.0, t_end, 4096);
        let state = initial_state(&grid, &setup.material, &setup.source)?;
        let mut sim = Self {
            setup,
            grid,
            steps,
            state,
            point,
            uses_interface,
            static_transfer,
            fit: None,
            step_index: 0,
        };
        sim.refit()?;
        Ok(sim)
    }

    pub fn t(&self) -> f64 {
        self.state.t
    }

    pub fn finished(&self) -> bool {
        self.step_index >= self.steps
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    fn refit(&mut self) -> Result<()> {
        if !self.uses_interface {
            self.fit = None;
            return Ok(());
        }
        let cfg = self.setup.esim;
        let (law, material) = (&self.setup.law, &self.setup.material);
        let bd = match &self.static_transfer {
            Some(d) => fit_boundary_derivatives(&self.state, d, &self.grid, material, cfg.k, cfg.q)?,
            None => {
                let jm = build_jump_matrices(law, material, self.state.t, cfg.k, cfg.mode)?;
                match if cfg.joint_fit { Err(Error::IllConditioned { condition: 0.0, t: jm.t }) } else { transfer_matrix(&jm) } {
                    Ok(d) => fit_boundary_derivatives(&self.state, &d, &self.grid, material, cfg.k, cfg.q)?,
                    Err(Error::IllConditioned { condition, t }) => {
                        log::debug!("C+ condition {condition:.2e} at t = {t:.6e}, joint fit used");
                        fit_boundary_derivatives_joint(&self.state, &jm, &self.grid, material, cfg.q)?
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        let ov = modified_values(&bd, &self.grid, self.setup.material.x0)?;
        self.fit = Some((bd, ov));
        Ok(())
    }

    /// Fitted one-sided limits at the current time level.
    pub fn boundary_derivatives(&self) -> Option<&BoundaryDerivatives> {
        self.fit.as_ref().map(|(bd, _)| bd)
    }

    /// Interface traces at the current time level (zero without an interface).
    pub fn traces(&self) -> InterfaceTraces {
        match &self.fit {
            Some((bd, _)) => interface_traces(bd),
            None => {
                // continuous field: the mean is the value interpolated at x0
                let x0 = self.setup.material.x0;
                let (v, s) = self.sample(x0);
                InterfaceTraces {
                    mean_v: v,
                    mean_sigma: s,
                    ..Default::default()
                }
            }
        }
    }

    /// Forcing value `S(t)` of a point source (zero for a Cauchy problem).
    pub fn forcing_value(&self, t: f64) -> f64 {
        match self.setup.source.forcing {
            Forcing::DiracPoint { .. } => self.setup.source.signal(t),
            Forcing::CauchyPulse { .. } => 0.0,
        }
    }

    /// Advance one step.
    pub fn step(&mut self) -> Result<()> {
        let ghosts = apply_boundary(&self.state, &self.setup.material, self.setup.boundary);
        let ov = self.fit.as_ref().map(|(_, ov)| ov);
        let mut next = ader4_step(&self.state, &self.grid, &self.setup.material, &ghosts, ov)?;
        if let Some(p) = &self.point {
            let t_mid = self.state.t + 0.5 * self.grid.dt;
            let side = self.setup.material.side_of(p.x_s);
            inject_point_source(
                &mut next,
                p,
                self.forcing_value(t_mid),
                self.setup.material.rho(side),
                self.grid.dx,
                self.grid.dt,
            );
        }
        self.step_index += 1;
        if self.step_index == self.steps {
            // land exactly on t_end
            next.t = self.grid.dt * self.steps as f64;
        }
        next.check_finite()?;
        self.state = next;
        self.refit()
    }

    /// Field values at `x` by linear interpolation between the bracketing nodes
    /// on the same side of the interface.
    pub fn sample(&self, x: f64) -> (f64, f64) {
        let g = &self.grid;
        let s = (x / g.dx - 0.5).clamp(0.0, (g.nx - 1) as f64);
        let mut j = (s.floor() as usize).min(g.nx - 2);
        let x0 = self.setup.material.x0;
        let side = self.setup.material.side_of(x);
        // stay on one side when the bracket straddles the interface
        if self.uses_interface && g.x(j) < x0 && g.x(j + 1) > x0 {
            return match side {
                Side::Minus => (self.state.v[j], self.state.sigma[j]),
                Side::Plus => (self.state.v[j + 1], self.state.sigma[j + 1]),
            };
        }
        if j + 1 >= g.nx {
            j = g.nx - 2;
        }
        let w = (s - j as f64).clamp(0.0, 1.0);
        (
            (1.0 - w) * self.state.v[j] + w * self.state.v[j + 1],
            (1.0 - w) * self.state.sigma[j] + w * self.state.sigma[j + 1],
        )
    }

    /// Energy record at the current time level.
    pub fn energy(&self) -> EnergyRecord {
        let t = self.state.t;
        let p = self
            .point
            .as_ref()
            .map(|p| {
                self.forcing_value(t) * p.nodes.iter().map(|&(j, w)| w * self.state.v[j]).sum::<f64>()
            })
            .unwrap_or(0.0);
        energies(
            &self.state,
            &self.traces(),
            &self.setup.law,
            &self.grid,
            &self.setup.material,
            p,
        )
    }

    /// Run to the end, calling `observe` at every time level including the first.
    pub fn run_with<F: FnMut(&Simulation)>(&mut self, mut observe: F) -> Result<()> {
        observe(self);
        while !self.finished() {
            self.step()?;
            observe(self);
        }
        Ok(())
    }
}

/// What a plain run records.
#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub receivers: Vec<f64>,
    /// Record energies every `n` steps (`None` for no energy record).
    pub energy_stride: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: Grid,
    pub times: Vec<f64>,
    /// One velocity series per receiver, sampled at `times`.
    pub receiver_v: Vec<Vec<f64>>,
    pub receiver_sigma: Vec<Vec<f64>>,
    pub energy: Vec<EnergyRecord>,
    pub traces: Vec<(f64, InterfaceTraces)>,
    pub final_state: FieldState,
}

/// Run `setup` to `t_end`, recording receivers and energies.
pub fn run(setup: Setup, t_end: f64, request: &RunRequest) -> Result<RunOutput> {
    let mut sim = Simulation::new(setup, t_end)?;
    let nr = request.receivers.len();
    let mut out = RunOutput {
        grid: sim.grid,
        times: Vec::with_capacity(sim.steps + 1),
        receiver_v: vec![Vec::with_capacity(sim.steps + 1); nr],
        receiver_sigma: vec![Vec::with_capacity(sim.steps + 1); nr],
        energy: Vec::new(),
        traces: Vec::new(),
        final_state: FieldState::zeros(0),
    };
    for &x in &request.receivers {
        if !(x > 0.0 && x < sim.grid.length) {
            return Err(Error::Config(format!("receiver at {x} m lies outside the domain")));
        }
    }
    sim.run_with(|s| {
        out.times.push(s.t());
        for (i, &x) in request.receivers.iter().enumerate() {
            let (v, sg) = s.sample(x);
            out.receiver_v[i].push(v);
            out.receiver_sigma[i].push(sg);
        }
        if let Some(stride) = request.energy_stride {
            if s.step_index() % stride.max(1) == 0 || s.finished() {
                out.energy.push(s.energy());
                out.traces.push((s.t(), s.traces()));
            }
        }
    })?;
    out.final_state = sim.state;
    Ok(out)
}
