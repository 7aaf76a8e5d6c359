//! Fourth-order explicit update of the velocity-stress system on a
//! cell-centred grid.
//!
//! The one-step update is the Cauchy-Kowalevski expansion
//! `U^{n+1} = U^n + sum_{m=1..4} dt^m/m! (-A)^m d_x^m U` with five-point
//! central differences for the spatial derivatives. For a single advected
//! characteristic it is exactly degree-4 Lagrange interpolation at the foot
//! of the characteristic, which makes it stable up to `zeta = 1` and exact
//! (one cell per step) at `zeta = 1`.
//!
//! Stencil reads that cross the interface take values from
//! [`InterfaceOverrides`], produced by the immersed-interface module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Forcing, MaterialHalfSpaces, Side, SourceSpec};

/// Uniform cell-centred grid on `[0, length]`: node `j` sits at `(j + 1/2) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub nx: usize,
    pub dx: f64,
    pub dt: f64,
    pub zeta: f64,
}

/// `dt = zeta dx / max(c)`.
pub fn cfl_timestep(dx: f64, material: &MaterialHalfSpaces, zeta: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Config(format!("CFL number must lie in (0, 1], got {zeta}")));
    }
    if !(dx > 0.0) {
        return Err(Error::Config(format!("grid spacing must be positive, got {dx}")));
    }
    Ok(zeta * dx / material.c_max())
}

impl Grid {
    pub fn new(length: f64, nx: usize, material: &MaterialHalfSpaces, zeta: f64) -> Result<Self> {
        if nx < 8 {
            return Err(Error::Config(format!("need at least 8 cells, got {nx}")));
        }
        if !(length > 0.0) {
            return Err(Error::Config(format!("domain length must be positive, got {length}")));
        }
        let dx = length / nx as f64;
        let dt = cfl_timestep(dx, material, zeta)?;
        Ok(Self {
            length,
            nx,
            dx,
            dt,
            zeta,
        })
    }

    /// Shrink `dt` so that `t_end` is reached after a whole number of steps.
    ///
    /// Returns the grid and that number of steps.
    pub fn fitted_to(self, t_end: f64) -> (Self, usize) {
        self.fitted_to_multiple(t_end, 1)
    }

    /// As [`Grid::fitted_to`], with the step count a multiple of `m`.
    pub fn fitted_to_multiple(mut self, t_end: f64, m: usize) -> (Self, usize) {
        let m = m.max(1);
        let blocks = (t_end / (self.dt * m as f64) - 1e-9).ceil().max(1.0) as usize;
        let steps = blocks * m;
        let dt = t_end / steps as f64;
        self.zeta *= dt / self.dt;
        self.dt = dt;
        (self, steps)
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Index `i` of the last node left of `x0`; `x0` must fall strictly
    /// between nodes `i` and `i + 1`.
    pub fn interface_index(&self, x0: f64) -> Result<usize> {
        let s = x0 / self.dx - 0.5;
        let i = s.floor();
        if (s - i).abs() < 1e-9 || (s - i - 1.0).abs() < 1e-9 {
            return Err(Error::Config(format!(
                "interface at {x0} m coincides with a grid node (dx = {})",
                self.dx
            )));
        }
        if i < 0.0 || i as usize + 1 >= self.nx {
            return Err(Error::Config(format!("interface at {x0} m lies outside the grid")));
        }
        Ok(i as usize)
    }
}

/// Velocity and stress samples at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub v: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FieldState {
    pub fn zeros(nx: usize) -> Self {
        Self {
            t: 0.0,
            v: vec![0.0; nx],
            sigma: vec![0.0; nx],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn at(&self, j: usize) -> [f64; 2] {
        [self.v[j], self.sigma[j]]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .v
            .iter()
            .zip(&self.sigma)
            .position(|(a, b)| !(a.is_finite() && b.is_finite()))
        {
            Some(node) => Err(Error::NonFinite { node, t: self.t }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Outgoing Riemann invariant extended, incoming one set to zero.
    #[default]
    Absorbing,
    /// Zero ghost values.
    ReflectingZero,
}

/// Two ghost nodes beyond each end, ordered outward (`[0]` is adjacent to the domain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghosts {
    pub left: [[f64; 2]; 2],
    pub right: [[f64; 2]; 2],
}

/// Ghost values closing the domain at `x = 0` and `x = L`.
pub fn apply_boundary(
    state: &FieldState,
    material: &MaterialHalfSpaces,
    policy: BoundaryPolicy,
) -> Ghosts {
    match policy {
        BoundaryPolicy::ReflectingZero => Ghosts {
            left: [[0.0; 2]; 2],
            right: [[0.0; 2]; 2],
        },
        BoundaryPolicy::Absorbing => {
            let n = state.len();
            let z_left = material.impedance(Side::Minus);
            let z_right = material.impedance(Side::Plus);
            // Left end: keep J^L = (v + σ/Z)/2, drop J^R.
            let [v, s] = state.at(0);
            let jl = 0.5 * (v + s / z_left);
            let left = [jl, z_left * jl];
            // Right end: keep J^R = (v - σ/Z)/2, drop J^L.
            let [v, s] = state.at(n - 1);
            let jr = 0.5 * (v - s / z_right);
            let right = [jr, -z_right * jr];
            Ghosts {
                left: [left; 2],
                right: [right; 2],
            }
        }
    }
}

/// Values substituted for stencil reads across the interface.
///
/// `for_minus` holds the smooth extension of the left solution at nodes
/// `i0 + 1` and `i0 + 2`; `for_plus` holds the extension of the right
/// solution at nodes `i0 - 1` and `i0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceOverrides {
    pub i0: usize,
    pub for_minus: [[f64; 2]; 2],
    pub for_plus: [[f64; 2]; 2],
}

impl InterfaceOverrides {
    /// Value of node `node` as seen by a stencil centred on `reader`'s side.
    pub fn get(&self, reader: Side, node: usize) -> Option<[f64; 2]> {
        match reader {
            Side::Minus if node == self.i0 + 1 => Some(self.for_minus[0]),
            Side::Minus if node == self.i0 + 2 => Some(self.for_minus[1]),
            Side::Plus if node + 1 == self.i0 => Some(self.for_plus[0]),
            Side::Plus if node == self.i0 => Some(self.for_plus[1]),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Side, usize, [f64; 2])> + '_ {
        [
            (Side::Minus, self.i0 + 1, self.for_minus[0]),
            (Side::Minus, self.i0 + 2, self.for_minus[1]),
            (Side::Plus, self.i0 - 1, self.for_plus[0]),
            (Side::Plus, self.i0, self.for_plus[1]),
        ]
        .into_iter()
    }
}

/// Apply `-A` for the medium with density `rho` and modulus `young`.
#[inline]
fn minus_a(w: [f64; 2], rho: f64, young: f64) -> [f64; 2] {
    [w[1] / rho, young * w[0]]
}

/// Advance `state` by one step of `grid.dt`.
///
/// With `overrides = None` the domain is treated as interface-free, which is
/// only allowed for a homogeneous medium.
pub fn ader4_step(
    state: &FieldState,
    grid: &Grid,
    material: &MaterialHalfSpaces,
    ghosts: &Ghosts,
    overrides: Option<&InterfaceOverrides>,
) -> Result<FieldState> {
    let n = state.len();
    if n != grid.nx {
        return Err(Error::Internal(format!(
            "state has {n} nodes, grid has {}",
            grid.nx
        )));
    }
    if overrides.is_none() && !material.is_homogeneous() {
        return Err(Error::Internal(
            "heterogeneous medium stepped without interface overrides".into(),
        ));
    }
    let split = match overrides {
        Some(o) => o.i0 + 1,
        None => n,
    };
    let r = grid.dt / grid.dx;
    let mut next = FieldState {
        t: state.t + grid.dt,
        v: vec![0.0; n],
        sigma: vec![0.0; n],
    };

    let mut update_range = |range: std::ops::Range<usize>, side: Side| -> Result<()> {
        let rho = material.rho(side);
        let young = material.young(side);
        let cr = material.c(side) * r;
        let (c2, c4) = (cr * cr, cr.powi(4));
        for j in range.clone() {
            let mut u = [[0.0; 2]; 5];
            for (slot, off) in u.iter_mut().zip(-2isize..=2) {
                let idx = j as isize + off;
                *slot = if idx < 0 {
                    ghosts.left[(-idx - 1) as usize]
                } else if idx as usize >= n {
                    ghosts.right[idx as usize - n]
                } else if range.contains(&(idx as usize)) {
                    state.at(idx as usize)
                } else {
                    overrides
                        .and_then(|o| o.get(side, idx as usize))
                        .ok_or_else(|| {
                            Error::Internal(format!(
                                "node {j} reads node {idx} across the interface without an override"
                            ))
                        })?
                };
            }
            let mut even = [0.0; 2];
            let mut odd = [0.0; 2];
            for c in 0..2 {
                let (m2, m1, z, p1, p2) = (u[0][c], u[1][c], u[2][c], u[3][c], u[4][c]);
                let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / 12.0;
                let d2 = (-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) / 12.0;
                let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / 2.0;
                let d4 = p2 - 4.0 * p1 + 6.0 * z - 4.0 * m1 + m2;
                // odd part goes through -A, even part is scalar since A^2 = c^2 I
                even[c] = z + 0.5 * c2 * d2 + c4 / 24.0 * d4;
                odd[c] = r * d1 + c2 * r / 6.0 * d3;
            }
            let odd = minus_a(odd, rho, young);
            next.v[j] = even[0] + odd[0];
            next.sigma[j] = even[1] + odd[1];
        }
        Ok(())
    };
    update_range(0..split, Side::Minus)?;
    if split < n {
        update_range(split..n, Side::Plus)?;
    }
    Ok(next)
}

/// Hat-function discretisation of a point force at `x_s`: node indices and weights
/// (weights sum to one).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSource {
    pub nodes: Vec<(usize, f64)>,
    pub x_s: f64,
}

impl PointSource {
    pub fn new(grid: &Grid, x_s: f64, x0: Option<f64>) -> Result<Self> {
        if let Some(x0) = x0 {
            if (x_s - x0).abs() <= 2.0 * grid.dx {
                return Err(Error::Config(format!(
                    "source at {x_s} m lies within two cells of the interface at {x0} m"
                )));
            }
        }
        let s = x_s / grid.dx - 0.5;
        if !(s >= 0.0 && s <= (grid.nx - 1) as f64) {
            return Err(Error::Config(format!("source at {x_s} m lies outside the grid")));
        }
        let j = s.floor() as usize;
        let w = s - j as f64;
        let mut nodes = vec![(j, 1.0 - w)];
        if w > 0.0 {
            nodes.push((j + 1, w));
        }
        Ok(Self { nodes, x_s })
    }
}

/// Add the impulse of a point force over one step: `dt S / (rho dx)` spread on
/// the nodes of `source`. `s_value` is the source evaluated at mid-step.
pub fn inject_point_source(
    state: &mut FieldState,
    source: &PointSource,
    s_value: f64,
    rho: f64,
    dx: f64,
    dt: f64,
) {
    if s_value == 0.0 {
        return;
    }
    let impulse = dt * s_value / (rho * dx);
    for &(j, w) in &source.nodes {
        state.v[j] += w * impulse;
    }
}

/// Initial fields: the right-going pulse for a Cauchy problem, zero for a point source.
pub fn initial_state(
    grid: &Grid,
    material: &MaterialHalfSpaces,
    source: &SourceSpec,
) -> Result<FieldState> {
    let mut state = FieldState::zeros(grid.nx);
    if let Forcing::CauchyPulse { t0 } = source.forcing {
        source.validate(material, grid.length)?;
        let c = material.c(Side::Minus);
        let z = material.impedance(Side::Minus);
        for j in 0..grid.nx {
            let v = source.signal(t0 - grid.x(j) / c);
            state.v[j] = v;
            state.sigma[j] = -z * v;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plexi() -> MaterialHalfSpaces {
        MaterialHalfSpaces::homogeneous(1200.0, 2800.0, 200.0).unwrap()
    }

    #[test]
    fn cfl_values() {
        let m = plexi();
        assert_relative_eq!(cfl_timestep(1.0, &m, 0.95).unwrap(), 3.392857142857143e-4, max_relative = 1e-12);
        let unit = MaterialHalfSpaces::homogeneous(1.0, 1.0, 0.5).unwrap();
        assert_eq!(cfl_timestep(1.0, &unit, 1.0).unwrap(), 1.0);
        assert!(matches!(cfl_timestep(1.0, &m, 1.2), Err(Error::Config(_))));
        assert!(cfl_timestep(1.0, &m, 0.0).is_err());
    }

    #[test]
    fn interface_between_nodes() {
        let m = plexi();
        let g = Grid::new(400.0, 400, &m, 0.95).unwrap();
        let i0 = g.interface_index(200.0).unwrap();
        assert_eq!(i0, 199);
        assert!(g.x(i0) < 200.0 && g.x(i0 + 1) > 200.0);
        assert!(g.interface_index(200.5).is_err());
    }

    #[test]
    fn constant_state_is_steady() {
        let m = plexi();
        let g = Grid::new(50.0, 50, &m, 0.95).unwrap();
        let s = FieldState {
            t: 0.0,
            v: vec![0.3; 50],
            sigma: vec![-7.0e5; 50],
        };
        let ghosts = Ghosts {
            left: [[0.3, -7.0e5]; 2],
            right: [[0.3, -7.0e5]; 2],
        };
        let next = ader4_step(&s, &g, &m, &ghosts, None).unwrap();
        for j in 0..50 {
            assert_relative_eq!(next.v[j], 0.3, max_relative = 1e-12);
            assert_relative_eq!(next.sigma[j], -7.0e5, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_field_zero_ghosts() {
        let m = plexi();
        let s = FieldState::zeros(20);
        for p in [BoundaryPolicy::Absorbing, BoundaryPolicy::ReflectingZero] {
            let g = apply_boundary(&s, &m, p);
            assert_eq!(g.left, [[0.0; 2]; 2]);
            assert_eq!(g.right, [[0.0; 2]; 2]);
        }
    }

    #[test]
    fn missing_override_is_reported() {
        let m = MaterialHalfSpaces::new(1200.0, 2800.0, 2000.0, 1500.0, 200.0).unwrap();
        let g = Grid::new(400.0, 400, &m, 0.95).unwrap();
        let s = FieldState::zeros(400);
        let ghosts = apply_boundary(&s, &m, BoundaryPolicy::Absorbing);
        assert!(matches!(
            ader4_step(&s, &g, &m, &ghosts, None),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn zero_source_leaves_state() {
        let m = plexi();
        let g = Grid::new(400.0, 400, &m, 0.95).unwrap();
        let src = PointSource::new(&g, 150.0, Some(200.0)).unwrap();
        let mut s = FieldState::zeros(400);
        inject_point_source(&mut s, &src, 0.0, 1200.0, g.dx, g.dt);
        assert_eq!(s, FieldState::zeros(400));
        assert!(PointSource::new(&g, 199.0, Some(200.0)).is_err());
    }

    #[test]
    fn point_source_splits_between_nodes() {
        let m = plexi();
        let g = Grid::new(400.0, 400, &m, 0.95).unwrap();
        let src = PointSource::new(&g, 150.0, Some(200.0)).unwrap();
        assert_eq!(src.nodes, vec![(149, 0.5), (150, 0.5)]);
        let on_node = PointSource::new(&g, 150.5, None).unwrap();
        assert_eq!(on_node.nodes, vec![(150, 1.0)]);
    }

    #[test]
    fn dirac_initial_state_is_zero() {
        let m = plexi();
        let g = Grid::new(400.0, 400, &m, 0.95).unwrap();
        let s = initial_state(&g, &m, &SourceSpec::point(45.0, 150.0)).unwrap();
        assert!(s.v.iter().chain(&s.sigma).all(|&x| x == 0.0));
    }

    #[test]
    fn cauchy_pulse_is_right_going() {
        let m = plexi();
        let g = Grid::new(400.0, 400, &m, 0.95).unwrap();
        let src = SourceSpec::cauchy(45.0, 172.0 / 2800.0);
        let s = initial_state(&g, &m, &src).unwrap();
        let z = m.impedance(Side::Minus);
        assert!(s.v.iter().any(|&v| v.abs() > 0.1));
        for j in 0..g.nx {
            assert!((0.5 * (s.v[j] + s.sigma[j] / z)).abs() < 1e-15);
        }
        // support width c / f_c
        let width = 2800.0 / 45.0;
        assert_relative_eq!(width, 62.22222222222222, max_relative = 1e-12);
        let nonzero: Vec<f64> = (0..g.nx).filter(|&j| s.v[j] != 0.0).map(|j| g.x(j)).collect();
        let span = nonzero.last().unwrap() - nonzero.first().unwrap();
        assert!(span <= width && span > width - 2.0 * g.dx);
    }

    #[test]
    fn fitted_grid_hits_end_time() {
        let m = plexi();
        let (g, n) = Grid::new(400.0, 400, &m, 0.95).unwrap().fitted_to(0.045);
        assert_relative_eq!(g.dt * n as f64, 0.045, max_relative = 1e-14);
        assert!(g.zeta <= 0.95);
    }
}
