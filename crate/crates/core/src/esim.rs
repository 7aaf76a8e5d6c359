//! Immersed-interface treatment of the time-modulated jump conditions.
//!
//! Writing the jump conditions as `G+(t) = G-(t)` with
//! `G± = U± ∓ ½ ∂t(B U±) ∓ ½ E U±` and differentiating `j` times in time
//! (`∂t^i U = (-A)^i ∂x^i U` on each side, no forcing at `x0`) gives block
//! row `j` of `C±_k U±_k = ...`, where `U±_k` stacks the one-sided limits of
//! `∂x^m U` for `m = 0..=k`. The single `∂x^(k+1)` term of the last row is
//! dropped, so `U+_k = D_k U-_k` with `D_k = (C+_k)^-1 C-_k`.
//!
//! Each step the one-sided derivatives are fitted to `q` nodes per side and
//! the resulting Taylor extensions supply the values a stencil reads across
//! the interface.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fdtd::{FieldState, Grid, InterfaceOverrides};
use crate::model::{interface_params, InterfaceLaw, MaterialHalfSpaces, Side};

/// Largest condition estimate accepted for `C+_k`.
pub const MAX_CONDITION: f64 = 1e12;

/// How time derivatives of the interface law enter the jump matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    /// Full Leibniz expansion with every derivative of `B` and `E`.
    #[default]
    Full,
    /// Jump conditions frozen at the current instant: all time derivatives of
    /// `B` and `E` are set to zero.
    Frozen,
}

/// The pair `C+_k`, `C-_k` of size `2(k+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMatrices {
    pub plus: DMatrix<f64>,
    pub minus: DMatrix<f64>,
    pub t: f64,
    pub k: usize,
}

/// One-sided limits of `∂x^m (v, σ)` for `m = 0..=k`, ordered
/// `(v, σ, ∂x v, ∂x σ, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDerivatives {
    pub minus: DVector<f64>,
    pub plus: DVector<f64>,
    pub k: usize,
}

fn binom(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

type Mat2 = [[f64; 2]; 2];

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Powers `(-A)^0 ..= (-A)^n` for one side.
fn minus_a_powers(material: &MaterialHalfSpaces, side: Side, n: usize) -> Vec<Mat2> {
    let neg_a = [[0.0, 1.0 / material.rho(side)], [material.young(side), 0.0]];
    let mut out = vec![[[1.0, 0.0], [0.0, 1.0]]];
    for i in 1..=n {
        let next = mul2(&out[i - 1], &neg_a);
        out.push(next);
    }
    out
}

/// Assemble `C+_k` and `C-_k` at time `t`.
///
/// Needs time derivatives of the law up to order `k + 1`, hence `k <= 5`.
pub fn build_jump_matrices(
    law: &InterfaceLaw,
    material: &MaterialHalfSpaces,
    t: f64,
    k: usize,
    mode: DerivativeMode,
) -> Result<JumpMatrices> {
    // b[n] = B^(n), e[n] = E^(n)
    let mut b = Vec::with_capacity(k + 2);
    let mut e = Vec::with_capacity(k + 2);
    for n in 0..=k + 1 {
        let p = if n > 0 && mode == DerivativeMode::Frozen {
            interface_params(law, t, 0).map(|_| Default::default())?
        } else {
            interface_params(law, t, n)?
        };
        b.push([[0.0, p.compliance], [p.inertia, 0.0]]);
        e.push([[0.0, p.compliance_loss], [p.inertia_loss, 0.0]]);
    }

    let size = 2 * (k + 1);
    let assemble = |side: Side, sign: f64| -> DMatrix<f64> {
        let pw = minus_a_powers(material, side, k + 1);
        let mut c = DMatrix::<f64>::zeros(size, size);
        for j in 0..=k {
            for l in 0..=(j + 1).min(k) {
                // ∂t^{j+1}(B U) contributes binom(j+1, l) B^{(j+1-l)} (-A)^l ∂x^l U
                let mut block = mul2(&b[j + 1 - l], &pw[l]);
                let wb = binom(j + 1, l);
                let mut acc = [[0.0; 2]; 2];
                for r in 0..2 {
                    for s in 0..2 {
                        acc[r][s] = wb * block[r][s];
                    }
                }
                if l <= j {
                    // ∂t^j(E U) contributes binom(j, l) E^{(j-l)} (-A)^l ∂x^l U
                    block = mul2(&e[j - l], &pw[l]);
                    let we = binom(j, l);
                    for r in 0..2 {
                        for s in 0..2 {
                            acc[r][s] += we * block[r][s];
                        }
                    }
                }
                for r in 0..2 {
                    for s in 0..2 {
                        let diag = if l == j { pw[j][r][s] } else { 0.0 };
                        c[(2 * j + r, 2 * l + s)] = diag + sign * 0.5 * acc[r][s];
                    }
                }
            }
        }
        c
    };

    Ok(JumpMatrices {
        plus: assemble(Side::Plus, -1.0),
        minus: assemble(Side::Minus, 1.0),
        t,
        k,
    })
}

/// Nearest power of two, so that scaling is exact in floating point.
fn pow2_scale(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        2f64.powi(-(x.log2().round() as i32))
    } else {
        1.0
    }
}

/// `D_k = (C+_k)^-1 C-_k`.
///
/// Rows and columns of `C+_k` are equilibrated by powers of two before the
/// LU factorisation; the condition estimate refers to the equilibrated matrix.
pub fn transfer_matrix(jm: &JumpMatrices) -> Result<DMatrix<f64>> {
    let n = jm.plus.nrows();
    let col_scale: Vec<f64> = (0..n)
        .map(|j| pow2_scale(jm.plus.column(j).amax()))
        .collect();
    let mut scaled = jm.plus.clone();
    for j in 0..n {
        scaled.column_mut(j).scale_mut(col_scale[j]);
    }
    let row_scale: Vec<f64> = (0..n).map(|i| pow2_scale(scaled.row(i).amax())).collect();
    for i in 0..n {
        scaled.row_mut(i).scale_mut(row_scale[i]);
    }
    let lu = scaled.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
        t: jm.t,
    })?;
    let condition = one_norm(&scaled) * one_norm(&inv);
    if !(condition.is_finite() && condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition, t: jm.t });
    }
    let mut rhs = jm.minus.clone();
    for i in 0..n {
        rhs.row_mut(i).scale_mut(row_scale[i]);
    }
    let mut d = inv * rhs;
    for i in 0..n {
        d.row_mut(i).scale_mut(col_scale[i]);
    }
    Ok(d)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Per-component scale `dx^-m` (velocity) and `Z dx^-m` (stress) turning the
/// scaled unknowns back into physical derivatives.
fn physical_scale(k: usize, dx: f64, impedance: f64) -> DVector<f64> {
    DVector::from_fn(2 * (k + 1), |i, _| {
        let m = (i / 2) as i32;
        let s = dx.powi(-m);
        if i % 2 == 0 {
            s
        } else {
            impedance * s
        }
    })
}

fn factorials(k: usize) -> Vec<f64> {
    let mut f = vec![1.0; k + 1];
    for m in 1..=k {
        f[m] = f[m - 1] * m as f64;
    }
    f
}

/// Fit the one-sided derivative vectors to `q` nodes on each side of `x0`.
///
/// `q = (k+1)/2` gives a square system; larger `q` is solved in the
/// least-squares sense.
pub fn fit_boundary_derivatives(
    state: &FieldState,
    d: &DMatrix<f64>,
    grid: &Grid,
    material: &MaterialHalfSpaces,
    k: usize,
    q: usize,
) -> Result<BoundaryDerivatives> {
    let size = 2 * (k + 1);
    if d.nrows() != size || d.ncols() != size {
        return Err(Error::Internal(format!(
            "transfer matrix is {}x{}, expected {size}x{size}",
            d.nrows(),
            d.ncols()
        )));
    }
    if 2 * q < k + 1 {
        return Err(Error::Config(format!(
            "{q} fit nodes per side cannot determine derivatives up to order {k}"
        )));
    }
    let x0 = material.x0;
    let i0 = grid.interface_index(x0)?;
    if i0 + 1 < q || i0 + q >= grid.nx {
        return Err(Error::Config(format!(
            "interface too close to the boundary for {q} fit nodes per side"
        )));
    }
    let z_minus = material.impedance(Side::Minus);
    let z_plus = material.impedance(Side::Plus);
    let s_minus = physical_scale(k, grid.dx, z_minus);
    let s_plus = physical_scale(k, grid.dx, z_plus);
    // D in scaled unknowns: S+^-1 D S-
    let d_hat = DMatrix::from_fn(size, size, |i, j| d[(i, j)] * s_minus[j] / s_plus[i]);
    let fact = factorials(k);

    let rows = 4 * q;
    let mut a = DMatrix::<f64>::zeros(rows, size);
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut row = 0;
    for node in (i0 + 1 - q)..=(i0 + q) {
        let delta = (grid.x(node) - x0) / grid.dx;
        let taylor: Vec<f64> = (0..=k).map(|m| delta.powi(m as i32) / fact[m]).collect();
        let side = if node <= i0 { Side::Minus } else { Side::Plus };
        let z = if side == Side::Minus { z_minus } else { z_plus };
        for comp in 0..2 {
            match side {
                Side::Minus => {
                    for m in 0..=k {
                        a[(row, 2 * m + comp)] = taylor[m];
                    }
                }
                Side::Plus => {
                    for m in 0..=k {
                        let dr = d_hat.row(2 * m + comp);
                        for col in 0..size {
                            a[(row, col)] += taylor[m] * dr[col];
                        }
                    }
                }
            }
            let value = if comp == 0 {
                state.v[node]
            } else {
                state.sigma[node] / z
            };
            rhs[row] = value;
            row += 1;
        }
    }

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let (smallest, largest) = (sv.min(), sv.max());
    if !(smallest > largest * 1e-13) {
        return Err(Error::RankDeficient { smallest, largest });
    }
    let w = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let minus = w.component_mul(&s_minus);
    let plus = (&d_hat * &w).component_mul(&s_plus);
    Ok(BoundaryDerivatives { minus, plus, k })
}

/// Fit both one-sided derivative vectors at once, imposing `C+ U+ = C- U-`
/// as equations instead of going through `D_k`.
///
/// Stays well posed at the isolated instants where `C+_k` is singular.
pub fn fit_boundary_derivatives_joint(
    state: &FieldState,
    jm: &JumpMatrices,
    grid: &Grid,
    material: &MaterialHalfSpaces,
    q: usize,
) -> Result<BoundaryDerivatives> {
    let k = jm.k;
    let size = 2 * (k + 1);
    if 2 * q < k + 1 {
        return Err(Error::Config(format!(
            "{q} fit nodes per side cannot determine derivatives up to order {k}"
        )));
    }
    let x0 = material.x0;
    let i0 = grid.interface_index(x0)?;
    if i0 + 1 < q || i0 + q >= grid.nx {
        return Err(Error::Config(format!(
            "interface too close to the boundary for {q} fit nodes per side"
        )));
    }
    let z_minus = material.impedance(Side::Minus);
    let z_plus = material.impedance(Side::Plus);
    let s_minus = physical_scale(k, grid.dx, z_minus);
    let s_plus = physical_scale(k, grid.dx, z_plus);
    let fact = factorials(k);

    let rows = 4 * q + size;
    let mut a = DMatrix::<f64>::zeros(rows, 2 * size);
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut row = 0;
    for node in (i0 + 1 - q)..=(i0 + q) {
        let delta = (grid.x(node) - x0) / grid.dx;
        let (offset, z) = if node <= i0 { (0, z_minus) } else { (size, z_plus) };
        for comp in 0..2 {
            for m in 0..=k {
                a[(row, offset + 2 * m + comp)] = delta.powi(m as i32) / fact[m];
            }
            rhs[row] = if comp == 0 {
                state.v[node]
            } else {
                state.sigma[node] / z
            };
            row += 1;
        }
    }
    for i in 0..size {
        for j in 0..size {
            a[(row, j)] = jm.minus[(i, j)] * s_minus[j];
            a[(row, size + j)] = -jm.plus[(i, j)] * s_plus[j];
        }
        let scale = pow2_scale(a.row(row).amax());
        a.row_mut(row).scale_mut(scale);
        row += 1;
    }

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let (smallest, largest) = (sv.min(), sv.max());
    if !(smallest > largest * 1e-13) {
        return Err(Error::RankDeficient { smallest, largest });
    }
    let w = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let minus = w.rows(0, size).component_mul(&s_minus);
    let plus = w.rows(size, size).component_mul(&s_plus);
    Ok(BoundaryDerivatives { minus, plus, k })
}

/// Evaluate the Taylor extensions at the nodes the other side's stencils read.
pub fn modified_values(bd: &BoundaryDerivatives, grid: &Grid, x0: f64) -> Result<InterfaceOverrides> {
    let i0 = grid.interface_index(x0)?;
    if i0 < 1 || i0 + 2 >= grid.nx {
        return Err(Error::Config("interface too close to the boundary".into()));
    }
    let eval = |derivs: &DVector<f64>, x: f64| -> [f64; 2] {
        let h = x - x0;
        let mut out = [0.0; 2];
        let mut coef = 1.0;
        for m in 0..=bd.k {
            if m > 0 {
                coef *= h / m as f64;
            }
            out[0] += coef * derivs[2 * m];
            out[1] += coef * derivs[2 * m + 1];
        }
        out
    };
    Ok(InterfaceOverrides {
        i0,
        for_minus: [
            eval(&bd.minus, grid.x(i0 + 1)),
            eval(&bd.minus, grid.x(i0 + 2)),
        ],
        for_plus: [eval(&bd.plus, grid.x(i0 - 1)), eval(&bd.plus, grid.x(i0))],
    })
}

/// Mean and jump of the limit values at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterfaceTraces {
    pub mean_v: f64,
    pub mean_sigma: f64,
    pub jump_v: f64,
    pub jump_sigma: f64,
}

pub fn interface_traces(bd: &BoundaryDerivatives) -> InterfaceTraces {
    let (vm, sm) = (bd.minus[0], bd.minus[1]);
    let (vp, sp) = (bd.plus[0], bd.plus[1]);
    InterfaceTraces {
        mean_v: 0.5 * (vp + vm),
        mean_sigma: 0.5 * (sp + sm),
        jump_v: vp - vm,
        jump_sigma: sp - sm,
    }
}

/// Settings of the interface treatment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsimConfig {
    /// Highest spatial derivative carried across the interface (odd).
    pub k: usize,
    /// Fit nodes per side.
    pub q: usize,
    pub mode: DerivativeMode,
    /// Always fit both sides jointly instead of going through `D_k`.
    pub joint_fit: bool,
}

impl Default for EsimConfig {
    fn default() -> Self {
        Self {
            k: 5,
            q: 3,
            mode: DerivativeMode::Full,
            joint_fit: true,
        }
    }
}

impl EsimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k % 2 == 0 || self.k > 5 {
            return Err(Error::Config(format!(
                "interface order k must be odd and at most 5, got {}",
                self.k
            )));
        }
        if 2 * self.q < self.k + 1 {
            return Err(Error::Config(format!(
                "need at least {} fit nodes per side for k = {}",
                self.k.div_ceil(2),
                self.k
            )));
        }
        Ok(())
    }
}

/// Jump matrices, transfer matrix, fit and overrides for one time level.
pub fn interface_update(
    state: &FieldState,
    grid: &Grid,
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    cfg: &EsimConfig,
) -> Result<(BoundaryDerivatives, InterfaceOverrides)> {
    let jm = build_jump_matrices(law, material, state.t, cfg.k, cfg.mode)?;
    let d = transfer_matrix(&jm)?;
    let bd = fit_boundary_derivatives(state, &d, grid, material, cfg.k, cfg.q)?;
    let ov = modified_values(&bd, grid, material.x0)?;
    Ok((bd, ov))
}
