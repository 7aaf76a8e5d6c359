//! Harmonic balance for a sinusoidally modulated interface in a homogeneous
//! medium, and the closed-form coefficients of a static interface.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::model::{InterfaceLaw, MaterialHalfSpaces, ModulationKind, Side};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dimensionless interface parameters: `Ccal = Z C0`, `Qc = Z QC0`,
/// `Mcal = M0 / Z`, `Qm = QM0 / Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub ccal: f64,
    pub qc: f64,
    pub mcal: f64,
    pub qm: f64,
}

impl ReducedParams {
    pub fn new(law: &InterfaceLaw, impedance: f64) -> Result<Self> {
        if !(impedance.is_finite() && impedance > 0.0) {
            return Err(Error::Config(format!("impedance must be > 0, got {impedance}")));
        }
        let b = law.base;
        let rp = Self {
            ccal: impedance * b.compliance,
            qc: impedance * b.compliance_loss,
            mcal: b.inertia / impedance,
            qm: b.inertia_loss / impedance,
        };
        if [rp.ccal, rp.qc, rp.mcal, rp.qm].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Config(format!("reduced parameters must be >= 0: {rp:?}")));
        }
        Ok(rp)
    }
}

/// Complex tridiagonal matrix; row `r` couples unknowns `r-1, r, r+1`.
/// `sub[0]` and `sup[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|r| {
                let mut s = self.diag[r] * x[r];
                if r > 0 {
                    s += self.sub[r] * x[r - 1];
                }
                if r + 1 < n {
                    s += self.sup[r] * x[r + 1];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                self.diag[r]
            } else if c + 1 == r {
                self.sub[r]
            } else if r + 1 == c {
                self.sup[r]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Thomas elimination, with a dense LU fallback when a pivot is tiny.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.len();
        if rhs.len() != n || n == 0 {
            return Err(Error::Internal(format!(
                "tridiagonal size {n} does not match right-hand side {}",
                rhs.len()
            )));
        }
        match self.thomas(rhs) {
            Some(x) => Ok(x),
            None => {
                log::debug!("tridiagonal pivot underflow, using dense LU");
                let b = DVector::from_column_slice(rhs);
                let x = self
                    .to_dense()
                    .lu()
                    .solve(&b)
                    .ok_or_else(|| Error::Numerical("singular harmonic-balance system".into()))?;
                if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Numerical("singular harmonic-balance system".into()));
                }
                Ok(x.iter().copied().collect())
            }
        }
    }

    fn thomas(&self, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = self.len();
        let scale = self
            .diag
            .iter()
            .chain(&self.sub)
            .chain(&self.sup)
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        let mut piv = self.diag[0];
        if piv.norm() <= tiny {
            return None;
        }
        c[0] = if n > 1 { self.sup[0] / piv } else { c[0] };
        d[0] = rhs[0] / piv;
        for r in 1..n {
            piv = self.diag[r] - self.sub[r] * c[r - 1];
            if piv.norm() <= tiny {
                return None;
            }
            if r + 1 < n {
                c[r] = self.sup[r] / piv;
            }
            d[r] = (rhs[r] - self.sub[r] * d[r - 1]) / piv;
        }
        for r in (0..n - 1).rev() {
            d[r] = d[r] - c[r] * d[r + 1];
        }
        Some(d)
    }
}

/// Tridiagonal system and right-hand side indexed `k = -n..=n` (row `k + n`).
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSystem {
    pub matrix: Tridiagonal,
    pub rhs: Vec<Complex64>,
    pub n: usize,
}

fn assemble(
    reduced: f64,
    loss: f64,
    eps: f64,
    eps_loss: f64,
    omega: f64,
    big_omega: f64,
    n: usize,
) -> Result<HarmonicSystem> {
    if n < 1 {
        return Err(Error::Config("harmonic truncation must be >= 1".into()));
    }
    let size = 2 * n + 1;
    let omega_k = |k: i64| omega + k as f64 * big_omega;
    let coupling = |k: i64| (reduced * eps * omega_k(k) - I * loss * eps_loss) / 4.0;
    let mut sub = Vec::with_capacity(size);
    let mut diag = Vec::with_capacity(size);
    let mut sup = Vec::with_capacity(size);
    let mut rhs = vec![Complex64::new(0.0, 0.0); size];
    for r in 0..size {
        let k = r as i64 - n as i64;
        let a = coupling(k);
        sub.push(a);
        diag.push(1.0 + loss / 2.0 + I * reduced * omega_k(k) / 2.0);
        sup.push(-a);
        rhs[r] = match k {
            -1 => a,
            0 => 1.0 - loss / 2.0 - I * reduced * omega / 2.0,
            1 => -a,
            _ => Complex64::new(0.0, 0.0),
        };
    }
    Ok(HarmonicSystem {
        matrix: Tridiagonal { sub, diag, sup },
        rhs,
        n,
    })
}

/// System for `Psi_k = T_k - R_k` (compliance channel).
pub fn assemble_psi_system(
    rp: &ReducedParams,
    eps_c: f64,
    eps_qc: f64,
    omega: f64,
    big_omega: f64,
    n: usize,
) -> Result<HarmonicSystem> {
    assemble(rp.ccal, rp.qc, eps_c, eps_qc, omega, big_omega, n)
}

/// System for `Phi_k = T_k + R_k` (inertia channel).
pub fn assemble_phi_system(
    rp: &ReducedParams,
    eps_m: f64,
    eps_qm: f64,
    omega: f64,
    big_omega: f64,
    n: usize,
) -> Result<HarmonicSystem> {
    assemble(rp.mcal, rp.qm, eps_m, eps_qm, omega, big_omega, n)
}

/// Velocity reflection and transmission coefficients of the harmonics
/// `omega_k = omega + k Omega`, `k = -n..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSpectrum {
    pub omega: f64,
    pub big_omega: f64,
    pub n: usize,
    pub r: Vec<Complex64>,
    pub t: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
}

impl ScatteringSpectrum {
    pub fn index(&self, k: i64) -> Option<usize> {
        let i = k + self.n as i64;
        (0..self.r.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn r_k(&self, k: i64) -> Option<Complex64> {
        self.index(k).map(|i| self.r[i])
    }

    pub fn t_k(&self, k: i64) -> Option<Complex64> {
        self.index(k).map(|i| self.t[i])
    }

    pub fn omega_k(&self, k: i64) -> f64 {
        self.omega + k as f64 * self.big_omega
    }

    pub fn ks(&self) -> impl Iterator<Item = i64> + '_ {
        -(self.n as i64)..=self.n as i64
    }

    pub fn max_reflection(&self) -> f64 {
        self.r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Columns `k, omega_k, Re R, Im R, |R|, Re T, Im T, |T|`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,omega_k,re_r,im_r,abs_r,re_t,im_t,abs_t")?;
        for (i, k) in self.ks().enumerate() {
            let (r, t) = (self.r[i], self.t[i]);
            writeln!(
                w,
                "{k},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.omega_k(k),
                r.re,
                r.im,
                r.norm(),
                t.re,
                t.im,
                t.norm()
            )?;
        }
        Ok(())
    }
}

fn residual(sys: &HarmonicSystem, x: &[Complex64]) -> f64 {
    sys.matrix
        .mul(x)
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Solves both harmonic systems for an incident wave of frequency `f_c`.
pub fn solve_scattering(
    law: &InterfaceLaw,
    material: &MaterialHalfSpaces,
    f_c: f64,
    n: usize,
) -> Result<ScatteringSpectrum> {
    if !material.is_homogeneous() {
        return Err(Error::Config("harmonic balance needs a homogeneous medium".into()));
    }
    if law.kind != ModulationKind::Sinusoidal && !law.is_static() {
        return Err(Error::Config("harmonic balance supports sinusoidal modulation only".into()));
    }
    if !(f_c.is_finite() && f_c > 0.0) {
        return Err(Error::Config(format!("incident frequency must be > 0, got {f_c}")));
    }
    law.validate()?;
    let rp = ReducedParams::new(law, material.impedance(Side::Minus))?;
    let omega = 2.0 * PI * f_c;
    let big_omega = law.omega();
    let d = if law.is_static() { Default::default() } else { law.depth };
    let psi_sys = assemble_psi_system(&rp, d.compliance, d.compliance_loss, omega, big_omega, n)?;
    let phi_sys = assemble_phi_system(&rp, d.inertia, d.inertia_loss, omega, big_omega, n)?;
    let psi = psi_sys.matrix.solve(&psi_sys.rhs)?;
    let phi = phi_sys.matrix.solve(&phi_sys.rhs)?;
    log::trace!(
        "harmonic balance residuals {:e} {:e}",
        residual(&psi_sys, &psi),
        residual(&phi_sys, &phi)
    );
    let r = psi.iter().zip(&phi).map(|(p, f)| (f - p) / 2.0).collect();
    let t = psi.iter().zip(&phi).map(|(p, f)| (f + p) / 2.0).collect();
    Ok(ScatteringSpectrum {
        omega,
        big_omega,
        n,
        r,
        t,
        psi,
        phi,
    })
}

/// Velocity reflection and transmission of a static interface between two
/// half-spaces at angular frequency `omega`.
pub fn static_rt(material: &MaterialHalfSpaces, law: &InterfaceLaw, omega: f64) -> (Complex64, Complex64) {
    let z0 = material.impedance(Side::Minus);
    let z1 = material.impedance(Side::Plus);
    let b = law.base;
    let (c0, m0, qc, qm) = (b.compliance, b.inertia, b.compliance_loss, b.inertia_loss);
    let y0 = c0 * z0 * z1 - m0;
    let y1 = c0 * z0 * z1 + m0;
    let w2 = omega * omega * c0 * m0 / 4.0;
    let cross = (qc * m0 + qm * c0) / 4.0;
    let den = (z1 + z0) * (1.0 - w2 + qc * qm / 4.0)
        + qc * z0 * z1
        + qm
        + I * omega * (y1 + cross * (z1 + z0));
    let num_r = (z1 - z0) * (1.0 - w2 + qc * qm / 4.0) - qc * z0 * z1
        + qm
        - I * omega * (y0 - cross * (z1 - z0));
    let num_t = 2.0 * z0 * (1.0 + w2 - qc * qm / 4.0 - I * omega * cross);
    (-num_r / den, num_t / den)
}

/// Stress reflection and transmission, `(-R_v, Z1/Z0 T_v)`.
pub fn static_rt_stress(
    material: &MaterialHalfSpaces,
    law: &InterfaceLaw,
    omega: f64,
) -> (Complex64, Complex64) {
    let (r, t) = static_rt(material, law, omega);
    let ratio = material.impedance(Side::Plus) / material.impedance(Side::Minus);
    (-r, t * ratio)
}
