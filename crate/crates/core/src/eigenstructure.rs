//! Derivatives of the roots and of u_1 with respect to the critical values,
//! evaluated in closed form from the roots themselves.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::polycore::{
    build_poly, hyperbolic_roots, CoeffVector, Coeffs, PolyError, RegimeTolerance,
};

/// Below this root separation the derivative table is not evaluated.
pub const MIN_ROOT_GAP: f64 = 1e-6;

/// Magnitude under which a genuine-nonlinearity derivative counts as zero.
pub const SIGN_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("roots too close for the derivative table (min gap {gap:e})")]
    NearDegenerate { gap: f64 },
    #[error("closed forms are for n = 3, got n = {0}")]
    RequiresN3(usize),
    #[error("d lambda_{family} / d r_{family} = {value:e} is numerically zero")]
    DegenerateSign { family: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTable {
    pub lambdas: Coeffs,
    /// `dlam[(i, j)]` = d lambda_i / d r_j.
    pub dlam: DMatrix<f64>,
    /// `du[i]` = d u_1 / d r_i.
    pub du: Vec<f64>,
    /// `fpp[i]` = F_pp(lambda_i).
    pub fpp: Vec<f64>,
}

impl DerivativeTable {
    pub fn n(&self) -> usize {
        self.du.len()
    }

    /// Mixed second derivative d^2 u_1 / d r_i d r_k = 2 u_{r_i} u_{r_k} / (l_i - l_k)^2,
    /// defined for i != k.
    pub fn gibbons_tsarev(&self, i: usize, k: usize) -> Option<f64> {
        (i != k).then(|| {
            let d = self.lambdas[i] - self.lambdas[k];
            2.0 * self.du[i] * self.du[k] / (d * d)
        })
    }

    /// d G_i / d r_j = (d lambda_i / d r_j) / (l_i - l_j), i != j, with
    /// G_i = log|F_pp(lambda_i)| / 2.
    pub fn exactness(&self, i: usize, j: usize) -> Option<f64> {
        (i != j).then(|| self.dlam[(i, j)] / (self.lambdas[i] - self.lambdas[j]))
    }
}

fn min_gap(lambdas: &[f64]) -> f64 {
    lambdas
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn guarded_roots(u: &CoeffVector) -> Result<Coeffs, EigenError> {
    let lambdas = hyperbolic_roots(u, RegimeTolerance::default())?;
    let gap = min_gap(&lambdas);
    if gap <= MIN_ROOT_GAP {
        return Err(EigenError::NearDegenerate { gap });
    }
    Ok(lambdas)
}

pub fn derivative_table(u: &CoeffVector) -> Result<DerivativeTable, EigenError> {
    let lambdas = guarded_roots(u)?;
    let n = lambdas.len();
    let f = build_poly(u);
    let fpp: Vec<f64> = lambdas.iter().map(|&l| f.eval_dpp(l)).collect();
    let mut dlam = DMatrix::zeros(n, n);
    for i in 0..n {
        let inv = 1.0 / fpp[i];
        let mut s = 0.0;
        for k in (0..n).filter(|&k| k != i) {
            s += 1.0 / (lambdas[i] - lambdas[k]);
            dlam[(k, i)] = -inv / (lambdas[k] - lambdas[i]);
        }
        dlam[(i, i)] = -inv * s;
    }
    let du = fpp.iter().map(|v| 1.0 / v).collect();
    Ok(DerivativeTable {
        lambdas,
        dlam,
        du,
        fpp,
    })
}

/// The 3x3 closed forms: F_pp(l_i) = prod_{j != i} (l_i - l_j),
/// d l_i / d r_i = -3 l_i / F_pp^2 and K_i = -3 l_i / |F_pp|^{5/2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct N3Simplified {
    pub dlam_diag: [f64; 3],
    pub k: [f64; 3],
    pub fpp: [f64; 3],
}

pub fn n3_simplified(u: &CoeffVector) -> Result<N3Simplified, EigenError> {
    if u.n() != 3 {
        return Err(EigenError::RequiresN3(u.n()));
    }
    let l = guarded_roots(u)?;
    Ok(n3_from_roots([l[0], l[1], l[2]]))
}

pub(crate) fn n3_from_roots(l: [f64; 3]) -> N3Simplified {
    let mut out = N3Simplified {
        dlam_diag: [0.0; 3],
        k: [0.0; 3],
        fpp: [0.0; 3],
    };
    for i in 0..3 {
        let fpp: f64 = (0..3).filter(|&j| j != i).map(|j| l[i] - l[j]).product();
        out.fpp[i] = fpp;
        out.dlam_diag[i] = -3.0 * l[i] / (fpp * fpp);
        out.k[i] = -3.0 * l[i] / fpp.abs().powf(2.5);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCoeffs {
    /// G_i = log|F_pp(lambda_i)| / 2
    pub g: Coeffs,
    /// K_i = |F_pp(lambda_i)|^{-1/2} d lambda_i / d r_i
    pub k: Coeffs,
}

pub fn blowup_coeffs(u: &CoeffVector) -> Result<BlowupCoeffs, EigenError> {
    let t = derivative_table(u)?;
    let g = t.fpp.iter().map(|v| 0.5 * v.abs().ln()).collect();
    let k = t
        .fpp
        .iter()
        .enumerate()
        .map(|(i, v)| t.dlam[(i, i)] / v.abs().sqrt())
        .collect();
    Ok(BlowupCoeffs { g, k })
}

/// Signs of d lambda_1 / d r_1 and d lambda_n / d r_n.
pub fn genuine_nonlinearity(u: &CoeffVector) -> Result<(i8, i8), EigenError> {
    let t = derivative_table(u)?;
    let n = t.n();
    let sign = |family: usize| {
        let v = t.dlam[(family, family)];
        if v.abs() < SIGN_FLOOR {
            Err(EigenError::DegenerateSign {
                family: family + 1,
                value: v,
            })
        } else {
            Ok(if v > 0.0 { 1 } else { -1 })
        }
    };
    Ok((sign(0)?, sign(n - 1)?))
}
