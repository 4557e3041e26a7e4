//! The polynomial first integral F, the system matrix A(U), eigenvalues and
//! critical values of F, regime classification, and the critical-value
//! coordinate map (forward and Newton inverse).
//!
//! Conventions: F(p) = p^{n+1}/(n+1) + u_1 p^{n-1} + ... + u_n. The leading
//! coefficient and the vanishing p^n coefficient are implicit, only
//! (u_1, ..., u_n) is stored. F_p is monic of degree n, so its roots sum to
//! zero.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Inline storage for per-point vectors; no heap traffic for n <= 4.
pub type Coeffs = SmallVec<[f64; 4]>;

const MAX_NEWTON_ITERS: usize = 80;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("system size must be at least 2, got {0}")]
    InvalidSize(usize),
    #[error("coefficient vector contains non-finite entries")]
    NonFinite,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point is not strictly hyperbolic (regime {0:?})")]
    NotHyperbolic(Regime),
    #[error("critical values are not admissible: {}", .0.join("; "))]
    NotAdmissible(Vec<String>),
    #[error("Newton inversion diverged after {} iterations", .history.len())]
    NewtonDiverged { history: Vec<NewtonStep> },
    #[error("root finder failed: {0}")]
    RootFinding(String),
}

/// One iterate of [`maclane_inverse`], kept for diagnosing divergence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonStep {
    pub u: Vec<f64>,
    pub residual: f64,
}

/// The column U = (u_1, ..., u_n) at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffVector(Coeffs);

impl CoeffVector {
    pub fn new(u: &[f64]) -> Result<Self, PolyError> {
        if u.len() < 2 {
            return Err(PolyError::InvalidSize(u.len()));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        Ok(Self(Coeffs::from_slice(u)))
    }

    /// Shorthand for the 3-component case.
    pub fn n3(u1: f64, u2: f64, u3: f64) -> Self {
        Self(smallvec::smallvec![u1, u2, u3])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// The potential u = u_1.
    pub fn potential(&self) -> f64 {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub(crate) fn from_coeffs(c: Coeffs) -> Self {
        Self(c)
    }
}

impl Deref for CoeffVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// F as a dense polynomial, coefficients in descending powers (n + 2 of them).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyF {
    coeffs: Vec<f64>,
}

impl PolyF {
    pub fn n(&self) -> usize {
        self.coeffs.len() - 2
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients of F_p, descending, monic.
    pub fn dp_coeffs(&self) -> Vec<f64> {
        derivative(&self.coeffs)
    }

    pub fn dpp_coeffs(&self) -> Vec<f64> {
        derivative(&derivative(&self.coeffs))
    }

    pub fn eval(&self, p: f64) -> f64 {
        horner(&self.coeffs, p)
    }

    pub fn eval_dp(&self, p: f64) -> f64 {
        horner_deriv(&self.coeffs, p, 1)
    }

    pub fn eval_dpp(&self, p: f64) -> f64 {
        horner_deriv(&self.coeffs, p, 2)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

fn derivative(c: &[f64]) -> Vec<f64> {
    let deg = c.len() - 1;
    c[..deg]
        .iter()
        .enumerate()
        .map(|(k, &a)| a * (deg - k) as f64)
        .collect()
}

fn horner(c: &[f64], p: f64) -> f64 {
    c.iter().fold(0.0, |acc, &a| acc * p + a)
}

/// Evaluates the `order`-th derivative without materialising coefficients.
fn horner_deriv(c: &[f64], p: f64, order: usize) -> f64 {
    let deg = c.len() - 1;
    if order > deg {
        return 0.0;
    }
    let mut acc = 0.0;
    for (k, &a) in c[..=deg - order].iter().enumerate() {
        let power = deg - k;
        let falling: f64 = (0..order).map(|j| (power - j) as f64).product();
        acc = acc * p + a * falling;
    }
    acc
}

pub fn build_poly(u: &CoeffVector) -> PolyF {
    let n = u.n();
    let mut coeffs = Vec::with_capacity(n + 2);
    coeffs.push(1.0 / (n as f64 + 1.0));
    coeffs.push(0.0);
    coeffs.extend_from_slice(u);
    PolyF { coeffs }
}

/// F(p) - u_n, i.e. F without its constant term.
fn eval_without_constant(u: &[f64], p: f64) -> f64 {
    let n = u.len();
    let mut acc = 1.0 / (n as f64 + 1.0);
    acc *= p; // p^1 coefficient slot of u_0 = 0
    for &c in &u[..n - 1] {
        acc = acc * p + c;
    }
    acc * p
}

/// The matrix of U_t + A(U) U_q = 0.
///
/// Row 0 is (0, 1, 0, ...); row k >= 1 carries -(n-k) u_k in the first
/// column and 1 on the superdiagonal.
pub fn matrix_a(u: &CoeffVector) -> DMatrix<f64> {
    let n = u.n();
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        if k + 1 < n {
            a[(k, k + 1)] = 1.0;
        }
        if k >= 1 {
            a[(k, 0)] = -((n - k) as f64) * u[k - 1];
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Hyperbolic,
    Elliptic,
    Degenerate,
    MaxDegenerate,
}

impl Regime {
    pub fn is_degenerate(self) -> bool {
        matches!(self, Regime::Degenerate | Regime::MaxDegenerate)
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Hyperbolic => "hyperbolic",
            Regime::Elliptic => "elliptic",
            Regime::Degenerate => "degenerate",
            Regime::MaxDegenerate => "max-degenerate",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Floating-point bands around the exact regime boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTolerance {
    pub eps_disc: f64,
    pub eps_zero: f64,
}

impl RegimeTolerance {
    pub fn new(eps_disc: f64, eps_zero: f64) -> Option<Self> {
        (eps_disc > 0.0 && eps_zero > 0.0).then_some(Self { eps_disc, eps_zero })
    }
}

impl Default for RegimeTolerance {
    fn default() -> Self {
        Self {
            eps_disc: 1e-10,
            eps_zero: 1e-10,
        }
    }
}

/// Discriminant of p^3 + 2 u_1 p + u_2.
pub fn discriminant_n3(u1: f64, u2: f64) -> f64 {
    -32.0 * u1 * u1 * u1 - 27.0 * u2 * u2
}

pub fn classify_regime(u: &CoeffVector, tol: RegimeTolerance) -> Regime {
    if u.n() == 3 {
        classify_n3(u[0], u[1], tol)
    } else {
        match companion_roots(u) {
            Ok(roots) => classify_by_roots(&roots, u, tol),
            Err(_) => Regime::Degenerate,
        }
    }
}

fn classify_n3(u1: f64, u2: f64, tol: RegimeTolerance) -> Regime {
    let d = discriminant_n3(u1, u2);
    if d > tol.eps_disc {
        Regime::Hyperbolic
    } else if d < -tol.eps_disc {
        Regime::Elliptic
    } else if u1.abs() <= tol.eps_zero && u2.abs() <= tol.eps_zero {
        Regime::MaxDegenerate
    } else {
        Regime::Degenerate
    }
}

/// Regime from a set of roots of F_p: the root-product discriminant
/// prod_{i<j} |l_i - l_j|^2 against `eps_disc`, then realness of the roots.
pub fn classify_by_roots(roots: &[Complex64], u: &[f64], tol: RegimeTolerance) -> Regime {
    let n = u.len();
    if u[..n - 1].iter().all(|c| c.abs() <= tol.eps_zero) {
        return Regime::MaxDegenerate;
    }
    let mut disc = 1.0;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            disc *= (roots[i] - roots[j]).norm_sqr();
        }
    }
    if disc <= tol.eps_disc {
        return Regime::Degenerate;
    }
    let complex = roots.iter().any(|z| z.im.abs() > 1e-12 * z.norm().max(1.0));
    if complex {
        Regime::Elliptic
    } else {
        Regime::Hyperbolic
    }
}

/// Roots of F_p, eigenvalue-style ordering, plus critical values and regime.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    pub lambdas: Vec<Complex64>,
    pub rs: Vec<Complex64>,
    pub regime: Regime,
}

impl EigenData {
    /// Real parts of the roots; meaningful in the hyperbolic regime.
    pub fn real_lambdas(&self) -> Coeffs {
        self.lambdas.iter().map(|z| z.re).collect()
    }

    pub fn real_rs(&self) -> Coeffs {
        self.rs.iter().map(|z| z.re).collect()
    }
}

pub fn eigen_data(u: &CoeffVector, tol: RegimeTolerance) -> Result<EigenData, PolyError> {
    let (lambdas, regime) = if u.n() == 3 {
        let regime = classify_n3(u[0], u[1], tol);
        (depressed_cubic_roots(2.0 * u[0], u[1]).to_vec(), regime)
    } else {
        let roots = companion_roots(u)?;
        let regime = classify_by_roots(&roots, u, tol);
        (roots, regime)
    };
    if lambdas
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(PolyError::RootFinding("non-finite root".into()));
    }
    let f = build_poly(u);
    let rs = lambdas.iter().map(|&z| f.eval_complex(z)).collect();
    Ok(EigenData {
        lambdas,
        rs,
        regime,
    })
}

/// Real, ascending roots of F_p at a strictly hyperbolic point.
pub fn hyperbolic_roots(u: &CoeffVector, tol: RegimeTolerance) -> Result<Coeffs, PolyError> {
    let regime = classify_regime(u, tol);
    if regime != Regime::Hyperbolic {
        return Err(PolyError::NotHyperbolic(regime));
    }
    if u.n() == 3 {
        Ok(depressed_cubic_roots(2.0 * u[0], u[1])
            .iter()
            .map(|z| z.re)
            .collect())
    } else {
        let mut re: Coeffs = companion_roots(u)?.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.total_cmp(b));
        Ok(re)
    }
}

/// Roots of p^3 + a p + b.
///
/// Three real roots are returned ascending. With one real root the result
/// is (alpha - i beta, alpha + i beta, real), beta > 0. Each root gets one
/// Newton polish step, kept only when it lowers the residual.
pub fn depressed_cubic_roots(a: f64, b: f64) -> [Complex64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    if a == 0.0 && b == 0.0 {
        return [zero; 3];
    }
    let d = -4.0 * a * a * a - 27.0 * b * b;
    let f = |z: Complex64| z * z * z + z * a + b;
    let df = |z: Complex64| z * z * 3.0 + a;
    let polish = |z: Complex64| {
        let d = df(z);
        if d.norm() == 0.0 {
            return z;
        }
        let cand = z - f(z) / d;
        if f(cand).norm() < f(z).norm() {
            cand
        } else {
            z
        }
    };
    if d >= 0.0 && a < 0.0 {
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r = [0.0f64; 3];
        for (k, slot) in r.iter_mut().enumerate() {
            let z = Complex64::new(
                m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos(),
                0.0,
            );
            *slot = polish(z).re;
        }
        r.sort_by(|x, y| x.total_cmp(y));
        [
            Complex64::new(r[0], 0.0),
            Complex64::new(r[1], 0.0),
            Complex64::new(r[2], 0.0),
        ]
    } else {
        // single real root, cancellation-free Cardano
        let sq = (b * b / 4.0 + a * a * a / 27.0).max(0.0).sqrt();
        let big = -(b.signum()) * (b.abs() / 2.0 + sq).cbrt();
        let big = if b == 0.0 {
            (b.abs() / 2.0 + sq).cbrt()
        } else {
            big
        };
        let s = if big == 0.0 {
            0.0
        } else {
            big - a / (3.0 * big)
        };
        let s = polish(Complex64::new(s, 0.0)).re;
        let alpha = -s / 2.0;
        let beta = ((3.0 * s * s + 4.0 * a).max(0.0)).sqrt() / 2.0;
        let lo = polish(Complex64::new(alpha, -beta));
        let hi = lo.conj();
        [lo, hi, Complex64::new(s, 0.0)]
    }
}

/// Roots of F_p for general n via companion-matrix eigenvalues, two Newton
/// polish steps each, sorted by (real part, imaginary part).
pub fn companion_roots(u: &CoeffVector) -> Result<Vec<Complex64>, PolyError> {
    let f = build_poly(u);
    let dp = f.dp_coeffs(); // monic, length n + 1
    let n = dp.len() - 1;
    let mut c = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        c[(0, k)] = -dp[k + 1];
        if k + 1 < n {
            c[(k + 1, k)] = 1.0;
        }
    }
    let eig = c.complex_eigenvalues();
    let eval = |z: Complex64| {
        dp.iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    };
    let ddp = derivative(&dp);
    let eval_d = |z: Complex64| {
        ddp.iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    };
    let mut roots: Vec<Complex64> = eig
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..2 {
                let d = eval_d(z);
                if d.norm() == 0.0 {
                    break;
                }
                let cand = z - eval(z) / d;
                if eval(cand).norm() <= eval(z).norm() {
                    z = cand;
                }
            }
            if z.im != 0.0 && z.im.abs() <= 1e-14 * z.norm().max(1.0) {
                z.im = 0.0;
            }
            z
        })
        .collect();
    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(PolyError::RootFinding(
            "companion eigenvalues not finite".into(),
        ));
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Critical values r_i = F(lambda_i), ordered like the ascending roots.
pub fn maclane_forward(u: &CoeffVector) -> Result<Coeffs, PolyError> {
    let lambdas = hyperbolic_roots(u, RegimeTolerance::default())?;
    Ok(critical_values(u, &lambdas))
}

pub(crate) fn critical_values(u: &[f64], lambdas: &[f64]) -> Coeffs {
    let c = u[u.len() - 1];
    lambdas
        .iter()
        .map(|&l| eval_without_constant(u, l) + c)
        .collect()
}

/// Whether `r` lies in the image of the hyperbolic region: the consecutive
/// critical values alternate, with the largest root a local minimum.
pub fn admissible(r: &[f64], n: usize) -> bool {
    r.len() == n && n >= 2 && admissibility_violations(r).is_empty()
}

/// Human-readable list of the violated inequalities (1-based indices).
pub fn admissibility_violations(r: &[f64]) -> Vec<String> {
    let n = r.len();
    let mut out = Vec::new();
    for k in 0..n.saturating_sub(1) {
        // 1-based index k+1; the difference r_{k+1} - r_{k+2} has sign (-1)^{k+n}
        let expect_positive = (k + n).is_multiple_of(2);
        let diff = r[k] - r[k + 1];
        let ok = if expect_positive {
            diff > 0.0
        } else {
            diff < 0.0
        };
        if !ok {
            let (hi, lo) = if expect_positive {
                (k + 1, k + 2)
            } else {
                (k + 2, k + 1)
            };
            out.push(format!(
                "r{hi} > r{lo} violated (r{hi} = {}, r{lo} = {})",
                r[hi - 1],
                r[lo - 1]
            ));
        }
    }
    out
}

/// Recovers u from critical values by Newton iteration on the Vandermonde
/// Jacobian d r_i / d u_k = lambda_i^{n-k}, halving steps that would leave
/// the hyperbolic region. The constant term is re-fitted after every step so
/// that r_1 is matched exactly.
///
/// Convergence is declared at `tol_newton` or at the round-off floor of the
/// evaluation, whichever is larger.
pub fn maclane_inverse(
    r: &[f64],
    u_guess: &CoeffVector,
    tol_newton: f64,
) -> Result<CoeffVector, PolyError> {
    let n = u_guess.n();
    if r.len() != n {
        return Err(PolyError::LengthMismatch {
            expected: n,
            got: r.len(),
        });
    }
    let violations = admissibility_violations(r);
    if !violations.is_empty() {
        return Err(PolyError::NotAdmissible(violations));
    }
    let tol = RegimeTolerance::default();
    let mut u = u_guess.clone();
    let mut lambdas = hyperbolic_roots(&u, tol)?;
    refit_constant(&mut u, r, &lambdas);
    let mut history = Vec::new();

    let residual = |u: &CoeffVector, lambdas: &[f64]| -> f64 {
        critical_values(u, lambdas)
            .iter()
            .zip(r)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let mut err = residual(&u, &lambdas);
    for _ in 0..MAX_NEWTON_ITERS {
        history.push(NewtonStep {
            u: u.to_vec(),
            residual: err,
        });
        let scale = r
            .iter()
            .map(|x| x.abs())
            .chain(lambdas.iter().map(|l| l.abs().powi(n as i32 + 1)))
            .fold(1.0, f64::max);
        let floor = 64.0 * f64::EPSILON * scale;
        if err <= tol_newton.max(floor) {
            return Ok(u);
        }
        let rv = critical_values(&u, &lambdas);
        let jac = DMatrix::from_fn(n, n, |i, k| lambdas[i].powi((n - 1 - k) as i32));
        let rhs = nalgebra::DVector::from_fn(n, |i, _| rv[i] - r[i]);
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Err(PolyError::NewtonDiverged { history });
        };

        let mut step = 1.0;
        let mut fallback: Option<(CoeffVector, Coeffs, f64)> = None;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Coeffs = u
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a - step * d)
                .collect();
            let mut cand = CoeffVector::from_coeffs(cand);
            if let Ok(l) = hyperbolic_roots(&cand, tol) {
                refit_constant(&mut cand, r, &l);
                let e = residual(&cand, &l);
                if e < err {
                    accepted = Some((cand, l, e));
                    break;
                }
                if fallback.is_none() {
                    fallback = Some((cand, l, e));
                }
            }
            step *= 0.5;
        }
        match accepted.or(fallback) {
            Some((cand, l, e)) => {
                if e >= err && err <= 1e3 * floor {
                    // stagnated at round-off
                    return Ok(u);
                }
                u = cand;
                lambdas = l;
                err = e;
            }
            None => return Err(PolyError::NewtonDiverged { history }),
        }
    }
    history.push(NewtonStep {
        u: u.to_vec(),
        residual: err,
    });
    Err(PolyError::NewtonDiverged { history })
}

/// Starting point for `maclane_inverse` built from the critical values alone.
///
/// For n = 3 this is the symmetric quartic (u_2 = 0) whose depth
/// r_2 - (r_1 + r_3)/2 matches; otherwise F_p is taken as a scaled monic
/// Chebyshev polynomial. The constant term is left to the inverse to refit.
pub fn inverse_seed(r: &[f64]) -> Result<CoeffVector, PolyError> {
    let n = r.len();
    if n < 2 {
        return Err(PolyError::InvalidSize(n));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(PolyError::NonFinite);
    }
    if n == 3 {
        let depth = (r[1] - 0.5 * (r[0] + r[2])).max(1e-12);
        return CoeffVector::new(&[-depth.sqrt(), 0.0, r[1]]);
    }
    let (lo, hi) = r
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let s = (hi - lo).max(1e-12).powf(1.0 / (n as f64 + 1.0));
    // T_{k+1} = 2x T_k - T_{k-1}, coefficients ascending
    let (mut prev, mut cur) = (vec![1.0], vec![0.0, 1.0]);
    for _ in 1..n {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    let lead = cur[n];
    let mut u = vec![0.0; n];
    for k in 1..n {
        // coefficient of p^{n-1-k} in F_p is (n - k) u_k
        let a = cur[n - 1 - k] / lead * s.powi(k as i32 + 1);
        u[k - 1] = a / (n - k) as f64;
    }
    CoeffVector::new(&u)
}

/// u_n = r_1 - (F - u_n)(lambda_1).
fn refit_constant(u: &mut CoeffVector, r: &[f64], lambdas: &[f64]) {
    let n = u.n();
    let without = eval_without_constant(u, lambdas[0]);
    u.as_mut_slice()[n - 1] = r[0] - without;
}
