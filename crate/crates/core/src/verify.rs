//! Finite-difference oracles for the closed-form derivative calculus.
//!
//! Everything here goes through the inverse map and the root finder only, so
//! agreement with [`crate::eigenstructure`] is an independent check.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigenstructure::{derivative_table, DerivativeTable, EigenError};
use crate::polycore::{
    build_poly, discriminant_n3, hyperbolic_roots, inverse_seed, maclane_forward, maclane_inverse,
    matrix_a, CoeffVector, Coeffs, PolyError, RegimeTolerance,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("step {h:e} leaves the hyperbolic region: {reason}")]
    StepTooLarge { h: f64, reason: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One r-perturbed point: the refitted coefficients and their roots.
struct Shifted {
    u: CoeffVector,
    lambdas: Coeffs,
}

fn shifted(
    u: &CoeffVector,
    r: &[f64],
    moves: &[(usize, f64)],
    h: f64,
) -> Result<Shifted, VerifyError> {
    let too_large = |e: PolyError| VerifyError::StepTooLarge {
        h,
        reason: e.to_string(),
    };
    let mut rr = r.to_vec();
    for &(j, d) in moves {
        rr[j] += d;
    }
    let u = maclane_inverse(&rr, u, 0.0).map_err(too_large)?;
    let lambdas = hyperbolic_roots(&u, RegimeTolerance::default()).map_err(too_large)?;
    Ok(Shifted { u, lambdas })
}

/// Central-difference pairs along each r_j, with step `h[j]`.
fn probes(u: &CoeffVector, h: &[f64]) -> Result<Vec<(Shifted, Shifted)>, VerifyError> {
    let r = maclane_forward(u)?;
    (0..u.n())
        .map(|j| {
            Ok((
                shifted(u, &r, &[(j, h[j])], h[j])?,
                shifted(u, &r, &[(j, -h[j])], h[j])?,
            ))
        })
        .collect()
}

fn lambda_matrix(pairs: &[(Shifted, Shifted)], h: &[f64]) -> DMatrix<f64> {
    let n = pairs.len();
    DMatrix::from_fn(n, n, |i, j| {
        (pairs[j].0.lambdas[i] - pairs[j].1.lambdas[i]) / (2.0 * h[j])
    })
}

fn u1_vector(pairs: &[(Shifted, Shifted)], h: &[f64]) -> Vec<f64> {
    pairs
        .iter()
        .zip(h)
        .map(|((p, m), h)| (p.u[0] - m.u[0]) / (2.0 * h))
        .collect()
}

/// d lambda_i / d r_j by central differences; column j perturbs r_j.
pub fn fd_lambda_derivs(u: &CoeffVector, h: f64) -> Result<DMatrix<f64>, VerifyError> {
    let h = vec![h; u.n()];
    Ok(lambda_matrix(&probes(u, &h)?, &h))
}

/// d u_1 / d r_i by central differences.
pub fn fd_u_first(u: &CoeffVector, h: f64) -> Result<Vec<f64>, VerifyError> {
    let h = vec![h; u.n()];
    Ok(u1_vector(&probes(u, &h)?, &h))
}

/// d^2 u_1 / d r_i d r_k; the diagonal uses the three-point stencil and the
/// off-diagonal the four-corner one.
pub fn fd_u_second(u: &CoeffVector, h: f64) -> Result<DMatrix<f64>, VerifyError> {
    fd_u_second_steps(u, &vec![h; u.n()])
}

/// As [`fd_u_second`] with a separate step along each r_j.
pub fn fd_u_second_steps(u: &CoeffVector, h: &[f64]) -> Result<DMatrix<f64>, VerifyError> {
    let r = maclane_forward(u)?;
    let n = u.n();
    let at = |moves: &[(usize, f64)], step: f64| shifted(u, &r, moves, step).map(|s| s.u[0]);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = h[i];
        m[(i, i)] = (at(&[(i, hi)], hi)? - 2.0 * u[0] + at(&[(i, -hi)], hi)?) / (hi * hi);
        for k in i + 1..n {
            let hk = h[k];
            let step = hi.max(hk);
            let v = (at(&[(i, hi), (k, hk)], step)?
                - at(&[(i, hi), (k, -hk)], step)?
                - at(&[(i, -hi), (k, hk)], step)?
                + at(&[(i, -hi), (k, -hk)], step)?)
                / (4.0 * hi * hk);
            m[(i, k)] = v;
            m[(k, i)] = v;
        }
    }
    Ok(m)
}

/// Richardson combination of the steps h and h/2, fourth order in h.
pub fn fd_u_second_extrapolated(u: &CoeffVector, h: &[f64]) -> Result<DMatrix<f64>, VerifyError> {
    let half: Vec<f64> = h.iter().map(|x| 0.5 * x).collect();
    let coarse = fd_u_second_steps(u, h)?;
    let fine = fd_u_second_steps(u, &half)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

pub fn fd_u_derivs(u: &CoeffVector, h: f64) -> Result<(Vec<f64>, DMatrix<f64>), VerifyError> {
    Ok((fd_u_first(u, h)?, fd_u_second(u, h)?))
}

/// Coefficients of det(x I - A), leading 1 first, by Faddeev-LeVerrier.
pub fn char_poly_coeffs(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[k - 1];
        c.push(-(a * &m).trace() / k as f64);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// d lambda_i / d r_i
    DlamDiagonal,
    /// d lambda_j / d r_i, j != i
    DlamOffDiagonal,
    /// d u_1 / d r_i = 1 / F_pp(lambda_i)
    DuFirst,
    GibbonsTsarev,
    /// d G_i / d r_j against (d lambda_i / d r_j) / (lambda_i - lambda_j)
    Exactness,
    /// d F / d r_j at lambda_i is the Kronecker delta
    LagrangeBasis,
    /// det(x I - A(U)) = F_p(x)
    CharPoly,
    RootSum,
    DuSum,
    DlamColumnSum,
    /// error is 1 on a sign violation, 0 otherwise
    GenuineNonlinearity,
    MaclaneRoundTrip,
}

impl Identity {
    pub const ALL: [Identity; 12] = [
        Identity::DlamDiagonal,
        Identity::DlamOffDiagonal,
        Identity::DuFirst,
        Identity::GibbonsTsarev,
        Identity::Exactness,
        Identity::LagrangeBasis,
        Identity::CharPoly,
        Identity::RootSum,
        Identity::DuSum,
        Identity::DlamColumnSum,
        Identity::GenuineNonlinearity,
        Identity::MaclaneRoundTrip,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Identity::DlamDiagonal => "dlam_diagonal",
            Identity::DlamOffDiagonal => "dlam_off_diagonal",
            Identity::DuFirst => "du_first",
            Identity::GibbonsTsarev => "gibbons_tsarev",
            Identity::Exactness => "exactness",
            Identity::LagrangeBasis => "lagrange_basis",
            Identity::CharPoly => "char_poly",
            Identity::RootSum => "root_sum",
            Identity::DuSum => "du_sum",
            Identity::DlamColumnSum => "dlam_column_sum",
            Identity::GenuineNonlinearity => "genuine_nonlinearity",
            Identity::MaclaneRoundTrip => "maclane_round_trip",
        }
    }

    pub fn uses_finite_differences(self) -> bool {
        matches!(
            self,
            Identity::DlamDiagonal
                | Identity::DlamOffDiagonal
                | Identity::DuFirst
                | Identity::GibbonsTsarev
                | Identity::Exactness
                | Identity::LagrangeBasis
        )
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Identity::DlamDiagonal | Identity::DlamOffDiagonal | Identity::DuFirst => 1e-5,
            Identity::GibbonsTsarev => 1e-4,
            Identity::Exactness => 1e-5,
            Identity::LagrangeBasis => 1e-6,
            Identity::CharPoly | Identity::RootSum => 1e-12,
            Identity::DuSum | Identity::DlamColumnSum => 1e-10,
            Identity::GenuineNonlinearity => 1.0,
            Identity::MaclaneRoundTrip => 1e-9,
        }
    }
}

/// Where samples are drawn: u uniform in [-half_width, half_width]^3,
/// kept when `disc_min < disc < disc_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBox {
    pub half_width: f64,
    pub disc_min: f64,
    pub disc_max: f64,
}

impl SampleBox {
    pub const INTERIOR: SampleBox = SampleBox {
        half_width: 2.0,
        disc_min: 0.05,
        disc_max: f64::INFINITY,
    };
    pub const NEAR_DEGENERATE: SampleBox = SampleBox {
        half_width: 2.0,
        disc_min: 0.001,
        disc_max: 0.01,
    };

    fn accepts(&self, u1: f64, u2: f64) -> bool {
        let d = discriminant_n3(u1, u2);
        d > self.disc_min && d < self.disc_max
    }
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox::INTERIOR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub sample_box: SampleBox,
    /// First-derivative step, scaled by max(1, |r|_inf).
    pub step: f64,
    /// Step for the second-derivative stencils, scaled the same way.
    pub second_step: f64,
    /// Steps are also capped at this fraction of the smallest gap between
    /// sorted critical values, where the derivatives vary fastest.
    pub gap_fraction: f64,
    pub second_gap_fraction: f64,
    /// When set, replaces every identity's own tolerance.
    pub tolerance: Option<f64>,
    /// When set, replaces the tolerance of the finite-difference identities only.
    pub fd_tolerance: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            sample_box: SampleBox::INTERIOR,
            step: 1e-5,
            second_step: 1e-2,
            gap_fraction: 1e-2,
            second_gap_fraction: 3e-2,
            tolerance: None,
            fd_tolerance: None,
        }
    }
}

impl SuiteConfig {
    /// Near-degenerate band with the looser finite-difference and round-trip bounds.
    pub fn near_degenerate() -> Self {
        SuiteConfig {
            sample_box: SampleBox::NEAR_DEGENERATE,
            fd_tolerance: Some(1e-3),
            ..SuiteConfig::default()
        }
    }

    pub fn tolerance_for(&self, id: Identity) -> f64 {
        if let Some(t) = self.tolerance {
            return t;
        }
        match (id, self.fd_tolerance) {
            (id, Some(t)) if id.uses_finite_differences() => t,
            (Identity::MaclaneRoundTrip, Some(_)) => 1e-6,
            (id, _) => id.default_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub identity: Identity,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub worst_sample: Option<CoeffVector>,
    pub n_samples: usize,
    pub violations: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Draws `n_samples` n = 3 points from the box; deterministic in `seed`.
pub fn sample_hyperbolic(n_samples: usize, seed: u64, sample_box: SampleBox) -> Vec<CoeffVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sample_box.half_width;
    let mut out = Vec::with_capacity(n_samples);
    while out.len() < n_samples {
        let u1 = rng.gen_range(-w..w);
        let u2 = rng.gen_range(-w..w);
        let u3 = rng.gen_range(-w..w);
        if sample_box.accepts(u1, u2) {
            out.push(CoeffVector::n3(u1, u2, u3));
        }
    }
    out
}

fn rel(a: f64, b: f64) -> (f64, f64) {
    let abs = (a - b).abs();
    (abs / b.abs().max(1.0), abs)
}

fn max_pair(m: (f64, f64), e: (f64, f64)) -> (f64, f64) {
    (m.0.max(e.0), m.1.max(e.1))
}

/// Error of a sum that should vanish, relative to its largest term.
fn zero_sum(terms: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let s: f64 = terms.clone().sum();
    let scale = terms.fold(1.0f64, |m, v| m.max(v.abs()));
    (s.abs() / scale, s.abs())
}

type SampleErrors = Vec<(Identity, f64, f64)>;

struct Accum(SampleErrors);

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

impl Accum {
    fn push(&mut self, id: Identity, (r, a): (f64, f64)) {
        // NaN must count as a failure
        let (r, a) = (nan_to_inf(r), nan_to_inf(a));
        match self.0.iter_mut().find(|e| e.0 == id) {
            Some(e) => {
                e.1 = e.1.max(r);
                e.2 = e.2.max(a);
            }
            None => self.0.push((id, r, a)),
        }
    }

    fn fail(&mut self, ids: &[Identity]) {
        for &id in ids {
            self.push(id, (f64::INFINITY, f64::INFINITY));
        }
    }
}

/// Per-direction steps: `base * max(1, |r|_inf)`, capped at `frac` times the
/// distance from r_j to the nearest other critical value.
fn steps_for(base: f64, frac: f64, r: &[f64]) -> Vec<f64> {
    let scale = r.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..r.len())
        .map(|j| {
            let gap = (0..r.len())
                .filter(|&k| k != j)
                .map(|k| (r[k] - r[j]).abs())
                .fold(f64::INFINITY, f64::min);
            (base * scale).min(frac * gap)
        })
        .collect()
}

fn check_sample(u: &CoeffVector, cfg: &SuiteConfig) -> SampleErrors {
    use Identity::*;
    let mut acc = Accum(Vec::new());
    let n = u.n();

    let a = matrix_a(u);
    let cp = char_poly_coeffs(&a);
    let fp = build_poly(u).dp_coeffs();
    let cp_err = cp
        .iter()
        .zip(&fp)
        .map(|(x, y)| rel(*x, *y))
        .fold((0.0, 0.0), max_pair);
    acc.push(CharPoly, cp_err);

    let table = match derivative_table(u) {
        Ok(t) => t,
        Err(_) => {
            acc.fail(&Identity::ALL);
            return acc.0;
        }
    };
    acc.push(RootSum, zero_sum(table.lambdas.iter().copied()));
    acc.push(DuSum, zero_sum(table.du.iter().copied()));
    for i in 0..n {
        acc.push(DlamColumnSum, zero_sum((0..n).map(|j| table.dlam[(j, i)])));
    }
    let sign_ok = match crate::eigenstructure::genuine_nonlinearity(u) {
        Ok(s) => s == (1, -1) || n != 3,
        Err(EigenError::DegenerateSign { .. }) | Err(_) => false,
    };
    let bad = if sign_ok { 0.0 } else { 1.0 };
    acc.push(GenuineNonlinearity, (bad, bad));

    let r = match maclane_forward(u) {
        Ok(r) => r,
        Err(_) => {
            acc.fail(&[
                MaclaneRoundTrip,
                DlamDiagonal,
                DlamOffDiagonal,
                DuFirst,
                GibbonsTsarev,
                Exactness,
                LagrangeBasis,
            ]);
            return acc.0;
        }
    };
    match inverse_seed(&r).and_then(|seed| maclane_inverse(&r, &seed, 0.0)) {
        Ok(back) => {
            for k in 0..n {
                acc.push(MaclaneRoundTrip, rel(back[k], u[k]));
            }
        }
        Err(_) => acc.fail(&[MaclaneRoundTrip]),
    }

    let h = steps_for(cfg.step, cfg.gap_fraction, &r);
    let half: Vec<f64> = h.iter().map(|x| 0.5 * x).collect();
    let first = probes(u, &h).and_then(|coarse| {
        let fine = probes(u, &half)?;
        let coarse = FirstDerivs::new(&coarse, &table.lambdas, &h);
        Ok(coarse.extrapolate(FirstDerivs::new(&fine, &table.lambdas, &half)))
    });
    match first {
        Ok(fd) => first_order_checks(&mut acc, &table, &fd),
        Err(_) => acc.fail(&[
            DlamDiagonal,
            DlamOffDiagonal,
            DuFirst,
            Exactness,
            LagrangeBasis,
        ]),
    }
    let h2 = steps_for(cfg.second_step, cfg.second_gap_fraction, &r);
    match fd_u_second_extrapolated(u, &h2) {
        Ok(m) => {
            for i in 0..n {
                for k in i + 1..n {
                    acc.push(
                        GibbonsTsarev,
                        rel(m[(i, k)], table.gibbons_tsarev(i, k).unwrap_or(f64::NAN)),
                    );
                }
            }
        }
        Err(_) => acc.fail(&[GibbonsTsarev]),
    }
    acc.0
}

/// Central-difference first derivatives collected from one set of probes.
struct FirstDerivs {
    dlam: DMatrix<f64>,
    du: Vec<f64>,
    /// d G_i / d r_j
    dg: DMatrix<f64>,
    /// d F(lambda_i) / d r_j at frozen lambda_i
    df: DMatrix<f64>,
}

impl FirstDerivs {
    fn new(pairs: &[(Shifted, Shifted)], lambdas: &[f64], h: &[f64]) -> Self {
        let n = pairs.len();
        let g = |s: &Shifted, i: usize| 0.5 * build_poly(&s.u).eval_dpp(s.lambdas[i]).abs().ln();
        let f = |s: &Shifted, i: usize| build_poly(&s.u).eval(lambdas[i]);
        let diff = |q: &dyn Fn(&Shifted, usize) -> f64| {
            DMatrix::from_fn(n, n, |i, j| {
                (q(&pairs[j].0, i) - q(&pairs[j].1, i)) / (2.0 * h[j])
            })
        };
        FirstDerivs {
            dlam: lambda_matrix(pairs, h),
            du: u1_vector(pairs, h),
            dg: diff(&g),
            df: diff(&f),
        }
    }

    /// Richardson combination with the same quantities at half the step.
    fn extrapolate(self, fine: FirstDerivs) -> Self {
        let mix = |c: f64, f: f64| (4.0 * f - c) / 3.0;
        FirstDerivs {
            dlam: fine.dlam.zip_map(&self.dlam, |f, c| mix(c, f)),
            du: self
                .du
                .iter()
                .zip(&fine.du)
                .map(|(c, f)| mix(*c, *f))
                .collect(),
            dg: fine.dg.zip_map(&self.dg, |f, c| mix(c, f)),
            df: fine.df.zip_map(&self.df, |f, c| mix(c, f)),
        }
    }
}

fn first_order_checks(acc: &mut Accum, table: &DerivativeTable, fd: &FirstDerivs) {
    use Identity::*;
    let n = table.n();
    for i in 0..n {
        for j in 0..n {
            let id = if i == j {
                DlamDiagonal
            } else {
                DlamOffDiagonal
            };
            acc.push(id, rel(fd.dlam[(i, j)], table.dlam[(i, j)]));
            if let Some(expected) = table.exactness(i, j) {
                acc.push(Exactness, rel(fd.dg[(i, j)], expected));
            }
            let delta = if i == j { 1.0 } else { 0.0 };
            acc.push(LagrangeBasis, rel(fd.df[(i, j)], delta));
        }
        acc.push(DuFirst, rel(fd.du[i], table.du[i]));
    }
}

/// Runs every identity over `n_samples` seeded samples. Failures land in the
/// reports; nothing is thrown.
pub fn run_identity_suite(n_samples: usize, seed: u64) -> Vec<OracleReport> {
    run_identity_suite_with(n_samples, seed, &SuiteConfig::default())
}

pub fn run_identity_suite_with(
    n_samples: usize,
    seed: u64,
    cfg: &SuiteConfig,
) -> Vec<OracleReport> {
    if n_samples == 0 {
        return Vec::new();
    }
    let samples = sample_hyperbolic(n_samples, seed, cfg.sample_box);
    let per_sample: Vec<SampleErrors> = samples.par_iter().map(|u| check_sample(u, cfg)).collect();
    Identity::ALL
        .iter()
        .map(|&id| {
            let tol = cfg.tolerance_for(id);
            let mut report = OracleReport {
                identity: id,
                max_rel_err: 0.0,
                max_abs_err: 0.0,
                worst_sample: None,
                n_samples,
                violations: 0,
                tolerance: tol,
                pass: true,
            };
            for (u, errs) in samples.iter().zip(&per_sample) {
                let Some(&(_, r, a)) = errs.iter().find(|e| e.0 == id) else {
                    continue;
                };
                let bad = r >= tol;
                if bad {
                    report.violations += 1;
                    report.pass = false;
                }
                if report.worst_sample.is_none() || r > report.max_rel_err {
                    report.max_rel_err = r;
                    report.worst_sample = Some(u.clone());
                }
                report.max_abs_err = report.max_abs_err.max(a);
            }
            report
        })
        .collect()
}

/// Forward-then-inverse statistics alone, for the round-trip command.
pub fn round_trip_report(
    n_samples: usize,
    seed: u64,
    sample_box: SampleBox,
    bound: f64,
) -> OracleReport {
    let cfg = SuiteConfig {
        sample_box,
        tolerance: Some(bound),
        ..SuiteConfig::default()
    };
    let samples = sample_hyperbolic(n_samples, seed, sample_box);
    let errs: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|u| {
            let out = maclane_forward(u)
                .and_then(|r| inverse_seed(&r).and_then(|s| maclane_inverse(&r, &s, 0.0)));
            match out {
                Ok(back) => (0..u.n())
                    .map(|k| rel(back[k], u[k]))
                    .fold((0.0, 0.0), max_pair),
                Err(_) => (f64::INFINITY, f64::INFINITY),
            }
        })
        .collect();
    let tol = cfg.tolerance_for(Identity::MaclaneRoundTrip);
    let mut report = OracleReport {
        identity: Identity::MaclaneRoundTrip,
        max_rel_err: 0.0,
        max_abs_err: 0.0,
        worst_sample: None,
        n_samples,
        violations: 0,
        tolerance: tol,
        pass: true,
    };
    for (u, &(r, a)) in samples.iter().zip(&errs) {
        if r >= tol {
            report.violations += 1;
            report.pass = false;
        }
        if report.worst_sample.is_none() || r > report.max_rel_err {
            report.max_rel_err = r;
            report.worst_sample = Some(u.clone());
        }
        report.max_abs_err = report.max_abs_err.max(a);
    }
    report
}
