//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Drives the same command functions as the binary.

use std::fs;
use std::time::Instant;

use benney_cli::commands::{
    cmd_blowup, cmd_classify, cmd_maclane, cmd_simulate, cmd_verify, MaclaneReport,
};
use benney_cli::config::{CommandKind, Flags, RunConfig, SchemeChoice};
use benney_core::{
    run, run_identity_suite, sample_field, z_transport, CharPath, FieldState, Identity,
    InitialData, OracleReport, Scheme, SolverConfig, StopReason, TorusGrid, Verdict,
};

type Check = Result<String, String>;
type Criterion<'a> = Box<dyn Fn() -> Check + 'a>;

const SUITE_SAMPLES: usize = 1000;
const SUITE_SEED: u64 = 42;

fn config(kind: CommandKind, flags: Flags) -> Result<RunConfig, String> {
    RunConfig::resolve(kind, &flags).map_err(|e| e.to_string())
}

fn identity(reports: &[OracleReport], id: Identity) -> &OracleReport {
    reports
        .iter()
        .find(|r| r.identity == id)
        .expect("identity in suite")
}

/// Checks each identity's worst relative error against its bound.
fn bounded(reports: &[OracleReport], bounds: &[(Identity, f64)]) -> Check {
    let mut parts = Vec::new();
    let mut failed = Vec::new();
    for &(id, bound) in bounds {
        let r = identity(reports, id);
        let ok = r.n_samples == SUITE_SAMPLES && r.max_rel_err < bound;
        parts.push(format!(
            "{} {:.1e} < {:.0e}",
            id.label(),
            r.max_rel_err,
            bound
        ));
        if !ok {
            failed.push(id.label());
        }
    }
    let text = parts.join(", ");
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(format!("{text}; failed: {}", failed.join(", ")))
    }
}

fn identity_suite(reports: &[OracleReport]) -> Check {
    bounded(
        reports,
        &[
            (Identity::DlamDiagonal, 1e-5),
            (Identity::DlamOffDiagonal, 1e-5),
            (Identity::DuFirst, 1e-5),
            (Identity::GibbonsTsarev, 1e-4),
            (Identity::Exactness, 1e-5),
        ],
    )
}

fn structural(reports: &[OracleReport]) -> Check {
    bounded(
        reports,
        &[
            (Identity::CharPoly, 1e-12),
            (Identity::RootSum, 1e-12),
            (Identity::DuSum, 1e-10),
            (Identity::DlamColumnSum, 1e-10),
        ],
    )
}

fn round_trip() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (band, bound) in [(false, 1e-9), (true, 1e-6)] {
        let flags = Flags {
            samples: Some(SUITE_SAMPLES),
            band,
            ..Flags::default()
        };
        let out = cmd_maclane(&config(CommandKind::Maclane, flags)?).map_err(|e| e.to_string())?;
        let MaclaneReport::RoundTrip {
            report,
            bound: used,
            ..
        } = out.report
        else {
            return Err("expected round-trip mode".into());
        };
        let pass = out.code == 0
            && used == bound
            && report.n_samples == SUITE_SAMPLES
            && report.max_rel_err < bound;
        ok &= pass;
        let region = if band { "band" } else { "interior" };
        parts.push(format!("{region} {:.1e} < {bound:.0e}", report.max_rel_err));
    }
    let text = parts.join(", ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn genuine_nonlinearity(reports: &[OracleReport]) -> Check {
    let r = identity(reports, Identity::GenuineNonlinearity);
    let text = format!(
        "{} sign violations over {} samples",
        r.violations, r.n_samples
    );
    if r.violations == 0 && r.n_samples == SUITE_SAMPLES {
        Ok(text)
    } else {
        Err(text)
    }
}

fn sup_drift(a: &FieldState, b: &FieldState) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .flat_map(|(x, y)| {
            x.iter()
                .zip(y.iter())
                .map(|(p, q)| (p - q).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Drift of the stationary wave under the dissipative central scheme; the
/// upwind scheme keeps it exact, which leaves no drift to measure.
fn traveling_wave() -> Check {
    let spec = InitialData::preset("traveling").expect("preset");
    let solver = SolverConfig {
        scheme: Scheme::CentralViscous,
        t_end: 2.0,
        snapshot_every: 10,
        ..SolverConfig::default()
    };
    let drift = |cells: usize| -> Result<f64, String> {
        let s = sample_field(&spec, TorusGrid::new(cells).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let traj = run(&s, &solver).map_err(|e| e.to_string())?;
        if traj.stopped_reason != StopReason::ReachedTEnd {
            return Err(format!(
                "N={cells} stopped early: {:?}",
                traj.stopped_reason
            ));
        }
        Ok(sup_drift(traj.last(), &s))
    };
    let (d128, d256) = (drift(128)?, drift(256)?);
    let ratio = d128 / d256;
    // first order: the coarse drift halves, with 50% slack
    let bound = 1.5 * d128 / 2.0;
    let flags = Flags {
        scheme: Some(SchemeChoice::Central),
        ..preset("traveling", 256, 2.0)
    };
    let sim = cmd_simulate(&config(CommandKind::Simulate, flags)?).map_err(|e| e.to_string())?;
    let c = &sim.report.classification;
    let text = format!(
        "drift {d128:.2e} -> {d256:.2e} (ratio {ratio:.2}, bound {bound:.2e}); verdict {:?} at tol {:.2e}",
        c.verdict, c.tolerance
    );
    if (1.5..=3.0).contains(&ratio) && d256 <= bound && c.verdict == Verdict::TravelingWave {
        Ok(text)
    } else {
        Err(text)
    }
}

fn preset(name: &str, grid: usize, t_end: f64) -> Flags {
    Flags {
        preset: Some(name.into()),
        grid: Some(grid),
        t_end: Some(t_end),
        ..Flags::default()
    }
}

fn blowup() -> Check {
    let flags = Flags {
        simulate: true,
        ..preset("perturbed", 512, 1.5)
    };
    let out = cmd_blowup(&config(CommandKind::Blowup, flags)?).map_err(|e| e.to_string())?;
    let c = out.report.comparison.ok_or("no comparison")?;
    let (Some(t512), Some(t1024), Some(p)) = (c.observed, c.observed_refined, c.traced.as_ref())
    else {
        return Err(format!(
            "missing times: observed {:?}, refined {:?}",
            c.observed, c.observed_refined
        ));
    };
    let change = (t512 - t1024).abs() / t1024;
    let err = (t512 - p.tstar).abs() / p.tstar;
    let err_fine = (t1024 - p.tstar).abs() / p.tstar;
    let text = format!(
        "t_obs {t512:.4} (N=512), {t1024:.4} (N=1024), change {:.1}%; t* {:.4}, rel err {err:.3} / {err_fine:.3}",
        100.0 * change,
        p.tstar
    );
    let ok = out.code == 0
        && c.stopped_reason == StopReason::BlowupDetected
        && change <= 0.1
        && err <= 0.25
        && err_fine <= 0.25;
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn z_exactness() -> Check {
    let mut worst: f64 = 0.0;
    // blow-up inside the path and past its end, forward and backward
    for &(t0, z0, k0, t_last) in &[
        (0.0, -2.0, 0.8, 1.0),
        (0.3, 1.5, -0.4, 0.9),
        (0.0, -0.5, 0.25, 1.0),
        (1.0, 2.0, 0.5, 0.2),
    ] {
        let steps = 400;
        let points: Vec<(f64, f64)> = (0..=steps)
            .map(|j| (t0 + (t_last - t0) * j as f64 / steps as f64, 0.5))
            .collect();
        let path = CharPath {
            family: 1,
            lambda: vec![0.0; points.len()],
            r: vec![0.0; points.len()],
            z: vec![z0; points.len()],
            k: vec![k0; points.len()],
            points,
            predicted_tstar: None,
        };
        let exact = t0 - 1.0 / (z0 * k0);
        let got = z_transport(&path).tstar.ok_or("no blow-up time")?;
        worst = worst.max((got - exact).abs());
    }
    let text = format!("max |t* - (t0 - 1/(z0 K0))| = {worst:.1e} over 4 paths");
    if worst <= 1e-8 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn region_structure() -> Check {
    let flags = Flags {
        scheme: Some(SchemeChoice::Central),
        ..preset("elliptic-bump", 126, 0.25)
    };
    let out = cmd_classify(&config(CommandKind::Classify, flags)?).map_err(|e| e.to_string())?;
    let s = &out.report.strips;
    let boundary = s.initial.degenerate_cells + s.initial.max_degenerate_cells;
    let text = format!(
        "{} snapshots, {} strips, {} moved cells, {} boundary cells, {} non-maximal (eps {:.0e})",
        s.snapshots,
        s.initial.components.len(),
        s.moved_cells,
        boundary,
        s.non_maximal_cells,
        s.eps
    );
    let mixed = s.initial.hyperbolic_cells > 0 && s.initial.elliptic_cells > 0 && boundary > 0;
    if out.code == 0 && s.passed && s.strips_invariant && s.degenerate_are_maximal && mixed {
        Ok(text)
    } else {
        Err(text)
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for run in ["a", "b"] {
        let flags = Flags {
            out: Some(dir.path().join(run)),
            ..Flags::default()
        };
        cmd_verify(&config(CommandKind::Verify, flags.clone())?).map_err(|e| e.to_string())?;
        cmd_maclane(&config(CommandKind::Maclane, flags)?).map_err(|e| e.to_string())?;
    }
    let mut parts = Vec::new();
    for file in ["verify_report.json", "maclane_report.json"] {
        let read = |run: &str| {
            fs::read(dir.path().join(run).join(file)).map_err(|e| format!("{file}: {e}"))
        };
        let (a, b) = (read("a")?, read("b")?);
        if a != b {
            return Err(format!("{file} differs between runs"));
        }
        parts.push(format!("{file} {} bytes", a.len()));
    }
    Ok(format!("identical: {}", parts.join(", ")))
}

fn main() {
    let start = Instant::now();
    let suite = run_identity_suite(SUITE_SAMPLES, SUITE_SEED);
    let criteria: Vec<(&str, Criterion)> = vec![
        ("identity suite", Box::new(|| identity_suite(&suite))),
        ("structural identities", Box::new(|| structural(&suite))),
        ("inverse map round trip", Box::new(round_trip)),
        (
            "genuine nonlinearity",
            Box::new(|| genuine_nonlinearity(&suite)),
        ),
        ("traveling-wave persistence", Box::new(traveling_wave)),
        ("blow-up certification", Box::new(blowup)),
        ("z-transport exactness", Box::new(z_exactness)),
        ("region structure", Box::new(region_structure)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {} {name}: {detail} [{:.1}s]",
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
