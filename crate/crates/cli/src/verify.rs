//! Property checks over a fixture set. Each fixture is a manifold, an
//! exponent and a coefficient `λ` for `Λ(u) = λ u^{p−1}`; fixtures are
//! processed in parallel and reported in fixture order.

use pfeller::analysis::{
    compare_ordering, decay_limit, default_margin, detect_compact_support, gradient_lp_check, lambda_power_comparison,
    lq_norm, power_ordering, weighted_sobolev_norm, DecayClass, TailFlag,
};
use pfeller::classify::{classify, VerdictPolicy};
use pfeller::radial_solver::{minimal_exterior_solution, ExhaustionOptions, ExteriorProblem, LambdaSpec};
use pfeller::warping::ModelManifold;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{to_json, write_file};
use crate::config::{build_manifold, FixtureSpec, Fixtures, Format, RunConfig};
use crate::error::CliError;

/// Thresholds for the free-boundary check; the library defaults (1e−8) stop
/// short of fast exponential tails and would report them as compact support.
const SUPPORT_TAU_U: f64 = 1e-16;
const SUPPORT_TAU_G: f64 = 1e-12;
/// The free-boundary check is run only where `|σ'/σ|` stays below this on
/// the window: with faster growth or decay of the weight the minimal solution
/// itself drops below double precision within a few units of radius.
const SUPPORT_MAX_LOG_SLOPE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub fixture: usize,
    pub manifold: String,
    pub m: u32,
    pub p: f64,
    pub lambda: f64,
    pub check: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    fixtures: usize,
    passed: usize,
    failed: usize,
    rows: Vec<Row>,
}

fn core_fixtures() -> Vec<FixtureSpec> {
    let mut out = Vec::new();
    for family in ["euclidean", "hyperbolic(-1)", "cusp_cubic", "flare_cubic"] {
        for m in [2, 3] {
            for p in [1.5, 2.0, 3.0] {
                out.push(FixtureSpec {
                    family: Some(family.into()),
                    sigma: None,
                    m,
                    p,
                    lambda: 1.0,
                });
            }
        }
    }
    out
}

fn fixture_list(cfg: &RunConfig) -> Result<Vec<FixtureSpec>, CliError> {
    match &cfg.fixtures {
        None => Ok(core_fixtures()),
        Some(Fixtures::Named(name)) if name == "core" => Ok(core_fixtures()),
        Some(Fixtures::Named(name)) => Err(CliError::Config(format!("unknown fixture set `{name}` (known: core)"))),
        Some(Fixtures::List(list)) => Ok(list.clone()),
    }
}

/// Deliberate corruptions used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Corruption {
    None,
    /// Hands the comparison checks the two coefficients in the wrong order,
    /// as if the sign of `λ₂ − λ₁` had been flipped.
    FlipLambda,
}

fn corruption(cfg: &RunConfig) -> Result<Corruption, CliError> {
    match cfg.corrupt.as_deref() {
        None => Ok(Corruption::None),
        Some("flip_lambda") => Ok(Corruption::FlipLambda),
        Some(other) => Err(CliError::Config(format!("unknown corruption `{other}` (known: flip_lambda)"))),
    }
}

struct Prepared {
    spec: FixtureSpec,
    manifold: ModelManifold,
    problem: ExteriorProblem,
    doubled: ExteriorProblem,
}

fn prepare(spec: &FixtureSpec) -> Result<Prepared, CliError> {
    let manifold = build_manifold(spec.family.as_deref(), spec.sigma.as_deref(), spec.m)?;
    if !(spec.p > 1.0 && spec.p.is_finite()) {
        return Err(CliError::Config(format!("fixture p must be in (1, inf), got {}", spec.p)));
    }
    let problem = |l: f64| -> Result<ExteriorProblem, CliError> {
        Ok(ExteriorProblem::new(
            manifold.clone(),
            1.0,
            spec.p,
            LambdaSpec::power_law(l, spec.p - 1.0)?,
        )?)
    };
    Ok(Prepared {
        problem: problem(spec.lambda)?,
        doubled: problem(2.0 * spec.lambda)?,
        manifold,
        spec: spec.clone(),
    })
}

fn max_log_slope(manifold: &ModelManifold, a: f64, b: f64) -> f64 {
    let n = 200;
    (0..=n)
        .map(|i| a + (b - a) * i as f64 / n as f64)
        .filter_map(|t| manifold.sigma.log_derivative(t).ok())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

fn check_fixture(index: usize, f: &Prepared, opts: &ExhaustionOptions, corrupt: Corruption) -> Result<Vec<Row>, CliError> {
    let spec = &f.spec;
    let p = spec.p;
    let report = classify(&f.manifold, p, &VerdictPolicy::default())?;
    let h = minimal_exterior_solution(&f.problem, opts)?;
    let h2 = minimal_exterior_solution(&f.doubled, opts)?;
    let feller = report.is_feller().as_option();
    let complete = report.is_complete().as_option();

    let mut rows = Vec::new();
    let mut push = |check: &'static str, ok: bool, detail: String| {
        rows.push(Row {
            fixture: index,
            manifold: f.manifold.sigma.label(),
            m: spec.m,
            p,
            lambda: spec.lambda,
            check,
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        });
    };

    let violations = report.consistency_violations();
    push(
        "classification",
        violations.is_empty() && !report.any_inconclusive(),
        format!(
            "hyperbolic {}, complete {}, feller {}{}",
            report.is_hyperbolic().label(),
            report.is_complete().label(),
            report.is_feller().label(),
            if violations.is_empty() { String::new() } else { format!("; {}", violations.join("; ")) }
        ),
    );

    let rec = h.exhaustion.as_ref().expect("exhaustion record");
    push(
        "exhaustion",
        rec.settled && rec.monotone_violation <= 1e-10,
        format!(
            "settled {}, last change {:.2e}, monotone violation {:.2e}",
            rec.settled,
            rec.sup_changes.last().copied().unwrap_or(f64::NAN),
            rec.monotone_violation
        ),
    );

    // Minimal solutions tend to zero exactly on Feller manifolds.
    let decay = decay_limit(&h);
    let required = match (feller, complete) {
        (Some(true), Some(true)) => Some(DecayClass::DecaysToZero),
        (Some(false), _) => Some(DecayClass::PositiveLimit),
        _ => None,
    };
    if let Some(want) = required {
        push(
            "decay",
            decay.classification == want,
            format!(
                "{:?} (required {:?}); limit estimate {:.3e}, trend {:?}",
                decay.classification, want, decay.limit_estimate, decay.trend
            ),
        );
    }

    if complete == Some(true) {
        let up = h.values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        push("monotone", up <= 1e-8, format!("largest increment {up:.3e}"));

        let mut bad = Vec::new();
        for q in [p - 1.0, p, f64::INFINITY] {
            let n = lq_norm(&h, q)?;
            if n.tail != TailFlag::Finite || !n.value.is_finite() {
                bad.push(format!("q = {q}: {:?}", n.tail));
            }
        }
        push(
            "integrability",
            bad.is_empty(),
            if bad.is_empty() { "L^q finite for q = p-1, p, inf".into() } else { bad.join(", ") },
        );
    }

    let grad = gradient_lp_check(&h, default_margin(&h))?;
    push(
        "gradient",
        grad.consistent,
        match (&grad.gradient, &grad.skipped) {
            (Some(g), _) => format!("gradient L^p tail {:?}", g.tail),
            (None, Some(why)) => why.clone(),
            (None, None) => String::new(),
        },
    );

    if feller == Some(true) && complete == Some(true) {
        let c = 0.9 * (spec.lambda * p).powf(1.0 / p);
        let w = weighted_sobolev_norm(&h, c)?;
        push(
            "weighted_sobolev",
            w.integral.tail == TailFlag::Finite,
            format!("C = {c:.4}: {:?}", w.integral.tail),
        );
    }

    // Larger coefficient, smaller solution; and the power comparison.
    let (small, big) = match corrupt {
        Corruption::None => (&h, &h2),
        Corruption::FlipLambda => (&h2, &h),
    };
    let order = compare_ordering(big, small)?;
    push(
        "comparison",
        order.max_violation <= 1e-6,
        format!("max(h_2lambda - h_lambda) = {:.3e}", order.max_violation),
    );
    let power = match corrupt {
        Corruption::None => lambda_power_comparison(small, big)?,
        // The exponent computed from the swapped coefficients, (1/2)^{1/(p-1)}.
        Corruption::FlipLambda => power_ordering(small, big, 0.5f64.powf(1.0 / (p - 1.0)))?,
    };
    push(
        "power_comparison",
        power.max_violation <= 1e-6,
        format!("alpha = {:.4}, max violation {:.3e}", power.alpha, power.max_violation),
    );

    if max_log_slope(&f.manifold, h.grid.first(), h.grid.last()) <= SUPPORT_MAX_LOG_SLOPE {
        let s = detect_compact_support(&h, SUPPORT_TAU_U, SUPPORT_TAU_G);
        push(
            "compact_support",
            s.support_radius.is_none(),
            format!("support radius {:?} (none expected for Lambda = lambda u^(p-1))", s.support_radius),
        );
    }
    Ok(rows)
}

fn table(rows: &[Row]) -> String {
    let mut s = String::new();
    for r in rows {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        s.push_str(&format!(
            "{:>3}  {:<18} m={} p={:<4} {:<17} {}  {}\n",
            r.fixture, r.manifold, r.m, r.p, r.check, status, r.detail
        ));
    }
    s
}

pub fn run(cfg: &RunConfig) -> Result<i32, CliError> {
    let specs = fixture_list(cfg)?;
    if specs.is_empty() {
        return Err(CliError::NoFixtures);
    }
    let corrupt = corruption(cfg)?;
    let opts = cfg.exhaustion()?;
    // Every fixture is validated before anything is computed.
    let prepared: Vec<Prepared> = specs.iter().map(prepare).collect::<Result<_, _>>()?;
    let results: Vec<Result<Vec<Row>, CliError>> = prepared
        .par_iter()
        .enumerate()
        .map(|(i, f)| check_fixture(i, f, &opts, corrupt))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let failed = rows.iter().filter(|r| r.status == Status::Fail).count();
    let report = VerifyReport {
        fixtures: prepared.len(),
        passed: rows.len() - failed,
        failed,
        rows,
    };
    let text = table(&report.rows);
    match (&cfg.out, cfg.format) {
        (Some(path), _) => {
            write_file(path, &to_json(&report))?;
            print!("{text}");
        }
        (None, Some(Format::Json)) => print!("{}", to_json(&report)),
        (None, _) => print!("{text}"),
    }
    let tally = format!("{} checks, {} passed, {} failed", report.rows.len(), report.passed, report.failed);
    // Keeps stdout parseable when it carries the JSON report.
    if cfg.out.is_none() && cfg.format == Some(Format::Json) {
        eprintln!("{tally}");
    } else {
        println!("{tally}");
    }
    if failed > 0 {
        for r in report.rows.iter().filter(|r| r.status == Status::Fail) {
            eprintln!("FAIL fixture {} ({} m={} p={}): {}: {}", r.fixture, r.manifold, r.m, r.p, r.check, r.detail);
        }
        return Ok(4);
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pfeller::warping::Family;

    #[test]
    fn core_set_is_the_full_matrix() {
        let f = core_fixtures();
        assert_eq!(f.len(), 24);
        assert!(f.iter().all(|s| s.lambda == 1.0));
    }

    #[test]
    fn support_check_is_limited_to_moderate_weights() {
        let e = build_manifold(Some("hyperbolic(-1)"), None, 3).unwrap();
        assert!(max_log_slope(&e, 1.0, 11.0) <= SUPPORT_MAX_LOG_SLOPE);
        let f = ModelManifold::family(Family::FlareCubic, 3).unwrap();
        assert!(max_log_slope(&f, 1.0, 11.0) > SUPPORT_MAX_LOG_SLOPE);
    }

    #[test]
    fn unknown_set_and_corruption_are_rejected() {
        let cfg = RunConfig {
            fixtures: Some(Fixtures::Named("nope".into())),
            ..Default::default()
        };
        assert!(fixture_list(&cfg).is_err());
        let cfg = RunConfig {
            corrupt: Some("nope".into()),
            ..Default::default()
        };
        assert!(corruption(&cfg).is_err());
    }
}
