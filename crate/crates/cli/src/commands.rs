use std::fmt::Write as _;
use std::path::Path;

use pfeller::analysis::{
    decay_limit, default_margin, detect_compact_support, gradient_lp_check, lq_norm, weighted_sobolev_norm, DecayClass,
    DecayReport, GradientCheck, IntegralReport, SupportReport, WeightedNormReport, TAU_G, TAU_U,
};
use pfeller::classify::{classify as classify_manifold, ClassificationReport, VerdictPolicy};
use pfeller::radial_solver::{minimal_exterior_solution, RadialSolution};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes to `--out` when given, to stdout otherwise.
fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn yes_no(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "yes",
        Some(false) => "no",
        None => "inconclusive",
    }
}

pub fn classification_table(r: &ClassificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "manifold: {} (m = {}, p = {})", r.manifold, r.m, r.p);
    let _ = writeln!(s, "hyperbolic: {}", yes_no(r.is_hyperbolic().as_option()));
    let _ = writeln!(s, "complete: {}", yes_no(r.is_complete().as_option()));
    let _ = writeln!(s, "feller: {}", yes_no(r.is_feller().as_option()));
    for v in r.consistency_violations() {
        let _ = writeln!(s, "warning: {v}");
    }
    s
}

pub fn classify(cfg: &RunConfig) -> Result<i32, CliError> {
    let manifold = cfg.manifold()?;
    let p = cfg.p()?;
    let report = classify_manifold(&manifold, p, &VerdictPolicy::default())?;
    let table = classification_table(&report);
    match (&cfg.out, cfg.format) {
        (Some(path), _) => {
            write_file(path, &to_json(&report))?;
            print!("{table}");
        }
        (None, Some(Format::Json)) => print!("{}", to_json(&report)),
        (None, _) => print!("{table}"),
    }
    Ok(if report.any_inconclusive() { 2 } else { 0 })
}

fn summary(sol: &RadialSolution, decay: &DecayReport) -> String {
    let mut s = String::new();
    let rec = sol.exhaustion.as_ref();
    let _ = writeln!(
        s,
        "{} | p = {} | Lambda = {} | window [{}, {}] with {} nodes",
        sol.manifold.label(),
        sol.p,
        sol.lambda.label(),
        sol.grid.first(),
        sol.grid.last(),
        sol.grid.len()
    );
    if let Some(rec) = rec {
        let _ = writeln!(
            s,
            "exhaustion: widths {:?}, last change {:.3e}, monotone violation {:.3e}",
            rec.widths,
            rec.sup_changes.last().copied().unwrap_or(f64::NAN),
            rec.monotone_violation
        );
    }
    let _ = writeln!(
        s,
        "decay: {:?} (limit estimate {:.6e}, trend {:?})",
        decay.classification, decay.limit_estimate, decay.trend
    );
    let mut warnings = Vec::new();
    if rec.is_some_and(|r| !r.settled) {
        warnings.push("ExhaustionNotSettled");
    }
    if decay.classification == DecayClass::PositiveLimit {
        warnings.push("PositiveLimit");
    }
    if !warnings.is_empty() {
        let _ = writeln!(s, "warning: {}", warnings.join("/"));
    }
    s
}

fn render(sol: &RadialSolution, format: Format) -> String {
    match format {
        Format::Csv => sol.to_csv(),
        Format::Json => {
            let mut s = sol.to_json();
            s.push('\n');
            s
        }
        Format::Svg => sol.to_svg(),
    }
}

pub fn solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let prob = cfg.problem()?;
    let opts = cfg.exhaustion()?;
    let sol = minimal_exterior_solution(&prob, &opts)?;
    let decay = decay_limit(&sol);
    emit(cfg, &render(&sol, cfg.format.unwrap_or(Format::Csv)))?;
    eprint!("{}", summary(&sol, &decay));
    Ok(0)
}

#[derive(Debug, Serialize)]
struct Analysis {
    decay: DecayReport,
    support: SupportReport,
    /// `(q, report)` for `q ∈ {p − 1, p, ∞}`; `∞` is written as `null`.
    lq_norms: Vec<(Option<f64>, IntegralReport)>,
    gradient: GradientCheck,
    /// At `C = 0.9 (λp)^{1/p}` for power-law nonlinearities.
    weighted_sobolev: Option<WeightedNormReport>,
}

fn analyse(sol: &RadialSolution) -> Result<Analysis, CliError> {
    let p = sol.p;
    let mut lq_norms = Vec::new();
    for q in [p - 1.0, p, f64::INFINITY] {
        lq_norms.push((q.is_finite().then_some(q), lq_norm(sol, q)?));
    }
    let weighted_sobolev = match sol.lambda.coefficient() {
        Some(l) => Some(weighted_sobolev_norm(sol, 0.9 * (l * p).powf(1.0 / p))?),
        None => None,
    };
    Ok(Analysis {
        decay: decay_limit(sol),
        support: detect_compact_support(sol, TAU_U, TAU_G),
        lq_norms,
        gradient: gradient_lp_check(sol, default_margin(sol))?,
        weighted_sobolev,
    })
}

/// Writes `solution.{csv,json,svg}`, `analysis.json` and
/// `classification.json` into the `--out` directory.
pub fn export(cfg: &RunConfig) -> Result<i32, CliError> {
    let dir = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("export needs an output directory (--out)".into()))?;
    let prob = cfg.problem()?;
    let opts = cfg.exhaustion()?;
    let report = classify_manifold(&prob.manifold, prob.p, &VerdictPolicy::default())?;
    let sol = minimal_exterior_solution(&prob, &opts)?;
    let analysis = analyse(&sol)?;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    for (name, format) in [
        ("solution.csv", Format::Csv),
        ("solution.json", Format::Json),
        ("solution.svg", Format::Svg),
    ] {
        write_file(&dir.join(name), &render(&sol, format))?;
    }
    write_file(&dir.join("analysis.json"), &to_json(&analysis))?;
    write_file(&dir.join("classification.json"), &to_json(&report))?;
    print!("{}", classification_table(&report));
    print!("{}", summary(&sol, &analysis.decay));
    println!("wrote {}", dir.display());
    Ok(0)
}
