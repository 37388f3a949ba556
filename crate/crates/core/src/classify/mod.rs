//! Classification of model manifolds: p-hyperbolicity, p-stochastic
//! completeness and the p-Feller property, each decided from an improper
//! integral of the warping function.

pub mod quadrature;
mod ratio;
mod verdict;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::warping::{EvalError, ModelManifold};
use quadrature::{integrate_log, log_add};
pub use ratio::{log_tail_ratio, InnerRatio};
pub use verdict::{
    improper_integral_verdict, log_tail_integral, ConvergenceVerdict, VerdictPolicy, VerdictStatus,
};

/// All outer integrals start here; convergence at infinity does not depend on it.
pub const OUTER_R0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("exponent p must be in (1, inf), got {0}")]
    BadExponent(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn check_p(p: f64) -> Result<(), ClassifyError> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(ClassifyError::BadExponent(p))
    }
}

/// Cumulative `log ∫_0^r σ^{m−1}` with cached values at `0, 1, 2, 4, …`.
pub struct CumulativeVolume<'a> {
    manifold: &'a ModelManifold,
    rel_tol: f64,
    max_panels: usize,
    breaks: Vec<(f64, f64)>,
}

impl<'a> CumulativeVolume<'a> {
    pub fn new(manifold: &'a ModelManifold, policy: &VerdictPolicy) -> Self {
        CumulativeVolume {
            manifold,
            rel_tol: policy.quad_rel_tol,
            max_panels: policy.max_panels,
            breaks: vec![(0.0, f64::NEG_INFINITY)],
        }
    }

    fn piece(&self, a: f64, b: f64) -> Result<f64, EvalError> {
        let m = self.manifold;
        Ok(integrate_log(|t| m.log_sigma_pow(t), a, b, self.rel_tol, self.max_panels)?.log_value)
    }

    /// `log ∫_0^r σ^{m−1}(t) dt`
    pub fn log_at(&mut self, r: f64) -> Result<f64, EvalError> {
        if !(r > 0.0) {
            return Err(EvalError::BadRadius(r));
        }
        loop {
            let (last_r, last_v) = *self.breaks.last().expect("seeded");
            let next = if last_r == 0.0 { 1.0 } else { 2.0 * last_r };
            if next > r {
                break;
            }
            let v = log_add(last_v, self.piece(last_r, next)?);
            self.breaks.push((next, v));
        }
        let idx = self.breaks.partition_point(|&(b, _)| b <= r) - 1;
        let (b, v) = self.breaks[idx];
        if b == r {
            return Ok(v);
        }
        Ok(log_add(v, self.piece(b, r)?))
    }
}

/// `∫^∞ σ^{−(m−1)/(p−1)}` from `r0 = 1`; converges iff `M` is p-hyperbolic.
pub fn is_p_hyperbolic(
    manifold: &ModelManifold,
    p: f64,
    policy: &VerdictPolicy,
) -> Result<ConvergenceVerdict, ClassifyError> {
    check_p(p)?;
    let q = 1.0 / (p - 1.0);
    Ok(improper_integral_verdict(
        |t| Ok(-q * manifold.log_sigma_pow(t)?),
        OUTER_R0,
        policy,
    )?)
}

/// `∫^∞ (∫_0^r σ^{m−1} / σ^{m−1}(r))^{1/(p−1)} dr`; diverges iff `M` is
/// p-stochastically complete.
pub fn is_p_stochastically_complete(
    manifold: &ModelManifold,
    p: f64,
    policy: &VerdictPolicy,
) -> Result<ConvergenceVerdict, ClassifyError> {
    check_p(p)?;
    let q = 1.0 / (p - 1.0);
    let mut ratio = InnerRatio::new(manifold, policy);
    Ok(improper_integral_verdict(
        |r| Ok(q * ratio.log_at(r)?),
        OUTER_R0,
        policy,
    )?)
}

/// Verdict on `∫^∞ σ^{m−1}`: finite or infinite volume.
pub fn volume_verdict(
    manifold: &ModelManifold,
    policy: &VerdictPolicy,
) -> Result<ConvergenceVerdict, ClassifyError> {
    Ok(improper_integral_verdict(
        |t| manifold.log_sigma_pow(t),
        OUTER_R0,
        policy,
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn from_option(b: Option<bool>) -> Tri {
        match b {
            Some(true) => Tri::Yes,
            Some(false) => Tri::No,
            None => Tri::Unknown,
        }
    }

    pub fn as_option(self) -> Option<bool> {
        match self {
            Tri::Yes => Some(true),
            Tri::No => Some(false),
            Tri::Unknown => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FellerBranch {
    /// `σ^{−(m−1)/(p−1)} ∈ L¹(+∞)`
    NonParabolic,
    /// Parabolic with infinite volume: the tail-volume condition holds
    /// automatically.
    ParabolicInfiniteVolume,
    /// Parabolic, finite volume, tail-ratio integral diverges.
    Parabolic,
    /// Neither branch fired (or undecided).
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerVerdict {
    pub feller: Tri,
    pub branch: FellerBranch,
    /// Volume verdict, computed whenever the non-parabolic branch fails.
    pub volume: Option<ConvergenceVerdict>,
    /// Tail-ratio integral, computed for parabolic finite-volume manifolds.
    pub tail_condition: Option<ConvergenceVerdict>,
}

/// Decides the p-Feller property from the hyperbolicity verdict and, when
/// that fails, the tail-volume ratio integral.
pub fn feller_from_hyperbolic(
    manifold: &ModelManifold,
    p: f64,
    hyperbolic: &ConvergenceVerdict,
    policy: &VerdictPolicy,
) -> Result<FellerVerdict, ClassifyError> {
    check_p(p)?;
    match hyperbolic.converges() {
        Some(true) => {
            return Ok(FellerVerdict {
                feller: Tri::Yes,
                branch: FellerBranch::NonParabolic,
                volume: None,
                tail_condition: None,
            })
        }
        None => {
            return Ok(FellerVerdict {
                feller: Tri::Unknown,
                branch: FellerBranch::None,
                volume: None,
                tail_condition: None,
            })
        }
        Some(false) => {}
    }
    let volume = volume_verdict(manifold, policy)?;
    match volume.converges() {
        Some(false) => Ok(FellerVerdict {
            feller: Tri::Yes,
            branch: FellerBranch::ParabolicInfiniteVolume,
            volume: Some(volume),
            tail_condition: None,
        }),
        None => Ok(FellerVerdict {
            feller: Tri::Unknown,
            branch: FellerBranch::None,
            volume: Some(volume),
            tail_condition: None,
        }),
        Some(true) => {
            let q = 1.0 / (p - 1.0);
            let tail = improper_integral_verdict(
                |r| {
                    let lt = log_tail_ratio(manifold, r, policy)?.ok_or_else(|| {
                        EvalError::Domain {
                            what: "tail volume integral did not settle".into(),
                            t: r,
                        }
                    })?;
                    Ok(q * lt)
                },
                OUTER_R0,
                policy,
            )?;
            let (feller, branch) = match tail.converges() {
                Some(false) => (Tri::Yes, FellerBranch::Parabolic),
                Some(true) => (Tri::No, FellerBranch::None),
                None => (Tri::Unknown, FellerBranch::None),
            };
            Ok(FellerVerdict {
                feller,
                branch,
                volume: Some(volume),
                tail_condition: Some(tail),
            })
        }
    }
}

pub fn is_p_feller(
    manifold: &ModelManifold,
    p: f64,
    policy: &VerdictPolicy,
) -> Result<FellerVerdict, ClassifyError> {
    let hyperbolic = is_p_hyperbolic(manifold, p, policy)?;
    feller_from_hyperbolic(manifold, p, &hyperbolic, policy)
}

/// Asymptotic form `σ(t) ~ t^power · exp(exp_coeff · t^exp_power)` used to
/// decide borderline integrals analytically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticHint {
    pub power: f64,
    pub exp_coeff: f64,
    pub exp_power: f64,
}

impl AsymptoticHint {
    fn growth(&self) -> f64 {
        if self.exp_power > 0.0 {
            self.exp_coeff
        } else {
            0.0
        }
    }

    /// Exact answers `(hyperbolic, finite_volume, stoch_integral_converges,
    /// tail_integral_converges)`; the last only matters with finite volume.
    pub fn decide(&self, m: u32, p: f64) -> (bool, bool, bool, bool) {
        let k = f64::from(m.saturating_sub(1));
        let q = 1.0 / (p - 1.0);
        let c = self.growth();
        let a = self.exp_power;
        if k == 0.0 {
            return (false, false, false, false);
        }
        let hyperbolic = if c > 0.0 {
            true
        } else if c < 0.0 {
            false
        } else {
            self.power * k * q > 1.0
        };
        let finite_volume = if c != 0.0 { c < 0.0 } else { self.power * k < -1.0 };
        // With exponential growth the ratio ∫_0^r σ^k / σ^k(r) ~ 1/(k c a r^{a−1});
        // polynomially it grows like r; with finite volume it blows up.
        let stoch_converges = if c > 0.0 { (a - 1.0) * q > 1.0 } else { false };
        let tail_converges = if c < 0.0 { (a - 1.0) * q > 1.0 } else { false };
        (hyperbolic, finite_volume, stoch_converges, tail_converges)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub manifold: String,
    pub p: f64,
    pub m: u32,
    pub hyperbolic: ConvergenceVerdict,
    pub stochastically_complete: ConvergenceVerdict,
    pub feller: FellerVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<AsymptoticHint>,
}

impl ClassificationReport {
    pub fn is_hyperbolic(&self) -> Tri {
        Tri::from_option(self.hyperbolic.converges())
    }

    /// Divergence of the completeness integral means complete.
    pub fn is_complete(&self) -> Tri {
        Tri::from_option(self.stochastically_complete.converges().map(|c| !c))
    }

    pub fn is_feller(&self) -> Tri {
        self.feller.feller
    }

    pub fn any_inconclusive(&self) -> bool {
        self.hyperbolic.is_inconclusive()
            || self.stochastically_complete.is_inconclusive()
            || self.feller.feller == Tri::Unknown
    }

    /// Checks the logical relations between the three verdicts.
    pub fn consistency_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.is_hyperbolic() == Tri::Yes && self.is_feller() != Tri::Yes {
            out.push("hyperbolic but not Feller".to_string());
        }
        if matches!(
            self.feller.branch,
            FellerBranch::Parabolic | FellerBranch::ParabolicInfiniteVolume
        ) && self.is_hyperbolic() != Tri::No
        {
            out.push("parabolic Feller branch fired on a non-parabolic manifold".to_string());
        }
        if self.is_hyperbolic() == Tri::No
            && self.feller.feller == Tri::Yes
            && self.is_complete() != Tri::Yes
        {
            out.push("parabolic manifold reported stochastically incomplete".to_string());
        }
        out
    }
}

pub fn classify(
    manifold: &ModelManifold,
    p: f64,
    policy: &VerdictPolicy,
) -> Result<ClassificationReport, ClassifyError> {
    let hyperbolic = is_p_hyperbolic(manifold, p, policy)?;
    let stochastically_complete = is_p_stochastically_complete(manifold, p, policy)?;
    let feller = feller_from_hyperbolic(manifold, p, &hyperbolic, policy)?;
    Ok(ClassificationReport {
        manifold: manifold.sigma.label(),
        p,
        m: manifold.m,
        hyperbolic,
        stochastically_complete,
        feller,
        hint: None,
    })
}

fn override_status(v: &mut ConvergenceVerdict, converges: bool) {
    if v.converges() == Some(converges) {
        return;
    }
    let last = v.log_windows.last().copied().unwrap_or(f64::NEG_INFINITY);
    v.status = if converges {
        VerdictStatus::Converges {
            estimate: last.exp(),
            error_bound: f64::NAN,
        }
    } else {
        VerdictStatus::Diverges {
            growth_exponent: f64::NAN,
        }
    };
}

/// Like [`classify`], but the asymptotic hint decides every status; the
/// quadrature windows are kept as evidence.
pub fn classify_with_hint(
    manifold: &ModelManifold,
    p: f64,
    hint: AsymptoticHint,
    policy: &VerdictPolicy,
) -> Result<ClassificationReport, ClassifyError> {
    check_p(p)?;
    let (hyp, finite_volume, stoch_conv, tail_conv) = hint.decide(manifold.m, p);
    let mut hyperbolic = is_p_hyperbolic(manifold, p, policy)?;
    override_status(&mut hyperbolic, hyp);
    let mut stoch = is_p_stochastically_complete(manifold, p, policy)?;
    override_status(&mut stoch, stoch_conv);
    let (feller, branch) = if hyp {
        (Tri::Yes, FellerBranch::NonParabolic)
    } else if !finite_volume {
        (Tri::Yes, FellerBranch::ParabolicInfiniteVolume)
    } else if !tail_conv {
        (Tri::Yes, FellerBranch::Parabolic)
    } else {
        (Tri::No, FellerBranch::None)
    };
    Ok(ClassificationReport {
        manifold: manifold.sigma.label(),
        p,
        m: manifold.m,
        hyperbolic,
        stochastically_complete: stoch,
        feller: FellerVerdict {
            feller,
            branch,
            volume: None,
            tail_condition: None,
        },
        hint: Some(hint),
    })
}

/// `c_m ∫_0^r σ^{m−1}(t) dt`, the volume of the geodesic ball of radius `r`
/// about the pole.
pub fn volume_ball(manifold: &ModelManifold, r: f64) -> Result<f64, EvalError> {
    let policy = VerdictPolicy::default();
    let mut cum = CumulativeVolume::new(manifold, &policy);
    Ok(manifold.sphere_measure() * cum.log_at(r)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warping::Family;
    use std::f64::consts::PI;

    fn man(f: Family, m: u32) -> ModelManifold {
        ModelManifold::family(f, m).unwrap()
    }

    #[test]
    fn hyperbolicity_examples() {
        let pol = VerdictPolicy::default();
        let v = is_p_hyperbolic(&man(Family::Euclidean, 3), 2.0, &pol).unwrap();
        match v.status {
            VerdictStatus::Converges { estimate, .. } => assert!((estimate - 1.0).abs() < 1e-8),
            ref s => panic!("{s:?}"),
        }
        let v = is_p_hyperbolic(&man(Family::Euclidean, 2), 2.0, &pol).unwrap();
        assert_eq!(v.converges(), Some(false));
        let v = is_p_hyperbolic(&man(Family::Euclidean, 3), 3.0, &pol).unwrap();
        assert_eq!(v.converges(), Some(false));
        assert!(is_p_hyperbolic(&man(Family::Euclidean, 3), 1.0, &pol).is_err());
    }

    #[test]
    fn completeness_examples() {
        let pol = VerdictPolicy::default();
        let v = is_p_stochastically_complete(&man(Family::Euclidean, 3), 2.0, &pol).unwrap();
        assert_eq!(v.converges(), Some(false));
        let v = is_p_stochastically_complete(&man(Family::FlareCubic, 3), 2.0, &pol).unwrap();
        assert_eq!(v.converges(), Some(true), "{:?}", v.status);
        let v = is_p_stochastically_complete(&man(Family::Hyperbolic { kappa: -1.0 }, 2), 2.0, &pol)
            .unwrap();
        assert_eq!(v.converges(), Some(false));
    }

    #[test]
    fn feller_examples() {
        let pol = VerdictPolicy::default();
        let f = is_p_feller(&man(Family::Hyperbolic { kappa: -1.0 }, 3), 2.0, &pol).unwrap();
        assert_eq!((f.feller, f.branch), (Tri::Yes, FellerBranch::NonParabolic));
        let f = is_p_feller(&man(Family::Euclidean, 2), 2.0, &pol).unwrap();
        assert_eq!(
            (f.feller, f.branch),
            (Tri::Yes, FellerBranch::ParabolicInfiniteVolume)
        );
        let f = is_p_feller(&man(Family::CuspCubic, 3), 2.0, &pol).unwrap();
        assert_eq!(f.feller, Tri::No, "{:?}", f.tail_condition);
    }

    #[test]
    fn cumulative_volume_matches_closed_form() {
        let pol = VerdictPolicy::default();
        let m = man(Family::Hyperbolic { kappa: -1.0 }, 2);
        let mut cum = CumulativeVolume::new(&m, &pol);
        for r in [0.5, 1.0, 3.0, 7.5, 40.0] {
            let want = f64::cosh(r) - 1.0;
            let got = cum.log_at(r).unwrap().exp();
            assert!(((got - want) / want).abs() < 1e-10, "r={r}");
        }
    }

    #[test]
    fn ball_volumes() {
        let v = volume_ball(&man(Family::Euclidean, 3), 1.0).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-10);
        let v = volume_ball(&man(Family::Euclidean, 2), 2.0).unwrap();
        assert!((v - 4.0 * PI).abs() < 1e-10);
        let v = volume_ball(&man(Family::Hyperbolic { kappa: -1.0 }, 2), 1.0).unwrap();
        assert!((v - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-10);
        assert!((v - 3.41228).abs() < 1e-5);
    }

    #[test]
    fn hint_decides_cusp_and_flare() {
        let cusp = AsymptoticHint {
            power: 1.0,
            exp_coeff: -1.0,
            exp_power: 3.0,
        };
        // (hyperbolic, finite volume, stoch converges, tail converges)
        assert_eq!(cusp.decide(3, 2.0), (false, true, false, true));
        assert_eq!(cusp.decide(3, 3.0), (false, true, false, false));
        let flare = AsymptoticHint {
            exp_coeff: 1.0,
            ..cusp
        };
        assert_eq!(flare.decide(3, 2.0), (true, false, true, false));
        assert_eq!(flare.decide(3, 3.0), (true, false, false, false));
    }
}
