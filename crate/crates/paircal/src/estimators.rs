//! Absolute-efficiency estimators built from singles-rate statistics.
//!
//! Three routes to the arm efficiencies are implemented, all functions of
//! moment sets only:
//!
//! * product method — η₁ = ⟨lm⟩/⟨m⟩ − ⟨l²⟩/⟨l⟩ + 1 (and the arm-swapped
//!   form for η₂); the pair statistics enter through the mean product of
//!   the singles counts, no coincidence logic required;
//! * difference method — the same information read from the variance of
//!   the detected photon-number difference ⟨(l−m)²⟩, the natural observable
//!   in difference-detection setups;
//! * coincidence (Klyshko) method — η₁ = ⟨c⟩/⟨m⟩ when a coincidence count
//!   is available.
//!
//! Raw measured moments can be corrected for independent additive
//! background measured in a source-blocked run; feeding the corrected set
//! to the estimators reproduces the fully expanded background-corrected
//! expressions.
//!
//! Estimates are deliberately not clamped to [0, 1]: sampling noise can
//! push them outside and clamping would bias error-bar validation. The
//! `out_of_range` flag records when that happened.

use serde::{Deserialize, Serialize};

use crate::detector::CountRecord;
use crate::error::{Error, Result};
use crate::moments::{MomentSet, Stat};

pub use crate::moments::sample_moments;

/// Estimation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Mean product of the singles counts (method A).
    Product,
    /// Variance of the singles-count difference (method B).
    Difference,
    /// Difference method specialization for η₁ ≈ η₂.
    EqualDifference,
    /// Coincidence-to-singles ratio (method C).
    Coincidence,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Product => "product",
            Method::Difference => "difference",
            Method::EqualDifference => "equal-difference",
            Method::Coincidence => "coincidence",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Method::Product),
            "difference" => Ok(Method::Difference),
            "equal-difference" => Ok(Method::EqualDifference),
            "coincidence" => Ok(Method::Coincidence),
            other => Err(Error::Parameter(format!(
                "unknown method '{other}' (expected product, difference, equal-difference or coincidence)"
            ))),
        }
    }
}

/// One method's efficiency estimate, with optional variance estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub method: Method,
    pub eta1: f64,
    pub eta2: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub var_eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub var_eta2: Option<f64>,
    pub background_corrected: bool,
    /// True when an estimate fell outside [0, 1].
    pub out_of_range: bool,
    /// Equal-difference only: the two singles means differ by more than
    /// five joint standard errors, so the η₁ = η₂ assumption is suspect.
    pub arm_asymmetry_warning: bool,
}

impl EfficiencyEstimate {
    fn new(method: Method, eta1: f64, eta2: f64, mom: &MomentSet) -> Self {
        Self {
            method,
            eta1,
            eta2,
            var_eta1: None,
            var_eta2: None,
            background_corrected: mom.background_corrected,
            out_of_range: !(0.0..=1.0).contains(&eta1) || !(0.0..=1.0).contains(&eta2),
            arm_asymmetry_warning: false,
        }
    }
}

fn require_positive_singles(mom: &MomentSet, context: &str) -> Result<()> {
    if mom.mean_l <= 0.0 {
        return Err(Error::ZeroMeanSingles {
            arm: 1,
            context: format!("⟨l⟩ = {} while computing the {context}", mom.mean_l),
        });
    }
    if mom.mean_m <= 0.0 {
        return Err(Error::ZeroMeanSingles {
            arm: 2,
            context: format!("⟨m⟩ = {} while computing the {context}", mom.mean_m),
        });
    }
    Ok(())
}

/// Product-method estimates: η₁ = ⟨lm⟩/⟨m⟩ − ⟨l²⟩/⟨l⟩ + 1 and the
/// arm-swapped expression for η₂.
pub fn eta_product(mom: &MomentSet) -> Result<EfficiencyEstimate> {
    require_positive_singles(mom, "product estimator")?;
    let eta1 = mom.mean_lm / mom.mean_m - mom.mean_l2 / mom.mean_l + 1.0;
    let eta2 = mom.mean_lm / mom.mean_l - mom.mean_m2 / mom.mean_m + 1.0;
    Ok(EfficiencyEstimate::new(Method::Product, eta1, eta2, mom))
}

/// Difference-method estimates from ⟨(l−m)²⟩:
/// η₁ = [3⟨m⟩ − ⟨m⟩²/⟨l⟩ + ⟨l²⟩(1 − ⟨m⟩/⟨l⟩)² − ⟨(l−m)²⟩] / (2⟨m⟩),
/// and the arm-swapped expression for η₂.
pub fn eta_difference(mom: &MomentSet) -> Result<EfficiencyEstimate> {
    require_positive_singles(mom, "difference estimator")?;
    let (l, m) = (mom.mean_l, mom.mean_m);
    let eta1 =
        (3.0 * m - m * m / l + mom.mean_l2 * (1.0 - m / l).powi(2) - mom.mean_diff2) / (2.0 * m);
    let eta2 =
        (3.0 * l - l * l / m + mom.mean_m2 * (1.0 - l / m).powi(2) - mom.mean_diff2) / (2.0 * l);
    Ok(EfficiencyEstimate::new(Method::Difference, eta1, eta2, mom))
}

/// Equal-efficiency difference estimate η = 1 − ⟨(l−m)²⟩ / (2⟨s⟩), with
/// ⟨s⟩ taken as the average singles mean (⟨l⟩ + ⟨m⟩)/2.
///
/// Intended for η₁ ≈ η₂; when the two singles means differ by more than
/// five joint standard errors (computable only when the moment set carries
/// covariances) the estimate is flagged.
pub fn eta_equal_difference(mom: &MomentSet) -> Result<EfficiencyEstimate> {
    require_positive_singles(mom, "equal-difference estimator")?;
    let mean_singles = 0.5 * (mom.mean_l + mom.mean_m);
    let eta = 1.0 - mom.mean_diff2 / (2.0 * mean_singles);
    let mut estimate = EfficiencyEstimate::new(Method::EqualDifference, eta, eta, mom);
    if let Some(cov) = &mom.covariances {
        let var_diff = cov
            .cov_of_means(Stat::L, Stat::L, mom.sample_size)
            .unwrap_or(0.0)
            + cov
                .cov_of_means(Stat::M, Stat::M, mom.sample_size)
                .unwrap_or(0.0)
            - 2.0
                * cov
                    .cov_of_means(Stat::L, Stat::M, mom.sample_size)
                    .unwrap_or(0.0);
        if var_diff > 0.0 {
            let gap = (mom.mean_l - mom.mean_m).abs();
            estimate.arm_asymmetry_warning = gap > 5.0 * var_diff.sqrt();
        }
    }
    Ok(estimate)
}

/// Coincidence-method estimates η₁ = ⟨c⟩/⟨m⟩ and η₂ = ⟨c⟩/⟨l⟩.
pub fn eta_coincidence(mom: &MomentSet) -> Result<EfficiencyEstimate> {
    let mean_c = mom.mean_c.ok_or_else(|| {
        Error::MethodUnavailable("coincidence method needs a coincidence column".into())
    })?;
    require_positive_singles(mom, "coincidence estimator")?;
    let eta1 = mean_c / mom.mean_m;
    let eta2 = mean_c / mom.mean_l;
    Ok(EfficiencyEstimate::new(
        Method::Coincidence,
        eta1,
        eta2,
        mom,
    ))
}

/// Subtract background moments (measured in a source-blocked run) from raw
/// measured moments, returning signal-only moments.
///
/// Uses the statistical independence of signal and background:
/// ⟨l⟩ = ⟨l_M⟩ − ⟨l_B⟩,
/// ⟨l²⟩ = ⟨l_M²⟩ − ⟨l_B²⟩ − 2⟨l_M⟩⟨l_B⟩ + 2⟨l_B⟩²,
/// ⟨lm⟩ = ⟨l_M m_M⟩ − ⟨l_M⟩⟨m_B⟩ − ⟨l_B⟩⟨m_M⟩ + ⟨l_B⟩⟨m_B⟩,
/// and the matching expansion for ⟨(l−m)²⟩.
///
/// Coincidence moments pass through unchanged (background never enters the
/// coincidence count). Covariance tables do not survive the subtraction
/// and are dropped.
///
/// Both inputs are expected to come from at least two samples each (or
/// from exact evaluation); [`sample_moments`] enforces that for measured
/// data.
pub fn correct_background(raw: &MomentSet, bg: &MomentSet) -> Result<MomentSet> {
    let lb = bg.mean_l;
    let mb = bg.mean_m;
    let mean_l = raw.mean_l - lb;
    let mean_m = raw.mean_m - mb;
    if mean_l <= 0.0 {
        return Err(Error::BackgroundDominates {
            arm: 1,
            corrected_mean: mean_l,
        });
    }
    if mean_m <= 0.0 {
        return Err(Error::BackgroundDominates {
            arm: 2,
            corrected_mean: mean_m,
        });
    }
    let mean_l2 = raw.mean_l2 - bg.mean_l2 - 2.0 * raw.mean_l * lb + 2.0 * lb * lb;
    let mean_m2 = raw.mean_m2 - bg.mean_m2 - 2.0 * raw.mean_m * mb + 2.0 * mb * mb;
    let mean_lm = raw.mean_lm - raw.mean_l * mb - lb * raw.mean_m + lb * mb;
    let mean_diff2 = raw.mean_diff2 + 2.0 * (lb - mb).powi(2)
        - 2.0 * (raw.mean_l - raw.mean_m) * (lb - mb)
        + 2.0 * lb * mb
        - bg.mean_l2
        - bg.mean_m2;
    Ok(MomentSet {
        mean_l,
        mean_m,
        mean_l2,
        mean_m2,
        mean_lm,
        mean_diff2,
        mean_c: raw.mean_c,
        mean_c2: raw.mean_c2,
        sample_size: raw.sample_size,
        covariances: None,
        background_corrected: true,
    })
}

/// Forward model of [`correct_background`]: compound independent background
/// moments onto signal moments, producing the measured-moment set. Useful
/// for validating the correction and for building synthetic fixtures.
pub fn compound_background(signal: &MomentSet, bg: &MomentSet) -> MomentSet {
    let mean_l = signal.mean_l + bg.mean_l;
    let mean_m = signal.mean_m + bg.mean_m;
    let mean_l2 = signal.mean_l2 + 2.0 * signal.mean_l * bg.mean_l + bg.mean_l2;
    let mean_m2 = signal.mean_m2 + 2.0 * signal.mean_m * bg.mean_m + bg.mean_m2;
    let mean_lm =
        signal.mean_lm + signal.mean_l * bg.mean_m + bg.mean_l * signal.mean_m + bg.mean_lm;
    let mean_diff2 = mean_l2 + mean_m2 - 2.0 * mean_lm;
    MomentSet {
        mean_l,
        mean_m,
        mean_l2,
        mean_m2,
        mean_lm,
        mean_diff2,
        mean_c: signal.mean_c,
        mean_c2: signal.mean_c2,
        sample_size: signal.sample_size,
        covariances: None,
        background_corrected: false,
    }
}

/// Exact moments of independent Poissonian backgrounds with the given arm
/// means: ⟨x⟩ = λ, ⟨x²⟩ = λ + λ² and ⟨l_B m_B⟩ = λ₁λ₂.
pub fn poisson_background_moments(lambda1: f64, lambda2: f64, sample_size: u64) -> MomentSet {
    let l2 = lambda1 + lambda1 * lambda1;
    let m2 = lambda2 + lambda2 * lambda2;
    let lm = lambda1 * lambda2;
    MomentSet {
        mean_l: lambda1,
        mean_m: lambda2,
        mean_l2: l2,
        mean_m2: m2,
        mean_lm: lm,
        mean_diff2: l2 + m2 - 2.0 * lm,
        mean_c: None,
        mean_c2: None,
        sample_size,
        covariances: None,
        background_corrected: false,
    }
}

/// Normalized difference variance ⟨(l−m)²⟩/⟨s⟩² = (2/N)(1/η − 1) for equal
/// efficiencies. Diverges as η → 0 and vanishes as η → 1.
pub fn normalized_difference_variance(eta: f64, mean_pairs: f64) -> Result<f64> {
    if eta <= 0.0 || eta > 1.0 || !eta.is_finite() {
        return Err(Error::Parameter(format!(
            "normalized difference variance needs η in (0, 1]; diverges at η = 0 (got {eta})"
        )));
    }
    if mean_pairs <= 0.0 || !mean_pairs.is_finite() {
        return Err(Error::Parameter(format!(
            "normalized difference variance needs N > 0, got {mean_pairs}"
        )));
    }
    Ok(2.0 / mean_pairs * (1.0 / eta - 1.0))
}

/// Run every applicable estimator on a moment set.
///
/// Always produces product, difference and equal-difference estimates;
/// adds the coincidence estimate when the moment set carries ⟨c⟩.
pub fn estimate_all(mom: &MomentSet) -> Result<Vec<EfficiencyEstimate>> {
    let mut out = vec![
        eta_product(mom)?,
        eta_difference(mom)?,
        eta_equal_difference(mom)?,
    ];
    if mom.has_coincidences() {
        out.push(eta_coincidence(mom)?);
    }
    Ok(out)
}

/// Convenience: sample moments of `records` fed through one estimator.
pub fn estimate_from_records(
    records: &[CountRecord],
    method: Method,
) -> Result<EfficiencyEstimate> {
    let mom = sample_moments(records)?;
    match method {
        Method::Product => eta_product(&mom),
        Method::Difference => eta_difference(&mom),
        Method::EqualDifference => eta_equal_difference(&mom),
        Method::Coincidence => eta_coincidence(&mom),
    }
}
