//! Statistical errors of the efficiency estimators.
//!
//! Each estimator is a smooth function η₁(⟨u⟩, ⟨v⟩, …) of sample means, so
//! its sampling variance follows from first-order propagation:
//! σ²(η₁) = Σ_u Σ_v (∂η₁/∂⟨u⟩)(∂η₁/∂⟨v⟩) σ_⟨u⟩⟨v⟩, with
//! σ_⟨u⟩⟨v⟩ = (⟨uv⟩ − ⟨u⟩⟨v⟩)/M for sample size M.
//!
//! Three interchangeable covariance sources feed that formula:
//!
//! * closed forms for a Poissonian pair source (and the equal-efficiency
//!   specializations, including the thermal large-N form);
//! * exact moments and covariances from the [`crate::oracle`] engine, which
//!   also covers thermal and custom sources where no closed form is
//!   transcribed;
//! * sample covariances of recorded data (empirical delta method).
//!
//! The partial derivatives are hard-coded from the estimator definitions;
//! a finite-difference cross-check lives in the test suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::CountRecord;
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::moments::{sample_moments, CovarianceTable, MomentSet, Stat};
use crate::oracle;
use crate::source::{PairDistribution, SourceKind};

/// Where a variance figure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceSource {
    ClosedFormPoisson,
    ClosedFormPoissonLimit,
    ClosedFormEqualEta,
    NumericExactMoments,
    EmpiricalDeltaMethod,
}

/// Variance of the η₁ estimate of one method, with the parameters echoed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceReport {
    pub method: Method,
    pub var_eta1: f64,
    pub source: VarianceSource,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_pairs: Option<f64>,
    pub sample_size: u64,
}

fn validate_closed_form_args(
    eta1: f64,
    eta2: f64,
    mean_pairs: f64,
    sample_size: u64,
) -> Result<()> {
    for (label, eta) in [("eta1", eta1), ("eta2", eta2)] {
        if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
            return Err(Error::Parameter(format!(
                "{label} must lie in (0, 1] for the closed-form variances, got {eta}"
            )));
        }
    }
    if !mean_pairs.is_finite() || mean_pairs <= 0.0 {
        return Err(Error::Parameter(format!(
            "mean pair number must be positive, got {mean_pairs}"
        )));
    }
    if sample_size == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    Ok(())
}

/// Closed-form sample variances of η̂₁ for a Poissonian pair source.
pub fn analytic_variance_poisson(
    method: Method,
    eta1: f64,
    eta2: f64,
    mean_pairs: f64,
    sample_size: u64,
) -> Result<VarianceReport> {
    validate_closed_form_args(eta1, eta2, mean_pairs, sample_size)?;
    let (e1, e2, n) = (eta1, eta2, mean_pairs);
    let m = sample_size as f64;
    let var = match method {
        Method::Product => (e1 * (1.0 + n - e1) + n * e2 * (2.0 + e1 * (e1 - 4.0))) / (m * n * e2),
        Method::Difference => {
            (2.0 * e1.powi(4) * (n * e2 - 1.0)
                + 2.0 * e1.powi(3) * (1.0 + n * (1.0 + 2.0 * e2 * (e2 - 3.0)))
                + n * e1 * e1 * e2 * (5.0 - 2.0 * e2 * (e2 - 2.0))
                - 4.0 * n * e1 * e2 * e2
                + n * e2.powi(3))
                / (2.0 * m * n * e1 * e1 * e2)
        }
        Method::Coincidence => e1 * (1.0 + e1 - 2.0 * e1 * e2) / (m * n * e2),
        Method::EqualDifference => {
            return Err(Error::Parameter(
                "no closed form is transcribed for the equal-difference estimator; \
                 use numeric_variance or analytic_variance_equal_eta for the difference method"
                    .into(),
            ))
        }
    };
    Ok(VarianceReport {
        method,
        var_eta1: var.max(0.0),
        source: VarianceSource::ClosedFormPoisson,
        eta1: Some(eta1),
        eta2: Some(eta2),
        mean_pairs: Some(mean_pairs),
        sample_size,
    })
}

/// Large-N limits of the Poisson closed forms (methods A and B approach
/// constants, method C vanishes).
pub fn limit_variance_poisson(
    method: Method,
    eta1: f64,
    eta2: f64,
    sample_size: u64,
) -> Result<VarianceReport> {
    validate_closed_form_args(eta1, eta2, 1.0, sample_size)?;
    let (e1, e2) = (eta1, eta2);
    let m = sample_size as f64;
    let var = match method {
        Method::Product => (e1 / e2 + 2.0 + e1 * (e1 - 4.0)) / m,
        Method::Difference => {
            (2.0 * e1.powi(4) * e2
                + 2.0 * e1.powi(3) * (1.0 + 2.0 * e2 * (e2 - 3.0))
                + e1 * e1 * e2 * (5.0 - 2.0 * e2 * (e2 - 2.0))
                - 4.0 * e1 * e2 * e2
                + e2.powi(3))
                / (2.0 * m * e1 * e1 * e2)
        }
        Method::Coincidence => 0.0,
        Method::EqualDifference => {
            return Err(Error::Parameter(
                "no closed form is transcribed for the equal-difference estimator".into(),
            ))
        }
    };
    Ok(VarianceReport {
        method,
        var_eta1: var.max(0.0),
        source: VarianceSource::ClosedFormPoissonLimit,
        eta1: Some(eta1),
        eta2: Some(eta2),
        mean_pairs: None,
        sample_size,
    })
}

/// Equal-efficiency difference-method variances: 2(1−η)²/M for a Poisson
/// source, 4(1−η)²/M for a thermal source in the N ≫ 1 regime.
pub fn analytic_variance_equal_eta(
    kind: SourceKind,
    eta: f64,
    sample_size: u64,
) -> Result<VarianceReport> {
    if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(Error::Parameter(format!(
            "eta must lie in [0, 1], got {eta}"
        )));
    }
    if sample_size == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let m = sample_size as f64;
    let var = match kind {
        SourceKind::Poisson => 2.0 * (1.0 - eta) * (1.0 - eta) / m,
        SourceKind::Thermal => 4.0 * (1.0 - eta) * (1.0 - eta) / m,
        SourceKind::Custom => {
            return Err(Error::Parameter(
                "equal-efficiency closed forms exist for poisson and thermal sources only".into(),
            ))
        }
    };
    Ok(VarianceReport {
        method: Method::Difference,
        var_eta1: var,
        source: VarianceSource::ClosedFormEqualEta,
        eta1: Some(eta),
        eta2: Some(eta),
        mean_pairs: None,
        sample_size,
    })
}

/// Hard-coded ∂η̂₁/∂⟨u⟩ for one method, evaluated at the given moments.
///
/// Product:   η₁ = ⟨lm⟩/⟨m⟩ − ⟨l²⟩/⟨l⟩ + 1
/// Difference: η₁ = [3⟨m⟩ − ⟨m⟩²/⟨l⟩ + ⟨l²⟩(1−⟨m⟩/⟨l⟩)² − ⟨(l−m)²⟩]/(2⟨m⟩)
/// Coincidence: η₁ = ⟨c⟩/⟨m⟩
/// Equal-difference: η = 1 − ⟨(l−m)²⟩/(⟨l⟩+⟨m⟩)
pub fn estimator_partials(method: Method, mom: &MomentSet) -> Result<Vec<(Stat, f64)>> {
    let l = mom.mean_l;
    let m = mom.mean_m;
    if l <= 0.0 || m <= 0.0 {
        return Err(Error::ZeroMeanSingles {
            arm: if l <= 0.0 { 1 } else { 2 },
            context: "evaluating estimator partial derivatives".into(),
        });
    }
    let q = mom.mean_l2;
    let d = mom.mean_diff2;
    Ok(match method {
        Method::Product => vec![
            (Stat::L, q / (l * l)),
            (Stat::M, -mom.mean_lm / (m * m)),
            (Stat::L2, -1.0 / l),
            (Stat::Lm, 1.0 / m),
        ],
        Method::Difference => vec![
            (Stat::L, (m + 2.0 * q * (1.0 - m / l)) / (2.0 * l * l)),
            (
                Stat::M,
                -1.0 / (2.0 * l) - q * (1.0 - m * m / (l * l)) / (2.0 * m * m) + d / (2.0 * m * m),
            ),
            (Stat::L2, (1.0 - m / l).powi(2) / (2.0 * m)),
            (Stat::Diff2, -1.0 / (2.0 * m)),
        ],
        Method::Coincidence => {
            let c = mom
                .mean_c
                .ok_or_else(|| Error::MethodUnavailable("coincidence variance needs ⟨c⟩".into()))?;
            vec![(Stat::C, 1.0 / m), (Stat::M, -c / (m * m))]
        }
        Method::EqualDifference => {
            let s2 = l + m;
            vec![
                (Stat::L, d / (s2 * s2)),
                (Stat::M, d / (s2 * s2)),
                (Stat::Diff2, -1.0 / s2),
            ]
        }
    })
}

/// Assemble the propagated variance from partials and a per-window
/// covariance table (1/M scaling applied here).
fn propagate(partials: &[(Stat, f64)], cov: &CovarianceTable, sample_size: u64) -> Result<f64> {
    let mut var = 0.0;
    for &(u, pu) in partials {
        for &(v, pv) in partials {
            let cuv = cov.cov(u, v).ok_or_else(|| {
                Error::MethodUnavailable(format!(
                    "covariance table lacks the ({}, {}) entry",
                    u.label(),
                    v.label()
                ))
            })?;
            var += pu * pv * cuv;
        }
    }
    Ok((var / sample_size as f64).max(0.0))
}

/// Delta-method variance evaluated on exact moments and covariances for an
/// arbitrary pair distribution. Covers the sources (thermal, custom) whose
/// closed forms are not transcribed.
pub fn numeric_variance(
    method: Method,
    dist: &PairDistribution,
    eta1: f64,
    eta2: f64,
    sample_size: u64,
) -> Result<VarianceReport> {
    if sample_size == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let mom = oracle::exact_moments_with_covariances(dist, eta1, eta2)?;
    let partials = estimator_partials(method, &mom)?;
    let cov = mom
        .covariances
        .as_ref()
        .expect("oracle provides covariances");
    let var = propagate(&partials, cov, sample_size)?;
    Ok(VarianceReport {
        method,
        var_eta1: var,
        source: VarianceSource::NumericExactMoments,
        eta1: Some(eta1),
        eta2: Some(eta2),
        mean_pairs: Some(dist.mean()),
        sample_size,
    })
}

/// Delta-method variance of η̂₁ from a moment set that carries sample
/// covariances (partials evaluated at the sample moments).
pub fn delta_variance_from_moments(method: Method, mom: &MomentSet) -> Result<VarianceReport> {
    let cov = mom
        .covariances
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("moment set carries no covariances".into()))?;
    let partials = estimator_partials(method, mom)?;
    let var = propagate(&partials, cov, mom.sample_size)?;
    Ok(VarianceReport {
        method,
        var_eta1: var,
        source: VarianceSource::EmpiricalDeltaMethod,
        eta1: None,
        eta2: None,
        mean_pairs: None,
        sample_size: mom.sample_size,
    })
}

/// Empirical delta-method variance of η̂₁ from recorded count data.
pub fn empirical_variance(records: &[CountRecord], method: Method) -> Result<VarianceReport> {
    let mom = sample_moments(records)?;
    delta_variance_from_moments(method, &mom)
}

/// Variance of η̂₂ for the same method: the estimators are arm-symmetric,
/// so swap the arm statistics and propagate η̂₁ of the swapped set.
pub fn delta_variance_from_moments_arm2(method: Method, mom: &MomentSet) -> Result<VarianceReport> {
    delta_variance_from_moments(method, &swap_arms(mom))
}

/// Swap the two arms of a moment set (l ↔ m everywhere). The coincidence
/// statistic keeps its identity: η̂₂ = ⟨c⟩/⟨l⟩ is the arm-swapped Klyshko
/// ratio.
pub fn swap_arms(mom: &MomentSet) -> MomentSet {
    let swap_stat = |s: Stat| match s {
        Stat::L => Stat::M,
        Stat::M => Stat::L,
        Stat::L2 => Stat::M2,
        Stat::M2 => Stat::L2,
        other => other,
    };
    let covariances = mom.covariances.as_ref().map(|table| {
        let stats: Vec<Stat> = table.stats().to_vec();
        let matrix: Vec<Vec<f64>> = stats
            .iter()
            .map(|&u| {
                stats
                    .iter()
                    .map(|&v| table.cov(swap_stat(u), swap_stat(v)).unwrap())
                    .collect()
            })
            .collect();
        CovarianceTable::new(stats, matrix)
    });
    MomentSet {
        mean_l: mom.mean_m,
        mean_m: mom.mean_l,
        mean_l2: mom.mean_m2,
        mean_m2: mom.mean_l2,
        mean_lm: mom.mean_lm,
        mean_diff2: mom.mean_diff2,
        mean_c: mom.mean_c,
        mean_c2: mom.mean_c2,
        sample_size: mom.sample_size,
        covariances,
        background_corrected: mom.background_corrected,
    }
}

/// Statistic bases underlying the background-corrected estimators.
const RAW_STATS: [Stat; 7] = Stat::WITH_C;
const BG_STATS: [Stat; 4] = [Stat::L, Stat::M, Stat::L2, Stat::M2];

/// Jacobian ∂(corrected statistic)/∂(raw measured mean) evaluated at the
/// given background means. Rows follow [`Stat::WITH_C`] order for the
/// corrected statistics, columns follow `RAW_STATS`.
fn correction_jacobian_raw(bg: &MomentSet) -> [[f64; 7]; 7] {
    let mut j = [[0.0; 7]; 7];
    let (lb, mb) = (bg.mean_l, bg.mean_m);
    // l = l_M − l_B
    j[0][0] = 1.0;
    // m = m_M − m_B
    j[1][1] = 1.0;
    // l² = l_M² − l_B² − 2 l_M l_B + 2 l_B²
    j[2][2] = 1.0;
    j[2][0] = -2.0 * lb;
    // m²
    j[3][3] = 1.0;
    j[3][1] = -2.0 * mb;
    // lm = l_M m_M − l_M m_B − l_B m_M + l_B m_B
    j[4][4] = 1.0;
    j[4][0] = -mb;
    j[4][1] = -lb;
    // (l−m)² = (l_M−m_M)² + 2(l_B−m_B)² − 2(l_M−m_M)(l_B−m_B) + 2 l_B m_B − l_B² − m_B²
    j[5][5] = 1.0;
    j[5][0] = -2.0 * (lb - mb);
    j[5][1] = 2.0 * (lb - mb);
    // c passes through
    j[6][6] = 1.0;
    j
}

/// Jacobian ∂(corrected statistic)/∂(background mean); columns follow
/// `BG_STATS` = (⟨l_B⟩, ⟨m_B⟩, ⟨l_B²⟩, ⟨m_B²⟩).
fn correction_jacobian_bg(raw: &MomentSet, bg: &MomentSet) -> [[f64; 4]; 7] {
    let mut j = [[0.0; 4]; 7];
    let (lb, mb) = (bg.mean_l, bg.mean_m);
    j[0][0] = -1.0;
    j[1][1] = -1.0;
    // l²: −⟨l_B²⟩ − 2⟨l_M⟩⟨l_B⟩ + 2⟨l_B⟩²
    j[2][0] = -2.0 * raw.mean_l + 4.0 * lb;
    j[2][2] = -1.0;
    // m²
    j[3][1] = -2.0 * raw.mean_m + 4.0 * mb;
    j[3][3] = -1.0;
    // lm
    j[4][0] = -raw.mean_m + mb;
    j[4][1] = -raw.mean_l + lb;
    // (l−m)²
    j[5][0] = 4.0 * (lb - mb) - 2.0 * (raw.mean_l - raw.mean_m) + 2.0 * mb;
    j[5][1] = -4.0 * (lb - mb) + 2.0 * (raw.mean_l - raw.mean_m) + 2.0 * lb;
    j[5][2] = -1.0;
    j[5][3] = -1.0;
    j
}

/// Delta-method variance of a background-corrected estimate.
///
/// The corrected estimator is a function of two independent sets of sample
/// means (signal run and source-blocked background run); the propagated
/// variance picks up both contributions through the correction Jacobians.
/// `corrected` must be the output of
/// [`crate::estimators::correct_background`] for the same `raw`/`bg` pair.
pub fn empirical_variance_corrected(
    method: Method,
    corrected: &MomentSet,
    raw: &MomentSet,
    bg: &MomentSet,
) -> Result<VarianceReport> {
    let raw_cov = raw
        .covariances
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("raw moment set carries no covariances".into()))?;
    let bg_cov = bg.covariances.as_ref().ok_or_else(|| {
        Error::InsufficientData("background moment set carries no covariances".into())
    })?;
    let partials = estimator_partials(method, corrected)?;
    let jac_raw = correction_jacobian_raw(bg);
    let jac_bg = correction_jacobian_bg(raw, bg);

    // Chain rule: gradient with respect to the underlying raw means.
    let stat_row = |s: Stat| Stat::WITH_C.iter().position(|&t| t == s).unwrap();
    let mut grad_raw = [0.0; 7];
    let mut grad_bg = [0.0; 4];
    for &(stat, p) in &partials {
        let row = stat_row(stat);
        for (col, slot) in grad_raw.iter_mut().enumerate() {
            *slot += p * jac_raw[row][col];
        }
        for (col, slot) in grad_bg.iter_mut().enumerate() {
            *slot += p * jac_bg[row][col];
        }
    }

    let mut var = 0.0;
    for (i, &u) in RAW_STATS.iter().enumerate() {
        for (j, &v) in RAW_STATS.iter().enumerate() {
            if grad_raw[i] == 0.0 || grad_raw[j] == 0.0 {
                continue;
            }
            let cuv = raw_cov.cov(u, v).ok_or_else(|| {
                Error::MethodUnavailable(format!(
                    "raw covariance table lacks ({}, {})",
                    u.label(),
                    v.label()
                ))
            })?;
            var += grad_raw[i] * grad_raw[j] * cuv / raw.sample_size as f64;
        }
    }
    for (i, &u) in BG_STATS.iter().enumerate() {
        for (j, &v) in BG_STATS.iter().enumerate() {
            if grad_bg[i] == 0.0 || grad_bg[j] == 0.0 {
                continue;
            }
            let cuv = bg_cov.cov(u, v).ok_or_else(|| {
                Error::MethodUnavailable(format!(
                    "background covariance table lacks ({}, {})",
                    u.label(),
                    v.label()
                ))
            })?;
            var += grad_bg[i] * grad_bg[j] * cuv / bg.sample_size as f64;
        }
    }
    Ok(VarianceReport {
        method,
        var_eta1: var.max(0.0),
        source: VarianceSource::EmpiricalDeltaMethod,
        eta1: None,
        eta2: None,
        mean_pairs: None,
        sample_size: raw.sample_size,
    })
}

/// Which regime a variance curve is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairRegime {
    /// Finite mean pair number, exact Poisson closed forms.
    FiniteMean(f64),
    /// Analytic N → ∞ limit.
    LargeMeanLimit,
}

/// How the second efficiency tracks the swept η₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta2Mode {
    Fixed(f64),
    EqualToEta1,
}

/// Variance-versus-η₁ series for the product or difference method with a
/// Poissonian source. Grid points evaluate in parallel; output order
/// follows the input grid.
pub fn variance_curve(
    method: Method,
    eta2_mode: Eta2Mode,
    regime: PairRegime,
    sample_size: u64,
    eta1_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !matches!(method, Method::Product | Method::Difference) {
        return Err(Error::Parameter(
            "variance curves cover the product and difference methods".into(),
        ));
    }
    if eta1_grid.is_empty() {
        return Err(Error::Parameter("empty η₁ grid".into()));
    }
    eta1_grid
        .par_iter()
        .map(|&eta1| {
            let eta2 = match eta2_mode {
                Eta2Mode::Fixed(value) => value,
                Eta2Mode::EqualToEta1 => eta1,
            };
            let report = match regime {
                PairRegime::FiniteMean(n) => {
                    analytic_variance_poisson(method, eta1, eta2, n, sample_size)?
                }
                PairRegime::LargeMeanLimit => {
                    limit_variance_poisson(method, eta1, eta2, sample_size)?
                }
            };
            Ok((eta1, report.var_eta1))
        })
        .collect()
}
