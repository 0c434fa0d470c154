//! Exact-moment engine for the source ⊗ thinning ⊗ thinning model.
//!
//! Ground truth for every estimator and variance: moments of the detected
//! counts are triple sums of the form
//! Σ_k Σ_l Σ_m G_N(k) B_{k,η₁}(l) B_{k,η₂}(m) x(l, m), and coincidence
//! moments cascade the binomial through arm 1:
//! Σ_k Σ_l Σ_{c≤l} G_N(k) B_{k,η₁}(l) B_{l,η₂}(c) c^p.
//!
//! Two evaluation paths are kept deliberately separate:
//!
//! * the production path collapses the inner binomial expectations with
//!   closed-form conditional moments, reducing the sums to a single O(K)
//!   pass over the pair number (this is an algebraic reorganization, not an
//!   approximation);
//! * `*_nested` functions evaluate the literal nested sums. They are slow
//!   (O(K³)) and capped to modest cutoffs, but share no conditional-moment
//!   shortcuts with the production path, so agreement between the two is a
//!   meaningful check. Tests assert it across a parameter grid.
//!
//! All sums use compensated accumulation; default cutoffs keep truncated
//! tail mass below 1e-12.

use crate::error::{Error, Result};
use crate::math::{binomial_raw_moment, ln_factorial, KahanSum};
use crate::moments::{CovarianceTable, MomentSet, Stat};
use crate::source::PairDistribution;

/// Largest cutoff accepted by the literal nested sums.
const NESTED_CUTOFF_CAP: u64 = 1500;

/// A term coef · l^a · m^b · c^d of a statistic polynomial.
#[derive(Debug, Clone, Copy)]
struct Monomial {
    coef: f64,
    a: u32,
    b: u32,
    d: u32,
}

fn stat_monomials(stat: Stat) -> Vec<Monomial> {
    let mono = |coef, a, b, d| Monomial { coef, a, b, d };
    match stat {
        Stat::L => vec![mono(1.0, 1, 0, 0)],
        Stat::M => vec![mono(1.0, 0, 1, 0)],
        Stat::L2 => vec![mono(1.0, 2, 0, 0)],
        Stat::M2 => vec![mono(1.0, 0, 2, 0)],
        Stat::Lm => vec![mono(1.0, 1, 1, 0)],
        Stat::Diff2 => vec![mono(1.0, 2, 0, 0), mono(1.0, 0, 2, 0), mono(-2.0, 1, 1, 0)],
        Stat::C => vec![mono(1.0, 0, 0, 1)],
    }
}

fn product_monomials(u: Stat, v: Stat) -> Vec<Monomial> {
    let mut out = Vec::new();
    for a in stat_monomials(u) {
        for b in stat_monomials(v) {
            out.push(Monomial {
                coef: a.coef * b.coef,
                a: a.a + b.a,
                b: a.b + b.b,
                d: a.d + b.d,
            });
        }
    }
    out
}

/// Conditional binomial moments of one arm, E[x^j | k] for j = 0..=4.
/// Order 4 covers every tracked statistic product: the fourth power arises
/// from pairs like ⟨l²·l²⟩ and ⟨(l−m)²·(l−m)²⟩, and the coincidence
/// reduction raises the arm-1 order by at most two from a ≤ 2.
#[derive(Debug, Clone, Copy)]
struct ArmMoments {
    powers: [f64; 5],
}

impl ArmMoments {
    fn new(k: f64, eta: f64) -> Self {
        let mut powers = [1.0; 5];
        for (j, slot) in powers.iter_mut().enumerate().skip(1) {
            *slot = binomial_raw_moment(k, eta, j as u32);
        }
        Self { powers }
    }

    fn moment(&self, j: u32) -> f64 {
        self.powers[j as usize]
    }
}

/// E[c^d l^a | k]: the coincidence count is a second thinning of the arm-1
/// count with η₂, so E[c|l] = η₂ l and E[c²|l] = η₂(1−η₂) l + η₂² l².
fn arm1_with_coincidence(arm1: &ArmMoments, eta2: f64, a: u32, d: u32) -> f64 {
    match d {
        0 => arm1.moment(a),
        1 => eta2 * arm1.moment(a + 1),
        2 => eta2 * (1.0 - eta2) * arm1.moment(a + 1) + eta2 * eta2 * arm1.moment(a + 2),
        _ => unreachable!("coincidence moments beyond c² are not tracked"),
    }
}

fn validate_etas(eta1: f64, eta2: f64) -> Result<()> {
    for (label, eta) in [("eta1", eta1), ("eta2", eta2)] {
        if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
            return Err(Error::Parameter(format!(
                "{label} must lie in [0, 1], got {eta}"
            )));
        }
    }
    Ok(())
}

/// Evaluate a set of statistic polynomials in one pass over the pair number.
fn expect_many(
    dist: &PairDistribution,
    eta1: f64,
    eta2: f64,
    targets: &[Vec<Monomial>],
) -> Vec<f64> {
    let pmf = dist.pmf_slice();
    let mut sums: Vec<KahanSum> = vec![KahanSum::new(); targets.len()];
    for (k, &g) in pmf.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let kf = k as f64;
        let arm1 = ArmMoments::new(kf, eta1);
        let arm2 = ArmMoments::new(kf, eta2);
        for (target, sum) in targets.iter().zip(sums.iter_mut()) {
            let mut value = 0.0;
            for mono in target {
                value += mono.coef
                    * arm1_with_coincidence(&arm1, eta2, mono.a, mono.d)
                    * arm2.moment(mono.b);
            }
            sum.add(g * value);
        }
    }
    sums.iter().map(|s| s.value()).collect()
}

/// Exact means of every tracked statistic (including ⟨c⟩ and ⟨c²⟩), without
/// covariances. `sample_size` is set to 1: these are per-window moments.
pub fn exact_moments(dist: &PairDistribution, eta1: f64, eta2: f64) -> Result<MomentSet> {
    validate_etas(eta1, eta2)?;
    let mut targets: Vec<Vec<Monomial>> = Stat::WITH_C.iter().map(|&s| stat_monomials(s)).collect();
    // ⟨c²⟩ as an extra target: c·c.
    targets.push(product_monomials(Stat::C, Stat::C));
    let values = expect_many(dist, eta1, eta2, &targets);
    Ok(MomentSet {
        mean_l: values[0],
        mean_m: values[1],
        mean_l2: values[2],
        mean_m2: values[3],
        mean_lm: values[4],
        mean_diff2: values[5],
        mean_c: Some(values[6]),
        mean_c2: Some(values[7]),
        sample_size: 1,
        covariances: None,
        background_corrected: false,
    })
}

/// Exact moments plus the full per-window covariance table over
/// {l, m, l², m², lm, (l−m)², c}.
pub fn exact_moments_with_covariances(
    dist: &PairDistribution,
    eta1: f64,
    eta2: f64,
) -> Result<MomentSet> {
    validate_etas(eta1, eta2)?;
    let stats = Stat::WITH_C;
    let dim = stats.len();
    let mut targets: Vec<Vec<Monomial>> = stats.iter().map(|&s| stat_monomials(s)).collect();
    let mut pair_index = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            pair_index.push((i, j));
            targets.push(product_monomials(stats[i], stats[j]));
        }
    }
    let values = expect_many(dist, eta1, eta2, &targets);
    let means = &values[..dim];
    let mut matrix = vec![vec![0.0; dim]; dim];
    for (&(i, j), &uv) in pair_index.iter().zip(&values[dim..]) {
        let cov = uv - means[i] * means[j];
        matrix[i][j] = cov;
        matrix[j][i] = cov;
    }
    Ok(MomentSet {
        mean_l: means[0],
        mean_m: means[1],
        mean_l2: means[2],
        mean_m2: means[3],
        mean_lm: means[4],
        mean_diff2: means[5],
        mean_c: Some(means[6]),
        mean_c2: Some(matrix[6][6] + means[6] * means[6]),
        sample_size: 1,
        covariances: Some(CovarianceTable::new(stats.to_vec(), matrix)),
        background_corrected: false,
    })
}

/// Covariances of the sample means, σ_⟨u⟩⟨v⟩ = (⟨uv⟩ − ⟨u⟩⟨v⟩)/M, over the
/// full statistic basis.
///
/// The returned table is already scaled by 1/M: read it with
/// [`CovarianceTable::cov`], not `cov_of_means`.
pub fn exact_covariances(
    dist: &PairDistribution,
    eta1: f64,
    eta2: f64,
    sample_size: u64,
) -> Result<CovarianceTable> {
    if sample_size == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let mom = exact_moments_with_covariances(dist, eta1, eta2)?;
    let table = mom.covariances.expect("covariances were requested");
    let scale = sample_size as f64;
    let stats = table.stats().to_vec();
    let matrix: Vec<Vec<f64>> = stats
        .iter()
        .map(|&u| {
            stats
                .iter()
                .map(|&v| table.cov(u, v).unwrap() / scale)
                .collect()
        })
        .collect();
    Ok(CovarianceTable::new(stats, matrix))
}

/// Exact coincidence moment ⟨c^p⟩ (p = 1 or 2) through the cascaded
/// construction, evaluated on the O(K) path.
pub fn coincidence_moment(dist: &PairDistribution, eta1: f64, eta2: f64, p: u8) -> Result<f64> {
    validate_etas(eta1, eta2)?;
    let d = validate_coincidence_order(p)?;
    let targets = vec![vec![Monomial {
        coef: 1.0,
        a: 0,
        b: 0,
        d,
    }]];
    Ok(expect_many(dist, eta1, eta2, &targets)[0])
}

fn validate_coincidence_order(p: u8) -> Result<u32> {
    match p {
        1 | 2 => Ok(p as u32),
        other => Err(Error::Parameter(format!(
            "coincidence moments are defined for p in {{1, 2}}, got {other}"
        ))),
    }
}

/// Binomial(k, p) pmf row evaluated in log space (stable for any k, p).
fn binomial_pmf_row(k: u64, p: f64) -> Vec<f64> {
    if p == 0.0 {
        let mut row = vec![0.0; k as usize + 1];
        row[0] = 1.0;
        return row;
    }
    if p == 1.0 {
        let mut row = vec![0.0; k as usize + 1];
        row[k as usize] = 1.0;
        return row;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let ln_k = ln_factorial(k);
    (0..=k)
        .map(|l| {
            (ln_k - ln_factorial(l) - ln_factorial(k - l) + l as f64 * ln_p + (k - l) as f64 * ln_q)
                .exp()
        })
        .collect()
}

fn check_nested_cutoff(dist: &PairDistribution) -> Result<()> {
    if dist.cutoff() > NESTED_CUTOFF_CAP {
        return Err(Error::Truncation(format!(
            "nested brute-force sums are capped at cutoff {NESTED_CUTOFF_CAP} (distribution needs {}); \
             use the reorganized exact-moment path instead",
            dist.cutoff()
        )));
    }
    Ok(())
}

/// Literal nested evaluation of ⟨c^p⟩: Σ_k Σ_l Σ_{c≤l} G_N(k) B_{k,η₁}(l)
/// B_{l,η₂}(c) c^p. Cross-check oracle for [`coincidence_moment`].
pub fn coincidence_moment_nested(
    dist: &PairDistribution,
    eta1: f64,
    eta2: f64,
    p: u8,
) -> Result<f64> {
    validate_etas(eta1, eta2)?;
    let power = validate_coincidence_order(p)? as i32;
    check_nested_cutoff(dist)?;
    let pmf = dist.pmf_slice();
    let mut total = KahanSum::new();
    for (k, &g) in pmf.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row1 = binomial_pmf_row(k as u64, eta1);
        let mut inner = KahanSum::new();
        for (l, &b1) in row1.iter().enumerate() {
            if b1 == 0.0 {
                continue;
            }
            let row2 = binomial_pmf_row(l as u64, eta2);
            let mut c_sum = 0.0;
            for (c, &b2) in row2.iter().enumerate() {
                c_sum += b2 * (c as f64).powi(power);
            }
            inner.add(b1 * c_sum);
        }
        total.add(g * inner.value());
    }
    Ok(total.value())
}

/// Literal nested evaluation of the singles statistics (no coincidences):
/// Σ_k Σ_l Σ_m G_N(k) B_{k,η₁}(l) B_{k,η₂}(m) x(l, m). Cross-check oracle
/// for [`exact_moments`].
pub fn exact_moments_nested(dist: &PairDistribution, eta1: f64, eta2: f64) -> Result<MomentSet> {
    validate_etas(eta1, eta2)?;
    check_nested_cutoff(dist)?;
    let pmf = dist.pmf_slice();
    let mut sums = [(); 6].map(|_| KahanSum::new());
    for (k, &g) in pmf.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row1 = binomial_pmf_row(k as u64, eta1);
        let row2 = binomial_pmf_row(k as u64, eta2);
        let mut inner = [0.0f64; 6];
        for (l, &b1) in row1.iter().enumerate() {
            if b1 == 0.0 {
                continue;
            }
            let lf = l as f64;
            for (m, &b2) in row2.iter().enumerate() {
                let mf = m as f64;
                let w = b1 * b2;
                inner[0] += w * lf;
                inner[1] += w * mf;
                inner[2] += w * lf * lf;
                inner[3] += w * mf * mf;
                inner[4] += w * lf * mf;
                inner[5] += w * (lf - mf) * (lf - mf);
            }
        }
        for (sum, value) in sums.iter_mut().zip(inner) {
            sum.add(g * value);
        }
    }
    Ok(MomentSet {
        mean_l: sums[0].value(),
        mean_m: sums[1].value(),
        mean_l2: sums[2].value(),
        mean_m2: sums[3].value(),
        mean_lm: sums[4].value(),
        mean_diff2: sums[5].value(),
        mean_c: None,
        mean_c2: None,
        sample_size: 1,
        covariances: None,
        background_corrected: false,
    })
}

/// Closed form for ⟨(l−m)²⟩ with a general pair distribution:
/// (η₁+η₂)N − (η₁²+η₂²)N + (η₁−η₂)²⟨k²⟩. The (η₁−η₂)² factor carries the
/// whole dependence on the source statistics, which is why it cancels for
/// equal efficiencies.
pub fn difference_variance_closed_form(dist: &PairDistribution, eta1: f64, eta2: f64) -> f64 {
    let (mean, second) = dist.moments();
    (eta1 + eta2) * mean - (eta1 * eta1 + eta2 * eta2) * mean
        + (eta1 - eta2) * (eta1 - eta2) * second
}
