//! Pair-number distributions for a correlated-pair light source.
//!
//! A source emits `k` photon pairs per sample window with probability
//! `pmf(k)`. Three families are supported: Poisson (mean N, second moment
//! N + N²), thermal (geometric law with exact mean N, second moment
//! N + 2N²) and custom finite tables. Moments are exact closed forms for
//! the parametric families and truncated sums for tables.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{ln_factorial, KahanSum};

/// Tail mass allowed beyond a user-supplied truncation cutoff.
pub const TAIL_MASS: f64 = 1e-12;

/// Tail-mass target for the default thermal cutoff. Tighter than
/// [`TAIL_MASS`] because k-weighted sums (moments up to k⁴) amplify a
/// geometric tail by a factor polynomial in the cutoff.
const THERMAL_TAIL_MASS: f64 = 1e-18;

/// Tolerance on Σ pmf(k) over the truncated support.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Poisson,
    Thermal,
    Custom,
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceKind::Poisson => write!(f, "poisson"),
            SourceKind::Thermal => write!(f, "thermal"),
            SourceKind::Custom => write!(f, "custom"),
        }
    }
}

/// Distribution of the number of photon pairs emitted per sample window.
///
/// Immutable once constructed; safe to share across threads.
#[derive(Debug, Clone)]
pub struct PairDistribution {
    kind: SourceKind,
    mean: f64,
    second_moment: f64,
    cutoff: u64,
    /// Custom only: pmf indexed by k and its running CDF.
    pmf_table: Option<Vec<f64>>,
    cdf_table: Option<Vec<f64>>,
}

impl PairDistribution {
    /// Poisson pair source with the given mean pair number per window.
    pub fn poisson(mean: f64) -> Result<Self> {
        validate_mean(mean)?;
        // Tail mass beyond N + 12√N + 30 is far below TAIL_MASS.
        let cutoff = (mean + 12.0 * mean.sqrt() + 30.0).ceil() as u64;
        Ok(Self {
            kind: SourceKind::Poisson,
            mean,
            second_moment: mean + mean * mean,
            cutoff,
            pmf_table: None,
            cdf_table: None,
        })
    }

    /// Thermal (Bose–Einstein) pair source: P(k) = N^k / (1+N)^(k+1).
    pub fn thermal(mean: f64) -> Result<Self> {
        validate_mean(mean)?;
        let cutoff = if mean == 0.0 {
            0
        } else {
            // Geometric tail: q^(K+1) < THERMAL_TAIL_MASS with q = N/(1+N).
            (THERMAL_TAIL_MASS.ln() / (mean / (1.0 + mean)).ln()).ceil() as u64
        };
        Ok(Self {
            kind: SourceKind::Thermal,
            mean,
            second_moment: mean + 2.0 * mean * mean,
            cutoff,
            pmf_table: None,
            cdf_table: None,
        })
    }

    /// Custom pair source from an explicit finite pmf table (index = k).
    pub fn custom(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::Parameter("custom pmf table is empty".into()));
        }
        if let Some(p) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Parameter(format!(
                "custom pmf entries must be finite and non-negative, got {p}"
            )));
        }
        let mut total = KahanSum::new();
        let mut mean = KahanSum::new();
        let mut second = KahanSum::new();
        let mut cdf = Vec::with_capacity(pmf.len());
        for (k, &p) in pmf.iter().enumerate() {
            let kf = k as f64;
            total.add(p);
            mean.add(kf * p);
            second.add(kf * kf * p);
            cdf.push(total.value());
        }
        let total = total.value();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Parameter(format!(
                "custom pmf table sums to {total}, expected 1 within {NORMALIZATION_TOL}"
            )));
        }
        Ok(Self {
            kind: SourceKind::Custom,
            mean: mean.value(),
            second_moment: second.value(),
            cutoff: (pmf.len() - 1) as u64,
            pmf_table: Some(pmf),
            cdf_table: Some(cdf),
        })
    }

    /// Override the truncation cutoff used for summed evaluations.
    ///
    /// For custom tables the cutoff must not drop tail mass above
    /// [`TAIL_MASS`]; parametric families accept any cutoff and callers
    /// take responsibility for the truncation error.
    pub fn with_cutoff(mut self, cutoff: u64) -> Result<Self> {
        if let Some(pmf) = &self.pmf_table {
            let dropped: f64 = pmf.iter().skip(cutoff as usize + 1).sum();
            if dropped > TAIL_MASS {
                return Err(Error::Truncation(format!(
                    "cutoff {cutoff} drops tail mass {dropped:.3e} from the custom table"
                )));
            }
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    /// Mean pair number N per sample window.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Truncation cutoff K_max for summed evaluations.
    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    /// Exact (⟨k⟩, ⟨k²⟩): closed form for Poisson/thermal, summed for custom.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean, self.second_moment)
    }

    /// Probability of exactly `k` pairs in one sample window.
    pub fn pmf(&self, k: u64) -> f64 {
        match self.kind {
            SourceKind::Poisson => {
                if self.mean == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                (k as f64 * self.mean.ln() - self.mean - ln_factorial(k)).exp()
            }
            SourceKind::Thermal => {
                if self.mean == 0.0 {
                    return if k == 0 { 1.0 } else { 0.0 };
                }
                let q = self.mean / (1.0 + self.mean);
                (k as f64 * q.ln()).exp() / (1.0 + self.mean)
            }
            SourceKind::Custom => self
                .pmf_table
                .as_ref()
                .and_then(|t| t.get(k as usize).copied())
                .unwrap_or(0.0),
        }
    }

    /// pmf values for k = 0..=cutoff, for summed evaluations.
    pub fn pmf_slice(&self) -> Vec<f64> {
        (0..=self.cutoff).map(|k| self.pmf(k)).collect()
    }

    /// Draw a pair number. Identical generator state and parameters give
    /// identical draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.kind {
            SourceKind::Poisson => sample_poisson(self.mean, rng),
            SourceKind::Thermal => sample_thermal(self.mean, rng),
            SourceKind::Custom => {
                let cdf = self.cdf_table.as_ref().expect("custom source has a cdf");
                let u: f64 = rng.random();
                let idx = cdf.partition_point(|&c| c <= u);
                idx.min(cdf.len() - 1) as u64
            }
        }
    }
}

fn validate_mean(mean: f64) -> Result<()> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::Parameter(format!(
            "mean pair number must be finite and >= 0, got {mean}"
        )));
    }
    Ok(())
}

/// Exact Poisson sampling by CDF inversion; walks outward from the mode for
/// large means so the expected cost is O(√λ). Also used for background
/// draws in the detector model.
pub(crate) fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    if lambda < 30.0 {
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p == 0.0 {
                break;
            }
        }
        return k;
    }

    let mode = lambda.floor();
    let p_mode = (mode * lambda.ln() - lambda - ln_factorial(mode as u64)).exp();
    let mut cdf = p_mode;
    if u <= cdf {
        return mode as u64;
    }
    let mut left = p_mode;
    let mut right = p_mode;
    let mut step = 1u64;
    loop {
        let lower = mode as i64 - step as i64;
        if lower >= 0 {
            // p(k-1) = p(k) * k / λ
            left *= (lower + 1) as f64 / lambda;
            cdf += left;
            if u <= cdf {
                return lower as u64;
            }
        } else {
            left = 0.0;
        }
        // p(k+1) = p(k) * λ / (k+1)
        right *= lambda / (mode + step as f64);
        cdf += right;
        if u <= cdf {
            return mode as u64 + step;
        }
        if left == 0.0 && right == 0.0 {
            return mode as u64 + step;
        }
        step += 1;
    }
}

/// Exact geometric inversion for the thermal law.
fn sample_thermal<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    let q = mean / (1.0 + mean);
    let u: f64 = rng.random();
    ((1.0 - u).ln() / q.ln()).floor() as u64
}
