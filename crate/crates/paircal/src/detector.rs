//! Lossy detection as binomial thinning, plus additive background.
//!
//! Each arm detects every photon independently with probability η, so the
//! detected count out of k photons is Binomial(k, η). Background counts are
//! drawn independently of the signal (Poissonian by default) and added to
//! the measured singles. Coincidences are built by thinning the arm-1
//! detected count a second time with the arm-2 efficiency; background never
//! contributes to coincidences.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::ln_factorial;
use crate::rng;
use crate::source::{sample_poisson, PairDistribution};

/// One detection arm: efficiency plus mean background per sample window.
#[derive(Debug, Clone, Copy)]
pub struct DetectorChannel {
    efficiency: f64,
    background_mean: f64,
}

impl DetectorChannel {
    pub fn new(efficiency: f64, background_mean: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) || !efficiency.is_finite() {
            return Err(Error::Parameter(format!(
                "efficiency must lie in [0, 1], got {efficiency}"
            )));
        }
        if !background_mean.is_finite() || background_mean < 0.0 {
            return Err(Error::Parameter(format!(
                "background mean must be finite and >= 0, got {background_mean}"
            )));
        }
        Ok(Self {
            efficiency,
            background_mean,
        })
    }

    /// Noise-free channel with the given efficiency.
    pub fn noiseless(efficiency: f64) -> Result<Self> {
        Self::new(efficiency, 0.0)
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn background_mean(&self) -> f64 {
        self.background_mean
    }
}

/// Measured counts for one sample window: the two singles (signal plus
/// background) and, when recorded, the coincidence count.
///
/// Coincidences are generated by thinning the arm-1 detected count with the
/// arm-2 efficiency, so without background c ≤ l holds pathwise (c and m
/// are conditionally independent given the pair number, which is what the
/// closed-form error analysis assumes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRecord {
    /// Arm-1 measured singles count.
    pub l: u64,
    /// Arm-2 measured singles count.
    pub m: u64,
    /// Coincidence count, when the record carries one.
    pub c: Option<u64>,
}

/// Full decomposition of one simulated window, mostly useful in tests and
/// diagnostics where the signal/background split must be visible.
#[derive(Debug, Clone, Copy)]
pub struct RecordParts {
    pub pairs: u64,
    pub signal_l: u64,
    pub signal_m: u64,
    pub background_l: u64,
    pub background_m: u64,
    pub coincidence: Option<u64>,
}

impl RecordParts {
    pub fn record(&self) -> CountRecord {
        CountRecord {
            l: self.signal_l + self.background_l,
            m: self.signal_m + self.background_m,
            c: self.coincidence,
        }
    }
}

/// Binomial thinning: number of survivors when each of `k` photons is kept
/// with probability `eta`.
pub fn thin<R: Rng + ?Sized>(k: u64, eta: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::Parameter(format!(
            "thinning probability must lie in [0, 1], got {eta}"
        )));
    }
    Ok(sample_binomial(k, eta, rng))
}

/// First and second moments of a binomially thinned count, given the exact
/// moments (⟨k⟩, ⟨k²⟩) of the underlying pair number:
/// ⟨l⟩ = η⟨k⟩ and ⟨l²⟩ = η⟨k⟩ − η²⟨k⟩ + η²⟨k²⟩.
pub fn binomial_arm_moments(dist_moments: (f64, f64), eta: f64) -> (f64, f64) {
    let (m1, m2) = dist_moments;
    (eta * m1, eta * m1 - eta * eta * m1 + eta * eta * m2)
}

/// Simulate one sample window.
///
/// Draw order is fixed (pairs, arm-1 thinning, arm-2 thinning, coincidence
/// thinning if requested, arm-1 background, arm-2 background) so a given
/// generator state always produces the same record.
pub fn simulate_record<R: Rng + ?Sized>(
    dist: &PairDistribution,
    ch1: &DetectorChannel,
    ch2: &DetectorChannel,
    rng: &mut R,
    with_coincidence: bool,
) -> CountRecord {
    simulate_record_parts(dist, ch1, ch2, rng, with_coincidence).record()
}

/// As [`simulate_record`], but keeps the signal/background decomposition.
pub fn simulate_record_parts<R: Rng + ?Sized>(
    dist: &PairDistribution,
    ch1: &DetectorChannel,
    ch2: &DetectorChannel,
    rng: &mut R,
    with_coincidence: bool,
) -> RecordParts {
    let pairs = dist.sample(rng);
    let signal_l = sample_binomial(pairs, ch1.efficiency, rng);
    let signal_m = sample_binomial(pairs, ch2.efficiency, rng);
    // Coincidences: thin the arm-1 detected count with the arm-2 efficiency.
    let coincidence = with_coincidence.then(|| sample_binomial(signal_l, ch2.efficiency, rng));
    let background_l = sample_poisson(ch1.background_mean, rng);
    let background_m = sample_poisson(ch2.background_mean, rng);
    RecordParts {
        pairs,
        signal_l,
        signal_m,
        background_l,
        background_m,
        coincidence,
    }
}

/// Simulate `count` windows in parallel.
///
/// Window `i` draws from its own generator derived from `(master_seed, i)`,
/// so the output is independent of the worker count and byte-identical for
/// a fixed seed.
pub fn simulate_records(
    dist: &PairDistribution,
    ch1: &DetectorChannel,
    ch2: &DetectorChannel,
    master_seed: u64,
    count: u64,
    with_coincidence: bool,
) -> Vec<CountRecord> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream_rng(master_seed, i);
            simulate_record(dist, ch1, ch2, &mut rng, with_coincidence)
        })
        .collect()
}

/// Exact binomial sampling. Bernoulli trials for small k; CDF inversion
/// walking outward from the mode for large k (expected O(√(kpq)) steps).
fn sample_binomial<R: Rng + ?Sized>(k: u64, p: f64, rng: &mut R) -> u64 {
    if k == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return k;
    }
    if k <= 64 {
        let mut hits = 0u64;
        for _ in 0..k {
            if rng.random::<f64>() < p {
                hits += 1;
            }
        }
        return hits;
    }

    let kf = k as f64;
    let mode = ((kf + 1.0) * p).floor().min(kf);
    let ln_pmf_mode = ln_factorial(k) - ln_factorial(mode as u64) - ln_factorial(k - mode as u64)
        + mode * p.ln()
        + (kf - mode) * (1.0 - p).ln();
    let p_mode = ln_pmf_mode.exp();
    let odds = p / (1.0 - p);
    let u: f64 = rng.random();
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
            // p(l-1) = p(l) * l / ((k-l+1) * odds)
            let l = (lower + 1) as f64;
            left *= l / ((kf - l + 1.0) * odds);
            cdf += left;
            if u <= cdf {
                return lower as u64;
            }
        } else {
            left = 0.0;
        }
        let upper = mode as u64 + step;
        if upper <= k {
            // p(l+1) = p(l) * (k-l) * odds / (l+1)
            let l = (upper - 1) as f64;
            right *= (kf - l) * odds / (l + 1.0);
            cdf += right;
            if u <= cdf {
                return upper;
            }
        } else {
            right = 0.0;
        }
        if left == 0.0 && right == 0.0 {
            return mode as u64;
        }
        step += 1;
    }
}
