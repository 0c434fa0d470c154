//! Per-window statistics and their sample (or exact) moments.
//!
//! A [`MomentSet`] carries the means of every statistic the estimators
//! consume — ⟨l⟩, ⟨m⟩, ⟨l²⟩, ⟨m²⟩, ⟨lm⟩, ⟨(l−m)²⟩ and, when coincidences
//! were recorded, ⟨c⟩ and ⟨c²⟩ — together with the per-window covariances
//! among those statistics needed for error propagation. Covariances of the
//! *sample means* follow the 1/M convention: σ_⟨u⟩⟨v⟩ = cov(u, v)/M.

use serde::{Deserialize, Serialize};

use crate::detector::CountRecord;
use crate::error::{Error, Result};

/// Statistics tracked per sample window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    L,
    M,
    L2,
    M2,
    Lm,
    Diff2,
    C,
}

impl Stat {
    pub const WITHOUT_C: [Stat; 6] = [Stat::L, Stat::M, Stat::L2, Stat::M2, Stat::Lm, Stat::Diff2];
    pub const WITH_C: [Stat; 7] = [
        Stat::L,
        Stat::M,
        Stat::L2,
        Stat::M2,
        Stat::Lm,
        Stat::Diff2,
        Stat::C,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stat::L => "l",
            Stat::M => "m",
            Stat::L2 => "l2",
            Stat::M2 => "m2",
            Stat::Lm => "lm",
            Stat::Diff2 => "diff2",
            Stat::C => "c",
        }
    }
}

/// Symmetric per-window covariance table cov(u, v) = ⟨uv⟩ − ⟨u⟩⟨v⟩ over a
/// statistic basis. Values are *unscaled*; divide by the sample size M to
/// obtain covariances of sample means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceTable {
    stats: Vec<Stat>,
    /// Row-major symmetric matrix, same order as `stats`.
    matrix: Vec<Vec<f64>>,
}

impl CovarianceTable {
    pub fn new(stats: Vec<Stat>, matrix: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(stats.len(), matrix.len());
        Self { stats, matrix }
    }

    pub fn stats(&self) -> &[Stat] {
        &self.stats
    }

    fn index(&self, stat: Stat) -> Option<usize> {
        self.stats.iter().position(|&s| s == stat)
    }

    /// Per-window covariance cov(u, v).
    pub fn cov(&self, u: Stat, v: Stat) -> Option<f64> {
        let (i, j) = (self.index(u)?, self.index(v)?);
        Some(self.matrix[i][j])
    }

    /// Covariance of the sample means, σ_⟨u⟩⟨v⟩ = cov(u, v)/M.
    pub fn cov_of_means(&self, u: Stat, v: Stat, sample_size: u64) -> Option<f64> {
        Some(self.cov(u, v)? / sample_size as f64)
    }
}

/// Means of the tracked statistics plus the sample size they came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean_l: f64,
    pub mean_m: f64,
    pub mean_l2: f64,
    pub mean_m2: f64,
    pub mean_lm: f64,
    /// ⟨(l−m)²⟩, accumulated directly from the data rather than through the
    /// algebraic identity, so the identity can serve as a self-check.
    pub mean_diff2: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_c2: Option<f64>,
    pub sample_size: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub covariances: Option<CovarianceTable>,
    /// Provenance: true once background subtraction has been applied.
    #[serde(default)]
    pub background_corrected: bool,
}

impl MomentSet {
    /// Mean of one tracked statistic.
    pub fn mean(&self, stat: Stat) -> Option<f64> {
        match stat {
            Stat::L => Some(self.mean_l),
            Stat::M => Some(self.mean_m),
            Stat::L2 => Some(self.mean_l2),
            Stat::M2 => Some(self.mean_m2),
            Stat::Lm => Some(self.mean_lm),
            Stat::Diff2 => Some(self.mean_diff2),
            Stat::C => self.mean_c,
        }
    }

    pub fn has_coincidences(&self) -> bool {
        self.mean_c.is_some()
    }

    /// Structural checks for moment sets read from external files:
    /// non-negative singles variances and the ⟨(l−m)²⟩ identity.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        let var_l = self.mean_l2 - self.mean_l * self.mean_l;
        let var_m = self.mean_m2 - self.mean_m * self.mean_m;
        if var_l < -tol * self.mean_l2.abs().max(1.0) {
            return Err(Error::Parameter(format!(
                "negative arm-1 variance: ⟨l²⟩ = {}, ⟨l⟩² = {}",
                self.mean_l2,
                self.mean_l * self.mean_l
            )));
        }
        if var_m < -tol * self.mean_m2.abs().max(1.0) {
            return Err(Error::Parameter(format!(
                "negative arm-2 variance: ⟨m²⟩ = {}, ⟨m⟩² = {}",
                self.mean_m2,
                self.mean_m * self.mean_m
            )));
        }
        let identity = self.mean_l2 + self.mean_m2 - 2.0 * self.mean_lm;
        let scale = self.mean_l2.abs().max(self.mean_m2.abs()).max(1.0);
        if (identity - self.mean_diff2).abs() > 1e-9 * scale {
            return Err(Error::Parameter(format!(
                "⟨(l−m)²⟩ = {} violates ⟨l²⟩+⟨m²⟩−2⟨lm⟩ = {identity}",
                self.mean_diff2
            )));
        }
        Ok(())
    }
}

/// Streaming accumulator over count records. Partial accumulators merge
/// exactly (plain sums of integer-valued statistics), so record streams can
/// be reduced in parallel in any grouping.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    count: u64,
    with_c: bool,
    sums: [f64; 7],
    cross: [[f64; 7]; 7],
}

impl MomentAccumulator {
    pub fn new(with_c: bool) -> Self {
        Self {
            count: 0,
            with_c,
            sums: [0.0; 7],
            cross: [[0.0; 7]; 7],
        }
    }

    fn stat_values(record: &CountRecord, with_c: bool) -> Result<[f64; 7]> {
        let l = record.l as f64;
        let m = record.m as f64;
        let c = match (with_c, record.c) {
            (true, Some(c)) => c as f64,
            (true, None) => {
                return Err(Error::MethodUnavailable(
                    "record stream mixes windows with and without coincidence counts".into(),
                ))
            }
            (false, _) => 0.0,
        };
        let d = l - m;
        Ok([l, m, l * l, m * m, l * m, d * d, c])
    }

    pub fn push(&mut self, record: &CountRecord) -> Result<()> {
        let vals = Self::stat_values(record, self.with_c)?;
        let n = if self.with_c { 7 } else { 6 };
        for i in 0..n {
            self.sums[i] += vals[i];
            for j in i..n {
                self.cross[i][j] += vals[i] * vals[j];
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Self {
        debug_assert_eq!(self.with_c, other.with_c);
        self.count += other.count;
        for i in 0..7 {
            self.sums[i] += other.sums[i];
            for j in 0..7 {
                self.cross[i][j] += other.cross[i][j];
            }
        }
        self
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Finish into a [`MomentSet`] with the full covariance table.
    pub fn finish(self) -> Result<MomentSet> {
        if self.count < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 records to form sample moments, got {}",
                self.count
            )));
        }
        let n = self.count as f64;
        let dim = if self.with_c { 7 } else { 6 };
        let means: Vec<f64> = self.sums[..dim].iter().map(|s| s / n).collect();
        let mut matrix = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in i..dim {
                let cov = self.cross[i][j] / n - means[i] * means[j];
                matrix[i][j] = cov;
                matrix[j][i] = cov;
            }
        }
        let stats = if self.with_c {
            Stat::WITH_C.to_vec()
        } else {
            Stat::WITHOUT_C.to_vec()
        };
        Ok(MomentSet {
            mean_l: means[0],
            mean_m: means[1],
            mean_l2: means[2],
            mean_m2: means[3],
            mean_lm: means[4],
            mean_diff2: means[5],
            mean_c: self.with_c.then(|| means[6]),
            mean_c2: self.with_c.then(|| self.cross[6][6] / n),
            sample_size: self.count,
            covariances: Some(CovarianceTable::new(stats, matrix)),
            background_corrected: false,
        })
    }
}

/// Sample moments (1/M covariance convention) of a record sequence.
///
/// Coincidence statistics are tracked when every record carries a `c`
/// count; a mixed stream is rejected.
pub fn sample_moments(records: &[CountRecord]) -> Result<MomentSet> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records to form sample moments, got {}",
            records.len()
        )));
    }
    let with_c = records[0].c.is_some();
    let mut acc = MomentAccumulator::new(with_c);
    for record in records {
        if !with_c && record.c.is_some() {
            return Err(Error::MethodUnavailable(
                "record stream mixes windows with and without coincidence counts".into(),
            ));
        }
        acc.push(record)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rec(l: u64, m: u64) -> CountRecord {
        CountRecord { l, m, c: None }
    }

    #[test]
    fn identical_records() {
        let mom = sample_moments(&[rec(1, 1), rec(1, 1)]).unwrap();
        assert_eq!(mom.mean_l, 1.0);
        assert_eq!(mom.mean_m, 1.0);
        assert_eq!(mom.mean_diff2, 0.0);
        assert_eq!(mom.sample_size, 2);
    }

    #[test]
    fn anticorrelated_records() {
        let mom = sample_moments(&[rec(2, 0), rec(0, 2)]).unwrap();
        assert_eq!(mom.mean_lm, 0.0);
        assert_eq!(mom.mean_diff2, 4.0);
        mom.validate().unwrap();
    }

    #[test]
    fn diff2_identity_holds_exactly() {
        let records: Vec<CountRecord> = (0..1000)
            .map(|i| rec((i * 7919) % 23, (i * 104729) % 17))
            .collect();
        let mom = sample_moments(&records).unwrap();
        // Integer-valued sums are exact in f64; only the final divisions by
        // M round, so the identity holds to round-off.
        assert_relative_eq!(
            mom.mean_diff2,
            mom.mean_l2 + mom.mean_m2 - 2.0 * mom.mean_lm,
            max_relative = 1e-13
        );
    }

    #[test]
    fn too_few_records() {
        assert!(sample_moments(&[]).is_err());
        assert!(sample_moments(&[rec(1, 1)]).is_err());
    }

    #[test]
    fn mixed_coincidence_stream_rejected() {
        let with_c = CountRecord {
            l: 1,
            m: 1,
            c: Some(1),
        };
        assert!(sample_moments(&[with_c, rec(1, 1)]).is_err());
    }

    #[test]
    fn merge_equals_sequential() {
        let records: Vec<CountRecord> = (0..101)
            .map(|i| CountRecord {
                l: (i * 3) % 7,
                m: (i * 5) % 11,
                c: Some((i * 2) % 5),
            })
            .collect();
        let mut whole = MomentAccumulator::new(true);
        for r in &records {
            whole.push(r).unwrap();
        }
        let mut left = MomentAccumulator::new(true);
        let mut right = MomentAccumulator::new(true);
        for r in &records[..40] {
            left.push(r).unwrap();
        }
        for r in &records[40..] {
            right.push(r).unwrap();
        }
        let merged = left.merge(right).finish().unwrap();
        let whole = whole.finish().unwrap();
        assert_eq!(whole.mean_lm, merged.mean_lm);
        assert_eq!(whole.mean_c2, merged.mean_c2);
        assert_eq!(
            whole.covariances.as_ref().unwrap().cov(Stat::L, Stat::C),
            merged.covariances.as_ref().unwrap().cov(Stat::L, Stat::C)
        );
    }

    #[test]
    fn covariance_matches_direct_computation() {
        let records = [rec(2, 0), rec(0, 2), rec(1, 1), rec(3, 1)];
        let mom = sample_moments(&records).unwrap();
        let mean_l = 6.0 / 4.0;
        let mean_m = 1.0;
        let mean_lm: f64 = (0.0 + 0.0 + 1.0 + 3.0) / 4.0;
        assert_relative_eq!(mom.mean_l, mean_l);
        let cov = mom.covariances.as_ref().unwrap();
        assert_relative_eq!(
            cov.cov(Stat::L, Stat::M).unwrap(),
            mean_lm - mean_l * mean_m,
            max_relative = 1e-14
        );
        // 1/M convention for means.
        assert_relative_eq!(
            cov.cov_of_means(Stat::L, Stat::M, 4).unwrap(),
            (mean_lm - mean_l * mean_m) / 4.0,
            max_relative = 1e-14
        );
    }
}
