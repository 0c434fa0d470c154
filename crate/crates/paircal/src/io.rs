//! File formats: counts/background CSV, pmf tables and JSON reports.
//!
//! Counts files are self-describing: `#`-prefixed metadata lines (seed,
//! parameters) precede the column header, one sample window per row.
//! Signal runs use the header `l_M,m_M[,c]`; source-blocked background
//! runs use `l_B,m_B`. All writes are atomic (temp file then rename).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::CountRecord;
use crate::error::{Error, Result};
use crate::estimators::EfficiencyEstimate;
use crate::moments::MomentSet;

/// Which kind of run a counts file records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountsKind {
    /// Signal run, header `l_M,m_M` or `l_M,m_M,c`.
    Counts,
    /// Source-blocked background run, header `l_B,m_B`.
    Background,
}

/// Parsed counts file.
#[derive(Debug, Clone)]
pub struct CountsFile {
    pub kind: CountsKind,
    pub records: Vec<CountRecord>,
    /// Metadata comment lines, `#` prefix stripped.
    pub metadata: Vec<String>,
}

/// Render a counts (or background) file.
///
/// `with_coincidence` selects the three-column header; records must carry
/// their `c` counts when it is set (a record without one falls back to two
/// fields, which the reader then rejects against the header).
pub fn render_counts_csv(
    kind: CountsKind,
    metadata: &[String],
    records: &[CountRecord],
    with_coincidence: bool,
) -> String {
    let mut out = String::new();
    for line in metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    match kind {
        CountsKind::Counts if with_coincidence => out.push_str("l_M,m_M,c\n"),
        CountsKind::Counts => out.push_str("l_M,m_M\n"),
        CountsKind::Background => out.push_str("l_B,m_B\n"),
    }
    for rec in records {
        match (kind, with_coincidence, rec.c) {
            (CountsKind::Counts, true, Some(c)) => {
                out.push_str(&format!("{},{},{}\n", rec.l, rec.m, c))
            }
            _ => out.push_str(&format!("{},{}\n", rec.l, rec.m)),
        }
    }
    out
}

/// Parse a counts or background file, reporting malformed rows with their
/// 1-based line number.
pub fn read_counts_csv(path: &Path) -> Result<CountsFile> {
    let text = fs::read_to_string(path)?;
    parse_counts_csv(&text, &path.display().to_string())
}

pub fn parse_counts_csv(text: &str, path_label: &str) -> Result<CountsFile> {
    let mut metadata = Vec::new();
    let mut header: Option<(CountsKind, bool)> = None;
    let mut records = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            metadata.push(comment.trim().to_string());
            continue;
        }
        match header {
            None => {
                header = Some(match line {
                    "l_M,m_M,c" => (CountsKind::Counts, true),
                    "l_M,m_M" => (CountsKind::Counts, false),
                    "l_B,m_B" => (CountsKind::Background, false),
                    other => {
                        return Err(Error::Parse {
                            path: path_label.to_string(),
                            line: line_no,
                            message: format!(
                                "unrecognized header '{other}' (expected l_M,m_M[,c] or l_B,m_B)"
                            ),
                        })
                    }
                });
            }
            Some((_, with_c)) => {
                let fields: Vec<&str> = line.split(',').collect();
                let expected = if with_c { 3 } else { 2 };
                if fields.len() != expected {
                    return Err(Error::Parse {
                        path: path_label.to_string(),
                        line: line_no,
                        message: format!("expected {expected} fields, found {}", fields.len()),
                    });
                }
                let parse = |field: &str| -> Result<u64> {
                    field.trim().parse::<u64>().map_err(|e| Error::Parse {
                        path: path_label.to_string(),
                        line: line_no,
                        message: format!("invalid count '{field}': {e}"),
                    })
                };
                records.push(CountRecord {
                    l: parse(fields[0])?,
                    m: parse(fields[1])?,
                    c: if with_c {
                        Some(parse(fields[2])?)
                    } else {
                        None
                    },
                });
            }
        }
    }
    let (kind, _) = header.ok_or_else(|| Error::Parse {
        path: path_label.to_string(),
        line: text.lines().count().max(1),
        message: "missing column header".to_string(),
    })?;
    Ok(CountsFile {
        kind,
        records,
        metadata,
    })
}

/// Read a custom pmf table: one probability per line (index = k), `#`
/// comments and blank lines allowed.
pub fn read_pmf_file(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let label = path.display().to_string();
    let mut pmf = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: f64 = line.parse().map_err(|e| Error::Parse {
            path: label.clone(),
            line: idx + 1,
            message: format!("invalid probability '{line}': {e}"),
        })?;
        pmf.push(value);
    }
    if pmf.is_empty() {
        return Err(Error::Parse {
            path: label,
            line: 1,
            message: "pmf file contains no probabilities".to_string(),
        });
    }
    Ok(pmf)
}

/// Variance-curve CSV: comment header recording method, η₂ mode, mean pair
/// number and sample size, then `eta1,variance` rows.
pub fn render_curve_csv(metadata: &[String], points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for line in metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("eta1,variance\n");
    for (eta1, variance) in points {
        out.push_str(&format!("{eta1},{variance}\n"));
    }
    out
}

/// Estimation report written by `paircal estimate`.
///
/// Includes the full moment set the estimators consumed so every η̂ can be
/// re-derived by hand from the report alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema: String,
    pub counts: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub background: Option<String>,
    pub sample_size: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub background_sample_size: Option<u64>,
    pub background_corrected: bool,
    pub moments: MomentSet,
    /// Measured (uncorrected) moments, present when a background run was
    /// subtracted.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub raw_moments: Option<MomentSet>,
    pub estimates: Vec<EfficiencyEstimate>,
}

pub const ESTIMATE_SCHEMA: &str = "paircal.report/1";
pub const ORACLE_SCHEMA: &str = "paircal.oracle/1";

/// Exact-moment report written by `paircal oracle`; the embedded
/// [`MomentSet`] (per-window convention, sample_size = 1) can be fed back
/// to `paircal estimate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema: String,
    pub dist: String,
    pub mean_pairs: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub moments: MomentSet,
}

/// Load a moment set from JSON: accepts either a bare [`MomentSet`] or an
/// [`OracleReport`] wrapper.
pub fn read_moments_json(path: &Path) -> Result<MomentSet> {
    let text = fs::read_to_string(path)?;
    let label = path.display().to_string();
    let moments = if let Ok(report) = serde_json::from_str::<OracleReport>(&text) {
        report.moments
    } else {
        serde_json::from_str::<MomentSet>(&text).map_err(|e| Error::Parse {
            path: label.clone(),
            line: e.line(),
            message: format!("not a moment-set or oracle-report JSON: {e}"),
        })?
    };
    moments.validate()?;
    Ok(moments)
}

/// Write `contents`, replacing `path` atomically (temp file then rename).
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_round_trip() {
        let records = vec![
            CountRecord {
                l: 3,
                m: 1,
                c: Some(1),
            },
            CountRecord {
                l: 0,
                m: 2,
                c: Some(0),
            },
        ];
        let text = render_counts_csv(CountsKind::Counts, &["seed=42".to_string()], &records, true);
        let parsed = parse_counts_csv(&text, "test").unwrap();
        assert_eq!(parsed.kind, CountsKind::Counts);
        assert_eq!(parsed.records, records);
        assert_eq!(parsed.metadata, vec!["seed=42".to_string()]);
    }

    #[test]
    fn background_header() {
        let text = "# bg run\nl_B,m_B\n1,0\n";
        let parsed = parse_counts_csv(text, "bg").unwrap();
        assert_eq!(parsed.kind, CountsKind::Background);
        assert_eq!(parsed.records[0].c, None);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "l_M,m_M\n1,2\nx,3\n";
        match parse_counts_csv(text, "bad") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_rejected() {
        let text = "l_M,m_M,c\n1,2\n";
        assert!(matches!(
            parse_counts_csv(text, "bad"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn header_only_file_is_empty_but_valid() {
        let parsed = parse_counts_csv("# empty\nl_M,m_M\n", "empty").unwrap();
        assert!(parsed.records.is_empty());
    }

    #[test]
    fn missing_header_rejected() {
        assert!(matches!(
            parse_counts_csv("# only comments\n", "x"),
            Err(Error::Parse { .. })
        ));
    }
}
