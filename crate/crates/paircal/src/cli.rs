//! Command implementations behind the `paircal` binary.
//!
//! Four subcommands tie the toolkit together: `simulate` writes count
//! records, `estimate` turns counts (plus an optional background run) into
//! a JSON report, `variance-curve` emits variance-versus-η₁ series and
//! `oracle` dumps exact moments. Every command is a deterministic function
//! of its arguments, the seed and its input files.
//!
//! Exit codes: 0 success, 2 parameter error, 3 data error, 4 requested
//! method unavailable.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::detector::{simulate_records, DetectorChannel};
use crate::error::{Error, Result};
use crate::error_model::{
    self, delta_variance_from_moments, delta_variance_from_moments_arm2, Eta2Mode, PairRegime,
};
use crate::estimators::{self, EfficiencyEstimate, Method};
use crate::io::{self, CountsKind};
use crate::moments::{sample_moments, MomentSet};
use crate::oracle;
use crate::source::PairDistribution;

#[derive(Debug, Parser)]
#[command(
    name = "paircal",
    version,
    about = "Detector efficiency calibration from photon-pair counting statistics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate count records for a pair source viewed by two detectors.
    Simulate(SimulateArgs),
    /// Estimate detection efficiencies from a counts file.
    Estimate(EstimateArgs),
    /// Emit a variance-versus-eta1 series for the product or difference method.
    VarianceCurve(CurveArgs),
    /// Emit exact moments and covariances for a source/detector configuration.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Poisson,
    Thermal,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Product,
    Difference,
    EqualDifference,
    Coincidence,
    All,
}

impl MethodArg {
    fn single(self) -> Option<Method> {
        match self {
            MethodArg::Product => Some(Method::Product),
            MethodArg::Difference => Some(Method::Difference),
            MethodArg::EqualDifference => Some(Method::EqualDifference),
            MethodArg::Coincidence => Some(Method::Coincidence),
            MethodArg::All => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Pair-number distribution of the source.
    #[arg(long, value_enum, default_value = "poisson")]
    pub dist: DistArg,
    /// Mean pair number N per sample window.
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    /// pmf table file for --dist custom (one probability per line).
    #[arg(long)]
    pub pmf_file: Option<PathBuf>,
    /// Arm-1 detection efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta1: f64,
    /// Arm-2 detection efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta2: f64,
    /// Arm-1 mean background counts per window.
    #[arg(long, default_value_t = 0.0)]
    pub bg1: f64,
    /// Arm-2 mean background counts per window.
    #[arg(long, default_value_t = 0.0)]
    pub bg2: f64,
    /// Number of sample windows to simulate.
    #[arg(long)]
    pub samples: u64,
    /// Master seed (mandatory: outputs must be reproducible).
    #[arg(long)]
    pub seed: u64,
    /// Record coincidence counts alongside the singles.
    #[arg(long, default_value_t = false)]
    pub coincidence: bool,
    /// Block the pair source: emit a background-only run (header l_B,m_B).
    #[arg(long, default_value_t = false)]
    pub source_blocked: bool,
    /// Output counts file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output format (counts files are CSV only).
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Counts file (CSV from `simulate`, or a moment-set JSON from `oracle`).
    #[arg(long)]
    pub counts: PathBuf,
    /// Source-blocked background counts file to subtract.
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Estimation method to run.
    #[arg(long, value_enum, default_value = "all")]
    pub method: MethodArg,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Method: product or difference.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Fixed arm-2 efficiency for the sweep.
    #[arg(long, conflicts_with = "equal")]
    pub eta2: Option<f64>,
    /// Sweep with equal efficiencies (eta2 = eta1).
    #[arg(long, default_value_t = false)]
    pub equal: bool,
    /// Mean pair number N (finite-N closed forms).
    #[arg(long, conflicts_with = "limit")]
    pub mean: Option<f64>,
    /// Evaluate the analytic large-N limit instead of a finite mean.
    #[arg(long, default_value_t = false)]
    pub limit: bool,
    /// Sample size M (variances scale as 1/M).
    #[arg(long, default_value_t = 1)]
    pub samples: u64,
    /// eta1 grid: either "start:stop:count" or a comma-separated list.
    #[arg(long, default_value = "0.05:1.0:20")]
    pub grid: String,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Pair-number distribution of the source.
    #[arg(long, value_enum, default_value = "poisson")]
    pub dist: DistArg,
    /// Mean pair number N per sample window.
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    /// pmf table file for --dist custom.
    #[arg(long)]
    pub pmf_file: Option<PathBuf>,
    /// Arm-1 detection efficiency.
    #[arg(long)]
    pub eta1: f64,
    /// Arm-2 detection efficiency.
    #[arg(long)]
    pub eta2: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

/// Run a parsed command, returning its process exit code.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => {
            let content = cmd_simulate(args)?;
            io::atomic_write(&args.out, &content)
        }
        Command::Estimate(args) => {
            let content = cmd_estimate(args)?;
            emit(args.out.as_deref(), &content)
        }
        Command::VarianceCurve(args) => {
            let content = cmd_variance_curve(args)?;
            emit(args.out.as_deref(), &content)
        }
        Command::Oracle(args) => {
            let content = cmd_oracle(args)?;
            emit(args.out.as_deref(), &content)
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => io::atomic_write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn build_distribution(
    dist: DistArg,
    mean: f64,
    pmf_file: Option<&Path>,
) -> Result<PairDistribution> {
    match dist {
        DistArg::Poisson => PairDistribution::poisson(mean),
        DistArg::Thermal => PairDistribution::thermal(mean),
        DistArg::Custom => {
            let path = pmf_file
                .ok_or_else(|| Error::Parameter("--dist custom requires --pmf-file".into()))?;
            PairDistribution::custom(io::read_pmf_file(path)?)
        }
    }
}

/// Render the counts file for a simulation run (validation first, then
/// sampling; byte-identical output for identical arguments).
pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    if args.format == FormatArg::Json {
        return Err(Error::Parameter(
            "simulate writes CSV count records; --format json is not supported".into(),
        ));
    }
    let dist = build_distribution(args.dist, args.mean, args.pmf_file.as_deref())?;
    let ch1 = DetectorChannel::new(args.eta1, args.bg1)?;
    let ch2 = DetectorChannel::new(args.eta2, args.bg2)?;

    if args.source_blocked {
        let vacuum = PairDistribution::poisson(0.0)?;
        let records = simulate_records(&vacuum, &ch1, &ch2, args.seed, args.samples, false);
        let metadata = vec![
            "paircal background v1".to_string(),
            format!("seed={}", args.seed),
            format!("bg1={} bg2={}", args.bg1, args.bg2),
            format!("samples={}", args.samples),
        ];
        return Ok(io::render_counts_csv(
            CountsKind::Background,
            &metadata,
            &records,
            false,
        ));
    }

    let records = simulate_records(&dist, &ch1, &ch2, args.seed, args.samples, args.coincidence);
    let dist_label = match args.dist {
        DistArg::Poisson => format!("dist=poisson mean={}", args.mean),
        DistArg::Thermal => format!("dist=thermal mean={}", args.mean),
        DistArg::Custom => format!(
            "dist=custom pmf_file={}",
            args.pmf_file.as_deref().unwrap_or(Path::new("-")).display()
        ),
    };
    let metadata = vec![
        "paircal counts v1".to_string(),
        format!("seed={}", args.seed),
        dist_label,
        format!("eta1={} eta2={}", args.eta1, args.eta2),
        format!("bg1={} bg2={}", args.bg1, args.bg2),
        format!("coincidence={}", args.coincidence),
        format!("samples={}", args.samples),
    ];
    Ok(io::render_counts_csv(
        CountsKind::Counts,
        &metadata,
        &records,
        args.coincidence,
    ))
}

fn is_json_input(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Attach empirical delta-method variances to an estimate.
fn attach_variances(
    estimate: &mut EfficiencyEstimate,
    moments: &MomentSet,
    corrected_inputs: Option<(&MomentSet, &MomentSet)>,
) {
    let method = estimate.method;
    match corrected_inputs {
        Some((raw, bg)) => {
            if let Ok(report) = error_model::empirical_variance_corrected(method, moments, raw, bg)
            {
                estimate.var_eta1 = Some(report.var_eta1);
            }
            let swapped = error_model::swap_arms(moments);
            let raw_swapped = error_model::swap_arms(raw);
            let bg_swapped = error_model::swap_arms(bg);
            if let Ok(report) = error_model::empirical_variance_corrected(
                method,
                &swapped,
                &raw_swapped,
                &bg_swapped,
            ) {
                estimate.var_eta2 = Some(report.var_eta1);
            }
        }
        None => {
            if let Ok(report) = delta_variance_from_moments(method, moments) {
                estimate.var_eta1 = Some(report.var_eta1);
            }
            if let Ok(report) = delta_variance_from_moments_arm2(method, moments) {
                estimate.var_eta2 = Some(report.var_eta1);
            }
        }
    }
}

fn run_methods(
    selection: MethodArg,
    moments: &MomentSet,
    corrected_inputs: Option<(&MomentSet, &MomentSet)>,
) -> Result<Vec<EfficiencyEstimate>> {
    let mut estimates = match selection.single() {
        Some(Method::Product) => vec![estimators::eta_product(moments)?],
        Some(Method::Difference) => vec![estimators::eta_difference(moments)?],
        Some(Method::EqualDifference) => vec![estimators::eta_equal_difference(moments)?],
        Some(Method::Coincidence) => vec![estimators::eta_coincidence(moments)?],
        None => estimators::estimate_all(moments)?,
    };
    for estimate in &mut estimates {
        attach_variances(estimate, moments, corrected_inputs);
    }
    Ok(estimates)
}

/// Build the estimation report for a counts file (plus optional background
/// run), as JSON or a CSV summary.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<String> {
    let (report, estimates) = if is_json_input(&args.counts) {
        if args.background.is_some() {
            return Err(Error::Parameter(
                "background correction needs record files, not a moment-set JSON input".into(),
            ));
        }
        let moments = io::read_moments_json(&args.counts)?;
        let estimates = run_methods(args.method, &moments, None)?;
        (
            io::EstimateReport {
                schema: io::ESTIMATE_SCHEMA.to_string(),
                counts: args.counts.display().to_string(),
                background: None,
                sample_size: moments.sample_size,
                background_sample_size: None,
                background_corrected: moments.background_corrected,
                moments,
                raw_moments: None,
                estimates: Vec::new(),
            },
            estimates,
        )
    } else {
        let counts = io::read_counts_csv(&args.counts)?;
        if counts.kind != CountsKind::Counts {
            return Err(Error::Parameter(format!(
                "{} is a background run; pass it via --background",
                args.counts.display()
            )));
        }
        let raw = sample_moments(&counts.records)?;
        match &args.background {
            Some(bg_path) => {
                let bg_file = io::read_counts_csv(bg_path)?;
                if bg_file.kind != CountsKind::Background {
                    return Err(Error::Parameter(format!(
                        "{} is not a background run (expected header l_B,m_B)",
                        bg_path.display()
                    )));
                }
                let bg = sample_moments(&bg_file.records)?;
                let corrected = estimators::correct_background(&raw, &bg)?;
                let estimates = run_methods(args.method, &corrected, Some((&raw, &bg)))?;
                (
                    io::EstimateReport {
                        schema: io::ESTIMATE_SCHEMA.to_string(),
                        counts: args.counts.display().to_string(),
                        background: Some(bg_path.display().to_string()),
                        sample_size: raw.sample_size,
                        background_sample_size: Some(bg.sample_size),
                        background_corrected: true,
                        moments: corrected,
                        raw_moments: Some(raw),
                        estimates: Vec::new(),
                    },
                    estimates,
                )
            }
            None => {
                let estimates = run_methods(args.method, &raw, None)?;
                (
                    io::EstimateReport {
                        schema: io::ESTIMATE_SCHEMA.to_string(),
                        counts: args.counts.display().to_string(),
                        background: None,
                        sample_size: raw.sample_size,
                        background_sample_size: None,
                        background_corrected: false,
                        moments: raw,
                        raw_moments: None,
                        estimates: Vec::new(),
                    },
                    estimates,
                )
            }
        }
    };

    let report = io::EstimateReport {
        estimates,
        ..report
    };
    match args.format {
        FormatArg::Json => {
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Parameter(format!("report serialization failed: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        FormatArg::Csv => {
            let mut out = String::from(
                "method,eta1,eta2,var_eta1,var_eta2,background_corrected,out_of_range,arm_asymmetry_warning\n",
            );
            for est in &report.estimates {
                let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    est.method,
                    est.eta1,
                    est.eta2,
                    fmt_opt(est.var_eta1),
                    fmt_opt(est.var_eta2),
                    est.background_corrected,
                    est.out_of_range,
                    est.arm_asymmetry_warning
                ));
            }
            Ok(out)
        }
    }
}

/// Parse an η₁ grid: "start:stop:count" (inclusive, descending allowed) or
/// a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::Parameter(format!("invalid grid '{spec}': {msg}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count".into()));
        }
        let start: f64 = parts[0].parse().map_err(|e| bad(format!("{e}")))?;
        let stop: f64 = parts[1].parse().map_err(|e| bad(format!("{e}")))?;
        let count: usize = parts[2].parse().map_err(|e| bad(format!("{e}")))?;
        if count < 2 {
            return Err(bad("count must be at least 2".into()));
        }
        let step = (stop - start) / (count - 1) as f64;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("{e}"))))
            .collect()
    }
}

/// Render the variance-curve series.
pub fn cmd_variance_curve(args: &CurveArgs) -> Result<String> {
    let method = args
        .method
        .single()
        .filter(|m| matches!(m, Method::Product | Method::Difference))
        .ok_or_else(|| {
            Error::Parameter("variance-curve supports --method product|difference".into())
        })?;
    let eta2_mode = match (args.equal, args.eta2) {
        (true, None) => Eta2Mode::EqualToEta1,
        (false, Some(value)) => Eta2Mode::Fixed(value),
        (false, None) => {
            return Err(Error::Parameter(
                "choose an arm-2 mode: --eta2 <value> or --equal".into(),
            ))
        }
        (true, Some(_)) => unreachable!("clap conflicts_with"),
    };
    let regime = match (args.limit, args.mean) {
        (true, None) => PairRegime::LargeMeanLimit,
        (false, Some(mean)) => PairRegime::FiniteMean(mean),
        (false, None) => {
            return Err(Error::Parameter(
                "choose a regime: --mean <N> or --limit".into(),
            ))
        }
        (true, Some(_)) => unreachable!("clap conflicts_with"),
    };
    let grid = parse_grid(&args.grid)?;
    let points = error_model::variance_curve(method, eta2_mode, regime, args.samples, &grid)?;

    match args.format {
        FormatArg::Csv => {
            let metadata = vec![
                format!("method={method}"),
                match eta2_mode {
                    Eta2Mode::EqualToEta1 => "eta2=equal".to_string(),
                    Eta2Mode::Fixed(v) => format!("eta2={v}"),
                },
                match regime {
                    PairRegime::LargeMeanLimit => "mean_pairs=limit".to_string(),
                    PairRegime::FiniteMean(n) => format!("mean_pairs={n}"),
                },
                format!("samples={}", args.samples),
            ];
            Ok(io::render_curve_csv(&metadata, &points))
        }
        FormatArg::Json => {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|&(eta1, variance)| serde_json::json!({"eta1": eta1, "variance": variance}))
                .collect();
            let mut text = serde_json::to_string_pretty(&rows)
                .map_err(|e| Error::Parameter(format!("serialization failed: {e}")))?;
            text.push('\n');
            Ok(text)
        }
    }
}

/// Render exact moments (and covariances) for a configuration.
pub fn cmd_oracle(args: &OracleArgs) -> Result<String> {
    let dist = build_distribution(args.dist, args.mean, args.pmf_file.as_deref())?;
    let moments = oracle::exact_moments_with_covariances(&dist, args.eta1, args.eta2)?;
    let report = io::OracleReport {
        schema: io::ORACLE_SCHEMA.to_string(),
        dist: dist.kind().to_string(),
        mean_pairs: dist.mean(),
        eta1: args.eta1,
        eta2: args.eta2,
        moments,
    };
    match args.format {
        FormatArg::Json => {
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Parameter(format!("serialization failed: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        FormatArg::Csv => {
            let m = &report.moments;
            let mut out = String::from("statistic,value\n");
            out.push_str(&format!("mean_l,{}\n", m.mean_l));
            out.push_str(&format!("mean_m,{}\n", m.mean_m));
            out.push_str(&format!("mean_l2,{}\n", m.mean_l2));
            out.push_str(&format!("mean_m2,{}\n", m.mean_m2));
            out.push_str(&format!("mean_lm,{}\n", m.mean_lm));
            out.push_str(&format!("mean_diff2,{}\n", m.mean_diff2));
            if let Some(c) = m.mean_c {
                out.push_str(&format!("mean_c,{c}\n"));
            }
            if let Some(c2) = m.mean_c2 {
                out.push_str(&format!("mean_c2,{c2}\n"));
            }
            Ok(out)
        }
    }
}
