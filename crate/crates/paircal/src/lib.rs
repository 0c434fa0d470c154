//! paircal — absolute photo-detection efficiency from photon-pair
//! counting statistics.
//!
//! Correlated photon pairs let a detector measure its own absolute
//! efficiency: pairs arrive in both arms or not at all, so any mismatch
//! between the two singles records is attributable to detection loss. This
//! crate implements the three singles-statistics estimators (product,
//! difference and coincidence ratio), independent additive-background
//! correction, closed-form and numeric error propagation, an exact-moment
//! oracle for validation, and a reproducible Monte Carlo simulator of the
//! whole measurement.
//!
//! # Layout
//!
//! * [`source`] — pair-number distributions (Poisson, thermal, custom
//!   tables) with exact moments and seeded sampling.
//! * [`detector`] — binomial-thinning detection model, background
//!   injection, coincidence cascade, parallel record simulation.
//! * [`moments`] — per-window statistics, sample moments and covariances.
//! * [`estimators`] — the efficiency estimators and background correction.
//! * [`error_model`] — closed-form, numeric and empirical variances plus
//!   variance-curve generation.
//! * [`oracle`] — exact moments by reorganized and literal nested sums.
//! * [`io`] — counts/background CSV, pmf tables, JSON reports.
//! * [`cli`] — the command implementations behind the `paircal` binary.
//!
//! # Quick start
//!
//! ```
//! use paircal::detector::{simulate_records, DetectorChannel};
//! use paircal::estimators::{eta_product, sample_moments};
//! use paircal::source::PairDistribution;
//!
//! let dist = PairDistribution::poisson(5.0)?;
//! let arm1 = DetectorChannel::noiseless(0.6)?;
//! let arm2 = DetectorChannel::noiseless(0.4)?;
//! let records = simulate_records(&dist, &arm1, &arm2, 42, 20_000, false);
//! let estimate = eta_product(&sample_moments(&records)?)?;
//! assert!((estimate.eta1 - 0.6).abs() < 0.05);
//! # Ok::<(), paircal::Error>(())
//! ```
//!
//! The `examples/` directory walks through each capability; the `paircal`
//! binary exposes the same operations as subcommands.

pub mod cli;
pub mod detector;
pub mod error;
pub mod error_model;
pub mod estimators;
pub mod io;
pub mod math;
pub mod moments;
pub mod oracle;
pub mod rng;
pub mod source;

pub use error::{Error, Result};
