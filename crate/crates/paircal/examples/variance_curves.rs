//! Estimator variance as a function of η₁ for a Poissonian source in the
//! large-N regime, as CSV series: one panel with the second efficiency
//! fixed at 0.1 (where the difference method diverges as η₁ → 0) and one
//! with equal efficiencies (where it simplifies to 2(1−η₁)²/M).
//!
//!     cargo run --release --example variance_curves

use paircal::error_model::{variance_curve, Eta2Mode, PairRegime};
use paircal::estimators::Method;
use paircal::io::render_curve_csv;

fn main() -> paircal::Result<()> {
    let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.01).collect();

    for (label, mode) in [
        ("panel (a): eta2 fixed at 0.1", Eta2Mode::Fixed(0.1)),
        ("panel (b): equal efficiencies", Eta2Mode::EqualToEta1),
    ] {
        println!("# ── {label} ──");
        for method in [Method::Product, Method::Difference] {
            let points = variance_curve(method, mode, PairRegime::LargeMeanLimit, 1, &grid)?;
            let metadata = vec![
                format!("method={method}"),
                match mode {
                    Eta2Mode::Fixed(v) => format!("eta2={v}"),
                    Eta2Mode::EqualToEta1 => "eta2=equal".to_string(),
                },
                "mean_pairs=limit".to_string(),
                "samples=1".to_string(),
            ];
            // Print a decimated preview; full series would be written to disk.
            let preview: Vec<(f64, f64)> = points.iter().step_by(10).copied().collect();
            print!("{}", render_curve_csv(&metadata, &preview));
            println!();
        }
    }

    // The same curves at finite N show how fast the limit is approached.
    println!("# difference method, equal η₁ = η₂ = 0.5, M = 1: approach to the large-N limit");
    for n in [5.0, 50.0, 500.0, 5000.0] {
        let v = variance_curve(
            Method::Difference,
            Eta2Mode::EqualToEta1,
            PairRegime::FiniteMean(n),
            1,
            &[0.5],
        )?;
        println!("# N = {n:>6}: σ²(η̂₁) = {:.6} (limit 0.5)", v[0].1);
    }
    Ok(())
}
