//! Holdings against window traded volume: can the estimates be acted on?
//!
//! A variance estimate built from a window in which the portfolio's own
//! liquidation would dominate the traded volume describes a market the
//! liquidation itself would destroy. The check flags every security
//! whose holding exceeds a small fraction of its window volume; the fix
//! is a longer averaging window, not a different estimator.
//!
//! ```bash
//! cargo run -p mbvar --example liquidity_check
//! ```

use mbvar::portfolio::{liquidity_report, PortfolioSpec};
use mbvar::simulate::{generate_market, RandomMarketConfig};
use mbvar::tape::{MarketTape, SecurityTape};

fn main() -> mbvar::Result<()> {
    let config = RandomMarketConfig::new(2, 960, 23);
    let tapes = generate_market(&config)?;

    // a position sized so only the longest window can absorb it
    let spec = PortfolioSpec::new(
        tapes
            .ids()
            .iter()
            .enumerate()
            .map(|(k, id)| (id.clone(), 2500.0 * (k + 1) as f64, 100.0))
            .collect(),
    )?;

    for window_ticks in [60usize, 240, 960] {
        let view = MarketTape::with_unit_window(
            tapes
                .securities()
                .iter()
                .map(|t| SecurityTape::new(t.id().clone(), t.ticks()[..window_ticks].to_vec()))
                .collect::<mbvar::Result<Vec<_>>>()?,
        )?;
        let report = liquidity_report(&spec, &view, 0.05)?;
        println!(
            "window of {window_ticks} ticks: {}",
            if report.pass { "PASS" } else { "FAIL" }
        );
        for entry in &report.entries {
            match entry.ratio {
                Some(r) => println!(
                    "  {}: holding {:>6.0} / traded {:>12.0} = {:.4}{}",
                    entry.security,
                    entry.holding,
                    entry.traded_volume,
                    r,
                    if entry.pass { "" } else { "   <-- too large" }
                ),
                None => println!("  {}: untradeable (no volume)", entry.security),
            }
        }
    }
    println!();
    println!("the estimator is the same in every window; only the longer windows make");
    println!("its output actionable for a position of this size.");
    Ok(())
}
