//! Trade moments and the market-based variance of a single tape.
//!
//! ```bash
//! cargo run -p mbvar --example basic_stats
//! ```

use mbvar::tape::{correlation_constant, moments, vwap, SecurityTape};
use mbvar::variance::{market_based_variance, mean_return, variance_oracle};

fn main() -> mbvar::Result<()> {
    // two trades: (value, volume) = (10, 5) and (24, 8), so prices 2 and 3
    let tape = SecurityTape::from_pairs("demo", &[(10.0, 5.0), (24.0, 8.0)])?;
    let base_price = 2.0;

    let stats = moments(&tape)?;
    println!("ticks:            {:?}", tape.ticks());
    println!("VWAP:             {} (= 34/13)", vwap(&tape)?);
    println!("mean value:       {}", stats.mean_value);
    println!("mean volume:      {}", stats.mean_volume);
    println!("psi^2 (values):   {} (= 49/289)", stats.psi2);
    println!("chi^2 (volumes):  {} (= 9/169)", stats.chi2);
    println!("phi (cross):      {} (= 21/221)", stats.phi);
    println!("correlation a:    {}", correlation_constant(&stats)?);

    // the closed form and the direct squared-volume-weighted moment are
    // two routes to the same number
    let closed = market_based_variance(&tape, base_price)?;
    let direct = variance_oracle(&tape, base_price)?;
    println!();
    println!(
        "mean return:      {} (= 17/13)",
        mean_return(&tape, base_price)?
    );
    println!("variance, closed: {closed} (= 800/15041)");
    println!("variance, direct: {direct}");
    println!("difference:       {:e}", (closed - direct).abs());

    Ok(())
}
