//! The same trades, three views: each security, the whole market as one
//! security, and a fixed proportional portfolio as one security.
//!
//! The portfolio holds a slice of the market bought in the past and
//! never traded since; its return and risk generally differ from the
//! return and risk of the market's current trades because current volume
//! shares drift away from the held shares.
//!
//! ```bash
//! cargo run -p mbvar --example market_vs_portfolio
//! ```

use mbvar::portfolio::{
    aggregate_market, market_proportional_portfolio, normalize_to_portfolio, MarketBase,
};
use mbvar::simulate::{self, generate_market, RandomMarketConfig};
use mbvar::variance::{market_based_variance, mean_return, return_difference};

fn main() -> mbvar::Result<()> {
    let mut config = RandomMarketConfig::new(3, 256, 11);
    config.volume_fluctuation = 0.4;
    config.price_correlation = 0.3;
    let tapes = generate_market(&config)?;
    let base_prices = simulate::start_prices(&config);

    // shares outstanding define the market; the investor buys 0.1% of it
    let base = MarketBase::new(
        tapes
            .ids()
            .iter()
            .zip(&base_prices)
            .enumerate()
            .map(|(k, (id, &p))| (id.clone(), p, 1e6 * (1.0 + k as f64)))
            .collect(),
    )?;
    let spec = market_proportional_portfolio(&base, 1e-3 * base.total_capitalization())?;

    println!(
        "market price per share at purchase: {}",
        base.price_per_share()
    );
    println!(
        "portfolio price per share:          {}",
        spec.price_per_share()
    );
    println!();

    for (tape, &price) in tapes.securities().iter().zip(&base_prices) {
        println!(
            "security {}: return {:.6}, market-based variance {:.3e}",
            tape.id(),
            mean_return(tape, price)?,
            market_based_variance(tape, price)?,
        );
    }

    let market_tape = aggregate_market(&tapes)?;
    let portfolio_tape = normalize_to_portfolio(&tapes, &spec)?;
    println!();
    println!(
        "market as one security:    return {:.6}, variance {:.3e}",
        mean_return(&market_tape, base.price_per_share())?,
        market_based_variance(&market_tape, base.price_per_share())?,
    );
    println!(
        "portfolio as one security: return {:.6}, variance {:.3e}",
        mean_return(portfolio_tape.tape(), spec.price_per_share())?,
        market_based_variance(portfolio_tape.tape(), spec.price_per_share())?,
    );

    // where the return gap comes from, security by security
    let gap = return_difference(&tapes, &spec, &base)?;
    println!();
    println!("return gap (portfolio - market): {:+.6e}", gap.difference);
    println!(
        "same gap through prices:         {:+.6e}",
        gap.price_form_difference
    );
    if let Some(contributions) = &gap.per_security {
        for c in contributions {
            println!(
                "  {}: weight {:.4}, volume share shift {:+.4}, contribution {:+.3e}",
                c.security, c.value_weight, c.volume_shift, c.contribution
            );
        }
    }

    Ok(())
}
