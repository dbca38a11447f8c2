//! Two-security fixtures where the covariance (constant-volume) variance
//! of the portfolio and of the market's trades differ by a factor of
//! three in either direction, depending only on how current trade volume
//! shares sit relative to the held shares.
//!
//! ```bash
//! cargo run -p mbvar --example toy_models
//! ```

use mbvar::portfolio::market_shares;
use mbvar::simulate::{generate_toy, ToyModelConfig};
use mbvar::variance::{
    markowitz_difference, markowitz_market_variance, markowitz_portfolio_variance,
    return_covariances,
};

fn run(label: &str, config: ToyModelConfig) -> mbvar::Result<()> {
    let theta = config.theta1;
    let fixture = generate_toy(&config)?;
    let cov = return_covariances(&fixture.tape, fixture.portfolio.base_prices())?;
    let shares = market_shares(&fixture.tape)?;

    let value_weights = fixture.portfolio.value_weights();
    let volume_weights = fixture.portfolio.volume_weights();
    let tm = markowitz_portfolio_variance(&cov, &value_weights)?;
    let tmm =
        markowitz_market_variance(&cov, &value_weights, &volume_weights, &shares.volume_shares)?;
    let diff = markowitz_difference(&cov, &value_weights, &volume_weights, &shares.volume_shares)?;

    println!("{label}");
    println!("  held shares:          {:?}", volume_weights);
    println!("  invested fractions:   {:?}", value_weights);
    println!("  current volume shares {:?}", shares.volume_shares);
    println!(
        "  theta_M  (portfolio): {tm:.6e}  ({:.4} theta)",
        tm / theta
    );
    println!(
        "  theta_Mm (market):    {tmm:.6e}  ({:.4} theta)",
        tmm / theta
    );
    println!("  difference:           {diff:+.6e}");
    if tm > tmm {
        println!(
            "  portfolio variance is {:.3}x the market-trade variance",
            tm / tmm
        );
    } else {
        println!(
            "  market-trade variance is {:.3}x the portfolio variance",
            tmm / tm
        );
    }
    println!();
    Ok(())
}

fn main() -> mbvar::Result<()> {
    let theta = 0.01;
    run(
        "fixture A (volume shares run against the holdings):",
        ToyModelConfig::variant_a(theta, 64, 7),
    )?;
    run(
        "fixture B (volume shares run with the holdings):",
        ToyModelConfig::variant_b(theta, 64, 7),
    )?;
    println!("same covariance matrix, same securities; only the share geometry moved.");
    Ok(())
}
