//! The second-order bridge between the covariance variance and the
//! market-based variance.
//!
//! Trade values are held fixed while volume fluctuations scale by eps;
//! the covariance variance (the constant-volume limit) misses the
//! volume-driven part of the risk, and the second-order reconstruction
//! in chi recovers it to cubic accuracy.
//!
//! ```bash
//! cargo run -p mbvar --example taylor_bridge
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mbvar::portfolio::{normalize_to_portfolio, PortfolioSpec};
use mbvar::simulate::{self, generate_market, RandomMarketConfig};
use mbvar::tape::{correlation_constant, moments, MarketTape, SecurityTape, TradeTick};
use mbvar::variance::{
    market_based_variance, markowitz_portfolio_variance, mean_return, return_covariances,
    taylor_variance,
};

fn main() -> mbvar::Result<()> {
    let n = 128;
    let mut config = RandomMarketConfig::new(4, n, 2024);
    config.price_volatility = 0.02;
    config.volume_fluctuation = 0.0;
    let constant_tape = generate_market(&config)?;
    let base_prices = simulate::start_prices(&config);
    let base_volumes = simulate::base_volumes(&config);

    let spec = PortfolioSpec::new(
        constant_tape
            .ids()
            .iter()
            .zip(&base_prices)
            .zip(&base_volumes)
            .map(|((id, &p), &u)| (id.clone(), 0.02 * n as f64 * u, p))
            .collect(),
    )?;

    // centered volume noise patterns, reused across the sweep
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let patterns: Vec<Vec<f64>> = (0..constant_tape.security_count())
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            v
        })
        .collect();

    let family = |eps: f64| -> mbvar::Result<MarketTape> {
        let securities = constant_tape
            .securities()
            .iter()
            .enumerate()
            .map(|(a, t)| {
                let ticks = t
                    .ticks()
                    .iter()
                    .zip(&patterns[a])
                    .map(|(tick, &v)| {
                        TradeTick::new(tick.value(), base_volumes[a] * (1.0 + eps * v))
                    })
                    .collect::<mbvar::Result<Vec<_>>>()?;
                SecurityTape::new(t.id().clone(), ticks)
            })
            .collect::<mbvar::Result<Vec<_>>>()?;
        MarketTape::with_unit_window(securities)
    };

    // the covariance variance, anchored at the constant-volume member
    let cov = return_covariances(&family(0.0)?, &base_prices)?;
    let theta_m = markowitz_portfolio_variance(&cov, &spec.value_weights())?;
    println!("covariance variance (constant-volume limit): {theta_m:.9e}");
    println!();
    println!(
        "{:>6} {:>14} {:>14} {:>12} {:>12}",
        "eps", "theta", "taylor", "|err|", "|err0|"
    );

    for eps in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let tapes = family(eps)?;
        let norm = normalize_to_portfolio(&tapes, &spec)?;
        let stats = moments(norm.tape())?;
        let theta = market_based_variance(norm.tape(), spec.price_per_share())?;
        let r = mean_return(norm.tape(), spec.price_per_share())?;
        let a = correlation_constant(&stats).unwrap_or(0.0);
        let taylor = taylor_variance(theta_m, r, stats.chi(), a);
        println!(
            "{eps:>6} {theta:>14.9e} {taylor:>14.9e} {:>12.3e} {:>12.3e}",
            (theta - taylor).abs(),
            (theta - theta_m).abs(),
        );
    }
    println!();
    println!(
        "|err| = reconstruction error, |err0| = error of using the covariance variance alone."
    );
    Ok(())
}
