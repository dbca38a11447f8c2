//! Command-line front end: files in, files out.
//!
//! Exit codes: 0 success, 1 usage or data errors, 2 liquidity failure
//! under `--strict-liquidity`, 3 internal consistency violations.
//! `MBVAR_LOG` controls diagnostic verbosity.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::error::{Error, Result};
use crate::io::{self, AnalysisConfig, IngestOptions};
use crate::portfolio::{aggregate_market, liquidity_report, normalize_to_portfolio};
use crate::report::{full_report, ReportOptions, DEFAULT_LIQUIDITY_THRESHOLD};
use crate::resample::{resample_market, SpanSpec};
use crate::simulate::{self, RandomMarketConfig, ToyModelConfig};
use crate::tape::{MarketTape, TradeTick};
use crate::variance::ORACLE_TOLERANCE;

#[derive(Debug, Parser)]
#[command(
    name = "mbvar",
    version,
    about = "Market-based return and variance analytics over trade tapes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full analysis of a tape against a portfolio configuration.
    Analyze(AnalyzeArgs),
    /// Generate deterministic fixture tapes and matching configurations.
    Simulate(SimulateArgs),
    /// Aggregate a tape into coarser time spans.
    Resample(ResampleArgs),
    /// Check portfolio liquidity against window traded volumes.
    Liquidity(LiquidityArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Tape CSV (security_id,tick_index,value,volume).
    #[arg(long)]
    pub tape: PathBuf,
    /// Analysis configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Report destination; stdout when absent and the config names none.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-tick plot data (prices, returns, cumulative volumes).
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Fail (exit 2) when the liquidity check fails instead of warning.
    #[arg(long)]
    pub strict_liquidity: bool,
    /// Remove zero-volume grid slots across all securities instead of failing.
    #[arg(long)]
    pub drop_zero_volume: bool,
    /// Relative tolerance of the closed-form vs direct variance cross-check.
    #[arg(long, default_value_t = ORACLE_TOLERANCE)]
    pub consistency_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fixture kind: random, toy-a, toy-b, or perturbed.
    #[arg(long, default_value = "random")]
    pub variant: String,
    /// Securities in a random fixture.
    #[arg(long, default_value_t = 2)]
    pub j: usize,
    /// Ticks per security.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Volume fluctuation amplitude for random fixtures, in [0, 1).
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// Target per-security return variance for toy fixtures.
    #[arg(long, default_value_t = 0.01)]
    pub theta: f64,
    /// Volume perturbation amplitude for the perturbed toy fixture.
    #[arg(long, default_value_t = 20.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for tape.csv and config.toml.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub tape: PathBuf,
    /// Ticks per span (e.g. 4), or a wall-clock span (e.g. 1min, 1h, 1d)
    /// combined with --tick-seconds.
    #[arg(long)]
    pub span: String,
    /// Wall-clock seconds per fine tick, for wall-clock --span values.
    #[arg(long)]
    pub tick_seconds: Option<f64>,
    #[arg(long)]
    pub drop_zero_volume: bool,
    /// Output tape CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LiquidityArgs {
    #[arg(long)]
    pub tape: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Maximum tolerated holdings-to-traded-volume ratio.
    #[arg(long, default_value_t = DEFAULT_LIQUIDITY_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub drop_zero_volume: bool,
}

/// Map an error to the documented process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::LiquidityFailure(_) => 2,
        Error::InternalConsistency(_) => 3,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Resample(args) => run_resample(args),
        Command::Liquidity(args) => run_liquidity(args),
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    let config = AnalysisConfig::from_path(&args.config)?;
    let ingested = io::read_tape(
        &args.tape,
        IngestOptions {
            drop_zero_volume: args.drop_zero_volume,
        },
    )?;
    let mut market = ingested
        .market
        .rewindowed(io::resolve_window(&config, ingested.market.tick_count())?)?;

    if let Some(span) = config.resample_span {
        if span > 1 {
            market = resample_market(&market, &SpanSpec::new(span)?)?;
            info!(
                "resampled to {} ticks of span {}",
                market.tick_count(),
                span
            );
        }
    }

    let resolved = io::resolve_inputs(&config, &market)?;
    let options = ReportOptions {
        liquidity_threshold: config
            .liquidity_threshold
            .unwrap_or(DEFAULT_LIQUIDITY_THRESHOLD),
        consistency_tolerance: args.consistency_tolerance,
    };
    let mut report = full_report(&market, &resolved.portfolio, &resolved.market, &options)?;

    if !ingested.dropped_ticks.is_empty() {
        report.notes.push(format!(
            "dropped zero-volume tick(s) {:?} across all securities during ingestion",
            ingested.dropped_ticks
        ));
    }
    if !resolved.inferred_base_prices.is_empty() {
        report.notes.push(format!(
            "base prices inferred from first tick prices for: {}",
            resolved
                .inferred_base_prices
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    if resolved.market_synthesized {
        report
            .notes
            .push("no market base configured; treating the portfolio as a market slice".into());
    }

    if let Some(dir) = &args.plot_data {
        write_plot_data(dir, &market, &resolved)?;
    }

    let rendered = report.to_json();
    match args.out.as_ref().or(config.output.as_ref()) {
        Some(path) => {
            fs::write(path, rendered.as_bytes())?;
            info!("report written to {}", path.display());
        }
        None => println!("{rendered}"),
    }

    if args.strict_liquidity && !report.liquidity.pass {
        let failing: Vec<String> = report
            .liquidity
            .failing()
            .iter()
            .map(|e| e.security.to_string())
            .collect();
        return Err(Error::LiquidityFailure(format!(
            "securities over threshold: {}",
            failing.join(", ")
        )));
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let tape_path = args.out.join("tape.csv");
    let config_path = args.out.join("config.toml");

    let (market, config) = match args.variant.as_str() {
        "random" => {
            let sim = RandomMarketConfig::new(args.j, args.n, args.seed)
                .with_volume_fluctuation(args.eps);
            let market = simulate::generate_market(&sim)?;
            let prices = simulate::start_prices(&sim);
            // hold 1% of each window traded volume: comfortably liquid
            let holdings: Vec<f64> = market
                .securities()
                .iter()
                .map(|t| 0.01 * t.ticks().iter().map(TradeTick::volume).sum::<f64>())
                .collect();
            let config = AnalysisConfig {
                portfolio: io::PortfolioConfig {
                    holdings: market
                        .ids()
                        .iter()
                        .zip(&holdings)
                        .map(|(id, &w)| (id.to_string(), w))
                        .collect(),
                    base_prices: market
                        .ids()
                        .iter()
                        .zip(&prices)
                        .map(|(id, &p)| (id.to_string(), p))
                        .collect(),
                },
                market: Some(io::MarketConfig {
                    shares_outstanding: market
                        .ids()
                        .iter()
                        .zip(&holdings)
                        .map(|(id, &w)| (id.to_string(), 100.0 * w))
                        .collect(),
                }),
                window: None,
                liquidity_threshold: None,
                resample_span: None,
                output: None,
            };
            (market, config)
        }
        toy @ ("toy-a" | "toy-b" | "perturbed") => {
            let toy_config = match toy {
                "toy-a" => ToyModelConfig::variant_a(args.theta, args.n, args.seed),
                "toy-b" => ToyModelConfig::variant_b(args.theta, args.n, args.seed),
                _ => ToyModelConfig::perturbed(args.theta, args.alpha, args.n, args.seed),
            };
            let fixture = simulate::generate_toy(&toy_config)?;
            let config = AnalysisConfig {
                portfolio: io::PortfolioConfig {
                    holdings: fixture
                        .portfolio
                        .ids()
                        .iter()
                        .zip(fixture.portfolio.holdings())
                        .map(|(id, &w)| (id.to_string(), w))
                        .collect(),
                    base_prices: fixture
                        .portfolio
                        .ids()
                        .iter()
                        .zip(fixture.portfolio.base_prices())
                        .map(|(id, &p)| (id.to_string(), p))
                        .collect(),
                },
                market: Some(io::MarketConfig {
                    shares_outstanding: fixture
                        .market
                        .ids()
                        .iter()
                        .zip(fixture.market.shares_outstanding())
                        .map(|(id, &w)| (id.to_string(), w))
                        .collect(),
                }),
                window: None,
                liquidity_threshold: None,
                resample_span: None,
                output: None,
            };
            (fixture.tape, config)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown variant {other}; expected random, toy-a, toy-b or perturbed"
            )))
        }
    };

    io::write_tape(&tape_path, &market)?;
    config.write(&config_path)?;
    info!(
        "wrote {} and {}",
        tape_path.display(),
        config_path.display()
    );
    Ok(())
}

fn run_resample(args: ResampleArgs) -> Result<()> {
    let ingested = io::read_tape(
        &args.tape,
        IngestOptions {
            drop_zero_volume: args.drop_zero_volume,
        },
    )?;
    let span = parse_span(&args.span, args.tick_seconds)?;
    let coarse = resample_market(&ingested.market, &SpanSpec::new(span)?)?;
    io::write_tape(&args.out, &coarse)?;
    Ok(())
}

/// Parse a span argument: a bare tick count, or a wall-clock duration
/// mapped to ticks through the fine tick span.
fn parse_span(text: &str, tick_seconds: Option<f64>) -> Result<usize> {
    if let Ok(ticks) = text.parse::<usize>() {
        return Ok(ticks);
    }
    let (number, unit_seconds) = if let Some(v) = text.strip_suffix("min") {
        (v, 60.0)
    } else if let Some(v) = text.strip_suffix('h') {
        (v, 3600.0)
    } else if let Some(v) = text.strip_suffix('d') {
        (v, 86400.0)
    } else if let Some(v) = text.strip_suffix('s') {
        (v, 1.0)
    } else {
        return Err(Error::InvalidConfig(format!(
            "cannot parse span {text}; use a tick count or <n>(s|min|h|d)"
        )));
    };
    let quantity: f64 = number
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse span quantity in {text}")))?;
    let tick = tick_seconds.ok_or_else(|| {
        Error::InvalidConfig("wall-clock spans need --tick-seconds to map onto ticks".into())
    })?;
    if tick <= 0.0 || quantity <= 0.0 {
        return Err(Error::InvalidConfig(
            "span and tick seconds must be positive".into(),
        ));
    }
    let ticks = quantity * unit_seconds / tick;
    let rounded = ticks.round();
    if (ticks - rounded).abs() > 1e-9 * ticks.abs() || rounded < 1.0 {
        return Err(Error::SpanMismatch(format!(
            "span {text} is {ticks} ticks of {tick}s; not a whole tick count"
        )));
    }
    Ok(rounded as usize)
}

fn run_liquidity(args: LiquidityArgs) -> Result<()> {
    let config = AnalysisConfig::from_path(&args.config)?;
    let ingested = io::read_tape(
        &args.tape,
        IngestOptions {
            drop_zero_volume: args.drop_zero_volume,
        },
    )?;
    let resolved = io::resolve_inputs(&config, &ingested.market)?;
    let report = liquidity_report(&resolved.portfolio, &ingested.market, args.threshold)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("liquidity serialization cannot fail")
    );
    Ok(())
}

fn write_plot_data(dir: &Path, market: &MarketTape, resolved: &io::ResolvedInputs) -> Result<()> {
    fs::create_dir_all(dir)?;
    let norm = normalize_to_portfolio(market, &resolved.portfolio)?;
    let agg = aggregate_market(market)?;
    let n = market.tick_count();

    let ids: Vec<String> = market.ids().iter().map(|id| id.to_string()).collect();
    let mut header = vec!["tick_index".to_string()];
    header.extend(ids.iter().cloned());
    header.push("market".into());
    header.push("portfolio".into());

    let base_prices = resolved.market.base_prices();
    let market_base = resolved.market.price_per_share();
    let portfolio_base = resolved.portfolio.price_per_share();

    let mut prices = csv::Writer::from_path(dir.join("prices.csv"))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut returns = csv::Writer::from_path(dir.join("returns.csv"))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut volumes = csv::Writer::from_path(dir.join("cumulative_volumes.csv"))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for w in [&mut prices, &mut returns, &mut volumes] {
        w.write_record(&header)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }

    let mut cumulative = vec![0.0f64; ids.len() + 2];
    for i in 0..n {
        let mut price_row = vec![i.to_string()];
        let mut return_row = vec![i.to_string()];
        let mut volume_row = vec![i.to_string()];
        for (j, tape) in market.securities().iter().enumerate() {
            let tick = &tape.ticks()[i];
            price_row.push(tick.price().to_string());
            return_row.push((tick.price() / base_prices[j]).to_string());
            cumulative[j] += tick.volume();
            volume_row.push(cumulative[j].to_string());
        }
        let m = &agg.ticks()[i];
        let p = &norm.tape().ticks()[i];
        price_row.push(m.price().to_string());
        price_row.push(p.price().to_string());
        return_row.push((m.price() / market_base).to_string());
        return_row.push((p.price() / portfolio_base).to_string());
        cumulative[ids.len()] += m.volume();
        cumulative[ids.len() + 1] += p.volume();
        volume_row.push(cumulative[ids.len()].to_string());
        volume_row.push(cumulative[ids.len() + 1].to_string());

        prices
            .write_record(&price_row)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        returns
            .write_record(&return_row)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        volumes
            .write_record(&volume_row)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    for mut w in [prices, returns, volumes] {
        w.flush()?;
    }
    Ok(())
}
