//! The file-based workflow, end to end through the library API: write a
//! tape CSV and a config TOML, ingest them back, run the full analysis,
//! and render the JSON report. The `mbvar` binary drives exactly this
//! path.
//!
//! ```bash
//! cargo run -p mbvar --example files_workflow
//! ```

use std::collections::BTreeMap;

use mbvar::io::{
    read_tape, resolve_inputs, write_tape, AnalysisConfig, IngestOptions, PortfolioConfig,
};
use mbvar::report::{full_report, ReportOptions};
use mbvar::simulate::{generate_toy, ToyModelConfig};

fn main() -> mbvar::Result<()> {
    let dir = std::env::temp_dir().join("mbvar_files_workflow");
    std::fs::create_dir_all(&dir)?;
    let tape_path = dir.join("tape.csv");
    let config_path = dir.join("config.toml");

    // write fixture files
    let fixture = generate_toy(&ToyModelConfig::variant_a(0.01, 32, 7))?;
    write_tape(&tape_path, &fixture.tape)?;
    let config = AnalysisConfig {
        liquidity_threshold: Some(0.05),
        resample_span: None,
        output: None,
        portfolio: PortfolioConfig {
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
        market: Some(mbvar::io::MarketConfig {
            shares_outstanding: fixture
                .market
                .ids()
                .iter()
                .zip(fixture.market.shares_outstanding())
                .map(|(id, &w)| (id.to_string(), w))
                .collect::<BTreeMap<_, _>>(),
        }),
        window: None,
    };
    config.write(&config_path)?;
    println!(
        "wrote {} and {}",
        tape_path.display(),
        config_path.display()
    );

    // read them back and analyze
    let ingested = read_tape(&tape_path, IngestOptions::default())?;
    let parsed = AnalysisConfig::from_path(&config_path)?;
    let resolved = resolve_inputs(&parsed, &ingested.market)?;
    let report = full_report(
        &ingested.market,
        &resolved.portfolio,
        &resolved.market,
        &ReportOptions::default(),
    )?;

    println!();
    for line in &report.summary {
        println!("{line}");
    }
    println!();
    println!(
        "full report is deterministic JSON ({} bytes)",
        report.to_json().len()
    );
    Ok(())
}
