//! Tape and configuration file formats.
//!
//! Tapes travel as CSV with the header `security_id,tick_index,value,volume`.
//! Prices are derived, never stored, so a file cannot carry an
//! inconsistent value/volume/price triple. Floats are written in
//! shortest round-trip decimal form; reading a written tape reproduces
//! the in-memory values bit for bit.
//!
//! Analysis configuration is a flat TOML document; see
//! [`AnalysisConfig`].

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::portfolio::{MarketBase, PortfolioSpec};
use crate::tape::{AveragingWindow, MarketTape, SecurityId, SecurityTape, TradeTick};

/// One row of the tape CSV format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeFileRow {
    pub security_id: String,
    pub tick_index: u64,
    pub value: f64,
    pub volume: f64,
}

/// Ingestion switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Remove zero-volume grid slots across all securities instead of
    /// failing on them.
    pub drop_zero_volume: bool,
}

/// A tape read from disk, plus what ingestion had to repair.
#[derive(Debug, Clone)]
pub struct IngestedTape {
    pub market: MarketTape,
    /// Tick indices removed across all securities by the zero-volume
    /// repair mode.
    pub dropped_ticks: Vec<u64>,
}

/// Read and validate a tape file into an aligned market tape.
///
/// Every security must cover the identical contiguous index range
/// 0..N-1 exactly once. Zero-volume rows fail ingestion unless
/// `drop_zero_volume` removes their grid slot across all securities.
pub fn read_tape(path: impl AsRef<Path>, options: IngestOptions) -> Result<IngestedTape> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(e, 1))?;

    {
        let headers = reader.headers().map_err(|e| csv_error(e, 1))?;
        let expected = ["security_id", "tick_index", "value", "volume"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header {:?}, got {:?}",
                    expected.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
    }

    let mut per_security: BTreeMap<String, Vec<Option<(f64, f64)>>> = BTreeMap::new();
    let mut zero_volume_ticks: Vec<u64> = Vec::new();
    let mut max_index = 0u64;
    for record in reader.deserialize::<TapeFileRow>() {
        let row = match record {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or_default();
                return Err(csv_error(e, line));
            }
        };
        max_index = max_index.max(row.tick_index);
        let slots = per_security.entry(row.security_id.clone()).or_default();
        let idx = row.tick_index as usize;
        if slots.len() <= idx {
            slots.resize(idx + 1, None);
        }
        if slots[idx].is_some() {
            return Err(Error::Grid(format!(
                "duplicate row for security {} at tick {}",
                row.security_id, row.tick_index
            )));
        }
        if row.volume == 0.0 {
            if options.drop_zero_volume {
                zero_volume_ticks.push(row.tick_index);
            } else {
                return Err(Error::ZeroVolume {
                    security: row.security_id.clone(),
                    tick: idx,
                });
            }
        }
        slots[idx] = Some((row.value, row.volume));
    }
    if per_security.is_empty() {
        return Err(Error::InvalidTape(format!(
            "{}: no data rows",
            path.display()
        )));
    }

    let n = max_index as usize + 1;
    for (id, slots) in &per_security {
        for idx in 0..n {
            if slots.get(idx).copied().flatten().is_none() {
                return Err(Error::Grid(format!(
                    "security {id} is missing tick {idx} (grid is 0..{})",
                    n - 1
                )));
            }
        }
    }

    zero_volume_ticks.sort_unstable();
    zero_volume_ticks.dedup();
    if !zero_volume_ticks.is_empty() {
        warn!(
            "dropping {} zero-volume tick(s) across all securities: {:?}",
            zero_volume_ticks.len(),
            zero_volume_ticks
        );
    }

    let mut securities = Vec::with_capacity(per_security.len());
    for (id, slots) in per_security {
        let ticks = slots
            .into_iter()
            .enumerate()
            .filter(|(idx, _)| !zero_volume_ticks.contains(&(*idx as u64)))
            .map(|(idx, slot)| {
                let (value, volume) = slot.expect("coverage checked");
                TradeTick::new(value, volume)
                    .map_err(|e| Error::InvalidTape(format!("security {id} at tick {idx}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        securities.push(SecurityTape::new(id, ticks)?);
    }
    Ok(IngestedTape {
        market: MarketTape::with_unit_window(securities)?,
        dropped_ticks: zero_volume_ticks,
    })
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Write a tape in the canonical CSV form: header row, then rows sorted
/// by (security_id, tick_index).
pub fn write_tape(path: impl AsRef<Path>, tapes: &MarketTape) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(|e| csv_error(e, 0))?;
    for tape in tapes.securities() {
        for (idx, tick) in tape.ticks().iter().enumerate() {
            writer
                .serialize(TapeFileRow {
                    security_id: tape.id().to_string(),
                    tick_index: idx as u64,
                    value: tick.value(),
                    volume: tick.volume(),
                })
                .map_err(|e| csv_error(e, 0))?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Portfolio tables of the analysis configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioConfig {
    /// Held share count per security id.
    pub holdings: BTreeMap<String, f64>,
    /// Base price per security id; securities left out get their first
    /// tick price, flagged in the report.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub base_prices: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    /// Shares outstanding per security id.
    pub shares_outstanding: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub center_time: f64,
    pub tick_span: f64,
    /// Optional consistency check against tick_count * tick_span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

/// The flat TOML analysis configuration.
///
/// Scalar keys come before the tables, as TOML requires of the
/// serialized field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liquidity_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_span: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub portfolio: PortfolioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
}

impl AnalysisConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path.as_ref())?;
        file.write_all(self.to_toml().as_bytes())?;
        Ok(())
    }
}

/// Concrete analysis inputs assembled from a config and a tape.
#[derive(Debug, Clone)]
pub struct ResolvedInputs {
    pub portfolio: PortfolioSpec,
    pub market: MarketBase,
    /// Securities whose base price was inferred from the first tick.
    pub inferred_base_prices: Vec<SecurityId>,
    /// The market base was synthesized from the portfolio because the
    /// config declared none.
    pub market_synthesized: bool,
}

/// Resolve the config against an ingested tape: check id coverage, infer
/// missing base prices from first tick prices, and synthesize a
/// proportional market base when the config has none.
pub fn resolve_inputs(config: &AnalysisConfig, tapes: &MarketTape) -> Result<ResolvedInputs> {
    let tape_ids: Vec<String> = tapes.ids().iter().map(|id| id.to_string()).collect();
    let holding_ids: Vec<String> = config.portfolio.holdings.keys().cloned().collect();
    if tape_ids != holding_ids {
        return Err(Error::MissingSecurity(format!(
            "config holdings cover [{}] but the tape carries [{}]",
            holding_ids.join(", "),
            tape_ids.join(", ")
        )));
    }
    for id in config.portfolio.base_prices.keys() {
        if !config.portfolio.holdings.contains_key(id) {
            return Err(Error::InvalidConfig(format!(
                "base price given for unknown security {id}"
            )));
        }
    }

    let mut inferred = Vec::new();
    let mut entries = Vec::with_capacity(tape_ids.len());
    for tape in tapes.securities() {
        let id = tape.id().to_string();
        let held = config.portfolio.holdings[&id];
        let price = match config.portfolio.base_prices.get(&id) {
            Some(&p) => p,
            None => {
                inferred.push(tape.id().clone());
                tape.ticks()[0].price()
            }
        };
        entries.push((tape.id().clone(), held, price));
    }
    let portfolio = PortfolioSpec::new(entries.clone())?;

    let (market, synthesized) = match &config.market {
        Some(market_config) => {
            let outstanding_ids: Vec<String> =
                market_config.shares_outstanding.keys().cloned().collect();
            if outstanding_ids != tape_ids {
                return Err(Error::MissingSecurity(format!(
                    "market shares outstanding cover [{}] but the tape carries [{}]",
                    outstanding_ids.join(", "),
                    tape_ids.join(", ")
                )));
            }
            let base_entries = entries
                .iter()
                .map(|(id, _, price)| {
                    (
                        id.clone(),
                        *price,
                        market_config.shares_outstanding[&id.to_string()],
                    )
                })
                .collect();
            (MarketBase::new(base_entries)?, false)
        }
        None => {
            let base_entries = entries
                .iter()
                .map(|(id, held, price)| (id.clone(), *price, *held))
                .collect();
            (MarketBase::new(base_entries)?, true)
        }
    };

    Ok(ResolvedInputs {
        portfolio,
        market,
        inferred_base_prices: inferred,
        market_synthesized: synthesized,
    })
}

/// Window from the config (if any), otherwise the unit window.
pub fn resolve_window(config: &AnalysisConfig, tick_count: usize) -> Result<AveragingWindow> {
    match &config.window {
        Some(w) => match w.duration {
            Some(duration) => {
                AveragingWindow::from_parts(w.center_time, duration, tick_count, w.tick_span)
            }
            None => AveragingWindow::new(w.center_time, tick_count, w.tick_span),
        },
        None => AveragingWindow::unit(tick_count),
    }
}
