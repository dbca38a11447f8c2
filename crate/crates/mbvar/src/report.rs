//! The composite analysis report.
//!
//! [`full_report`] runs every estimator over one market tape, one
//! portfolio and one market base, and collects the results into a single
//! serializable document: per-security variance reports, the market and
//! the portfolio traded as single securities, the covariance-based
//! variance pair, return-gap decomposition, the volume-variation
//! decomposition, the liquidity check, and a rounded human summary.
//!
//! Serialization is deterministic: struct field order is fixed, maps are
//! sorted, and floats print in shortest round-trip form. Identical inputs
//! produce byte-identical documents.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::portfolio::{
    aggregate_market, liquidity_report, market_shares, normalize_to_portfolio, LiquidityReport,
    MarketBase, PortfolioSpec,
};
use crate::tape::{self, MarketTape};
use crate::variance::{
    chi_decomposition, cross_check_variance, markowitz_difference, markowitz_market_variance,
    markowitz_portfolio_variance, return_covariances, return_difference, variance_report,
    ReturnDecomposition, VarianceReport, ORACLE_TOLERANCE,
};

/// Default liquidity threshold: holdings above this fraction of window
/// traded volume fail the feasibility check.
pub const DEFAULT_LIQUIDITY_THRESHOLD: f64 = 0.05;

/// Knobs of [`full_report`].
#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub liquidity_threshold: f64,
    /// Relative tolerance for the closed-form vs direct variance
    /// cross-check that guards every reported variance.
    pub consistency_tolerance: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            liquidity_threshold: DEFAULT_LIQUIDITY_THRESHOLD,
            consistency_tolerance: ORACLE_TOLERANCE,
        }
    }
}

/// A report section that may fail independently of the others.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Section<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> Section<T> {
    fn from_result(result: Result<T>) -> Self {
        match result {
            Ok(value) => Section::Ok(value),
            Err(err) => Section::Failed {
                error: err.to_string(),
            },
        }
    }

    pub fn as_ok(&self) -> Option<&T> {
        match self {
            Section::Ok(value) => Some(value),
            Section::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowSection {
    pub center_time: f64,
    pub duration: f64,
    pub tick_count: usize,
    pub tick_span: f64,
}

/// Base-time and current-window weights of one security.
#[derive(Debug, Clone, Serialize)]
pub struct ShareRow {
    /// Relative amount invested at the base time.
    pub invested_fraction: f64,
    /// Relative held share count at the base time.
    pub holding_share: f64,
    /// Share of current window traded value.
    pub value_share: f64,
    /// Share of current window traded volume.
    pub volume_share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecuritySection {
    pub base_price: f64,
    pub vwap: f64,
    pub total_value: f64,
    pub total_volume: f64,
    pub variance: VarianceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntitySection {
    pub base_price: f64,
    pub vwap: f64,
    pub variance: VarianceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkowitzSection {
    /// Covariance variance of the portfolio, invested-fraction weights.
    pub theta_portfolio: f64,
    /// Covariance variance of the market's trades, tilted weights.
    pub theta_market: f64,
    /// One-shot difference of the two quadratic forms.
    pub difference: f64,
    /// Direct subtraction, kept as a cross-check of `difference`.
    pub difference_direct: f64,
    pub ratio_market_over_portfolio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSection {
    pub chi2: f64,
    pub chi_m2: f64,
    pub chi_gamma2: f64,
    pub xi_m: f64,
    pub xi_gamma: f64,
    pub omega: f64,
    pub omega_degenerate: bool,
    /// Left side of the decomposition identity, `1 + chi2`.
    pub identity_lhs: f64,
    /// Recomposed right side; equal to `identity_lhs` up to rounding.
    pub identity_rhs: f64,
}

/// The full analysis document.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub window: WindowSection,
    pub shares: BTreeMap<String, ShareRow>,
    pub securities: BTreeMap<String, SecuritySection>,
    pub market: EntitySection,
    pub portfolio: EntitySection,
    pub markowitz: MarkowitzSection,
    pub returns: Section<ReturnDecomposition>,
    pub chi_decomposition: Section<ChiSection>,
    pub liquidity: LiquidityReport,
    pub notes: Vec<String>,
    pub summary: Vec<String>,
}

impl AnalysisReport {
    /// Deterministic pretty JSON rendering of the report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn sig(x: f64) -> String {
    format!("{x:.6e}")
}

/// Run the whole analysis over one tape/portfolio/market triple.
///
/// Component failures that leave the rest of the report meaningful are
/// captured per section; failures of the core variance machinery
/// propagate as errors.
pub fn full_report(
    tapes: &MarketTape,
    spec: &PortfolioSpec,
    base: &MarketBase,
    options: &ReportOptions,
) -> Result<AnalysisReport> {
    let mut notes = Vec::new();

    let cov = return_covariances(tapes, base.base_prices())?;
    let shares_snapshot = market_shares(tapes)?;

    let value_weights = spec.value_weights();
    let volume_weights = spec.volume_weights();

    let theta_markowitz_portfolio = markowitz_portfolio_variance(&cov, &value_weights)?;
    let (theta_markowitz_market, difference) = match markowitz_market_variance(
        &cov,
        &value_weights,
        &volume_weights,
        &shares_snapshot.volume_shares,
    ) {
        Ok(tmm) => {
            let diff = markowitz_difference(
                &cov,
                &value_weights,
                &volume_weights,
                &shares_snapshot.volume_shares,
            )?;
            (tmm, diff)
        }
        Err(Error::ZeroShare(id)) => {
            notes.push(format!(
                "market-trade covariance variance skipped: security {id} has a zero base volume share"
            ));
            (f64::NAN, f64::NAN)
        }
        Err(err) => return Err(err),
    };

    // per-security sections
    let mut securities = BTreeMap::new();
    for ((tape, &price), idx) in tapes.securities().iter().zip(base.base_prices()).zip(0..) {
        cross_check_variance(tape, price, options.consistency_tolerance)?;
        let stats = tape::moments(tape)?;
        let report = variance_report(tape, price, cov.get(idx, idx))?;
        securities.insert(
            tape.id().to_string(),
            SecuritySection {
                base_price: price,
                vwap: stats.vwap,
                total_value: stats.total_value,
                total_volume: stats.total_volume,
                variance: report,
            },
        );
    }

    // market as a single security
    let market_tape = aggregate_market(tapes)?;
    let market_price = base.price_per_share();
    cross_check_variance(&market_tape, market_price, options.consistency_tolerance)?;
    let market_stats = tape::moments(&market_tape)?;
    let market_theta_seed = if theta_markowitz_market.is_nan() {
        0.0
    } else {
        theta_markowitz_market
    };
    let market = EntitySection {
        base_price: market_price,
        vwap: market_stats.vwap,
        variance: variance_report(&market_tape, market_price, market_theta_seed)?,
    };

    // portfolio as a single security
    let norm = normalize_to_portfolio(tapes, spec)?;
    let portfolio_price = spec.price_per_share();
    cross_check_variance(norm.tape(), portfolio_price, options.consistency_tolerance)?;
    let portfolio_stats = tape::moments(norm.tape())?;
    let portfolio = EntitySection {
        base_price: portfolio_price,
        vwap: portfolio_stats.vwap,
        variance: variance_report(norm.tape(), portfolio_price, theta_markowitz_portfolio)?,
    };

    let markowitz = MarkowitzSection {
        theta_portfolio: theta_markowitz_portfolio,
        theta_market: theta_markowitz_market,
        difference,
        difference_direct: theta_markowitz_portfolio - theta_markowitz_market,
        ratio_market_over_portfolio: (theta_markowitz_portfolio > 0.0
            && theta_markowitz_market.is_finite())
        .then(|| theta_markowitz_market / theta_markowitz_portfolio),
    };

    let returns = Section::from_result(return_difference(tapes, spec, base));
    let chi = Section::from_result(
        chi_decomposition(&norm.volumes(), &market_tape.volumes()).map(|d| ChiSection {
            chi2: d.chi2,
            chi_m2: d.chi_m2,
            chi_gamma2: d.chi_gamma2,
            xi_m: d.xi_m,
            xi_gamma: d.xi_gamma,
            omega: d.omega,
            omega_degenerate: d.omega_degenerate,
            identity_lhs: d.one_plus_chi2(),
            identity_rhs: d.recomposed(),
        }),
    );

    let liquidity = liquidity_report(spec, tapes, options.liquidity_threshold)?;
    if !liquidity.pass {
        notes.push(format!(
            "liquidity check failed for {} of {} securities: estimates describe trades the \
             portfolio itself would visibly move",
            liquidity.failing().len(),
            liquidity.entries.len()
        ));
    }

    let mut shares = BTreeMap::new();
    for (idx, id) in shares_snapshot.ids.iter().enumerate() {
        shares.insert(
            id.to_string(),
            ShareRow {
                invested_fraction: value_weights[idx],
                holding_share: volume_weights[idx],
                value_share: shares_snapshot.value_shares[idx],
                volume_share: shares_snapshot.volume_shares[idx],
            },
        );
    }

    let window = WindowSection {
        center_time: tapes.window().center_time(),
        duration: tapes.window().duration(),
        tick_count: tapes.window().tick_count(),
        tick_span: tapes.window().tick_span(),
    };

    let mut summary = vec![
        format!(
            "portfolio: mean return {}, market-based variance {}, covariance variance {}, taylor {}",
            sig(portfolio.variance.mean_return),
            sig(portfolio.variance.theta_market_based),
            sig(portfolio.variance.theta_markowitz),
            sig(portfolio.variance.theta_taylor),
        ),
        format!(
            "market: mean return {}, market-based variance {}, covariance variance {}",
            sig(market.variance.mean_return),
            sig(market.variance.theta_market_based),
            sig(market.variance.theta_markowitz),
        ),
        format!(
            "variance-to-return ratios: portfolio mu {}, market mu {}",
            sig(portfolio.variance.mu),
            sig(market.variance.mu),
        ),
    ];
    if let Some(ratio) = markowitz.ratio_market_over_portfolio {
        summary.push(format!(
            "covariance variances: market / portfolio = {}",
            sig(ratio)
        ));
    }
    if let Section::Ok(ret) = &returns {
        summary.push(format!(
            "returns: portfolio {} vs market {} (gap {})",
            sig(ret.portfolio_return),
            sig(ret.market_return),
            sig(ret.difference),
        ));
    }
    summary.push(format!(
        "liquidity: {} at threshold {}",
        if liquidity.pass { "pass" } else { "FAIL" },
        sig(liquidity.threshold),
    ));

    Ok(AnalysisReport {
        window,
        shares,
        securities,
        market,
        portfolio,
        markowitz,
        returns,
        chi_decomposition: chi,
        liquidity,
        notes,
        summary,
    })
}
