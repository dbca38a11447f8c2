//! The market at the base time, the investor's fixed portfolio, and the
//! transformations that model either one as a single traded security.
//!
//! The portfolio is collected at a base time strictly before the
//! averaging window and never traded afterwards. Rescaling each
//! security's trades so its window volume equals the held share count
//! turns the observed market tape into a tape of trades "with the
//! portfolio"; summing raw trades across securities turns it into a tape
//! of trades with the entire market.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;
use crate::tape::{MarketTape, SecurityId, SecurityTape, TradeTick};

/// Shares outstanding and base prices of every listed security at the
/// base time, with the capitalization-derived weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketBase {
    ids: Vec<SecurityId>,
    base_prices: Vec<f64>,
    shares_outstanding: Vec<f64>,
    capitalizations: Vec<f64>,
    total_capitalization: f64,
    total_shares: f64,
}

impl MarketBase {
    /// Entries are (id, base price, shares outstanding); sorted by id
    /// internally.
    pub fn new(mut entries: Vec<(SecurityId, f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidConfig(
                "market base needs at least one security".into(),
            ));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "duplicate security id {} in market base",
                    pair[0].0
                )));
            }
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut base_prices = Vec::with_capacity(entries.len());
        let mut shares = Vec::with_capacity(entries.len());
        let mut caps = Vec::with_capacity(entries.len());
        for (id, price, outstanding) in entries {
            if !price.is_finite() || price <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "base price of {id} must be positive, got {price}"
                )));
            }
            if !outstanding.is_finite() || outstanding <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "shares outstanding of {id} must be positive, got {outstanding}"
                )));
            }
            caps.push(price * outstanding);
            ids.push(id);
            base_prices.push(price);
            shares.push(outstanding);
        }
        let total_capitalization = numeric::sum(caps.iter().copied());
        let total_shares = numeric::sum(shares.iter().copied());
        Ok(Self {
            ids,
            base_prices,
            shares_outstanding: shares,
            capitalizations: caps,
            total_capitalization,
            total_shares,
        })
    }

    pub fn ids(&self) -> &[SecurityId] {
        &self.ids
    }

    pub fn base_prices(&self) -> &[f64] {
        &self.base_prices
    }

    pub fn shares_outstanding(&self) -> &[f64] {
        &self.shares_outstanding
    }

    pub fn capitalizations(&self) -> &[f64] {
        &self.capitalizations
    }

    pub fn total_capitalization(&self) -> f64 {
        self.total_capitalization
    }

    pub fn total_shares(&self) -> f64 {
        self.total_shares
    }

    /// Market price per outstanding share at the base time.
    pub fn price_per_share(&self) -> f64 {
        self.total_capitalization / self.total_shares
    }

    /// Relative capitalizations; sum to one.
    pub fn value_weights(&self) -> Vec<f64> {
        self.capitalizations
            .iter()
            .map(|q| q / self.total_capitalization)
            .collect()
    }

    /// Relative share counts; sum to one.
    pub fn volume_weights(&self) -> Vec<f64> {
        self.shares_outstanding
            .iter()
            .map(|w| w / self.total_shares)
            .collect()
    }
}

/// The investor's holdings and the base prices they were valued at.
///
/// Holdings may be zero for securities the portfolio skips; at least one
/// must be positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    ids: Vec<SecurityId>,
    holdings: Vec<f64>,
    base_prices: Vec<f64>,
    position_values: Vec<f64>,
    total_value: f64,
    total_shares: f64,
}

impl PortfolioSpec {
    /// Entries are (id, shares held, base price); sorted by id internally.
    pub fn new(mut entries: Vec<(SecurityId, f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidConfig(
                "portfolio needs at least one security".into(),
            ));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "duplicate security id {} in portfolio",
                    pair[0].0
                )));
            }
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut holdings = Vec::with_capacity(entries.len());
        let mut base_prices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (id, held, price) in entries {
            if !held.is_finite() || held < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "holding of {id} must be nonnegative, got {held}"
                )));
            }
            if !price.is_finite() || price <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "base price of {id} must be positive, got {price}"
                )));
            }
            values.push(price * held);
            ids.push(id);
            holdings.push(held);
            base_prices.push(price);
        }
        let total_value = numeric::sum(values.iter().copied());
        let total_shares = numeric::sum(holdings.iter().copied());
        if total_shares <= 0.0 || total_value <= 0.0 {
            return Err(Error::InvalidConfig(
                "portfolio must hold a positive number of shares".into(),
            ));
        }
        Ok(Self {
            ids,
            holdings,
            base_prices,
            position_values: values,
            total_value,
            total_shares,
        })
    }

    pub fn ids(&self) -> &[SecurityId] {
        &self.ids
    }

    pub fn holdings(&self) -> &[f64] {
        &self.holdings
    }

    pub fn base_prices(&self) -> &[f64] {
        &self.base_prices
    }

    pub fn position_values(&self) -> &[f64] {
        &self.position_values
    }

    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    pub fn total_shares(&self) -> f64 {
        self.total_shares
    }

    /// Portfolio price per held share at the base time.
    pub fn price_per_share(&self) -> f64 {
        self.total_value / self.total_shares
    }

    /// Relative amounts invested per security; sum to one.
    pub fn value_weights(&self) -> Vec<f64> {
        self.position_values
            .iter()
            .map(|q| q / self.total_value)
            .collect()
    }

    /// Relative held share counts; sum to one.
    pub fn volume_weights(&self) -> Vec<f64> {
        self.holdings
            .iter()
            .map(|w| w / self.total_shares)
            .collect()
    }

    /// True when holdings are proportional to the market's shares
    /// outstanding, i.e. the portfolio is a slice of the entire market.
    pub fn is_market_proportional(&self, base: &MarketBase) -> bool {
        if self.ids != base.ids() {
            return false;
        }
        let scale = self.total_shares / base.total_shares();
        self.holdings
            .iter()
            .zip(base.shares_outstanding())
            .all(|(held, outstanding)| {
                let expected = scale * outstanding;
                (held - expected).abs() <= 1e-9 * expected.abs().max(held.abs())
            })
    }
}

/// Portfolio holding every security in proportion to its market share,
/// worth `budget` at the base time.
pub fn market_proportional_portfolio(base: &MarketBase, budget: f64) -> Result<PortfolioSpec> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "budget must be positive, got {budget}"
        )));
    }
    let scale = budget / base.total_capitalization();
    let entries = base
        .ids()
        .iter()
        .zip(base.base_prices())
        .zip(base.shares_outstanding())
        .map(|((id, &price), &outstanding)| (id.clone(), scale * outstanding, price))
        .collect();
    PortfolioSpec::new(entries)
}

/// The observed market tape rescaled into trades with the portfolio as a
/// single security.
///
/// Per security, the scale is held shares over window traded volume, so
/// the rescaled tape trades exactly the held share count during the
/// window; per-tick prices are unchanged by the rescaling.
#[derive(Debug, Clone)]
pub struct NormalizedPortfolioTape {
    tape: SecurityTape,
    scales: Vec<f64>,
}

impl NormalizedPortfolioTape {
    /// The portfolio traded as a single security.
    pub fn tape(&self) -> &SecurityTape {
        &self.tape
    }

    /// Per-security normalization scales, aligned with the market tape's
    /// sorted securities.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.tape.volumes()
    }
}

/// Rescale the market tape into the portfolio-as-single-security tape.
pub fn normalize_to_portfolio(
    tapes: &MarketTape,
    spec: &PortfolioSpec,
) -> Result<NormalizedPortfolioTape> {
    check_alignment(tapes, spec.ids())?;
    let scales = spec
        .ids()
        .iter()
        .zip(spec.holdings())
        .map(|(id, &held)| {
            let tape = tapes.get(id).expect("alignment checked");
            let traded = numeric::sum(tape.ticks().iter().map(TradeTick::volume));
            if traded <= 0.0 {
                return Err(Error::DegenerateTape(format!(
                    "security {id}: no traded volume to normalize against"
                )));
            }
            Ok(held / traded)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = tapes.tick_count();
    let mut ticks = Vec::with_capacity(n);
    for i in 0..n {
        let value = numeric::sum(
            tapes
                .securities()
                .iter()
                .zip(&scales)
                .map(|(t, &k)| k * t.ticks()[i].value()),
        );
        let volume = numeric::sum(
            tapes
                .securities()
                .iter()
                .zip(&scales)
                .map(|(t, &k)| k * t.ticks()[i].volume()),
        );
        ticks.push(TradeTick::new(value, volume)?);
    }
    Ok(NormalizedPortfolioTape {
        tape: SecurityTape::new("portfolio", ticks)?,
        scales,
    })
}

/// Sum trades across all securities per tick: the entire market traded
/// as one security.
pub fn aggregate_market(tapes: &MarketTape) -> Result<SecurityTape> {
    let n = tapes.tick_count();
    let mut ticks = Vec::with_capacity(n);
    for i in 0..n {
        let value = numeric::sum(tapes.securities().iter().map(|t| t.ticks()[i].value()));
        let volume = numeric::sum(tapes.securities().iter().map(|t| t.ticks()[i].volume()));
        ticks.push(TradeTick::new(value, volume)?);
    }
    SecurityTape::new("market", ticks)
}

/// Per-security shares of current window trade totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketShareSnapshot {
    pub ids: Vec<SecurityId>,
    /// Share of total traded value per security; sums to one.
    pub value_shares: Vec<f64>,
    /// Share of total traded volume per security; sums to one.
    pub volume_shares: Vec<f64>,
}

/// Relative traded values and volumes of each security over the window.
pub fn market_shares(tapes: &MarketTape) -> Result<MarketShareSnapshot> {
    let totals: Vec<(f64, f64)> = tapes
        .securities()
        .iter()
        .map(|t| {
            (
                numeric::sum(t.ticks().iter().map(TradeTick::value)),
                numeric::sum(t.ticks().iter().map(TradeTick::volume)),
            )
        })
        .collect();
    let grand_value = numeric::sum(totals.iter().map(|&(c, _)| c));
    let grand_volume = numeric::sum(totals.iter().map(|&(_, u)| u));
    if grand_value <= 0.0 || grand_volume <= 0.0 {
        return Err(Error::DegenerateTape(
            "market has no traded value or volume".into(),
        ));
    }
    Ok(MarketShareSnapshot {
        ids: tapes.ids(),
        value_shares: totals.iter().map(|&(c, _)| c / grand_value).collect(),
        volume_shares: totals.iter().map(|&(_, u)| u / grand_volume).collect(),
    })
}

/// One security's holdings-to-traded-volume comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiquidityEntry {
    pub security: SecurityId,
    pub holding: f64,
    pub traded_volume: f64,
    /// Holdings over window traded volume; `None` marks an untradeable
    /// security (no volume at all), which always fails.
    pub ratio: Option<f64>,
    pub pass: bool,
}

/// Feasibility of liquidating the portfolio against observed volumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiquidityReport {
    pub threshold: f64,
    pub entries: Vec<LiquidityEntry>,
    pub pass: bool,
}

impl LiquidityReport {
    pub fn failing(&self) -> Vec<&LiquidityEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }
}

/// Compare each holding against the security's window traded volume.
///
/// A security fails when its holding exceeds `threshold` times the
/// traded volume: selling the position inside a comparable window would
/// visibly move the very trades the estimates are built from.
pub fn liquidity_report(
    spec: &PortfolioSpec,
    tapes: &MarketTape,
    threshold: f64,
) -> Result<LiquidityReport> {
    if !threshold.is_finite() || threshold <= 0.0 || threshold >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "liquidity threshold must be in (0, 1), got {threshold}"
        )));
    }
    check_alignment(tapes, spec.ids())?;
    let entries: Vec<LiquidityEntry> = spec
        .ids()
        .iter()
        .zip(spec.holdings())
        .map(|(id, &held)| {
            let tape = tapes.get(id).expect("alignment checked");
            let traded = numeric::sum(tape.ticks().iter().map(TradeTick::volume));
            let (ratio, pass) = if traded > 0.0 {
                let r = held / traded;
                (Some(r), r <= threshold)
            } else {
                (None, false)
            };
            LiquidityEntry {
                security: id.clone(),
                holding: held,
                traded_volume: traded,
                ratio,
                pass,
            }
        })
        .collect();
    let pass = entries.iter().all(|e| e.pass);
    Ok(LiquidityReport {
        threshold,
        entries,
        pass,
    })
}

/// Both sides must list exactly the same securities.
pub(crate) fn check_alignment(tapes: &MarketTape, ids: &[SecurityId]) -> Result<()> {
    let tape_ids = tapes.ids();
    if tape_ids != ids {
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| tapes.get(id).is_none())
            .map(|id| id.to_string())
            .collect();
        let extra: Vec<String> = tape_ids
            .iter()
            .filter(|id| !ids.contains(id))
            .map(|id| id.to_string())
            .collect();
        return Err(Error::MissingSecurity(format!(
            "portfolio and tape cover different securities (missing from tape: [{}], missing from portfolio: [{}])",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape;
    use proptest::prelude::*;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn two_security_base() -> MarketBase {
        MarketBase::new(vec![("a".into(), 1.0, 100.0), ("b".into(), 2.0, 50.0)]).unwrap()
    }

    #[test]
    fn weights_sum_to_one() {
        let base = two_security_base();
        assert!(rel_eq(numeric::sum(base.value_weights()), 1.0, 1e-12));
        assert!(rel_eq(numeric::sum(base.volume_weights()), 1.0, 1e-12));
        assert!(rel_eq(base.total_capitalization(), 200.0, 1e-15));
        assert!(rel_eq(base.price_per_share(), 200.0 / 150.0, 1e-15));
    }

    #[test]
    fn proportional_portfolio_worked_example() {
        let base = two_security_base();
        let spec = market_proportional_portfolio(&base, 20.0).unwrap();
        assert_eq!(spec.holdings(), &[10.0, 5.0]);
        assert!(rel_eq(spec.price_per_share(), 20.0 / 15.0, 1e-15));
        assert!(rel_eq(
            spec.price_per_share(),
            base.price_per_share(),
            1e-12
        ));
        assert!(spec.is_market_proportional(&base));
    }

    #[test]
    fn full_budget_reproduces_market() {
        let base = two_security_base();
        let spec = market_proportional_portfolio(&base, base.total_capitalization()).unwrap();
        assert_eq!(spec.holdings(), base.shares_outstanding());
    }

    #[test]
    fn budget_scaling_keeps_weights() {
        let base = two_security_base();
        let small =
            market_proportional_portfolio(&base, 0.01 * base.total_capitalization()).unwrap();
        for (w, b) in small.value_weights().iter().zip(base.value_weights()) {
            assert!(rel_eq(*w, b, 1e-12));
        }
        for (x, b) in small.volume_weights().iter().zip(base.volume_weights()) {
            assert!(rel_eq(*x, b, 1e-12));
        }
    }

    fn worked_market() -> MarketTape {
        MarketTape::with_unit_window(vec![
            SecurityTape::from_pairs("a", &[(10.0, 5.0), (24.0, 8.0)]).unwrap(),
            SecurityTape::from_pairs("b", &[(10.0, 5.0), (24.0, 8.0)]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn normalization_worked_example() {
        let tapes = worked_market();
        let spec =
            PortfolioSpec::new(vec![("a".into(), 13.0, 2.0), ("b".into(), 13.0, 2.0)]).unwrap();
        let norm = normalize_to_portfolio(&tapes, &spec).unwrap();
        assert_eq!(norm.scales(), &[1.0, 1.0]);
        let q: Vec<f64> = norm.tape().values();
        let w: Vec<f64> = norm.tape().volumes();
        assert_eq!(q, vec![20.0, 48.0]);
        assert_eq!(w, vec![10.0, 16.0]);
    }

    #[test]
    fn single_security_normalization_keeps_prices() {
        let tapes = MarketTape::with_unit_window(vec![SecurityTape::from_pairs(
            "a",
            &[(10.0, 5.0), (24.0, 8.0), (6.0, 1.0)],
        )
        .unwrap()])
        .unwrap();
        let spec = PortfolioSpec::new(vec![("a".into(), 7.0, 2.0)]).unwrap();
        let norm = normalize_to_portfolio(&tapes, &spec).unwrap();
        let raw = tapes.securities()[0].prices();
        let scaled = norm.tape().prices();
        for (r, s) in raw.iter().zip(scaled) {
            assert!(rel_eq(*r, s, 1e-12));
        }
        // total normalized volume equals the holding
        assert!(rel_eq(numeric::sum(norm.tape().volumes()), 7.0, 1e-12));
    }

    #[test]
    fn normalization_rejects_mismatched_ids() {
        let tapes = worked_market();
        let spec = PortfolioSpec::new(vec![("a".into(), 1.0, 2.0)]).unwrap();
        assert!(matches!(
            normalize_to_portfolio(&tapes, &spec),
            Err(Error::MissingSecurity(_))
        ));
    }

    #[test]
    fn aggregation_identity_and_worked_tick() {
        let single = MarketTape::with_unit_window(vec![SecurityTape::from_pairs(
            "a",
            &[(10.0, 5.0), (24.0, 8.0)],
        )
        .unwrap()])
        .unwrap();
        let agg = aggregate_market(&single).unwrap();
        assert_eq!(agg.values(), vec![10.0, 24.0]);
        assert_eq!(agg.volumes(), vec![5.0, 8.0]);

        let two = MarketTape::with_unit_window(vec![
            SecurityTape::from_pairs("a", &[(10.0, 5.0), (10.0, 5.0)]).unwrap(),
            SecurityTape::from_pairs("b", &[(6.0, 1.0), (6.0, 1.0)]).unwrap(),
        ])
        .unwrap();
        let agg = aggregate_market(&two).unwrap();
        assert_eq!(agg.ticks()[0].value(), 16.0);
        assert_eq!(agg.ticks()[0].volume(), 6.0);
        assert!(rel_eq(agg.ticks()[0].price(), 8.0 / 3.0, 1e-15));
    }

    #[test]
    fn aggregating_constant_volumes_stays_constant() {
        let two = MarketTape::with_unit_window(vec![
            SecurityTape::from_pairs("a", &[(10.0, 4.0), (12.0, 4.0), (9.0, 4.0)]).unwrap(),
            SecurityTape::from_pairs("b", &[(6.0, 9.0), (7.0, 9.0), (5.0, 9.0)]).unwrap(),
        ])
        .unwrap();
        let agg = aggregate_market(&two).unwrap();
        let stats = tape::moments(&agg).unwrap();
        assert!(stats.chi2 < 1e-30);
    }

    #[test]
    fn market_share_fixtures() {
        // volume split 1:2 across securities
        let toy_a = MarketTape::with_unit_window(vec![
            SecurityTape::from_pairs("a", &[(10.0, 100.0), (11.0, 100.0)]).unwrap(),
            SecurityTape::from_pairs("b", &[(30.0, 200.0), (33.0, 200.0)]).unwrap(),
        ])
        .unwrap();
        let shares = market_shares(&toy_a).unwrap();
        assert!(rel_eq(shares.volume_shares[0], 1.0 / 3.0, 1e-12));
        assert!(rel_eq(shares.volume_shares[1], 2.0 / 3.0, 1e-12));

        // volume split 3:2
        let toy_b = MarketTape::with_unit_window(vec![
            SecurityTape::from_pairs("a", &[(10.0, 300.0), (11.0, 300.0)]).unwrap(),
            SecurityTape::from_pairs("b", &[(30.0, 200.0), (33.0, 200.0)]).unwrap(),
        ])
        .unwrap();
        let shares = market_shares(&toy_b).unwrap();
        assert!(rel_eq(shares.volume_shares[0], 3.0 / 5.0, 1e-12));
        assert!(rel_eq(shares.volume_shares[1], 2.0 / 5.0, 1e-12));

        // identical tapes split evenly
        let even = MarketTape::with_unit_window(vec![
            SecurityTape::from_pairs("a", &[(10.0, 5.0), (24.0, 8.0)]).unwrap(),
            SecurityTape::from_pairs("b", &[(10.0, 5.0), (24.0, 8.0)]).unwrap(),
            SecurityTape::from_pairs("c", &[(10.0, 5.0), (24.0, 8.0)]).unwrap(),
        ])
        .unwrap();
        let shares = market_shares(&even).unwrap();
        for (x, c) in shares.volume_shares.iter().zip(&shares.value_shares) {
            assert!(rel_eq(*x, 1.0 / 3.0, 1e-12));
            assert!(rel_eq(*c, 1.0 / 3.0, 1e-12));
        }
    }

    #[test]
    fn liquidity_pass_fail_and_listing() {
        let tapes = worked_market(); // each traded volume is 13
        let ok =
            PortfolioSpec::new(vec![("a".into(), 0.13, 2.0), ("b".into(), 0.13, 2.0)]).unwrap();
        let report = liquidity_report(&ok, &tapes, 0.05).unwrap();
        assert!(report.pass);

        let bad =
            PortfolioSpec::new(vec![("a".into(), 13.0, 2.0), ("b".into(), 0.13, 2.0)]).unwrap();
        let report = liquidity_report(&bad, &tapes, 0.05).unwrap();
        assert!(!report.pass);
        assert_eq!(report.failing().len(), 1);
        assert_eq!(report.failing()[0].security.as_str(), "a");
        assert!(rel_eq(report.failing()[0].ratio.unwrap(), 1.0, 1e-12));

        let mixed = PortfolioSpec::new(vec![
            ("a".into(), 0.03 * 13.0, 2.0),
            ("b".into(), 0.07 * 13.0, 2.0),
        ])
        .unwrap();
        let report = liquidity_report(&mixed, &tapes, 0.05).unwrap();
        assert!(!report.pass);
        assert_eq!(report.failing()[0].security.as_str(), "b");
    }

    #[test]
    fn liquidity_threshold_bounds() {
        let tapes = worked_market();
        let spec =
            PortfolioSpec::new(vec![("a".into(), 1.0, 2.0), ("b".into(), 1.0, 2.0)]).unwrap();
        assert!(liquidity_report(&spec, &tapes, 0.0).is_err());
        assert!(liquidity_report(&spec, &tapes, 1.0).is_err());
    }

    fn arb_market(max_j: usize, max_n: usize) -> impl Strategy<Value = MarketTape> {
        (1..=max_j, 2..=max_n).prop_flat_map(|(j, n)| {
            proptest::collection::vec(
                proptest::collection::vec((0.5f64..500.0, 0.5f64..500.0), n..=n),
                j..=j,
            )
            .prop_map(|data| {
                let tapes = data
                    .into_iter()
                    .enumerate()
                    .map(|(k, pairs)| {
                        let ticks = pairs
                            .into_iter()
                            .map(|(p, u)| TradeTick::new(p * u, u).unwrap())
                            .collect();
                        SecurityTape::new(format!("s{k:02}"), ticks).unwrap()
                    })
                    .collect();
                MarketTape::with_unit_window(tapes).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn conservation_of_normalized_volumes(tapes in arb_market(5, 32), seedling in 0.1f64..10.0) {
            let spec = PortfolioSpec::new(
                tapes
                    .ids()
                    .into_iter()
                    .enumerate()
                    .map(|(k, id)| (id, seedling * (k + 1) as f64, 1.0 + k as f64))
                    .collect(),
            )
            .unwrap();
            let norm = normalize_to_portfolio(&tapes, &spec).unwrap();

            // per-security: scaled window volume equals the holding
            for ((id, &held), &scale) in spec.ids().iter().zip(spec.holdings()).zip(norm.scales()) {
                let t = tapes.get(id).unwrap();
                let total = numeric::sum(t.ticks().iter().map(|tk| scale * tk.volume()));
                prop_assert!(rel_eq(total, held, 1e-12));
            }
            // portfolio tape trades the total held share count
            let grand = numeric::sum(norm.tape().volumes());
            prop_assert!(rel_eq(grand, spec.total_shares(), 1e-12));

            // per-tick prices survive the rescaling
            for (t, &scale) in tapes.securities().iter().zip(norm.scales()) {
                for tick in t.ticks() {
                    let scaled = TradeTick::new(scale * tick.value(), scale * tick.volume()).unwrap();
                    prop_assert!(rel_eq(scaled.price(), tick.price(), 1e-12));
                }
            }
        }

        #[test]
        fn shares_sum_to_one(tapes in arb_market(6, 24)) {
            let shares = market_shares(&tapes).unwrap();
            prop_assert!(rel_eq(numeric::sum(shares.value_shares.iter().copied()), 1.0, 1e-12));
            prop_assert!(rel_eq(numeric::sum(shares.volume_shares.iter().copied()), 1.0, 1e-12));
            for (x, c) in shares.volume_shares.iter().zip(&shares.value_shares) {
                prop_assert!((0.0..=1.0).contains(x));
                prop_assert!((0.0..=1.0).contains(c));
            }
        }
    }

    #[test]
    fn proportional_tick_shares_align_portfolio_and_market_prices() {
        // volumes split exactly like base holdings at every tick, so the
        // portfolio tape and the aggregated market tape carry identical
        // per-tick prices and identical VWAP
        let base = two_security_base();
        let spec = market_proportional_portfolio(&base, 30.0).unwrap();
        let x = base.volume_weights();
        let totals = [90.0, 120.0, 60.0];
        let prices = [[3.0, 5.0, 4.0], [7.0, 6.5, 7.25]];
        let tapes = MarketTape::with_unit_window(
            vec!["a", "b"]
                .into_iter()
                .enumerate()
                .map(|(j, id)| {
                    let ticks = totals
                        .iter()
                        .zip(&prices[j])
                        .map(|(&v, &p)| TradeTick::new(p * x[j] * v, x[j] * v).unwrap())
                        .collect();
                    SecurityTape::new(id, ticks).unwrap()
                })
                .collect(),
        )
        .unwrap();

        let norm = normalize_to_portfolio(&tapes, &spec).unwrap();
        let agg = aggregate_market(&tapes).unwrap();
        for (p, m) in norm.tape().prices().iter().zip(agg.prices()) {
            assert!(rel_eq(*p, m, 1e-12));
        }
        assert!(rel_eq(
            tape::vwap(norm.tape()).unwrap(),
            tape::vwap(&agg).unwrap(),
            1e-12
        ));
    }
}
