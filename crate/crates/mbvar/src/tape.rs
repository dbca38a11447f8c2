//! Trade tapes on a shared tick grid and the per-window moment statistics
//! every other module consumes.
//!
//! A tape is a sequence of (value, volume) trade pairs observed over an
//! averaging window. Prices are always the ratio value/volume and are
//! never stored, so value, volume and price can never disagree. All
//! moments use population (1/N) normalization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Slack allowed when asserting |a| <= 1 before clamping.
pub const CORRELATION_SLACK: f64 = 1e-12;

/// Opaque security identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SecurityId(String);

impl SecurityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SecurityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SecurityId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for SecurityId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// A single trade: monetary value and share volume.
///
/// The traded price is `value / volume`. Zero or negative volumes are
/// rejected at construction so the price is always defined and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeTick {
    value: f64,
    volume: f64,
}

impl TradeTick {
    pub fn new(value: f64, volume: f64) -> Result<Self> {
        if !volume.is_finite() || volume <= 0.0 {
            return Err(Error::InvalidTick(format!(
                "volume must be finite and positive, got {volume}"
            )));
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidTick(format!(
                "value must be finite and positive so the implied price is positive, got {value}"
            )));
        }
        Ok(Self { value, volume })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Implied trade price, value / volume.
    pub fn price(&self) -> f64 {
        self.value / self.volume
    }
}

/// The averaging window: N consecutive ticks spaced by a fixed span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingWindow {
    center_time: f64,
    tick_count: usize,
    tick_span: f64,
}

impl AveragingWindow {
    pub fn new(center_time: f64, tick_count: usize, tick_span: f64) -> Result<Self> {
        if tick_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "window needs at least two ticks, got {tick_count}"
            )));
        }
        if !tick_span.is_finite() || tick_span <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tick span must be positive, got {tick_span}"
            )));
        }
        if !center_time.is_finite() {
            return Err(Error::InvalidConfig("window center must be finite".into()));
        }
        Ok(Self {
            center_time,
            tick_count,
            tick_span,
        })
    }

    /// Window with unit tick span centered so it covers [0, N].
    pub fn unit(tick_count: usize) -> Result<Self> {
        Self::new(tick_count as f64 / 2.0, tick_count, 1.0)
    }

    /// Build from all four quantities, checking count * span == duration
    /// to 1e-9 relative.
    pub fn from_parts(
        center_time: f64,
        duration: f64,
        tick_count: usize,
        tick_span: f64,
    ) -> Result<Self> {
        let w = Self::new(center_time, tick_count, tick_span)?;
        let implied = w.duration();
        if (implied - duration).abs() > 1e-9 * duration.abs().max(implied.abs()) {
            return Err(Error::InvalidConfig(format!(
                "window duration {duration} disagrees with tick_count * tick_span = {implied}"
            )));
        }
        Ok(w)
    }

    pub fn center_time(&self) -> f64 {
        self.center_time
    }

    pub fn tick_count(&self) -> usize {
        self.tick_count
    }

    pub fn tick_span(&self) -> f64 {
        self.tick_span
    }

    pub fn duration(&self) -> f64 {
        self.tick_count as f64 * self.tick_span
    }
}

/// Trade series of one security (or anything traded like one) over the
/// window, at least two ticks long.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityTape {
    id: SecurityId,
    ticks: Vec<TradeTick>,
}

impl SecurityTape {
    pub fn new(id: impl Into<SecurityId>, ticks: Vec<TradeTick>) -> Result<Self> {
        if ticks.len() < 2 {
            return Err(Error::InvalidTape(format!(
                "a tape needs at least two ticks, got {}",
                ticks.len()
            )));
        }
        Ok(Self {
            id: id.into(),
            ticks,
        })
    }

    /// Convenience constructor from raw (value, volume) pairs.
    pub fn from_pairs(id: impl Into<SecurityId>, pairs: &[(f64, f64)]) -> Result<Self> {
        let ticks = pairs
            .iter()
            .map(|&(c, u)| TradeTick::new(c, u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(id, ticks)
    }

    pub fn id(&self) -> &SecurityId {
        &self.id
    }

    pub fn ticks(&self) -> &[TradeTick] {
        &self.ticks
    }

    pub fn tick_count(&self) -> usize {
        self.ticks.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.ticks.iter().map(TradeTick::value).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.ticks.iter().map(TradeTick::volume).collect()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.ticks.iter().map(TradeTick::price).collect()
    }
}

/// Aligned trade tapes of J securities on one common grid.
///
/// Securities are stored sorted by id so every downstream sum has a
/// deterministic evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTape {
    securities: Vec<SecurityTape>,
    window: AveragingWindow,
}

impl MarketTape {
    pub fn new(mut securities: Vec<SecurityTape>, window: AveragingWindow) -> Result<Self> {
        if securities.is_empty() {
            return Err(Error::InvalidTape(
                "market tape needs at least one security".into(),
            ));
        }
        let n = securities[0].tick_count();
        for tape in &securities {
            if tape.tick_count() != n {
                return Err(Error::Grid(format!(
                    "security {} has {} ticks, expected {} (common grid)",
                    tape.id(),
                    tape.tick_count(),
                    n
                )));
            }
        }
        if window.tick_count() != n {
            return Err(Error::InvalidConfig(format!(
                "window covers {} ticks but tapes have {}",
                window.tick_count(),
                n
            )));
        }
        securities.sort_by(|a, b| a.id().cmp(b.id()));
        for pair in securities.windows(2) {
            if pair[0].id() == pair[1].id() {
                return Err(Error::InvalidTape(format!(
                    "duplicate security id {}",
                    pair[0].id()
                )));
            }
        }
        Ok(Self { securities, window })
    }

    /// Same securities under a unit window.
    pub fn with_unit_window(securities: Vec<SecurityTape>) -> Result<Self> {
        let n = securities
            .first()
            .map(SecurityTape::tick_count)
            .ok_or_else(|| Error::InvalidTape("market tape needs at least one security".into()))?;
        Self::new(securities, AveragingWindow::unit(n)?)
    }

    /// Replace the window, keeping the tick data.
    pub fn rewindowed(&self, window: AveragingWindow) -> Result<Self> {
        Self::new(self.securities.clone(), window)
    }

    pub fn securities(&self) -> &[SecurityTape] {
        &self.securities
    }

    pub fn window(&self) -> &AveragingWindow {
        &self.window
    }

    pub fn security_count(&self) -> usize {
        self.securities.len()
    }

    pub fn tick_count(&self) -> usize {
        self.securities[0].tick_count()
    }

    pub fn ids(&self) -> Vec<SecurityId> {
        self.securities.iter().map(|t| t.id().clone()).collect()
    }

    pub fn get(&self, id: &SecurityId) -> Option<&SecurityTape> {
        self.securities
            .binary_search_by(|t| t.id().cmp(id))
            .ok()
            .map(|i| &self.securities[i])
    }
}

/// First and second trade moments of one tape over the window, and the
/// dimensionless coefficients derived from them.
///
/// `psi2` and `chi2` are the squared coefficients of variation of trade
/// values and volumes; `phi` is the value-volume covariance normalized by
/// the product of the means. All covariances use 1/N normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeStats {
    /// Mean trade value over the window.
    pub mean_value: f64,
    /// Mean trade volume over the window.
    pub mean_volume: f64,
    /// Mean squared trade value.
    pub mean_sq_value: f64,
    /// Mean squared trade volume.
    pub mean_sq_volume: f64,
    /// Population variance of trade values.
    pub cov_vv: f64,
    /// Population variance of trade volumes.
    pub cov_uu: f64,
    /// Population covariance of values with volumes.
    pub cov_vu: f64,
    /// Squared coefficient of variation of values, cov_vv / mean_value^2.
    pub psi2: f64,
    /// Squared coefficient of variation of volumes, cov_uu / mean_volume^2.
    pub chi2: f64,
    /// Normalized value-volume covariance, cov_vu / (mean_value * mean_volume).
    pub phi: f64,
    /// Volume weighted average price, total_value / total_volume.
    pub vwap: f64,
    /// Total traded value over the window.
    pub total_value: f64,
    /// Total traded volume over the window.
    pub total_volume: f64,
}

impl TradeStats {
    pub fn psi(&self) -> f64 {
        self.psi2.max(0.0).sqrt()
    }

    pub fn chi(&self) -> f64 {
        self.chi2.max(0.0).sqrt()
    }
}

/// All trade moments of a tape in one pass.
pub fn moments(tape: &SecurityTape) -> Result<TradeStats> {
    let n = tape.tick_count() as f64;
    let values = tape.values();
    let volumes = tape.volumes();

    let total_value = numeric::sum(values.iter().copied());
    let total_volume = numeric::sum(volumes.iter().copied());
    if total_volume <= 0.0 {
        return Err(Error::DegenerateTape(format!(
            "security {}: total traded volume is zero",
            tape.id()
        )));
    }
    let mean_value = total_value / n;
    let mean_volume = total_volume / n;
    if mean_value <= 0.0 {
        return Err(Error::DegenerateTape(format!(
            "security {}: mean trade value is zero, coefficients of variation undefined",
            tape.id()
        )));
    }

    let cov_vv = numeric::central_sq(&values, mean_value);
    let cov_uu = numeric::central_sq(&volumes, mean_volume);
    let cov_vu = numeric::central_cross(&values, &volumes, mean_value, mean_volume);

    Ok(TradeStats {
        mean_value,
        mean_volume,
        mean_sq_value: numeric::mean_sq(&values),
        mean_sq_volume: numeric::mean_sq(&volumes),
        cov_vv,
        cov_uu,
        cov_vu,
        psi2: cov_vv / (mean_value * mean_value),
        chi2: cov_uu / (mean_volume * mean_volume),
        phi: cov_vu / (mean_value * mean_volume),
        vwap: total_value / total_volume,
        total_value,
        total_volume,
    })
}

/// Volume weighted average price of the tape.
pub fn vwap(tape: &SecurityTape) -> Result<f64> {
    let total_value = numeric::sum(tape.ticks().iter().map(TradeTick::value));
    let total_volume = numeric::sum(tape.ticks().iter().map(TradeTick::volume));
    if total_volume <= 0.0 {
        return Err(Error::DegenerateTape(format!(
            "security {}: total traded volume is zero",
            tape.id()
        )));
    }
    Ok(total_value / total_volume)
}

/// Correlation constant of trade values with trade volumes,
/// `a = phi / (psi * chi)`, guaranteed in [-1, 1].
///
/// Undefined when either coefficient of variation vanishes; the caller
/// decides how to handle that case (the Taylor reconstruction uses 0
/// because the term multiplied by `a` vanishes with it).
pub fn correlation_constant(stats: &TradeStats) -> Result<f64> {
    let denom = (stats.psi2.max(0.0) * stats.chi2.max(0.0)).sqrt();
    if denom == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "psi or chi is zero (constant values or constant volumes)".into(),
        ));
    }
    let a = stats.phi / denom;
    if a.abs() > 1.0 + CORRELATION_SLACK {
        return Err(Error::InternalConsistency(format!(
            "correlation constant {a} exceeds [-1, 1] beyond tolerance"
        )));
    }
    Ok(a.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_tick_tape() -> SecurityTape {
        SecurityTape::from_pairs("x", &[(10.0, 5.0), (24.0, 8.0)]).unwrap()
    }

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn tick_rejects_zero_and_negative_volume() {
        assert!(TradeTick::new(1.0, 0.0).is_err());
        assert!(TradeTick::new(1.0, -2.0).is_err());
        assert!(TradeTick::new(-1.0, 2.0).is_err());
        assert!(TradeTick::new(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn tape_needs_two_ticks() {
        assert!(SecurityTape::from_pairs("x", &[(1.0, 1.0)]).is_err());
        assert!(SecurityTape::from_pairs("x", &[]).is_err());
    }

    #[test]
    fn window_product_identity() {
        let w = AveragingWindow::new(0.0, 10, 0.5).unwrap();
        assert_eq!(w.duration(), 5.0);
        assert!(AveragingWindow::from_parts(0.0, 5.0, 10, 0.5).is_ok());
        assert!(AveragingWindow::from_parts(0.0, 5.1, 10, 0.5).is_err());
    }

    #[test]
    fn market_tape_rejects_ragged_grid_and_duplicates() {
        let a = SecurityTape::from_pairs("a", &[(1.0, 1.0), (2.0, 1.0)]).unwrap();
        let b = SecurityTape::from_pairs("b", &[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).unwrap();
        assert!(matches!(
            MarketTape::with_unit_window(vec![a.clone(), b]),
            Err(Error::Grid(_))
        ));
        let a2 = SecurityTape::from_pairs("a", &[(5.0, 2.0), (6.0, 2.0)]).unwrap();
        assert!(MarketTape::with_unit_window(vec![a, a2]).is_err());
    }

    #[test]
    fn worked_two_tick_moments() {
        let stats = moments(&two_tick_tape()).unwrap();
        assert!(rel_eq(stats.vwap, 34.0 / 13.0, 1e-15));
        assert!(rel_eq(stats.psi2, 49.0 / 289.0, 1e-15));
        assert!(rel_eq(stats.chi2, 9.0 / 169.0, 1e-15));
        assert!(rel_eq(stats.phi, 21.0 / 221.0, 1e-15));
        assert_eq!(stats.total_value, 34.0);
        assert_eq!(stats.total_volume, 13.0);
    }

    #[test]
    fn constant_price_and_volume_has_no_fluctuation() {
        let tape = SecurityTape::from_pairs("c", &[(6.0, 2.0); 7]).unwrap();
        let stats = moments(&tape).unwrap();
        assert_eq!(stats.vwap, 3.0);
        assert!(stats.psi2.abs() < 1e-30);
        assert!(stats.chi2.abs() < 1e-30);
        assert!(stats.phi.abs() < 1e-30);
    }

    #[test]
    fn constant_volume_kills_chi_and_phi() {
        let tape = SecurityTape::from_pairs("v", &[(10.0, 4.0), (14.0, 4.0), (9.0, 4.0)]).unwrap();
        let stats = moments(&tape).unwrap();
        assert!(stats.chi2.abs() < 1e-30);
        assert!(stats.phi.abs() < 1e-30);
        // psi^2 is the 1/N variance of values over the squared mean
        let mean = 11.0;
        let var = (1.0 + 9.0 + 4.0) / 3.0;
        assert!(rel_eq(stats.psi2, var / (mean * mean), 1e-14));
    }

    #[test]
    fn vwap_examples() {
        assert!(rel_eq(vwap(&two_tick_tape()).unwrap(), 34.0 / 13.0, 1e-15));
        let constant =
            SecurityTape::from_pairs("p", &[(5.0, 1.0), (35.0, 7.0), (500.0, 100.0)]).unwrap();
        assert!(rel_eq(vwap(&constant).unwrap(), 5.0, 1e-15));
        let same = SecurityTape::from_pairs("s", &[(2.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_eq!(vwap(&same).unwrap(), 2.0);
    }

    #[test]
    fn correlation_of_proportional_series_is_one() {
        // values exactly k * volumes
        let tape = SecurityTape::from_pairs("k", &[(6.0, 2.0), (9.0, 3.0), (15.0, 5.0)]).unwrap();
        let a = correlation_constant(&moments(&tape).unwrap()).unwrap();
        assert!(rel_eq(a, 1.0, 1e-12));

        // any two distinct ticks are perfectly correlated
        let a2 = correlation_constant(&moments(&two_tick_tape()).unwrap()).unwrap();
        assert!(rel_eq(a2, 1.0, 1e-12));
    }

    #[test]
    fn orthogonal_value_volume_deviations_give_zero() {
        let tape =
            SecurityTape::from_pairs("o", &[(10.0, 1.0), (10.0, 2.0), (20.0, 1.0), (20.0, 2.0)])
                .unwrap();
        let a = correlation_constant(&moments(&tape).unwrap()).unwrap();
        assert!(a.abs() < 1e-14);
    }

    #[test]
    fn correlation_undefined_for_constant_volume() {
        let tape = SecurityTape::from_pairs("v", &[(10.0, 4.0), (14.0, 4.0)]).unwrap();
        assert!(matches!(
            correlation_constant(&moments(&tape).unwrap()),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn joint_mean_identity_holds() {
        // E[CU] = mean_value * mean_volume * (1 + phi)
        let tape = two_tick_tape();
        let stats = moments(&tape).unwrap();
        let joint = numeric::sum(tape.ticks().iter().map(|t| t.value() * t.volume()))
            / tape.tick_count() as f64;
        let reconstructed = stats.mean_value * stats.mean_volume * (1.0 + stats.phi);
        assert!(rel_eq(joint, reconstructed, 1e-14));
    }

    fn arb_tape() -> impl Strategy<Value = SecurityTape> {
        proptest::collection::vec((0.1f64..1e4, 0.1f64..1e4), 2..64).prop_map(|pairs| {
            let ticks = pairs
                .into_iter()
                .map(|(p, u)| TradeTick::new(p * u, u).unwrap())
                .collect();
            SecurityTape::new("t", ticks).unwrap()
        })
    }

    proptest! {
        #[test]
        fn vwap_equals_mean_ratio(tape in arb_tape()) {
            let stats = moments(&tape).unwrap();
            prop_assert!(rel_eq(stats.vwap, stats.mean_value / stats.mean_volume, 1e-12));
            prop_assert!(rel_eq(stats.vwap, stats.total_value / stats.total_volume, 1e-12));
        }

        #[test]
        fn mean_sq_volume_identity(tape in arb_tape()) {
            let stats = moments(&tape).unwrap();
            let rhs = stats.mean_volume * stats.mean_volume * (1.0 + stats.chi2);
            prop_assert!(rel_eq(stats.mean_sq_volume, rhs, 1e-12));
        }

        #[test]
        fn cauchy_schwarz_bound(tape in arb_tape()) {
            let stats = moments(&tape).unwrap();
            prop_assert!(stats.phi.abs() <= stats.psi() * stats.chi() + 1e-12);
            if stats.psi2 > 0.0 && stats.chi2 > 0.0 {
                let a = correlation_constant(&stats).unwrap();
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn joint_scaling_leaves_coefficients(tape in arb_tape(), k in 0.1f64..100.0) {
            let scaled = SecurityTape::new(
                "t",
                tape.ticks()
                    .iter()
                    .map(|t| TradeTick::new(t.value() * k, t.volume() * k).unwrap())
                    .collect(),
            )
            .unwrap();
            let s0 = moments(&tape).unwrap();
            let s1 = moments(&scaled).unwrap();
            prop_assert!(rel_eq(s0.psi2, s1.psi2, 1e-12) || (s0.psi2.abs() < 1e-20 && s1.psi2.abs() < 1e-20));
            prop_assert!(rel_eq(s0.chi2, s1.chi2, 1e-12) || (s0.chi2.abs() < 1e-20 && s1.chi2.abs() < 1e-20));
            prop_assert!(rel_eq(s0.vwap, s1.vwap, 1e-12));
        }

        #[test]
        fn value_scaling_scales_vwap_only(tape in arb_tape(), k in 0.1f64..100.0) {
            let scaled = SecurityTape::new(
                "t",
                tape.ticks()
                    .iter()
                    .map(|t| TradeTick::new(t.value() * k, t.volume()).unwrap())
                    .collect(),
            )
            .unwrap();
            let s0 = moments(&tape).unwrap();
            let s1 = moments(&scaled).unwrap();
            prop_assert!(rel_eq(s1.vwap, k * s0.vwap, 1e-12));
            prop_assert!(rel_eq(s0.chi2, s1.chi2, 1e-12) || (s0.chi2.abs() < 1e-20 && s1.chi2.abs() < 1e-20));
        }
    }
}
