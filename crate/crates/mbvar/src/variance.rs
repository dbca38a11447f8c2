//! Return and variance estimators.
//!
//! The market-based variance of a single-security-like tape weights
//! per-tick price deviations by squared trade volumes, so random volume
//! fluctuations enter the risk estimate. In closed form it is
//!
//! ```text
//! theta = (psi^2 - 2*phi + chi^2) / (1 + chi^2) * R^2
//! ```
//!
//! with psi, chi, phi from [`crate::tape::TradeStats`] and R the volume
//! weighted mean gross return. [`variance_oracle`] evaluates the same
//! quantity directly from the weighted second central moment of per-tick
//! prices and is kept as an independent cross-check of the closed form.
//!
//! The classical covariance-matrix portfolio variance is the exact
//! constant-volume limit of the market-based form; both are computed here
//! so reports can show them side by side, together with a second-order
//! Taylor reconstruction in the volume coefficient of variation and the
//! decomposition that ties portfolio volume randomness to market volume
//! randomness.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric;
use crate::portfolio::{
    aggregate_market, check_alignment, market_shares, normalize_to_portfolio, MarketBase,
    PortfolioSpec,
};
use crate::tape::{self, MarketTape, SecurityId, SecurityTape, TradeTick};

/// Relative tolerance for the closed-form vs direct variance cross-check.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Computed variances this close below zero are rounding residue and are
/// clamped; anything more negative is an internal error.
pub const NEGATIVE_VARIANCE_SLACK: f64 = 1e-12;

/// Squared coefficients of variation below this are treated as exact
/// zeros when deciding degeneracy flags.
const DEGENERACY_FLOOR: f64 = 1e-24;

/// Per-tick gross returns of a tape against a base price, with the trade
/// volumes that weight them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    base_price: f64,
    returns: Vec<f64>,
    volumes: Vec<f64>,
}

impl ReturnSeries {
    pub fn from_tape(tape: &SecurityTape, base_price: f64) -> Result<Self> {
        if !base_price.is_finite() || base_price <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "base price must be positive, got {base_price}"
            )));
        }
        let returns: Vec<f64> = tape
            .ticks()
            .iter()
            .map(|t| t.price() / base_price)
            .collect();
        Ok(Self {
            base_price,
            returns,
            volumes: tape.volumes(),
        })
    }

    pub fn base_price(&self) -> f64 {
        self.base_price
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Volume weighted mean gross return.
    pub fn volume_weighted_mean(&self) -> f64 {
        let weighted = numeric::sum(self.returns.iter().zip(&self.volumes).map(|(r, u)| r * u));
        weighted / numeric::sum(self.volumes.iter().copied())
    }

    /// Plain arithmetic mean gross return.
    pub fn equal_weight_mean(&self) -> f64 {
        numeric::mean(&self.returns)
    }
}

/// Volume weighted mean gross return: VWAP over the base price.
pub fn mean_return(tape: &SecurityTape, base_price: f64) -> Result<f64> {
    if !base_price.is_finite() || base_price <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "base price must be positive, got {base_price}"
        )));
    }
    Ok(tape::vwap(tape)? / base_price)
}

/// The dimensionless variance-to-squared-return ratio
/// `(psi^2 - 2*phi + chi^2) / (1 + chi^2)`.
///
/// The numerator is a scaled second central moment and cannot be
/// negative; tiny negative rounding residue is clamped to zero.
pub fn variance_ratio(stats: &tape::TradeStats) -> Result<f64> {
    let numerator = stats.psi2 - 2.0 * stats.phi + stats.chi2;
    if numerator < -NEGATIVE_VARIANCE_SLACK {
        return Err(Error::InternalConsistency(format!(
            "variance numerator {numerator} is negative beyond rounding"
        )));
    }
    Ok(numerator.max(0.0) / (1.0 + stats.chi2))
}

/// Market-based variance of return in closed form.
pub fn market_based_variance(tape: &SecurityTape, base_price: f64) -> Result<f64> {
    let stats = tape::moments(tape)?;
    market_based_variance_from_stats(&stats, base_price)
}

/// Closed form evaluated from precomputed moments.
pub fn market_based_variance_from_stats(stats: &tape::TradeStats, base_price: f64) -> Result<f64> {
    if !base_price.is_finite() || base_price <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "base price must be positive, got {base_price}"
        )));
    }
    let r = stats.vwap / base_price;
    Ok(variance_ratio(stats)? * r * r)
}

/// Direct evaluation of the market-based variance: the squared-volume
/// weighted second central moment of per-tick prices about VWAP, scaled
/// by the squared base price.
///
/// Shares no intermediate computation with the closed form; used to
/// cross-check it.
pub fn variance_oracle(tape: &SecurityTape, base_price: f64) -> Result<f64> {
    if !base_price.is_finite() || base_price <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "base price must be positive, got {base_price}"
        )));
    }
    let total_value = numeric::sum(tape.ticks().iter().map(TradeTick::value));
    let total_volume = numeric::sum(tape.ticks().iter().map(TradeTick::volume));
    if total_volume <= 0.0 {
        return Err(Error::DegenerateTape(format!(
            "security {}: total traded volume is zero",
            tape.id()
        )));
    }
    let vwap = total_value / total_volume;
    let sq_volume_total = numeric::sum(tape.ticks().iter().map(|t| t.volume() * t.volume()));
    let weighted_spread = numeric::sum(tape.ticks().iter().map(|t| {
        let d = t.price() - vwap;
        d * d * t.volume() * t.volume()
    }));
    let price_variance = weighted_spread / sq_volume_total;
    Ok(price_variance / (base_price * base_price))
}

/// Check the closed form against the direct route, failing loudly if the
/// two disagree beyond `tolerance` (relative, with a small absolute
/// floor). A tolerance of exactly zero demands bitwise agreement, which
/// the two routes essentially never have; it exists to exercise the
/// consistency-failure path end to end.
pub fn cross_check_variance(tape: &SecurityTape, base_price: f64, tolerance: f64) -> Result<f64> {
    let closed = market_based_variance(tape, base_price)?;
    let direct = variance_oracle(tape, base_price)?;
    let scale = closed.abs().max(direct.abs());
    let floor = if tolerance > 0.0 { 1e-14 } else { 0.0 };
    if (closed - direct).abs() > tolerance * scale + floor {
        return Err(Error::InternalConsistency(format!(
            "security {}: closed-form variance {closed} and direct variance {direct} disagree beyond {tolerance}",
            tape.id()
        )));
    }
    Ok(closed)
}

/// Symmetric matrix of return covariances across securities.
///
/// Centering uses equal-weight (arithmetic) mean returns: that is the
/// convention under which the covariance quadratic form is the exact
/// constant-volume limit of the market-based variance. It differs from
/// the volume weighted mean used elsewhere; consumers are told which one
/// a number came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
    mean_returns: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.dim + k]
    }

    /// Equal-weight mean gross returns used to center the covariances.
    pub fn mean_returns(&self) -> &[f64] {
        &self.mean_returns
    }

    /// `sum_jk theta_jk w_j w_k`; the workhorse of both covariance-based
    /// variances.
    pub fn quadratic_form(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.dim {
            return Err(Error::WeightMismatch(format!(
                "expected {} weights, got {}",
                self.dim,
                weights.len()
            )));
        }
        let total = numeric::sum((0..self.dim).flat_map(|j| {
            let weights = &weights;
            (0..self.dim).map(move |k| self.get(j, k) * weights[j] * weights[k])
        }));
        Ok(total)
    }
}

/// Population covariances of equal-weight-centered gross returns.
pub fn return_covariances(tapes: &MarketTape, base_prices: &[f64]) -> Result<CovarianceMatrix> {
    let j = tapes.security_count();
    if base_prices.len() != j {
        return Err(Error::WeightMismatch(format!(
            "expected {} base prices, got {}",
            j,
            base_prices.len()
        )));
    }
    let series: Vec<ReturnSeries> = tapes
        .securities()
        .iter()
        .zip(base_prices)
        .map(|(t, &p)| ReturnSeries::from_tape(t, p))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = series.iter().map(ReturnSeries::equal_weight_mean).collect();

    let mut entries = vec![0.0; j * j];
    for a in 0..j {
        for b in a..j {
            let cov = numeric::central_cross(
                series[a].returns(),
                series[b].returns(),
                means[a],
                means[b],
            );
            entries[a * j + b] = cov;
            entries[b * j + a] = cov;
        }
    }
    Ok(CovarianceMatrix {
        dim: j,
        entries,
        mean_returns: means,
    })
}

fn clamp_variance(value: f64, label: &str) -> Result<f64> {
    if value < -NEGATIVE_VARIANCE_SLACK {
        return Err(Error::InternalConsistency(format!(
            "{label} is negative beyond rounding: {value}"
        )));
    }
    Ok(value.max(0.0))
}

/// Classical portfolio variance: the covariance quadratic form in the
/// invested-fraction weights. Exact only when every security trades a
/// constant volume per tick.
pub fn markowitz_portfolio_variance(cov: &CovarianceMatrix, value_weights: &[f64]) -> Result<f64> {
    let total: f64 = numeric::sum(value_weights.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::WeightMismatch(format!(
            "portfolio weights must sum to 1, got {total}"
        )));
    }
    clamp_variance(
        cov.quadratic_form(value_weights)?,
        "covariance portfolio variance",
    )
}

/// Constant-volume variance of the whole market's trades: the same
/// quadratic form with each weight tilted by the ratio of the current
/// volume share to the base volume share.
pub fn markowitz_market_variance(
    cov: &CovarianceMatrix,
    value_weights_base: &[f64],
    volume_weights_base: &[f64],
    volume_weights_now: &[f64],
) -> Result<f64> {
    let weights = tilted_weights(value_weights_base, volume_weights_base, volume_weights_now)?;
    clamp_variance(cov.quadratic_form(&weights)?, "covariance market variance")
}

/// Difference between the portfolio and market constant-volume variances
/// in one double sum. Must agree with subtracting the two variances
/// directly.
pub fn markowitz_difference(
    cov: &CovarianceMatrix,
    value_weights_base: &[f64],
    volume_weights_base: &[f64],
    volume_weights_now: &[f64],
) -> Result<f64> {
    let dim = cov.dim();
    if value_weights_base.len() != dim {
        return Err(Error::WeightMismatch(format!(
            "expected {dim} weights, got {}",
            value_weights_base.len()
        )));
    }
    let tilt = volume_tilts(volume_weights_base, volume_weights_now)?;
    if tilt.len() != dim {
        return Err(Error::WeightMismatch(format!(
            "expected {dim} volume shares, got {}",
            tilt.len()
        )));
    }
    let total = numeric::sum((0..dim).flat_map(|j| {
        let tilt = &tilt;
        (0..dim).map(move |k| {
            cov.get(j, k)
                * value_weights_base[j]
                * value_weights_base[k]
                * (1.0 - tilt[j] * tilt[k])
        })
    }));
    Ok(total)
}

fn volume_tilts(base: &[f64], now: &[f64]) -> Result<Vec<f64>> {
    if base.len() != now.len() {
        return Err(Error::WeightMismatch(format!(
            "volume share vectors differ in length: {} vs {}",
            base.len(),
            now.len()
        )));
    }
    base.iter()
        .zip(now)
        .enumerate()
        .map(|(j, (&b, &n))| {
            if b <= 0.0 {
                Err(Error::ZeroShare(format!("index {j}")))
            } else {
                Ok(n / b)
            }
        })
        .collect()
}

fn tilted_weights(
    value_weights_base: &[f64],
    volume_weights_base: &[f64],
    volume_weights_now: &[f64],
) -> Result<Vec<f64>> {
    if value_weights_base.len() != volume_weights_base.len() {
        return Err(Error::WeightMismatch(format!(
            "weight vectors differ in length: {} vs {}",
            value_weights_base.len(),
            volume_weights_base.len()
        )));
    }
    let tilt = volume_tilts(volume_weights_base, volume_weights_now)?;
    Ok(value_weights_base
        .iter()
        .zip(&tilt)
        .map(|(&x, &t)| x * t)
        .collect())
}

/// Second-order reconstruction of the market-based variance from the
/// covariance variance, the mean return, and the volume coefficient of
/// variation:
///
/// ```text
/// theta_m - 2 a sqrt(theta_m) R chi + (R^2 - theta_m) chi^2
/// ```
pub fn taylor_variance(theta_markowitz: f64, mean_return: f64, chi: f64, a: f64) -> f64 {
    theta_markowitz - 2.0 * a * theta_markowitz.max(0.0).sqrt() * mean_return * chi
        + (mean_return * mean_return - theta_markowitz) * chi * chi
}

/// Everything one tape's variance report carries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    /// Volume weighted mean gross return over the base price.
    pub mean_return: f64,
    /// Market-based variance of return (closed form).
    pub theta_market_based: f64,
    /// Constant-volume covariance variance supplied by the caller.
    pub theta_markowitz: f64,
    /// Second-order reconstruction from `theta_markowitz`, `chi` and `a`.
    pub theta_taylor: f64,
    pub psi2: f64,
    pub chi2: f64,
    pub phi: f64,
    /// Value-volume correlation constant; zero (flagged) when undefined.
    pub correlation_a: f64,
    /// Market-based variance of price about VWAP.
    pub phi_price: f64,
    /// Variance over squared mean return.
    pub mu: f64,
    /// Volumes were constant over the window, so `phi`, `chi` and the
    /// correlation carry no information.
    pub constant_volume: bool,
    /// The correlation constant exceeded [-1, 1] by rounding and was
    /// clamped.
    pub a_clamped: bool,
}

/// Build the full variance report of a single-security-like tape.
///
/// `theta_markowitz` is the matching constant-volume variance (a
/// covariance diagonal for one security, a quadratic form for a
/// portfolio or the market); it seeds the Taylor reconstruction.
pub fn variance_report(
    tape: &SecurityTape,
    base_price: f64,
    theta_markowitz: f64,
) -> Result<VarianceReport> {
    let stats = tape::moments(tape)?;
    let mu = variance_ratio(&stats)?;
    let mean_return = stats.vwap / base_price;
    if !base_price.is_finite() || base_price <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "base price must be positive, got {base_price}"
        )));
    }
    let theta = mu * mean_return * mean_return;
    let phi_price = mu * stats.vwap * stats.vwap;

    let constant_volume = stats.chi2 <= DEGENERACY_FLOOR;
    let degenerate = constant_volume || stats.psi2 <= DEGENERACY_FLOOR;
    let (correlation_a, a_clamped) = if degenerate {
        (0.0, false)
    } else {
        let raw = stats.phi / (stats.psi() * stats.chi());
        if raw.abs() > 1.0 + tape::CORRELATION_SLACK {
            return Err(Error::InternalConsistency(format!(
                "correlation constant {raw} exceeds [-1, 1] beyond tolerance"
            )));
        }
        (raw.clamp(-1.0, 1.0), raw.abs() > 1.0)
    };

    let chi = stats.chi();
    Ok(VarianceReport {
        mean_return,
        theta_market_based: theta,
        theta_markowitz,
        theta_taylor: taylor_variance(theta_markowitz, mean_return, chi, correlation_a),
        psi2: stats.psi2,
        chi2: stats.chi2,
        phi: stats.phi,
        correlation_a,
        phi_price,
        mu,
        constant_volume,
        a_clamped,
    })
}

/// One security's contribution to the portfolio-vs-market return gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnContribution {
    pub security: SecurityId,
    /// Volume weighted mean gross return of the security.
    pub mean_return: f64,
    /// Invested fraction at the base time.
    pub value_weight: f64,
    /// `1 - x(t)/x(t0)`: how far the current volume share drifted from
    /// the base share.
    pub volume_shift: f64,
    pub contribution: f64,
}

/// Mean returns of the portfolio and of the whole market's trades, and
/// the gap between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnDecomposition {
    /// Portfolio mean return; equals the invested-fraction-weighted sum
    /// of per-security mean returns.
    pub portfolio_return: f64,
    /// Mean return of the aggregated market tape.
    pub market_return: f64,
    /// `portfolio_return - market_return`.
    pub difference: f64,
    /// The same gap through prices: (portfolio VWAP - market VWAP) over
    /// the market base price. Coincides with `difference` only for a
    /// market-proportional portfolio.
    pub price_form_difference: f64,
    pub market_proportional: bool,
    /// Per-security breakdown of the gap; present only when the
    /// portfolio is market-proportional, because the breakdown leans on
    /// the proportional weight identity.
    pub per_security: Option<Vec<ReturnContribution>>,
    /// Market return rebuilt from per-security returns and tilted
    /// weights; present under the same condition.
    pub decomposed_market_return: Option<f64>,
}

/// Compare the portfolio's mean return with the mean return of all
/// market trades over the window.
pub fn return_difference(
    tapes: &MarketTape,
    spec: &PortfolioSpec,
    base: &MarketBase,
) -> Result<ReturnDecomposition> {
    check_alignment(tapes, spec.ids())?;
    check_base_prices(spec, base)?;

    let security_returns: Vec<f64> = tapes
        .securities()
        .iter()
        .zip(base.base_prices())
        .map(|(t, &p)| mean_return(t, p))
        .collect::<Result<Vec<_>>>()?;

    let value_weights = spec.value_weights();
    let portfolio_return = numeric::sum(
        security_returns
            .iter()
            .zip(&value_weights)
            .map(|(r, x)| r * x),
    );

    let market_tape = aggregate_market(tapes)?;
    let market_price = base.price_per_share();
    let market_return = mean_return(&market_tape, market_price)?;

    let norm = normalize_to_portfolio(tapes, spec)?;
    let price_form_difference =
        (tape::vwap(norm.tape())? - tape::vwap(&market_tape)?) / market_price;

    let proportional = spec.is_market_proportional(base);
    let (per_security, decomposed_market_return) = if proportional {
        let shares = market_shares(tapes)?;
        let base_volume_weights = spec.volume_weights();
        let mut contributions = Vec::with_capacity(spec.ids().len());
        let mut tilted = numeric::CompensatedSum::new();
        for (idx, id) in spec.ids().iter().enumerate() {
            let x0 = base_volume_weights[idx];
            if x0 <= 0.0 {
                return Err(Error::ZeroShare(id.to_string()));
            }
            let tilt = shares.volume_shares[idx] / x0;
            let contribution = security_returns[idx] * value_weights[idx] * (1.0 - tilt);
            tilted.add(security_returns[idx] * value_weights[idx] * tilt);
            contributions.push(ReturnContribution {
                security: id.clone(),
                mean_return: security_returns[idx],
                value_weight: value_weights[idx],
                volume_shift: 1.0 - tilt,
                contribution,
            });
        }
        (Some(contributions), Some(tilted.value()))
    } else {
        (None, None)
    };

    Ok(ReturnDecomposition {
        portfolio_return,
        market_return,
        difference: portfolio_return - market_return,
        price_form_difference,
        market_proportional: proportional,
        per_security,
        decomposed_market_return,
    })
}

fn check_base_prices(spec: &PortfolioSpec, base: &MarketBase) -> Result<()> {
    if spec.ids() != base.ids() {
        return Err(Error::MissingSecurity(
            "portfolio and market base cover different securities".into(),
        ));
    }
    for ((id, &p_spec), &p_base) in spec
        .ids()
        .iter()
        .zip(spec.base_prices())
        .zip(base.base_prices())
    {
        if (p_spec - p_base).abs() > 1e-9 * p_base.abs().max(p_spec.abs()) {
            return Err(Error::InvalidConfig(format!(
                "security {id}: portfolio base price {p_spec} disagrees with market base price {p_base}"
            )));
        }
    }
    Ok(())
}

/// How the portfolio volume coefficient of variation decomposes against
/// the market's.
///
/// With `gamma(t_i)` the per-tick ratio of portfolio trade volume to
/// market trade volume, the exact identity
///
/// ```text
/// 1 + chi^2 = (1 + chi_m^2)(1 + chi_gamma^2)(1 + omega xi_gamma xi_m)
/// ```
///
/// splits portfolio volume randomness into market volume randomness, the
/// randomness of the ratio, and the correlation of their squares.
///
/// `chi_gamma^2` is defined against the volume weighted mean of gamma
/// (the ratio of mean volumes), which is what makes the identity exact;
/// unlike an ordinary squared coefficient of variation it can be
/// negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiDecomposition {
    /// Squared volume coefficient of variation of the portfolio tape.
    pub chi2: f64,
    /// Squared volume coefficient of variation of the market tape.
    pub chi_m2: f64,
    /// Squared variation of the portfolio-to-market volume ratio about
    /// its volume weighted mean. May be negative.
    pub chi_gamma2: f64,
    /// Coefficient of variation of squared market volumes.
    pub xi_m: f64,
    /// Coefficient of variation of squared volume ratios.
    pub xi_gamma: f64,
    /// Correlation of squared ratios with squared market volumes.
    pub omega: f64,
    /// `omega` reported as zero because one of the squared series is
    /// constant.
    pub omega_degenerate: bool,
    /// Per-tick portfolio-to-market volume ratios.
    #[serde(skip)]
    pub gamma: Vec<f64>,
}

impl ChiDecomposition {
    /// Right-hand side of the identity; compare against `1 + chi2`.
    pub fn recomposed(&self) -> f64 {
        (1.0 + self.chi_m2)
            * (1.0 + self.chi_gamma2)
            * (1.0 + self.omega * self.xi_gamma * self.xi_m)
    }

    pub fn one_plus_chi2(&self) -> f64 {
        1.0 + self.chi2
    }
}

/// Decompose the portfolio volume variation against market volume
/// variation via the per-tick volume ratio.
pub fn chi_decomposition(
    portfolio_volumes: &[f64],
    market_volumes: &[f64],
) -> Result<ChiDecomposition> {
    if portfolio_volumes.len() != market_volumes.len() {
        return Err(Error::InvalidTape(format!(
            "volume series differ in length: {} vs {}",
            portfolio_volumes.len(),
            market_volumes.len()
        )));
    }
    if portfolio_volumes.len() < 2 {
        return Err(Error::InvalidTape("need at least two ticks".into()));
    }
    if market_volumes.iter().any(|&u| u <= 0.0) || portfolio_volumes.iter().any(|&w| w <= 0.0) {
        return Err(Error::DegenerateTape(
            "volume ratio undefined: nonpositive volume in the series".into(),
        ));
    }

    let mean_w = numeric::mean(portfolio_volumes);
    let mean_u = numeric::mean(market_volumes);
    let chi2 = numeric::central_sq(portfolio_volumes, mean_w) / (mean_w * mean_w);
    let chi_m2 = numeric::central_sq(market_volumes, mean_u) / (mean_u * mean_u);

    let gamma: Vec<f64> = portfolio_volumes
        .iter()
        .zip(market_volumes)
        .map(|(w, u)| w / u)
        .collect();
    // volume weighted mean of gamma = ratio of mean volumes
    let gamma_vw_mean = mean_w / mean_u;
    let gamma_sq: Vec<f64> = gamma.iter().map(|g| g * g).collect();
    let gamma_sq_mean = numeric::mean(&gamma_sq);
    let chi_gamma2 = gamma_sq_mean / (gamma_vw_mean * gamma_vw_mean) - 1.0;

    let market_sq: Vec<f64> = market_volumes.iter().map(|u| u * u).collect();
    let market_sq_mean = numeric::mean(&market_sq);

    let var_gamma_sq = numeric::central_sq(&gamma_sq, gamma_sq_mean);
    let var_market_sq = numeric::central_sq(&market_sq, market_sq_mean);
    let cov_sq = numeric::central_cross(&gamma_sq, &market_sq, gamma_sq_mean, market_sq_mean);

    let xi_gamma = var_gamma_sq.max(0.0).sqrt() / gamma_sq_mean;
    let xi_m = var_market_sq.max(0.0).sqrt() / market_sq_mean;

    let denom = (var_gamma_sq.max(0.0) * var_market_sq.max(0.0)).sqrt();
    let (omega, omega_degenerate) = if denom == 0.0 {
        (0.0, true)
    } else {
        let raw = cov_sq / denom;
        if raw.abs() > 1.0 + tape::CORRELATION_SLACK {
            return Err(Error::InternalConsistency(format!(
                "squared-volume correlation {raw} exceeds [-1, 1] beyond tolerance"
            )));
        }
        (raw.clamp(-1.0, 1.0), false)
    };

    Ok(ChiDecomposition {
        chi2,
        chi_m2,
        chi_gamma2,
        xi_m,
        xi_gamma,
        omega,
        omega_degenerate,
        gamma,
    })
}
