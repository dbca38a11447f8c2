//! Aggregation of fine tick series into coarser spans.
//!
//! Values and volumes of consecutive ticks are summed, so every analysis
//! in this crate runs unchanged at any time scale. Totals and window
//! VWAP are preserved; variances and coefficients of variation are
//! scale-dependent by nature and are expected to change.

use crate::error::{Error, Result};
use crate::numeric;
use crate::tape::{AveragingWindow, MarketTape, SecurityTape, TradeTick};

/// What to do when the tick count is not divisible by the span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrailingPolicy {
    /// Refuse to resample.
    #[default]
    Error,
    /// Drop the trailing partial span.
    Drop,
}

/// Number of fine ticks per coarse tick, plus the trailing policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanSpec {
    ticks_per_span: usize,
    trailing: TrailingPolicy,
}

impl SpanSpec {
    pub fn new(ticks_per_span: usize) -> Result<Self> {
        if ticks_per_span == 0 {
            return Err(Error::SpanMismatch(
                "span must cover at least one tick".into(),
            ));
        }
        Ok(Self {
            ticks_per_span,
            trailing: TrailingPolicy::Error,
        })
    }

    pub fn with_trailing(mut self, policy: TrailingPolicy) -> Self {
        self.trailing = policy;
        self
    }

    pub fn ticks_per_span(&self) -> usize {
        self.ticks_per_span
    }

    /// Coarse tick count for a tape of `n` ticks.
    pub fn coarse_count(&self, n: usize) -> Result<usize> {
        if !n.is_multiple_of(self.ticks_per_span) && self.trailing == TrailingPolicy::Error {
            return Err(Error::SpanMismatch(format!(
                "{n} ticks are not divisible by span {}",
                self.ticks_per_span
            )));
        }
        Ok(n / self.ticks_per_span)
    }
}

/// Sum consecutive spans of one tape into a coarser tape.
pub fn resample_security(tape: &SecurityTape, spec: &SpanSpec) -> Result<SecurityTape> {
    if spec.ticks_per_span == 1 {
        return Ok(tape.clone());
    }
    let k = spec.coarse_count(tape.tick_count())?;
    if k < 2 {
        return Err(Error::SpanMismatch(format!(
            "span {} would leave {k} coarse tick(s); at least two are needed",
            spec.ticks_per_span
        )));
    }
    let mut ticks = Vec::with_capacity(k);
    for chunk in tape.ticks().chunks_exact(spec.ticks_per_span).take(k) {
        let value = numeric::sum(chunk.iter().map(TradeTick::value));
        let volume = numeric::sum(chunk.iter().map(TradeTick::volume));
        ticks.push(TradeTick::new(value, volume)?);
    }
    SecurityTape::new(tape.id().clone(), ticks)
}

/// Resample every security of a market tape, rebuilding the window with
/// the widened tick span.
pub fn resample_market(tapes: &MarketTape, spec: &SpanSpec) -> Result<MarketTape> {
    if spec.ticks_per_span == 1 {
        return Ok(tapes.clone());
    }
    let k = spec.coarse_count(tapes.tick_count())?;
    let securities = tapes
        .securities()
        .iter()
        .map(|t| resample_security(t, spec))
        .collect::<Result<Vec<_>>>()?;
    let old = tapes.window();
    let window = AveragingWindow::new(
        old.center_time(),
        k,
        old.tick_span() * spec.ticks_per_span as f64,
    )?;
    MarketTape::new(securities, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape;
    use proptest::prelude::*;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn four_tick() -> SecurityTape {
        SecurityTape::from_pairs("x", &[(10.0, 5.0), (24.0, 8.0), (6.0, 1.0), (6.0, 2.0)]).unwrap()
    }

    #[test]
    fn unit_span_is_identity() {
        let tape = four_tick();
        let out = resample_security(&tape, &SpanSpec::new(1).unwrap()).unwrap();
        assert_eq!(out, tape);
    }

    #[test]
    fn worked_pairwise_aggregation() {
        let out = resample_security(&four_tick(), &SpanSpec::new(2).unwrap()).unwrap();
        assert_eq!(out.values(), vec![34.0, 12.0]);
        assert_eq!(out.volumes(), vec![13.0, 3.0]);
        assert!(rel_eq(out.ticks()[0].price(), 34.0 / 13.0, 1e-15));
        assert_eq!(out.ticks()[1].price(), 4.0);
    }

    #[test]
    fn indivisible_span_errors_or_drops() {
        let tape = four_tick();
        assert!(matches!(
            resample_security(&tape, &SpanSpec::new(3).unwrap()),
            Err(Error::SpanMismatch(_))
        ));
        // full collapse leaves one tick; always refused
        assert!(resample_security(&tape, &SpanSpec::new(4).unwrap()).is_err());

        let six = SecurityTape::from_pairs(
            "y",
            &[
                (1.0, 1.0),
                (2.0, 1.0),
                (3.0, 1.0),
                (4.0, 1.0),
                (5.0, 1.0),
                (6.0, 1.0),
            ],
        )
        .unwrap();
        let dropped = resample_security(
            &six,
            &SpanSpec::new(2)
                .unwrap()
                .with_trailing(TrailingPolicy::Drop),
        )
        .unwrap();
        assert_eq!(dropped.tick_count(), 3);
    }

    #[test]
    fn market_window_span_widens() {
        let tapes = MarketTape::with_unit_window(vec![four_tick()]).unwrap();
        let out = resample_market(&tapes, &SpanSpec::new(2).unwrap()).unwrap();
        assert_eq!(out.tick_count(), 2);
        assert_eq!(out.window().tick_span(), 2.0);
        assert_eq!(out.window().duration(), 4.0);
    }

    fn arb_tape() -> impl Strategy<Value = SecurityTape> {
        proptest::collection::vec((0.5f64..100.0, 0.5f64..100.0), 1usize..8).prop_map(|pairs| {
            // 12 divides evenly by 2, 3, 4 and 6; repeat blocks to n = 12 * len
            let mut ticks = Vec::new();
            for _ in 0..12 {
                for &(p, u) in &pairs {
                    ticks.push(TradeTick::new(p * u, u).unwrap());
                }
            }
            SecurityTape::new("t", ticks).unwrap()
        })
    }

    proptest! {
        #[test]
        fn totals_and_vwap_survive(tape in arb_tape(), z in 1usize..6) {
            let spec = SpanSpec::new(z).unwrap().with_trailing(TrailingPolicy::Drop);
            let out = resample_security(&tape, &spec).unwrap();
            if tape.tick_count() % z == 0 {
                let fine_v = numeric::sum(tape.ticks().iter().map(TradeTick::value));
                let fine_u = numeric::sum(tape.ticks().iter().map(TradeTick::volume));
                let coarse_v = numeric::sum(out.ticks().iter().map(TradeTick::value));
                let coarse_u = numeric::sum(out.ticks().iter().map(TradeTick::volume));
                prop_assert!(rel_eq(fine_v, coarse_v, 1e-12));
                prop_assert!(rel_eq(fine_u, coarse_u, 1e-12));
                prop_assert!(rel_eq(
                    tape::vwap(&tape).unwrap(),
                    tape::vwap(&out).unwrap(),
                    1e-12
                ));
            }
        }

        #[test]
        fn spans_compose(tape in arb_tape()) {
            let once = resample_security(&tape, &SpanSpec::new(6).unwrap()).unwrap();
            let twice = resample_security(
                &resample_security(&tape, &SpanSpec::new(2).unwrap()).unwrap(),
                &SpanSpec::new(3).unwrap(),
            )
            .unwrap();
            prop_assert_eq!(once.tick_count(), twice.tick_count());
            for (a, b) in once.ticks().iter().zip(twice.ticks()) {
                prop_assert!(rel_eq(a.value(), b.value(), 1e-12));
                prop_assert!(rel_eq(a.volume(), b.volume(), 1e-12));
            }
        }
    }
}
