//! Release arithmetic for bursty (sporadically periodic) arrival patterns.

use crate::model::ArrivalPattern;
use crate::time::Time;

/// Where instance `q` falls in its pattern: `outer` whole outer periods
/// precede it, and it is the `inner`-th release (zero-based) of its burst.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstPosition {
    pub outer: u64,
    pub inner: u64,
}

impl BurstPosition {
    /// Number of releases before this one: `M·n + m`, i.e. `q - 1`.
    pub fn preceding(self, burst: u32) -> u64 {
        self.outer * burst as u64 + self.inner
    }
}

/// Splits the one-based instance index `q` into outer periods and burst
/// offset: `M = ⌊(q−1)/n⌋`, `m = (q−1) − M·n`.
///
/// # Panics
///
/// If `q` is zero.
pub fn burst_index(q: u32, pattern: &ArrivalPattern) -> BurstPosition {
    assert!(q >= 1, "instance indices start at 1");
    let n = pattern.burst as u64;
    let k = (q - 1) as u64;
    let outer = k / n;
    BurstPosition { outer, inner: k - outer * n }
}

/// Nominal arrival of instance `q` measured from the start of a burst:
/// `M·T + m·t`.
pub fn arrival_time(q: u32, pattern: &ArrivalPattern) -> Time {
    let pos = burst_index(q, pattern);
    pattern
        .outer_period
        .saturating_mul(pos.outer)
        .saturating_add(pattern.inner_period.saturating_mul(pos.inner))
}

/// Largest number of nominal arrivals in a closed window of length `span`:
/// whole bursts, plus the partial burst capped at `n`.
pub fn releases_in(span: Time, pattern: &ArrivalPattern) -> u64 {
    let n = pattern.burst as u64;
    let whole = span.div_floor(pattern.outer_period);
    let rest = span.saturating_sub(pattern.outer_period.saturating_mul(whole));
    let partial = (rest.div_floor(pattern.inner_period) + 1).min(n);
    whole.saturating_mul(n).saturating_add(partial)
}

/// Bound on releases of another transaction's external event in `[0, W]`
/// when every release may be delayed by up to the pattern's jitter:
/// `min(n, F_r) + F·n` with `F = ⌊(J + W)/T⌋` and
/// `F_r = ⌊(J + W − F·T)/t⌋ + 1`.
pub fn interference_count_other(pattern: &ArrivalPattern, window: Time) -> u64 {
    releases_in(pattern.jitter.saturating_add(window), pattern)
}
