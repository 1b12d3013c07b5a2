//! Broadcast-period detection from per-channel message-volume series.
//!
//! The channel's message volume is sampled on a fixed grid, symbolized as
//! `A` (at or above the series mean) / `I` (below), smoothed to remove
//! single-slot flickers, and scanned for activity runs. Runs separated by
//! less than the merge gap are joined, since a streamer is very unlikely to
//! start a separate session within such a short span.

use thiserror::Error;

use crate::chatlog::{AnonId, ChannelStream};
use crate::time::{TimeDelta, Timestamp};

/// Message counts per grid slot for one channel, zeros included. Covers
/// every slot from the first message to the last.
#[derive(Debug, Clone)]
pub struct VolumeSeries {
    pub channel_id: AnonId,
    /// First slot start, floored onto the epoch-aligned `dt` grid.
    pub t0: Timestamp,
    pub dt: TimeDelta,
    pub values: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// Volume at or above the series mean.
    Active,
    /// Volume below the series mean.
    Idle,
}

/// Symbolized volume series; same length as the generating [`VolumeSeries`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    pub symbols: Vec<Symbol>,
    pub mean_volume: f64,
}

/// Half-open broadcast interval `[start, end)`; boundaries lie on the
/// sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BroadcastInterval {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl BroadcastInterval {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("empty channel stream")]
    EmptyStream,
}

/// Counts messages per `dt` slot. Slot `i` covers
/// `[t0 + i*dt, t0 + (i+1)*dt)`.
pub fn sample_volume(stream: &ChannelStream, dt: TimeDelta) -> Result<VolumeSeries, SegmentError> {
    assert!(dt.is_positive(), "dt must be positive");
    let first = stream.messages.first().ok_or(SegmentError::EmptyStream)?;
    let t0 = first.timestamp.floor_to(dt);
    let last = stream.messages.last().expect("non-empty");
    let slots = ((last.timestamp - t0).as_ms() / dt.as_ms()) as usize + 1;
    let mut values = vec![0u64; slots];
    for msg in &stream.messages {
        let idx = ((msg.timestamp - t0).as_ms() / dt.as_ms()) as usize;
        values[idx] += 1;
    }
    Ok(VolumeSeries { channel_id: stream.channel_id, t0, dt, values })
}

/// Maps each slot to `A` when its volume is at or above the arithmetic mean
/// of the series (zeros included), `I` otherwise. Ties map to `A`.
pub fn symbolize(vs: &VolumeSeries) -> SymbolSequence {
    assert!(!vs.values.is_empty(), "volume series must be non-empty");
    let mean = vs.values.iter().sum::<u64>() as f64 / vs.values.len() as f64;
    let symbols = vs
        .values
        .iter()
        .map(|&v| if v as f64 >= mean { Symbol::Active } else { Symbol::Idle })
        .collect();
    SymbolSequence { symbols, mean_volume: mean }
}

/// Rewrites `AIA -> AAA` then `IAI -> III` in repeated left-to-right passes
/// until a fixpoint. The result contains neither triple. Each rewrite merges
/// three runs into one, so the pass count is bounded by the run count.
pub fn smooth(s: &SymbolSequence) -> SymbolSequence {
    let mut symbols = s.symbols.clone();
    smooth_in_place(&mut symbols);
    SymbolSequence { symbols, mean_volume: s.mean_volume }
}

pub(crate) fn smooth_in_place(symbols: &mut [Symbol]) {
    use Symbol::{Active, Idle};
    if symbols.len() < 3 {
        return;
    }
    loop {
        let mut changed = false;
        for i in 0..symbols.len() - 2 {
            if symbols[i] == Active && symbols[i + 1] == Idle && symbols[i + 2] == Active {
                symbols[i + 1] = Active;
                changed = true;
            }
        }
        for i in 0..symbols.len() - 2 {
            if symbols[i] == Idle && symbols[i + 1] == Active && symbols[i + 2] == Idle {
                symbols[i + 1] = Idle;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// Extracts broadcast intervals from a smoothed sequence: every maximal
/// `A`-run becomes one interval. Interior run starts coincide with the `A`
/// of an `IIA` pattern and interior ends with the `I` of an `AAI`; a leading
/// run opens at `t0` and a trailing run closes at the series end. Intervals
/// whose gap (end of earlier to start of later) is below `merge_gap` are
/// merged transitively.
pub fn detect_broadcasts(
    s: &SymbolSequence,
    vs: &VolumeSeries,
    merge_gap: TimeDelta,
) -> Vec<BroadcastInterval> {
    debug_assert_eq!(s.symbols.len(), vs.values.len());
    debug_assert!(is_smooth(&s.symbols), "detect_broadcasts requires a smoothed sequence");

    let mut intervals: Vec<BroadcastInterval> = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, &sym) in s.symbols.iter().enumerate() {
        match (sym, run_start) {
            (Symbol::Active, None) => run_start = Some(i),
            (Symbol::Idle, Some(start)) => {
                intervals.push(slot_interval(vs, start, i));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        intervals.push(slot_interval(vs, start, s.symbols.len()));
    }

    let mut merged: Vec<BroadcastInterval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(prev) if (iv.start - prev.end).as_ms() < merge_gap.as_ms() => prev.end = iv.end,
            _ => merged.push(iv),
        }
    }
    merged
}

fn slot_interval(vs: &VolumeSeries, start_slot: usize, end_slot: usize) -> BroadcastInterval {
    BroadcastInterval {
        start: vs.t0 + TimeDelta::from_ms(start_slot as i64 * vs.dt.as_ms()),
        end: vs.t0 + TimeDelta::from_ms(end_slot as i64 * vs.dt.as_ms()),
    }
}

fn is_smooth(symbols: &[Symbol]) -> bool {
    use Symbol::{Active, Idle};
    symbols.windows(3).all(|w| {
        !(w[0] == Active && w[1] == Idle && w[2] == Active)
            && !(w[0] == Idle && w[1] == Active && w[2] == Idle)
    })
}

/// Full per-channel detection: sample, symbolize, smooth, extract, merge.
pub fn channel_broadcasts(
    stream: &ChannelStream,
    dt: TimeDelta,
    merge_gap: TimeDelta,
) -> Result<Vec<BroadcastInterval>, SegmentError> {
    let vs = sample_volume(stream, dt)?;
    let symbols = smooth(&symbolize(&vs));
    Ok(detect_broadcasts(&symbols, &vs, merge_gap))
}
