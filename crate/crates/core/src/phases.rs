//! Aggregate response curves and per-user two-segment regression.
//!
//! The conditional curve takes the median of messages-per-user across all
//! chunks with the same volume (medians resist the pull of undetected
//! bots). Per-user response curves are split at the overload threshold and
//! each side is fit on standardized data, so the slopes are Pearson
//! correlations and comparable across users; the (positive, negative) slope
//! pair in the south-east quadrant is the individual overload signature.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::chatlog::AnonId;

pub const DEFAULT_V_STAR: u64 = 40;
pub const DEFAULT_V_MAX: u64 = 200;
pub const DEFAULT_MIN_OBS: usize = 10;

/// Channel- and chunk-level inclusion thresholds for aggregate curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelFilter {
    /// Channel must have at least this many messages over the full window.
    pub min_messages: u64,
    /// Channel must have at least this many distinct users over the window.
    pub min_users: u64,
    /// Chunk must have at least this many distinct non-bot authors.
    pub min_chunk_users: u64,
}

impl Default for ChannelFilter {
    fn default() -> Self {
        ChannelFilter { min_messages: 1_000, min_users: 100, min_chunk_users: 2 }
    }
}

/// Volume binning: exact integer bins up to `exact_max`, log-spaced bins
/// (`per_decade` per factor of ten) above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinSpec {
    pub exact_max: u64,
    pub per_decade: u32,
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec { exact_max: 100, per_decade: 10 }
    }
}

impl BinSpec {
    /// Maps a volume onto its bin, keyed by the smallest volume the bin can
    /// contain. Exact bins are their own key.
    fn bin_key(&self, v: u64) -> u64 {
        if v <= self.exact_max {
            return v;
        }
        let idx = (self.per_decade as f64 * (v as f64).log10()).floor() as i64;
        let mut lo = 10f64.powf(idx as f64 / self.per_decade as f64).ceil() as u64;
        // Float guard: nudge the edge until it actually lands in `idx`.
        while lo > 1 && (self.per_decade as f64 * ((lo - 1) as f64).log10()).floor() as i64 >= idx {
            lo -= 1;
        }
        while ((self.per_decade as f64 * (lo as f64).log10()).floor() as i64) < idx {
            lo += 1;
        }
        lo.max(self.exact_max + 1)
    }
}

/// One aggregated bin of the conditional curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveBin {
    /// Smallest volume in the bin; for exact bins this is the volume itself.
    pub v_label: u64,
    /// Whether this is an exact single-volume bin.
    pub exact: bool,
    /// Median of the statistic within the bin.
    pub stat: f64,
    /// Normal-approximation standard error of the median.
    pub se_median: f64,
    /// Plain standard error of the mean, reported alongside.
    pub se_mean: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionalCurve {
    /// Bins sorted by volume; only bins with data are emitted.
    pub bins: Vec<CurveBin>,
}

/// One chunk's contribution to the aggregate analysis.
#[derive(Debug, Clone, Copy)]
pub struct ChunkObs {
    pub channel_id: AnonId,
    pub volume: u64,
    pub user_count: u64,
    pub messages_per_user: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PhasesError {
    #[error("no observations after filtering")]
    NoData,
    #[error("degenerate variance in the {axis} axis of the {region} region")]
    DegenerateVariance { axis: &'static str, region: &'static str },
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Median of `messages_per_user` conditioned on binned volume, over chunks
/// with at least `min_chunk_users` authors. The caller restricts the input
/// to qualifying channels and broadcast periods.
pub fn conditional_median(
    observations: &[ChunkObs],
    bins: &BinSpec,
    min_chunk_users: u64,
) -> Result<ConditionalCurve, PhasesError> {
    let mut grouped: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for obs in observations {
        if obs.user_count < min_chunk_users {
            continue;
        }
        grouped.entry(bins.bin_key(obs.volume)).or_default().push(obs.messages_per_user);
    }
    if grouped.is_empty() {
        return Err(PhasesError::NoData);
    }
    let curve_bins = grouped
        .into_iter()
        .map(|(v_label, mut values)| {
            values.sort_by(f64::total_cmp);
            let n = values.len() as u64;
            let sd = sample_sd(&values);
            let se_mean = sd / (n as f64).sqrt();
            CurveBin {
                v_label,
                exact: v_label <= bins.exact_max,
                stat: median(&values),
                se_median: (std::f64::consts::PI / 2.0).sqrt() * se_mean,
                se_mean,
                n,
            }
        })
        .collect();
    Ok(ConditionalCurve { bins: curve_bins })
}

/// A conditional curve for one channel-popularity quartile.
#[derive(Debug, Clone, PartialEq)]
pub struct QuartileCurve {
    /// 1 is the least popular quartile, 4 the most.
    pub quartile: u8,
    pub curve: ConditionalCurve,
}

/// Splits channels at the 25/50/75 percentiles of their distinct-user
/// counts and computes one conditional curve per group. A channel sitting
/// on a percentile boundary goes to the lower quartile.
pub fn quartile_curves(
    observations: &[ChunkObs],
    channel_users: &HashMap<AnonId, u64>,
    bins: &BinSpec,
    min_chunk_users: u64,
) -> Result<Vec<QuartileCurve>, PhasesError> {
    if channel_users.is_empty() {
        return Err(PhasesError::NoData);
    }
    let mut counts: Vec<u64> = channel_users.values().copied().collect();
    counts.sort_unstable();
    // Lower empirical quantile: value at index ceil(p*n) - 1.
    let quantile = |p: f64| -> u64 {
        let idx = ((p * counts.len() as f64).ceil() as usize).max(1) - 1;
        counts[idx]
    };
    let (q1, q2, q3) = (quantile(0.25), quantile(0.50), quantile(0.75));
    let group_of = |users: u64| -> u8 {
        if users <= q1 {
            1
        } else if users <= q2 {
            2
        } else if users <= q3 {
            3
        } else {
            4
        }
    };

    let mut out = Vec::new();
    for group in 1..=4u8 {
        let subset: Vec<ChunkObs> = observations
            .iter()
            .filter(|o| channel_users.get(&o.channel_id).map(|&u| group_of(u)) == Some(group))
            .copied()
            .collect();
        match conditional_median(&subset, bins, min_chunk_users) {
            Ok(curve) => out.push(QuartileCurve { quartile: group, curve }),
            Err(PhasesError::NoData) => {}
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(PhasesError::NoData);
    }
    Ok(out)
}

/// Per-user observations: the user's own message count `m` in chunks of
/// total volume `v`. Users appear only in chunks where they wrote.
#[derive(Debug, Clone)]
pub struct ResponseCurve {
    pub user_id: AnonId,
    /// `(volume, messages)` pairs, `messages >= 1`.
    pub observations: Vec<(u64, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Quadrant of the `(alpha_sub, alpha_sup)` plane in standard orientation:
/// IV (south-east) is the overload signature. Zero slopes resolve away from
/// IV, so only strictly positive-then-negative pairs count as overload.
pub fn quadrant(alpha_sub: f64, alpha_sup: f64) -> Quadrant {
    match (alpha_sub > 0.0, alpha_sup < 0.0) {
        (true, true) => Quadrant::IV,
        (true, false) => Quadrant::I,
        (false, true) => Quadrant::III,
        (false, false) => Quadrant::II,
    }
}

/// Standardized regression slopes on the two sides of the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePair {
    pub alpha_sub: f64,
    pub alpha_sup: f64,
    pub n_sub: usize,
    pub n_sup: usize,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitConfig {
    /// Overload threshold; the boundary volume belongs to neither side.
    pub v_star: u64,
    /// Upper volume bound (exclusive) for the supra-threshold fit.
    pub v_max: u64,
    /// Minimum observations required on each side.
    pub min_obs: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { v_star: DEFAULT_V_STAR, v_max: DEFAULT_V_MAX, min_obs: DEFAULT_MIN_OBS }
    }
}

/// OLS slope after z-scoring both axes, which equals the Pearson
/// correlation; any positive affine transform of the raw data is absorbed.
fn standardized_slope(points: &[(f64, f64)], region: &'static str) -> Result<f64, PhasesError> {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(PhasesError::DegenerateVariance { axis: "volume", region });
    }
    if syy == 0.0 {
        return Err(PhasesError::DegenerateVariance { axis: "output", region });
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Fits both regression slopes for one user. `Ok(None)` when either side
/// has fewer than `min_obs` points; `Err` when a side has zero variance
/// (the caller reports and skips the user).
pub fn fit_slopes(
    curve: &ResponseCurve,
    config: &FitConfig,
) -> Result<Option<SlopePair>, PhasesError> {
    let mut sub: Vec<(f64, f64)> = Vec::new();
    let mut sup: Vec<(f64, f64)> = Vec::new();
    for &(v, m) in &curve.observations {
        if v < config.v_star {
            sub.push((v as f64, m as f64));
        } else if v > config.v_star && v < config.v_max {
            sup.push((v as f64, m as f64));
        }
    }
    if sub.len() < config.min_obs || sup.len() < config.min_obs {
        return Ok(None);
    }
    let alpha_sub = standardized_slope(&sub, "sub-threshold")?;
    let alpha_sup = standardized_slope(&sup, "supra-threshold")?;
    Ok(Some(SlopePair {
        alpha_sub,
        alpha_sup,
        n_sub: sub.len(),
        n_sup: sup.len(),
        quadrant: quadrant(alpha_sub, alpha_sup),
    }))
}

/// Argmax of a centered 5-bin moving average of the curve statistic over
/// the exact-bin region. Ties resolve to the smallest volume.
pub fn peak_estimate(curve: &ConditionalCurve) -> Result<u64, PhasesError> {
    let exact: Vec<&CurveBin> = curve.bins.iter().filter(|b| b.exact).collect();
    if exact.is_empty() {
        return Err(PhasesError::NoData);
    }
    let mut best: Option<(f64, u64)> = None;
    for i in 0..exact.len() {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(exact.len() - 1);
        let window = &exact[lo..=hi];
        let smoothed = window.iter().map(|b| b.stat).sum::<f64>() / window.len() as f64;
        let better = match best {
            None => true,
            Some((best_stat, _)) => smoothed > best_stat,
        };
        if better {
            best = Some((smoothed, exact[i].v_label));
        }
    }
    Ok(best.expect("non-empty exact region").1)
}

/// Groups per-chunk author counts into per-user response curves, sorted by
/// user id.
pub fn collect_response_curves<I>(chunk_user_counts: I) -> Vec<ResponseCurve>
where
    I: IntoIterator<Item = (AnonId, u64, u32)>,
{
    let mut per_user: HashMap<AnonId, Vec<(u64, u32)>> = HashMap::new();
    for (user, volume, count) in chunk_user_counts {
        debug_assert!(count >= 1);
        per_user.entry(user).or_default().push((volume, count));
    }
    let mut curves: Vec<ResponseCurve> = per_user
        .into_iter()
        .map(|(user_id, observations)| ResponseCurve { user_id, observations })
        .collect();
    curves.sort_by_key(|c| c.user_id);
    curves
}
