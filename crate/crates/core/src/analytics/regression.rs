//! Least-squares fit of attack volume against packet rate.
//!
//! With a constant amplification mode the slope is the mean bits per
//! packet. When one line explains the data poorly the events are split
//! into two populations at the widest gap of their bits-per-packet ratios
//! and each population is fitted on its own.

use serde::Serialize;

use crate::detector::AttackEvent;
use crate::error::{Error, Result};
use crate::model::AmplificationProtocol;

pub const DEFAULT_SEGMENT_THRESHOLD: f64 = 0.9;

const MIN_EVENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub protocol: AmplificationProtocol,
    /// Slope of the single-line fit, or of the larger segment when split.
    pub slope_bits_per_packet: f64,
    pub intercept_bps: f64,
    /// Goodness of fit of the reported model (piecewise when split).
    pub r_squared: f64,
    pub segment_count: usize,
    /// Per-segment fits, ordered by ascending bits-per-packet ratio.
    pub segments: Vec<LineFit>,
}

/// Fits `peak_rate_bps` against `peak_rate_pps` for events of one protocol.
pub fn fit_rate_volume(
    protocol: AmplificationProtocol,
    events: &[&AttackEvent],
    segment_threshold: f64,
) -> Result<RegressionFit> {
    if events.len() < MIN_EVENTS {
        return Err(Error::InsufficientData {
            needed: format!("{MIN_EVENTS} events"),
            got: format!("{} events", events.len()),
        });
    }
    let points: Vec<(f64, f64)> = events
        .iter()
        .map(|e| (e.peak_rate_pps, e.peak_rate_bps as f64))
        .collect();

    let single = ols(&points);
    if single.r_squared >= segment_threshold {
        return Ok(RegressionFit {
            protocol,
            slope_bits_per_packet: single.slope,
            intercept_bps: single.intercept,
            r_squared: single.r_squared,
            segment_count: 1,
            segments: vec![single],
        });
    }

    let mut by_ratio = points.clone();
    by_ratio.sort_by(|a, b| ratio(*a).total_cmp(&ratio(*b)));
    let split = widest_gap(&by_ratio);
    let (low, high) = by_ratio.split_at(split);
    let fits = [ols(low), ols(high)];

    let total_ss = sum_sq_dev(&points);
    let residual: f64 = [low, high]
        .iter()
        .zip(&fits)
        .map(|(pts, f)| residual_ss(pts, f))
        .sum();
    let major = if fits[1].points > fits[0].points {
        fits[1]
    } else {
        fits[0]
    };
    Ok(RegressionFit {
        protocol,
        slope_bits_per_packet: major.slope,
        intercept_bps: major.intercept,
        r_squared: r_squared(residual, total_ss),
        segment_count: 2,
        segments: fits.to_vec(),
    })
}

fn ratio((x, y): (f64, f64)) -> f64 {
    if x > 0.0 {
        y / x
    } else {
        f64::INFINITY
    }
}

/// Index splitting sorted points at the largest jump in ratio.
fn widest_gap(sorted: &[(f64, f64)]) -> usize {
    (1..sorted.len())
        .max_by(|&a, &b| {
            let ga = ratio(sorted[a]) - ratio(sorted[a - 1]);
            let gb = ratio(sorted[b]) - ratio(sorted[b - 1]);
            ga.total_cmp(&gb).then(b.cmp(&a))
        })
        .unwrap_or(1)
}

/// Ordinary least squares with intercept. Falls back to a line through the
/// origin when all x are equal.
pub fn ols(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    if points.is_empty() {
        return LineFit {
            slope: 0.0,
            intercept: 0.0,
            r_squared: 0.0,
            points: 0,
        };
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();

    let (slope, intercept) = if sxx > 0.0 {
        let slope = sxy / sxx;
        (slope, mean_y - slope * mean_x)
    } else {
        let xx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let xy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        (if xx > 0.0 { xy / xx } else { 0.0 }, 0.0)
    };
    let mut fit = LineFit {
        slope,
        intercept,
        r_squared: 0.0,
        points: points.len(),
    };
    fit.r_squared = r_squared(residual_ss(points, &fit), sum_sq_dev(points));
    fit
}

fn sum_sq_dev(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    points.iter().map(|p| (p.1 - mean_y).powi(2)).sum()
}

fn residual_ss(points: &[(f64, f64)], fit: &LineFit) -> f64 {
    points
        .iter()
        .map(|&(x, y)| (y - (fit.slope * x + fit.intercept)).powi(2))
        .sum()
}

fn r_squared(residual: f64, total: f64) -> f64 {
    if total <= 0.0 {
        // all y equal: a perfect fit iff the residual vanishes
        return if residual <= f64::EPSILON { 1.0 } else { 0.0 };
    }
    (1.0 - residual / total).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::test_support::event_with_rates;

    #[test]
    fn exact_line_is_recovered() {
        let fit = ols(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn vertical_data_falls_back_to_origin_fit() {
        let fit = ols(&[(2.0, 4.0), (2.0, 6.0)]);
        assert_eq!(fit.intercept, 0.0);
        assert!((fit.slope - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_events_is_insufficient() {
        let a = event_with_rates(1, 1e6, 8e9 as u64);
        let b = event_with_rates(2, 2e6, 16e9 as u64);
        let err = fit_rate_volume(AmplificationProtocol::Dns, &[&a, &b], 0.9).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }));
    }

    #[test]
    fn two_ratio_clusters_split_at_the_gap() {
        let mut evs = Vec::new();
        for i in 1..=6u8 {
            let pps = i as f64 * 1e6;
            evs.push(event_with_rates(i, pps, (pps * 347.0 * 8.0) as u64));
            let pps = (7 - i) as f64 * 1.1e6;
            evs.push(event_with_rates(100 + i, pps, (pps * 1216.0 * 8.0) as u64));
        }
        let refs: Vec<&AttackEvent> = evs.iter().collect();
        let fit = fit_rate_volume(AmplificationProtocol::WsDiscovery, &refs, 0.9).unwrap();
        assert_eq!(fit.segment_count, 2);
        assert_eq!(fit.segments[0].points, 6);
        assert!((fit.segments[0].slope - 347.0 * 8.0).abs() / (347.0 * 8.0) < 1e-6);
        assert!((fit.segments[1].slope - 1216.0 * 8.0).abs() / (1216.0 * 8.0) < 1e-6);
        assert!(fit.r_squared > 0.999);
    }
}
