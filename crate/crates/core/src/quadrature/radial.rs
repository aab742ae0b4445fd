use super::kronrod::{integrate_segments, Segment};
use super::{Integral, QuadratureSpec};
use crate::error::Result;

/// Half-window around each peak, in units of `peak_width`.
pub const PEAK_WINDOW_FACTOR: f64 = 12.0;

/// Splits [0, inf) for a peaked integrand.
///
/// Each peak `p` gets a window `[p - W, p + W]` with `W = 12 * peak_width`,
/// pre-cut into unit panels of the scaled variable `z = (r - p) / peak_width`.
/// Gaps between windows are single panels and everything beyond the last
/// window is the mapped tail `r = base / t`.
pub fn radial_segments(spec: &QuadratureSpec) -> Vec<Segment> {
    let w = PEAK_WINDOW_FACTOR * spec.peak_width;
    let mut windows: Vec<(f64, f64)> = spec
        .peak_locations
        .iter()
        .filter(|p| p.is_finite() && **p + w > 0.0)
        .map(|&p| ((p - w).max(0.0), p + w))
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in windows {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }

    let mut cuts: Vec<f64> = vec![0.0];
    for &(lo, hi) in &merged {
        cuts.push(lo);
        let n = ((hi - lo) / spec.peak_width).round().max(1.0) as usize;
        for k in 1..n {
            cuts.push(lo + (hi - lo) * k as f64 / n as f64);
        }
        cuts.push(hi);
    }
    let tail_base = merged.last().map(|m| m.1).unwrap_or(1.0);
    if merged.is_empty() {
        cuts.push(tail_base);
    }
    cuts.extend(
        spec.breakpoints
            .iter()
            .copied()
            .filter(|b| *b > 0.0 && *b < tail_base),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));

    let mut segs: Vec<Segment> = cuts
        .windows(2)
        .filter(|c| c[1] > c[0])
        .map(|c| Segment::finite(c[0], c[1]))
        .collect();
    segs.push(Segment::tail(tail_base));
    segs
}

/// Integrates `f` over [0, inf) with peak splitting (see [`radial_segments`]).
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    let segs = radial_segments(spec);
    integrate_segments(&f, &segs, spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
}
