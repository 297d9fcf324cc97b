use crate::error::{invalid, Result};
use crate::model::RatePoint;
use crate::rational::{int, ratio, Rational};
use crate::schemes::{coded_rate, uncoded_rate};

use super::{cutset_bound, improved_bound, BoundSpec};

/// Coded-caching corner points `(Nt/K, R_C(Nt/K))` for `t = 0..=K`.
pub fn coded_corners(num_files: u64, num_users: u64) -> Result<Vec<RatePoint>> {
    let (n, k) = (u32::try_from(num_files), u32::try_from(num_users));
    let (Ok(n), Ok(k)) = (n, k) else {
        return Err(invalid("N and K must fit in 32 bits"));
    };
    (0..=k)
        .map(|t| {
            let memory = ratio(i128::from(n) * i128::from(t), i128::from(k));
            Ok(RatePoint {
                memory,
                rate: coded_rate(n, k, memory)?,
            })
        })
        .collect()
}

/// Lower convex hull of `points`, ordered by memory.
pub fn lower_convex_envelope(points: &[RatePoint]) -> Vec<RatePoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.memory.cmp(&b.memory).then(a.rate.cmp(&b.rate)));
    pts.dedup_by(|b, a| a.memory == b.memory);

    let mut hull: Vec<RatePoint> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless a -> b -> p turns counter-clockwise
            let cross = (b.memory - a.memory) * (p.rate - a.rate)
                - (b.rate - a.rate) * (p.memory - a.memory);
            if cross <= int(0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Evaluates the polyline through `vertices` (sorted by memory) at `memory`.
pub fn piecewise_linear_at(vertices: &[RatePoint], memory: Rational) -> Result<Rational> {
    let (first, last) = match (vertices.first(), vertices.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(invalid("empty polyline")),
    };
    if memory < first.memory || memory > last.memory {
        return Err(invalid(format!(
            "memory {memory} outside [{}, {}]",
            first.memory, last.memory
        )));
    }
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        if memory <= b.memory {
            let frac = (memory - a.memory) / (b.memory - a.memory);
            return Ok(a.rate + (b.rate - a.rate) * frac);
        }
    }
    Ok(first.rate)
}

/// Memory-sharing envelope of coded caching at `memory`.
pub fn coded_envelope(num_files: u64, num_users: u64, memory: Rational) -> Result<Rational> {
    let hull = lower_convex_envelope(&coded_corners(num_files, num_users)?);
    piecewise_linear_at(&hull, memory)
}

/// `min_M (αM + R_C(M))` over the coded-caching corners, with the smallest
/// minimizing `M`.
///
/// The memory-sharing curve is piecewise linear between corners, so `αM + R`
/// is linear on each piece and its minimum over all `M` sits at a corner.
pub fn min_cost_coded(
    alpha: Rational,
    num_files: u64,
    num_users: u64,
) -> Result<(Rational, Rational)> {
    if alpha <= int(0) {
        return Err(invalid(format!("α must be positive, got {alpha}")));
    }
    let mut best: Option<(Rational, Rational)> = None;
    for p in coded_corners(num_files, num_users)? {
        let cost = alpha * p.memory + p.rate;
        if best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, p.memory));
        }
    }
    Ok(best.expect("K + 1 corners"))
}

/// One row of a memory-rate table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurveRow {
    pub memory: Rational,
    pub uncoded: Rational,
    /// Memory-sharing envelope of the coded-caching corners.
    pub coded: Rational,
    pub cutset: Rational,
    /// `max_α (bound(α) − αM)` over the requested α values, clamped at zero.
    pub improved: Rational,
}

/// Tabulates the achievable rates and lower bounds at each grid memory.
pub fn rate_curve(
    num_files: u64,
    num_users: u64,
    alphas: &[Rational],
    grid: &[Rational],
) -> Result<Vec<CurveRow>> {
    if alphas.is_empty() {
        return Err(invalid("at least one α is needed"));
    }
    let top = int(num_files as i128);
    if let Some(bad) = grid.iter().find(|m| **m < int(0) || **m > top) {
        return Err(invalid(format!(
            "grid value {bad} outside [0, {num_files}]"
        )));
    }
    let hull = lower_convex_envelope(&coded_corners(num_files, num_users)?);
    let bounds: Vec<(Rational, Rational)> = alphas
        .iter()
        .map(|&a| {
            let spec = BoundSpec::new(a, num_files, num_users)?;
            Ok((a, improved_bound(&spec)?.value()))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<CurveRow> = grid
        .iter()
        .map(|&memory| {
            let improved = bounds
                .iter()
                .map(|&(a, v)| v - a * memory)
                .max()
                .unwrap()
                .max(int(0));
            Ok(CurveRow {
                memory,
                uncoded: uncoded_rate(num_files as u32, num_users as u32, memory)?,
                coded: piecewise_linear_at(&hull, memory)?,
                cutset: cutset_bound(num_files, num_users, memory)?,
                improved,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.memory.cmp(&b.memory));
    rows.dedup_by(|b, a| a.memory == b.memory);
    Ok(rows)
}

/// `{1/j : j = 1..min(N, 2K)} ∪ {1..⌊K/2⌋ + 1}`, ascending.
pub fn default_alphas(num_files: u64, num_users: u64) -> Vec<Rational> {
    let mut v: Vec<Rational> = (1..=num_files.min(2 * num_users))
        .map(|j| ratio(1, j as i128))
        .chain((1..=num_users / 2 + 1).map(|a| int(a as i128)))
        .collect();
    v.sort();
    v.dedup();
    v
}

/// `4N + 1` evenly spaced points on `[0, N]` plus every corner `Nt/K`.
pub fn default_grid(num_files: u64, num_users: u64) -> Vec<Rational> {
    let n = num_files as i128;
    let mut v: Vec<Rational> = (0..=4 * n)
        .map(|i| ratio(i, 4))
        .chain((0..=num_users as i128).map(|t| ratio(n * t, num_users as i128)))
        .collect();
    v.sort();
    v.dedup();
    v
}
