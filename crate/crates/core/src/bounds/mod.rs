//! Lower bounds on the cost `αM + R` of any caching scheme, achievable
//! envelopes, and the critical database size bracket.
//!
//! Everything here is exact. The square roots and ceilings in the window
//! parameter `n` are resolved by integer search against the window inequality
//! `c(3n² − n + 1) ≥ N`, which is what the closed-form ceiling expresses.

mod achievable;
mod critical;

pub use achievable::{
    coded_corners, coded_envelope, default_alphas, default_grid, lower_convex_envelope,
    min_cost_coded, piecewise_linear_at, rate_curve, CurveRow,
};
pub use critical::{
    beta_bounds, beta_consistent, critical_bracket, critical_lower, critical_upper_cutset,
    critical_upper_improved, lemma3_strictness_check, BetaBracket, CriticalSizeBracket,
    StrictnessReport,
};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rational::{ceil, floor, int, isqrt, ratio, Exact, Rational};

/// Which case of the improved bound produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `N` below the branch constant; no request-vector family is used.
    SmallN,
    /// All files are covered by the family's anchor, `u` and `v` slots.
    MidN,
    /// More files than slots; only `c(3m² − m + 1)` files are counted.
    LargeN,
}

/// The two statements of the improved bound. `CeilInvAlpha` uses
/// `c = ⌈1/α⌉` and holds for every `α > 0`; `FloorAlpha` uses `c = ⌊α⌋`
/// and needs `α > 1`, `K ≥ 2⌊α⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaBranch {
    CeilInvAlpha,
    FloorAlpha,
}

impl AlphaBranch {
    /// `⌈1/α⌉` or `⌊α⌋`.
    pub fn constant(self, alpha: Rational) -> Result<u64> {
        check_alpha(alpha)?;
        match self {
            AlphaBranch::CeilInvAlpha => Ok(ceil(&alpha.recip()) as u64),
            AlphaBranch::FloorAlpha => {
                if alpha <= int(1) {
                    return Err(invalid(format!(
                        "the floor branch needs α > 1, got {alpha}"
                    )));
                }
                Ok(floor(&alpha) as u64)
            }
        }
    }

    /// Users occupied per anchor slot: 1 for the ceiling branch, `⌊α⌋` for
    /// the floor branch.
    fn users_per_slot(self, constant: u64) -> u64 {
        match self {
            AlphaBranch::CeilInvAlpha => 1,
            AlphaBranch::FloorAlpha => constant,
        }
    }
}

fn check_alpha(alpha: Rational) -> Result<()> {
    if alpha <= int(0) {
        return Err(invalid(format!("α must be positive, got {alpha}")));
    }
    Ok(())
}

/// Parameters of one improved-bound evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundSpec {
    pub alpha: Rational,
    pub num_files: u64,
    pub num_users: u64,
}

impl BoundSpec {
    pub fn new(alpha: Rational, num_files: u64, num_users: u64) -> Result<Self> {
        check_alpha(alpha)?;
        if num_files == 0 {
            return Err(invalid("N must be at least 1"));
        }
        if num_users < 2 {
            return Err(invalid(format!(
                "the improved bound needs K ≥ 2, got {num_users}"
            )));
        }
        Ok(BoundSpec {
            alpha,
            num_files,
            num_users,
        })
    }

    /// Whether the floor-α statement applies: `α > 1` and `K ≥ 2⌊α⌋`.
    pub fn floor_branch_applies(&self) -> bool {
        self.alpha > int(1) && self.num_users >= 2 * floor(&self.alpha) as u64
    }
}

/// A lower bound on `αM + R` with the parameters that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundResult {
    pub value: Exact,
    pub n: u64,
    pub gamma: u64,
    pub regime: Regime,
    #[serde(rename = "branch")]
    pub alpha_branch: AlphaBranch,
}

impl BoundResult {
    pub fn value(&self) -> Rational {
        self.value.0
    }

    /// The effective window size `n − γ`.
    pub fn width(&self) -> u64 {
        self.n - self.gamma
    }
}

/// `c (m² − m + 1)`: the number of distinct anchor and `u` files.
pub fn window_low(constant: u64, m: u64) -> u64 {
    constant * (m * m - m + 1)
}

/// `c (3m² − m + 1)`: the largest `N` whose files all fit the family's slots.
pub fn window_high(constant: u64, m: u64) -> u64 {
    constant * (3 * m * m - m + 1)
}

/// `n = ⌈(c + √(c² + 12c(N − c))) / (6c)⌉` in exact arithmetic.
///
/// This is the least `n ≥ 1` with `c(3n² − n + 1) ≥ N`. The integer square
/// root gives a starting point and the window inequality settles the answer.
pub fn compute_n(alpha: Rational, branch: AlphaBranch, num_files: u64) -> Result<u64> {
    let c = branch.constant(alpha)?;
    window_n(c, num_files)
}

pub(crate) fn window_n(c: u64, num_files: u64) -> Result<u64> {
    if num_files < c {
        return Err(Error::Regime(format!(
            "N = {num_files} is below the branch constant {c}; use the small-N case"
        )));
    }
    let (ci, ni) = (i128::from(c), i128::from(num_files));
    let disc = ci * ci + 12 * ci * (ni - ci);
    let mut n = (ci + isqrt(disc)).div_euclid(6 * ci).max(1) as u64;
    while window_high(c, n) < num_files {
        n += 1;
    }
    while n > 1 && window_high(c, n - 1) >= num_files {
        n -= 1;
    }
    Ok(n)
}

/// `γ = max(0, ⌈n − K/(2s)⌉)` where `s` is 1 for the ceiling branch and `⌊α⌋`
/// for the floor branch. Guarantees `n − γ ≥ 1`.
pub fn compute_gamma(n: u64, num_users: u64, alpha: Rational, branch: AlphaBranch) -> Result<u64> {
    let c = branch.constant(alpha)?;
    let per_slot = branch.users_per_slot(c);
    if num_users < 2 * per_slot {
        return Err(invalid(format!(
            "K = {num_users} is below {} required by this branch",
            2 * per_slot
        )));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    // ⌈n − K/(2s)⌉ = n − ⌊K/(2s)⌋
    let fit = num_users / (2 * per_slot);
    Ok(n.saturating_sub(fit))
}

/// Improved bound for one branch.
pub fn improved_bound_branch(spec: &BoundSpec, branch: AlphaBranch) -> Result<BoundResult> {
    let c = branch.constant(spec.alpha)?;
    let big_n = spec.num_files;
    if branch == AlphaBranch::FloorAlpha && !spec.floor_branch_applies() {
        return Err(invalid(format!(
            "floor branch needs K ≥ 2⌊α⌋ = {}, got K = {}",
            2 * c,
            spec.num_users
        )));
    }

    if big_n < c {
        let value = match branch {
            AlphaBranch::CeilInvAlpha => ratio(big_n as i128, c as i128),
            AlphaBranch::FloorAlpha => int(big_n as i128),
        };
        return Ok(BoundResult {
            value: Exact(value),
            n: 0,
            gamma: 0,
            regime: Regime::SmallN,
            alpha_branch: branch,
        });
    }

    let n = window_n(c, big_n)?;
    let gamma = compute_gamma(n, spec.num_users, spec.alpha, branch)?;
    let m = n - gamma;
    let (mi, ci, ni) = (m as i128, c as i128, big_n as i128);
    let low = window_low(c, m) as i128;
    let (value, regime) = if big_n <= window_high(c, m) {
        let v = match branch {
            AlphaBranch::CeilInvAlpha => ratio(ni - low, 2 * ci * mi) + mi,
            AlphaBranch::FloorAlpha => ratio(ni - low, 2 * mi) + mi * ci,
        };
        (v, Regime::MidN)
    } else {
        let v = match branch {
            AlphaBranch::CeilInvAlpha => int(2 * mi),
            AlphaBranch::FloorAlpha => int(2 * mi * ci),
        };
        (v, Regime::LargeN)
    };
    Ok(BoundResult {
        value: Exact(value),
        n,
        gamma,
        regime,
        alpha_branch: branch,
    })
}

/// Lower bound on `αM + R` for every achievable `(M, R)`.
///
/// For `α > 1` with `K ≥ 2⌊α⌋` both statements apply and the larger value is
/// returned; ties report the ceiling branch.
pub fn improved_bound(spec: &BoundSpec) -> Result<BoundResult> {
    let ceil_branch = improved_bound_branch(spec, AlphaBranch::CeilInvAlpha)?;
    if !spec.floor_branch_applies() {
        return Ok(ceil_branch);
    }
    let floor_branch = improved_bound_branch(spec, AlphaBranch::FloorAlpha)?;
    Ok(if floor_branch.value > ceil_branch.value {
        floor_branch
    } else {
        ceil_branch
    })
}

fn check_memory(num_files: u64, num_users: u64, memory: Rational) -> Result<()> {
    if num_files == 0 || num_users == 0 {
        return Err(invalid("N and K must be at least 1"));
    }
    if memory < int(0) || memory > int(num_files as i128) {
        return Err(invalid(format!("memory {memory} outside [0, {num_files}]")));
    }
    Ok(())
}

/// One cut-set line `s − (s / ⌊N/s⌋) M` as (intercept, slope).
fn cutset_line(num_files: u64, s: u64) -> (Rational, Rational) {
    let groups = (num_files / s) as i128;
    (int(s as i128), -ratio(s as i128, groups))
}

/// `max_s (s − s/⌊N/s⌋ · M)` over `s ∈ 1..=min(N, K)`, clamped at zero,
/// with the smallest maximizing `s`.
pub fn cutset_bound_witness(
    num_files: u64,
    num_users: u64,
    memory: Rational,
) -> Result<(Rational, u64)> {
    check_memory(num_files, num_users, memory)?;
    let mut best: Option<(Rational, u64)> = None;
    for s in 1..=num_files.min(num_users) {
        let (a, b) = cutset_line(num_files, s);
        let v = a + b * memory;
        if best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, s));
        }
    }
    let (v, s) = best.expect("at least one cut");
    Ok((v.max(int(0)), s))
}

pub fn cutset_bound(num_files: u64, num_users: u64, memory: Rational) -> Result<Rational> {
    cutset_bound_witness(num_files, num_users, memory).map(|(v, _)| v)
}

/// `inf_{0 ≤ M ≤ N} (αM + cutset(M))` and the smallest minimizing `M`.
///
/// The objective is convex and piecewise linear, so the infimum sits at an
/// endpoint, a crossing of two cut lines, or a zero of one line.
pub fn cutset_min_cost(
    alpha: Rational,
    num_files: u64,
    num_users: u64,
) -> Result<(Rational, Rational)> {
    check_alpha(alpha)?;
    check_memory(num_files, num_users, int(0))?;
    let top = int(num_files as i128);
    let lines: Vec<(Rational, Rational)> = (1..=num_files.min(num_users))
        .map(|s| cutset_line(num_files, s))
        .collect();
    let mut candidates = vec![int(0), top];
    for (i, &(a1, b1)) in lines.iter().enumerate() {
        candidates.push(-a1 / b1);
        for &(a2, b2) in &lines[i + 1..] {
            if b1 != b2 {
                candidates.push((a2 - a1) / (b1 - b2));
            }
        }
    }
    candidates.retain(|m| *m >= int(0) && *m <= top);
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(Rational, Rational)> = None;
    for m in candidates {
        let cost = alpha * m + cutset_bound(num_files, num_users, m)?;
        if best.map_or(true, |(bc, _)| cost < bc) {
            best = Some((cost, m));
        }
    }
    Ok(best.expect("endpoints are always candidates"))
}
