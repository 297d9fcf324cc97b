//! Bracket on the critical database size: the fewest files at which the best
//! achievable cost `inf_M (αM + R*(M))` reaches the cacheless value `K`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rational::{ceil, ceil_div, floor, int, ratio, Exact, Rational};
use crate::schemes::coded_rate;

use super::{window_high, AlphaBranch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CriticalSizeBracket {
    pub lower: Exact,
    pub upper_cutset: u64,
    pub upper_improved: u64,
    pub upper: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BetaBracket {
    pub lower: Exact,
    pub upper: Exact,
}

/// Cut-set upper bound `⌈1/α⌉ K²`.
pub fn critical_upper_cutset(alpha: Rational, num_users: u64) -> Result<u64> {
    let c = AlphaBranch::CeilInvAlpha.constant(alpha)?;
    if num_users == 0 {
        return Err(invalid("K must be at least 1"));
    }
    Ok(c * num_users * num_users)
}

/// Upper bound from the improved converse: `⌈1/α⌉(3h² − h + 1)` with
/// `h = ⌈K/2⌉`, and for `α > 1, K ≥ 2⌊α⌋` the smaller of that and
/// `⌊α⌋(3h'² − h' + 1)` with `h' = ⌈K/(2⌊α⌋)⌉`.
pub fn critical_upper_improved(alpha: Rational, num_users: u64) -> Result<u64> {
    let c = AlphaBranch::CeilInvAlpha.constant(alpha)?;
    if num_users < 2 {
        return Err(invalid(format!("needs K ≥ 2, got {num_users}")));
    }
    let h = ceil_div(num_users as i128, 2) as u64;
    let mut best = window_high(c, h);
    if alpha > int(1) {
        let b = floor(&alpha) as u64;
        if num_users >= 2 * b {
            let h = ceil_div(num_users as i128, 2 * b as i128) as u64;
            best = best.min(window_high(b, h));
        }
    }
    Ok(best)
}

/// Lower bound `(K² + K) / (2α)` from coded caching at `t = 1`.
pub fn critical_lower(alpha: Rational, num_users: u64) -> Result<Rational> {
    if alpha <= int(0) {
        return Err(invalid(format!("α must be positive, got {alpha}")));
    }
    let k = num_users as i128;
    Ok(int(k * k + k) / (alpha * 2))
}

pub fn critical_bracket(alpha: Rational, num_users: u64) -> Result<CriticalSizeBracket> {
    let lower = critical_lower(alpha, num_users)?;
    let upper_cutset = critical_upper_cutset(alpha, num_users)?;
    let upper_improved = critical_upper_improved(alpha, num_users)?;
    let upper = upper_cutset.min(upper_improved);
    if lower > int(upper as i128) {
        return Err(Error::Consistency(format!(
            "critical-size lower bound {lower} exceeds upper bound {upper} at α = {alpha}, K = {num_users}"
        )));
    }
    Ok(CriticalSizeBracket {
        lower: Exact(lower),
        upper_cutset,
        upper_improved,
        upper,
    })
}

/// Bracket on `lim N(α, K) / K²`.
pub fn beta_bounds(alpha: Rational) -> Result<BetaBracket> {
    if alpha <= int(0) {
        return Err(invalid(format!("α must be positive, got {alpha}")));
    }
    let lower = (alpha * 2).recip();
    let upper = if alpha <= int(1) {
        int(ceil(&alpha.recip())) * ratio(3, 4)
    } else {
        ratio(3, 4) / floor(&alpha)
    };
    Ok(BetaBracket {
        lower: Exact(lower),
        upper: Exact(upper),
    })
}

/// Checks `critical_bracket(α, K) / K²` against `beta_bounds(α)` up to the
/// finite-`K` slack left by the ceilings in the upper bound.
///
/// For `α ≤ 1` the slack is `⌈1/α⌉(3/(2K) + 1/K²)`. For `α > 1` it is
/// `(3r/b − 1)/(2K) + (3r²/(4b) + b)/K²` with `b = ⌊α⌋`, `r = 2b − 1`, the
/// worst rounding of `⌈K/(2b)⌉`. Returns `None` for `α > 1, K < 2⌊α⌋`, where
/// the `α > 1` coefficient says nothing.
pub fn beta_consistent(alpha: Rational, num_users: u64) -> Result<Option<bool>> {
    let bracket = critical_bracket(alpha, num_users)?;
    let beta = beta_bounds(alpha)?;
    let k = num_users as i128;
    let k2 = int(k * k);
    let margin = if alpha <= int(1) {
        int(ceil(&alpha.recip())) * (ratio(3, 2 * k) + ratio(1, k * k))
    } else {
        let b = floor(&alpha);
        if num_users < 2 * b as u64 {
            return Ok(None);
        }
        let r = 2 * b - 1;
        ratio(3 * r - b, 2 * b * k) + (ratio(3 * r * r, 4 * b) + b) / k2
    };
    let lower_ok = bracket.lower.0 / k2 >= beta.lower.0;
    let upper_ok = int(bracket.upper as i128) / k2 <= beta.upper.0 + margin;
    Ok(Some(lower_ok && upper_ok))
}

/// Evaluation of coded caching at `N = ⌈(K² + K)/(2α) − 1⌉`, `M = N/K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrictnessReport {
    pub alpha: Exact,
    pub num_users: u64,
    /// `None` when the prescribed `N` is not a positive number of files.
    pub num_files: Option<u64>,
    pub memory: Option<Exact>,
    /// `αM + R_C(M)`.
    pub value: Option<Exact>,
    pub strictly_below_k: Option<bool>,
    pub note: Option<String>,
}

pub fn lemma3_strictness_check(alpha: Rational, num_users: u64) -> Result<StrictnessReport> {
    if num_users == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let target = critical_lower(alpha, num_users)? - 1;
    let n = ceil(&target);
    let mut report = StrictnessReport {
        alpha: Exact(alpha),
        num_users,
        num_files: None,
        memory: None,
        value: None,
        strictly_below_k: None,
        note: None,
    };
    if n < 1 {
        report.note = Some(format!(
            "prescribed N = {n} is not a positive number of files; nothing to check"
        ));
        return Ok(report);
    }
    let k = num_users as i128;
    let memory = ratio(n, k);
    let value = alpha * memory + coded_rate(n as u32, num_users as u32, memory)?;
    report.num_files = Some(n as u64);
    report.memory = Some(Exact(memory));
    report.value = Some(Exact(value));
    report.strictly_below_k = Some(value < int(k));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_bounds() {
        assert_eq!(critical_upper_cutset(int(1), 4).unwrap(), 16);
        assert_eq!(critical_upper_cutset(ratio(1, 2), 3).unwrap(), 18);
        assert_eq!(critical_upper_cutset(int(1), 1).unwrap(), 1);

        assert_eq!(critical_upper_improved(int(1), 4).unwrap(), 11);
        assert_eq!(critical_upper_improved(int(1), 3).unwrap(), 11);
        assert_eq!(critical_upper_improved(int(2), 4).unwrap(), 6);
        // K < 2⌊α⌋ falls back to the ⌈1/α⌉ formula
        assert_eq!(critical_upper_improved(int(3), 4).unwrap(), 11);
        assert!(critical_upper_improved(int(1), 1).is_err());
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(critical_lower(int(1), 4).unwrap(), int(10));
        assert_eq!(critical_lower(int(1), 3).unwrap(), int(6));
        assert_eq!(critical_lower(int(1), 1).unwrap(), int(1));
        assert_eq!(critical_lower(ratio(1, 3), 2).unwrap(), int(9));
    }

    #[test]
    fn brackets() {
        let b = critical_bracket(int(1), 4).unwrap();
        assert_eq!(
            (b.lower.0, b.upper_improved, b.upper_cutset, b.upper),
            (int(10), 11, 16, 11)
        );
        let b = critical_bracket(int(1), 2).unwrap();
        assert_eq!((b.lower.0, b.upper), (int(3), 3));
        let b = critical_bracket(int(1), 100).unwrap();
        assert_eq!((b.lower.0, b.upper), (int(5050), 7451));
    }

    #[test]
    fn beta() {
        let b = beta_bounds(int(1)).unwrap();
        assert_eq!((b.lower.0, b.upper.0), (ratio(1, 2), ratio(3, 4)));
        let b = beta_bounds(ratio(1, 2)).unwrap();
        assert_eq!((b.lower.0, b.upper.0), (int(1), ratio(3, 2)));
        let b = beta_bounds(int(2)).unwrap();
        assert_eq!((b.lower.0, b.upper.0), (ratio(1, 4), ratio(3, 8)));
        assert!(beta_bounds(int(0)).is_err());
    }

    #[test]
    fn beta_consistency_over_grid() {
        for alpha in [
            ratio(1, 3),
            ratio(1, 2),
            ratio(2, 3),
            int(1),
            ratio(3, 2),
            int(2),
            int(3),
        ] {
            for k in 2..=40 {
                assert_ne!(
                    beta_consistent(alpha, k).unwrap(),
                    Some(false),
                    "α = {alpha}, K = {k}"
                );
            }
        }
        assert_eq!(beta_consistent(int(3), 4).unwrap(), None);
    }

    #[test]
    fn strictness() {
        let r = lemma3_strictness_check(int(1), 4).unwrap();
        assert_eq!(r.num_files, Some(9));
        assert_eq!(r.memory.unwrap().0, ratio(9, 4));
        assert_eq!(r.value.unwrap().0, ratio(15, 4));
        assert_eq!(r.strictly_below_k, Some(true));

        let r = lemma3_strictness_check(int(1), 2).unwrap();
        assert_eq!((r.num_files, r.value.unwrap().0), (Some(2), ratio(3, 2)));

        let r = lemma3_strictness_check(int(1), 1).unwrap();
        assert_eq!(r.num_files, None);
        assert!(r.note.is_some());
    }
}
