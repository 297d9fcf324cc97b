//! Invariant sweeps over grids of `(α, N, K)`.
//!
//! Each check visits its grid points in parallel and reports how many it
//! evaluated, how many violated the property, and the first violating point
//! in grid order, so reports do not depend on scheduling.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    beta_consistent, coded_corners, critical_bracket, critical_lower, critical_upper_cutset,
    critical_upper_improved, cutset_bound, improved_bound, lemma3_strictness_check,
    lower_convex_envelope, piecewise_linear_at, window_low, AlphaBranch, BoundSpec, Regime,
};
use crate::constructions::{build_family, derive_bound, validate_family, Role};
use crate::error::Result;
use crate::model::{make_library, DemandVector};
use crate::rational::{binomial, int, ratio, to_exact_string, Rational};
use crate::schemes::{
    coded_place, coded_placement_rate, coded_rate, cp_place, delivery_decodes, sweep_demands,
    uncoded_place, uncoded_rate, DemandSearch,
};

/// Grid of bound specifications. Points with `K < 2` are skipped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepGrid {
    pub alphas: Vec<Rational>,
    pub num_files: RangeInclusive<u64>,
    pub num_users: RangeInclusive<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            alphas: vec![
                ratio(1, 3),
                ratio(1, 2),
                ratio(2, 3),
                int(1),
                ratio(3, 2),
                int(2),
                int(3),
            ],
            num_files: 1..=60,
            num_users: 2..=12,
        }
    }
}

impl SweepGrid {
    pub fn specs(&self) -> Vec<BoundSpec> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for k in self.num_users.clone().filter(|&k| k >= 2) {
                for n in self.num_files.clone().filter(|&n| n >= 1) {
                    out.extend(BoundSpec::new(alpha, n, k).ok());
                }
            }
        }
        out
    }

    /// Distinct `(α, K)` pairs with `K ≥ 2`.
    pub fn alpha_users(&self) -> Vec<(Rational, u64)> {
        self.alphas
            .iter()
            .flat_map(|&a| {
                self.num_users
                    .clone()
                    .filter(|&k| k >= 2)
                    .map(move |k| (a, k))
            })
            .collect()
    }
}

/// Deliberate faults for exercising the failure path of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Adds `K` to the first improved-bound value the soundness check sees.
    InflateBound,
    /// Overwrites the first anchor of the first generated family.
    CorruptFamily,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub evaluated: u64,
    pub violations: u64,
    /// First violating point in grid order.
    pub witness: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn tally<T: Sync>(
    name: &'static str,
    items: &[T],
    f: impl Fn(usize, &T) -> Result<Option<String>> + Sync,
) -> CheckOutcome {
    let failures: Vec<Option<String>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| match f(i, item) {
            Ok(v) => v,
            Err(e) => Some(format!("error: {e}")),
        })
        .collect();
    let mut failures = failures.into_iter().flatten();
    let witness = failures.next();
    CheckOutcome {
        name,
        evaluated: items.len() as u64,
        violations: witness.iter().count() as u64 + failures.count() as u64,
        witness,
    }
}

fn at(spec: &BoundSpec) -> String {
    format!(
        "α = {}, N = {}, K = {}",
        to_exact_string(&spec.alpha),
        spec.num_files,
        spec.num_users
    )
}

/// The improved bound never exceeds `αM + R_U(M)` or `αM + R_C(M)` at any
/// coded-caching corner.
pub fn check_soundness(grid: &SweepGrid, fault: Option<Fault>) -> CheckOutcome {
    tally("soundness", &grid.specs(), |i, spec| {
        let mut bound = improved_bound(spec)?.value();
        if i == 0 && fault == Some(Fault::InflateBound) {
            bound += int(spec.num_users as i128);
        }
        let (n, k) = (spec.num_files as u32, spec.num_users as u32);
        let hull = lower_convex_envelope(&coded_corners(spec.num_files, spec.num_users)?);
        for corner in &hull {
            let m = corner.memory;
            let coded = spec.alpha * m + piecewise_linear_at(&hull, m)?;
            let uncoded = spec.alpha * m + uncoded_rate(n, k, m)?;
            if bound > coded.min(uncoded) {
                return Ok(Some(format!(
                    "{}: bound {} above achievable {} at M = {}",
                    at(spec),
                    to_exact_string(&bound),
                    to_exact_string(&coded.min(uncoded)),
                    to_exact_string(&m)
                )));
            }
        }
        Ok(None)
    })
}

/// The cut-set bound never exceeds the coded-caching envelope at a corner.
pub fn check_cutset_soundness(grid: &SweepGrid) -> CheckOutcome {
    let mut pairs: Vec<(u64, u64)> = grid
        .specs()
        .iter()
        .map(|s| (s.num_files, s.num_users))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    tally("cutset_soundness", &pairs, |_, &(n, k)| {
        let corners = coded_corners(n, k)?;
        let hull = lower_convex_envelope(&corners);
        for c in &corners {
            let cut = cutset_bound(n, k, c.memory)?;
            let env = piecewise_linear_at(&hull, c.memory)?;
            if cut > env {
                return Ok(Some(format!(
                    "N = {n}, K = {k}, M = {}: cut-set {} above envelope {}",
                    to_exact_string(&c.memory),
                    to_exact_string(&cut),
                    to_exact_string(&env)
                )));
            }
        }
        Ok(None)
    })
}

/// Every winning `(n, γ)` outside the small-N case satisfies
/// `c((n − γ)² − (n − γ) + 1) ≤ N` for its branch constant.
pub fn check_feasibility_window(grid: &SweepGrid) -> CheckOutcome {
    tally("feasibility_window", &grid.specs(), |_, spec| {
        for branch in [AlphaBranch::CeilInvAlpha, AlphaBranch::FloorAlpha] {
            if branch == AlphaBranch::FloorAlpha && !spec.floor_branch_applies() {
                continue;
            }
            let r = crate::bounds::improved_bound_branch(spec, branch)?;
            if r.regime == Regime::SmallN {
                continue;
            }
            let low = window_low(branch.constant(spec.alpha)?, r.width());
            if low > spec.num_files {
                return Ok(Some(format!(
                    "{}: {branch:?} window start {low} exceeds N (n = {}, γ = {})",
                    at(spec),
                    r.n,
                    r.gamma
                )));
            }
        }
        Ok(None)
    })
}

/// `lower ≤ min(upper_improved, upper_cutset)`, and `upper_improved ≤
/// upper_cutset` whenever `α ≤ 1` and `K ≠ 3`.
///
/// At `K = 3` the improved bound uses `h = 2` and gives `11⌈1/α⌉`, above the
/// cut-set value `9⌈1/α⌉`; for every other `K ≥ 2` it is the smaller one.
pub fn check_bracket_ordering(grid: &SweepGrid) -> CheckOutcome {
    tally("bracket_ordering", &grid.alpha_users(), |_, &(alpha, k)| {
        let lower = critical_lower(alpha, k)?;
        let improved = critical_upper_improved(alpha, k)?;
        let cutset = critical_upper_cutset(alpha, k)?;
        let ordered = lower <= int(improved.min(cutset) as i128)
            && (alpha > int(1) || k == 3 || improved <= cutset);
        Ok((!ordered).then(|| {
            format!(
                "α = {}, K = {k}: lower {}, improved {improved}, cut-set {cutset}",
                to_exact_string(&alpha),
                to_exact_string(&lower)
            )
        }))
    })
}

/// For even `K`, `N = ⌈1/α⌉(3K²/4 − K/2 + 1)` gives bound `K` with
/// `n = K/2, γ = 0`.
pub fn check_pivots(grid: &SweepGrid) -> CheckOutcome {
    let points: Vec<(Rational, u64)> = grid
        .alpha_users()
        .into_iter()
        .filter(|&(_, k)| k % 2 == 0)
        .collect();
    tally("pivot_exactness", &points, |_, &(alpha, k)| {
        let c = AlphaBranch::CeilInvAlpha.constant(alpha)?;
        let n = c * (3 * k * k / 4 - k / 2 + 1);
        let spec = BoundSpec::new(alpha, n, k)?;
        let r = improved_bound(&spec)?;
        let ok = r.value() == int(k as i128) && r.n == k / 2 && r.gamma == 0;
        Ok((!ok).then(|| {
            format!(
                "{}: value {}, n = {}, γ = {}",
                at(&spec),
                to_exact_string(&r.value()),
                r.n,
                r.gamma
            )
        }))
    })
}

/// Coded caching at `N = ⌈(K² + K)/(2α) − 1⌉, M = N/K` costs strictly less
/// than `K`. Points where that `N` is not positive are counted as passing.
pub fn check_strictness(grid: &SweepGrid) -> CheckOutcome {
    tally("strictness", &grid.alpha_users(), |_, &(alpha, k)| {
        let r = lemma3_strictness_check(alpha, k)?;
        Ok((r.strictly_below_k == Some(false)).then(|| {
            format!(
                "α = {}, K = {k}: αM + R = {} at N = {:?}",
                to_exact_string(&alpha),
                r.value.map(|v| to_exact_string(&v.0)).unwrap_or_default(),
                r.num_files
            )
        }))
    })
}

/// The critical-size bracket scaled by `K²` sits inside the β bracket up to
/// the finite-`K` slack.
pub fn check_beta_consistency(grid: &SweepGrid) -> CheckOutcome {
    tally("beta_consistency", &grid.alpha_users(), |_, &(alpha, k)| {
        critical_bracket(alpha, k)?;
        Ok((beta_consistent(alpha, k)? == Some(false))
            .then(|| format!("α = {}, K = {k}", to_exact_string(&alpha))))
    })
}

/// Families validate and their counting reproduces the closed form wherever
/// the bound is not in the small-N case.
pub fn check_family_equivalence(grid: &SweepGrid, fault: Option<Fault>) -> CheckOutcome {
    let specs: Vec<BoundSpec> = grid
        .specs()
        .into_iter()
        .filter(|s| improved_bound(s).is_ok_and(|r| r.regime != Regime::SmallN))
        .collect();
    tally("family_equivalence", &specs, |i, spec| {
        let mut fam = build_family(spec)?;
        if i == 0 && fault == Some(Fault::CorruptFamily) {
            let pos = fam.roles[0]
                .iter()
                .position(|&r| r == Role::Anchor)
                .unwrap_or(0);
            let cell = &mut fam.vectors[0][pos];
            *cell = *cell % spec.num_files + 1;
        }
        let report = validate_family(&fam, spec);
        if !report.passed() {
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name)
                .collect();
            return Ok(Some(format!("{}: failed checks {failed:?}", at(spec))));
        }
        let derived = derive_bound(&fam, spec)?.derived_bound.0;
        let closed = improved_bound(spec)?.value();
        Ok((derived != closed).then(|| {
            format!(
                "{}: counting {} vs closed form {}",
                at(spec),
                to_exact_string(&derived),
                to_exact_string(&closed)
            )
        }))
    })
}

/// One bit-exact scheme experiment: `N` files, `K` users, coded-caching
/// parameter `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SchemeCase {
    pub num_files: u32,
    pub num_users: u32,
    pub t: u32,
}

/// `N = K ∈ sizes`, every `t ∈ 0..=K`.
pub fn square_cases(sizes: impl IntoIterator<Item = u32>) -> Vec<SchemeCase> {
    sizes
        .into_iter()
        .flat_map(|k| {
            (0..=k).map(move |t| SchemeCase {
                num_files: k,
                num_users: k,
                t,
            })
        })
        .collect()
}

/// Every demand vector decodes bit-exactly under coded caching with a
/// demand-independent rate equal to the formula; uncoded caching at
/// `M = Nt/K` decodes everywhere and meets its formula on distinct demands;
/// for `N = K`, coded content placement decodes every distinct demand at rate
/// `N − 1`.
pub fn check_schemes(cases: &[SchemeCase], demand_limit: u128) -> CheckOutcome {
    let search = DemandSearch {
        limit: demand_limit,
        ..DemandSearch::default()
    };
    let results: Vec<Option<String>> = cases
        .iter()
        .map(|case| {
            scheme_case(case, &search).unwrap_or_else(|e| Some(format!("{case:?}: error: {e}")))
        })
        .collect();
    let mut failures = results.into_iter().flatten();
    let witness = failures.next();
    CheckOutcome {
        name: "scheme_decodability",
        evaluated: cases.len() as u64,
        violations: witness.iter().count() as u64 + failures.count() as u64,
        witness,
    }
}

fn scheme_case(case: &SchemeCase, search: &DemandSearch) -> Result<Option<String>> {
    let SchemeCase {
        num_files: n,
        num_users: k,
        t,
    } = *case;
    let file_size = k as usize * binomial(k, t) as usize * 4;
    let library = make_library(n, file_size, 0x5eed ^ u64::from(t))?;
    let memory = ratio(i128::from(n) * i128::from(t), i128::from(k));

    let coded = sweep_demands(&coded_place(&library, k, t)?, &library, search)?;
    let formula = coded_rate(n, k, memory)?;
    if coded.decoded != coded.evaluated || coded.max_rate != formula || coded.min_rate != formula {
        return Ok(Some(format!(
            "coded {case:?}: {}/{} decoded, rates {}..{} vs {}",
            coded.decoded,
            coded.evaluated,
            to_exact_string(&coded.min_rate),
            to_exact_string(&coded.max_rate),
            to_exact_string(&formula)
        )));
    }

    let uncoded = uncoded_place(&library, k, memory)?;
    let sweep = sweep_demands(&uncoded, &library, search)?;
    if sweep.decoded != sweep.evaluated {
        return Ok(Some(format!(
            "uncoded {case:?}: {}/{} decoded",
            sweep.decoded, sweep.evaluated
        )));
    }
    if n >= k {
        let formula = uncoded_rate(n, k, memory)?;
        let d = DemandVector::new((1..=k).collect(), n, k)?;
        let (r, ok) = delivery_decodes(&uncoded, &library, &d)?;
        if !ok || r.measured_rate != formula {
            return Ok(Some(format!(
                "uncoded {case:?}: distinct demands give {} vs {}",
                to_exact_string(&r.measured_rate),
                to_exact_string(&formula)
            )));
        }
    }

    if n == k && t == 0 {
        let library = make_library(n, n as usize * 8, 0xc0de)?;
        let inst = cp_place(&library, n)?;
        for d in permutations(n) {
            let d = DemandVector::new(d, n, k)?;
            let (r, ok) = delivery_decodes(&inst, &library, &d)?;
            if !ok || r.measured_rate != coded_placement_rate(n) {
                return Ok(Some(format!(
                    "coded placement N = {n}: demand {:?} gives {}",
                    d.as_slice(),
                    to_exact_string(&r.measured_rate)
                )));
            }
        }
    }
    Ok(None)
}

fn permutations(n: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Settings for [`verify_all`].
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub grid: SweepGrid,
    pub scheme_cases: Vec<SchemeCase>,
    pub demand_limit: u128,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grid: SweepGrid::default(),
            scheme_cases: square_cases(2..=4),
            demand_limit: crate::schemes::DEFAULT_DEMAND_LIMIT,
            fault: None,
        }
    }
}

pub fn verify_all(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    vec![
        check_soundness(&opts.grid, opts.fault),
        check_cutset_soundness(&opts.grid),
        check_feasibility_window(&opts.grid),
        check_bracket_ordering(&opts.grid),
        check_pivots(&opts.grid),
        check_strictness(&opts.grid),
        check_beta_consistency(&opts.grid),
        check_family_equivalence(&opts.grid, opts.fault),
        check_schemes(&opts.scheme_cases, opts.demand_limit),
    ]
}
