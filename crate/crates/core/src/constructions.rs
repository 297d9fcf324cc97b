//! Request-vector families behind the improved lower bound.
//!
//! A family is a set of demand vectors with four kinds of position: anchor
//! files that each designated user requests in turn, `u` files that two
//! half-blocks of vectors request from complementary user positions, `v`
//! files that fill the remaining designated slots, and `t` filler positions
//! beyond them. Counting what a genie could decode from the family, in three
//! steps (anchors, `u` files, everything else), reproduces the bound's closed
//! form. Only that arithmetic consequence is checked here; the entropy steps
//! behind each count are not machine-verified.
//!
//! Layouts:
//!
//! * ceiling branch, `c = ⌈1/α⌉`: `c` disjoint sets of `2m` vectors, one anchor
//!   per set, where `m = n − γ`;
//! * floor branch, `b = ⌊α⌋`: one set of `2m` vectors whose anchor slot spans
//!   `b` users and holds files `1..b`.

use std::collections::BTreeSet;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::bounds::{
    improved_bound, improved_bound_branch, window_high, window_low, AlphaBranch, BoundResult,
    BoundSpec, Regime,
};
use crate::error::{invalid, Error, Result};
use crate::rational::{ratio, to_exact_string, Exact, Rational};

/// What a position of a request vector is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Anchor,
    U,
    V,
    T,
}

/// Geometry shared by generation, validation and counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layout {
    sets: u64,
    /// Users per anchor slot.
    slot: u64,
    /// `m = n − γ`.
    width: u64,
    num_users: u64,
}

impl Layout {
    fn new(branch: AlphaBranch, constant: u64, width: u64, num_users: u64) -> Self {
        let (sets, slot) = match branch {
            AlphaBranch::CeilInvAlpha => (constant, 1),
            AlphaBranch::FloorAlpha => (1, constant),
        };
        Layout {
            sets,
            slot,
            width,
            num_users,
        }
    }

    /// Users in one half-block.
    fn half(&self) -> usize {
        (self.width * self.slot) as usize
    }

    fn vectors_per_set(&self) -> usize {
        2 * self.width as usize
    }

    /// Role of position `pos` in vector `p` of a set (both 0-based).
    fn role(&self, p: usize, pos: usize) -> Role {
        let (half, m, slot) = (self.half(), self.width as usize, self.slot as usize);
        if pos >= 2 * half {
            return Role::T;
        }
        let (front, idx) = if p < m { (true, p) } else { (false, p - m) };
        let in_front = pos < half;
        if in_front != front {
            return Role::V;
        }
        let local = if front { pos } else { pos - half };
        if local / slot == idx {
            Role::Anchor
        } else {
            Role::U
        }
    }

    /// The vector and position whose entry block-symmetry mirrors.
    fn mirror(&self, p: usize, pos: usize) -> Option<(usize, usize)> {
        let (half, m) = (self.half(), self.width as usize);
        (p >= m && pos >= half && pos < 2 * half).then(|| (p - m, pos - half))
    }
}

/// A concrete family of demand vectors for one bound evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestVectorFamily {
    pub alpha: Rational,
    pub num_files: u64,
    pub num_users: u64,
    pub n: u64,
    pub gamma: u64,
    pub branch: AlphaBranch,
    pub regime: Regime,
    /// `⌈1/α⌉` or `⌊α⌋` depending on `branch`.
    pub constant: u64,
    /// Sets are stored one after the other, `2(n − γ)` vectors each.
    pub vectors: Vec<Vec<u64>>,
    pub roles: Vec<Vec<Role>>,
    pub anchor_files: Vec<u64>,
    pub u_files: Vec<u64>,
    pub v_files: Vec<u64>,
    pub t_files: Vec<u64>,
}

impl RequestVectorFamily {
    pub fn width(&self) -> u64 {
        self.n - self.gamma
    }

    fn layout(&self) -> Layout {
        Layout::new(self.branch, self.constant, self.width(), self.num_users)
    }

    /// Wraps explicit vectors in the layout of `branch` for `spec`; roles and
    /// file lists are read off the positions.
    pub fn from_vectors(
        spec: &BoundSpec,
        branch: AlphaBranch,
        vectors: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let bound = improved_bound_branch(spec, branch)?;
        if bound.regime == Regime::SmallN {
            return Err(Error::Regime(format!(
                "N = {} is in the small-N case, which uses no request-vector family",
                spec.num_files
            )));
        }
        let constant = branch.constant(spec.alpha)?;
        let layout = Layout::new(branch, constant, bound.width(), spec.num_users);
        let per_set = layout.vectors_per_set();
        let roles: Vec<Vec<Role>> = (0..vectors.len())
            .map(|i| {
                (0..spec.num_users as usize)
                    .map(|pos| layout.role(i % per_set, pos))
                    .collect()
            })
            .collect();

        let mut lists: [Vec<u64>; 4] = Default::default();
        for (vector, roles) in vectors.iter().zip(&roles) {
            for (&file, &role) in vector.iter().zip(roles) {
                let slot = match role {
                    Role::Anchor => 0,
                    Role::U => 1,
                    Role::V => 2,
                    Role::T => 3,
                };
                lists[slot].push(file);
            }
        }
        let [mut anchor_files, mut u_files, mut v_files, mut t_files] = lists;
        for list in [&mut anchor_files, &mut u_files, &mut v_files, &mut t_files] {
            list.sort_unstable();
            list.dedup();
        }
        Ok(RequestVectorFamily {
            alpha: spec.alpha,
            num_files: spec.num_files,
            num_users: spec.num_users,
            n: bound.n,
            gamma: bound.gamma,
            branch,
            regime: bound.regime,
            constant,
            vectors,
            roles,
            anchor_files,
            u_files,
            v_files,
            t_files,
        })
    }
}

impl Serialize for RequestVectorFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RequestVectorFamily", 9)?;
        st.serialize_field("K", &self.num_users)?;
        st.serialize_field("N", &self.num_files)?;
        st.serialize_field("alpha", &to_exact_string(&self.alpha))?;
        st.serialize_field("branch", &self.branch)?;
        st.serialize_field("gamma", &self.gamma)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("regime", &self.regime)?;
        st.serialize_field("roles", &self.roles)?;
        st.serialize_field("vectors", &self.vectors)?;
        st.end()
    }
}

/// Canonical family for the branch that `improved_bound` selects.
pub fn build_family(spec: &BoundSpec) -> Result<RequestVectorFamily> {
    let bound = improved_bound(spec)?;
    build_family_branch(spec, bound.alpha_branch)
}

/// Canonical family for one branch.
///
/// Anchors take the lowest ids (one per set, or `1..⌊α⌋`), `u` files the next
/// ids in position order, and `v` slots the remaining ids in increasing order,
/// dealt round-robin across sets; once the ids run out the last one repeats.
/// Filler positions request file 1.
pub fn build_family_branch(spec: &BoundSpec, branch: AlphaBranch) -> Result<RequestVectorFamily> {
    let bound: BoundResult = improved_bound_branch(spec, branch)?;
    if bound.regime == Regime::SmallN {
        return Err(Error::Regime(format!(
            "N = {} is in the small-N case, which uses no request-vector family",
            spec.num_files
        )));
    }
    let constant = branch.constant(spec.alpha)?;
    let layout = Layout::new(branch, constant, bound.width(), spec.num_users);
    let (k, m, half) = (
        spec.num_users as usize,
        layout.width as usize,
        layout.half(),
    );
    let per_set = layout.vectors_per_set();
    let sets = layout.sets as usize;

    let mut vectors = vec![vec![1u64; k]; sets * per_set];
    let mut next_id = 1u64;
    for set in 0..sets {
        let base = set * per_set;
        let anchors: Vec<u64> = (0..layout.slot).map(|i| next_id + i).collect();
        next_id += layout.slot;
        for p in 0..m {
            let mut a = anchors.iter();
            for pos in 0..half {
                vectors[base + p][pos] = match layout.role(p, pos) {
                    Role::Anchor => *a.next().expect("slot-sized anchor list"),
                    _ => {
                        next_id += 1;
                        next_id - 1
                    }
                };
            }
            let front = vectors[base + p][..half].to_vec();
            vectors[base + m + p][half..2 * half].copy_from_slice(&front);
        }
    }
    debug_assert_eq!(next_id - 1, window_low(constant, layout.width));

    let mut last = spec.num_files;
    let mut assigned_any = false;
    for p in 0..per_set {
        for pos in 0..2 * half {
            if layout.role(p, pos) != Role::V {
                continue;
            }
            for set in 0..sets {
                let id = if next_id <= spec.num_files {
                    next_id += 1;
                    assigned_any = true;
                    next_id - 1
                } else if assigned_any {
                    last
                } else {
                    spec.num_files
                };
                last = id;
                vectors[set * per_set + p][pos] = id;
            }
        }
    }
    RequestVectorFamily::from_vectors(spec, branch, vectors)
}

/// One named pass/fail line of a validation report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the combinatorial requirements the counting argument relies on.
///
/// * `shape`: vector count, lengths and ids in `[1, N]`;
/// * `window`: `c(m² − m + 1) ≤ N`, and the regime matches `N` against
///   `c(3m² − m + 1)`;
/// * `distinctness`: anchors and `u` files are pairwise distinct and number
///   `c(m² − m + 1)`;
/// * `coverage`: in the mid regime every file `1..N` is requested somewhere;
///   in the large regime the designated slots hold `c(3m² − m + 1)` distinct
///   files;
/// * `anchor_positions`: vector `p` of each set holds that set's anchors in
///   slot `p`;
/// * `block_symmetry`: the second half-block repeats the first from the
///   complementary user positions.
pub fn validate_family(fam: &RequestVectorFamily, spec: &BoundSpec) -> ValidationReport {
    let layout = fam.layout();
    let (m, half, per_set) = (
        layout.width as usize,
        layout.half(),
        layout.vectors_per_set(),
    );
    let sets = layout.sets as usize;
    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        checks.push(Check {
            name,
            passed,
            detail,
        })
    };

    let spec_matches = fam.alpha == spec.alpha
        && fam.num_files == spec.num_files
        && fam.num_users == spec.num_users;
    let shape_ok = spec_matches
        && fam.vectors.len() == sets * per_set
        && 2 * half <= fam.num_users as usize
        && fam.vectors.iter().all(|v| {
            v.len() == fam.num_users as usize && v.iter().all(|&f| f >= 1 && f <= fam.num_files)
        });
    push(
        "shape",
        shape_ok,
        format!(
            "{} vectors of length {} over files 1..={}, expected {} of length {}",
            fam.vectors.len(),
            fam.vectors.first().map_or(0, Vec::len),
            fam.num_files,
            sets * per_set,
            spec.num_users
        ),
    );
    if !shape_ok {
        return ValidationReport { checks };
    }

    let low = window_low(fam.constant, layout.width);
    let high = window_high(fam.constant, layout.width);
    let regime_ok = match fam.regime {
        Regime::MidN => fam.num_files <= high,
        Regime::LargeN => fam.num_files > high,
        Regime::SmallN => false,
    };
    push(
        "window",
        low <= fam.num_files && regime_ok,
        format!(
            "{low} ≤ N = {} with N {} {high}",
            fam.num_files,
            if fam.num_files <= high { "≤" } else { ">" }
        ),
    );

    let entries = |set: usize, p: usize, role: Role| -> Vec<u64> {
        let v = &fam.vectors[set * per_set + p];
        (0..2 * half)
            .filter(|&pos| layout.role(p, pos) == role)
            .map(|pos| v[pos])
            .collect()
    };

    let set_anchors: Vec<Vec<u64>> = (0..sets).map(|s| entries(s, 0, Role::Anchor)).collect();
    let mut anchors_ok = true;
    for (s, anchors) in set_anchors.iter().enumerate() {
        for p in 0..per_set {
            anchors_ok &= entries(s, p, Role::Anchor) == *anchors;
        }
    }
    push(
        "anchor_positions",
        anchors_ok,
        format!("anchor slots hold {set_anchors:?} in every vector of their set"),
    );

    let mut symmetric = true;
    for s in 0..sets {
        for p in m..per_set {
            for pos in half..2 * half {
                let (q, qpos) = layout.mirror(p, pos).expect("second half-block position");
                symmetric &=
                    fam.vectors[s * per_set + p][pos] == fam.vectors[s * per_set + q][qpos];
            }
        }
    }
    push(
        "block_symmetry",
        symmetric,
        "second half-block repeats the first from the complementary users".to_string(),
    );

    let all_anchors: Vec<u64> = set_anchors.iter().flatten().copied().collect();
    let all_u: Vec<u64> = (0..sets)
        .flat_map(|s| (0..m).flat_map(move |p| entries(s, p, Role::U)))
        .collect();
    let mut pool: Vec<u64> = all_anchors.iter().chain(&all_u).copied().collect();
    let listed = pool.len();
    pool.sort_unstable();
    pool.dedup();
    push(
        "distinctness",
        pool.len() == listed && pool.len() as u64 == low,
        format!(
            "{} anchor and u entries, {} distinct, {low} required",
            listed,
            pool.len()
        ),
    );

    let designated: BTreeSet<u64> = (0..sets)
        .flat_map(|s| {
            (0..per_set).flat_map(move |p| {
                [Role::Anchor, Role::U, Role::V]
                    .into_iter()
                    .flat_map(move |r| entries(s, p, r))
            })
        })
        .collect();
    let (covered, detail) = match fam.regime {
        Regime::MidN => {
            let missing: Vec<u64> = (1..=fam.num_files)
                .filter(|f| !designated.contains(f))
                .collect();
            (
                missing.is_empty(),
                format!("files not requested in designated slots: {missing:?}"),
            )
        }
        _ => (
            designated.len() as u64 == high,
            format!(
                "{} distinct designated files, {high} required",
                designated.len()
            ),
        ),
    };
    push("coverage", covered, detail);

    ValidationReport { checks }
}

/// File counts per decoding step and the bound they imply.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountingDerivation {
    /// Anchor decodings, `u`-file decodings, remaining-file decodings.
    pub decoded_per_step: [u64; 3],
    /// Number of `(cache, signal)` terms the counts are divided by.
    pub terms: u64,
    pub derived_bound: Exact,
}

/// Re-derives the bound from the family by counting decodable files:
///
/// 1. each designated user decodes the anchor(s) it requests;
/// 2. each half-block of `m` vectors jointly decodes its `u` files;
/// 3. all vectors together decode every other designated file.
///
/// The sum over `2m` terms of `M + cR` (ceiling branch) or `⌊α⌋M + R`
/// (floor branch) bounds the total, which turns into a bound on `αM + R`.
/// Fails with a consistency error if the count disagrees with the closed form.
pub fn derive_bound(fam: &RequestVectorFamily, spec: &BoundSpec) -> Result<CountingDerivation> {
    let report = validate_family(fam, spec);
    if !report.passed() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        return Err(invalid(format!("family fails validation: {failed:?}")));
    }
    let layout = fam.layout();
    let (m, half, per_set) = (
        layout.width as usize,
        layout.half(),
        layout.vectors_per_set(),
    );
    let sets = layout.sets as usize;
    let distinct_in = |set: usize, ps: std::ops::Range<usize>, role: Role| -> BTreeSet<u64> {
        ps.flat_map(|p| {
            let v = &fam.vectors[set * per_set + p];
            (0..2 * half)
                .filter(move |&pos| layout.role(p, pos) == role)
                .map(move |pos| v[pos])
        })
        .collect()
    };

    let mut anchors = 0u64;
    let mut us = 0u64;
    let mut known: BTreeSet<u64> = BTreeSet::new();
    let mut everything: BTreeSet<u64> = BTreeSet::new();
    for s in 0..sets {
        for p in 0..per_set {
            anchors += distinct_in(s, p..p + 1, Role::Anchor).len() as u64;
        }
        for block in [0..m, m..per_set] {
            let u = distinct_in(s, block.clone(), Role::U);
            us += u.len() as u64;
            known.extend(u);
        }
        known.extend(distinct_in(s, 0..per_set, Role::Anchor));
        for role in [Role::Anchor, Role::U, Role::V] {
            everything.extend(distinct_in(s, 0..per_set, role));
        }
    }
    let rest = everything.difference(&known).count() as u64;

    let terms = match fam.branch {
        AlphaBranch::CeilInvAlpha => 2 * layout.width * fam.constant,
        AlphaBranch::FloorAlpha => 2 * layout.width,
    };
    let derived = ratio((anchors + us + rest) as i128, terms as i128);
    let closed = improved_bound_branch(spec, fam.branch)?.value();
    if derived != closed {
        return Err(Error::Consistency(format!(
            "counting gives {derived} but the closed form gives {closed} for α = {}, N = {}, K = {}",
            spec.alpha, spec.num_files, spec.num_users
        )));
    }
    Ok(CountingDerivation {
        decoded_per_step: [anchors, us, rest],
        terms,
        derived_bound: Exact(derived),
    })
}
