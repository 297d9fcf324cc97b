use cachelab::bounds::{
    coded_envelope, critical_bracket, critical_lower, cutset_bound, cutset_bound_witness,
    cutset_min_cost, improved_bound, improved_bound_branch, min_cost_coded, AlphaBranch, BoundSpec,
    Regime,
};
use cachelab::rational::{int, ratio, Rational};
use proptest::prelude::*;

/// Improved bound written out case by case, with `n` found by linear scan.
fn improved_oracle(alpha: Rational, n_files: i128, k: i128) -> Rational {
    let window = |c: i128, m: i128| c * (3 * m * m - m + 1);
    let least_n = |c: i128| (1..).find(|&n| window(c, n) >= n_files).unwrap();

    let c = (alpha.recip()).ceil().to_integer();
    let ceil_branch = if n_files < c {
        ratio(n_files, c)
    } else {
        let n = least_n(c);
        let m = n - (n - k / 2).max(0);
        if n_files <= window(c, m) {
            ratio(n_files - c * (m * m - m + 1), 2 * c * m) + m
        } else {
            int(2 * m)
        }
    };

    let b = alpha.floor().to_integer();
    if alpha <= int(1) || k < 2 * b {
        return ceil_branch;
    }
    let floor_branch = if n_files < b {
        int(n_files)
    } else {
        let n = least_n(b);
        let m = n - (n - k / (2 * b)).max(0);
        if n_files <= window(b, m) {
            int(m * b) + ratio(n_files - b * (m * m - m + 1), 2 * m)
        } else {
            int(2 * m * b)
        }
    };
    ceil_branch.max(floor_branch)
}

fn cutset_oracle(n_files: i128, k: i128, m: Rational) -> Rational {
    (1..=n_files.min(k))
        .map(|s| int(s) - ratio(s, n_files / s) * m)
        .max()
        .unwrap()
        .max(int(0))
}

/// Coded-caching corner costs and their chord envelope.
fn coded_points(n_files: i128, k: i128) -> Vec<(Rational, Rational)> {
    (0..=k)
        .map(|t| {
            let m = ratio(n_files * t, k);
            let local = int(k) * (int(1) - m / n_files);
            let global = (int(1) + m * k / n_files).recip().min(ratio(n_files, k));
            (m, local * global)
        })
        .collect()
}

fn envelope_oracle(points: &[(Rational, Rational)], m: Rational) -> Rational {
    let mut best: Option<Rational> = None;
    for a in points {
        for b in points {
            if a.0 <= m && m <= b.0 {
                let v = if a.0 == b.0 {
                    a.1.min(b.1)
                } else {
                    a.1 + (b.1 - a.1) * (m - a.0) / (b.0 - a.0)
                };
                best = Some(best.map_or(v, |x: Rational| x.min(v)));
            }
        }
    }
    best.unwrap()
}

fn alphas() -> Vec<Rational> {
    vec![
        ratio(1, 5),
        ratio(1, 3),
        ratio(1, 2),
        ratio(2, 3),
        int(1),
        ratio(4, 3),
        ratio(3, 2),
        int(2),
        ratio(5, 2),
        int(3),
        int(4),
    ]
}

#[test]
fn improved_bound_matches_case_analysis() {
    for alpha in alphas() {
        for k in 2..=14 {
            for n in 1..=80 {
                let got = improved_bound(&BoundSpec::new(alpha, n, k).unwrap())
                    .unwrap()
                    .value();
                let want = improved_oracle(alpha, n as i128, k as i128);
                assert_eq!(got, want, "α = {alpha}, N = {n}, K = {k}");
            }
        }
    }
}

#[test]
fn worked_examples() {
    let b = |a, n, k| improved_bound(&BoundSpec::new(a, n, k).unwrap()).unwrap();
    assert_eq!(b(int(1), 9, 4).value(), ratio(7, 2));
    assert_eq!(b(int(1), 11, 4).value(), int(4));
    assert_eq!(b(int(1), 3, 3).value(), int(2));
    let large = b(int(1), 30, 4);
    assert_eq!(
        (large.value(), large.n, large.gamma, large.regime),
        (int(4), 4, 2, Regime::LargeN)
    );
    let small = b(ratio(1, 3), 2, 4);
    assert_eq!((small.value(), small.regime), (ratio(2, 3), Regime::SmallN));
}

#[test]
fn floor_pivots_reach_k() {
    for b in 2..=3u64 {
        for h in 1..=4u64 {
            let k = 2 * h * b;
            let n = b * (3 * h * h - h + 1);
            let spec = BoundSpec::new(int(b as i128), n, k).unwrap();
            let r = improved_bound_branch(&spec, AlphaBranch::FloorAlpha).unwrap();
            assert_eq!(r.value(), int(k as i128), "b = {b}, h = {h}");
            assert!(improved_bound(&spec).unwrap().value() >= int(k as i128));
        }
    }
}

#[test]
fn caching_pays_below_the_lower_critical_size() {
    for alpha in alphas() {
        for k in 1..=10u64 {
            let lower = critical_lower(alpha, k).unwrap();
            let below = lower.ceil().to_integer() - 1;
            for n in 1..=below.min(120) {
                let (cost, _) = min_cost_coded(alpha, n as u64, k).unwrap();
                assert!(
                    cost < int(k as i128),
                    "α = {alpha}, N = {n}, K = {k}: cost {cost}"
                );
            }
        }
    }
}

/// Where the upper critical size comes from a single evaluation (even `K` on
/// the ceiling side, `K` a multiple of `2⌊α⌋` on the floor side), the bound
/// there already reaches `K`.
#[test]
fn upper_critical_size_forces_cost_k() {
    for alpha in alphas() {
        let b = alpha.floor().to_integer() as u64;
        for k in 2..=24u64 {
            let direct = if alpha > int(1) && k >= 2 * b {
                k % (2 * b) == 0
            } else {
                k % 2 == 0
            };
            if !direct {
                continue;
            }
            let upper = critical_bracket(alpha, k).unwrap().upper_improved;
            let r = improved_bound(&BoundSpec::new(alpha, upper, k).unwrap()).unwrap();
            assert!(
                r.value() >= int(k as i128),
                "α = {alpha}, K = {k}, N = {upper}: {r:?}"
            );
        }
    }
}

fn alpha_strategy() -> impl Strategy<Value = Rational> {
    (1i128..=8, 1i128..=8).prop_map(|(p, q)| ratio(p, q))
}

proptest! {
    #[test]
    fn improved_bound_is_sound(alpha in alpha_strategy(), n in 1u64..=60, k in 2u64..=12) {
        let bound = improved_bound(&BoundSpec::new(alpha, n, k).unwrap()).unwrap().value();
        let pts = coded_points(n as i128, k as i128);
        for &(m, _) in &pts {
            let coded = alpha * m + envelope_oracle(&pts, m);
            let uncoded = alpha * m + int(k as i128) * (int(1) - m / int(n as i128)) * ratio(n as i128, k as i128).min(int(1));
            prop_assert!(bound <= coded, "coded at M = {}", m);
            prop_assert!(bound <= uncoded, "uncoded at M = {}", m);
        }
        prop_assert!(improved_oracle(alpha, n as i128, k as i128) == bound);
    }

    #[test]
    fn cutset_matches_brute_force(n in 1u64..=40, k in 1u64..=12, p in 0i128..=400, q in 1i128..=10) {
        let m = ratio(p, q).min(int(n as i128));
        let (value, s) = cutset_bound_witness(n, k, m).unwrap();
        prop_assert_eq!(value, cutset_oracle(n as i128, k as i128, m));
        prop_assert_eq!(value, cutset_bound(n, k, m).unwrap());
        // reported s is the smallest maximizer
        let line = |s: i128| (int(s) - ratio(s, n as i128 / s) * m).max(int(0));
        prop_assert_eq!(line(s as i128), value);
        for smaller in 1..s as i128 {
            prop_assert!(line(smaller) < value);
        }
    }

    #[test]
    fn cutset_never_exceeds_coded_envelope(n in 1u64..=40, k in 1u64..=12, j in 0i128..=48) {
        let m = int(n as i128) * ratio(j, 48);
        let env = envelope_oracle(&coded_points(n as i128, k as i128), m);
        prop_assert!(cutset_bound(n, k, m).unwrap() <= env);
        prop_assert_eq!(coded_envelope(n, k, m).unwrap(), env);
    }

    #[test]
    fn cutset_min_cost_is_the_minimum(alpha in alpha_strategy(), n in 1u64..=30, k in 1u64..=8) {
        let (value, at) = cutset_min_cost(alpha, n, k).unwrap();
        let f = |m: Rational| alpha * m + cutset_oracle(n as i128, k as i128, m);
        prop_assert_eq!(f(at), value);
        // the cost is convex piecewise linear; its kinks are where two of the
        // lines s − (s/⌊N/s⌋)M, or one of them and zero, cross
        let lines: Vec<(Rational, Rational)> = (1..=n.min(k) as i128)
            .map(|s| (int(s), ratio(s, n as i128 / s)))
            .chain(std::iter::once((int(0), int(0))))
            .collect();
        let mut candidates = vec![int(0), int(n as i128)];
        for (i, a) in lines.iter().enumerate() {
            for b in &lines[i + 1..] {
                if a.1 != b.1 {
                    candidates.push((a.0 - b.0) / (a.1 - b.1));
                }
            }
        }
        for m in candidates.into_iter().filter(|m| *m >= int(0) && *m <= int(n as i128)) {
            prop_assert!(f(m) >= value, "cost {} at M = {}", f(m), m);
        }
    }

    #[test]
    fn coded_minimum_sits_at_a_corner(alpha in alpha_strategy(), n in 1u64..=30, k in 1u64..=8) {
        let (value, at) = min_cost_coded(alpha, n, k).unwrap();
        let pts = coded_points(n as i128, k as i128);
        prop_assert!(pts.iter().any(|&(m, r)| m == at && alpha * m + r == value));
        for j in 0..=(8 * k as i128) {
            let m = int(n as i128) * ratio(j, 8 * k as i128);
            prop_assert!(alpha * m + envelope_oracle(&pts, m) >= value);
        }
    }

    #[test]
    fn bracket_is_ordered(alpha in alpha_strategy(), k in 2u64..=40) {
        let b = critical_bracket(alpha, k).unwrap();
        prop_assert!(b.lower.0 <= int(b.upper as i128));
        prop_assert_eq!(b.upper, b.upper_cutset.min(b.upper_improved));
    }
}
