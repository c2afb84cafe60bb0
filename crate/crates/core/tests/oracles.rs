//! Solvers against brute-force enumeration of the defining inequalities.

mod common;

use common::*;
use locvi::games::{follower_fixed_points, gap, solve_lgnep, Follower, GameSpec};
use locvi::geometry::{dist, dot, sub, ConvexPiece, Point, Region};
use locvi::operators::{classify_monotonicity, DualMap};
use locvi::quasiconvex::QuasiconvexFn;
use locvi::quasiopt::{certify_all, ff_for, solve_lqopt_direct, QuasiOptProblem};
use locvi::qvi::{fixed_points, fp_tolerance, ConstraintMap, MapKind};
use locvi::stability::lopt_on;
use locvi::vi_solvers::{
    solve_lmvi, solve_lsvi, solve_lsvi_star, solve_mvi, solve_svi, solve_weak_int, DEFAULT_EPS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = DEFAULT_EPS;

fn union_1d(rng: &mut ChaCha8Rng) -> Region {
    let pieces = rng.gen_range(1..=3);
    let w = 3.0 / pieces as f64;
    let ps = (0..pieces)
        .map(|i| {
            let s = -1.5 + w * i as f64;
            ConvexPiece::interval(
                s + rng.gen_range(0.0..0.3) * w,
                s + w - rng.gen_range(0.05..0.3) * w,
            )
            .unwrap()
        })
        .collect();
    Region::new(ps, vec![]).unwrap()
}

fn union_2d(rng: &mut ChaCha8Rng) -> Region {
    let a = ConvexPiece::boxed(
        vec![-1.0, rng.gen_range(-1.0..-0.4)],
        vec![rng.gen_range(-0.4..0.0), 0.6],
    )
    .unwrap();
    let b = ConvexPiece::boxed(
        vec![rng.gen_range(0.2..0.5), -0.5],
        vec![1.0, rng.gen_range(0.3..1.0)],
    )
    .unwrap();
    Region::new(vec![a, b], vec![]).unwrap()
}

fn operator(rng: &mut ChaCha8Rng, n: usize) -> DualMap {
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    match rng.gen_range(0..3) {
        0 => DualMap::constant(b),
        1 => DualMap::single_valued(n, "affine", move |x| {
            (0..n).map(|i| dot(&a[i], x) + b[i]).collect()
        }),
        _ => DualMap::new(n, "two-valued", move |x| {
            let v: Point = (0..n).map(|i| dot(&a[i], x) + b[i]).collect();
            vec![v.clone(), v.iter().map(|c| -0.5 * c).collect()]
        }),
    }
}

fn instances(seed: u64, count: usize) -> Vec<(DualMap, Region, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 1 + i % 2;
            let c = if n == 1 {
                union_1d(&mut rng)
            } else {
                union_2d(&mut rng)
            };
            let h = if n == 1 { 0.05 } else { 0.2 };
            (operator(&mut rng, n), c, h)
        })
        .collect()
}

#[test]
fn local_and_global_vi_match_enumeration() {
    for (t, c, h) in instances(1, 24) {
        let global = c.diameter() + h;
        for r in [2.0 * h, 4.0 * h] {
            let l = solve_lsvi(&t, &c, h, r, EPS).unwrap().points();
            assert_eq!(
                l,
                brute_stampacchia(&t, &c, h, r, EPS),
                "LSVI {} r = {r}",
                t.name()
            );
            let m = solve_lmvi(&t, &c, h, r, EPS).unwrap().points();
            assert_eq!(
                m,
                brute_minty(&t, &c, h, r, EPS),
                "LMVI {} r = {r}",
                t.name()
            );
        }
        assert_eq!(
            solve_svi(&t, &c, h, EPS).unwrap().points(),
            brute_stampacchia(&t, &c, h, global, EPS)
        );
        assert_eq!(
            solve_mvi(&t, &c, h, EPS).unwrap().points(),
            brute_minty(&t, &c, h, global, EPS)
        );
    }
}

#[test]
fn star_solutions_enumerate_nonzero_multipliers() {
    for (t, c, h) in instances(2, 16) {
        let r = 3.0 * h;
        let star = solve_lsvi_star(&t, &c, h, r, EPS).unwrap().points();
        assert_eq!(
            star,
            brute_stampacchia(&t.clone().without_zero(), &c, h, r, EPS)
        );
    }
    // T(x) = x on [-1, 1]: 0 solves LSVI only through the zero multiplier.
    let t = DualMap::single_valued(1, "identity", |x| x.to_vec());
    let c = Region::interval(-1.0, 1.0).unwrap();
    assert_eq!(
        solve_lsvi(&t, &c, 0.1, 0.2, EPS).unwrap().points(),
        vec![vec![0.0]]
    );
    assert!(solve_lsvi_star(&t, &c, 0.1, 0.2, EPS).unwrap().is_empty());
}

/// For a constant `t` on a box the weak-int solutions are the grid points that
/// sit on the extreme grid layer in every direction where `t` is nonzero.
#[test]
fn weak_int_on_boxes_picks_extreme_grid_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..20 {
        let n = 1 + i % 2;
        let h = if n == 1 { 0.05 } else { 0.1 };
        let lo: Point = (0..n).map(|_| rng.gen_range(-1.0..-0.3)).collect();
        let hi: Point = (0..n).map(|_| rng.gen_range(0.3..1.0)).collect();
        let t: Point = (0..n)
            .map(|k| {
                if k == 1 && i % 4 == 1 {
                    0.0
                } else {
                    rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
                }
            })
            .collect();
        let c = Region::boxed(lo, hi).unwrap();
        let pts = c.sample(h).unwrap();
        let first: Point = (0..n)
            .map(|k| pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
            .collect();
        let last: Point = (0..n)
            .map(|k| pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let want: Vec<Point> = pts
            .iter()
            .filter(|p| {
                (0..n).all(|k| {
                    (t[k] > 0.0 && p[k] == first[k])
                        || (t[k] < 0.0 && p[k] == last[k])
                        || t[k] == 0.0
                })
            })
            .cloned()
            .collect();
        let got = solve_weak_int(&DualMap::constant(t.clone()), &c, h, 3.0 * h, EPS)
            .unwrap()
            .points();
        assert_eq!(got, want, "t = {t:?} on {c:?}");
    }
}

/// A single-valued field on an interval: interior points always see a probe
/// on the wrong side, and zeros are excluded.
#[test]
fn weak_int_on_intervals_keeps_only_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let a = rng.gen_range(-1.0..-0.2);
        let b = rng.gen_range(0.2..1.0);
        let z = rng.gen_range(-1.2..1.2);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let t = DualMap::single_valued(1, "linear", move |x| vec![s * (x[0] - z)]);
        let c = Region::interval(a, b).unwrap();
        let h = 0.05;
        let pts = c.sample(h).unwrap();
        let (first, last) = (pts[0].clone(), pts[pts.len() - 1].clone());
        let tv = |p: &Point| t.values(p)[0][0];
        let mut want = Vec::new();
        if tv(&first) > 0.0 {
            want.push(first.clone());
        }
        if tv(&last) < 0.0 {
            want.push(last.clone());
        }
        let got = solve_weak_int(&t, &c, h, 2.0 * h, EPS).unwrap().points();
        assert_eq!(got, want, "[{a}, {b}], zero at {z}, sign {s}");
    }
}

fn catalog_fn(rng: &mut ChaCha8Rng, n: usize) -> QuasiconvexFn {
    let c: Point = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    match rng.gen_range(0..3) {
        0 => QuasiconvexFn::affine(c, 0.3),
        1 => QuasiconvexFn::abs_affine(c, rng.gen_range(-0.5..0.5)),
        _ => {
            let p: Point = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            QuasiconvexFn::dist_to(ConvexPiece::ball(p, 0.2).unwrap())
        }
    }
}

#[test]
fn local_minimizers_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..20 {
        let n = 1 + i % 2;
        let c = if n == 1 {
            union_1d(&mut rng)
        } else {
            union_2d(&mut rng)
        };
        let h = if n == 1 { 0.05 } else { 0.2 };
        let f = catalog_fn(&mut rng, n);
        for r in [2.0 * h, 5.0 * h] {
            let got = lopt_on(&f, &c, h, r, EPS).unwrap().points();
            assert_eq!(
                got,
                brute_lopt(&f, &c, h, r, EPS),
                "{} r = {r}",
                f.describe()
            );
        }
    }
}

/// Local quasi-optimization by definition: `x ∈ K(x)` and `f(x) ≤ f(y) + ε`
/// on the grid of `K(x) ∩ B̄(x, r)`.
fn brute_lqopt(
    f: &QuasiconvexFn,
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Vec<Point> {
    let pts = bx.sample(h).unwrap();
    let eps = eps * pts.iter().map(|p| f.eval(p).abs()).fold(1.0, f64::max);
    fixed_points(k, bx, h, fp_tolerance(h))
        .unwrap()
        .into_iter()
        .filter(|x| {
            let ys = k.value(x).unwrap().sample(h).unwrap();
            ys.iter()
                .filter(|y| dist(y, x) <= r + 1e-12)
                .all(|y| f.eval(x) <= f.eval(y) + eps)
        })
        .collect()
}

#[test]
fn quasi_optimization_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bx = Region::interval(-2.0, 2.0).unwrap();
    for _ in 0..12 {
        let a = Region::intervals(&[(-1.8, -1.1), (0.6, rng.gen_range(1.0..1.8))]).unwrap();
        let b = Region::intervals(&[(rng.gen_range(-1.8..-1.0), -0.6), (1.2, 1.9)]).unwrap();
        let theta = rng.gen_range(-0.4..0.4);
        let k = ConstraintMap::new(1, "switch", MapKind::Analytic("switch".into()), move |x| {
            Ok(if x[0] < theta { a.clone() } else { b.clone() })
        });
        let f = catalog_fn(&mut rng, 1);
        let p = QuasiOptProblem {
            f: f.clone(),
            k: k.clone(),
            bx: bx.clone(),
            h: 0.05,
            r: 0.2,
        };
        let got = solve_lqopt_direct(&p, EPS).unwrap().points();
        assert_eq!(
            got,
            brute_lqopt(&f, &k, &bx, 0.05, 0.2, EPS),
            "{}",
            f.describe()
        );
    }
    let circle = QuasiOptProblem {
        f: QuasiconvexFn::affine(vec![1.0], 0.0),
        k: ConstraintMap::circle(),
        bx: Region::interval(-1.0, 1.0).unwrap(),
        h: 0.02,
        r: 0.08,
    };
    let got = solve_lqopt_direct(&circle, EPS).unwrap().points();
    assert_eq!(
        got,
        brute_lqopt(&circle.f, &circle.k, &circle.bx, 0.02, 0.08, EPS)
    );
}

/// A Minty solution exists on every localized set `K(z) ∩ B̄(z, r_z)` of a
/// certified fixed point when `T` is quasimonotone.
#[test]
fn localized_minty_problems_are_solvable() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bx = Region::interval(-2.0, 2.0).unwrap();
    for _ in 0..8 {
        let a = Region::intervals(&[(-1.9, -0.9), (0.7, 1.6)]).unwrap();
        let b = Region::intervals(&[(-1.6, -0.7), (0.9, 1.9)]).unwrap();
        let k = ConstraintMap::new(1, "switch", MapKind::Analytic("switch".into()), move |x| {
            Ok(if x[0] < 0.0 { a.clone() } else { b.clone() })
        });
        let f = catalog_fn(&mut rng, 1);
        let t = ff_for(&f, &bx, 0.05).unwrap();
        assert!(classify_monotonicity(&t, &bx, 0.1, EPS).unwrap().quasi);
        for cert in certify_all(&k, &bx, 0.05, 0.2).unwrap() {
            assert!(cert.is_certified());
            let local = k
                .value(&cert.z)
                .unwrap()
                .intersect_ball(&cert.z, cert.radius)
                .unwrap()
                .unwrap();
            let m = solve_lmvi(&t, &local, 0.05, 0.1, EPS).unwrap();
            assert!(!m.is_empty(), "{} at z = {:?}", f.describe(), cert.z);
        }
    }
}

/// Quasi- and pseudomonotonicity by pairwise enumeration over all multipliers.
fn brute_pairs(t: &DualMap, c: &Region, h: f64, eps: f64) -> (bool, bool) {
    let pts = c.sample(h).unwrap();
    let (mut quasi, mut pseudo) = (true, true);
    for x in &pts {
        for y in &pts {
            if x == y {
                continue;
            }
            let d = sub(y, x);
            let worst = t
                .values(y)
                .iter()
                .map(|v| dot(v, &d))
                .fold(f64::INFINITY, f64::min);
            for v in t.values(x) {
                let s = dot(&v, &d);
                if s > eps && worst < -eps {
                    quasi = false;
                }
                if s >= 0.0 && worst < -eps {
                    pseudo = false;
                }
            }
        }
    }
    (quasi, pseudo)
}

#[test]
fn pairwise_classes_match_enumeration() {
    for (t, c, h) in instances(8, 30) {
        let h = 2.0 * h;
        let rep = classify_monotonicity(&t, &c, h, EPS).unwrap();
        assert_eq!(
            (rep.quasi, rep.pseudo),
            brute_pairs(&t, &c, h, EPS),
            "{}",
            t.name()
        );
    }
}

fn two_player_game(rng: &mut ChaCha8Rng) -> GameSpec {
    let (p, q) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let s = rng.gen_range(0.2..0.8);
    let f1 = Follower::new(
        "p1",
        1,
        move |y, o, x| (y[0] - p * o[0] - x[0]).powi(2),
        move |o, _| Region::interval(0.0, 1.0 - s * o[0]),
    );
    let f2 = Follower::new(
        "p2",
        1,
        move |y, o, x| q * y[0] + 0.5 * (y[0] - o[0]).abs() + x[0] * y[0],
        |_, _| Region::interval(0.0, 1.0),
    );
    GameSpec::new(
        vec![f1, f2],
        Region::interval(-0.5, 0.5).unwrap(),
        Region::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
    )
    .unwrap()
}

#[test]
fn game_equilibria_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (h, eps) = (0.05, EPS);
    for _ in 0..6 {
        let g = two_player_game(&mut rng);
        for x in [[-0.5], [0.0], [0.5]] {
            for r in [0.1, 0.3, 1.0] {
                let brute = brute_equilibria(&g, &x, h, r, eps);
                let solved: Vec<Point> = solve_lgnep(&g, &x, h, r, eps)
                    .unwrap()
                    .into_iter()
                    .map(|d| d.y)
                    .collect();
                assert_eq!(solved, brute, "x = {x:?}, r = {r}");
                for y in follower_fixed_points(&g, &x, h).unwrap() {
                    let v = gap(&g, &y, &x, r, h).unwrap().value;
                    assert!(v >= -eps);
                    assert_eq!(v <= eps, brute.contains(&y), "y = {y:?}: V = {v}");
                }
            }
        }
    }
}
