//! Brute-force grid solvers and verifiers for local and global Stampacchia
//! and Minty variational inequalities.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{dist, dot, interior_contains, lex_cmp, sub, Point, Region, EPS_MEM};
use crate::operators::{max_dual_norm, DualMap, EPS_ZERO};

pub const DEFAULT_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolutionKind {
    Lsvi,
    Svi,
    Lmvi,
    Mvi,
    LsviStar,
    WeakInt,
    Lsqvi,
    Lmqvi,
    Lopt,
    Lqopt,
}

impl SolutionKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolutionKind::Lsvi => "LSVI",
            SolutionKind::Svi => "SVI",
            SolutionKind::Lmvi => "LMVI",
            SolutionKind::Mvi => "MVI",
            SolutionKind::LsviStar => "LSVI-star",
            SolutionKind::WeakInt => "weak-int",
            SolutionKind::Lsqvi => "LSQVI",
            SolutionKind::Lmqvi => "LMQVI",
            SolutionKind::Lopt => "LOpt",
            SolutionKind::Lqopt => "LQOpt",
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, SolutionKind::Svi | SolutionKind::Mvi)
    }

    pub fn is_minty(&self) -> bool {
        matches!(
            self,
            SolutionKind::Lmvi | SolutionKind::Mvi | SolutionKind::Lmqvi
        )
    }
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSolution {
    pub x: Point,
    /// Stampacchia kinds only.
    pub multiplier: Option<Point>,
    /// Radius of the neighbourhood the inequality was checked on.
    pub radius: f64,
    /// Largest radius in `{r, 2r, 4r, …}` below the diameter that still passes.
    pub max_radius: f64,
    pub epsilon: f64,
    /// Smallest attained value of the defining inner product (or objective gap).
    pub margin: f64,
    pub kind: SolutionKind,
    /// Grid step the solution was found on.
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub kind: SolutionKind,
    pub solutions: Vec<LocalSolution>,
    pub h: f64,
    pub region: Region,
    pub diagnostics: Vec<String>,
}

impl SolutionSet {
    pub fn points(&self) -> Vec<Point> {
        self.solutions.iter().map(|s| s.x.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn contains_near(&self, p: &[f64], tol: f64) -> bool {
        self.solutions.iter().any(|s| dist(&s.x, p) <= tol)
    }
}

/// Radius queries over a fixed point list, sweeping along the first coordinate.
pub struct BallIndex<'a> {
    points: &'a [Point],
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl<'a> BallIndex<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
        let keys = order.iter().map(|&i| points[i][0]).collect();
        BallIndex {
            points,
            order,
            keys,
        }
    }

    /// Indices of points within `r` of `x`, in ascending index order.
    pub fn within(&self, x: &[f64], r: f64) -> Vec<usize> {
        let r = r + 1e-12;
        let start = self.keys.partition_point(|&k| k < x[0] - r);
        let end = self.keys.partition_point(|&k| k <= x[0] + r);
        let mut out: Vec<usize> = self.order[start..end]
            .iter()
            .copied()
            .filter(|&i| dist(&self.points[i], x) <= r)
            .collect();
        out.sort_unstable();
        out
    }
}

/// Best multiplier among `duals` for the Stampacchia inequality at `x` against `ys`:
/// returns the multiplier and its smallest inner product.
pub fn stampacchia_best(duals: &[Point], x: &[f64], ys: &[&Point]) -> Option<(Point, f64)> {
    let mut best: Option<(Point, f64)> = None;
    for d in duals {
        let m = ys
            .iter()
            .map(|y| dot(d, &sub(y, x)))
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|b| m > b.1) {
            best = Some((d.clone(), m));
        }
    }
    best
}

/// Smallest `⟨y*, y − x⟩` over the given `(y, T(y))` pairs (infinite when vacuous).
pub fn minty_margin<'p>(x: &[f64], pairs: impl Iterator<Item = (&'p Point, &'p [Point])>) -> f64 {
    let mut m = f64::INFINITY;
    for (y, duals) in pairs {
        let d = sub(y, x);
        for v in duals {
            m = m.min(dot(v, &d));
        }
    }
    m
}

/// Effective tolerance: `eps` times the largest dual norm on the grid (at least `eps`).
pub fn scaled_eps(t: &DualMap, pts: &[Point], eps: f64) -> f64 {
    eps * max_dual_norm(t, pts).max(1.0)
}

fn operator_for(kind: SolutionKind, t: &DualMap) -> DualMap {
    match kind {
        SolutionKind::LsviStar | SolutionKind::WeakInt => t.clone().without_zero(),
        _ => t.clone(),
    }
}

/// Merges solutions closer than `h`, keeping the larger certified radius; output is lexicographic.
pub fn dedup_solutions(mut sols: Vec<LocalSolution>, h: f64) -> Vec<LocalSolution> {
    sols.sort_by(|a, b| {
        b.max_radius
            .total_cmp(&a.max_radius)
            .then_with(|| lex_cmp(&a.x, &b.x))
    });
    let mut kept: Vec<LocalSolution> = Vec::new();
    for s in sols {
        if !kept.iter().any(|k| dist(&k.x, &s.x) < h * (1.0 - 1e-6)) {
            kept.push(s);
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.x, &b.x));
    kept
}

struct GridProblem {
    pts: Vec<Point>,
    duals: Vec<Vec<Point>>,
    eps: f64,
}

impl GridProblem {
    fn new(t: &DualMap, c: &Region, h: f64, eps: f64) -> Result<Self> {
        if t.dim() != c.dim() {
            return Err(Error::DimensionMismatch {
                expected: c.dim(),
                got: t.dim(),
            });
        }
        let pts = c.sample(h)?;
        let duals: Vec<Vec<Point>> = pts.iter().map(|p| t.values(p)).collect();
        let m = duals
            .iter()
            .flatten()
            .map(|v| crate::geometry::norm(v))
            .fold(0.0, f64::max);
        Ok(GridProblem {
            pts,
            duals,
            eps: eps * m.max(1.0),
        })
    }

    /// `(multiplier, margin)` if `x = pts[i]` passes the inequality of `kind` at radius `r`.
    fn check(
        &self,
        idx: &BallIndex,
        i: usize,
        kind: SolutionKind,
        r: f64,
    ) -> Option<(Option<Point>, f64)> {
        let x = &self.pts[i];
        let near = idx.within(x, r);
        if kind.is_minty() {
            let m = minty_margin(
                x,
                near.iter()
                    .map(|&j| (&self.pts[j], self.duals[j].as_slice())),
            );
            return (m >= -self.eps).then_some((None, m));
        }
        let ys: Vec<&Point> = near.iter().map(|&j| &self.pts[j]).collect();
        let (d, m) = stampacchia_best(&self.duals[i], x, &ys)?;
        (m >= -self.eps).then_some((Some(d), m))
    }
}

fn solve_grid(
    kind: SolutionKind,
    t: &DualMap,
    c: &Region,
    h: f64,
    r: Option<f64>,
    eps: f64,
) -> Result<SolutionSet> {
    let op = operator_for(kind, t);
    let gp = GridProblem::new(&op, c, h, eps)?;
    let diam = c.diameter();
    let r = match r {
        Some(r) => {
            if !(r >= 2.0 * h * (1.0 - 1e-9)) {
                return Err(Error::InvalidInput(format!(
                    "local radius {r} must be at least 2h = {}",
                    2.0 * h
                )));
            }
            r
        }
        None => diam + h,
    };
    let mut diagnostics = Vec::new();
    if gp.duals.iter().all(|d| d.is_empty()) {
        diagnostics.push(format!(
            "operator {} has no admissible values on the grid",
            t.name()
        ));
    }
    let idx = BallIndex::new(&gp.pts);
    let mut sols = Vec::new();
    for i in 0..gp.pts.len() {
        let Some((mult, margin)) = gp.check(&idx, i, kind, r) else {
            continue;
        };
        let mut max_radius = r;
        if !kind.is_global() {
            let mut rr = 2.0 * r;
            while rr < diam && gp.check(&idx, i, kind, rr).is_some() {
                max_radius = rr;
                rr *= 2.0;
            }
        }
        sols.push(LocalSolution {
            x: gp.pts[i].clone(),
            multiplier: mult,
            radius: r,
            max_radius,
            epsilon: gp.eps,
            margin,
            kind,
            h,
        });
    }
    Ok(SolutionSet {
        kind,
        solutions: dedup_solutions(sols, h),
        h,
        region: c.clone(),
        diagnostics,
    })
}

pub fn solve_lsvi(t: &DualMap, c: &Region, h: f64, r: f64, eps: f64) -> Result<SolutionSet> {
    solve_grid(SolutionKind::Lsvi, t, c, h, Some(r), eps)
}

pub fn solve_svi(t: &DualMap, c: &Region, h: f64, eps: f64) -> Result<SolutionSet> {
    solve_grid(SolutionKind::Svi, t, c, h, None, eps)
}

pub fn solve_lmvi(t: &DualMap, c: &Region, h: f64, r: f64, eps: f64) -> Result<SolutionSet> {
    solve_grid(SolutionKind::Lmvi, t, c, h, Some(r), eps)
}

pub fn solve_mvi(t: &DualMap, c: &Region, h: f64, eps: f64) -> Result<SolutionSet> {
    solve_grid(SolutionKind::Mvi, t, c, h, None, eps)
}

/// Local Stampacchia solutions of `T \ {0}`.
pub fn solve_lsvi_star(t: &DualMap, c: &Region, h: f64, r: f64, eps: f64) -> Result<SolutionSet> {
    solve_grid(SolutionKind::LsviStar, t, c, h, Some(r), eps)
}

/// Interior test points for the weak-int inequality: the `h/2` grid of `c`
/// restricted to points at least `h/4` inside whose enclosing `h`-lattice cell
/// has every corner in `c`. The cell condition keeps probes from falling
/// between an off-lattice boundary and the nearest candidate.
fn interior_probes(c: &Region, h: f64) -> Result<Vec<Point>> {
    if !c.lattice_dims().is_empty() {
        return Err(Error::EmptyInterior);
    }
    let mut out = Vec::new();
    for p in c.sample(h / 2.0)? {
        if interior_contains(c, &p, h / 4.0)? && cell_corners_inside(c, &p, h)? {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyInterior);
    }
    Ok(out)
}

fn cell_corners_inside(c: &Region, p: &[f64], h: f64) -> Result<bool> {
    let bounds: Vec<(f64, f64)> = p
        .iter()
        .map(|&v| {
            let q = v / h;
            if (q - q.round()).abs() < 1e-9 {
                (q.round() * h, q.round() * h)
            } else {
                (q.floor() * h, q.ceil() * h)
            }
        })
        .collect();
    for mask in 0..1usize << p.len() {
        let corner: Point = bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| if mask >> i & 1 == 1 { hi } else { lo })
            .collect();
        if !c.contains(&corner, crate::geometry::EPS_MEM)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest over interior probes `y ∈ B(x, r)` of `max_{x* ∈ duals} ⟨x*, y − x⟩`.
fn weak_int_margin(duals: &[Point], x: &[f64], probes: &[&Point]) -> f64 {
    let mut worst = f64::INFINITY;
    for y in probes {
        let d = sub(y, x);
        let best = duals
            .iter()
            .map(|v| dot(v, &d))
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.min(best);
    }
    worst
}

/// Weak-int local solutions of `T \ {0}`: for every interior probe near `x`
/// some nonzero multiplier (allowed to depend on the probe) gives `> −ε`.
pub fn solve_weak_int(t: &DualMap, c: &Region, h: f64, r: f64, eps: f64) -> Result<SolutionSet> {
    if !(r >= 2.0 * h * (1.0 - 1e-9)) {
        return Err(Error::InvalidInput(format!(
            "local radius {r} must be at least 2h = {}",
            2.0 * h
        )));
    }
    let probes = interior_probes(c, h)?;
    let op = t.clone().without_zero();
    let gp = GridProblem::new(&op, c, h, eps)?;
    let pidx = BallIndex::new(&probes);
    let diam = c.diameter();
    let pass = |i: usize, rr: f64| -> Option<f64> {
        let x = &gp.pts[i];
        if gp.duals[i].is_empty() {
            return None;
        }
        let near: Vec<&Point> = pidx.within(x, rr).into_iter().map(|j| &probes[j]).collect();
        let m = weak_int_margin(&gp.duals[i], x, &near);
        (m > -gp.eps).then_some(m)
    };
    let mut sols = Vec::new();
    for i in 0..gp.pts.len() {
        let Some(margin) = pass(i, r) else { continue };
        let mut max_radius = r;
        let mut rr = 2.0 * r;
        while rr < diam && pass(i, rr).is_some() {
            max_radius = rr;
            rr *= 2.0;
        }
        sols.push(LocalSolution {
            x: gp.pts[i].clone(),
            multiplier: None,
            radius: r,
            max_radius,
            epsilon: gp.eps,
            margin,
            kind: SolutionKind::WeakInt,
            h,
        });
    }
    let mut diagnostics = Vec::new();
    if gp.duals.iter().all(|d| d.is_empty()) {
        diagnostics.push(format!(
            "operator {} has no nonzero values on the grid",
            t.name()
        ));
    }
    Ok(SolutionSet {
        kind: SolutionKind::WeakInt,
        solutions: dedup_solutions(sols, h),
        h,
        region: c.clone(),
        diagnostics,
    })
}

pub fn solve(
    kind: SolutionKind,
    t: &DualMap,
    c: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    match kind {
        SolutionKind::Lsvi => solve_lsvi(t, c, h, r, eps),
        SolutionKind::Svi => solve_svi(t, c, h, eps),
        SolutionKind::Lmvi => solve_lmvi(t, c, h, r, eps),
        SolutionKind::Mvi => solve_mvi(t, c, h, eps),
        SolutionKind::LsviStar => solve_lsvi_star(t, c, h, r, eps),
        SolutionKind::WeakInt => solve_weak_int(t, c, h, r, eps),
        other => Err(Error::Unsupported(format!(
            "{other} is not a variational inequality over a fixed set"
        ))),
    }
}

/// Re-runs the defining inequality of `s` on a fresh grid of step `h/2` at tolerance `2ε`.
/// Optimization and quasi-variational kinds are checked by their own modules and
/// are checked here as their Stampacchia or Minty counterpart over `c`.
pub fn verify_solution(s: &LocalSolution, t: &DualMap, c: &Region) -> bool {
    verify_inner(s, t, c).unwrap_or(false)
}

fn verify_inner(s: &LocalSolution, t: &DualMap, c: &Region) -> Result<bool> {
    if !c.contains(&s.x, EPS_MEM)? {
        return Ok(false);
    }
    let h = s.h / 2.0;
    let tol = 2.0 * s.epsilon;
    let r = if s.kind.is_global() {
        c.diameter() + h
    } else {
        s.radius
    };
    match s.kind {
        SolutionKind::Lmvi | SolutionKind::Mvi | SolutionKind::Lmqvi => {
            let ys = c.sample_ball(h, &s.x, r)?;
            let duals: Vec<Vec<Point>> = ys.iter().map(|y| t.values(y)).collect();
            Ok(minty_margin(&s.x, ys.iter().zip(duals.iter().map(|d| d.as_slice()))) >= -tol)
        }
        SolutionKind::WeakInt => {
            let probes: Vec<Point> = interior_probes(c, h)?
                .into_iter()
                .filter(|p| dist(p, &s.x) <= r + 1e-12)
                .collect();
            let duals = t.clone().without_zero().values(&s.x);
            if duals.is_empty() {
                return Ok(false);
            }
            let refs: Vec<&Point> = probes.iter().collect();
            Ok(weak_int_margin(&duals, &s.x, &refs) > -tol)
        }
        _ => {
            let ys = c.sample_ball(h, &s.x, r)?;
            let refs: Vec<&Point> = ys.iter().collect();
            let duals = match &s.multiplier {
                Some(m) => vec![m.clone()],
                None => t.values(&s.x),
            };
            if s.kind == SolutionKind::LsviStar
                && duals.iter().all(|d| crate::geometry::norm(d) < EPS_ZERO)
            {
                return Ok(false);
            }
            Ok(stampacchia_best(&duals, &s.x, &refs).is_some_and(|(_, m)| m >= -tol))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPiece;
    use crate::quasiconvex::{ff_map, QuasiconvexFn};

    fn mixed() -> Region {
        Region::new(
            vec![ConvexPiece::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()],
            vec![0],
        )
        .unwrap()
    }

    fn split() -> Region {
        Region::intervals(&[(-2.0, -1.0), (1.0, 2.0)]).unwrap()
    }

    fn abs_ff(h: f64) -> DualMap {
        let bx = Region::interval(-2.5, 2.5).unwrap();
        ff_map(&QuasiconvexFn::abs_affine(vec![1.0], 0.0), &bx, h, 2).unwrap()
    }

    #[test]
    fn mixed_integer_local_and_global() {
        let t = DualMap::constant(vec![1.0, 1.0]);
        let l = solve_lsvi(&t, &mixed(), 0.1, 0.3, DEFAULT_EPS).unwrap();
        assert_eq!(l.points(), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let g = solve_svi(&t, &mixed(), 0.1, DEFAULT_EPS).unwrap();
        assert_eq!(g.points(), vec![vec![0.0, 0.0]]);
        let m = solve_lmvi(&t, &mixed(), 0.1, 0.3, DEFAULT_EPS).unwrap();
        assert_eq!(m.points(), l.points());
        for s in l.solutions.iter().chain(&g.solutions).chain(&m.solutions) {
            assert!(verify_solution(s, &t, &mixed()));
        }
        // (1,0) is locally optimal at every radius below the distance to the other column.
        assert!(l.solutions[1].max_radius < 1.0);
    }

    #[test]
    fn split_abs_example() {
        let c = split();
        let t = abs_ff(0.05);
        let l = solve_lsvi(&t, &c, 0.05, 0.3, DEFAULT_EPS).unwrap();
        assert_eq!(l.points(), vec![vec![-1.0], vec![1.0]]);
        assert!(solve_svi(&t, &c, 0.05, DEFAULT_EPS).unwrap().is_empty());
        let bogus = LocalSolution {
            x: vec![1.0],
            multiplier: Some(vec![1.0]),
            radius: 10.0,
            max_radius: 10.0,
            epsilon: 1e-7,
            margin: 0.0,
            kind: SolutionKind::Svi,
            h: 0.05,
        };
        assert!(!verify_solution(&bogus, &t, &c));
    }

    #[test]
    fn single_point_region() {
        let c = Region::point(vec![0.3, 0.4]).unwrap();
        let t = DualMap::constant(vec![1.0, -2.0]);
        for kind in [SolutionKind::Svi, SolutionKind::Mvi] {
            assert_eq!(
                solve(kind, &t, &c, 0.1, 0.2, DEFAULT_EPS).unwrap().points(),
                vec![vec![0.3, 0.4]]
            );
        }
        for kind in [SolutionKind::Lsvi, SolutionKind::Lmvi] {
            assert_eq!(
                solve(kind, &t, &c, 0.1, 0.2, DEFAULT_EPS).unwrap().points(),
                vec![vec![0.3, 0.4]]
            );
        }
    }

    #[test]
    fn gradient_of_half_norm_squared_on_box() {
        let c = Region::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let t = DualMap::single_valued(2, "x", |x| x.to_vec());
        assert_eq!(
            solve_svi(&t, &c, 0.1, DEFAULT_EPS).unwrap().points(),
            vec![vec![0.0, 0.0]]
        );
    }

    #[test]
    fn minty_on_abs_picks_the_minimizer() {
        let c = Region::interval(-2.0, 2.0).unwrap();
        let t = abs_ff(0.05);
        assert_eq!(
            solve_lmvi(&t, &c, 0.05, 0.2, DEFAULT_EPS).unwrap().points(),
            vec![vec![0.0]]
        );
        assert_eq!(
            solve_mvi(&t, &c, 0.05, DEFAULT_EPS).unwrap().points(),
            vec![vec![0.0]]
        );
    }

    #[test]
    fn interior_point_is_not_a_solution() {
        let c = Region::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let t = DualMap::constant(vec![1.0, 1.0]);
        let s = LocalSolution {
            x: vec![0.5, 0.5],
            multiplier: Some(vec![1.0, 1.0]),
            radius: 0.3,
            max_radius: 0.3,
            epsilon: 1e-7,
            margin: 0.0,
            kind: SolutionKind::Lsvi,
            h: 0.1,
        };
        assert!(!verify_solution(&s, &t, &c));
    }

    #[test]
    fn weak_int_examples() {
        let c = Region::interval(0.0, 1.0).unwrap();
        let t = DualMap::constant(vec![1.0]);
        let w = solve_weak_int(&t, &c, 0.05, 0.2, DEFAULT_EPS).unwrap();
        assert_eq!(w.points(), vec![vec![0.0]]);
        assert!(verify_solution(&w.solutions[0], &t, &c));
        let star = solve_lsvi_star(&t, &c, 0.05, 0.2, DEFAULT_EPS).unwrap();
        assert_eq!(star.points(), w.points());
        assert!(matches!(
            solve_weak_int(&t, &mixed(), 0.1, 0.2, DEFAULT_EPS),
            Err(Error::EmptyInterior)
        ));
    }

    #[test]
    fn vanishing_operator_gives_empty_star_set() {
        let c = Region::interval(0.0, 1.0).unwrap();
        let t = DualMap::constant(vec![0.0]);
        let s = solve_lsvi_star(&t, &c, 0.1, 0.2, DEFAULT_EPS).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.diagnostics.len(), 1);
    }

    #[test]
    fn radius_below_two_steps_is_rejected() {
        let c = Region::interval(0.0, 1.0).unwrap();
        assert!(solve_lsvi(&DualMap::constant(vec![1.0]), &c, 0.1, 0.1, DEFAULT_EPS).is_err());
    }
}
