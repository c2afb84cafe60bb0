//! Local quasi-optimization: `x ∈ K(x)` minimizing `f` on `K(x) ∩ U`, solved
//! directly, through the union over fixed points, and through `F_f`.

use crate::error::{Error, Result};
use crate::geometry::{dist, hausdorff, Point, Region};
use crate::operators::DualMap;
use crate::quasiconvex::{check_semistrict, default_directions, ff_box, ff_map, QuasiconvexFn};
use crate::qvi::{
    certify_local_repro, fixed_points, fp_tolerance, local_check, ConstraintMap, DualCache,
    QviKind, ReproCertificate,
};
use crate::vi_solvers::{dedup_solutions, LocalSolution, SolutionKind, SolutionSet};

#[derive(Clone, Debug)]
pub struct QuasiOptProblem {
    pub f: QuasiconvexFn,
    pub k: ConstraintMap,
    pub bx: Region,
    pub h: f64,
    pub r: f64,
}

/// `min_y f(y) − f(x)` over `ys` (infinite when `ys` is empty).
pub fn opt_margin(f: &QuasiconvexFn, x: &[f64], ys: &[Point]) -> f64 {
    let fx = f.eval(x);
    ys.iter()
        .map(|y| f.eval(y) - fx)
        .fold(f64::INFINITY, f64::min)
}

/// `eps` scaled by the largest `|f|` on the points (at least `eps`).
pub fn scaled_opt_eps(f: &QuasiconvexFn, pts: &[Point], eps: f64) -> f64 {
    eps * pts.iter().map(|p| f.eval(p).abs()).fold(1.0, f64::max)
}

fn opt_solution(
    x: Point,
    margin: f64,
    r: f64,
    eps: f64,
    h: f64,
    kind: SolutionKind,
) -> LocalSolution {
    LocalSolution {
        x,
        multiplier: None,
        radius: r,
        max_radius: r,
        epsilon: eps,
        margin,
        kind,
        h,
    }
}

/// Grid points `x` of the box with `x ∈ K(x)` (within `h`) and
/// `f(x) ≤ f(y) + ε` on the grid of `K(x) ∩ B̄(x, r)`.
pub fn solve_lqopt_direct(p: &QuasiOptProblem, eps: f64) -> Result<SolutionSet> {
    let eps = scaled_opt_eps(&p.f, &p.bx.sample(p.h)?, eps);
    let mut sols = Vec::new();
    for x in fixed_points(&p.k, &p.bx, p.h, fp_tolerance(p.h))? {
        let ys = p.k.value(&x)?.sample_ball(p.h, &x, p.r)?;
        let m = opt_margin(&p.f, &x, &ys);
        if m >= -eps {
            sols.push(opt_solution(x, m, p.r, eps, p.h, SolutionKind::Lqopt));
        }
    }
    Ok(SolutionSet {
        kind: SolutionKind::Lqopt,
        solutions: dedup_solutions(sols, p.h),
        h: p.h,
        region: p.bx.clone(),
        diagnostics: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnionMode {
    Opt,
    Vi,
    Both,
}

#[derive(Clone, Debug)]
pub struct LqoptUnion {
    pub opt: Option<SolutionSet>,
    pub vi: Option<SolutionSet>,
    pub certificates: Vec<ReproCertificate>,
    /// Result of the semistrictness check that gates the cross-check, when run.
    pub semistrict: Option<bool>,
}

/// Certificates for every grid fixed point, searched from `4r` down.
pub fn certify_all(
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
) -> Result<Vec<ReproCertificate>> {
    fixed_points(k, bx, h, fp_tolerance(h))?
        .iter()
        .map(|z| certify_local_repro(k, z, 4.0 * r, h, 2.0 * h))
        .collect()
}

/// `F_f` on a box padded around the problem box.
pub fn ff_for(f: &QuasiconvexFn, bx: &Region, h: f64) -> Result<DualMap> {
    ff_map(f, &ff_box(bx, h)?, h, default_directions(f.dim()))
}

/// Union over certified fixed points `z` of local minimizers (or `F_f`
/// Stampacchia solutions) on `K(z) ∩ B̄(z, r_z)`, each at radius `r`.
/// Fixed points without a certificate of radius at least `r` are checked directly.
/// With `Both`, the two unions must agree within `h` whenever `f` passes the
/// semistrictness check; otherwise a reformulation mismatch is returned.
pub fn solve_lqopt_union(
    p: &QuasiOptProblem,
    certificates: Option<Vec<ReproCertificate>>,
    eps: f64,
    mode: UnionMode,
) -> Result<LqoptUnion> {
    let certs = match certificates {
        Some(c) => c,
        None => certify_all(&p.k, &p.bx, p.h, p.r)?,
    };
    let opt_eps = scaled_opt_eps(&p.f, &p.bx.sample(p.h)?, eps);
    let t = if mode != UnionMode::Opt {
        Some(ff_for(&p.f, &p.bx, p.h)?)
    } else {
        None
    };
    let cache = t.as_ref().map(DualCache::new);
    let vi_eps = eps;
    let mut opt_sols = Vec::new();
    let mut vi_sols = Vec::new();
    let mut fallback = 0;
    for cert in &certs {
        let z = &cert.z;
        let kz = p.k.value(z)?;
        let (pool, candidates): (Vec<Point>, Vec<Point>) =
            if cert.is_certified() && cert.radius >= p.r - 1e-12 {
                let local = kz.sample_ball(p.h, z, cert.radius)?;
                let cands = local
                    .iter()
                    .filter(|x| dist(x, z) <= cert.radius - p.r + 1e-12)
                    .cloned()
                    .collect();
                (local, cands)
            } else {
                fallback += 1;
                (kz.sample_ball(p.h, z, p.r)?, vec![z.clone()])
            };
        for x in candidates {
            if !p.k.is_fixed(&x, fp_tolerance(p.h))? {
                continue;
            }
            let ys: Vec<Point> = pool
                .iter()
                .filter(|y| dist(y, &x) <= p.r + 1e-12)
                .cloned()
                .collect();
            if mode != UnionMode::Vi {
                let m = opt_margin(&p.f, &x, &ys);
                if m >= -opt_eps {
                    opt_sols.push(opt_solution(
                        x.clone(),
                        m,
                        p.r,
                        opt_eps,
                        p.h,
                        SolutionKind::Lqopt,
                    ));
                }
            }
            if let Some(cache) = &cache {
                if let Some((mult, m)) = local_check(QviKind::Stampacchia, cache, &x, &ys, vi_eps) {
                    vi_sols.push(LocalSolution {
                        x: x.clone(),
                        multiplier: mult,
                        radius: p.r,
                        max_radius: p.r,
                        epsilon: vi_eps,
                        margin: m,
                        kind: SolutionKind::Lsqvi,
                        h: p.h,
                    });
                }
            }
        }
    }
    let diagnostics = if fallback > 0 {
        vec![format!(
            "{fallback} fixed points checked directly (no certificate of radius ≥ {})",
            p.r
        )]
    } else {
        Vec::new()
    };
    let wrap = |kind, sols: Vec<LocalSolution>| SolutionSet {
        kind,
        solutions: dedup_solutions(sols, p.h),
        h: p.h,
        region: p.bx.clone(),
        diagnostics: diagnostics.clone(),
    };
    let mut out = LqoptUnion {
        opt: (mode != UnionMode::Vi).then(|| wrap(SolutionKind::Lqopt, opt_sols)),
        vi: (mode != UnionMode::Opt).then(|| wrap(SolutionKind::Lsqvi, vi_sols)),
        certificates: certs,
        semistrict: None,
    };
    if let (Some(a), Some(b)) = (&out.opt, &out.vi) {
        let gap = hausdorff(&a.points(), &b.points());
        if gap > p.h * (1.0 + 1e-9) {
            let semi = semistrict_on(&p.f, &p.bx, p.h)?;
            out.semistrict = Some(semi);
            if semi {
                return Err(Error::ReformulationMismatch(format!(
                    "optimization and F_f unions differ by {gap} ({} vs {} points)",
                    a.len(),
                    b.len()
                )));
            }
        }
    }
    Ok(out)
}

fn semistrict_on(f: &QuasiconvexFn, bx: &Region, h: f64) -> Result<bool> {
    if f.is_structurally_convex() {
        return Ok(true);
    }
    let (lo, hi) = bx.bounding_box();
    let widest = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    Ok(check_semistrict(f, bx, h.max(widest / 40.0))?.holds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QoptMethod {
    Direct,
    Union,
    Vi,
    All,
}

#[derive(Clone, Debug)]
pub struct QoptOutcome {
    pub direct: Option<SolutionSet>,
    pub union: Option<SolutionSet>,
    pub vi: Option<SolutionSet>,
    pub certificates: Vec<ReproCertificate>,
}

impl QoptOutcome {
    pub fn primary(&self) -> &SolutionSet {
        self.direct
            .as_ref()
            .or(self.union.as_ref())
            .or(self.vi.as_ref())
            .expect("at least one method runs")
    }
}

/// `All` runs the three routes and requires pairwise agreement within `h`
/// (when `f` passes the semistrictness check).
pub fn solve_qopt(p: &QuasiOptProblem, method: QoptMethod, eps: f64) -> Result<QoptOutcome> {
    let mut out = QoptOutcome {
        direct: None,
        union: None,
        vi: None,
        certificates: Vec::new(),
    };
    if matches!(method, QoptMethod::Direct | QoptMethod::All) {
        out.direct = Some(solve_lqopt_direct(p, eps)?);
    }
    let mode = match method {
        QoptMethod::Direct => None,
        QoptMethod::Union => Some(UnionMode::Opt),
        QoptMethod::Vi => Some(UnionMode::Vi),
        QoptMethod::All => Some(UnionMode::Both),
    };
    if let Some(mode) = mode {
        let u = solve_lqopt_union(p, None, eps, mode)?;
        out.union = u.opt;
        out.vi = u.vi;
        out.certificates = u.certificates;
    }
    if let (Some(d), Some(u)) = (&out.direct, &out.union) {
        let gap = hausdorff(&d.points(), &u.points());
        if gap > p.h * (1.0 + 1e-9) && semistrict_on(&p.f, &p.bx, p.h)? {
            return Err(Error::ReformulationMismatch(format!(
                "direct and union solution sets differ by {gap}"
            )));
        }
    }
    Ok(out)
}
