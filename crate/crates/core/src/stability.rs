//! Perturbed problem families and the closedness harness: solve along a
//! parameter sequence, follow a convergent chain of solutions and test the
//! limit against the limit problem, reporting which hypotheses were verified.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    dist, interior_contains, pk_liminf_contains, tail_start, ConvexPiece, Point, Region,
};
use crate::operators::{
    check_upper_sign_continuity, classify_monotonicity, DualMap, MonotonicityClass,
};
use crate::quasiconvex::QuasiconvexFn;
use crate::quasiopt::{
    certify_all, ff_for, opt_margin, scaled_opt_eps, solve_lqopt_direct, QuasiOptProblem,
};
use crate::qvi::{fixed_points, fp_tolerance, ConstraintMap};
use crate::vi_solvers::{self, dedup_solutions, LocalSolution, SolutionKind, SolutionSet};

pub type OperatorFamily = Arc<dyn Fn(&[f64]) -> DualMap + Send + Sync>;
pub type SetFamily = Arc<dyn Fn(&[f64]) -> Result<Region> + Send + Sync>;
pub type MapFamily = Arc<dyn Fn(&[f64]) -> Result<ConstraintMap> + Send + Sync>;
pub type ObjectiveFamily = Arc<dyn Fn(&[f64]) -> QuasiconvexFn + Send + Sync>;

/// `T(·, λ)`, `K(μ)` or `K(·, μ)`, and `f(·, λ)` on a fixed working box.
#[derive(Clone)]
pub struct PerturbedFamily {
    pub name: String,
    pub lambda_dim: usize,
    pub mu_dim: usize,
    bx: Region,
    t: Option<OperatorFamily>,
    k: Option<SetFamily>,
    kq: Option<MapFamily>,
    f: Option<ObjectiveFamily>,
}

impl fmt::Debug for PerturbedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PerturbedFamily({})", self.name)
    }
}

impl PerturbedFamily {
    pub fn new(name: impl Into<String>, bx: Region, lambda_dim: usize, mu_dim: usize) -> Self {
        PerturbedFamily {
            name: name.into(),
            lambda_dim,
            mu_dim,
            bx,
            t: None,
            k: None,
            kq: None,
            f: None,
        }
    }

    pub fn with_operator(mut self, t: impl Fn(&[f64]) -> DualMap + Send + Sync + 'static) -> Self {
        self.t = Some(Arc::new(t));
        self
    }

    pub fn with_set(
        mut self,
        k: impl Fn(&[f64]) -> Result<Region> + Send + Sync + 'static,
    ) -> Self {
        self.k = Some(Arc::new(k));
        self
    }

    pub fn with_quasi_set(
        mut self,
        k: impl Fn(&[f64]) -> Result<ConstraintMap> + Send + Sync + 'static,
    ) -> Self {
        self.kq = Some(Arc::new(k));
        self
    }

    pub fn with_objective(
        mut self,
        f: impl Fn(&[f64]) -> QuasiconvexFn + Send + Sync + 'static,
    ) -> Self {
        self.f = Some(Arc::new(f));
        self
    }

    pub fn working_box(&self) -> &Region {
        &self.bx
    }

    pub fn has_objective(&self) -> bool {
        self.f.is_some()
    }

    /// `T(·, λ)`, or `F_{f(·,λ)}` when only an objective is given.
    pub fn operator(&self, lambda: &[f64], h: f64) -> Result<DualMap> {
        if let Some(t) = &self.t {
            return Ok(t(lambda));
        }
        ff_for(&self.objective(lambda)?, &self.bx, h)
    }

    pub fn set(&self, mu: &[f64]) -> Result<Region> {
        match &self.k {
            Some(k) => k(mu),
            None => Err(Error::InvalidInput(format!(
                "family {} has no constraint set",
                self.name
            ))),
        }
    }

    pub fn quasi_set(&self, mu: &[f64]) -> Result<ConstraintMap> {
        match &self.kq {
            Some(k) => k(mu),
            None => Err(Error::InvalidInput(format!(
                "family {} has no constraint map",
                self.name
            ))),
        }
    }

    pub fn objective(&self, lambda: &[f64]) -> Result<QuasiconvexFn> {
        match &self.f {
            Some(f) => Ok(f(lambda)),
            None => Err(Error::InvalidInput(format!(
                "family {} has no objective",
                self.name
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosednessKind {
    WeakInt,
    Star,
    Lopt,
    Lqopt,
}

impl ClosednessKind {
    pub fn label(&self) -> &'static str {
        match self {
            ClosednessKind::WeakInt => "weak-int",
            ClosednessKind::Star => "star",
            ClosednessKind::Lopt => "lopt",
            ClosednessKind::Lqopt => "lqopt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    pub h: f64,
    pub r: f64,
    pub eps: f64,
}

pub fn solve_lsvi_star(
    fam: &PerturbedFamily,
    lambda: &[f64],
    mu: &[f64],
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    vi_solvers::solve_lsvi_star(&fam.operator(lambda, h)?, &fam.set(mu)?, h, r, eps)
}

pub fn solve_weak_int(
    fam: &PerturbedFamily,
    lambda: &[f64],
    mu: &[f64],
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    vi_solvers::solve_weak_int(&fam.operator(lambda, h)?, &fam.set(mu)?, h, r, eps)
}

/// Grid local minimizers: `f(x) ≤ f(y) + ε` on the grid of `C ∩ B̄(x, r)`.
pub fn lopt_on(f: &QuasiconvexFn, c: &Region, h: f64, r: f64, eps: f64) -> Result<SolutionSet> {
    let pts = c.sample(h)?;
    let eps = scaled_opt_eps(f, &pts, eps);
    let idx = vi_solvers::BallIndex::new(&pts);
    let mut sols = Vec::new();
    for x in &pts {
        let ys: Vec<Point> = idx
            .within(x, r)
            .into_iter()
            .map(|j| pts[j].clone())
            .collect();
        let m = opt_margin(f, x, &ys);
        if m >= -eps {
            sols.push(LocalSolution {
                x: x.clone(),
                multiplier: None,
                radius: r,
                max_radius: r,
                epsilon: eps,
                margin: m,
                kind: SolutionKind::Lopt,
                h,
            });
        }
    }
    Ok(SolutionSet {
        kind: SolutionKind::Lopt,
        solutions: dedup_solutions(sols, h),
        h,
        region: c.clone(),
        diagnostics: Vec::new(),
    })
}

pub fn solve_lopt(
    fam: &PerturbedFamily,
    lambda: &[f64],
    mu: &[f64],
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    lopt_on(&fam.objective(lambda)?, &fam.set(mu)?, h, r, eps)
}

pub fn solve_instance(
    fam: &PerturbedFamily,
    kind: ClosednessKind,
    lambda: &[f64],
    mu: &[f64],
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    match kind {
        ClosednessKind::WeakInt => solve_weak_int(fam, lambda, mu, h, r, eps),
        ClosednessKind::Star => solve_lsvi_star(fam, lambda, mu, h, r, eps),
        ClosednessKind::Lopt => solve_lopt(fam, lambda, mu, h, r, eps),
        ClosednessKind::Lqopt => {
            let p = QuasiOptProblem {
                f: fam.objective(lambda)?,
                k: fam.quasi_set(mu)?,
                bx: fam.bx.clone(),
                h,
                r,
            };
            solve_lqopt_direct(&p, eps)
        }
    }
}

/// A sequence `(y_n, z_n, λ_n, μ_n) → (y, z, λ, μ)` for the int-dual lower semicontinuity test.
#[derive(Clone, Debug, PartialEq)]
pub struct LscProbe {
    pub y_seq: Vec<Point>,
    pub z_seq: Vec<Point>,
    pub lambda_seq: Vec<Point>,
    pub mu_seq: Vec<Point>,
    pub y: Point,
    pub z: Point,
    pub lambda: Point,
    pub mu: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LscReport {
    pub holds: bool,
    /// `min` over probes of `liminf − sup` (negative when the inequality fails).
    pub worst_margin: f64,
    pub worst_probe: Option<usize>,
}

fn sup_pairing(t: &DualMap, y: &[f64], z: &[f64]) -> f64 {
    let d = crate::geometry::sub(z, y);
    t.clone()
        .without_zero()
        .values(y)
        .iter()
        .map(|v| crate::geometry::dot(v, &d))
        .fold(f64::NEG_INFINITY, f64::max)
}

const INTERIOR_DELTA: f64 = 1e-9;

/// Liminf estimate from a finite tail of `(value, parameter)` pairs: the tail
/// minimum plus the largest difference quotient of the tail times the distance
/// of the first tail parameter to the limit. A tail that has settled away from
/// the limit value gets no allowance.
fn tail_liminf(tail: &[(f64, Point)], limit: &[f64]) -> f64 {
    let lo = tail.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return lo;
    }
    let mut slope: f64 = 0.0;
    for w in tail.windows(2) {
        let dp = dist(&w[0].1, &w[1].1);
        if dp > 1e-15 && w[0].0.is_finite() && w[1].0.is_finite() {
            slope = slope.max((w[1].0 - w[0].0).abs() / dp);
        }
    }
    lo + slope * dist(&tail[0].1, limit)
}

/// Int-dual lower semicontinuity of `(T \ {0}, K)` on explicit probes, with
/// the liminf estimated from the last quartile (see `tail_liminf`).
pub fn int_dual_lsc(
    operator: impl Fn(&[f64]) -> Result<DualMap>,
    set: impl Fn(&[f64]) -> Result<Region>,
    probes: &[LscProbe],
    eps: f64,
) -> Result<LscReport> {
    let mut worst = f64::INFINITY;
    let mut worst_probe = None;
    for (i, p) in probes.iter().enumerate() {
        let n = p.y_seq.len();
        if n == 0 || p.z_seq.len() != n || p.lambda_seq.len() != n || p.mu_seq.len() != n {
            return Err(Error::ProbeMembership {
                probe: i,
                reason: "sequence lengths differ or are zero".into(),
            });
        }
        let k0 = set(&p.mu)?;
        if !interior_contains(&k0, &p.y, INTERIOR_DELTA)? {
            return Err(Error::ProbeMembership {
                probe: i,
                reason: "limit y is not interior to K(μ)".into(),
            });
        }
        if !k0.contains(&p.z, crate::geometry::EPS_MEM)? {
            return Err(Error::ProbeMembership {
                probe: i,
                reason: "limit z is not in K(μ)".into(),
            });
        }
        let lhs = sup_pairing(&operator(&p.lambda)?, &p.y, &p.z);
        let mut tail = Vec::new();
        for j in tail_start(n)..n {
            let kn = set(&p.mu_seq[j])?;
            if !interior_contains(&kn, &p.y_seq[j], INTERIOR_DELTA)? {
                return Err(Error::ProbeMembership {
                    probe: i,
                    reason: format!("y_{j} is not interior to K(μ_{j})"),
                });
            }
            if !kn.contains(&p.z_seq[j], crate::geometry::EPS_MEM)? {
                return Err(Error::ProbeMembership {
                    probe: i,
                    reason: format!("z_{j} is not in K(μ_{j})"),
                });
            }
            let param: Point = p.lambda_seq[j]
                .iter()
                .chain(&p.mu_seq[j])
                .copied()
                .collect();
            tail.push((
                sup_pairing(&operator(&p.lambda_seq[j])?, &p.y_seq[j], &p.z_seq[j]),
                param,
            ));
        }
        let limit: Point = p.lambda.iter().chain(&p.mu).copied().collect();
        let rhs = tail_liminf(&tail, &limit);
        let margin = if lhs == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            rhs - lhs
        };
        if margin < worst {
            worst = margin;
            worst_probe = Some(i);
        }
    }
    Ok(LscReport {
        holds: worst >= -eps,
        worst_margin: worst,
        worst_probe,
    })
}

pub fn check_int_dual_lsc(
    fam: &PerturbedFamily,
    probes: &[LscProbe],
    h: f64,
    eps: f64,
) -> Result<LscReport> {
    int_dual_lsc(|l| fam.operator(l, h), |m| fam.set(m), probes, eps)
}

/// Parameter sequence `(λ_n, μ_n) → (λ₀, μ₀)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceInput {
    pub lambdas: Vec<Point>,
    pub mus: Vec<Point>,
    pub lambda0: Point,
    pub mu0: Point,
}

impl TraceInput {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `λ_n = λ₀ + ρⁿ dλ`, `μ_n = μ₀ + ρⁿ dμ` for `n = 1..=len`.
    pub fn geometric(
        lambda0: Point,
        mu0: Point,
        dl: Point,
        dm: Point,
        ratio: f64,
        len: usize,
    ) -> Self {
        let step = |base: &Point, d: &Point, n: usize| -> Point {
            let s = ratio.powi(n as i32);
            base.iter().zip(d).map(|(b, v)| b + s * v).collect()
        };
        TraceInput {
            lambdas: (1..=len).map(|n| step(&lambda0, &dl, n)).collect(),
            mus: (1..=len).map(|n| step(&mu0, &dm, n)).collect(),
            lambda0,
            mu0,
        }
    }

    /// `λ_n = λ₀ + dλ/n`, `μ_n = μ₀ + dμ/n` for `n = 1..=len`.
    pub fn harmonic(lambda0: Point, mu0: Point, dl: Point, dm: Point, len: usize) -> Self {
        let step = |base: &Point, d: &Point, n: usize| -> Point {
            base.iter().zip(d).map(|(b, v)| b + v / n as f64).collect()
        };
        TraceInput {
            lambdas: (1..=len).map(|n| step(&lambda0, &dl, n)).collect(),
            mus: (1..=len).map(|n| step(&mu0, &dm, n)).collect(),
            lambda0,
            mu0,
        }
    }

    pub fn constant(lambda0: Point, mu0: Point, len: usize) -> Self {
        TraceInput {
            lambdas: vec![lambda0.clone(); len],
            mus: vec![mu0.clone(); len],
            lambda0,
            mu0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(HypothesisCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub points: Vec<Point>,
    pub converged: bool,
    /// Whether the chain's last point is within `h` of the limit-problem solutions.
    pub limit_ok: bool,
}

impl Chain {
    pub fn limit(&self) -> &Point {
        self.points.last().expect("chains are nonempty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceTrace {
    pub kind: ClosednessKind,
    pub input: TraceInput,
    pub solutions: Vec<Vec<Point>>,
    pub chains: Vec<Chain>,
    pub limit_solutions: Vec<Point>,
    pub verdict: Verdict,
    pub hypotheses: HypothesisReport,
    pub diagnostics: Vec<String>,
}

/// Consecutive steps below `h` needed to declare a chain convergent.
pub const SETTLE_STEPS: usize = 5;

fn follow_chain(start: &Point, sets: &[Vec<Point>], h: f64) -> (Vec<Point>, bool) {
    let mut pts = vec![start.clone()];
    for s in &sets[1..] {
        let cur = pts.last().unwrap();
        let next = s
            .iter()
            .min_by(|a, b| dist(a, cur).total_cmp(&dist(b, cur)))
            .unwrap()
            .clone();
        pts.push(next);
    }
    let n = pts.len();
    let converged =
        n > SETTLE_STEPS && (n - SETTLE_STEPS..n).all(|i| dist(&pts[i], &pts[i - 1]) < h);
    (pts, converged)
}

/// Solves every instance of the trace, follows nearest-point chains from each
/// first-instance solution, and tests converged limits against the limit
/// problem solved at radius `max(r/2, 2h)` and tolerance `2ε` (a limit passes
/// when it is within `h` of that set).
pub fn closedness_trial(
    fam: &PerturbedFamily,
    kind: ClosednessKind,
    trace: &TraceInput,
    cfg: &TrialConfig,
) -> Result<SequenceTrace> {
    if trace.is_empty() || trace.mus.len() != trace.lambdas.len() {
        return Err(Error::InvalidInput(
            "trace needs matching, nonempty λ and μ sequences".into(),
        ));
    }
    let TrialConfig { h, r, eps } = *cfg;
    let mut diagnostics = Vec::new();
    let mut solutions = Vec::with_capacity(trace.len());
    for (l, m) in trace.lambdas.iter().zip(&trace.mus) {
        solutions.push(solve_instance(fam, kind, l, m, h, r, eps)?.points());
    }
    let limit_solutions = solve_instance(
        fam,
        kind,
        &trace.lambda0,
        &trace.mu0,
        h,
        (r / 2.0).max(2.0 * h),
        2.0 * eps,
    )?
    .points();
    let hypotheses = check_hypotheses(fam, kind, trace, cfg)?;
    let mut chains = Vec::new();
    if let Some(n) = solutions.iter().position(|s| s.is_empty()) {
        diagnostics.push(format!("empty solution set at n = {}", n + 1));
    } else {
        for start in &solutions[0] {
            let (points, converged) = follow_chain(start, &solutions, h);
            let last = points.last().unwrap();
            let limit_ok = limit_solutions
                .iter()
                .any(|s| dist(s, last) <= h * (1.0 + 1e-9));
            chains.push(Chain {
                points,
                converged,
                limit_ok,
            });
        }
    }
    let converged: Vec<&Chain> = chains.iter().filter(|c| c.converged).collect();
    let verdict = if converged.is_empty() {
        diagnostics.push("no convergent chain within the trace horizon".into());
        Verdict::Inconclusive
    } else if converged.iter().all(|c| c.limit_ok) {
        Verdict::True
    } else {
        Verdict::False
    };
    Ok(SequenceTrace {
        kind,
        input: trace.clone(),
        solutions,
        chains,
        limit_solutions,
        verdict,
        hypotheses,
        diagnostics,
    })
}

fn has_interior(c: &Region, h: f64) -> Result<bool> {
    if !c.lattice_dims().is_empty() {
        return Ok(false);
    }
    for p in c.sample(h / 2.0)? {
        if interior_contains(c, &p, h / 4.0)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Painlevé–Kuratowski convergence of the tail to `k0`, both inclusions within `h`.
fn pk_converges(seq: &[Region], k0: &Region, h: f64) -> Result<bool> {
    if seq.len() < 2 {
        return Ok(true);
    }
    if !pk_liminf_contains(seq, k0, h, h)? {
        return Ok(false);
    }
    for kn in &seq[tail_start(seq.len())..] {
        for y in kn.sample(h)? {
            if k0.distance(&y)? > h {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn spread<T: Clone>(items: &[T], count: usize) -> Vec<T> {
    if items.len() <= count {
        return items.to_vec();
    }
    (0..count)
        .map(|i| items[i * (items.len() - 1) / (count - 1).max(1)].clone())
        .collect()
}

/// Probes built from the trace: interior grid points `y` of the limit set
/// that stay interior along the tail, grid points `z` projected onto each `K(μ_n)`.
pub fn derive_probes(
    sets: &[Region],
    k0: &Region,
    trace: &TraceInput,
    h: f64,
) -> Result<Vec<LscProbe>> {
    let grid = k0.sample(h)?;
    let mut ys = Vec::new();
    for p in &grid {
        if !interior_contains(k0, p, h / 2.0)? {
            continue;
        }
        let mut ok = true;
        for kn in &sets[tail_start(sets.len())..] {
            if !interior_contains(kn, p, INTERIOR_DELTA)? {
                ok = false;
                break;
            }
        }
        if ok {
            ys.push(p.clone());
        }
    }
    let ys = spread(&ys, 5);
    let zs = spread(&grid, 5);
    let mut probes = Vec::new();
    for y in &ys {
        for z in &zs {
            let z_seq = sets
                .iter()
                .map(|kn| kn.project(z))
                .collect::<Result<Vec<_>>>()?;
            probes.push(LscProbe {
                y_seq: vec![y.clone(); sets.len()],
                z_seq,
                lambda_seq: trace.lambdas.clone(),
                mu_seq: trace.mus.clone(),
                y: y.clone(),
                z: z.clone(),
                lambda: trace.lambda0.clone(),
                mu: trace.mu0.clone(),
            });
        }
    }
    Ok(probes)
}

/// Argmin of `f(·, λ₀)` on the box grid, then `|f(x, λ₀ ± δ e_i) − f(x, λ₀)|`
/// at `δ = 2⁻¹²` must be at most `1e-3 (1 + |f(x, λ₀)|)`.
fn objective_continuity(fam: &PerturbedFamily, lambda0: &[f64], h: f64) -> Result<(bool, String)> {
    let f0 = fam.objective(lambda0)?;
    let grid = fam.bx.sample(h)?;
    let x = grid
        .iter()
        .min_by(|a, b| f0.eval(a).total_cmp(&f0.eval(b)))
        .unwrap()
        .clone();
    let v0 = f0.eval(&x);
    let delta = 2f64.powi(-12);
    let mut worst: f64 = 0.0;
    for i in 0..lambda0.len() {
        for s in [-1.0, 1.0] {
            let mut l = lambda0.to_vec();
            l[i] += s * delta;
            worst = worst.max((fam.objective(&l)?.eval(&x) - v0).abs());
        }
    }
    let ok = worst <= 1e-3 * (1.0 + v0.abs());
    Ok((
        ok,
        format!("x_λ = {x:?}, largest change {worst:.3e} at |Δλ| = {delta:.1e}"),
    ))
}

fn operator_hypotheses(
    report: &mut HypothesisReport,
    t: &DualMap,
    k0: &Region,
    h: f64,
    eps: f64,
    star: bool,
) -> Result<()> {
    let (lo, hi) = k0.bounding_box();
    let widest = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let hc = h.max(widest / if k0.dim() == 1 { 24.0 } else { 8.0 });
    let cls = classify_monotonicity(t, k0, hc, eps.max(1e-9))?;
    report.push(
        "quasimonotone",
        cls.class >= MonotonicityClass::Quasimonotone,
        format!("class {}", cls.class),
    );
    let pts = spread(&k0.sample(hc)?, 8);
    let tz = t.clone().without_zero();
    let mut checked = 0;
    let mut ok = true;
    for x in &pts {
        for y in &pts {
            if x == y {
                continue;
            }
            let ts = [0.25, 0.5, 0.75];
            let inside = ts.iter().all(|&s| {
                k0.contains(&crate::geometry::lerp(x, y, s), crate::geometry::EPS_MEM)
                    .unwrap_or(false)
            });
            if !inside || tz.values(x).is_empty() {
                continue;
            }
            checked += 1;
            if !check_upper_sign_continuity(&tz, k0, x, y, &ts, eps.max(1e-9))? {
                ok = false;
            }
        }
    }
    let name = if star {
        "local upper sign-continuity (convex values)"
    } else {
        "local upper sign-continuity"
    };
    report.push(name, ok, format!("{checked} sampled segments"));
    Ok(())
}

/// Hypotheses of the closedness results, checked on the trace.
pub fn check_hypotheses(
    fam: &PerturbedFamily,
    kind: ClosednessKind,
    trace: &TraceInput,
    cfg: &TrialConfig,
) -> Result<HypothesisReport> {
    let TrialConfig { h, r, eps } = *cfg;
    let mut report = HypothesisReport::default();
    if fam.has_objective() {
        let (ok, detail) = objective_continuity(fam, &trace.lambda0, h)?;
        report.push("f(x_λ, ·) continuous", ok, detail);
    }
    let lsc_eps = 1e-6;
    match kind {
        ClosednessKind::WeakInt | ClosednessKind::Star | ClosednessKind::Lopt => {
            let k0 = fam.set(&trace.mu0)?;
            let sets = trace
                .mus
                .iter()
                .map(|m| fam.set(m))
                .collect::<Result<Vec<_>>>()?;
            let interior = has_interior(&k0, h)?
                && sets
                    .iter()
                    .map(|s| has_interior(s, h))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .all(|b| b);
            report.push("nonempty interior", interior, "K(μ₀) and every K(μ_n)");
            report.push(
                "PK convergence",
                pk_converges(&sets, &k0, h)?,
                "tail within h both ways",
            );
            if kind != ClosednessKind::Lopt {
                let t0 = fam.operator(&trace.lambda0, h)?;
                operator_hypotheses(&mut report, &t0, &k0, h, eps, kind == ClosednessKind::Star)?;
            }
            if interior {
                let probes = derive_probes(&sets, &k0, trace, h)?;
                let rep = check_int_dual_lsc(fam, &probes, h, lsc_eps)?;
                report.push(
                    "int-dual lsc",
                    rep.holds,
                    format!(
                        "{} probes, worst margin {:.3e}",
                        probes.len(),
                        rep.worst_margin
                    ),
                );
            } else {
                report.push("int-dual lsc", false, "not checkable without interior");
            }
        }
        ClosednessKind::Lqopt => {
            let k0 = fam.quasi_set(&trace.mu0)?;
            let last = fam.quasi_set(trace.mus.last().unwrap())?;
            let mut certified = true;
            let mut uncert = 0;
            for k in [&k0, &last] {
                for c in certify_all(k, &fam.bx, h, r)? {
                    if !c.is_certified() {
                        certified = false;
                        uncert += 1;
                    }
                }
            }
            report.push(
                "local reproducibility",
                certified,
                format!("{uncert} uncertified fixed points"),
            );
            let fps = spread(&fixed_points(&k0, &fam.bx, h, fp_tolerance(h))?, 3);
            let mut pk = true;
            let mut interior = true;
            let mut lsc = true;
            let mut worst = f64::INFINITY;
            for z in &fps {
                let kz0 = k0.value(z)?;
                let sets = trace
                    .mus
                    .iter()
                    .map(|m| fam.quasi_set(m)?.value(z))
                    .collect::<Result<Vec<_>>>()?;
                pk &= pk_converges(&sets, &kz0, h)?;
                let int_here = has_interior(&kz0, h)?
                    && sets
                        .iter()
                        .map(|s| has_interior(s, h))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .all(|b| b);
                interior &= int_here;
                if int_here {
                    let probes = derive_probes(&sets, &kz0, trace, h)?;
                    let rep = int_dual_lsc(
                        |l| fam.operator(l, h),
                        |m| fam.quasi_set(m)?.value(z),
                        &probes,
                        lsc_eps,
                    )?;
                    lsc &= rep.holds;
                    worst = worst.min(rep.worst_margin);
                }
            }
            report.push(
                "nonempty interior",
                interior,
                format!("K(z, μ) at {} fixed points", fps.len()),
            );
            report.push("PK convergence", pk, "K(z, μ_n) → K(z, μ₀)");
            report.push(
                "int-dual lsc",
                lsc && interior,
                format!("worst margin {worst:.3e}"),
            );
        }
    }
    Ok(report)
}

/// A box-shaped `K(μ) = base + μ` helper for families.
pub fn translated_box(lo: &[f64], hi: &[f64], mu: &[f64]) -> Result<Region> {
    let lo: Point = lo.iter().zip(mu).map(|(a, m)| a + m).collect();
    let hi: Point = hi.iter().zip(mu).map(|(a, m)| a + m).collect();
    Ok(Region::single(ConvexPiece::boxed(lo, hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_family() -> PerturbedFamily {
        PerturbedFamily::new("abs", Region::interval(-2.0, 2.0).unwrap(), 1, 1)
            .with_objective(|l| {
                let c = l[0];
                QuasiconvexFn::custom(1, "|x-λ|", 1.0, move |x| (x[0] - c).abs())
            })
            .with_set(|m| translated_box(&[-1.0], &[1.0], m))
    }

    #[test]
    fn lopt_examples() {
        let split = Region::intervals(&[(-2.0, -1.0), (1.0, 2.0)]).unwrap();
        let s = lopt_on(
            &QuasiconvexFn::abs_affine(vec![1.0], 0.0),
            &split,
            0.05,
            0.3,
            1e-7,
        )
        .unwrap();
        assert_eq!(s.points(), vec![vec![-1.0], vec![1.0]]);
        let mixed = Region::new(
            vec![ConvexPiece::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()],
            vec![0],
        )
        .unwrap();
        let s = lopt_on(
            &QuasiconvexFn::affine(vec![1.0, 1.0], 0.0),
            &mixed,
            0.1,
            0.3,
            1e-7,
        )
        .unwrap();
        assert_eq!(s.points(), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let c = Region::interval(0.0, 1.0).unwrap();
        let s = lopt_on(&QuasiconvexFn::affine(vec![0.0], 1.0), &c, 0.25, 0.5, 1e-7).unwrap();
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn star_at_unique_minimizer() {
        let fam = abs_family();
        let s = solve_lopt(&fam, &[0.0], &[0.0], 0.05, 0.2, 1e-7).unwrap();
        assert_eq!(s.points(), vec![vec![0.0]]);
    }

    #[test]
    fn lopt_trace_converges_to_minimizer() {
        let fam = abs_family();
        let trace = TraceInput::harmonic(vec![0.0], vec![0.0], vec![1.0], vec![-1.0], 60);
        let cfg = TrialConfig {
            h: 0.05,
            r: 0.2,
            eps: 1e-7,
        };
        let t = closedness_trial(&fam, ClosednessKind::Lopt, &trace, &cfg).unwrap();
        assert_eq!(t.verdict, Verdict::True);
        assert!(t.limit_solutions.contains(&vec![0.0]));
    }

    #[test]
    fn stationary_trace_is_true() {
        let fam = PerturbedFamily::new("const", Region::interval(-1.0, 2.0).unwrap(), 1, 1)
            .with_operator(|_| DualMap::constant(vec![1.0]))
            .with_set(|m| translated_box(&[0.0], &[1.0], m));
        let cfg = TrialConfig {
            h: 0.05,
            r: 0.2,
            eps: 1e-7,
        };
        for kind in [ClosednessKind::WeakInt, ClosednessKind::Star] {
            let t = closedness_trial(
                &fam,
                kind,
                &TraceInput::constant(vec![0.0], vec![0.0], 12),
                &cfg,
            )
            .unwrap();
            assert_eq!(t.verdict, Verdict::True);
            assert!(t.hypotheses.all_passed(), "{:?}", t.hypotheses);
        }
    }

    #[test]
    fn jump_operator_is_attributed() {
        let fam = PerturbedFamily::new("jump", Region::interval(-1.0, 2.0).unwrap(), 1, 1)
            .with_operator(|l| DualMap::constant(vec![if l[0] > 0.0 { 1.0 } else { -1.0 }]))
            .with_set(|m| translated_box(&[0.0], &[1.0], m));
        let cfg = TrialConfig {
            h: 0.05,
            r: 0.2,
            eps: 1e-7,
        };
        let trace = TraceInput::geometric(vec![0.0], vec![0.0], vec![1.0], vec![0.0], 0.5, 20);
        let t = closedness_trial(&fam, ClosednessKind::WeakInt, &trace, &cfg).unwrap();
        assert_eq!(t.verdict, Verdict::False);
        assert!(t
            .hypotheses
            .failed()
            .iter()
            .any(|c| c.name == "int-dual lsc"));
    }

    #[test]
    fn lsc_probe_membership_errors() {
        let fam = PerturbedFamily::new("c", Region::interval(-1.0, 2.0).unwrap(), 1, 1)
            .with_operator(|_| DualMap::constant(vec![1.0]))
            .with_set(|m| translated_box(&[0.0], &[1.0], m));
        let probe = LscProbe {
            y_seq: vec![vec![0.5]],
            z_seq: vec![vec![0.9]],
            lambda_seq: vec![vec![0.0]],
            mu_seq: vec![vec![0.0]],
            y: vec![0.0],
            z: vec![0.9],
            lambda: vec![0.0],
            mu: vec![0.0],
        };
        assert!(matches!(
            check_int_dual_lsc(&fam, std::slice::from_ref(&probe), 0.1, 1e-9),
            Err(Error::ProbeMembership { probe: 0, .. })
        ));
        let ok = LscProbe {
            y: vec![0.5],
            ..probe
        };
        assert!(check_int_dual_lsc(&fam, &[ok], 0.1, 1e-9).unwrap().holds);
    }
}
