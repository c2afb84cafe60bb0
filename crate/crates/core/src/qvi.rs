//! Parametric constraint maps, fixed points, local reproducibility and grid
//! solvers for quasi-variational inequalities.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    dist, hausdorff, nearest_distance, point_key, ConvexPiece, Point, Region, EPS_MEM,
};
use crate::operators::DualMap;
use crate::quasiconvex::{FnKind, QuasiconvexFn};
use crate::vi_solvers::{
    dedup_solutions, minty_margin, stampacchia_best, LocalSolution, SolutionKind, SolutionSet,
};

pub type RegionFn = Arc<dyn Fn(&[f64]) -> Result<Region> + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Constant,
    Table,
    /// `K(x) = {y : g(y) ≤ level(x)}` on a working box.
    SeparableInequality,
    /// `K(x) = base + L x`.
    LinearTranslation {
        l: Vec<Vec<f64>>,
    },
    Analytic(String),
}

#[derive(Clone)]
pub struct ConstraintMap {
    dim: usize,
    name: String,
    kind: MapKind,
    eval: RegionFn,
}

impl fmt::Debug for ConstraintMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConstraintMap({}, {:?})", self.name, self.kind)
    }
}

impl ConstraintMap {
    pub fn new(
        dim: usize,
        name: impl Into<String>,
        kind: MapKind,
        eval: impl Fn(&[f64]) -> Result<Region> + Send + Sync + 'static,
    ) -> Self {
        ConstraintMap {
            dim,
            name: name.into(),
            kind,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(c: Region) -> Self {
        ConstraintMap::new(c.dim(), "constant", MapKind::Constant, move |_| {
            Ok(c.clone())
        })
    }

    /// `K(x) = [−√(1−x²), √(1−x²)]`.
    pub fn circle() -> Self {
        ConstraintMap::new(1, "circle", MapKind::Analytic("circle".into()), |x| {
            let s = (1.0 - x[0] * x[0]).max(0.0).sqrt();
            Region::interval(-s, s)
        })
    }

    /// `K(x) = [0, 1]` for `x < 1` and `[0, 2]` for `x ≥ 1`.
    pub fn step() -> Self {
        ConstraintMap::new(1, "step", MapKind::Analytic("step".into()), |x| {
            Region::interval(0.0, if x[0] < 1.0 { 1.0 } else { 2.0 })
        })
    }

    /// `K(x) = {y ∈ box : g(y) ≤ level(x)}`; `g` must have a representable sublevel set.
    pub fn separable(g: QuasiconvexFn, level: QuasiconvexFn, bx: Region) -> Result<Self> {
        if g.dim() != bx.dim() || level.dim() != bx.dim() {
            return Err(Error::DimensionMismatch {
                expected: bx.dim(),
                got: g.dim().max(level.dim()),
            });
        }
        let (lo, hi) = bx.bounding_box();
        let frame = ConvexPiece::boxed(lo, hi)?;
        match sublevel_region(&g, level.eval(frame.lo()), &frame) {
            Ok(_) | Err(Error::EmptyUnion) => {}
            Err(e) => return Err(e),
        }
        let name = format!("separable({}, {})", g.describe(), level.describe());
        Ok(ConstraintMap::new(
            bx.dim(),
            name,
            MapKind::SeparableInequality,
            move |x| sublevel_region(&g, level.eval(x), &frame),
        ))
    }

    /// `K(x) = base + L x`.
    pub fn translation(base: Region, l: Vec<Vec<f64>>) -> Result<Self> {
        let n = base.dim();
        if l.len() != n || l.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput(format!(
                "translation matrix must be {n}×{n}"
            )));
        }
        let lm = l.clone();
        Ok(ConstraintMap::new(
            n,
            "translate",
            MapKind::LinearTranslation { l },
            move |x| {
                let shift: Point = lm.iter().map(|row| crate::geometry::dot(row, x)).collect();
                base.translate(&shift)
            },
        ))
    }

    /// Piecewise-constant map taking the value of the nearest table point.
    pub fn table(entries: Vec<(Point, Region)>) -> Result<Self> {
        let dim = entries
            .first()
            .map(|e| e.1.dim())
            .ok_or_else(|| Error::InvalidInput("empty map table".into()))?;
        if let Some(e) = entries
            .iter()
            .find(|e| e.0.len() != dim || e.1.dim() != dim)
        {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.0.len(),
            });
        }
        Ok(ConstraintMap::new(dim, "table", MapKind::Table, move |x| {
            let best = entries
                .iter()
                .min_by(|a, b| dist(&a.0, x).total_cmp(&dist(&b.0, x)))
                .expect("nonempty table");
            Ok(best.1.clone())
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn value(&self, x: &[f64]) -> Result<Region> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        (self.eval)(x)
    }

    /// `x ∈ K(x)` within `tol`; an empty value counts as non-membership.
    pub fn is_fixed(&self, x: &[f64], tol: f64) -> Result<bool> {
        match self.value(x) {
            Ok(k) => k.contains(x, tol),
            Err(Error::EmptyUnion) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

fn sublevel_region(g: &QuasiconvexFn, level: f64, frame: &ConvexPiece) -> Result<Region> {
    let piece = match g.kind() {
        FnKind::Affine { c, d } => frame.clone().with_halfspace(c.clone(), level - d),
        FnKind::AbsAffine { a, b } => {
            if level < 0.0 {
                return Err(Error::EmptyUnion);
            }
            let neg: Vec<f64> = a.iter().map(|v| -v).collect();
            frame
                .clone()
                .with_halfspace(a.clone(), level - b)
                .and_then(|p| p.with_halfspace(neg, level + b))
        }
        FnKind::MaxAffine(ps) => {
            let mut p = Ok(frame.clone());
            for (c, d) in ps {
                p = p.and_then(|q| q.with_halfspace(c.clone(), level - d));
            }
            p
        }
        FnKind::DistToPiece(target)
            if target.kind() == crate::geometry::PieceKind::Box && target.lo() == target.hi() =>
        {
            if level < 0.0 {
                return Err(Error::EmptyUnion);
            }
            let axes = (0..frame.dim()).collect();
            frame.clone().with_ball(axes, target.lo().to_vec(), level)
        }
        FnKind::DistToPiece(target)
            if target.kind() == crate::geometry::PieceKind::Box && target.dim() == 1 =>
        {
            if level < 0.0 {
                return Err(Error::EmptyUnion);
            }
            ConvexPiece::interval(target.lo()[0] - level, target.hi()[0] + level)
                .map(|p| p.clip(frame.lo(), frame.hi()))
                .and_then(|p| p.ok_or(Error::EmptyUnion))
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "sublevel set of {} is not representable as a region",
                g.describe()
            )));
        }
    };
    let piece = piece.map_err(|_| Error::EmptyUnion)?;
    let mid: Point = frame
        .lo()
        .iter()
        .zip(frame.hi())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    if !piece.contains(&piece.project(&mid), 1e-7) {
        return Err(Error::EmptyUnion);
    }
    Ok(Region::single(piece))
}

/// Membership slack for grid fixed points: strictly less than `h`, so grid
/// points next to an off-lattice fixed-point boundary count while points a
/// full step outside an on-lattice set do not.
pub fn fp_tolerance(h: f64) -> f64 {
    h * (1.0 - 1e-6)
}

/// Grid points `x` of `bx` with `x ∈ K(x)` within `eps`.
pub fn fixed_points(k: &ConstraintMap, bx: &Region, h: f64, eps: f64) -> Result<Vec<Point>> {
    if k.dim() != bx.dim() {
        return Err(Error::DimensionMismatch {
            expected: bx.dim(),
            got: k.dim(),
        });
    }
    let mut out = Vec::new();
    for x in bx.sample(h)? {
        if k.is_fixed(&x, eps)? {
            out.push(x);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReproStatus {
    Certified,
    Refuted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReproWitness {
    pub z_prime: Point,
    /// A point in exactly one of `K(z)∩U` and `K(z')∩U` (up to `ε_set`).
    pub y: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReproCertificate {
    pub z: Point,
    /// Largest passing radius, or the smallest tried radius when refuted.
    pub radius: f64,
    pub status: ReproStatus,
    pub witness: Option<ReproWitness>,
    /// Every radius tried, with its outcome.
    pub attempts: Vec<(f64, bool)>,
    pub eps_set: f64,
}

impl ReproCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == ReproStatus::Certified
    }

    pub fn passing_radii(&self) -> Vec<f64> {
        self.attempts.iter().filter(|a| a.1).map(|a| a.0).collect()
    }
}

/// Outcome of the set-equality test at one radius: `None` when it passes.
fn repro_violation(
    k: &ConstraintMap,
    z: &[f64],
    kz: &Region,
    r: f64,
    h: f64,
    eps_set: f64,
) -> Result<Option<ReproWitness>> {
    let a = kz.sample_ball(h, z, r)?;
    // Piecewise maps repeat their values, so localized samples are shared.
    let mut seen: Vec<(Region, Rc<Vec<Point>>)> = vec![(kz.clone(), Rc::new(a.clone()))];
    for zp in &a {
        let b = match k.value(zp) {
            Ok(kzp) => match seen.iter().find(|(reg, _)| *reg == kzp) {
                Some((_, pts)) => pts.clone(),
                None => {
                    let pts = Rc::new(kzp.sample_ball(h, z, r)?);
                    if seen.len() < 64 {
                        seen.push((kzp, pts.clone()));
                    }
                    pts
                }
            },
            Err(Error::EmptyUnion) => Rc::new(Vec::new()),
            Err(e) => return Err(e),
        };
        let b = b.as_slice();
        // Both samples share the lattice and ordering, so equal sets compare equal.
        if a == b || hausdorff(&a, b) <= eps_set {
            continue;
        }
        let far_in_a = a
            .iter()
            .map(|y| (nearest_distance(y, b), y))
            .max_by(|p, q| p.0.total_cmp(&q.0));
        let far_in_b = b
            .iter()
            .map(|y| (nearest_distance(y, &a), y))
            .max_by(|p, q| p.0.total_cmp(&q.0));
        let y = match (far_in_a, far_in_b) {
            (Some(p), Some(q)) => {
                if p.0 >= q.0 {
                    p.1
                } else {
                    q.1
                }
            }
            (Some(p), None) => p.1,
            (None, Some(q)) => q.1,
            (None, None) => continue,
        };
        return Ok(Some(ReproWitness {
            z_prime: zp.clone(),
            y: y.clone(),
        }));
    }
    Ok(None)
}

/// Searches radii `r_max, r_max/2, …` down to `4h` (with a final check at `4h`)
/// for `K(z) ∩ B̄(z,r) = K(z') ∩ B̄(z,r)` at every grid `z' ∈ K(z) ∩ B̄(z,r)`,
/// set equality being grid Hausdorff distance at most `eps_set`.
pub fn certify_local_repro(
    k: &ConstraintMap,
    z: &[f64],
    r_max: f64,
    h: f64,
    eps_set: f64,
) -> Result<ReproCertificate> {
    if !k.is_fixed(z, fp_tolerance(h))? {
        return Err(Error::NotFixedPoint(z.to_vec()));
    }
    let kz = k.value(z)?;
    let floor = 4.0 * h;
    let mut radii = Vec::new();
    let mut r = r_max.max(floor);
    while r >= floor * (1.0 - 1e-9) {
        radii.push(r);
        r /= 2.0;
    }
    if radii
        .last()
        .is_none_or(|&last| (last - floor).abs() > 1e-12)
    {
        radii.push(floor);
    }
    let mut attempts = Vec::new();
    let mut last_witness = None;
    for &r in &radii {
        let v = repro_violation(k, z, &kz, r, h, eps_set)?;
        attempts.push((r, v.is_none()));
        if v.is_some() {
            last_witness = v;
        }
    }
    let best = attempts
        .iter()
        .filter(|a| a.1)
        .map(|a| a.0)
        .fold(f64::NAN, f64::max);
    Ok(if best.is_nan() {
        ReproCertificate {
            z: z.to_vec(),
            radius: floor,
            status: ReproStatus::Refuted,
            witness: last_witness,
            attempts,
            eps_set,
        }
    } else {
        ReproCertificate {
            z: z.to_vec(),
            radius: best,
            status: ReproStatus::Certified,
            witness: None,
            attempts,
            eps_set,
        }
    })
}

/// Re-checks a refutation witness against the exact sets: `z'` lies in
/// `K(z) ∩ B̄(z,r)` and `y` is farther than `ε_set − h` from one of the two localized sets
/// while belonging to the other.
pub fn recheck_repro_witness(k: &ConstraintMap, cert: &ReproCertificate, h: f64) -> Result<bool> {
    let Some(w) = &cert.witness else {
        return Ok(false);
    };
    let r = cert.radius;
    let kz = k.value(&cert.z)?;
    if !(kz.contains(&w.z_prime, EPS_MEM)? && dist(&w.z_prime, &cert.z) <= r + 1e-12) {
        return Ok(false);
    }
    let kzp = k.value(&w.z_prime)?;
    let local = |reg: &Region| -> Result<Option<Region>> { reg.intersect_ball(&cert.z, r) };
    let (lz, lzp) = (local(&kz)?, local(&kzp)?);
    let d = |reg: &Option<Region>| -> Result<f64> {
        match reg {
            Some(g) => g.distance(&w.y),
            None => Ok(f64::INFINITY),
        }
    };
    let (dz, dzp) = (d(&lz)?, d(&lzp)?);
    let gap = cert.eps_set - h;
    Ok((dz <= EPS_MEM && dzp > gap) || (dzp <= EPS_MEM && dz > gap))
}

/// Largest `r` on the sweep `4h, 5h, …, r_hi` such that every radius up to
/// `r` passes the reproducibility test at `z`.
pub fn max_certified_radius(
    k: &ConstraintMap,
    z: &[f64],
    h: f64,
    eps_set: f64,
    r_hi: f64,
) -> Result<Option<f64>> {
    if !k.is_fixed(z, fp_tolerance(h))? {
        return Err(Error::NotFixedPoint(z.to_vec()));
    }
    let kz = k.value(z)?;
    let mut best = None;
    let mut j = 4;
    loop {
        let r = j as f64 * h;
        if r > r_hi + 1e-12 {
            break;
        }
        if repro_violation(k, z, &kz, r, h, eps_set)?.is_some() {
            break;
        }
        best = Some(r);
        j += 1;
    }
    Ok(best)
}

/// Halves `s` from the diameter of `K(z)` down to `2h` looking for
/// `B̄(z,s) ⊂ K(u)` at every grid `u ∈ B̄(z,s)`; that product ball lies in the graph of `K`.
pub fn repro_from_interior_graph(k: &ConstraintMap, z: &[f64], h: f64) -> Result<Option<f64>> {
    if !k.is_fixed(z, fp_tolerance(h))? {
        return Err(Error::NotFixedPoint(z.to_vec()));
    }
    let mut s = k.value(z)?.diameter();
    while s >= 2.0 * h * (1.0 - 1e-9) {
        let ball = Region::single(ConvexPiece::ball(z.to_vec(), s)?).sample(h)?;
        let mut ok = true;
        'outer: for u in &ball {
            let ku = match k.value(u) {
                Ok(v) => v,
                Err(Error::EmptyUnion) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            };
            for v in &ball {
                if !ku.contains(v, EPS_MEM)? {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(Some(s));
        }
        s /= 2.0;
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QviKind {
    Stampacchia,
    Minty,
}

impl QviKind {
    pub fn solution_kind(self) -> SolutionKind {
        match self {
            QviKind::Stampacchia => SolutionKind::Lsqvi,
            QviKind::Minty => SolutionKind::Lmqvi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QviMethod {
    Union,
    Direct,
    Both,
}

/// Memoized operator values keyed by grid point.
pub struct DualCache<'a> {
    t: &'a DualMap,
    memo: std::cell::RefCell<HashMap<Vec<i64>, Vec<Point>>>,
}

impl<'a> DualCache<'a> {
    pub fn new(t: &'a DualMap) -> Self {
        DualCache {
            t,
            memo: Default::default(),
        }
    }

    pub fn get(&self, x: &[f64]) -> Vec<Point> {
        let key = point_key(x);
        if let Some(v) = self.memo.borrow().get(&key) {
            return v.clone();
        }
        let v = self.t.values(x);
        self.memo.borrow_mut().insert(key, v.clone());
        v
    }
}

/// Inequality check of `kind` at `x` against the localized constraint grid `ys`.
pub fn local_check(
    kind: QviKind,
    cache: &DualCache,
    x: &[f64],
    ys: &[Point],
    eps: f64,
) -> Option<(Option<Point>, f64)> {
    match kind {
        QviKind::Stampacchia => {
            let refs: Vec<&Point> = ys.iter().collect();
            let (d, m) = stampacchia_best(&cache.get(x), x, &refs)?;
            (m >= -eps).then_some((Some(d), m))
        }
        QviKind::Minty => {
            let duals: Vec<Vec<Point>> = ys.iter().map(|y| cache.get(y)).collect();
            let m = minty_margin(x, ys.iter().zip(duals.iter().map(|d| d.as_slice())));
            (m >= -eps).then_some((None, m))
        }
    }
}

#[derive(Clone, Debug)]
pub struct QviOutcome {
    pub kind: QviKind,
    pub fixed_points: Vec<Point>,
    pub certificates: Vec<ReproCertificate>,
    pub union: Option<SolutionSet>,
    pub direct: Option<SolutionSet>,
}

impl QviOutcome {
    /// The union result when computed, otherwise the direct one.
    pub fn solutions(&self) -> &SolutionSet {
        self.union
            .as_ref()
            .or(self.direct.as_ref())
            .expect("at least one method runs")
    }
}

fn effective_eps(cache: &DualCache, pts: &[Point], eps: f64) -> f64 {
    let m = pts
        .iter()
        .flat_map(|p| cache.get(p))
        .map(|v| crate::geometry::norm(&v))
        .fold(0.0, f64::max);
    eps * m.max(1.0)
}

fn make_solution(
    kind: QviKind,
    x: Point,
    mult: Option<Point>,
    margin: f64,
    r: f64,
    eps: f64,
    h: f64,
) -> LocalSolution {
    LocalSolution {
        x,
        multiplier: mult,
        radius: r,
        max_radius: r,
        epsilon: eps,
        margin,
        kind: kind.solution_kind(),
        h,
    }
}

/// Grid check of the local QVI definition: `x ∈ K(x)` and the inequality over `K(x) ∩ B̄(x,r)`.
pub fn solve_qvi_direct(
    kind: QviKind,
    t: &DualMap,
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    let cache = DualCache::new(t);
    let pts = bx.sample(h)?;
    let eps = effective_eps(&cache, &pts, eps);
    let mut sols = Vec::new();
    for x in fixed_points(k, bx, h, fp_tolerance(h))? {
        let ys = k.value(&x)?.sample_ball(h, &x, r)?;
        if let Some((m, margin)) = local_check(kind, &cache, &x, &ys, eps) {
            sols.push(make_solution(kind, x, m, margin, r, eps, h));
        }
    }
    Ok(SolutionSet {
        kind: kind.solution_kind(),
        solutions: dedup_solutions(sols, h),
        h,
        region: bx.clone(),
        diagnostics: Vec::new(),
    })
}

/// Union over fixed points `z` of the local VI on `K(z) ∩ U_z`, with `U_z`
/// the certified reproducibility ball. Fixed points without a certificate of
/// radius at least `r` are checked directly.
pub fn solve_qvi_union(
    kind: QviKind,
    t: &DualMap,
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Result<(SolutionSet, Vec<ReproCertificate>, Vec<Point>)> {
    let cache = DualCache::new(t);
    let pts = bx.sample(h)?;
    let eps = effective_eps(&cache, &pts, eps);
    let fps = fixed_points(k, bx, h, fp_tolerance(h))?;
    let mut certs = Vec::new();
    let mut sols = Vec::new();
    let mut diagnostics = Vec::new();
    let mut fallback = 0;
    for z in &fps {
        let cert = certify_local_repro(k, z, 4.0 * r, h, 2.0 * h)?;
        let kz = k.value(z)?;
        if cert.is_certified() && cert.radius >= r - 1e-12 {
            let rz = cert.radius;
            let local = kz.sample_ball(h, z, rz)?;
            // Candidates are the fixed points themselves, which may sit just
            // outside the sampled `K(z)` when the fixed-point tolerance admits them.
            for x in fps.iter().filter(|x| dist(x, z) <= rz - r + 1e-12) {
                let ys: Vec<Point> = local
                    .iter()
                    .filter(|y| dist(y, x) <= r + 1e-12)
                    .cloned()
                    .collect();
                if let Some((m, margin)) = local_check(kind, &cache, x, &ys, eps) {
                    sols.push(make_solution(kind, x.clone(), m, margin, r, eps, h));
                }
            }
        } else {
            fallback += 1;
            let ys = kz.sample_ball(h, z, r)?;
            if let Some((m, margin)) = local_check(kind, &cache, z, &ys, eps) {
                sols.push(make_solution(kind, z.clone(), m, margin, r, eps, h));
            }
        }
        certs.push(cert);
    }
    if fallback > 0 {
        diagnostics.push(format!(
            "{fallback} fixed points checked directly (no certificate of radius ≥ {r})"
        ));
    }
    let set = SolutionSet {
        kind: kind.solution_kind(),
        solutions: dedup_solutions(sols, h),
        h,
        region: bx.clone(),
        diagnostics,
    };
    Ok((set, certs, fps))
}

/// Runs the requested method(s); `Both` fails with a decomposition mismatch
/// when the point sets are farther apart than `h`.
#[allow(clippy::too_many_arguments)]
pub fn solve_qvi(
    kind: QviKind,
    method: QviMethod,
    t: &DualMap,
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Result<QviOutcome> {
    let mut out = QviOutcome {
        kind,
        fixed_points: Vec::new(),
        certificates: Vec::new(),
        union: None,
        direct: None,
    };
    if method != QviMethod::Direct {
        let (set, certs, fps) = solve_qvi_union(kind, t, k, bx, h, r, eps)?;
        out.union = Some(set);
        out.certificates = certs;
        out.fixed_points = fps;
    }
    if method != QviMethod::Union {
        out.direct = Some(solve_qvi_direct(kind, t, k, bx, h, r, eps)?);
        if out.fixed_points.is_empty() {
            out.fixed_points = fixed_points(k, bx, h, fp_tolerance(h))?;
        }
    }
    if let (Some(u), Some(d)) = (&out.union, &out.direct) {
        let gap = hausdorff(&u.points(), &d.points());
        if gap > h * (1.0 + 1e-9) {
            return Err(Error::DecompositionMismatch(format!(
                "union and direct {} sets differ by {gap} ({} vs {} points)",
                kind.solution_kind(),
                u.len(),
                d.len()
            )));
        }
    }
    Ok(out)
}

pub fn solve_lsqvi(
    t: &DualMap,
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    Ok(solve_qvi_union(QviKind::Stampacchia, t, k, bx, h, r, eps)?.0)
}

pub fn solve_lmqvi(
    t: &DualMap,
    k: &ConstraintMap,
    bx: &Region,
    h: f64,
    r: f64,
    eps: f64,
) -> Result<SolutionSet> {
    Ok(solve_qvi_union(QviKind::Minty, t, k, bx, h, r, eps)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi_solvers::{solve_lsvi, DEFAULT_EPS};

    fn unit() -> Region {
        Region::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn circle_fixed_points() {
        let h = 0.01;
        let fp = fixed_points(&ConstraintMap::circle(), &unit(), h, fp_tolerance(h)).unwrap();
        let target = Region::interval(-0.5f64.sqrt(), 0.5f64.sqrt())
            .unwrap()
            .sample(h / 10.0)
            .unwrap();
        assert!(hausdorff(&fp, &target) <= 2.0 * h);
    }

    #[test]
    fn step_map_fixed_points_cover_the_box() {
        let bx = Region::interval(0.0, 2.0).unwrap();
        let fp = fixed_points(&ConstraintMap::step(), &bx, 0.1, 0.1).unwrap();
        assert_eq!(fp, bx.sample(0.1).unwrap());
    }

    #[test]
    fn circle_certificates() {
        let h = 0.01;
        let k = ConstraintMap::circle();
        let c = certify_local_repro(&k, &[0.0], 0.6, h, 2.0 * h).unwrap();
        assert!(c.is_certified());
        assert!((c.radius - 0.6).abs() < 1e-12);
        let edge = certify_local_repro(&k, &[0.71], 0.6, h, 2.0 * h).unwrap();
        assert_eq!(edge.status, ReproStatus::Refuted);
        assert!(recheck_repro_witness(&k, &edge, h).unwrap());
        assert!(matches!(
            certify_local_repro(&k, &[0.9], 0.6, h, 2.0 * h),
            Err(Error::NotFixedPoint(_))
        ));
    }

    #[test]
    fn step_certificate_is_refuted_at_every_radius() {
        let h = 0.02;
        let k = ConstraintMap::step();
        let c = certify_local_repro(&k, &[1.0], 0.8, h, 2.0 * h).unwrap();
        assert_eq!(c.status, ReproStatus::Refuted);
        assert!(c.attempts.iter().all(|a| !a.1));
        assert!(recheck_repro_witness(&k, &c, h).unwrap());
        assert_eq!(repro_from_interior_graph(&k, &[1.0], h).unwrap(), None);
    }

    #[test]
    fn interior_graph_radius() {
        let bx = Region::interval(-3.0, 3.0).unwrap();
        let g = QuasiconvexFn::abs_affine(vec![1.0], 0.0);
        let level = QuasiconvexFn::max_affine(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]).unwrap();
        let k = ConstraintMap::separable(g, level, bx).unwrap();
        let s = repro_from_interior_graph(&k, &[0.0], 0.05)
            .unwrap()
            .unwrap();
        assert!(s > 0.0);
        let c = certify_local_repro(&k, &[0.0], s, 0.05, 0.1).unwrap();
        assert!(c.is_certified());
        let s = repro_from_interior_graph(&ConstraintMap::circle(), &[0.0], 0.02).unwrap();
        assert!(s.is_some());
    }

    #[test]
    fn constant_map_matches_vi() {
        let c = Region::intervals(&[(-2.0, -1.0), (1.0, 2.0)]).unwrap();
        let t = DualMap::constant(vec![1.0]);
        let bx = Region::interval(-2.0, 2.0).unwrap();
        let k = ConstraintMap::constant(c.clone());
        let out = solve_qvi(
            QviKind::Stampacchia,
            QviMethod::Both,
            &t,
            &k,
            &bx,
            0.05,
            0.2,
            DEFAULT_EPS,
        )
        .unwrap();
        assert_eq!(
            out.solutions().points(),
            solve_lsvi(&t, &c, 0.05, 0.2, DEFAULT_EPS).unwrap().points()
        );
    }

    #[test]
    fn circle_decomposition_agrees() {
        let t = DualMap::constant(vec![1.0]);
        for kind in [QviKind::Stampacchia, QviKind::Minty] {
            let out = solve_qvi(
                kind,
                QviMethod::Both,
                &t,
                &ConstraintMap::circle(),
                &unit(),
                0.02,
                0.1,
                DEFAULT_EPS,
            )
            .unwrap();
            assert!(!out.solutions().is_empty());
        }
    }

    #[test]
    fn translation_map() {
        let k = ConstraintMap::translation(Region::interval(0.0, 1.0).unwrap(), vec![vec![0.5]])
            .unwrap();
        let v = k.value(&[1.0]).unwrap();
        assert!(v.contains(&[1.5], 1e-12).unwrap());
        assert!(!v.contains(&[0.4], 1e-12).unwrap());
    }
}
