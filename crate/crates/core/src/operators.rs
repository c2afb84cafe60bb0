//! Sampled set-valued dual maps, generalized-monotonicity classification and
//! upper sign-continuity checks.
//!
//! Images are finite lists of dual vectors, so every sup/inf in the
//! definitions becomes a max/min. Open intervals of dual values are sampled
//! through their closure: the finite max/min then equals the sup/inf.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{dot, lerp, norm, sub, Point, Region};

pub const EPS_ZERO: f64 = 1e-8;
pub const EPS_DUAL: f64 = 1e-7;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<Point> + Send + Sync>;
/// `(base x, point y) ↦ Φ_x(y)`.
pub type SubmapEvaluator = Arc<dyn Fn(&[f64], &[f64]) -> Vec<Point> + Send + Sync>;

#[derive(Clone)]
pub struct DualMap {
    dim: usize,
    name: String,
    eval: Evaluator,
    exclude_zero: bool,
    submap: Option<SubmapEvaluator>,
}

impl fmt::Debug for DualMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualMap")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .field("exclude_zero", &self.exclude_zero)
            .field("submap", &self.submap.is_some())
            .finish()
    }
}

impl DualMap {
    pub fn new(
        dim: usize,
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> Vec<Point> + Send + Sync + 'static,
    ) -> Self {
        DualMap {
            dim,
            name: name.into(),
            eval: Arc::new(eval),
            exclude_zero: false,
            submap: None,
        }
    }

    pub fn constant(c: Vec<f64>) -> Self {
        let dim = c.len();
        let name = format!("constant({c:?})");
        DualMap::new(dim, name, move |_| vec![c.clone()])
    }

    /// Single-valued map `x ↦ {g(x)}`.
    pub fn single_valued(
        dim: usize,
        name: impl Into<String>,
        g: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
    ) -> Self {
        DualMap::new(dim, name, move |x| vec![g(x)])
    }

    /// Piecewise-constant map that returns the vectors of the nearest table point.
    pub fn table(entries: Vec<(Point, Vec<Point>)>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::InvalidInput("empty operator table".into()))?;
        let dim = first.0.len();
        for (p, vs) in &entries {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if let Some(v) = vs.iter().find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        Ok(DualMap::new(dim, "table", move |x| {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (i, (p, _)) in entries.iter().enumerate() {
                let d = crate::geometry::dist(p, x);
                if d < bd {
                    bd = d;
                    best = i;
                }
            }
            entries[best].1.clone()
        }))
    }

    /// The map `T \ {0}`.
    pub fn without_zero(mut self) -> Self {
        self.exclude_zero = true;
        self
    }

    pub fn with_submap(
        mut self,
        phi: impl Fn(&[f64], &[f64]) -> Vec<Point> + Send + Sync + 'static,
    ) -> Self {
        self.submap = Some(Arc::new(phi));
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `x ↦ α(x)·T(x)` for a positive scalar field α.
    pub fn rescaled(&self, alpha: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let inner = self.eval.clone();
        let mut out = self.clone();
        out.name = format!("scaled {}", self.name);
        out.eval = Arc::new(move |x| {
            let a = alpha(x);
            inner(x)
                .into_iter()
                .map(|v| v.into_iter().map(|c| a * c).collect())
                .collect()
        });
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn excludes_zero(&self) -> bool {
        self.exclude_zero
    }

    pub fn has_submap(&self) -> bool {
        self.submap.is_some()
    }

    /// Sampled image after the zero filter; may be empty.
    pub fn values(&self, x: &[f64]) -> Vec<Point> {
        let vs = (self.eval)(x);
        if self.exclude_zero {
            vs.into_iter().filter(|v| norm(v) >= EPS_ZERO).collect()
        } else {
            vs
        }
    }

    pub fn submap_values(&self, base: &[f64], y: &[f64]) -> Option<Vec<Point>> {
        self.submap.as_ref().map(|phi| phi(base, y))
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<Point>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let vs = self.values(x);
        if vs.is_empty() {
            return Err(Error::OperatorVanishes(x.to_vec()));
        }
        Ok(vs)
    }
}

pub fn eval(t: &DualMap, x: &[f64]) -> Result<Vec<Point>> {
    t.eval(x)
}

/// `k` evenly spaced points of the closed interval `[a, b]`.
pub fn interval_samples(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..k)
            .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MonotonicityClass {
    None,
    Quasimonotone,
    ProperlyQuasimonotone,
    Pseudomonotone,
}

impl MonotonicityClass {
    pub fn label(&self) -> &'static str {
        match self {
            MonotonicityClass::None => "none",
            MonotonicityClass::Quasimonotone => "quasimonotone",
            MonotonicityClass::ProperlyQuasimonotone => "properly-quasimonotone",
            MonotonicityClass::Pseudomonotone => "pseudomonotone",
        }
    }
}

impl fmt::Display for MonotonicityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A violating configuration of one class.
///
/// Pair classes store `points = [x, y]`, `duals = [x*, y*]`. The proper class
/// stores the tuple in `points`, one violating dual per tuple point in
/// `duals`, and the convex combination in `combination`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityWitness {
    pub violates: MonotonicityClass,
    pub points: Vec<Point>,
    pub duals: Vec<Point>,
    pub combination: Option<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub class: MonotonicityClass,
    pub quasi: bool,
    pub proper: bool,
    pub pseudo: bool,
    pub witness: Option<MonotonicityWitness>,
}

const MAX_TUPLES_PER_SIZE: usize = 200_000;

/// Grid classification of `T` on `C`.
///
/// Quasimonotone premise `⟨x*, y−x⟩ > ε`; pseudomonotone premise `⟨x*, y−x⟩ ≥ 0`;
/// every conclusion is tested at `≥ −ε`. Proper quasimonotonicity is tested on
/// tuples of up to `n+1` grid points (deterministically thinned when the
/// count is large) and convex weights `kᵢ/(s+2)` with `kᵢ ≥ 1`.
pub fn classify_monotonicity(
    t: &DualMap,
    c: &Region,
    h: f64,
    eps: f64,
) -> Result<MonotonicityReport> {
    let pts = c.sample(h)?;
    if pts.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let vals: Vec<Vec<Point>> = pts.iter().map(|p| t.values(p)).collect();

    let quasi_w = pair_violation(
        &pts,
        &vals,
        |s| s > eps,
        eps,
        MonotonicityClass::Quasimonotone,
    );
    let pseudo_w = pair_violation(
        &pts,
        &vals,
        |s| s >= 0.0,
        eps,
        MonotonicityClass::Pseudomonotone,
    );
    let proper_w = proper_violation(t, &pts, &vals, eps);

    let quasi = quasi_w.is_none();
    let proper = proper_w.is_none();
    let pseudo = pseudo_w.is_none();
    let class = if pseudo {
        MonotonicityClass::Pseudomonotone
    } else if proper {
        MonotonicityClass::ProperlyQuasimonotone
    } else if quasi {
        MonotonicityClass::Quasimonotone
    } else {
        MonotonicityClass::None
    };
    let witness = if !quasi {
        quasi_w
    } else if !proper {
        proper_w
    } else {
        pseudo_w
    };
    Ok(MonotonicityReport {
        class,
        quasi,
        proper,
        pseudo,
        witness,
    })
}

fn pair_violation(
    pts: &[Point],
    vals: &[Vec<Point>],
    premise: impl Fn(f64) -> bool,
    eps: f64,
    class: MonotonicityClass,
) -> Option<MonotonicityWitness> {
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = sub(y, x);
            let Some(xs) = vals[i].iter().find(|xs| premise(dot(xs, &d))) else {
                continue;
            };
            if let Some(ys) = vals[j].iter().find(|ys| dot(ys, &d) < -eps) {
                return Some(MonotonicityWitness {
                    violates: class,
                    points: vec![x.clone(), y.clone()],
                    duals: vec![xs.clone(), ys.clone()],
                    combination: None,
                });
            }
        }
    }
    None
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn proper_violation(
    t: &DualMap,
    pts: &[Point],
    vals: &[Vec<Point>],
    eps: f64,
) -> Option<MonotonicityWitness> {
    let n = t.dim();
    let npts = pts.len();
    for size in 2..=(n + 1).min(npts) {
        let denom = size + 2;
        let weights = compositions(denom, size);
        // Thin the index set so the number of tuples stays bounded.
        let mut stride = 1usize;
        while binomial(npts.div_ceil(stride), size) > MAX_TUPLES_PER_SIZE {
            stride += 1;
        }
        let idx: Vec<usize> = (0..npts).step_by(stride).collect();
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let tuple: Vec<usize> = combo.iter().map(|&k| idx[k]).collect();
            for w in &weights {
                let mut x = vec![0.0; n];
                for (&ti, &wi) in tuple.iter().zip(w) {
                    for d in 0..n {
                        x[d] += wi as f64 / denom as f64 * pts[ti][d];
                    }
                }
                let mut duals = Vec::with_capacity(size);
                let mut all_fail = true;
                for &ti in &tuple {
                    let dir = sub(&pts[ti], &x);
                    match vals[ti].iter().find(|v| dot(v, &dir) < -eps) {
                        Some(v) => duals.push(v.clone()),
                        None => {
                            all_fail = false;
                            break;
                        }
                    }
                }
                if all_fail {
                    return Some(MonotonicityWitness {
                        violates: MonotonicityClass::ProperlyQuasimonotone,
                        points: tuple.iter().map(|&k| pts[k].clone()).collect(),
                        duals,
                        combination: Some(x),
                    });
                }
            }
            if !next_combination(&mut combo, idx.len()) {
                break;
            }
        }
    }
    None
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(usize::MAX as u128) as usize
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Re-evaluates a witness against `T`; true when the violation is reproduced.
pub fn recheck_witness(t: &DualMap, w: &MonotonicityWitness, eps: f64) -> bool {
    let member = |x: &[f64], v: &[f64]| {
        t.values(x)
            .iter()
            .any(|u| crate::geometry::dist(u, v) <= 1e-12)
    };
    match w.violates {
        MonotonicityClass::ProperlyQuasimonotone => {
            let Some(x) = &w.combination else {
                return false;
            };
            w.points
                .iter()
                .zip(&w.duals)
                .all(|(p, v)| member(p, v) && dot(v, &sub(p, x)) < -eps)
        }
        MonotonicityClass::Quasimonotone | MonotonicityClass::Pseudomonotone => {
            if w.points.len() != 2 || w.duals.len() != 2 {
                return false;
            }
            let (x, y) = (&w.points[0], &w.points[1]);
            let d = sub(y, x);
            let premise = dot(&w.duals[0], &d);
            let premise_ok = if w.violates == MonotonicityClass::Quasimonotone {
                premise > eps
            } else {
                premise >= 0.0
            };
            premise_ok
                && member(x, &w.duals[0])
                && member(y, &w.duals[1])
                && dot(&w.duals[1], &d) < -eps
        }
        MonotonicityClass::None => false,
    }
}

/// Upper sign-continuity along `[x, y]`:
/// `inf_{T(x_t)} ⟨·, y−x⟩ ≥ 0 ∀t ⟹ sup_{T(x)} ⟨·, y−x⟩ ≥ 0`, with `−ε` slack.
///
/// When `T` carries a submap `Φ_x` the check runs on the submap (the local
/// submap sense); otherwise on `T` itself. A failing antecedent returns true.
pub fn check_upper_sign_continuity(
    t: &DualMap,
    c: &Region,
    x: &[f64],
    y: &[f64],
    t_grid: &[f64],
    eps: f64,
) -> Result<bool> {
    for (name, p) in [("x", x), ("y", y)] {
        if !c.contains(p, crate::geometry::EPS_MEM)? {
            return Err(Error::InvalidInput(format!(
                "{name} is not in the constraint set"
            )));
        }
    }
    for &s in t_grid {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidInput(format!(
                "segment parameter {s} outside ]0,1["
            )));
        }
        if !c.contains(&lerp(x, y, s), crate::geometry::EPS_MEM)? {
            return Err(Error::SegmentLeavesSet { t: s });
        }
    }
    let image = |p: &[f64]| -> Vec<Point> {
        match t.submap_values(x, p) {
            Some(v) => v,
            None => t.values(p),
        }
    };
    let d = sub(y, x);
    for &s in t_grid {
        let inf = image(&lerp(x, y, s))
            .iter()
            .map(|v| dot(v, &d))
            .fold(f64::INFINITY, f64::min);
        if inf < -eps {
            return Ok(true);
        }
    }
    let sup = image(x)
        .iter()
        .map(|v| dot(v, &d))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(sup >= -eps)
}

/// Largest dual norm over the given points, used to scale tolerances.
pub fn max_dual_norm(t: &DualMap, pts: &[Point]) -> f64 {
    pts.iter()
        .flat_map(|p| t.values(p))
        .map(|v| norm(&v))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPiece;

    fn mixed() -> Region {
        Region::new(
            vec![ConvexPiece::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()],
            vec![0],
        )
        .unwrap()
    }

    #[test]
    fn constant_map_is_pseudomonotone() {
        let t = DualMap::constant(vec![1.0, 1.0]);
        let r = classify_monotonicity(&t, &mixed(), 0.25, 1e-9).unwrap();
        assert_eq!(r.class, MonotonicityClass::Pseudomonotone);
        assert!(r.quasi && r.proper && r.pseudo);
    }

    #[test]
    fn reversed_identity_has_no_class() {
        let t = DualMap::single_valued(1, "-x", |x| vec![-x[0]]);
        let c = Region::interval(-1.0, 1.0).unwrap();
        let r = classify_monotonicity(&t, &c, 0.25, 1e-9).unwrap();
        assert_eq!(r.class, MonotonicityClass::None);
        let w = r.witness.expect("witness");
        assert!(recheck_witness(&t, &w, 1e-9));
    }

    #[test]
    fn eval_reports_vanishing() {
        let t = DualMap::constant(vec![0.0]).without_zero();
        assert!(matches!(t.eval(&[0.3]), Err(Error::OperatorVanishes(_))));
    }

    fn jump_map(k: usize) -> DualMap {
        let neg: Vec<Point> = interval_samples(-1.0, 0.0, k)
            .into_iter()
            .map(|v| vec![v])
            .collect();
        let pos: Vec<Point> = interval_samples(0.0, 1.0, k)
            .into_iter()
            .map(|v| vec![v])
            .collect();
        DualMap::new(1, "jump", move |x| {
            if x[0] == 0.0 {
                neg.clone()
            } else {
                pos.clone()
            }
        })
    }

    #[test]
    fn sign_continuity_examples() {
        let c = Region::interval(0.0, 1.0).unwrap();
        let ts = interval_samples(0.1, 0.9, 9);
        let t = DualMap::constant(vec![1.0]);
        assert!(check_upper_sign_continuity(&t, &c, &[0.0], &[1.0], &ts, 1e-9).unwrap());
        let raw = jump_map(5);
        assert!(check_upper_sign_continuity(&raw, &c, &[0.0], &[1.0], &ts, 1e-9).unwrap());
        let sel = jump_map(5).with_submap(|_, y| {
            if y[0] == 0.0 {
                vec![vec![-0.5]]
            } else {
                vec![vec![0.5]]
            }
        });
        assert!(!check_upper_sign_continuity(&sel, &c, &[0.0], &[1.0], &ts, 1e-9).unwrap());
    }

    #[test]
    fn sign_continuity_rejects_nonconvex_segment() {
        let c = Region::intervals(&[(-2.0, -1.0), (1.0, 2.0)]).unwrap();
        let t = DualMap::constant(vec![1.0]);
        let r = check_upper_sign_continuity(&t, &c, &[-1.0], &[1.0], &[0.5], 1e-9);
        assert!(matches!(r, Err(Error::SegmentLeavesSet { .. })));
    }

    #[test]
    fn compositions_sum() {
        for w in compositions(5, 3) {
            assert_eq!(w.iter().sum::<usize>(), 5);
            assert!(w.iter().all(|&k| k >= 1));
        }
        assert_eq!(compositions(5, 3).len(), 6);
    }
}
