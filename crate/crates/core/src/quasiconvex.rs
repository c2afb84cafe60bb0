//! Sublevel machinery for quasiconvex functions: adjusted sublevel sets, the
//! adjusted normal operator, the normalized normal map `F_f`, and grid tests
//! for quasiconvexity, semistrictness and sub-boundary constancy.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{dist, dot, norm, scale, sub, ConvexPiece, Point, Region};
use crate::operators::{DualMap, EPS_ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Table {
    /// Rectilinear table; `values` in row-major order (last axis fastest).
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("table needs at least one axis".into()));
        }
        for a in &axes {
            if a.len() < 2 || a.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidInput(
                    "table axes must be strictly increasing with ≥ 2 nodes".into(),
                ));
            }
        }
        let count: usize = axes.iter().map(|a| a.len()).product();
        if count != values.len() {
            return Err(Error::InvalidInput(format!(
                "table expects {count} values, got {}",
                values.len()
            )));
        }
        Ok(Table { axes, values })
    }

    /// Builds a table from scattered rows `(x_1, …, x_n, value)` that cover a full rectilinear grid.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidInput("empty table".into()))?;
        let n = first
            .len()
            .checked_sub(1)
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput("table rows need coordinates and a value".into()))?;
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); n];
        for r in rows {
            if r.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    got: r.len(),
                });
            }
            for i in 0..n {
                axes[i].push(r[i]);
            }
        }
        for a in &mut axes {
            a.sort_by(f64::total_cmp);
            a.dedup();
        }
        let count: usize = axes.iter().map(|a| a.len()).product();
        let mut values = vec![f64::NAN; count];
        for r in rows {
            let mut idx = 0;
            for i in 0..n {
                let k = axes[i]
                    .binary_search_by(|v| v.total_cmp(&r[i]))
                    .expect("axis value present");
                idx = idx * axes[i].len() + k;
            }
            values[idx] = r[n];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(
                "table rows do not cover a full grid".into(),
            ));
        }
        Table::new(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Multilinear interpolation, clamped to the table's box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut lo_idx = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for i in 0..n {
            let a = &self.axes[i];
            let v = x[i].clamp(a[0], a[a.len() - 1]);
            let k = match a.binary_search_by(|p| p.total_cmp(&v)) {
                Ok(k) => k.min(a.len() - 2),
                Err(k) => k.saturating_sub(1).min(a.len() - 2),
            };
            lo_idx[i] = k;
            frac[i] = (v - a[k]) / (a[k + 1] - a[k]);
        }
        let mut total = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for i in 0..n {
                let up = corner >> i & 1 == 1;
                w *= if up { frac[i] } else { 1.0 - frac[i] };
                idx = idx * self.axes[i].len() + lo_idx[i] + up as usize;
            }
            if w != 0.0 {
                total += w * self.values[idx];
            }
        }
        total
    }

    /// Largest finite-difference slope along the axes, times `√n`.
    pub fn lipschitz(&self) -> f64 {
        let n = self.dim();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.axes[i + 1].len();
        }
        let mut best: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            for i in 0..n {
                let k = idx / strides[i] % self.axes[i].len();
                if k + 1 < self.axes[i].len() {
                    let w = self.values[idx + strides[i]];
                    best = best.max((w - v).abs() / (self.axes[i][k + 1] - self.axes[i][k]));
                }
            }
        }
        best * (n as f64).sqrt()
    }
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum FnKind {
    /// `c·x + d`
    Affine {
        c: Vec<f64>,
        d: f64,
    },
    /// `|a·x + b|`
    AbsAffine {
        a: Vec<f64>,
        b: f64,
    },
    /// Euclidean distance to a convex piece.
    DistToPiece(ConvexPiece),
    /// `max_i (c_i·x + d_i)`
    MaxAffine(Vec<(Vec<f64>, f64)>),
    Table(Table),
    /// Programmatic function with a declared Lipschitz constant.
    Custom {
        name: String,
        f: ScalarFn,
        lip: f64,
    },
}

#[derive(Clone)]
pub struct QuasiconvexFn {
    dim: usize,
    kind: FnKind,
}

impl fmt::Debug for QuasiconvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuasiconvexFn({})", self.describe())
    }
}

impl QuasiconvexFn {
    pub fn affine(c: Vec<f64>, d: f64) -> Self {
        QuasiconvexFn {
            dim: c.len(),
            kind: FnKind::Affine { c, d },
        }
    }

    pub fn abs_affine(a: Vec<f64>, b: f64) -> Self {
        QuasiconvexFn {
            dim: a.len(),
            kind: FnKind::AbsAffine { a, b },
        }
    }

    pub fn dist_to(piece: ConvexPiece) -> Self {
        QuasiconvexFn {
            dim: piece.dim(),
            kind: FnKind::DistToPiece(piece),
        }
    }

    pub fn max_affine(pieces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let dim = pieces
            .first()
            .map(|p| p.0.len())
            .ok_or_else(|| Error::InvalidInput("maxaff needs at least one piece".into()))?;
        if let Some(p) = pieces.iter().find(|p| p.0.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.0.len(),
            });
        }
        Ok(QuasiconvexFn {
            dim,
            kind: FnKind::MaxAffine(pieces),
        })
    }

    pub fn table(t: Table) -> Self {
        QuasiconvexFn {
            dim: t.dim(),
            kind: FnKind::Table(t),
        }
    }

    pub fn custom(
        dim: usize,
        name: impl Into<String>,
        lip: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        QuasiconvexFn {
            dim,
            kind: FnKind::Custom {
                name: name.into(),
                f: Arc::new(f),
                lip,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FnKind {
        &self.kind
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FnKind::Affine { c, d } => format!("affine({c:?}, {d})"),
            FnKind::AbsAffine { a, b } => format!("absaff({a:?}, {b})"),
            FnKind::DistToPiece(p) => format!("dist(piece {:?}..{:?})", p.lo(), p.hi()),
            FnKind::MaxAffine(ps) => format!("maxaff({} pieces)", ps.len()),
            FnKind::Table(t) => format!("table({}-d)", t.dim()),
            FnKind::Custom { name, .. } => name.clone(),
        }
    }

    /// Catalog kinds other than tables and custom functions are convex, hence
    /// quasiconvex, semistrict and sub-boundarily constant.
    pub fn is_structurally_convex(&self) -> bool {
        !matches!(self.kind, FnKind::Table(_) | FnKind::Custom { .. })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FnKind::Affine { c, d } => dot(c, x) + d,
            FnKind::AbsAffine { a, b } => (dot(a, x) + b).abs(),
            FnKind::DistToPiece(p) => p.distance(x),
            FnKind::MaxAffine(ps) => ps
                .iter()
                .map(|(c, d)| dot(c, x) + d)
                .fold(f64::NEG_INFINITY, f64::max),
            FnKind::Table(t) => t.eval(x),
            FnKind::Custom { f, .. } => f(x),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            FnKind::Affine { c, .. } => norm(c),
            FnKind::AbsAffine { a, .. } => norm(a),
            FnKind::DistToPiece(_) => 1.0,
            FnKind::MaxAffine(ps) => ps.iter().map(|(c, _)| norm(c)).fold(0.0, f64::max),
            FnKind::Table(t) => t.lipschitz(),
            FnKind::Custom { lip, .. } => *lip,
        }
    }

    /// A (sub)gradient: analytic for catalog kinds, central differences otherwise.
    pub fn gradient(&self, x: &[f64]) -> Point {
        match &self.kind {
            FnKind::Affine { c, .. } => c.clone(),
            FnKind::AbsAffine { a, b } => {
                let s = dot(a, x) + b;
                if s < 0.0 {
                    scale(a, -1.0)
                } else {
                    a.clone()
                }
            }
            FnKind::DistToPiece(p) => {
                let q = p.project(x);
                let d = dist(x, &q);
                if d == 0.0 {
                    vec![0.0; self.dim]
                } else {
                    scale(&sub(x, &q), 1.0 / d)
                }
            }
            FnKind::MaxAffine(ps) => {
                let v = self.eval(x);
                ps.iter()
                    .find(|(c, d)| dot(c, x) + d >= v - 1e-12)
                    .map(|p| p.0.clone())
                    .unwrap_or_else(|| vec![0.0; self.dim])
            }
            FnKind::Table(_) | FnKind::Custom { .. } => {
                let step = 1e-6;
                (0..self.dim)
                    .map(|i| {
                        let mut a = x.to_vec();
                        let mut b = x.to_vec();
                        a[i] += step;
                        b[i] -= step;
                        (self.eval(&a) - self.eval(&b)) / (2.0 * step)
                    })
                    .collect()
            }
        }
    }

    /// Unit candidates for the normal cone at `x`: the active analytic normals.
    pub fn normal_hints(&self, x: &[f64]) -> Vec<Point> {
        let unit = |v: &[f64]| {
            let n = norm(v);
            if n > 0.0 {
                Some(scale(v, 1.0 / n))
            } else {
                None
            }
        };
        match &self.kind {
            FnKind::Affine { c, .. } => unit(c).into_iter().collect(),
            FnKind::AbsAffine { a, b } => {
                let s = dot(a, x) + b;
                let u = unit(a);
                match u {
                    None => Vec::new(),
                    Some(u) if s.abs() <= 1e-12 => vec![scale(&u, -1.0), u],
                    Some(u) if s < 0.0 => vec![scale(&u, -1.0)],
                    Some(u) => vec![u],
                }
            }
            FnKind::MaxAffine(ps) => {
                let v = self.eval(x);
                ps.iter()
                    .filter(|(c, d)| dot(c, x) + d >= v - 1e-12)
                    .filter_map(|(c, _)| unit(c))
                    .collect()
            }
            _ => unit(&self.gradient(x)).into_iter().collect(),
        }
    }
}

/// Grid-detected argmin threshold: a detected argmin point is within
/// `2·Lip·h` of the infimum over the box.
pub fn argmin_threshold(f: &QuasiconvexFn, h: f64) -> f64 {
    2.0 * f.lipschitz() * h
}

fn level_tol(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

/// Uniform-cell bucket index for radius queries on a fixed point cloud.
struct SpatialHash {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl SpatialHash {
    fn new(points: &[Point], idx: impl Iterator<Item = usize>, cell: f64) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for i in idx {
            buckets
                .entry(Self::key(&points[i], cell))
                .or_default()
                .push(i);
        }
        SpatialHash { cell, buckets }
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|v| (v / cell).floor() as i64).collect()
    }

    /// Calls `f` on every indexed point within `r` of `p`; stops when `f` returns true.
    fn any_within(
        &self,
        points: &[Point],
        p: &[f64],
        r: f64,
        mut f: impl FnMut(usize) -> bool,
    ) -> bool {
        let span = (r / self.cell).ceil() as i64;
        let n = p.len();
        let cells = (2 * span + 1).checked_pow(n as u32).unwrap_or(i64::MAX);
        if cells as usize > self.buckets.len() * 4 {
            for ids in self.buckets.values() {
                for &i in ids {
                    if dist(&points[i], p) <= r && f(i) {
                        return true;
                    }
                }
            }
            return false;
        }
        let base = Self::key(p, self.cell);
        let mut off = vec![-span; n];
        loop {
            let k: Vec<i64> = base.iter().zip(&off).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.buckets.get(&k) {
                for &i in ids {
                    if dist(&points[i], p) <= r && f(i) {
                        return true;
                    }
                }
            }
            let mut d = 0;
            loop {
                if d == n {
                    return false;
                }
                off[d] += 1;
                if off[d] <= span {
                    break;
                }
                off[d] = -span;
                d += 1;
            }
        }
    }
}

/// `f` sampled on the grid of a working box; shared by every sublevel query.
pub struct LevelGrid {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjustedLevelData {
    pub x: Point,
    pub s_grid: Vec<Point>,
    pub s_strict_grid: Vec<Point>,
    /// `d(x, S_f^<(x))`; infinite when the strict sublevel grid is empty.
    pub rho: f64,
    pub s_adj_grid: Vec<Point>,
    pub argmin: bool,
}

struct LevelIndices {
    s: Vec<usize>,
    strict: Vec<usize>,
    rho: f64,
    adj: Vec<usize>,
}

impl LevelGrid {
    pub fn new(f: &QuasiconvexFn, bx: &Region, h: f64) -> Result<Self> {
        if f.dim() != bx.dim() {
            return Err(Error::DimensionMismatch {
                expected: bx.dim(),
                got: f.dim(),
            });
        }
        let points = bx.sample(h)?;
        let values = points.iter().map(|p| f.eval(p)).collect();
        Ok(LevelGrid { points, values, h })
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn indices(&self, x: &[f64], fx: f64) -> LevelIndices {
        let tol = level_tol(fx);
        let s: Vec<usize> = (0..self.points.len())
            .filter(|&i| self.values[i] <= fx + tol)
            .collect();
        let strict: Vec<usize> = (0..self.points.len())
            .filter(|&i| self.values[i] < fx - tol)
            .collect();
        if strict.is_empty() {
            return LevelIndices {
                adj: s.clone(),
                s,
                strict,
                rho: f64::INFINITY,
            };
        }
        let rho = strict
            .iter()
            .map(|&i| dist(&self.points[i], x))
            .fold(f64::INFINITY, f64::min);
        let reach = rho + 1e-9 * (1.0 + rho);
        let hash = SpatialHash::new(&self.points, strict.iter().copied(), self.h.max(reach));
        let adj = s
            .iter()
            .copied()
            .filter(|&i| hash.any_within(&self.points, &self.points[i], reach, |_| true))
            .collect();
        LevelIndices {
            s,
            strict,
            rho,
            adj,
        }
    }

    pub fn adjusted(&self, x: &[f64], fx: f64) -> AdjustedLevelData {
        let li = self.indices(x, fx);
        let pick = |ids: &[usize]| {
            ids.iter()
                .map(|&i| self.points[i].clone())
                .collect::<Vec<_>>()
        };
        AdjustedLevelData {
            x: x.to_vec(),
            s_grid: pick(&li.s),
            s_strict_grid: pick(&li.strict),
            rho: li.rho,
            s_adj_grid: pick(&li.adj),
            argmin: li.strict.is_empty(),
        }
    }

    /// Unit directions `u` with `max_{y ∈ S_adj} ⟨u, y − x⟩ ≤ tol`.
    fn normal_slice(&self, adj: &[usize], x: &[f64], candidates: &[Point]) -> Vec<Point> {
        let reach = adj
            .iter()
            .map(|&i| dist(&self.points[i], x))
            .fold(0.0, f64::max);
        let tol = 1e-9 * (1.0 + reach);
        let diffs: Vec<Point> = adj.iter().map(|&i| sub(&self.points[i], x)).collect();
        let mut out: Vec<Point> = Vec::new();
        for u in candidates {
            if diffs.iter().all(|d| dot(u, d) <= tol) && !out.iter().any(|v| dist(v, u) < 1e-9) {
                out.push(u.clone());
            }
        }
        out
    }
}

pub fn adjusted_sublevel(
    f: &QuasiconvexFn,
    x: &[f64],
    bx: &Region,
    h: f64,
) -> Result<AdjustedLevelData> {
    if !bx.contains(x, crate::geometry::EPS_MEM)? {
        return Err(Error::InvalidInput(
            "base point outside the working box".into(),
        ));
    }
    let lg = LevelGrid::new(f, bx, h)?;
    Ok(lg.adjusted(x, f.eval(x)))
}

/// Deterministic, roughly uniform unit directions in ℝⁿ.
pub fn unit_directions(n: usize, k: usize) -> Vec<Point> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..k.max(4))
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / k.max(4) as f64;
                vec![snap_unit(t.cos()), snap_unit(t.sin())]
            })
            .collect(),
        3 => {
            let k = k.max(6);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let mut out: Vec<Point> = (0..k)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / k as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * j as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect();
            for i in 0..3 {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; 3];
                    e[i] = s;
                    out.push(e);
                }
            }
            out
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    out.push(e);
                }
            }
            if n <= 6 {
                let c = 1.0 / (n as f64).sqrt();
                for mask in 0..(1usize << n) {
                    out.push(
                        (0..n)
                            .map(|i| if mask >> i & 1 == 1 { c } else { -c })
                            .collect(),
                    );
                }
            }
            out
        }
    }
}

fn snap_unit(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}

/// Default number of sampled directions per dimension.
pub fn default_directions(n: usize) -> usize {
    match n {
        1 => 2,
        2 => 64,
        3 => 256,
        _ => 2 * n + (1 << n.min(6)),
    }
}

/// Unit-sphere slice of `N_f^a(x)`, sampled on `k` directions plus the
/// analytic normals of `f` at `x`.
pub fn normal_adjusted(
    f: &QuasiconvexFn,
    x: &[f64],
    bx: &Region,
    h: f64,
    k: usize,
) -> Result<Vec<Point>> {
    if !bx.contains(x, crate::geometry::EPS_MEM)? {
        return Err(Error::InvalidInput(
            "base point outside the working box".into(),
        ));
    }
    let lg = LevelGrid::new(f, bx, h)?;
    let li = lg.indices(x, f.eval(x));
    let mut cands = unit_directions(f.dim(), k);
    cands.extend(f.normal_hints(x));
    Ok(lg.normal_slice(&li.adj, x, &cands))
}

/// Midpoints that densify a sampled unit slice towards its convex hull.
fn hull_midpoints(dirs: &[Point]) -> Vec<Point> {
    let n = dirs.first().map(|d| d.len()).unwrap_or(0);
    let mut out = Vec::new();
    match n {
        0 | 1 => {}
        2 => {
            let mut sorted: Vec<(f64, &Point)> =
                dirs.iter().map(|d| (d[1].atan2(d[0]), d)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let m = sorted.len();
            for i in 0..m {
                if m < 2 {
                    break;
                }
                let (a0, u) = sorted[i];
                let (mut a1, v) = sorted[(i + 1) % m];
                if i + 1 == m {
                    a1 += 2.0 * std::f64::consts::PI;
                }
                if a1 - a0 < std::f64::consts::PI - 1e-9 && a1 - a0 > 1e-12 {
                    out.push(scale(&crate::geometry::add(u, v), 0.5));
                }
            }
        }
        _ => {
            for (i, u) in dirs.iter().enumerate() {
                let nearest = dirs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .min_by(|a, b| dist(a.1, u).total_cmp(&dist(b.1, u)));
                if let Some((_, v)) = nearest {
                    out.push(scale(&crate::geometry::add(u, v), 0.5));
                }
            }
        }
    }
    out.into_iter().filter(|m| norm(m) >= EPS_ZERO).collect()
}

/// Side length of the grid used to validate table and custom functions.
fn check_step(bx: &Region, h: f64) -> f64 {
    let (lo, hi) = bx.bounding_box();
    let widest = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let per_axis = match bx.dim() {
        1 => 60.0,
        2 => 16.0,
        _ => 6.0,
    };
    h.max(widest / per_axis)
}

/// Bounding box of `c` padded by `4h`, so that box faces never act as
/// level-set boundaries for points of `c`.
pub fn ff_box(c: &Region, h: f64) -> Result<Region> {
    let (lo, hi) = c.bounding_box();
    let pad = 4.0 * h;
    Region::boxed(
        lo.iter().map(|v| v - pad).collect(),
        hi.iter().map(|v| v + pad).collect(),
    )
}

/// `F_f` as a sampled dual map on the working box.
///
/// At grid-detected minimizers the image is `N_f^a(x) ∩ 𝔹` sampled as
/// `{0} ∪ {u/2, u}`; elsewhere it is the unit slice of `N_f^a(x)` with hull
/// midpoints.
pub fn ff_map(f: &QuasiconvexFn, bx: &Region, h: f64, k: usize) -> Result<DualMap> {
    if !f.is_structurally_convex() {
        let hc = check_step(bx, h);
        let q = check_quasiconvex(f, bx, hc)?;
        if !q.holds {
            return Err(Error::NotQuasiconvex(format!(
                "{} fails quasiconvexity at {:?}",
                f.describe(),
                q.witness
            )));
        }
        let s = check_sub_boundarily_constant(f, bx, hc)?;
        if !s.holds {
            return Err(Error::NotQuasiconvex(format!(
                "{} is not sub-boundarily constant at {:?}",
                f.describe(),
                s.witness
            )));
        }
    }
    let lg = Arc::new(LevelGrid::new(f, bx, h)?);
    let base_dirs = unit_directions(f.dim(), k);
    let func = f.clone();
    let name = format!("Ff[{}]", f.describe());
    Ok(DualMap::new(f.dim(), name, move |x| {
        let li = lg.indices(x, func.eval(x));
        let mut cands = base_dirs.clone();
        cands.extend(func.normal_hints(x));
        let dirs = lg.normal_slice(&li.adj, x, &cands);
        if li.strict.is_empty() {
            let mut out = vec![vec![0.0; x.len()]];
            for u in &dirs {
                out.push(scale(u, 0.5));
                out.push(u.clone());
            }
            out
        } else {
            let mut out = hull_midpoints(&dirs);
            let mut all = dirs;
            all.append(&mut out);
            all
        }
    }))
}

/// `x ↦ {∇f(x)}`.
pub fn gradient_map(f: &QuasiconvexFn) -> DualMap {
    let g = f.clone();
    DualMap::single_valued(f.dim(), format!("grad[{}]", f.describe()), move |x| {
        g.gradient(x)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub holds: bool,
    /// Points of a violating configuration: `(y, z, m)` for quasiconvexity,
    /// `(y, x, p)` for the segment-based tests.
    pub witness: Option<Vec<Point>>,
}

const SEGMENT_FRACTIONS: [f64; 8] = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];

/// `f(m) ≤ max(f(y), f(z)) + ε` for grid pairs and points `m` at ¼, ½, ¾ of `[y, z]`.
/// The witness is the configuration with the largest excess.
pub fn check_quasiconvex(f: &QuasiconvexFn, bx: &Region, h: f64) -> Result<CheckOutcome> {
    let lg = LevelGrid::new(f, bx, h)?;
    let eps = 1e-9 * (1.0 + lg.values.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut worst = 0.0;
    let mut witness = None;
    for i in 0..lg.points.len() {
        for j in i + 1..lg.points.len() {
            let (y, z) = (&lg.points[i], &lg.points[j]);
            let top = lg.values[i].max(lg.values[j]);
            for t in [0.25, 0.5, 0.75] {
                let m = crate::geometry::lerp(y, z, t);
                let excess = f.eval(&m) - top;
                if excess > eps && excess > worst {
                    worst = excess;
                    witness = Some(vec![y.clone(), z.clone(), m]);
                }
            }
        }
    }
    Ok(CheckOutcome {
        holds: witness.is_none(),
        witness,
    })
}

/// `f(y) < f(x) ⟹ [y, x[ ⊂ S_f^<(x)`, tested at eight points of each segment.
pub fn check_semistrict(f: &QuasiconvexFn, bx: &Region, h: f64) -> Result<CheckOutcome> {
    let q = check_quasiconvex(f, bx, h)?;
    if !q.holds {
        return Ok(q);
    }
    let lg = LevelGrid::new(f, bx, h)?;
    for (i, x) in lg.points.iter().enumerate() {
        let fx = lg.values[i];
        let tol = level_tol(fx);
        for (j, y) in lg.points.iter().enumerate() {
            if !(lg.values[j] < fx - tol) {
                continue;
            }
            for &t in &SEGMENT_FRACTIONS {
                let p = crate::geometry::lerp(y, x, t);
                if !(f.eval(&p) < fx - tol) {
                    return Ok(CheckOutcome {
                        holds: false,
                        witness: Some(vec![y.clone(), x.clone(), p]),
                    });
                }
            }
        }
    }
    Ok(CheckOutcome {
        holds: true,
        witness: None,
    })
}

/// `f(y) < f(x) ⟹ [y, x[ ∩ int S_f^a(x) ≠ ∅`, where a segment point counts
/// as interior when its nearest grid point and that point's in-box grid
/// neighbours all lie in the adjusted sublevel grid. Pairs whose level gap is
/// below `2·Lip·h` are skipped since the grid cannot resolve their interior.
pub fn check_sub_boundarily_constant(
    f: &QuasiconvexFn,
    bx: &Region,
    h: f64,
) -> Result<CheckOutcome> {
    let lg = LevelGrid::new(f, bx, h)?;
    let delta = h * (1.0 + 1e-6);
    let resolvable = argmin_threshold(f, h);
    let all = SpatialHash::new(&lg.points, 0..lg.points.len(), h);
    for (i, x) in lg.points.iter().enumerate() {
        let fx = lg.values[i];
        let tol = level_tol(fx);
        let li = lg.indices(x, fx);
        if li.strict.is_empty() {
            continue;
        }
        let mut in_adj = vec![false; lg.points.len()];
        for &k in &li.adj {
            in_adj[k] = true;
        }
        for &j in &li.strict {
            let y = &lg.points[j];
            debug_assert!(lg.values[j] < fx - tol);
            if lg.values[j] > fx - resolvable {
                continue;
            }
            let found = SEGMENT_FRACTIONS.iter().any(|&t| {
                let p = crate::geometry::lerp(y, x, t);
                let mut q = None;
                let mut best = f64::INFINITY;
                all.any_within(&lg.points, &p, h * (p.len() as f64).sqrt(), |k| {
                    let d = dist(&lg.points[k], &p);
                    if d < best {
                        best = d;
                        q = Some(k);
                    }
                    false
                });
                match q {
                    Some(q) => {
                        in_adj[q]
                            && !all.any_within(&lg.points, &lg.points[q], delta, |k| !in_adj[k])
                    }
                    None => false,
                }
            });
            if !found {
                return Ok(CheckOutcome {
                    holds: false,
                    witness: Some(vec![y.clone(), x.clone()]),
                });
            }
        }
    }
    Ok(CheckOutcome {
        holds: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn absx() -> QuasiconvexFn {
        QuasiconvexFn::abs_affine(vec![1.0], 0.0)
    }

    fn sq_box(a: f64) -> Region {
        Region::boxed(vec![-a, -a], vec![a, a]).unwrap()
    }

    #[test]
    fn adjusted_sublevel_of_abs() {
        let bx = Region::interval(-2.0, 2.0).unwrap();
        let d = adjusted_sublevel(&absx(), &[1.0], &bx, 0.01).unwrap();
        assert!(!d.argmin);
        assert!(d.rho <= 0.011);
        assert_eq!(d.s_adj_grid.len(), d.s_grid.len());
        assert_eq!(d.s_grid.len(), 201);
        let c = QuasiconvexFn::affine(vec![0.0], 1.0);
        let d = adjusted_sublevel(&c, &[0.5], &bx, 0.1).unwrap();
        assert!(d.argmin);
        assert_eq!(d.s_adj_grid.len(), bx.sample(0.1).unwrap().len());
    }

    #[test]
    fn adjusted_sublevel_of_max_is_lower_left_quadrant() {
        let f =
            QuasiconvexFn::max_affine(vec![(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0)]).unwrap();
        let bx = sq_box(1.0);
        let d = adjusted_sublevel(&f, &[0.0, 0.0], &bx, 0.05).unwrap();
        let quadrant: Vec<Point> = bx
            .sample(0.05)
            .unwrap()
            .into_iter()
            .filter(|p| p[0] <= 1e-12 && p[1] <= 1e-12)
            .collect();
        assert_eq!(d.s_grid, quadrant);
        assert_eq!(d.s_adj_grid, quadrant);
    }

    #[test]
    fn normal_slices() {
        let bx = Region::interval(-2.0, 2.0).unwrap();
        assert_eq!(
            normal_adjusted(&absx(), &[1.0], &bx, 0.01, 2).unwrap(),
            vec![vec![1.0]]
        );
        assert_eq!(
            normal_adjusted(&absx(), &[0.0], &bx, 0.01, 2).unwrap(),
            vec![vec![-1.0], vec![1.0]]
        );
        let f = QuasiconvexFn::affine(vec![1.0, 2.0], 0.0);
        let n = normal_adjusted(&f, &[0.1, 0.2], &sq_box(1.0), 0.05, 64).unwrap();
        let c = 1.0 / 5f64.sqrt();
        assert_eq!(n.len(), 1);
        assert!(dist(&n[0], &[c, 2.0 * c]) < 1e-12);
    }

    #[test]
    fn ff_of_abs() {
        let bx = Region::interval(-2.0, 2.0).unwrap();
        let t = ff_map(&absx(), &bx, 0.05, 2).unwrap();
        assert_eq!(t.eval(&[1.0]).unwrap(), vec![vec![1.0]]);
        assert_eq!(t.eval(&[-1.0]).unwrap(), vec![vec![-1.0]]);
        let at0 = t.eval(&[0.0]).unwrap();
        assert!(at0.contains(&vec![0.0]));
        assert!(at0.iter().all(|v| v[0].abs() <= 1.0));
        assert!(at0.len() >= 3);
    }

    #[test]
    fn ff_of_affine_is_normalized_gradient() {
        let f = QuasiconvexFn::affine(vec![1.0, 1.0], 0.0);
        let t = ff_map(&f, &sq_box(2.0), 0.1, 64).unwrap();
        let c = 1.0 / 2f64.sqrt();
        for x in [[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]] {
            let v = t.eval(&x).unwrap();
            assert_eq!(v.len(), 1, "{x:?} {v:?}");
            assert!(dist(&v[0], &[c, c]) < 1e-12);
        }
    }

    #[test]
    fn constant_function_always_contains_zero() {
        let f = QuasiconvexFn::affine(vec![0.0, 0.0], 3.0);
        let t = ff_map(&f, &sq_box(1.0), 0.25, 16).unwrap();
        for p in sq_box(1.0).sample(0.25).unwrap() {
            assert!(t.eval(&p).unwrap().iter().any(|v| norm(v) == 0.0));
        }
    }

    #[test]
    fn quasiconvexity_checks() {
        let bx = Region::interval(-1.0, 1.0).unwrap();
        assert!(check_quasiconvex(&absx(), &bx, 0.1).unwrap().holds);
        let negsq = QuasiconvexFn::custom(1, "-x^2", 2.0, |x| -x[0] * x[0]);
        let out = check_quasiconvex(&negsq, &bx, 0.1).unwrap();
        assert!(!out.holds);
        assert_eq!(out.witness.unwrap(), vec![vec![-1.0], vec![1.0], vec![0.0]]);
        let minabs = QuasiconvexFn::custom(2, "min(|x|,|y|)", 1.0, |x| x[0].abs().min(x[1].abs()));
        assert!(
            !check_quasiconvex(&minabs, &sq_box(1.0), 0.25)
                .unwrap()
                .holds
        );
        assert!(matches!(
            ff_map(&negsq, &bx, 0.1, 2),
            Err(Error::NotQuasiconvex(_))
        ));
    }

    fn step() -> QuasiconvexFn {
        QuasiconvexFn::custom(1, "step", 1.0, |x| if x[0] <= 0.0 { 0.0 } else { 1.0 })
    }

    #[test]
    fn semistrict_checks() {
        let bx = Region::interval(-1.0, 1.0).unwrap();
        assert!(check_semistrict(&absx(), &bx, 0.1).unwrap().holds);
        assert!(
            check_semistrict(&QuasiconvexFn::affine(vec![2.0], 1.0), &bx, 0.1)
                .unwrap()
                .holds
        );
        let out = check_semistrict(&step(), &bx, 0.1).unwrap();
        assert!(!out.holds);
        let w = out.witness.unwrap();
        assert_eq!(step().eval(&w[2]), step().eval(&w[1]));
    }

    #[test]
    fn sub_boundary_checks() {
        let bx = Region::interval(-1.0, 1.0).unwrap();
        assert!(
            check_sub_boundarily_constant(&absx(), &bx, 0.05)
                .unwrap()
                .holds
        );
        let aff = QuasiconvexFn::affine(vec![1.0, -0.5], 0.0);
        let o = check_sub_boundarily_constant(&aff, &sq_box(1.0), 0.1).unwrap();
        assert!(o.holds, "{:?}", o.witness);
        // In one dimension the adjusted sublevel set of the step contains a
        // nondegenerate interval on every segment, so the property holds.
        assert!(
            check_sub_boundarily_constant(&step(), &bx, 0.05)
                .unwrap()
                .holds
        );
        // Zero at the origin, one on the segment ]0,1]×{0}, two elsewhere:
        // S^a at (1,0) is the segment itself, which has empty interior.
        let needle = QuasiconvexFn::custom(2, "needle", 1.0, |x| {
            if x[0].abs() < 1e-12 && x[1].abs() < 1e-12 {
                0.0
            } else if x[1].abs() < 1e-12 && x[0] > 0.0 && x[0] <= 1.0 + 1e-12 {
                1.0
            } else {
                2.0
            }
        });
        assert!(
            check_quasiconvex(&needle, &sq_box(1.0), 0.25)
                .unwrap()
                .holds
        );
        let out = check_sub_boundarily_constant(&needle, &sq_box(1.0), 0.25).unwrap();
        assert!(!out.holds);
        assert!(matches!(
            ff_map(&needle, &sq_box(1.0), 0.25, 16),
            Err(Error::NotQuasiconvex(_))
        ));
    }

    #[test]
    fn table_interpolates() {
        let t = Table::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![0.0, 1.0, 2.0, 3.0],
        )
        .unwrap();
        assert!((t.eval(&[0.5, 0.5]) - 1.5).abs() < 1e-12);
        assert!((t.eval(&[2.0, 0.0]) - 2.0).abs() < 1e-12);
        let rows = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0],
            vec![1.0, 1.0, 3.0],
        ];
        assert_eq!(Table::from_rows(&rows).unwrap(), t);
    }
}
