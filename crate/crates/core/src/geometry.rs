//! Compact subsets of ℝⁿ given as finite unions of convex pieces, optionally
//! intersected with the integer lattice on some coordinates.
//!
//! Every piece is a bounding box cut by halfspaces and Euclidean balls. Grids
//! are anchored at the origin (`k·h` on continuous coordinates, integers on
//! lattice coordinates), so grids of different regions sampled with the same
//! step share their points. That alignment is what makes set comparisons
//! between `K(z)` and `K(z')` meaningful on a grid.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const EPS_MEM: f64 = 1e-9;
pub const EPS_LATTICE: f64 = 1e-6;

const PROJECTION_ITERS: usize = 200;
const MAX_GRID_POINTS: usize = 4_000_000;
const MAX_LATTICE_ASSIGNMENTS: usize = 4096;

pub type Point = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `a + t (b - a)`.
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Point {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Rounds away binary noise from `k·h` products so grid coordinates print cleanly.
pub fn snap(v: f64) -> f64 {
    let s = (v * 1e12).round() / 1e12;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

/// Integer key used to deduplicate points that agree to 1e-9.
pub fn point_key(p: &[f64]) -> Vec<i64> {
    p.iter().map(|v| (v * 1e9).round() as i64).collect()
}

/// Sorts lexicographically and removes points that agree to 1e-9.
pub fn dedup_points(points: Vec<Point>) -> Vec<Point> {
    let mut map: BTreeMap<Vec<i64>, Point> = BTreeMap::new();
    for p in points {
        map.entry(point_key(&p)).or_insert(p);
    }
    let mut out: Vec<Point> = map.into_values().collect();
    out.sort_by(|a, b| lex_cmp(a, b));
    out
}

/// Two-sided Hausdorff distance between finite point sets.
/// Both empty gives 0, exactly one empty gives infinity.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

pub fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter().map(|p| nearest_distance(p, b)).fold(0.0, f64::max)
}

pub fn nearest_distance(p: &[f64], set: &[Point]) -> f64 {
    set.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// `‖y_axes - center‖ ≤ radius`, restricted to the listed coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct BallConstraint {
    pub axes: Vec<usize>,
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceKind {
    Box,
    Polyhedral,
    Curved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPiece {
    lo: Vec<f64>,
    hi: Vec<f64>,
    halfspaces: Vec<Halfspace>,
    balls: Vec<BallConstraint>,
}

impl ConvexPiece {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidInput("box of dimension 0".into()));
        }
        check_dim(lo.len(), hi.len())?;
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite()) {
                return Err(Error::InvalidInput(format!("box bound {i} is not finite")));
            }
            if l > h {
                return Err(Error::InvalidInput(format!(
                    "box has lo > hi in coordinate {i}"
                )));
            }
        }
        Ok(ConvexPiece {
            lo,
            hi,
            halfspaces: Vec::new(),
            balls: Vec::new(),
        })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo], vec![hi])
    }

    /// `{y : A y ≤ b} ∩ [lo, hi]`.
    pub fn poly(a: Vec<Vec<f64>>, b: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let mut p = Self::boxed(lo, hi)?;
        check_dim(a.len(), b.len())?;
        for (row, bi) in a.into_iter().zip(b) {
            p = p.with_halfspace(row, bi)?;
        }
        Ok(p)
    }

    /// Closed Euclidean ball, bounded by its enclosing box.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidInput("negative ball radius".into()));
        }
        let lo = center.iter().map(|c| c - radius).collect();
        let hi = center.iter().map(|c| c + radius).collect();
        let axes = (0..center.len()).collect();
        Self::boxed(lo, hi)?.with_ball(axes, center, radius)
    }

    pub fn with_halfspace(mut self, a: Vec<f64>, b: f64) -> Result<Self> {
        check_dim(self.dim(), a.len())?;
        if norm(&a) == 0.0 {
            if b < 0.0 {
                return Err(Error::InvalidInput("infeasible zero halfspace".into()));
            }
            return Ok(self);
        }
        self.halfspaces.push(Halfspace { a, b });
        Ok(self)
    }

    pub fn with_ball(mut self, axes: Vec<usize>, center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(axes.len(), center.len())?;
        if axes.iter().any(|&i| i >= self.dim()) {
            return Err(Error::InvalidInput("ball axis out of range".into()));
        }
        for (&i, &c) in axes.iter().zip(&center) {
            self.lo[i] = self.lo[i].max(c - radius);
            self.hi[i] = self.hi[i].min(c + radius);
            if self.lo[i] > self.hi[i] + EPS_MEM {
                return Err(Error::InvalidInput("ball misses the bounding box".into()));
            }
            self.hi[i] = self.hi[i].max(self.lo[i]);
        }
        self.balls.push(BallConstraint {
            axes,
            center,
            radius,
        });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn balls(&self) -> &[BallConstraint] {
        &self.balls
    }

    pub fn kind(&self) -> PieceKind {
        if !self.balls.is_empty() {
            PieceKind::Curved
        } else if !self.halfspaces.is_empty() {
            PieceKind::Polyhedral
        } else {
            PieceKind::Box
        }
    }

    /// Diameter of the bounding box (exact for boxes, an upper bound otherwise).
    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    pub fn contains(&self, y: &[f64], eps: f64) -> bool {
        for i in 0..self.dim() {
            if y[i] < self.lo[i] - eps || y[i] > self.hi[i] + eps {
                return false;
            }
        }
        for hs in &self.halfspaces {
            if dot(&hs.a, y) - hs.b > eps * norm(&hs.a) {
                return false;
            }
        }
        for b in &self.balls {
            let d: f64 = b
                .axes
                .iter()
                .zip(&b.center)
                .map(|(&i, c)| (y[i] - c) * (y[i] - c))
                .sum::<f64>()
                .sqrt();
            if d > b.radius + eps {
                return false;
            }
        }
        true
    }

    /// Smallest constraint slack at `y`; `B(y, δ)` lies in the piece iff this is ≥ δ.
    pub fn interior_margin(&self, y: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.dim() {
            m = m.min(y[i] - self.lo[i]).min(self.hi[i] - y[i]);
        }
        for hs in &self.halfspaces {
            m = m.min((hs.b - dot(&hs.a, y)) / norm(&hs.a));
        }
        for b in &self.balls {
            let d: f64 = b
                .axes
                .iter()
                .zip(&b.center)
                .map(|(&i, c)| (y[i] - c) * (y[i] - c))
                .sum::<f64>()
                .sqrt();
            m = m.min(b.radius - d);
        }
        m
    }

    fn clamp(&self, y: &mut [f64]) {
        for i in 0..self.dim() {
            y[i] = y[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Euclidean projection. Boxes are clamped in closed form; otherwise
    /// Dykstra's alternating projections run over the box, the halfspaces and
    /// the balls, starting from the box clamp.
    pub fn project(&self, y: &[f64]) -> Point {
        let mut x = y.to_vec();
        if self.kind() == PieceKind::Box {
            self.clamp(&mut x);
            return x;
        }
        let n = self.dim();
        let sets = 1 + self.halfspaces.len() + self.balls.len();
        let mut incr = vec![vec![0.0; n]; sets];
        for _ in 0..PROJECTION_ITERS {
            let before = x.clone();
            for (k, inc) in incr.iter_mut().enumerate() {
                let mut z = add(&x, inc);
                if k == 0 {
                    self.clamp(&mut z);
                } else if k <= self.halfspaces.len() {
                    let hs = &self.halfspaces[k - 1];
                    let viol = dot(&hs.a, &z) - hs.b;
                    if viol > 0.0 {
                        let s = viol / dot(&hs.a, &hs.a);
                        for i in 0..n {
                            z[i] -= s * hs.a[i];
                        }
                    }
                } else {
                    let b = &self.balls[k - 1 - self.halfspaces.len()];
                    let d: f64 = b
                        .axes
                        .iter()
                        .zip(&b.center)
                        .map(|(&i, c)| (z[i] - c) * (z[i] - c))
                        .sum::<f64>()
                        .sqrt();
                    if d > b.radius {
                        for (&i, c) in b.axes.iter().zip(&b.center) {
                            z[i] = c + (z[i] - c) * b.radius / d;
                        }
                    }
                }
                let pre = add(&x, inc);
                *inc = sub(&pre, &z);
                x = z;
            }
            if dist(&before, &x) < 1e-15 {
                break;
            }
        }
        x
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        if self.contains(y, 0.0) {
            return 0.0;
        }
        dist(y, &self.project(y))
    }

    pub fn translate(&self, t: &[f64]) -> Self {
        ConvexPiece {
            lo: add(&self.lo, t),
            hi: add(&self.hi, t),
            halfspaces: self
                .halfspaces
                .iter()
                .map(|hs| Halfspace {
                    a: hs.a.clone(),
                    b: hs.b + dot(&hs.a, t),
                })
                .collect(),
            balls: self
                .balls
                .iter()
                .map(|b| BallConstraint {
                    axes: b.axes.clone(),
                    center: b
                        .axes
                        .iter()
                        .zip(&b.center)
                        .map(|(&i, c)| c + t[i])
                        .collect(),
                    radius: b.radius,
                })
                .collect(),
        }
    }

    /// Cartesian product with another piece (coordinates of `other` follow).
    pub fn product(&self, other: &ConvexPiece) -> Self {
        let n = self.dim();
        let m = other.dim();
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        let mut halfspaces: Vec<Halfspace> = self
            .halfspaces
            .iter()
            .map(|hs| {
                let mut a = hs.a.clone();
                a.extend(std::iter::repeat_n(0.0, m));
                Halfspace { a, b: hs.b }
            })
            .collect();
        halfspaces.extend(other.halfspaces.iter().map(|hs| {
            let mut a = vec![0.0; n];
            a.extend_from_slice(&hs.a);
            Halfspace { a, b: hs.b }
        }));
        let mut balls = self.balls.clone();
        balls.extend(other.balls.iter().map(|b| BallConstraint {
            axes: b.axes.iter().map(|i| i + n).collect(),
            center: b.center.clone(),
            radius: b.radius,
        }));
        ConvexPiece {
            lo,
            hi,
            halfspaces,
            balls,
        }
    }

    /// Restriction to the closed box `[lo, hi]`; `None` when they do not meet.
    pub fn clip(&self, lo: &[f64], hi: &[f64]) -> Option<Self> {
        let mut p = self.clone();
        for i in 0..self.dim() {
            p.lo[i] = p.lo[i].max(lo[i]);
            p.hi[i] = p.hi[i].min(hi[i]);
            if p.lo[i] > p.hi[i] + EPS_MEM {
                return None;
            }
            p.hi[i] = p.hi[i].max(p.lo[i]);
        }
        Some(p)
    }

    fn axis_values(&self, i: usize, h: f64, lattice: bool) -> Vec<f64> {
        let (lo, hi) = (self.lo[i], self.hi[i]);
        let tol = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
        if lattice {
            let a = (lo - EPS_LATTICE).ceil() as i64;
            let b = (hi + EPS_LATTICE).floor() as i64;
            return (a..=b).map(|k| k as f64).collect();
        }
        if hi - lo <= tol {
            return vec![snap(lo)];
        }
        let a = ((lo - tol) / h).ceil() as i64;
        let b = ((hi + tol) / h).floor() as i64;
        if a > b {
            return vec![snap(0.5 * (lo + hi))];
        }
        (a..=b).map(|k| snap(k as f64 * h)).collect()
    }

    fn sample(&self, h: f64, lattice_dims: &[usize]) -> Result<Vec<Point>> {
        let n = self.dim();
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| self.axis_values(i, h, lattice_dims.contains(&i)))
            .collect();
        if axes.iter().any(|a| a.is_empty()) {
            return Ok(Vec::new());
        }
        let total = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
        match total {
            Some(t) if t <= MAX_GRID_POINTS => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "grid step {h} produces too many points"
                )))
            }
        }
        let curved = self.kind() != PieceKind::Box;
        let mut out = Vec::new();
        for_each_product(&axes, |p| {
            if !curved || self.contains(p, EPS_MEM) {
                out.push(p.to_vec());
            }
        });
        if out.is_empty() && curved {
            let centre: Point = (0..n).map(|i| 0.5 * (self.lo[i] + self.hi[i])).collect();
            let mut p = self.project(&centre);
            for &i in lattice_dims {
                p[i] = p[i].round();
            }
            if self.contains(&p, 1e-7) {
                out.push(p.into_iter().map(snap).collect());
            }
        }
        Ok(out)
    }
}

/// Calls `f` on every point of the Cartesian product of `axes`, in
/// lexicographic order.
pub fn for_each_product(axes: &[Vec<f64>], mut f: impl FnMut(&[f64])) {
    if axes.iter().any(|a| a.is_empty()) {
        return;
    }
    let n = axes.len();
    let mut idx = vec![0usize; n];
    let mut p: Point = axes.iter().map(|a| a[0]).collect();
    loop {
        f(&p);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                p[k] = axes[k][idx[k]];
                break;
            }
            idx[k] = 0;
            p[k] = axes[k][0];
        }
    }
}

/// A compact region: a nonempty union of convex pieces, intersected with the
/// integer lattice on `lattice_dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pieces: Vec<ConvexPiece>,
    lattice_dims: Vec<usize>,
}

impl Region {
    pub fn new(pieces: Vec<ConvexPiece>, lattice_dims: Vec<usize>) -> Result<Self> {
        let first = pieces.first().ok_or(Error::EmptyUnion)?;
        let n = first.dim();
        for p in &pieces {
            check_dim(n, p.dim())?;
        }
        let mut lattice_dims = lattice_dims;
        lattice_dims.sort_unstable();
        lattice_dims.dedup();
        if let Some(&i) = lattice_dims.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidInput(format!(
                "lattice coordinate {i} out of range"
            )));
        }
        Ok(Region {
            pieces,
            lattice_dims,
        })
    }

    pub fn single(piece: ConvexPiece) -> Self {
        Region {
            pieces: vec![piece],
            lattice_dims: Vec::new(),
        }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Self::single(ConvexPiece::boxed(lo, hi)?))
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo], vec![hi])
    }

    pub fn intervals(bounds: &[(f64, f64)]) -> Result<Self> {
        let pieces = bounds
            .iter()
            .map(|&(a, b)| ConvexPiece::interval(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces, Vec::new())
    }

    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::boxed(p.clone(), p)
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn pieces(&self) -> &[ConvexPiece] {
        &self.pieces
    }

    pub fn lattice_dims(&self) -> &[usize] {
        &self.lattice_dims
    }

    /// Single piece and no lattice coordinates.
    pub fn is_convex_piece(&self) -> bool {
        self.pieces.len() == 1 && self.lattice_dims.is_empty()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let n = self.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in &self.pieces {
            for i in 0..n {
                lo[i] = lo[i].min(p.lo[i]);
                hi[i] = hi[i].max(p.hi[i]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(&lo, &hi)
    }

    fn snap_lattice(&self, y: &[f64]) -> Option<Point> {
        let mut p = y.to_vec();
        for &i in &self.lattice_dims {
            let r = y[i].round();
            if (y[i] - r).abs() > EPS_LATTICE {
                return None;
            }
            p[i] = r;
        }
        Some(p)
    }

    /// Membership within `eps` of the region (lattice coordinates snap within `EPS_LATTICE`).
    pub fn contains(&self, y: &[f64], eps: f64) -> Result<bool> {
        check_dim(self.dim(), y.len())?;
        if let Some(p) = self.snap_lattice(y) {
            if self.pieces.iter().any(|pc| pc.contains(&p, 0.0)) {
                return Ok(true);
            }
        }
        Ok(self.distance(y)? <= eps)
    }

    pub fn distance(&self, y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), y.len())?;
        let mut best = f64::INFINITY;
        for pc in &self.pieces {
            best = best.min(self.piece_distance(pc, y));
            if best == 0.0 {
                break;
            }
        }
        Ok(best)
    }

    fn piece_distance(&self, pc: &ConvexPiece, y: &[f64]) -> f64 {
        if self.lattice_dims.is_empty() {
            return pc.distance(y);
        }
        if pc.kind() == PieceKind::Box {
            let mut s = 0.0;
            for i in 0..pc.dim() {
                let target = if self.lattice_dims.contains(&i) {
                    let a = (pc.lo[i] - EPS_LATTICE).ceil();
                    let b = (pc.hi[i] + EPS_LATTICE).floor();
                    if a > b {
                        return f64::INFINITY;
                    }
                    y[i].round().clamp(a, b)
                } else {
                    y[i].clamp(pc.lo[i], pc.hi[i])
                };
                s += (y[i] - target) * (y[i] - target);
            }
            return s.sqrt();
        }
        // Enumerate integer assignments of the lattice coordinates and project the slice.
        let ranges: Vec<Vec<f64>> = self
            .lattice_dims
            .iter()
            .map(|&i| pc.axis_values(i, 1.0, true))
            .collect();
        if ranges.iter().any(|r| r.is_empty()) {
            return f64::INFINITY;
        }
        let count = ranges.iter().fold(1usize, |a, r| a.saturating_mul(r.len()));
        let ranges: Vec<Vec<f64>> = if count > MAX_LATTICE_ASSIGNMENTS {
            self.lattice_dims
                .iter()
                .zip(&ranges)
                .map(|(&i, r)| {
                    let c = y[i].round();
                    r.iter()
                        .copied()
                        .filter(|v| (v - c).abs() <= 1.0)
                        .collect::<Vec<_>>()
                })
                .collect()
        } else {
            ranges
        };
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; ranges.len()];
        'outer: loop {
            if ranges.iter().all(|r| !r.is_empty()) {
                let mut slice = pc.clone();
                for (k, &i) in self.lattice_dims.iter().enumerate() {
                    slice.lo[i] = ranges[k][idx[k]];
                    slice.hi[i] = ranges[k][idx[k]];
                }
                best = best.min(slice.distance(y));
            } else {
                break;
            }
            let mut k = ranges.len();
            while k > 0 {
                k -= 1;
                idx[k] += 1;
                if idx[k] < ranges[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        best
    }

    /// Deterministic lexicographic sample on the origin-anchored `h`-lattice.
    /// Never fails for small pieces; see [`grid`] for the checked variant.
    pub fn sample(&self, h: f64) -> Result<Vec<Point>> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid step must be positive, got {h}"
            )));
        }
        let mut all = Vec::new();
        for pc in &self.pieces {
            all.extend(pc.sample(h, &self.lattice_dims)?);
        }
        Ok(dedup_points(all))
    }

    /// Grid points within `r` (Euclidean) of `centre`.
    pub fn sample_ball(&self, h: f64, centre: &[f64], r: f64) -> Result<Vec<Point>> {
        check_dim(self.dim(), centre.len())?;
        let lo: Point = centre.iter().map(|c| c - r).collect();
        let hi: Point = centre.iter().map(|c| c + r).collect();
        let clipped: Vec<ConvexPiece> = self
            .pieces
            .iter()
            .filter_map(|p| p.clip(&lo, &hi))
            .collect();
        if clipped.is_empty() {
            return Ok(Vec::new());
        }
        let sub = Region {
            pieces: clipped,
            lattice_dims: self.lattice_dims.clone(),
        };
        let pts = sub.sample(h)?;
        Ok(pts
            .into_iter()
            .filter(|p| dist(p, centre) <= r + 1e-12)
            .collect())
    }

    /// Grid points within sup-norm distance `r` of `centre`.
    pub fn sample_cube(&self, h: f64, centre: &[f64], r: f64) -> Result<Vec<Point>> {
        check_dim(self.dim(), centre.len())?;
        let lo: Point = centre.iter().map(|c| c - r).collect();
        let hi: Point = centre.iter().map(|c| c + r).collect();
        let clipped: Vec<ConvexPiece> = self
            .pieces
            .iter()
            .filter_map(|p| p.clip(&lo, &hi))
            .collect();
        if clipped.is_empty() {
            return Ok(Vec::new());
        }
        Region {
            pieces: clipped,
            lattice_dims: self.lattice_dims.clone(),
        }
        .sample(h)
    }

    /// Nearest point of the closest piece (lattice coordinates are not rounded).
    pub fn project(&self, y: &[f64]) -> Result<Point> {
        check_dim(self.dim(), y.len())?;
        let best = self
            .pieces
            .iter()
            .map(|p| p.project(y))
            .min_by(|a, b| dist(a, y).total_cmp(&dist(b, y)))
            .expect("regions have at least one piece");
        Ok(best)
    }

    /// `R ∩ B̄(centre, r)`; `None` when no piece's bounding box meets the ball.
    pub fn intersect_ball(&self, centre: &[f64], r: f64) -> Result<Option<Region>> {
        check_dim(self.dim(), centre.len())?;
        let axes: Vec<usize> = (0..self.dim()).collect();
        let pieces: Vec<ConvexPiece> = self
            .pieces
            .iter()
            .filter_map(|p| p.clone().with_ball(axes.clone(), centre.to_vec(), r).ok())
            .collect();
        if pieces.is_empty() {
            return Ok(None);
        }
        Ok(Some(Region {
            pieces,
            lattice_dims: self.lattice_dims.clone(),
        }))
    }

    pub fn translate(&self, t: &[f64]) -> Result<Self> {
        check_dim(self.dim(), t.len())?;
        if !self.lattice_dims.is_empty() && self.lattice_dims.iter().any(|&i| t[i].fract() != 0.0) {
            return Err(Error::Unsupported(
                "non-integer translation of lattice coordinates".into(),
            ));
        }
        Ok(Region {
            pieces: self.pieces.iter().map(|p| p.translate(t)).collect(),
            lattice_dims: self.lattice_dims.clone(),
        })
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &Region) -> Region {
        let n = self.dim();
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for b in &other.pieces {
                pieces.push(a.product(b));
            }
        }
        let mut lattice_dims = self.lattice_dims.clone();
        lattice_dims.extend(other.lattice_dims.iter().map(|i| i + n));
        Region {
            pieces,
            lattice_dims,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSample {
    pub region: Region,
    pub h: f64,
    pub points: Vec<Point>,
}

pub fn contains(r: &Region, y: &[f64], eps: f64) -> Result<bool> {
    r.contains(y, eps)
}

pub fn distance(r: &Region, y: &[f64]) -> Result<f64> {
    r.distance(y)
}

/// Checked grid: refuses a step larger than every piece diameter.
pub fn grid(r: &Region, h: f64) -> Result<GridSample> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {h}"
        )));
    }
    let dmax = r.pieces.iter().map(|p| p.diameter()).fold(0.0, f64::max);
    if dmax > 0.0 && h > dmax {
        return Err(Error::GridTooCoarse { h });
    }
    Ok(GridSample {
        region: r.clone(),
        h,
        points: r.sample(h)?,
    })
}

/// `B(y, δ) ⊂ R` in the ambient space. Regions with lattice coordinates have
/// empty interior. A ball straddling several pieces is accepted when its
/// centre, axis points and diagonal points all belong to the union.
pub fn interior_contains(r: &Region, y: &[f64], delta: f64) -> Result<bool> {
    check_dim(r.dim(), y.len())?;
    if !r.lattice_dims.is_empty() {
        return Ok(false);
    }
    if r.pieces.iter().any(|p| p.interior_margin(y) >= delta) {
        return Ok(true);
    }
    if r.pieces.len() == 1 {
        return Ok(false);
    }
    let n = y.len();
    let mut probes = vec![y.to_vec()];
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = y.to_vec();
            p[i] += s * delta;
            probes.push(p);
        }
    }
    if n <= 4 {
        let c = delta / (n as f64).sqrt();
        for mask in 0..(1usize << n) {
            let p: Point = (0..n)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        y[i] + c
                    } else {
                        y[i] - c
                    }
                })
                .collect();
            probes.push(p);
        }
    }
    for p in &probes {
        if !r.pieces.iter().any(|pc| pc.contains(p, 0.0)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Finite Painlevé–Kuratowski inner-limit check: every grid point of `s` is
/// within `eps` of every set in the last quartile of `seq`.
pub fn pk_liminf_contains(seq: &[Region], s: &Region, h: f64, eps: f64) -> Result<bool> {
    if seq.len() < 2 {
        return Err(Error::InvalidInput(
            "set sequence needs at least two terms".into(),
        ));
    }
    for r in seq {
        check_dim(s.dim(), r.dim())?;
    }
    let tail = tail_start(seq.len());
    let pts = s.sample(h)?;
    for y in &pts {
        for r in &seq[tail..] {
            if r.distance(y)? > eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// First index of the last quartile (at least one element).
pub fn tail_start(len: usize) -> usize {
    len - (len / 4).max(1)
}
