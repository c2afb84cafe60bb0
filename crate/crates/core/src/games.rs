//! Local generalized Nash equilibria through the Nikaido-Isoda gap function,
//! and optimistic single-leader games whose followers play such equilibria.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{dot, hausdorff, lex_cmp, Point, Region};
use crate::qvi::{certify_local_repro, fixed_points, ConstraintMap, MapKind, ReproCertificate};

pub type ThetaFn = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
pub type FollowerSetFn = Arc<dyn Fn(&[f64], &[f64]) -> Result<Region> + Send + Sync>;
pub type LeaderFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type CoefFn = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;

/// Membership tolerance for follower fixed points; grid equilibria must lie in `K(y, x)`.
pub const FP_TOL: f64 = 1e-9;

/// `θ_i(·, x) = c(x)·y_i` and `K_i(y_{−i}, x) = base + L̂ y_{−i} + Ľ x`.
#[derive(Clone)]
pub struct LinearTag {
    pub c: CoefFn,
    pub base: Region,
    pub l_hat: Vec<Vec<f64>>,
    pub l_check: Vec<Vec<f64>>,
}

impl LinearTag {
    /// `L_i(y, x) = L̂ y_{−i} + Ľ x`.
    pub fn shift(&self, y_minus: &[f64], x: &[f64]) -> Point {
        self.l_hat
            .iter()
            .zip(&self.l_check)
            .map(|(a, b)| dot(a, y_minus) + dot(b, x))
            .collect()
    }
}

#[derive(Clone)]
pub struct Follower {
    pub name: String,
    pub dim: usize,
    theta: ThetaFn,
    k: FollowerSetFn,
    linear: Option<LinearTag>,
}

impl fmt::Debug for Follower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Follower({}, dim {}, linear {})",
            self.name,
            self.dim,
            self.linear.is_some()
        )
    }
}

impl Follower {
    /// `theta(y_i, y_{−i}, x)` and `k(y_{−i}, x)`.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        theta: impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
        k: impl Fn(&[f64], &[f64]) -> Result<Region> + Send + Sync + 'static,
    ) -> Self {
        Follower {
            name: name.into(),
            dim,
            theta: Arc::new(theta),
            k: Arc::new(k),
            linear: None,
        }
    }

    /// Linear objective `c(x)·y_i` over a translated fixed set.
    pub fn linear(
        name: impl Into<String>,
        c: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
        base: Region,
        l_hat: Vec<Vec<f64>>,
        l_check: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = base.dim();
        if l_hat.len() != dim || l_check.len() != dim {
            return Err(Error::InvalidInput(format!(
                "translation matrices need {dim} rows"
            )));
        }
        let tag = LinearTag {
            c: Arc::new(c),
            base,
            l_hat,
            l_check,
        };
        let (t1, t2) = (tag.clone(), tag.clone());
        Ok(Follower {
            name: name.into(),
            dim,
            theta: Arc::new(move |yi, _, x| dot(&(t1.c)(x), yi)),
            k: Arc::new(move |ym, x| t2.base.translate(&t2.shift(ym, x))),
            linear: Some(tag),
        })
    }

    pub fn linear_tag(&self) -> Option<&LinearTag> {
        self.linear.as_ref()
    }
}

#[derive(Clone)]
pub struct GameSpec {
    followers: Vec<Follower>,
    offsets: Vec<usize>,
    leader: Option<LeaderFn>,
    c1: Region,
    c2: Region,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("followers", &self.followers)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .finish()
    }
}

impl GameSpec {
    pub fn new(followers: Vec<Follower>, c1: Region, c2: Region) -> Result<Self> {
        if followers.is_empty() {
            return Err(Error::InvalidInput(
                "a game needs at least one follower".into(),
            ));
        }
        let mut offsets = vec![0];
        for f in &followers {
            offsets.push(offsets.last().unwrap() + f.dim);
        }
        let m = *offsets.last().unwrap();
        if m != c2.dim() {
            return Err(Error::DimensionMismatch {
                expected: c2.dim(),
                got: m,
            });
        }
        for f in &followers {
            if let Some(t) = &f.linear {
                if t.l_hat.iter().any(|r| r.len() != m - f.dim)
                    || t.l_check.iter().any(|r| r.len() != c1.dim())
                {
                    return Err(Error::InvalidInput(format!(
                        "translation matrices of {} have the wrong width",
                        f.name
                    )));
                }
            }
        }
        Ok(GameSpec {
            followers,
            offsets,
            leader: None,
            c1,
            c2,
        })
    }

    pub fn with_leader(
        mut self,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.leader = Some(Arc::new(f));
        self
    }

    pub fn followers(&self) -> &[Follower] {
        &self.followers
    }

    pub fn leader_set(&self) -> &Region {
        &self.c1
    }

    pub fn follower_box(&self) -> &Region {
        &self.c2
    }

    pub fn is_linear(&self) -> bool {
        self.followers.iter().all(|f| f.linear.is_some())
    }

    /// `(y_i, y_{−i})`.
    pub fn split(&self, y: &[f64], i: usize) -> (Point, Point) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        let mut rest = y[..a].to_vec();
        rest.extend_from_slice(&y[b..]);
        (y[a..b].to_vec(), rest)
    }

    fn check_dims(&self, y: &[f64], x: &[f64]) -> Result<()> {
        if y.len() != self.c2.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.c2.dim(),
                got: y.len(),
            });
        }
        if x.len() != self.c1.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.c1.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn theta(&self, i: usize, y_i: &[f64], y_minus: &[f64], x: &[f64]) -> f64 {
        (self.followers[i].theta)(y_i, y_minus, x)
    }

    pub fn follower_set(&self, i: usize, y: &[f64], x: &[f64]) -> Result<Region> {
        let (_, rest) = self.split(y, i);
        (self.followers[i].k)(&rest, x)
    }

    /// `K(y, x) = ∏ K_i(y_{−i}, x)`.
    pub fn joint_set(&self, y: &[f64], x: &[f64]) -> Result<Region> {
        self.check_dims(y, x)?;
        let mut out = self.follower_set(0, y, x)?;
        for i in 1..self.followers.len() {
            out = out.product(&self.follower_set(i, y, x)?);
        }
        Ok(out)
    }

    /// `y ↦ K(y, x)` for a fixed leader decision.
    pub fn product_map(&self, x: &[f64]) -> ConstraintMap {
        let g = self.clone();
        let x = x.to_vec();
        let kind = if self.is_linear() {
            MapKind::Analytic("linear translation product".into())
        } else {
            MapKind::Analytic("follower product".into())
        };
        ConstraintMap::new(self.c2.dim(), "K(·, x)", kind, move |y| g.joint_set(y, &x))
    }

    pub fn leader_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match &self.leader {
            Some(f) => Ok(f(x, y)),
            None => Err(Error::InvalidInput("game has no leader objective".into())),
        }
    }

    /// `Σ_i ‖c_i(x)‖₁` for linear games.
    pub fn linear_lipschitz(&self, x: &[f64]) -> Option<f64> {
        self.followers
            .iter()
            .map(|f| {
                f.linear
                    .as_ref()
                    .map(|t| (t.c)(x).iter().map(|v| v.abs()).sum::<f64>())
            })
            .sum()
    }
}

/// `Ψ(y, z, x) = Σ_i θ_i(y_i, y_{−i}, x) − θ_i(z_i, y_{−i}, x)`.
pub fn nikaido_isoda(g: &GameSpec, y: &[f64], z: &[f64], x: &[f64]) -> Result<f64> {
    g.check_dims(y, x)?;
    g.check_dims(z, x)?;
    let mut s = 0.0;
    for i in 0..g.followers.len() {
        let (yi, rest) = g.split(y, i);
        let (zi, _) = g.split(z, i);
        s += g.theta(i, &yi, &rest, x) - g.theta(i, &zi, &rest, x);
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapData {
    pub x: Point,
    pub y: Point,
    pub radius: f64,
    pub value: f64,
    pub argmax: Point,
}

/// Largest `Ψ(y, ·, x)` on `zs`, stopping early once it exceeds `stop_above`.
fn scan_gap<'a>(
    g: &GameSpec,
    y: &[f64],
    x: &[f64],
    zs: impl Iterator<Item = &'a Point>,
    stop_above: f64,
) -> Result<(f64, Point)> {
    let mut best = f64::NEG_INFINITY;
    let mut arg = y.to_vec();
    for z in zs {
        let v = nikaido_isoda(g, y, z, x)?;
        if v > best {
            best = v;
            arg = z.clone();
            if best > stop_above {
                break;
            }
        }
    }
    Ok((best, arg))
}

fn gap_candidates(g: &GameSpec, y: &[f64], x: &[f64], r: f64, h: f64) -> Result<Vec<Point>> {
    let k = g.joint_set(y, x)?;
    if !k.contains(y, FP_TOL)? {
        return Err(Error::NotFixedPoint(y.to_vec()));
    }
    let zs = k.sample_cube(h, y, r)?;
    if zs.is_empty() {
        return Err(Error::NotFixedPoint(y.to_vec()));
    }
    Ok(zs)
}

/// `V(y, x)`: the largest `Ψ(y, z, x)` over the grid of `K(y, x) ∩ B∞(y, r)`.
pub fn gap(g: &GameSpec, y: &[f64], x: &[f64], r: f64, h: f64) -> Result<GapData> {
    let zs = gap_candidates(g, y, x, r, h)?;
    let (value, argmax) = scan_gap(g, y, x, zs.iter(), f64::INFINITY)?;
    Ok(GapData {
        x: x.to_vec(),
        y: y.to_vec(),
        radius: r,
        value,
        argmax,
    })
}

/// Per-player test: each `θ_i(·, y_{−i}, x)` is within `ε` of its minimum on
/// the grid of `K_i(y_{−i}, x) ∩ B∞(y_i, r)`.
pub fn is_local_equilibrium(
    g: &GameSpec,
    y: &[f64],
    x: &[f64],
    r: f64,
    h: f64,
    eps: f64,
) -> Result<bool> {
    g.check_dims(y, x)?;
    for i in 0..g.followers.len() {
        let (yi, rest) = g.split(y, i);
        let ki = g.follower_set(i, y, x)?;
        let base = g.theta(i, &yi, &rest, x);
        for zi in ki.sample_cube(h, &yi, r)? {
            if base > g.theta(i, &zi, &rest, x) + eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Grid fixed points of `K(·, x)` in the follower box.
pub fn follower_fixed_points(g: &GameSpec, x: &[f64], h: f64) -> Result<Vec<Point>> {
    fixed_points(&g.product_map(x), &g.c2, h, FP_TOL)
}

/// Equilibria at leader decision `x`: fixed points with `V ≤ ε`, checked
/// against the per-player definition (tolerance `ε/M` each).
pub fn solve_lgnep(g: &GameSpec, x: &[f64], h: f64, r: f64, eps: f64) -> Result<Vec<GapData>> {
    if x.len() != g.c1.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.c1.dim(),
            got: x.len(),
        });
    }
    let per_player = eps / g.followers.len() as f64;
    let mut by_gap = Vec::new();
    let mut direct = Vec::new();
    // K(y, x) is often the same region for many y; its grid is reused.
    let mut cache: Option<(Region, Vec<Point>)> = None;
    for y in follower_fixed_points(g, x, h)? {
        let k = g.joint_set(&y, x)?;
        if cache.as_ref().is_none_or(|(c, _)| *c != k) {
            let pts = k.sample(h)?;
            cache = Some((k, pts));
        }
        let pts = &cache.as_ref().unwrap().1;
        let tol = r + 1e-9 * h;
        let zs = pts
            .iter()
            .filter(|z| z.iter().zip(&y).all(|(a, b)| (a - b).abs() <= tol));
        let (value, argmax) = scan_gap(g, &y, x, zs, eps)?;
        if value <= eps {
            by_gap.push(GapData {
                x: x.to_vec(),
                y: y.clone(),
                radius: r,
                value,
                argmax,
            });
        }
        if is_local_equilibrium(g, &y, x, r, h, per_player)? {
            direct.push(y);
        }
    }
    let gap_pts: Vec<Point> = by_gap.iter().map(|d| d.y.clone()).collect();
    if gap_pts.len() != direct.len() || (!gap_pts.is_empty() && hausdorff(&gap_pts, &direct) > h) {
        return Err(Error::NiMismatch(format!(
            "at x = {x:?}: gap route found {} equilibria, per-player route {}",
            gap_pts.len(),
            direct.len()
        )));
    }
    Ok(by_gap)
}

/// Reproducibility certificates of `K(·, x)` at each follower fixed point, searched from `4r`.
pub fn certify_followers(g: &GameSpec, x: &[f64], h: f64, r: f64) -> Result<Vec<ReproCertificate>> {
    let k = g.product_map(x);
    follower_fixed_points(g, x, h)?
        .iter()
        .map(|y| certify_local_repro(&k, y, 4.0 * r, h, 2.0 * h))
        .collect()
}

/// Uniform translate `ζ*` with `z*(y, x) = ζ* + L(y, x)` for linear games.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearClosedForm {
    pub zeta: Point,
}

impl LinearClosedForm {
    /// `ζ* = z*(y, x) − L(y, x)` at a reference fixed point.
    pub fn from_reference(g: &GameSpec, y: &[f64], x: &[f64], r: f64, h: f64) -> Result<Self> {
        if !g.is_linear() {
            return Err(Error::InvalidInput(
                "closed-form gap needs every follower linear".into(),
            ));
        }
        let d = gap(g, y, x, r, h)?;
        let mut zeta = Vec::with_capacity(y.len());
        for i in 0..g.followers.len() {
            let tag = g.followers[i].linear.as_ref().unwrap();
            let (zi, _) = g.split(&d.argmax, i);
            let (_, rest) = g.split(y, i);
            zeta.extend(zi.iter().zip(tag.shift(&rest, x)).map(|(a, b)| a - b));
        }
        Ok(LinearClosedForm { zeta })
    }

    /// `V(y, x) = Σ_i c_i(x)·(y_i − ζ*_i − L_i(y, x))`.
    pub fn value(&self, g: &GameSpec, y: &[f64], x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, f) in g.followers.iter().enumerate() {
            let tag = f.linear.as_ref().expect("linear game");
            let (yi, rest) = g.split(y, i);
            let (zi, _) = g.split(&self.zeta, i);
            let shift = tag.shift(&rest, x);
            let c = (tag.c)(x);
            s += (0..yi.len())
                .map(|k| c[k] * (yi[k] - zi[k] - shift[k]))
                .sum::<f64>();
        }
        s
    }
}

/// One closed-form versus grid comparison of the gap.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormProbe {
    pub x: Point,
    pub y: Point,
    pub grid: f64,
    pub closed: f64,
}

/// `count` seeded probes: a leader grid point, then one of its follower
/// fixed points, both drawn uniformly.
pub fn closed_form_probes(
    g: &GameSpec,
    cf: &LinearClosedForm,
    count: usize,
    seed: u64,
    h_x: f64,
    h_y: f64,
    r: f64,
) -> Result<Vec<ClosedFormProbe>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaders = g.c1.sample(h_x)?;
    let mut fps_by_leader: Vec<Option<Vec<Point>>> = vec![None; leaders.len()];
    let mut out = Vec::with_capacity(count);
    let mut misses = 0;
    while out.len() < count {
        let i = rng.gen_range(0..leaders.len());
        if fps_by_leader[i].is_none() {
            fps_by_leader[i] = Some(follower_fixed_points(g, &leaders[i], h_y)?);
        }
        let fps = fps_by_leader[i].as_ref().unwrap();
        if fps.is_empty() {
            misses += 1;
            if misses > 10 * count.max(1) {
                return Err(Error::NoFollowerEquilibria);
            }
            continue;
        }
        let y = fps[rng.gen_range(0..fps.len())].clone();
        let x = leaders[i].clone();
        let grid = gap(g, &y, &x, r, h_y)?.value;
        out.push(ClosedFormProbe {
            closed: cf.value(g, &y, &x),
            x,
            y,
            grid,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SllmfSolution {
    pub x: Point,
    pub y: Point,
    pub value: f64,
    /// Leader grid points with at least one follower equilibrium.
    pub feasible_leaders: usize,
    pub leader_grid: usize,
    /// Largest closed-form versus grid gap deviation seen (linear games only).
    pub closed_form_deviation: Option<f64>,
}

/// Optimistic leader solve: exhaustive grid over `C₁` (dimension at most 2),
/// inner minimum of `F(x, ·)` over the equilibria, lexicographic tie-break.
/// For linear games the closed-form gap is checked at every equilibrium and
/// at the extreme fixed points, within `ε + Lip·h`.
pub fn solve_sllmf(g: &GameSpec, h_x: f64, h_y: f64, r: f64, eps: f64) -> Result<SllmfSolution> {
    if g.c1.dim() > 2 {
        return Err(Error::InvalidInput(format!(
            "leader dimension {} exceeds the grid solver's limit of 2",
            g.c1.dim()
        )));
    }
    let leaders = g.c1.sample(h_x)?;
    let mut best: Option<(Point, Point, f64)> = None;
    let mut feasible = 0;
    let mut closed: Option<LinearClosedForm> = None;
    let mut deviation: Option<f64> = None;
    for x in &leaders {
        let eqs = solve_lgnep(g, x, h_y, r, eps)?;
        if eqs.is_empty() {
            continue;
        }
        feasible += 1;
        if g.is_linear() {
            if closed.is_none() {
                closed = Some(LinearClosedForm::from_reference(g, &eqs[0].y, x, r, h_y)?);
            }
            let cf = closed.as_ref().unwrap();
            let tol = eps + g.linear_lipschitz(x).unwrap_or(0.0) * h_y;
            let fps = follower_fixed_points(g, x, h_y)?;
            let mut probes: Vec<Point> = eqs.iter().map(|d| d.y.clone()).collect();
            probes.extend(fps.first().cloned());
            probes.extend(fps.last().cloned());
            for y in probes {
                let dev = (cf.value(g, &y, x) - gap(g, &y, x, r, h_y)?.value).abs();
                deviation = Some(deviation.unwrap_or(0.0).max(dev));
                if dev > tol {
                    return Err(Error::ReformulationMismatch(format!(
                        "closed-form gap differs from the grid gap by {dev:.3e} at x = {x:?}, y = {y:?}"
                    )));
                }
            }
        }
        for d in &eqs {
            let v = g.leader_value(x, &d.y)?;
            let better = match &best {
                None => true,
                Some((bx, by, bv)) => {
                    let tol = 1e-9 * (1.0 + bv.abs());
                    v < bv - tol
                        || (v <= bv + tol && lex_cmp(x, bx).then_with(|| lex_cmp(&d.y, by)).is_lt())
                }
            };
            if better {
                best = Some((x.clone(), d.y.clone(), v));
            }
        }
    }
    let (x, y, value) = best.ok_or(Error::NoFollowerEquilibria)?;
    Ok(SllmfSolution {
        x,
        y,
        value,
        feasible_leaders: feasible,
        leader_grid: leaders.len(),
        closed_form_deviation: deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Region {
        Region::interval(0.0, 1.0).unwrap()
    }

    fn own(sign: f64) -> impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync {
        move |yi, _, _| sign * yi[0]
    }

    fn simple_game(s2: f64) -> GameSpec {
        let k = |_: &[f64], _: &[f64]| Region::interval(0.0, 1.0);
        GameSpec::new(
            vec![
                Follower::new("p1", 1, own(1.0), k),
                Follower::new("p2", 1, own(s2), k),
            ],
            unit(),
            Region::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
        )
        .unwrap()
    }

    fn translated_game() -> GameSpec {
        let mk = |n: &str| {
            Follower::linear(n, |_| vec![1.0], unit(), vec![vec![0.0]], vec![vec![0.5]]).unwrap()
        };
        GameSpec::new(
            vec![mk("p1"), mk("p2")],
            unit(),
            Region::boxed(vec![0.0, 0.0], vec![1.5, 1.5]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ni_values() {
        let g = simple_game(1.0);
        assert_eq!(
            nikaido_isoda(&g, &[1.0, 1.0], &[0.0, 0.0], &[0.0]).unwrap(),
            2.0
        );
        assert_eq!(
            nikaido_isoda(&g, &[0.3, 0.7], &[0.3, 0.7], &[0.0]).unwrap(),
            0.0
        );
        assert!(matches!(
            nikaido_isoda(&g, &[1.0], &[0.0, 0.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gap_examples() {
        let g = simple_game(1.0);
        let d = gap(&g, &[0.0, 0.0], &[0.0], 0.3, 0.1).unwrap();
        assert_eq!((d.value, d.argmax.clone()), (0.0, vec![0.0, 0.0]));
        let d = gap(&g, &[1.0, 1.0], &[0.0], 0.5, 0.1).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        assert!((d.argmax[0] - 0.5).abs() < 1e-12 && (d.argmax[1] - 0.5).abs() < 1e-12);
        let d = gap(&g, &[0.5, 0.5], &[0.0], 0.05, 0.1).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn lgnep_examples() {
        let eqs = solve_lgnep(&simple_game(1.0), &[0.0], 0.1, 0.3, 1e-7).unwrap();
        assert_eq!(
            eqs.iter().map(|d| d.y.clone()).collect::<Vec<_>>(),
            vec![vec![0.0, 0.0]]
        );
        let eqs = solve_lgnep(&simple_game(-1.0), &[0.0], 0.1, 0.3, 1e-7).unwrap();
        assert_eq!(
            eqs.iter().map(|d| d.y.clone()).collect::<Vec<_>>(),
            vec![vec![0.0, 1.0]]
        );
        let shared = |ym: &[f64], _: &[f64]| Region::interval(0.0, 1.0 - ym[0] / 2.0);
        let g = GameSpec::new(
            vec![
                Follower::new("p1", 1, own(1.0), shared),
                Follower::new("p2", 1, own(1.0), shared),
            ],
            unit(),
            Region::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let eqs = solve_lgnep(&g, &[0.0], 0.05, 0.2, 1e-7).unwrap();
        assert_eq!(
            eqs.iter().map(|d| d.y.clone()).collect::<Vec<_>>(),
            vec![vec![0.0, 0.0]]
        );
    }

    #[test]
    fn leader_examples() {
        let g = simple_game(1.0).with_leader(|x, y| y[0] * y[0] + y[1] * y[1] + x[0] * x[0]);
        let s = solve_sllmf(&g, 0.1, 0.1, 0.3, 1e-7).unwrap();
        assert_eq!((s.x, s.y, s.value), (vec![0.0], vec![0.0, 0.0], 0.0));

        let g = translated_game().with_leader(|x, y| y[0] + y[1] - x[0]);
        let s = solve_sllmf(&g, 0.05, 0.025, 1.5, 1e-7).unwrap();
        assert_eq!(s.x, vec![0.0]);
        assert!(s.value.abs() < 1e-9);
        assert!(s.closed_form_deviation.unwrap() < 1e-9);

        let g = translated_game().with_leader(|x, y| (x[0] - 0.4).powi(2) + y[0]);
        let s = solve_sllmf(&g, 0.05, 0.025, 1.5, 1e-7).unwrap();
        assert!((s.x[0] - 0.15).abs() < 1e-9, "{:?}", s.x);
        assert!((s.y[0] - 0.075).abs() < 1e-9 && (s.y[1] - 0.075).abs() < 1e-9);
    }

    #[test]
    fn empty_graph_errors() {
        let g = GameSpec::new(
            vec![Follower::new("p", 1, own(1.0), |_, _| {
                Region::interval(2.0, 3.0)
            })],
            unit(),
            unit(),
        )
        .unwrap()
        .with_leader(|_, y| y[0]);
        assert_eq!(
            solve_sllmf(&g, 0.5, 0.1, 0.3, 1e-7),
            Err(Error::NoFollowerEquilibria)
        );
    }
}
