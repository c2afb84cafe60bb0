//! Resolves parsed literals and names into solver objects.

use std::collections::HashMap;
use std::sync::Arc;

use super::parse::{Diagnostic, Entry, ProblemFile, Section, Value};
use crate::error::Error;
use crate::games::{Follower, GameSpec};
use crate::geometry::{dot, sub, ConvexPiece, Point, Region};
use crate::operators::{interval_samples, DualMap};
use crate::quasiconvex::{gradient_map, FnKind, QuasiconvexFn, Table};
use crate::quasiopt::ff_for;
use crate::qvi::ConstraintMap;
use crate::stability::{PerturbedFamily, TraceInput};
use crate::vi_solvers::DEFAULT_EPS;

type R<T> = std::result::Result<T, Diagnostic>;

/// Flag values that take precedence over `[meta]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub h: Option<f64>,
    pub r: Option<f64>,
    pub eps: Option<f64>,
}

pub const DEFAULT_H: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct Meta {
    pub dim: usize,
    pub bx: Region,
    pub h: f64,
    /// Defaults to `4h`.
    pub r: f64,
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub meta: Meta,
    pub set: Option<Region>,
    pub operator: Option<DualMap>,
    pub objective: Option<QuasiconvexFn>,
    pub map: Option<ConstraintMap>,
    pub family: Option<PerturbedFamily>,
    pub traces: Vec<(String, TraceInput)>,
    pub game: Option<GameSpec>,
    /// Leader grid step; defaults to `h`.
    pub h_x: f64,
}

#[derive(Clone, Copy)]
struct Ctx<'a> {
    line: usize,
    key: &'a str,
}

impl<'a> Ctx<'a> {
    fn of(e: &'a Entry) -> Self {
        Ctx {
            line: e.line,
            key: &e.key,
        }
    }

    fn err(&self, reason: impl Into<String>) -> Diagnostic {
        Diagnostic::new(self.line, self.key, reason)
    }

    fn lift<T>(&self, r: crate::Result<T>) -> R<T> {
        r.map_err(|e| self.err(e.to_string()))
    }
}

fn num(v: &Value, c: Ctx) -> R<f64> {
    match v {
        Value::Num(x) => Ok(*x),
        other => Err(c.err(format!("expected a number, found `{other}`"))),
    }
}

fn count(v: &Value, c: Ctx) -> R<usize> {
    let x = num(v, c)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(c.err(format!("expected a non-negative integer, found {x}")));
    }
    Ok(x as usize)
}

fn vector(v: &Value, c: Ctx) -> R<Point> {
    match v {
        Value::Num(x) => Ok(vec![*x]),
        Value::Tuple(vs) => vs.iter().map(|x| num(x, c)).collect(),
        other => Err(c.err(format!("expected a vector, found `{other}`"))),
    }
}

fn matrix(v: &Value, c: Ctx) -> R<Vec<Point>> {
    match v {
        Value::Tuple(rows) => rows.iter().map(|r| vector(r, c)).collect(),
        other => Err(c.err(format!("expected a matrix, found `{other}`"))),
    }
}

fn arity(name: &str, args: &[Value], n: usize, c: Ctx) -> R<()> {
    if args.len() != n {
        return Err(c.err(format!("{name} takes {n} argument(s), got {}", args.len())));
    }
    Ok(())
}

fn same_len(what: &str, a: usize, b: usize, c: Ctx) -> R<()> {
    if a != b {
        return Err(c.err(format!("{what}: expected dimension {a}, got {b}")));
    }
    Ok(())
}

fn mat_vec(a: &[Point], x: &[f64]) -> Point {
    a.iter().map(|row| dot(row, x)).collect()
}

/// `w·Qw + c·w + d` (or `c·w + d` without `Q`).
#[derive(Clone, Debug)]
struct Quadratic {
    q: Option<Vec<Point>>,
    c: Point,
    d: f64,
}

impl Quadratic {
    fn eval(&self, w: &[f64]) -> f64 {
        let quad = self.q.as_ref().map_or(0.0, |q| dot(w, &mat_vec(q, w)));
        quad + dot(&self.c, w) + self.d
    }
}

struct Resolver<'a> {
    named: HashMap<&'static str, HashMap<String, &'a Entry>>,
    regions: HashMap<String, Region>,
    functions: HashMap<String, QuasiconvexFn>,
    operators: HashMap<String, DualMap>,
    maps: HashMap<String, ConstraintMap>,
    stack: Vec<String>,
    meta: Option<Meta>,
}

impl<'a> Resolver<'a> {
    fn lookup(&mut self, section: &'static str, name: &str, c: Ctx) -> R<&'a Entry> {
        let e = self
            .named
            .get(section)
            .and_then(|m| m.get(name))
            .copied()
            .ok_or_else(|| {
                c.err(format!(
                    "unresolved reference `{name}` (no such entry in [{section}])"
                ))
            })?;
        let tag = format!("{section}.{name}");
        if self.stack.contains(&tag) {
            return Err(c.err(format!("circular reference through `{name}`")));
        }
        Ok(e)
    }

    fn meta(&self) -> &Meta {
        self.meta.as_ref().expect("meta resolved first")
    }

    fn region(&mut self, v: &Value, c: Ctx) -> R<Region> {
        match v {
            Value::Ident(name) => {
                if let Some(r) = self.regions.get(name) {
                    return Ok(r.clone());
                }
                let e = self.lookup("regions", name, c)?;
                self.stack.push(format!("regions.{name}"));
                let r = self.region(&e.value, Ctx::of(e));
                self.stack.pop();
                let r = r?;
                self.regions.insert(name.clone(), r.clone());
                Ok(r)
            }
            Value::Call(f, args) => match f.as_str() {
                "interval" => {
                    arity(f, args, 2, c)?;
                    c.lift(Region::interval(num(&args[0], c)?, num(&args[1], c)?))
                }
                "box" => {
                    arity(f, args, 2, c)?;
                    c.lift(Region::boxed(vector(&args[0], c)?, vector(&args[1], c)?))
                }
                "ball" => {
                    arity(f, args, 2, c)?;
                    c.lift(
                        ConvexPiece::ball(vector(&args[0], c)?, num(&args[1], c)?)
                            .map(Region::single),
                    )
                }
                "poly" => {
                    arity(f, args, 4, c)?;
                    let p = ConvexPiece::poly(
                        matrix(&args[0], c)?,
                        vector(&args[1], c)?,
                        vector(&args[2], c)?,
                        vector(&args[3], c)?,
                    );
                    c.lift(p.map(Region::single))
                }
                "point" => {
                    arity(f, args, 1, c)?;
                    c.lift(Region::point(vector(&args[0], c)?))
                }
                "union" => {
                    if args.is_empty() {
                        return Err(c.err(Error::EmptyUnion.to_string()));
                    }
                    let mut pieces = Vec::new();
                    let mut lattice = Vec::new();
                    let mut dim = None;
                    for a in args {
                        let r = self.region(a, c)?;
                        if let Some(d) = dim {
                            same_len("union member", d, r.dim(), c)?;
                        }
                        dim = Some(r.dim());
                        pieces.extend(r.pieces().iter().cloned());
                        for &l in r.lattice_dims() {
                            if !lattice.contains(&l) {
                                lattice.push(l);
                            }
                        }
                    }
                    lattice.sort_unstable();
                    c.lift(Region::new(pieces, lattice))
                }
                "lattice" => {
                    arity(f, args, 2, c)?;
                    let r = self.region(&args[0], c)?;
                    let dims = vector(&args[1], c)?;
                    let dims: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
                    c.lift(Region::new(r.pieces().to_vec(), dims))
                }
                "product" => {
                    if args.is_empty() {
                        return Err(c.err("product needs at least one factor"));
                    }
                    let mut out = self.region(&args[0], c)?;
                    for a in &args[1..] {
                        out = out.product(&self.region(a, c)?);
                    }
                    Ok(out)
                }
                "translate" => {
                    arity(f, args, 2, c)?;
                    let r = self.region(&args[0], c)?;
                    c.lift(r.translate(&vector(&args[1], c)?))
                }
                other => Err(c.err(format!("unknown region literal `{other}`"))),
            },
            other => Err(c.err(format!("expected a region, found `{other}`"))),
        }
    }

    fn affine_args(&mut self, f: &str, args: &[Value], c: Ctx) -> R<(Point, f64)> {
        arity(f, args, 2, c)?;
        Ok((vector(&args[0], c)?, num(&args[1], c)?))
    }

    fn function(&mut self, v: &Value, c: Ctx) -> R<QuasiconvexFn> {
        match v {
            Value::Ident(name) => {
                if let Some(f) = self.functions.get(name) {
                    return Ok(f.clone());
                }
                let e = self.lookup("functions", name, c)?;
                self.stack.push(format!("functions.{name}"));
                let f = self.function(&e.value, Ctx::of(e));
                self.stack.pop();
                let f = f?;
                self.functions.insert(name.clone(), f.clone());
                Ok(f)
            }
            Value::Call(f, args) => match f.as_str() {
                "affine" => {
                    let (cv, d) = self.affine_args(f, args, c)?;
                    Ok(QuasiconvexFn::affine(cv, d))
                }
                "abs" => {
                    let (a, b) = self.affine_args(f, args, c)?;
                    Ok(QuasiconvexFn::abs_affine(a, b))
                }
                "dist" => {
                    arity(f, args, 1, c)?;
                    let r = self.region(&args[0], c)?;
                    if r.pieces().len() != 1 || !r.lattice_dims().is_empty() {
                        return Err(c.err("dist needs a single convex piece"));
                    }
                    Ok(QuasiconvexFn::dist_to(r.pieces()[0].clone()))
                }
                "max" => {
                    let mut pieces = Vec::new();
                    for a in args {
                        match a {
                            Value::Call(g, inner) if g == "affine" => {
                                pieces.push(self.affine_args(g, inner, c)?)
                            }
                            other => {
                                return Err(
                                    c.err(format!("max takes affine(...) pieces, found `{other}`"))
                                )
                            }
                        }
                    }
                    c.lift(QuasiconvexFn::max_affine(pieces))
                }
                "table" => {
                    arity(f, args, 2, c)?;
                    c.lift(
                        Table::new(matrix(&args[0], c)?, vector(&args[1], c)?)
                            .map(QuasiconvexFn::table),
                    )
                }
                "step" => {
                    arity(f, args, 0, c)?;
                    Ok(QuasiconvexFn::custom(1, "step", 1.0, |x| {
                        if x[0] <= 0.0 {
                            0.0
                        } else {
                            1.0
                        }
                    }))
                }
                "needle" => {
                    arity(f, args, 0, c)?;
                    Ok(QuasiconvexFn::custom(2, "needle", 1.0, |x| {
                        if x[0] == 0.0 && x[1] == 0.0 {
                            0.0
                        } else if x[1] == 0.0 && x[0] > 0.0 && x[0] <= 1.0 {
                            1.0
                        } else {
                            2.0
                        }
                    }))
                }
                "negsq" => {
                    arity(f, args, 1, c)?;
                    let n = count(&args[0], c)?;
                    Ok(QuasiconvexFn::custom(n, "-|x|^2", 2.0, |x| -dot(x, x)))
                }
                "minabs" => {
                    arity(f, args, 0, c)?;
                    Ok(QuasiconvexFn::custom(2, "min(|x|,|y|)", 1.0, |x| {
                        x[0].abs().min(x[1].abs())
                    }))
                }
                other => Err(c.err(format!("unknown function literal `{other}`"))),
            },
            other => Err(c.err(format!("expected a function, found `{other}`"))),
        }
    }

    fn operator(&mut self, v: &Value, c: Ctx) -> R<DualMap> {
        match v {
            Value::Ident(name) => {
                if let Some(t) = self.operators.get(name) {
                    return Ok(t.clone());
                }
                let e = self.lookup("operators", name, c)?;
                self.stack.push(format!("operators.{name}"));
                let t = self.operator(&e.value, Ctx::of(e));
                self.stack.pop();
                let t = t?;
                self.operators.insert(name.clone(), t.clone());
                Ok(t)
            }
            Value::Call(f, args) => match f.as_str() {
                "constant" => {
                    arity(f, args, 1, c)?;
                    Ok(DualMap::constant(vector(&args[0], c)?))
                }
                "affine_map" => {
                    arity(f, args, 2, c)?;
                    let a = matrix(&args[0], c)?;
                    let b = vector(&args[1], c)?;
                    same_len("affine_map rows", b.len(), a.len(), c)?;
                    if let Some(row) = a.iter().find(|r| r.len() != b.len()) {
                        return Err(c.err(format!(
                            "affine_map needs a square matrix, found a row of length {}",
                            row.len()
                        )));
                    }
                    let n = b.len();
                    Ok(DualMap::single_valued(n, "affine_map", move |x| {
                        mat_vec(&a, x).iter().zip(&b).map(|(p, q)| p + q).collect()
                    }))
                }
                "gradient" => {
                    arity(f, args, 1, c)?;
                    Ok(gradient_map(&self.function(&args[0], c)?))
                }
                "ff" => {
                    arity(f, args, 1, c)?;
                    let g = self.function(&args[0], c)?;
                    let (bx, h) = (self.meta().bx.clone(), self.meta().h);
                    same_len("ff function", bx.dim(), g.dim(), c)?;
                    c.lift(ff_for(&g, &bx, h))
                }
                "nonzero" => {
                    arity(f, args, 1, c)?;
                    Ok(self.operator(&args[0], c)?.without_zero())
                }
                "jump" => {
                    arity(f, args, 1, c)?;
                    let k = count(&args[0], c)?;
                    let neg: Vec<Point> = interval_samples(-1.0, 0.0, k)
                        .into_iter()
                        .map(|v| vec![v])
                        .collect();
                    let pos: Vec<Point> = interval_samples(0.0, 1.0, k)
                        .into_iter()
                        .map(|v| vec![v])
                        .collect();
                    Ok(DualMap::new(1, "jump", move |x| {
                        if x[0] == 0.0 {
                            neg.clone()
                        } else {
                            pos.clone()
                        }
                    }))
                }
                other => Err(c.err(format!("unknown operator literal `{other}`"))),
            },
            other => Err(c.err(format!("expected an operator, found `{other}`"))),
        }
    }

    fn map(&mut self, v: &Value, c: Ctx) -> R<ConstraintMap> {
        match v {
            Value::Ident(name) => {
                if let Some(k) = self.maps.get(name) {
                    return Ok(k.clone());
                }
                let e = self.lookup("maps", name, c)?;
                self.stack.push(format!("maps.{name}"));
                let k = self.map(&e.value, Ctx::of(e));
                self.stack.pop();
                let k = k?;
                self.maps.insert(name.clone(), k.clone());
                Ok(k)
            }
            Value::Call(f, args) => match f.as_str() {
                "constant" => {
                    arity(f, args, 1, c)?;
                    Ok(ConstraintMap::constant(self.region(&args[0], c)?))
                }
                "circle" => {
                    arity(f, args, 0, c)?;
                    Ok(ConstraintMap::circle())
                }
                "step" => {
                    arity(f, args, 0, c)?;
                    Ok(ConstraintMap::step())
                }
                "separable" => {
                    arity(f, args, 2, c)?;
                    let g = self.function(&args[0], c)?;
                    let level = self.function(&args[1], c)?;
                    let bx = self.meta().bx.clone();
                    c.lift(ConstraintMap::separable(g, level, bx))
                }
                "translate" => {
                    arity(f, args, 2, c)?;
                    let base = self.region(&args[0], c)?;
                    c.lift(ConstraintMap::translation(base, matrix(&args[1], c)?))
                }
                other => Err(c.err(format!("unknown map literal `{other}`"))),
            },
            other => Err(c.err(format!("expected a constraint map, found `{other}`"))),
        }
    }

    fn quadratic(&mut self, v: &Value, n: usize, c: Ctx) -> R<Quadratic> {
        let q = match v {
            Value::Call(f, args) if f == "affine" => {
                let (cv, d) = self.affine_args(f, args, c)?;
                Quadratic { q: None, c: cv, d }
            }
            Value::Call(f, args) if f == "quadratic" => {
                arity(f, args, 3, c)?;
                let q = matrix(&args[0], c)?;
                same_len("quadratic matrix rows", n, q.len(), c)?;
                for row in &q {
                    same_len("quadratic matrix columns", n, row.len(), c)?;
                }
                Quadratic {
                    q: Some(q),
                    c: vector(&args[1], c)?,
                    d: num(&args[2], c)?,
                }
            }
            other => {
                return Err(c.err(format!(
                    "expected affine(...) or quadratic(...), found `{other}`"
                )))
            }
        };
        same_len("coefficient vector", n, q.c.len(), c)?;
        Ok(q)
    }
}

fn check_keys(s: &Section, allowed: &[&str], diags: &mut Vec<Diagnostic>) {
    for e in &s.entries {
        if !allowed.contains(&e.key.as_str()) {
            diags.push(Diagnostic::new(
                e.line,
                &e.key,
                format!("unknown key in [{}]", s.name),
            ));
        }
    }
}

fn required<'a>(s: &'a Section, key: &str) -> R<&'a Entry> {
    s.get(key)
        .ok_or_else(|| Diagnostic::new(s.line, key, format!("missing key in [{}]", s.name)))
}

/// `f(x − λ)`, keeping catalog structure where possible.
pub fn shift_fn(f: &QuasiconvexFn, lambda: &[f64]) -> QuasiconvexFn {
    match f.kind() {
        FnKind::Affine { c, d } => QuasiconvexFn::affine(c.clone(), d - dot(c, lambda)),
        FnKind::AbsAffine { a, b } => QuasiconvexFn::abs_affine(a.clone(), b - dot(a, lambda)),
        _ => {
            let g = f.clone();
            let l = lambda.to_vec();
            QuasiconvexFn::custom(
                f.dim(),
                format!("{}(x - λ)", f.describe()),
                f.lipschitz(),
                move |x| g.eval(&sub(x, &l)),
            )
        }
    }
}

/// `f(x) + λ·x`.
pub fn tilt_fn(f: &QuasiconvexFn, lambda: &[f64]) -> QuasiconvexFn {
    match f.kind() {
        FnKind::Affine { c, d } => {
            QuasiconvexFn::affine(c.iter().zip(lambda).map(|(a, b)| a + b).collect(), *d)
        }
        _ => {
            let g = f.clone();
            let l = lambda.to_vec();
            let lip = f.lipschitz() + crate::geometry::norm(lambda);
            QuasiconvexFn::custom(
                f.dim(),
                format!("{} + λ·x", f.describe()),
                lip,
                move |x| g.eval(x) + dot(&l, x),
            )
        }
    }
}

fn parametric<'v>(v: &'v Value, forms: &[&str]) -> Option<(&'v str, &'v Value)> {
    match v {
        Value::Call(f, args) if forms.contains(&f.as_str()) && args.len() == 1 => {
            Some((f.as_str(), &args[0]))
        }
        _ => None,
    }
}

impl<'a> Resolver<'a> {
    fn family(&mut self, s: &Section) -> R<PerturbedFamily> {
        let meta = self.meta().clone();
        let n = meta.dim;
        let ld = count(
            &required(s, "lambda_dim")?.value,
            Ctx::of(required(s, "lambda_dim")?),
        )?;
        let md = count(
            &required(s, "mu_dim")?.value,
            Ctx::of(required(s, "mu_dim")?),
        )?;
        let mut fam = PerturbedFamily::new("family", meta.bx.clone(), ld, md);
        if let Some(e) = s.get("operator") {
            let c = Ctx::of(e);
            fam = match parametric(&e.value, &["shifted", "plus"]) {
                Some((form, inner)) => {
                    same_len("lambda_dim", n, ld, c)?;
                    let t = self.operator(inner, c)?;
                    if form == "shifted" {
                        fam.with_operator(move |l| {
                            let (t, l) = (t.clone(), l.to_vec());
                            DualMap::new(t.dim(), "T(x - λ)", move |x| t.values(&sub(x, &l)))
                        })
                    } else {
                        fam.with_operator(move |l| {
                            let (t, l) = (t.clone(), l.to_vec());
                            DualMap::new(t.dim(), "T(x) + λ", move |x| {
                                t.values(x)
                                    .into_iter()
                                    .map(|v| crate::geometry::add(&v, &l))
                                    .collect()
                            })
                        })
                    }
                }
                None => {
                    let t = self.operator(&e.value, c)?;
                    fam.with_operator(move |_| t.clone())
                }
            };
        }
        if let Some(e) = s.get("objective") {
            let c = Ctx::of(e);
            fam = match parametric(&e.value, &["shifted", "tilted"]) {
                Some((form, inner)) => {
                    same_len("lambda_dim", n, ld, c)?;
                    let f = self.function(inner, c)?;
                    if form == "shifted" {
                        fam.with_objective(move |l| shift_fn(&f, l))
                    } else {
                        fam.with_objective(move |l| tilt_fn(&f, l))
                    }
                }
                None => {
                    let f = self.function(&e.value, c)?;
                    fam.with_objective(move |_| f.clone())
                }
            };
        }
        if let Some(e) = s.get("set") {
            let c = Ctx::of(e);
            fam = match parametric(&e.value, &["translate"]) {
                Some((_, inner)) => {
                    same_len("mu_dim", n, md, c)?;
                    let r = self.region(inner, c)?;
                    fam.with_set(move |m| r.translate(m))
                }
                None => {
                    let r = self.region(&e.value, c)?;
                    fam.with_set(move |_| Ok(r.clone()))
                }
            };
        }
        if let Some(e) = s.get("map") {
            let c = Ctx::of(e);
            fam = match parametric(&e.value, &["shifted"]) {
                Some((_, inner)) => {
                    same_len("mu_dim", n, md, c)?;
                    let k = self.map(inner, c)?;
                    fam.with_quasi_set(move |m| {
                        let (k, m) = (k.clone(), m.to_vec());
                        let name = format!("{}(x - μ) + μ", k.name());
                        Ok(ConstraintMap::new(
                            k.dim(),
                            name,
                            crate::qvi::MapKind::Analytic("shifted".into()),
                            move |x| k.value(&sub(x, &m))?.translate(&m),
                        ))
                    })
                }
                None => {
                    let k = self.map(&e.value, c)?;
                    fam.with_quasi_set(move |_| Ok(k.clone()))
                }
            };
        }
        Ok(fam)
    }

    fn trace(&mut self, s: &Section, ld: usize, md: usize) -> R<TraceInput> {
        let vec_key = |key: &str, len: usize| -> R<Point> {
            let e = required(s, key)?;
            let v = vector(&e.value, Ctx::of(e))?;
            same_len(key, len, v.len(), Ctx::of(e))?;
            Ok(v)
        };
        let l0 = vec_key("lambda0", ld)?;
        let m0 = vec_key("mu0", md)?;
        if let Some(e) = s.get("lambdas") {
            let c = Ctx::of(e);
            let ls = matrix(&e.value, c)?;
            let me = required(s, "mus")?;
            let ms = matrix(&me.value, Ctx::of(me))?;
            same_len("mus length", ls.len(), ms.len(), Ctx::of(me))?;
            for l in &ls {
                same_len("lambda", ld, l.len(), c)?;
            }
            for m in &ms {
                same_len("mu", md, m.len(), Ctx::of(me))?;
            }
            if ls.is_empty() {
                return Err(c.err("trace needs at least one step"));
            }
            return Ok(TraceInput {
                lambdas: ls,
                mus: ms,
                lambda0: l0,
                mu0: m0,
            });
        }
        let se = required(s, "schedule")?;
        let sc = Ctx::of(se);
        let ste = required(s, "steps")?;
        let steps = count(&ste.value, Ctx::of(ste))?;
        if steps == 0 {
            return Err(Ctx::of(ste).err("trace needs at least one step"));
        }
        match &se.value {
            Value::Ident(k) if k == "constant" => Ok(TraceInput::constant(l0, m0, steps)),
            Value::Ident(k) if k == "harmonic" => Ok(TraceInput::harmonic(
                l0,
                m0,
                vec_key("dlambda", ld)?,
                vec_key("dmu", md)?,
                steps,
            )),
            Value::Call(k, args) if k == "geometric" => {
                arity(k, args, 1, sc)?;
                let ratio = num(&args[0], sc)?;
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(sc.err(format!("geometric ratio must lie in ]0,1[, got {ratio}")));
                }
                Ok(TraceInput::geometric(
                    l0,
                    m0,
                    vec_key("dlambda", ld)?,
                    vec_key("dmu", md)?,
                    ratio,
                    steps,
                ))
            }
            other => Err(sc.err(format!(
                "unknown schedule `{other}` (constant, harmonic, geometric(ratio))"
            ))),
        }
    }

    fn follower(
        &mut self,
        s: &Section,
        n_leader: usize,
        m_total: usize,
        dim_hint: usize,
    ) -> R<Follower> {
        let name = s.label.clone().unwrap_or_default();
        let ke = required(s, "K")?;
        let kc = Ctx::of(ke);
        let te = required(s, "theta")?;
        let tc = Ctx::of(te);
        let dim = match s.get("dim") {
            Some(e) => count(&e.value, Ctx::of(e))?,
            None => dim_hint,
        };
        let others = m_total
            .checked_sub(dim)
            .ok_or_else(|| kc.err("follower dimension exceeds the follower box"))?;
        if let (Value::Call(tf, targs), Value::Call(kf, kargs)) = (&te.value, &ke.value) {
            if tf == "linear" && kf == "translate" {
                arity(tf, targs, 2, tc)?;
                arity(kf, kargs, 3, kc)?;
                let c0 = vector(&targs[0], tc)?;
                let cx = matrix(&targs[1], tc)?;
                same_len("linear coefficients", dim, c0.len(), tc)?;
                same_len("linear x-coefficient rows", dim, cx.len(), tc)?;
                for row in &cx {
                    same_len("linear x-coefficient columns", n_leader, row.len(), tc)?;
                }
                let base = self.region(&kargs[0], kc)?;
                same_len("translated base", dim, base.dim(), kc)?;
                let coef = move |x: &[f64]| -> Point {
                    c0.iter().zip(mat_vec(&cx, x)).map(|(a, b)| a + b).collect()
                };
                return kc.lift(Follower::linear(
                    name,
                    coef,
                    base,
                    matrix(&kargs[1], kc)?,
                    matrix(&kargs[2], kc)?,
                ));
            }
        }
        let theta: Arc<dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync> = match &te.value {
            Value::Call(tf, targs) if tf == "linear" => {
                arity(tf, targs, 2, tc)?;
                let c0 = vector(&targs[0], tc)?;
                let cx = matrix(&targs[1], tc)?;
                same_len("linear coefficients", dim, c0.len(), tc)?;
                Arc::new(move |yi, _, x| {
                    dot(
                        &c0.iter()
                            .zip(mat_vec(&cx, x))
                            .map(|(a, b)| a + b)
                            .collect::<Point>(),
                        yi,
                    )
                })
            }
            other => {
                let q = self.quadratic(other, m_total + n_leader, tc)?;
                Arc::new(move |yi, ym, x| {
                    let mut w = yi.to_vec();
                    w.extend_from_slice(ym);
                    w.extend_from_slice(x);
                    q.eval(&w)
                })
            }
        };
        let k: Arc<dyn Fn(&[f64], &[f64]) -> crate::Result<Region> + Send + Sync> = match &ke.value
        {
            Value::Call(kf, kargs) if kf == "bounds" => {
                arity(kf, kargs, 2, kc)?;
                same_len("bounds follower dimension", 1, dim, kc)?;
                let lo = self.quadratic(&kargs[0], others + n_leader, kc)?;
                let hi = self.quadratic(&kargs[1], others + n_leader, kc)?;
                Arc::new(move |ym, x| {
                    let mut w = ym.to_vec();
                    w.extend_from_slice(x);
                    let (a, b) = (lo.eval(&w), hi.eval(&w));
                    if a > b {
                        return Err(Error::EmptyUnion);
                    }
                    Region::interval(a, b)
                })
            }
            Value::Call(kf, _) if kf == "translate" => {
                return Err(kc.err("translate(...) follower sets need a linear(...) objective; use a region for other objectives"));
            }
            other => {
                let r = self.region(other, kc)?;
                same_len("follower set", dim, r.dim(), kc)?;
                Arc::new(move |_, _| Ok(r.clone()))
            }
        };
        let (t2, k2) = (theta.clone(), k.clone());
        Ok(Follower::new(
            name,
            dim,
            move |a, b, c| t2(a, b, c),
            move |a, b| k2(a, b),
        ))
    }

    fn game(&mut self, s: &Section, followers: &[&Section]) -> R<(GameSpec, Option<f64>)> {
        let le = required(s, "leader_set")?;
        let c1 = self.region(&le.value, Ctx::of(le))?;
        let fe = required(s, "follower_box")?;
        let c2 = self.region(&fe.value, Ctx::of(fe))?;
        if followers.is_empty() {
            return Err(Diagnostic::new(
                s.line,
                "game",
                "a game needs at least one [follower NAME] section",
            ));
        }
        let m = c2.dim();
        let hint = if m % followers.len() == 0 {
            m / followers.len()
        } else {
            1
        };
        let mut fs = Vec::new();
        for f in followers {
            fs.push(self.follower(f, c1.dim(), m, hint)?);
        }
        let mut g = Ctx::of(fe).lift(GameSpec::new(fs, c1.clone(), c2.clone()))?;
        if let Some(e) = s.get("leader") {
            let q = self.quadratic(&e.value, c1.dim() + m, Ctx::of(e))?;
            g = g.with_leader(move |x, y| {
                let mut w = x.to_vec();
                w.extend_from_slice(y);
                q.eval(&w)
            });
        }
        let h_x = match s.get("h_x") {
            Some(e) => Some(num(&e.value, Ctx::of(e))?),
            None => None,
        };
        Ok((g, h_x))
    }
}

fn positive(v: f64, key: &str, line: usize) -> R<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Diagnostic::new(
            line,
            key,
            format!("must be positive, got {v}"),
        ))
    }
}

/// Builds every named object (so unresolved names anywhere are reported)
/// and the problem, family, traces and game.
pub fn build(file: &ProblemFile, ov: &Overrides) -> Result<Model, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut named: HashMap<&'static str, HashMap<String, &Entry>> = HashMap::new();
    for sec in ["regions", "functions", "operators", "maps"] {
        let mut m = HashMap::new();
        for s in file.sections_named(sec) {
            for e in &s.entries {
                m.insert(e.key.clone(), e);
            }
        }
        named.insert(sec, m);
    }
    let allowed: &[(&str, &[&str])] = &[
        ("meta", &["dim", "box", "h", "r", "eps"]),
        ("problem", &["set", "operator", "objective", "map"]),
        (
            "family",
            &[
                "lambda_dim",
                "mu_dim",
                "operator",
                "objective",
                "set",
                "map",
            ],
        ),
        (
            "trace",
            &[
                "lambda0", "mu0", "dlambda", "dmu", "schedule", "steps", "lambdas", "mus",
            ],
        ),
        ("game", &["leader_set", "follower_box", "leader", "h_x"]),
        ("follower", &["dim", "theta", "K"]),
    ];
    for s in &file.sections {
        if let Some((_, keys)) = allowed.iter().find(|a| a.0 == s.name) {
            check_keys(s, keys, &mut diags);
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut rs = Resolver {
        named,
        regions: HashMap::new(),
        functions: HashMap::new(),
        operators: HashMap::new(),
        maps: HashMap::new(),
        stack: Vec::new(),
        meta: None,
    };

    let meta = (|| -> R<Meta> {
        let s = file
            .section("meta")
            .ok_or_else(|| Diagnostic::new(1, "meta", "missing [meta] section"))?;
        let de = required(s, "dim")?;
        let dim = count(&de.value, Ctx::of(de))?;
        let be = required(s, "box")?;
        let bx = rs.region(&be.value, Ctx::of(be))?;
        same_len("box", dim, bx.dim(), Ctx::of(be))?;
        let opt = |key: &str| -> R<Option<(f64, usize)>> {
            match s.get(key) {
                Some(e) => Ok(Some((num(&e.value, Ctx::of(e))?, e.line))),
                None => Ok(None),
            }
        };
        let h = match (ov.h, opt("h")?) {
            (Some(v), _) => positive(v, "--h", 0)?,
            (None, Some((v, line))) => positive(v, "h", line)?,
            (None, None) => DEFAULT_H,
        };
        let r = match (ov.r, opt("r")?) {
            (Some(v), _) => positive(v, "--r", 0)?,
            (None, Some((v, line))) => positive(v, "r", line)?,
            (None, None) => 4.0 * h,
        };
        let eps = match (ov.eps, opt("eps")?) {
            (Some(v), _) => positive(v, "--eps", 0)?,
            (None, Some((v, line))) => positive(v, "eps", line)?,
            (None, None) => DEFAULT_EPS,
        };
        Ok(Meta { dim, bx, h, r, eps })
    })();
    let meta = match meta {
        Ok(m) => m,
        Err(d) => return Err(vec![d]),
    };
    rs.meta = Some(meta.clone());

    for s in &file.sections {
        for e in &s.entries {
            let c = Ctx::of(e);
            let v = Value::Ident(e.key.clone());
            let r = match s.name.as_str() {
                "regions" => rs.region(&v, c).map(|_| ()),
                "functions" => rs.function(&v, c).map(|_| ()),
                "operators" => rs.operator(&v, c).map(|_| ()),
                "maps" => rs.map(&v, c).map(|_| ()),
                _ => Ok(()),
            };
            if let Err(d) = r {
                diags.push(d);
            }
        }
    }

    let mut model = Model {
        meta: meta.clone(),
        set: None,
        operator: None,
        objective: None,
        map: None,
        family: None,
        traces: Vec::new(),
        game: None,
        h_x: meta.h,
    };
    if let Some(s) = file.section("problem") {
        for e in &s.entries {
            let c = Ctx::of(e);
            let r: R<()> = (|| {
                match e.key.as_str() {
                    "set" => {
                        let r = rs.region(&e.value, c)?;
                        same_len("set", meta.dim, r.dim(), c)?;
                        model.set = Some(r);
                    }
                    "operator" => {
                        let t = rs.operator(&e.value, c)?;
                        same_len("operator", meta.dim, t.dim(), c)?;
                        model.operator = Some(t);
                    }
                    "objective" => {
                        let f = rs.function(&e.value, c)?;
                        same_len("objective", meta.dim, f.dim(), c)?;
                        model.objective = Some(f);
                    }
                    "map" => {
                        let k = rs.map(&e.value, c)?;
                        same_len("map", meta.dim, k.dim(), c)?;
                        model.map = Some(k);
                    }
                    _ => {}
                }
                Ok(())
            })();
            if let Err(d) = r {
                diags.push(d);
            }
        }
    }
    if let Some(s) = file.section("family") {
        match rs.family(s) {
            Ok(f) => model.family = Some(f),
            Err(d) => diags.push(d),
        }
    }
    for s in file.sections_named("trace") {
        let Some(fam) = &model.family else {
            diags.push(Diagnostic::new(
                s.line,
                "trace",
                "[trace] needs a [family] section",
            ));
            continue;
        };
        match rs.trace(s, fam.lambda_dim, fam.mu_dim) {
            Ok(t) => model
                .traces
                .push((s.label.clone().unwrap_or_else(|| "default".into()), t)),
            Err(d) => diags.push(d),
        }
    }
    let followers: Vec<&Section> = file.sections_named("follower").collect();
    match file.section("game") {
        Some(s) => match rs.game(s, &followers) {
            Ok((g, hx)) => {
                model.game = Some(g);
                if let Some(hx) = hx {
                    match positive(hx, "h_x", s.get("h_x").map_or(s.line, |e| e.line)) {
                        Ok(v) => model.h_x = v,
                        Err(d) => diags.push(d),
                    }
                }
            }
            Err(d) => diags.push(d),
        },
        None => {
            if let Some(f) = followers.first() {
                diags.push(Diagnostic::new(
                    f.line,
                    "follower",
                    "[follower] sections need a [game] section",
                ));
            }
        }
    }
    if diags.is_empty() {
        Ok(model)
    } else {
        Err(diags)
    }
}
