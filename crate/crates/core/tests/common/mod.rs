#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use locvi::cli::{build, parse_str, Model, Overrides};
use locvi::games::{GameSpec, FP_TOL};
use locvi::geometry::{dist, dist_inf, hausdorff, Point, Region};
use locvi::operators::DualMap;
use locvi::quasiconvex::QuasiconvexFn;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn model(name: &str) -> Model {
    let text = fs::read_to_string(fixture(name)).unwrap();
    let pf = parse_str(&text).unwrap_or_else(|d| panic!("{name}: {d:?}"));
    build(&pf, &Overrides::default()).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn model_from(text: &str) -> Model {
    let pf = parse_str(text).unwrap_or_else(|d| panic!("{d:?}"));
    build(&pf, &Overrides::default()).unwrap_or_else(|d| panic!("{d:?}"))
}

#[derive(Clone)]
pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub out: PathBuf,
}

impl CliRun {
    /// Rows of a CSV output, without the schema comment and header.
    pub fn csv(&self, file: &str) -> (Vec<String>, Vec<Vec<String>>) {
        read_csv(&self.out.join(file))
    }

    pub fn points(&self, file: &str, prefix: &str) -> Vec<Point> {
        let (header, rows) = self.csv(file);
        let cols: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.strip_prefix(prefix)
                    .is_some_and(|rest| rest.parse::<usize>().is_ok())
            })
            .map(|(i, _)| i)
            .collect();
        rows.iter()
            .map(|r| cols.iter().map(|&c| r[c].parse::<f64>().unwrap()).collect())
            .collect()
    }
}

pub fn locvi(args: &[&str], out: &Path) -> CliRun {
    let o = Command::new(env!("CARGO_BIN_EXE_locvi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn locvi");
    CliRun {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        out: out.to_path_buf(),
    }
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

/// Same number of points and Hausdorff distance within `tol`.
pub fn same_points(a: &[Point], b: &[Point], tol: f64) -> bool {
    a.len() == b.len() && (a.is_empty() || hausdorff(a, b) <= tol)
}

/// Grid LSVI by definition: some sampled `x* ∈ T(x)` with `⟨x*, y − x⟩ ≥ −ε`
/// for every grid `y ∈ C` within `r` (global when `r` is infinite).
pub fn brute_stampacchia(t: &DualMap, c: &Region, h: f64, r: f64, eps: f64) -> Vec<Point> {
    let pts = c.sample(h).unwrap();
    let scale = pts
        .iter()
        .flat_map(|p| t.values(p))
        .map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(1.0, f64::max);
    let eps = eps * scale;
    pts.iter()
        .filter(|x| {
            t.values(x).iter().any(|v| {
                pts.iter().filter(|y| dist(y, x) <= r + 1e-12).all(|y| {
                    v.iter()
                        .zip(y.iter().zip(x.iter()))
                        .map(|(a, (b, c))| a * (b - c))
                        .sum::<f64>()
                        >= -eps
                })
            })
        })
        .cloned()
        .collect()
}

/// Grid LMVI by definition: `⟨y*, y − x⟩ ≥ −ε` for every grid `y ∈ C` within
/// `r` and every sampled `y* ∈ T(y)`.
pub fn brute_minty(t: &DualMap, c: &Region, h: f64, r: f64, eps: f64) -> Vec<Point> {
    let pts = c.sample(h).unwrap();
    let scale = pts
        .iter()
        .flat_map(|p| t.values(p))
        .map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(1.0, f64::max);
    let eps = eps * scale;
    pts.iter()
        .filter(|x| {
            pts.iter().filter(|y| dist(y, x) <= r + 1e-12).all(|y| {
                t.values(y).iter().all(|v| {
                    v.iter()
                        .zip(y.iter().zip(x.iter()))
                        .map(|(a, (b, c))| a * (b - c))
                        .sum::<f64>()
                        >= -eps
                })
            })
        })
        .cloned()
        .collect()
}

/// Grid local minimizers by definition.
pub fn brute_lopt(f: &QuasiconvexFn, c: &Region, h: f64, r: f64, eps: f64) -> Vec<Point> {
    let pts = c.sample(h).unwrap();
    let eps = eps * pts.iter().map(|p| f.eval(p).abs()).fold(1.0, f64::max);
    pts.iter()
        .filter(|x| {
            pts.iter()
                .filter(|y| dist(y, x) <= r + 1e-12)
                .all(|y| f.eval(x) <= f.eval(y) + eps)
        })
        .cloned()
        .collect()
}

/// Follower equilibria at `x` by enumeration: every grid point of the
/// follower box that lies in its own constraint set and at which no player
/// gains more than `ε/M` inside the sup-norm ball of radius `r`.
pub fn brute_equilibria(g: &GameSpec, x: &[f64], h: f64, r: f64, eps: f64) -> Vec<Point> {
    let m = g.followers().len();
    let mut out = Vec::new();
    for y in g.follower_box().sample(h).unwrap() {
        let mut fixed = true;
        let mut stable = true;
        for i in 0..m {
            let (yi, rest) = g.split(&y, i);
            let ki = g.follower_set(i, &y, x).unwrap();
            if !ki.contains(&yi, FP_TOL).unwrap() {
                fixed = false;
                break;
            }
            let base = g.theta(i, &yi, &rest, x);
            for zi in ki.sample(h).unwrap() {
                if dist_inf(&zi, &yi) <= r + 1e-9 * h
                    && base > g.theta(i, &zi, &rest, x) + eps / m as f64
                {
                    stable = false;
                }
            }
        }
        if fixed && stable {
            out.push(y);
        }
    }
    out
}

/// Largest `r` on a `1e-3` sweep with `K(z')∩[z−r, z+r] = K(z)∩[z−r, z+r]`
/// for every fixed point `z'` of the circle map in that window.
pub fn circle_repro_radius(z: f64) -> f64 {
    let s = |x: f64| (1.0 - x * x).max(0.0).sqrt();
    let clip = |x: f64, r: f64| ((-s(x)).max(z - r), s(x).min(z + r));
    let mut best = 0.0;
    let mut r = 1e-3;
    while r <= 2.0 {
        let here = clip(z, r);
        let mut ok = true;
        let mut zp = z - r;
        while zp <= z + r {
            if zp.abs() <= s(zp) + 1e-12 {
                let there = clip(zp, r);
                if (there.0 - here.0).abs() > 1e-9 || (there.1 - here.1).abs() > 1e-9 {
                    ok = false;
                    break;
                }
            }
            zp += 1e-3;
        }
        if !ok {
            break;
        }
        best = r;
        r += 1e-3;
    }
    best
}
