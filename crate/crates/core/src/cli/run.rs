//! Command dispatch, CSV tables and the run report.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use super::build::{build, Model, Overrides};
use super::parse::{parse_str, Diagnostic};
use crate::error::Error;
use crate::games::{
    closed_form_probes, follower_fixed_points, solve_lgnep, solve_sllmf, LinearClosedForm,
};
use crate::geometry::Point;
use crate::operators::{classify_monotonicity, DualMap};
use crate::quasiconvex::{
    check_quasiconvex, check_semistrict, check_sub_boundarily_constant, CheckOutcome,
};
use crate::quasiopt::{certify_all, ff_for, solve_qopt, QoptMethod, QuasiOptProblem};
use crate::qvi::{certify_local_repro, solve_qvi, QviKind, QviMethod, ReproStatus};
use crate::stability::{closedness_trial, ClosednessKind, TrialConfig, Verdict};
use crate::vi_solvers::{self, SolutionKind, SolutionSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    SolveVi,
    SolveQvi,
    CheckRepro,
    SolveQopt,
    StabilityTrial,
    SolveGnep,
    SolveSlmf,
    ClassifyOp,
    AnalyzeF,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveVi => "solve-vi",
            Command::SolveQvi => "solve-qvi",
            Command::CheckRepro => "check-repro",
            Command::SolveQopt => "solve-qopt",
            Command::StabilityTrial => "stability-trial",
            Command::SolveGnep => "solve-gnep",
            Command::SolveSlmf => "solve-slmf",
            Command::ClassifyOp => "classify-op",
            Command::AnalyzeF => "analyze-f",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Flags {
    pub h: Option<f64>,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub method: Option<String>,
    pub kind: Option<String>,
    pub seed: u64,
    pub trace: Option<String>,
    pub leader_x: Option<Vec<f64>>,
}

#[derive(Debug)]
pub enum CliError {
    Input(Vec<Diagnostic>),
    Usage(String),
    Solver(Error),
    Io(String),
}

impl CliError {
    /// 2 when two routes to the same set disagree, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(e) if e.is_consistency_failure() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(ds) => {
                for (i, d) in ds.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
            CliError::Usage(s) => write!(f, "usage: {s}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::Io(s) => write!(f, "i/o: {s}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A CSV artifact; the first line is `# schema: locvi/<command>/v1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(file: &str, header: Vec<String>) -> Self {
        CsvTable {
            file: file.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn render(&self, command: &str) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
        format!("# schema: locvi/{command}/v1\n{body}")
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: Command,
    pub file: String,
    pub params: Vec<(String, String)>,
    pub tables: Vec<CsvTable>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn table(&self, file: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|t| t.file == file)
    }

    pub fn render(&self) -> String {
        let mut s = format!("command: locvi {} {}\n", self.command.name(), self.file);
        for (k, v) in &self.params {
            s.push_str(&format!("{k}: {v}\n"));
        }
        for t in &self.tables {
            s.push_str(&format!("table {}: {} rows\n", t.file, t.rows.len()));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s.push_str(&format!("elapsed: {:.3} s\n", self.elapsed.as_secs_f64()));
        s
    }

    /// Writes every table and `report.txt` into `dir`, each through a temporary file and a rename.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut files: Vec<(String, String)> = self
            .tables
            .iter()
            .map(|t| (t.file.clone(), t.render(self.command.name())))
            .collect();
        files.push(("report.txt".into(), self.render()));
        for (name, body) in files {
            let tmp = dir.join(format!(".{name}.tmp"));
            let dst = dir.join(&name);
            fs::write(&tmp, body).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
            fs::rename(&tmp, &dst).map_err(|e| CliError::Io(format!("{}: {e}", dst.display())))?;
        }
        Ok(())
    }
}

/// Shortest round-trip form, with `-0` printed as `0`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn coords(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn nums(p: &[f64]) -> Vec<String> {
    p.iter().map(|&v| fmt_num(v)).collect()
}

fn blanks(n: usize) -> Vec<String> {
    vec![String::new(); n]
}

fn need<'a, T>(v: &'a Option<T>, what: &str, cmd: Command) -> CliResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} needs {what} in the problem file", cmd.name())))
}

fn choice<T: Copy>(
    flag: &Option<String>,
    name: &str,
    default: Option<T>,
    options: &[(&str, T)],
) -> CliResult<T> {
    match flag {
        None => default.ok_or_else(|| {
            CliError::Usage(format!(
                "--{name} is required ({})",
                options.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")
            ))
        }),
        Some(s) => options
            .iter()
            .find(|o| o.0 == s)
            .map(|o| o.1)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown --{name} `{s}` ({})",
                    options.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")
                ))
            }),
    }
}

fn solution_table(file: &str, set: &SolutionSet, dim: usize) -> CsvTable {
    let mut header = coords("x", dim);
    header.extend(coords("mult", dim));
    header.extend(["radius", "max_radius", "margin"].map(String::from));
    let mut t = CsvTable::new(file, header);
    for s in &set.solutions {
        let mut row = nums(&s.x);
        row.extend(
            s.multiplier
                .as_ref()
                .map_or_else(|| blanks(dim), |m| nums(m)),
        );
        row.extend([fmt_num(s.radius), fmt_num(s.max_radius), fmt_num(s.margin)]);
        t.rows.push(row);
    }
    t
}

fn operator_of(model: &Model, cmd: Command) -> CliResult<DualMap> {
    if let Some(t) = &model.operator {
        return Ok(t.clone());
    }
    let f = model.objective.as_ref().ok_or_else(|| {
        CliError::Usage(format!(
            "{} needs an operator or an objective in [problem]",
            cmd.name()
        ))
    })?;
    Ok(ff_for(f, &model.meta.bx, model.meta.h)?)
}

fn check_row(name: &str, o: &CheckOutcome) -> Vec<String> {
    let witness = o
        .witness
        .as_ref()
        .map(|w| {
            w.iter()
                .map(|p| format!("({})", nums(p).join(" ")))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default();
    vec![name.into(), o.holds.to_string(), witness]
}

/// Parses `text`, builds the model with flag overrides, runs `cmd`.
pub fn run_text(text: &str, file_label: &str, cmd: Command, flags: &Flags) -> CliResult<RunReport> {
    let start = Instant::now();
    let pf = parse_str(text).map_err(CliError::Input)?;
    let model = build(
        &pf,
        &Overrides {
            h: flags.h,
            r: flags.r,
            eps: flags.eps,
        },
    )
    .map_err(CliError::Input)?;
    let m = &model.meta;
    let (h, r, eps, n) = (m.h, m.r, m.eps, m.dim);
    let mut params = vec![
        ("h".to_string(), fmt_num(h)),
        ("r".to_string(), fmt_num(r)),
        ("eps".to_string(), fmt_num(eps)),
    ];
    let mut tables = Vec::new();
    let mut notes = Vec::new();
    match cmd {
        Command::SolveVi => {
            let kind = choice(
                &flags.kind,
                "kind",
                Some(SolutionKind::Lsvi),
                &[
                    ("lsvi", SolutionKind::Lsvi),
                    ("svi", SolutionKind::Svi),
                    ("lmvi", SolutionKind::Lmvi),
                    ("mvi", SolutionKind::Mvi),
                    ("star", SolutionKind::LsviStar),
                    ("weak-int", SolutionKind::WeakInt),
                ],
            )?;
            params.push(("kind".into(), kind.label().into()));
            let c = need(&model.set, "a set", cmd)?;
            let t = operator_of(&model, cmd)?;
            let s = vi_solvers::solve(kind, &t, c, h, r, eps)?;
            notes.extend(s.diagnostics.iter().cloned());
            tables.push(solution_table("solutions.csv", &s, n));
        }
        Command::SolveQvi => {
            let kind = choice(
                &flags.kind,
                "kind",
                Some(QviKind::Stampacchia),
                &[
                    ("stampacchia", QviKind::Stampacchia),
                    ("minty", QviKind::Minty),
                ],
            )?;
            let method = choice(
                &flags.method,
                "method",
                Some(QviMethod::Union),
                &[
                    ("union", QviMethod::Union),
                    ("direct", QviMethod::Direct),
                    ("both", QviMethod::Both),
                ],
            )?;
            params.push(("kind".into(), format!("{kind:?}").to_lowercase()));
            params.push(("method".into(), format!("{method:?}").to_lowercase()));
            let k = need(&model.map, "a map", cmd)?;
            let t = operator_of(&model, cmd)?;
            let out = solve_qvi(kind, method, &t, k, &m.bx, h, r, eps)?;
            notes.extend(out.solutions().diagnostics.iter().cloned());
            tables.push(solution_table("solutions.csv", out.solutions(), n));
            notes.push(format!("{} grid fixed points", out.fixed_points.len()));
        }
        Command::CheckRepro => {
            let k = need(&model.map, "a map", cmd)?;
            let certs = certify_all(k, &m.bx, h, r)?;
            let mut header = coords("z", n);
            header.extend(["status", "radius", "passing_radii", "failing_radii"].map(String::from));
            header.extend(coords("witness_z", n));
            header.extend(coords("witness_y", n));
            let mut t = CsvTable::new("certificates.csv", header);
            for c in &certs {
                let mut row = nums(&c.z);
                row.push(
                    if c.status == ReproStatus::Certified {
                        "certified"
                    } else {
                        "refuted"
                    }
                    .into(),
                );
                row.push(fmt_num(c.radius));
                let list = |pass: bool| {
                    c.attempts
                        .iter()
                        .filter(|a| a.1 == pass)
                        .map(|a| fmt_num(a.0))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                row.push(list(true));
                row.push(list(false));
                match &c.witness {
                    Some(w) => {
                        row.extend(nums(&w.z_prime));
                        row.extend(nums(&w.y));
                    }
                    None => row.extend(blanks(2 * n)),
                }
                t.rows.push(row);
            }
            let refuted = certs.iter().filter(|c| !c.is_certified()).count();
            notes.push(format!("{} fixed points, {} refuted", certs.len(), refuted));
            tables.push(t);
        }
        Command::SolveQopt => {
            let method = choice(
                &flags.method,
                "method",
                Some(QoptMethod::Direct),
                &[
                    ("direct", QoptMethod::Direct),
                    ("union", QoptMethod::Union),
                    ("vi", QoptMethod::Vi),
                    ("all", QoptMethod::All),
                ],
            )?;
            params.push(("method".into(), format!("{method:?}").to_lowercase()));
            let p = QuasiOptProblem {
                f: need(&model.objective, "an objective", cmd)?.clone(),
                k: need(&model.map, "a map", cmd)?.clone(),
                bx: m.bx.clone(),
                h,
                r,
            };
            let out = solve_qopt(&p, method, eps)?;
            let mut header = vec!["route".to_string()];
            header.extend(coords("x", n));
            header.push("margin".into());
            let mut t = CsvTable::new("solutions.csv", header);
            for (route, set) in [
                ("direct", &out.direct),
                ("union", &out.union),
                ("vi", &out.vi),
            ] {
                if let Some(set) = set {
                    for s in &set.solutions {
                        let mut row = vec![route.to_string()];
                        row.extend(nums(&s.x));
                        row.push(fmt_num(s.margin));
                        t.rows.push(row);
                    }
                }
            }
            tables.push(t);
        }
        Command::StabilityTrial => {
            let kind = choice(
                &flags.kind,
                "kind",
                None,
                &[
                    ("weak-int", ClosednessKind::WeakInt),
                    ("star", ClosednessKind::Star),
                    ("lopt", ClosednessKind::Lopt),
                    ("lqopt", ClosednessKind::Lqopt),
                ],
            )?;
            params.push(("kind".into(), kind.label().into()));
            let fam = need(&model.family, "a [family] section", cmd)?;
            let (label, trace) = match &flags.trace {
                Some(name) => model
                    .traces
                    .iter()
                    .find(|t| &t.0 == name)
                    .ok_or_else(|| CliError::Usage(format!("no [trace {name}] section")))?,
                None => model.traces.first().ok_or_else(|| {
                    CliError::Usage("stability-trial needs a [trace] section".into())
                })?,
            };
            params.push(("trace".into(), label.clone()));
            let tr = closedness_trial(fam, kind, trace, &TrialConfig { h, r, eps })?;
            let mut header = vec!["n".to_string()];
            header.extend(coords("x", n));
            let mut sols = CsvTable::new("solutions.csv", header.clone());
            for (i, s) in tr.solutions.iter().enumerate() {
                for x in s {
                    let mut row = vec![(i + 1).to_string()];
                    row.extend(nums(x));
                    sols.rows.push(row);
                }
            }
            for x in &tr.limit_solutions {
                let mut row = vec!["limit".to_string()];
                row.extend(nums(x));
                sols.rows.push(row);
            }
            let mut ch_header = vec!["chain".to_string(), "n".to_string()];
            ch_header.extend(coords("x", n));
            ch_header.extend(["converged", "limit_ok"].map(String::from));
            let mut chains = CsvTable::new("chains.csv", ch_header);
            for (ci, c) in tr.chains.iter().enumerate() {
                for (i, x) in c.points.iter().enumerate() {
                    let mut row = vec![ci.to_string(), (i + 1).to_string()];
                    row.extend(nums(x));
                    row.extend([c.converged.to_string(), c.limit_ok.to_string()]);
                    chains.rows.push(row);
                }
            }
            let mut hyp = CsvTable::new(
                "hypotheses.csv",
                ["check", "passed", "detail"].map(String::from).to_vec(),
            );
            for c in &tr.hypotheses.checks {
                hyp.rows
                    .push(vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]);
            }
            let verdict = match tr.verdict {
                Verdict::True => "true",
                Verdict::False => "false",
                Verdict::Inconclusive => "inconclusive",
            };
            let failed: Vec<String> = tr
                .hypotheses
                .failed()
                .iter()
                .map(|c| c.name.clone())
                .collect();
            let mut v = CsvTable::new(
                "verdict.csv",
                ["verdict", "chains", "converged", "failed_hypotheses"]
                    .map(String::from)
                    .to_vec(),
            );
            v.rows.push(vec![
                verdict.into(),
                tr.chains.len().to_string(),
                tr.chains.iter().filter(|c| c.converged).count().to_string(),
                failed.join(";"),
            ]);
            notes.extend(tr.diagnostics.iter().cloned());
            notes.push(format!("verdict {verdict}"));
            tables.extend([sols, chains, hyp, v]);
        }
        Command::SolveGnep => {
            let g = need(&model.game, "a [game] section", cmd)?;
            let x = flags
                .leader_x
                .clone()
                .ok_or_else(|| CliError::Usage("solve-gnep needs --leader-x".into()))?;
            if x.len() != g.leader_set().dim() {
                return Err(CliError::Usage(format!(
                    "--leader-x has {} coordinates but the leader set has dimension {}",
                    x.len(),
                    g.leader_set().dim()
                )));
            }
            params.push(("leader_x".into(), nums(&x).join(" ")));
            let eqs = solve_lgnep(g, &x, h, r, eps)?;
            let m2 = g.follower_box().dim();
            let mut header = coords("y", m2);
            header.push("gap".into());
            header.extend(coords("argmax", m2));
            header.push("certified_radius".into());
            let k = g.product_map(&x);
            let fixed = follower_fixed_points(g, &x, h)?.len();
            let mut t = CsvTable::new("equilibria.csv", header);
            for d in &eqs {
                let mut row = nums(&d.y);
                row.push(fmt_num(d.value));
                row.extend(nums(&d.argmax));
                let cert = certify_local_repro(&k, &d.y, 4.0 * r, h, 2.0 * h)?;
                row.push(if cert.is_certified() {
                    fmt_num(cert.radius)
                } else {
                    String::new()
                });
                t.rows.push(row);
            }
            notes.push(format!(
                "{} equilibria among {fixed} follower fixed points",
                eqs.len()
            ));
            tables.push(t);
        }
        Command::SolveSlmf => {
            let g = need(&model.game, "a [game] section", cmd)?;
            params.push(("h_x".into(), fmt_num(model.h_x)));
            params.push(("seed".into(), flags.seed.to_string()));
            let s = solve_sllmf(g, model.h_x, h, r, eps)?;
            let mut header = coords("x", g.leader_set().dim());
            header.extend(coords("y", g.follower_box().dim()));
            header.extend(["value", "feasible_leaders", "leader_grid"].map(String::from));
            let mut t = CsvTable::new("leader.csv", header);
            let mut row = nums(&s.x);
            row.extend(nums(&s.y));
            row.extend([
                fmt_num(s.value),
                s.feasible_leaders.to_string(),
                s.leader_grid.to_string(),
            ]);
            t.rows.push(row);
            tables.push(t);
            if g.is_linear() {
                let cf = LinearClosedForm::from_reference(g, &s.y, &s.x, r, h)?;
                let probes = closed_form_probes(g, &cf, 50, flags.seed, model.h_x, h, r)?;
                let mut header = coords("x", g.leader_set().dim());
                header.extend(coords("y", g.follower_box().dim()));
                header.extend(["grid_gap", "closed_gap", "deviation"].map(String::from));
                let mut ct = CsvTable::new("closed_form.csv", header);
                let mut worst: f64 = 0.0;
                for p in &probes {
                    let mut row = nums(&p.x);
                    row.extend(nums(&p.y));
                    let dev = (p.grid - p.closed).abs();
                    worst = worst.max(dev);
                    row.extend([fmt_num(p.grid), fmt_num(p.closed), fmt_num(dev)]);
                    ct.rows.push(row);
                }
                notes.push(format!(
                    "closed-form gap: zeta = {:?}, largest deviation {worst:.3e} on {} probes",
                    cf.zeta,
                    probes.len()
                ));
                tables.push(ct);
            }
        }
        Command::ClassifyOp => {
            let c = need(&model.set, "a set", cmd)?;
            let t = operator_of(&model, cmd)?;
            let rep = classify_monotonicity(&t, c, h, eps)?;
            let mut ct = CsvTable::new(
                "classification.csv",
                [
                    "class",
                    "quasimonotone",
                    "properly_quasimonotone",
                    "pseudomonotone",
                    "witness_violates",
                    "witness_points",
                ]
                .map(String::from)
                .to_vec(),
            );
            let (wv, wp) = match &rep.witness {
                Some(w) => (
                    w.violates.label().to_string(),
                    w.points
                        .iter()
                        .map(|p| format!("({})", nums(p).join(" ")))
                        .collect::<Vec<_>>()
                        .join(" "),
                ),
                None => (String::new(), String::new()),
            };
            ct.rows.push(vec![
                rep.class.label().into(),
                rep.quasi.to_string(),
                rep.proper.to_string(),
                rep.pseudo.to_string(),
                wv,
                wp,
            ]);
            tables.push(ct);
        }
        Command::AnalyzeF => {
            let f = need(&model.objective, "an objective", cmd)?;
            let region = model.set.clone().unwrap_or_else(|| m.bx.clone());
            let mut t = CsvTable::new(
                "properties.csv",
                ["property", "holds", "witness"].map(String::from).to_vec(),
            );
            t.rows
                .push(check_row("quasiconvex", &check_quasiconvex(f, &region, h)?));
            t.rows.push(check_row(
                "semistrictly_quasiconvex",
                &check_semistrict(f, &region, h)?,
            ));
            t.rows.push(check_row(
                "sub_boundarily_constant",
                &check_sub_boundarily_constant(f, &region, h)?,
            ));
            tables.push(t);
        }
    }
    Ok(RunReport {
        command: cmd,
        file: file_label.into(),
        params,
        tables,
        notes,
        elapsed: start.elapsed(),
    })
}

pub fn run_file(path: &Path, cmd: Command, flags: &Flags) -> CliResult<RunReport> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    run_text(&text, &path.display().to_string(), cmd, flags)
}

/// Parses a comma- or space-separated vector flag.
pub fn parse_vector(s: &str) -> std::result::Result<Point, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("malformed number `{t}`"))
        })
        .collect()
}
