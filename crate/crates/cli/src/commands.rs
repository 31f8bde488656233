use std::fmt;

use lsl_core::hilbert::{ModelGrid, Potential, PotentialSpec, Profile};
use lsl_core::lsl::{self, fredholm_determinant, Route};
use lsl_core::resolvent::AdiabaticParam;
use lsl_core::scalar::to_c64;
use lsl_core::verify::{
    self, epsilon_scan, fit_gap_slope, joint_refinement_scan, run_identity_suite, ScanRecord, SuiteOptions,
};
use lsl_core::LabError;
use serde_json::{Map, Value};

use crate::config::{ConfigError, ExperimentConfig, Refinement};
use crate::report::{complex_json, fmt_float, Cell, Report};

pub const EXIT_OK: u8 = 0;
pub const EXIT_LEMMA: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONDITIONING: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Scan,
    Gram,
    Solve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Scan => "scan",
            Command::Gram => "gram",
            Command::Solve => "solve",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config { path: String, error: ConfigError },
    Usage(String),
    Conditioning(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Conditioning(_) => EXIT_CONDITIONING,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { path, error } => write!(f, "config error in {path}: {error}"),
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Conditioning(m) => write!(f, "numerical conditioning: {m}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        if e.is_conditioning() {
            CliError::Conditioning(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

/// Result of a command: the report to write, human-readable summary lines,
/// and failing checks (non-empty only for `verify`).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub summary: Vec<String>,
    pub failures: Vec<String>,
}

fn eps_param(e: f64) -> Result<AdiabaticParam, CliError> {
    Ok(AdiabaticParam::new(e)?)
}

fn meta(command: Command, cfg: &ExperimentConfig, grid: &ModelGrid) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.name().into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let mut g = Map::new();
    g.insert("kmax".into(), cfg.grid.kmax.into());
    g.insert("half_count".into(), cfg.grid.half_count.into());
    g.insert("scheme".into(), cfg.grid.scheme.to_string().into());
    g.insert("size".into(), grid.size().into());
    m.insert("grid".into(), Value::Object(g));
    let mut p = Map::new();
    p.insert("lambda".into(), cfg.potential.coupling().into());
    match cfg.potential {
        PotentialSpec::Separable { profile, .. } => {
            p.insert("kind".into(), "separable".into());
            let (name, beta) = match profile {
                Profile::Yamaguchi { beta } => ("yamaguchi", beta),
                Profile::Gaussian { beta } => ("gaussian", beta),
            };
            p.insert("profile".into(), name.into());
            p.insert("beta".into(), beta.into());
        }
        PotentialSpec::GaussianKernel { sigma, .. } => {
            p.insert("kind".into(), "dense".into());
            p.insert("sigma".into(), sigma.into());
        }
        PotentialSpec::RandomHermitian { seed, .. } => {
            p.insert("kind".into(), "random".into());
            p.insert("seed".into(), seed.into());
        }
    }
    m.insert("potential".into(), Value::Object(p));
    m.insert(
        "eps_list".into(),
        Value::Array(cfg.eps_list.iter().map(|&e| e.into()).collect()),
    );
    m.insert("seed".into(), cfg.seed.into());
    m
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let grid = cfg.build_grid()?;
    let v = cfg.potential.build(&grid)?;
    match command {
        Command::Verify => run_verify(cfg, &grid, &v),
        Command::Scan => run_scan(cfg, &grid, &v),
        Command::Gram => run_gram(cfg, &grid, &v),
        Command::Solve => run_solve(cfg, &grid, &v),
    }
}

fn run_verify(cfg: &ExperimentConfig, grid: &ModelGrid, v: &Potential) -> Result<Outcome, CliError> {
    let pairs = cfg.pair_list(grid)?;
    let opts = SuiteOptions {
        route: cfg.route.unwrap_or(Route::LsSolve),
        coupling: Some(cfg.potential.coupling()),
        ..Default::default()
    };
    let mut report = Report::new(&[
        "eps",
        "lemma",
        "n",
        "k",
        "E_n",
        "E_k",
        "residual",
        "tolerance",
        "passed",
    ]);
    report.meta = meta(Command::Verify, cfg, grid);
    report.meta.insert("route".into(), opts.route.to_string().into());
    let mut json_rows = Vec::new();
    let mut failures = Vec::new();
    let mut total = 0;
    for &e in &cfg.eps_list {
        let reports = run_identity_suite(grid, v, eps_param(e)?, &pairs, &opts)?;
        for r in reports {
            total += 1;
            let idx = |key: &str| r.context.get(key).map(|&x| x as usize);
            let energy = |key: &str| r.context.get(key).map_or(Cell::Empty, |&x| Cell::Float(x));
            report.push(vec![
                e.into(),
                r.lemma_id.as_str().into(),
                idx("n").into(),
                idx("k").into(),
                energy("E_n"),
                energy("E_k"),
                r.residual.into(),
                r.tolerance().into(),
                r.passed.into(),
            ]);
            let mut obj = Map::new();
            obj.insert("eps".into(), e.into());
            obj.insert("lemma".into(), r.lemma_id.as_str().into());
            obj.insert("residual".into(), r.residual.into());
            obj.insert("tolerance".into(), r.tolerance().into());
            obj.insert("passed".into(), r.passed.into());
            obj.insert(
                "context".into(),
                Value::Object(r.context.iter().map(|(k, &x)| (k.clone(), x.into())).collect()),
            );
            json_rows.push(Value::Object(obj));
            if !r.passed {
                failures.push(format!(
                    "{} eps={} n={} k={} residual={} tolerance={}",
                    r.lemma_id,
                    fmt_float(e),
                    idx("n").map_or("-".into(), |x| x.to_string()),
                    idx("k").map_or("-".into(), |x| x.to_string()),
                    fmt_float(r.residual),
                    fmt_float(r.tolerance()),
                ));
            }
        }
    }
    report.json_rows = Some(json_rows);
    let summary = vec![format!("verify: {total} checks, {} failed", failures.len())];
    Ok(Outcome {
        report,
        summary,
        failures,
    })
}

pub const SCAN_COLUMNS: [&str; 14] = [
    "eps",
    "n",
    "k",
    "E_n",
    "E_k",
    "d_nk",
    "Re_A_nk",
    "Im_A_nk",
    "Re_I_nk",
    "Im_I_nk",
    "gw_gap",
    "grid_size",
    "spacing",
    "normalized_gap",
];

fn run_scan(cfg: &ExperimentConfig, grid: &ModelGrid, v: &Potential) -> Result<Outcome, CliError> {
    let pairs = cfg.pair_list(grid)?;
    let route = cfg.solution_route();
    let records: Vec<ScanRecord> = match cfg.refinement {
        Refinement::Fixed => epsilon_scan(grid, v, &cfg.eps_list, &pairs, route)?,
        Refinement::Joint => joint_refinement_scan(&cfg.grid, &cfg.potential, &cfg.eps_list, &pairs, route)?,
    };
    let mut report = Report::new(&SCAN_COLUMNS);
    report.meta = meta(Command::Scan, cfg, grid);
    report.meta.insert("route".into(), route.to_string().into());
    report.meta.insert(
        "refinement".into(),
        match cfg.refinement {
            Refinement::Fixed => "fixed",
            Refinement::Joint => "joint",
        }
        .into(),
    );
    for r in &records {
        for p in &r.pairs {
            report.push(vec![
                r.eps.into(),
                p.n.into(),
                p.k.into(),
                p.e_n.into(),
                p.e_k.into(),
                p.d_nk.into(),
                p.a_nk.re.into(),
                p.a_nk.im.into(),
                p.i_nk.re.into(),
                p.i_nk.im.into(),
                p.gw_gap.into(),
                r.grid_size.into(),
                p.spacing.into(),
                p.normalized_gap.into(),
            ]);
        }
    }
    let mut summary = vec![format!(
        "scan: {} eps values x {} pairs",
        records.len(),
        records.first().map_or(0, |r| r.pairs.len())
    )];
    let npairs = records.first().map_or(0, |r| r.pairs.len());
    for pos in 0..npairs {
        let first = &records[0].pairs[pos];
        match (
            fit_gap_slope(&records, pos, false),
            fit_gap_slope(&records, pos, true),
        ) {
            (Ok(raw), Ok(norm)) => summary.push(format!(
                "  pair ({}, {}): slope {:.4} (normalized {:.4}) over {:.2} decades, {} points, {} excluded",
                first.n, first.k, raw.slope, norm.slope, norm.decades, norm.points_used, norm.points_excluded
            )),
            (Err(e), _) | (_, Err(e)) => {
                summary.push(format!("  pair ({}, {}): no slope fit ({e})", first.n, first.k))
            }
        }
    }
    Ok(Outcome {
        report,
        summary,
        failures: Vec::new(),
    })
}

fn run_gram(cfg: &ExperimentConfig, grid: &ModelGrid, v: &Potential) -> Result<Outcome, CliError> {
    let route = cfg.solution_route();
    let mut report = Report::new(&["eps", "i", "j", "Re", "Im"]);
    report.meta = meta(Command::Gram, cfg, grid);
    report.meta.insert("route".into(), route.to_string().into());
    let mut json_rows = Vec::new();
    let mut summary = Vec::new();
    for &e in &cfg.eps_list {
        let m = verify::moller_gram_with(grid, v, eps_param(e)?, route)?;
        let n = m.gram.dim();
        let mut matrix = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let z = to_c64(m.gram[(i, j)]);
                report.push(vec![e.into(), i.into(), j.into(), z.re.into(), z.im.into()]);
                row.push(complex_json(z.re, z.im));
            }
            matrix.push(Value::Array(row));
        }
        let mut obj = Map::new();
        obj.insert("eps".into(), e.into());
        obj.insert("deviation".into(), m.deviation.into());
        obj.insert("matrix".into(), Value::Array(matrix));
        json_rows.push(Value::Object(obj));
        summary.push(format!(
            "gram: eps={} deviation={}",
            fmt_float(e),
            fmt_float(m.deviation)
        ));
    }
    report.json_rows = Some(json_rows);
    Ok(Outcome {
        report,
        summary,
        failures: Vec::new(),
    })
}

fn run_solve(cfg: &ExperimentConfig, grid: &ModelGrid, v: &Potential) -> Result<Outcome, CliError> {
    let incident = cfg
        .incident
        .ok_or_else(|| CliError::Usage("solve needs an incident index (--index or `incident`)".into()))?;
    let route = cfg.solution_route();
    let sep = v.as_separable();
    let mut columns = vec!["eps", "i", "k", "Re_psi", "Im_psi", "Re_T", "Im_T"];
    if sep.is_some() {
        columns.extend(["Re_fredholm", "Im_fredholm"]);
    }
    let mut report = Report::new(&columns);
    report.meta = meta(Command::Solve, cfg, grid);
    report.meta.insert("route".into(), route.to_string().into());
    report.meta.insert("incident".into(), incident.into());
    let mut summary = Vec::new();
    for &e in &cfg.eps_list {
        let eps = eps_param(e)?;
        let sol = lsl::solve(grid, v, incident, eps, route)?;
        let psi = sol.psi().to_c64();
        let t = v.apply(sol.psi()).to_c64();
        let delta = sep.map(|s| {
            to_c64(
                sol.fredholm()
                    .unwrap_or_else(|| fredholm_determinant(grid, s, sol.energy(), eps)),
            )
        });
        for i in 0..grid.size() {
            let mut row = vec![
                e.into(),
                i.into(),
                grid.momenta()[i].into(),
                psi[i].re.into(),
                psi[i].im.into(),
                t[i].re.into(),
                t[i].im.into(),
            ];
            if let Some(d) = delta {
                row.extend([d.re.into(), d.im.into()]);
            }
            report.push(row);
        }
        summary.push(match delta {
            Some(d) => format!(
                "solve: eps={} incident={incident} fredholm={}{:+}i",
                fmt_float(e),
                d.re,
                d.im
            ),
            None => format!("solve: eps={} incident={incident}", fmt_float(e)),
        });
    }
    Ok(Outcome {
        report,
        summary,
        failures: Vec::new(),
    })
}
