//! Command-line front end.
//!
//! Configuration comes from an optional `key = value` file and from flags;
//! flags win. A run writes `residuals.csv`, `schedule.txt`, `field.csv` and
//! `report.txt` into the output directory. With `--table`, one solve per
//! partition and preconditioner is summarized in `table.csv` instead.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::discretization::{Disk, ImpedanceSpec, ProblemSpec};
use crate::driver::{solve_problem, with_workers, SolveReport};
use crate::error::{Error, Result};
use crate::indexing::Partition;
use crate::krylov::GmresOptions;
use crate::preconditioner::{PreconditionerKind, SeamMode, SweepConfig};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser, Default)]
#[command(
    name = "sweepdd",
    about = "Sweeping preconditioners for checkerboard Helmholtz decompositions"
)]
pub struct Args {
    /// Subdomain columns.
    #[arg(long)]
    pub n1: Option<String>,
    /// Subdomain rows.
    #[arg(long)]
    pub n2: Option<String>,
    /// Cells per subdomain side.
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    /// Subdomain side length.
    #[arg(long)]
    pub side: Option<String>,
    /// none, sp or bsp.
    #[arg(long)]
    pub precond: Option<String>,
    /// dedup or literal.
    #[arg(long = "bsp-seam")]
    pub bsp_seam: Option<String>,
    #[arg(long = "bsp-no-intermediate-residual")]
    pub bsp_no_intermediate_residual: bool,
    /// Count the BSP intermediate residual as a sequential step.
    #[arg(long = "count-residual-steps")]
    pub count_residual_steps: bool,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub maxit: Option<String>,
    #[arg(long)]
    pub workers: Option<String>,
    #[arg(long = "mono-check")]
    pub mono_check: bool,
    #[arg(long = "no-scatterer")]
    pub no_scatterer: bool,
    #[arg(long = "scatterer-radius")]
    pub scatterer_radius: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated partitions such as `5x5,5x10`; writes table.csv.
    #[arg(long)]
    pub table: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n1: usize,
    pub n2: usize,
    pub cells: usize,
    pub kappa: f64,
    pub side: f64,
    pub scatterer: Option<Disk>,
    pub sweep: SweepConfig,
    pub tol: f64,
    pub maxit: usize,
    pub workers: usize,
    pub mono_check: bool,
    pub out: PathBuf,
    pub table: Option<Vec<(usize, usize)>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let kappa = 2.0 * std::f64::consts::PI;
        Self {
            n1: 5,
            n2: 5,
            cells: ProblemSpec::default_cells(kappa, 2.5),
            kappa,
            side: 2.5,
            scatterer: Some(Disk {
                center: (0.0, 0.0),
                radius: 1.0,
            }),
            sweep: SweepConfig::default(),
            tol: 1e-6,
            maxit: 200,
            workers: 1,
            mono_check: false,
            out: PathBuf::from("out"),
            table: None,
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(config_err(
            key,
            format!("expected a boolean, got `{other}`"),
        )),
    }
}

pub fn parse_partitions(value: &str) -> Result<Vec<(usize, usize)>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (a, b) = item
                .split_once(['x', 'X'])
                .ok_or_else(|| config_err("table", format!("expected N1xN2, got `{item}`")))?;
            Ok((parse_num("table", a)?, parse_num("table", b)?))
        })
        .collect()
}

/// Parses the `key = value` file format. `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(&format!("line {}", lineno + 1), "expected `key = value`"))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n1" => self.n1 = parse_num(key, value)?,
            "n2" => self.n2 = parse_num(key, value)?,
            "cells" => self.cells = parse_num(key, value)?,
            "kappa" => self.kappa = parse_num(key, value)?,
            "side" => self.side = parse_num(key, value)?,
            "precond" => {
                self.sweep.kind = match value.trim() {
                    "none" => PreconditionerKind::None,
                    "sp" => PreconditionerKind::Sp,
                    "bsp" => PreconditionerKind::Bsp,
                    other => {
                        return Err(config_err(
                            key,
                            format!("expected none, sp or bsp, got `{other}`"),
                        ))
                    }
                }
            }
            "bsp_seam" => {
                self.sweep.bsp_seam = match value.trim() {
                    "dedup" => SeamMode::Dedup,
                    "literal" => SeamMode::Literal,
                    other => {
                        return Err(config_err(
                            key,
                            format!("expected dedup or literal, got `{other}`"),
                        ))
                    }
                }
            }
            "bsp_no_intermediate_residual" => {
                self.sweep.bsp_intermediate_residual = !parse_bool(key, value)?
            }
            "count_residual_steps" => self.sweep.count_residual_steps = parse_bool(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "maxit" => self.maxit = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "mono_check" => self.mono_check = parse_bool(key, value)?,
            "no_scatterer" => {
                if parse_bool(key, value)? {
                    self.scatterer = None;
                }
            }
            "scatterer_radius" => {
                let radius = parse_num(key, value)?;
                let center = self.scatterer.map_or((0.0, 0.0), |d| d.center);
                self.scatterer = Some(Disk { center, radius });
            }
            "out" => self.out = PathBuf::from(value.trim()),
            "table" => self.table = Some(parse_partitions(value)?),
            other => return Err(config_err(other, "unknown key")),
        }
        Ok(())
    }

    /// File values first, then flags.
    pub fn from_args(args: &Args) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut cells_given = false;
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err("config", format!("{}: {e}", path.display())))?;
            for (k, v) in parse_config_file(&text)? {
                cells_given |= k == "cells";
                cfg.set(&k, &v)?;
            }
        }
        let flags: [(&str, &Option<String>); 10] = [
            ("n1", &args.n1),
            ("n2", &args.n2),
            ("cells", &args.cells),
            ("kappa", &args.kappa),
            ("side", &args.side),
            ("precond", &args.precond),
            ("bsp_seam", &args.bsp_seam),
            ("tol", &args.tol),
            ("maxit", &args.maxit),
            ("workers", &args.workers),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cells_given |= k == "cells";
                cfg.set(k, v)?;
            }
        }
        if let Some(r) = &args.scatterer_radius {
            cfg.set("scatterer_radius", r)?;
        }
        if args.no_scatterer {
            cfg.scatterer = None;
        }
        if args.bsp_no_intermediate_residual {
            cfg.sweep.bsp_intermediate_residual = false;
        }
        if args.count_residual_steps {
            cfg.sweep.count_residual_steps = true;
        }
        if args.mono_check {
            cfg.mono_check = true;
        }
        if let Some(out) = &args.out {
            cfg.out = out.clone();
        }
        if let Some(t) = &args.table {
            cfg.set("table", t)?;
        }
        if !cells_given {
            cfg.cells = ProblemSpec::default_cells(cfg.kappa, cfg.side);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 {
            return Err(config_err("n1", "must be at least 1"));
        }
        if self.n2 == 0 {
            return Err(config_err("n2", "must be at least 1"));
        }
        if self.cells < 4 {
            return Err(config_err("cells", "must be at least 4"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(config_err("kappa", "must be positive"));
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(config_err("side", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(config_err("tol", "must be positive"));
        }
        if self.maxit == 0 {
            return Err(config_err("maxit", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(config_err("workers", "must be at least 1"));
        }
        if let Some(d) = self.scatterer {
            if !(d.radius > 0.0) {
                return Err(config_err("scatterer_radius", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> ProblemSpec {
        let mut spec = ProblemSpec::with_side(self.kappa, self.side, self.cells);
        spec.scatterer = self.scatterer;
        spec
    }

    pub fn gmres_options(&self) -> GmresOptions {
        GmresOptions {
            tol: self.tol,
            maxit: self.maxit,
            record_history: true,
        }
    }

    fn with_partition(&self, n1: usize, n2: usize, kind: PreconditionerKind) -> Self {
        Self {
            n1,
            n2,
            sweep: SweepConfig { kind, ..self.sweep },
            table: None,
            ..self.clone()
        }
    }
}

/// Solves one configuration on a pool of `config.workers` threads.
pub fn solve(config: &RunConfig) -> Result<SolveReport> {
    let partition = Partition::new(config.n1, config.n2)?;
    let spec = config.problem();
    let imp = ImpedanceSpec::for_wavenumber(spec.kappa);
    let sweep = config.sweep;
    let opts = config.gmres_options();
    let mono = config.mono_check;
    with_workers(config.workers, || {
        solve_problem(&spec, &imp, &partition, &sweep, &opts, mono)
    })?
}

pub fn residuals_csv(report: &SolveReport) -> String {
    let mut s = String::from("iteration,relative_residual\n");
    for (k, r) in report.residual_history.iter().enumerate() {
        writeln!(s, "{k},{r:e}").unwrap();
    }
    s
}

pub fn field_csv(config: &RunConfig, report: &SolveReport) -> String {
    let spec = config.problem();
    let f = &report.field;
    let mut s = String::with_capacity(f.values.len() * 64);
    writeln!(
        s,
        "# kappa={} N1={} N2={} n={}",
        config.kappa, config.n1, config.n2, config.cells
    )
    .unwrap();
    s.push_str("x,y,re,im\n");
    for by in 0..f.ny {
        for ax in 0..f.nx {
            let (x, y) = spec.cell_center(ax, by);
            let v = f.get(ax, by);
            writeln!(s, "{x:e},{y:e},{:e},{:e}", v.re, v.im).unwrap();
        }
    }
    s
}

/// Report summary without timing, so that it is reproducible byte for byte.
pub fn report_txt(config: &RunConfig, report: &SolveReport) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "partition = {}x{}", config.n1, config.n2).unwrap();
    writeln!(w, "cells_per_side = {}", config.cells).unwrap();
    writeln!(w, "kappa = {}", config.kappa).unwrap();
    writeln!(w, "precond = {}", config.sweep.kind.name()).unwrap();
    if config.sweep.kind == PreconditionerKind::Bsp {
        writeln!(w, "bsp_seam = {}", config.sweep.bsp_seam.name()).unwrap();
        writeln!(
            w,
            "bsp_intermediate_residual = {}",
            config.sweep.bsp_intermediate_residual
        )
        .unwrap();
        writeln!(
            w,
            "count_residual_steps = {}",
            config.sweep.count_residual_steps
        )
        .unwrap();
    }
    writeln!(w, "tol = {:e}", config.tol).unwrap();
    writeln!(w, "interface_unknowns = {}", report.interface_unknowns).unwrap();
    writeln!(w, "converged = {}", report.converged).unwrap();
    writeln!(w, "iterations = {}", report.iterations).unwrap();
    writeln!(w, "ns = {}", report.steps_per_iteration).unwrap();
    writeln!(
        w,
        "total_sequential_steps = {}",
        report.total_sequential_steps
    )
    .unwrap();
    let last = report.residual_history.last().copied().unwrap_or(0.0);
    writeln!(w, "final_relative_residual = {last:e}").unwrap();
    writeln!(w, "interface_residual = {:e}", report.interface_residual).unwrap();
    if let Some(e) = report.error_vs_mono {
        writeln!(w, "error_vs_mono_max_rel = {:e}", e.max_rel).unwrap();
        writeln!(w, "error_vs_mono_l2_rel = {:e}", e.l2_rel).unwrap();
    }
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)
        .map_err(|e| config_err("out", format!("{}: {e}", dir.join(name).display())))
}

/// Runs one experiment and writes its artifacts. Returns the exit status.
pub fn run(config: &RunConfig) -> Result<(i32, SolveReport)> {
    let report = solve(config)?;
    fs::create_dir_all(&config.out)
        .map_err(|e| config_err("out", format!("{}: {e}", config.out.display())))?;
    write_file(&config.out, "residuals.csv", &residuals_csv(&report))?;
    write_file(&config.out, "schedule.txt", &report.schedule.to_text())?;
    write_file(&config.out, "field.csv", &field_csv(config, &report))?;
    write_file(&config.out, "report.txt", &report_txt(config, &report))?;
    let code = if report.converged {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    };
    Ok((code, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub n1: usize,
    pub n2: usize,
    pub precond: PreconditionerKind,
    pub outcome: std::result::Result<TableEntry, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub ni: usize,
    pub ns: usize,
    pub t: f64,
    pub converged: bool,
}

pub const TABLE_HEADER: &str = "partition,precond,ni,ns,t,converged,status";

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for r in rows {
        let part = format!("{}x{}", r.n1, r.n2);
        match &r.outcome {
            Ok(e) => writeln!(
                s,
                "{part},{},{},{},{:.3},{},ok",
                r.precond.name(),
                e.ni,
                e.ns,
                e.t,
                e.converged
            ),
            Err(msg) => writeln!(
                s,
                "{part},{},,,,false,error: {}",
                r.precond.name(),
                msg.replace(',', ";")
            ),
        }
        .unwrap();
    }
    s
}

/// One SP and one BSP solve per partition. Failures are recorded in their
/// row and do not stop the run.
pub fn experiment_table(template: &RunConfig, partitions: &[(usize, usize)]) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for &(n1, n2) in partitions {
        for kind in [PreconditionerKind::Sp, PreconditionerKind::Bsp] {
            let cfg = template.with_partition(n1, n2, kind);
            let outcome = cfg
                .validate()
                .and_then(|_| solve(&cfg))
                .map(|r| TableEntry {
                    ni: r.iterations,
                    ns: r.steps_per_iteration,
                    t: r.wall_time,
                    converged: r.converged,
                })
                .map_err(|e| e.to_string());
            rows.push(TableRow {
                n1,
                n2,
                precond: kind,
                outcome,
            });
        }
    }
    rows
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_CONVERGED
            };
        }
    };
    let config = match RunConfig::from_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    if let Some(partitions) = &config.table {
        let rows = experiment_table(&config, partitions);
        let text = table_csv(&rows);
        if let Err(e) = fs::create_dir_all(&config.out)
            .map_err(|e| config_err("out", e.to_string()))
            .and_then(|_| write_file(&config.out, "table.csv", &text))
        {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        print!("{text}");
        return EXIT_CONVERGED;
    }

    match run(&config) {
        Ok((code, report)) => {
            print!("{}", report_txt(&config, &report));
            println!("wall_time_s = {:.3}", report.wall_time);
            code
        }
        Err(e @ Error::Breakdown { .. }) => {
            eprintln!("error: {e}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
