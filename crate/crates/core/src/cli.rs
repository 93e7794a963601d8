//! The `balance` command-line tool.
//!
//! Exit codes: 0 balanced and nondegenerate (or success), 1 balanced but
//! degenerate, 2 unbalanced, 3 malformed input or usage, 4 colliding
//! points, 5 a solver failed to converge.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::configuration::{
    check_diagonal_dominance, force_vector, has_real_sign_pattern, nondegeneracy, ConfigType, Configuration,
};
use crate::error::{Error, Result};
use crate::io;
use crate::qbalance::q_report;
use crate::qbalance::LevelPolynomials;
use crate::solvers::{
    concat_seed, generate_1n, solve_2n, solve_34, solve_general, solve_general_random, BranchStatus, NewtonOptions,
    Solve34Options, SolutionSet, DEFAULT_SEED, RANK_TOL, REASON_NONCONVERGENT, SOLUTION_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BALANCED_ONLY: i32 = 1;
pub const EXIT_UNBALANCED: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;
pub const EXIT_COLLISION: i32 = 4;
pub const EXIT_NONCONVERGENCE: i32 = 5;

pub const MAX_SWEEP_N: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "balance", version, about = "Find and verify balanced node configurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify a configuration file: balance, Q, Jacobian rank, genus.
    Check(CheckArgs),
    /// Run one of the solvers and write the solutions as JSON files.
    Solve(SolveArgs),
    /// Export node locations `log p` as JSON, CSV or SVG.
    Nodes(NodesArgs),
    /// Run the (2,n) solver for a range of n and tabulate the counts.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub path: PathBuf,
    /// Force residual below which the configuration counts as balanced.
    #[arg(long, default_value_t = SOLUTION_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(subcommand)]
    pub family: Family,
    /// Directory for the solution files and index.json.
    #[arg(long, global = true, default_value = "solutions")]
    pub out: PathBuf,
    /// Drop solutions equivalent to an earlier one.
    #[arg(long, global = true, action = ArgAction::Set, default_value_t = true)]
    pub dedup: bool,
    /// Seed for the randomized solvers.
    #[arg(long, global = true, env = "BALANCE_RNG_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// The (1,n) family.
    #[command(name = "1n")]
    OneN { n: usize },
    /// Type (2,n) via the closing polynomial in alpha.
    #[command(name = "2n")]
    TwoN { n: usize },
    /// Type (3,4) via the bivariate reduction.
    #[command(name = "34")]
    ThreeFour,
    /// Newton from a seed file or from random seeds.
    General {
        /// Comma-separated level counts, e.g. 2,3.
        #[arg(value_parser = parse_type)]
        ctype: ConfigType,
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        attempts: usize,
        #[arg(long, default_value_t = NewtonOptions::default().max_iter)]
        max_iter: usize,
    },
    /// Newton from juxtaposed (1,n) configurations.
    Concat {
        /// Balanced (1,n) configuration files.
        parts: Vec<PathBuf>,
        /// Build the parts from the (1,n) family instead, e.g. 2,2.
        #[arg(long, value_delimiter = ',', conflicts_with = "parts")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = NewtonOptions::default().max_iter)]
        max_iter: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NodeFormat {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct NodesArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value_t = NodeFormat::Csv)]
    pub format: NodeFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub n_min: usize,
    pub n_max: usize,
    /// Also write the table as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn parse_type(s: &str) -> std::result::Result<ConfigType, String> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let counts = inner
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("bad level count {x:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    ConfigType::new(counts).map_err(|e| e.to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CollidingPoints { .. } | Error::RepeatedRoot { .. } => EXIT_COLLISION,
        Error::NonConvergence { .. } | Error::NoSolutionsFound | Error::Singular => EXIT_NONCONVERGENCE,
        _ => EXIT_MALFORMED,
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor();
    if (-4.0..6.0).contains(&e) {
        format!("{:.*}", (5.0 - e) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One configuration's certificate, recomputed from its points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "type")]
    pub ctype: String,
    pub branch: String,
    pub residual: f64,
    /// Relative size of Q; absent for one level.
    pub q_norm: Option<f64>,
    pub nondegenerate: bool,
    pub genus: usize,
}

impl ReportRow {
    pub fn compute(branch: &str, c: &Configuration) -> Result<Self> {
        let residual = force_vector(c)?.residual;
        let q_norm = if c.ctype().levels() >= 2 {
            Some(q_report(&LevelPolynomials::from_points(c))?.relative)
        } else {
            None
        };
        Ok(ReportRow {
            ctype: c.ctype().to_string(),
            branch: branch.to_string(),
            residual,
            q_norm,
            nondegenerate: nondegeneracy(c, RANK_TOL)?.is_nondegenerate(),
            genus: c.ctype().genus(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub digest: String,
    pub rows: Vec<ReportRow>,
    pub wall_time: Duration,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        writeln!(f, "input sha256: {}", self.digest)?;
        if !self.rows.is_empty() {
            writeln!(
                f,
                "{:<14} {:<40} {:>12} {:>12} {:>6} {:>5}",
                "type", "branch", "residual", "Q-norm", "nondeg", "genus"
            )?;
            for r in &self.rows {
                writeln!(
                    f,
                    "{:<14} {:<40} {:>12} {:>12} {:>6} {:>5}",
                    r.ctype,
                    r.branch,
                    sig6(r.residual),
                    r.q_norm.map_or("-".to_string(), sig6),
                    if r.nondegenerate { "yes" } else { "no" },
                    r.genus
                )?;
            }
        }
        write!(f, "wall time: {:.3} s", self.wall_time.as_secs_f64())
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
        }
    };
    let echo = std::iter::once("balance".into())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy()))
        .collect::<Vec<_>>()
        .join(" ");
    let start = Instant::now();
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a, echo, start),
        Command::Solve(a) => cmd_solve(&a, echo, start),
        Command::Nodes(a) => cmd_nodes(&a),
        Command::Sweep(a) => cmd_sweep(&a, echo, start),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_input(path: &Path) -> Result<(Configuration, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Malformed {
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    let (c, _) = io::configuration_from_json(&text)?;
    Ok((c, bytes))
}

fn cmd_check(a: &CheckArgs, echo: String, start: Instant) -> Result<i32> {
    let (c, bytes) = read_input(&a.path)?;
    if let Some(e) = c.interacting_collision() {
        return Err(e);
    }
    let t = c.ctype();
    let fv = force_vector(&c)?;
    let nd = nondegeneracy(&c, RANK_TOL)?;
    let q = if t.levels() >= 2 {
        Some(q_report(&LevelPolynomials::from_points(&c))?)
    } else {
        None
    };
    let row = ReportRow::compute("input", &c)?;
    let balanced = fv.residual < a.tol;

    println!("type {}  levels {}  points {}  genus {}", t, t.levels(), t.total(), t.genus());
    if !t.has_even_levels() {
        println!("warning: odd number of levels; the Q criterion and the surface construction assume an even count");
    }
    println!("force residual: {}", sig6(fv.residual));
    match &q {
        Some(q) => println!(
            "max |Q coefficient|: {}  (relative {})",
            sig6(q.max_abs_coeff()),
            sig6(q.relative)
        ),
        None => println!("max |Q coefficient|: not defined for one level"),
    }
    println!("jacobian rank: {}  (m-1 = {})", nd.rank, nd.expected);
    if has_real_sign_pattern(&c) {
        let holds = check_diagonal_dominance(&c)?;
        println!("diagonal dominance: {}", if holds { "holds" } else { "fails" });
    }
    let verdict = match (balanced, nd.is_nondegenerate()) {
        (true, true) => "balanced, nondegenerate",
        (true, false) => "balanced, degenerate",
        (false, _) => "unbalanced",
    };
    println!("verdict: {verdict}");
    let report = RunReport {
        command: echo,
        digest: sha256_hex(&bytes),
        rows: vec![row],
        wall_time: start.elapsed(),
    };
    println!("{report}");
    Ok(match (balanced, nd.is_nondegenerate()) {
        (true, true) => EXIT_OK,
        (true, false) => EXIT_BALANCED_ONLY,
        (false, _) => EXIT_UNBALANCED,
    })
}

fn newton_set(ctype: ConfigType, dedup: bool, label: String, c: Configuration) -> SolutionSet {
    let mut set = SolutionSet::new(ctype, dedup);
    set.offer("general", label, None, c);
    set
}

fn cmd_solve(a: &SolveArgs, echo: String, start: Instant) -> Result<i32> {
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let mut hashed = echo.clone().into_bytes();
    let set = match &a.family {
        Family::OneN { n } => {
            let c = generate_1n(*n)?;
            let mut set = SolutionSet::new(c.ctype().clone(), a.dedup);
            set.offer("1n", format!("n={n}"), None, c);
            set
        }
        Family::TwoN { n } => solve_2n(*n, a.dedup)?,
        Family::ThreeFour => solve_34(&Solve34Options {
            seed,
            dedup: a.dedup,
            ..Solve34Options::default()
        })?,
        Family::General {
            ctype,
            from,
            attempts,
            max_iter,
        } => {
            let opts = NewtonOptions {
                max_iter: *max_iter,
                ..NewtonOptions::default()
            };
            let (report, label) = match from {
                Some(path) => {
                    let (c, bytes) = read_input(path)?;
                    hashed.extend(bytes);
                    if c.ctype() != ctype {
                        return Err(Error::InvalidConfiguration(format!(
                            "seed file has type {}, expected {ctype}",
                            c.ctype()
                        )));
                    }
                    let label = format!("from={}", path.display());
                    (solve_general(&c, &opts).map_err(|e| named(&label, e))?, label)
                }
                None => {
                    let label = format!("seed={seed}");
                    let r = solve_general_random(ctype, seed, *attempts, &opts).map_err(|e| named(&label, e))?;
                    (r, label)
                }
            };
            newton_set(ctype.clone(), a.dedup, label, report.configuration)
        }
        Family::Concat { parts, ns, max_iter } => {
            let (configs, label) = if parts.is_empty() {
                let configs = ns.iter().map(|&n| generate_1n(n)).collect::<Result<Vec<_>>>()?;
                let label = ns.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
                (configs, format!("concat={label}"))
            } else {
                let mut configs = Vec::new();
                for p in parts {
                    let (c, bytes) = read_input(p)?;
                    hashed.extend(bytes);
                    configs.push(c);
                }
                let label = configs.iter().map(|c| c.ctype().to_string()).collect::<Vec<_>>().join("+");
                (configs, format!("concat={label}"))
            };
            let seed_cfg = concat_seed(&configs)?;
            let opts = NewtonOptions {
                max_iter: *max_iter,
                ..NewtonOptions::default()
            };
            let report = solve_general(&seed_cfg, &opts).map_err(|e| named(&label, e))?;
            newton_set(seed_cfg.ctype().clone(), a.dedup, label, report.configuration)
        }
    };

    println!("{:<40} {:>14} {:>12}  status", "branch", "alpha", "residual");
    for b in &set.branches {
        let alpha = match b.alpha {
            Some(z) if z.im == 0.0 => sig6(z.re),
            Some(z) => format!("{}{:+}i", sig6(z.re), sig6(z.im)),
            None => "-".into(),
        };
        println!(
            "{:<40} {:>14} {:>12}  {}",
            b.label,
            alpha,
            b.residual.map_or("-".into(), sig6),
            b.status
        );
    }

    let mut files = Vec::new();
    let mut rows = Vec::new();
    for (i, s) in set.solutions.iter().enumerate() {
        let name = format!("sol_{:02}.json", i + 1);
        let text = io::configuration_to_json(&s.configuration, Some(io::provenance_meta(&s.provenance)));
        io::write_atomic(&a.out.join(&name), text.as_bytes())?;
        rows.push(ReportRow::compute(&s.provenance.branch, &s.configuration)?);
        files.push(name);
    }
    io::write_atomic(&a.out.join("index.json"), io::solution_index_json(&set, &files).as_bytes())?;
    println!("wrote {} solution(s) to {}", files.len(), a.out.display());

    let report = RunReport {
        command: echo,
        digest: sha256_hex(&hashed),
        rows,
        wall_time: start.elapsed(),
    };
    println!("{report}");

    let failed: Vec<&str> = set
        .branches
        .iter()
        .filter(|b| b.status == BranchStatus::Rejected(REASON_NONCONVERGENT.into()))
        .map(|b| b.label.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!("error: no convergence on branch {}", failed.join(", "));
        return Ok(EXIT_NONCONVERGENCE);
    }
    if set.is_empty() {
        eprintln!("error: {}", Error::NoSolutionsFound);
        return Ok(EXIT_NONCONVERGENCE);
    }
    Ok(EXIT_OK)
}

fn named(label: &str, e: Error) -> Error {
    match e {
        Error::NonConvergence { .. } | Error::NoSolutionsFound => {
            eprintln!("branch {label} failed");
            e
        }
        e => e,
    }
}

fn cmd_nodes(a: &NodesArgs) -> Result<i32> {
    let (c, _) = read_input(&a.path)?;
    if let Some(e) = c.interacting_collision() {
        return Err(e);
    }
    let text = match a.format {
        NodeFormat::Json => io::nodes_json(&c),
        NodeFormat::Csv => io::nodes_csv(&c),
        NodeFormat::Svg => io::nodes_svg(&c),
    };
    match &a.out {
        Some(path) => io::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

/// One line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    /// Deduplicated solutions, cross-type lifts included.
    pub total: usize,
    /// Solutions that are not lifts of a smaller type.
    pub new: usize,
    /// Solutions with level one positive real and level two negative real.
    pub sign_pattern: usize,
    pub nondegenerate: Vec<bool>,
    pub error: Option<String>,
}

pub fn sweep_row(n: usize) -> SweepRow {
    match solve_2n(n, true) {
        Ok(set) => SweepRow {
            n,
            total: set.len(),
            new: set.new_solutions().count(),
            sign_pattern: set.configurations().filter(|c| has_real_sign_pattern(c)).count(),
            nondegenerate: set.solutions.iter().map(|s| s.provenance.nondegenerate).collect(),
            error: set
                .branches
                .iter()
                .find(|b| b.status == BranchStatus::Rejected(REASON_NONCONVERGENT.into()))
                .map(|b| format!("no convergence on branch {}", b.label)),
        },
        Err(e) => SweepRow {
            n,
            total: 0,
            new: 0,
            sign_pattern: 0,
            nondegenerate: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

fn cmd_sweep(a: &SweepArgs, echo: String, start: Instant) -> Result<i32> {
    if !(2 <= a.n_min && a.n_min <= a.n_max && a.n_max <= MAX_SWEEP_N) {
        return Err(Error::InvalidType(format!(
            "sweep needs 2 <= n_min <= n_max <= {MAX_SWEEP_N}"
        )));
    }
    println!("{:>3} {:>6} {:>4} {:>13}  nondegenerate", "n", "total", "new", "sign-pattern");
    let mut rows = Vec::new();
    for n in a.n_min..=a.n_max {
        let row = sweep_row(n);
        let flags = row
            .nondegenerate
            .iter()
            .map(|&b| if b { "yes" } else { "no" })
            .collect::<Vec<_>>()
            .join(",");
        print!("{:>3} {:>6} {:>4} {:>13}  {}", n, row.total, row.new, row.sign_pattern, flags);
        match &row.error {
            Some(e) => println!("  ({e})"),
            None => println!(),
        }
        rows.push(row);
    }
    if let Some(path) = &a.report {
        let json = serde_json::json!({ "command": echo, "rows": rows });
        let mut text = serde_json::to_string_pretty(&json).expect("plain data serializes");
        text.push('\n');
        io::write_atomic(path, text.as_bytes())?;
    }
    let report = RunReport {
        command: echo,
        digest: sha256_hex(format!("{}..{}", a.n_min, a.n_max).as_bytes()),
        rows: Vec::new(),
        wall_time: start.elapsed(),
    };
    println!("{report}");
    Ok(EXIT_OK)
}
