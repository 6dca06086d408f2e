//! The `percoflow` command line.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numerical
//! non-convergence, 4 failed check in `verify`.

mod input;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::catalog;
use crate::cells;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exchange::{self, classify, default_truncation};
use crate::graphs::{Family, GraphWindow};
use crate::percolation::{self, CensusConfig, CENSUS_LABEL};
use crate::stats::{empirical_law, total_variation};
use crate::stream::{run_trials, stream, SeedSplitter};
use crate::tree::{self, BRANCHING_LABEL, DEFAULT_POPULATION_CAP, DEFAULT_PROBE_BUDGET};

pub use input::{parse_dist, RunConfig};
pub use output::{render_csv, Report, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } | Error::Saturation { .. } => EXIT_NONCONVERGENCE,
        Error::CouplingMismatch { .. } => EXIT_CHECK_FAILED,
        _ => EXIT_INVALID,
    }
}

#[derive(Parser, Debug)]
#[command(name = "percoflow", version, about = "Boolean percolation and the random exchange chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// The chain X_{n+1} = max(X_n - 1, Y_{n+1}).
    #[command(subcommand)]
    Exchange(ExchangeCmd),
    /// Covered sets on lattices and trees.
    #[command(subcommand)]
    Perc(PercCmd),
    /// Depth recurrence, mean matrix and branching on the n-ary tree.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Closed-form reference laws.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Property checks; exit 4 on failure.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Inline spec (e.g. `geometric:p=0.5`) or JSON spec file.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Window side length.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    arity: Option<usize>,
    /// Matrix truncation size.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path; the JSON summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file with run parameters; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum ExchangeCmd {
    /// Simulate one path: columns n,y,x.
    Path {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: usize,
    },
    /// Stationary measure: columns n,tau,tau_normalized.
    Stationary {
        #[command(flatten)]
        common: Common,
    },
    /// Recurrence class and the series test: columns m,term,partial_sum.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Perron root of a truncation of P.
    Spectral {
        #[command(flatten)]
        common: Common,
    },
    /// Occupation law of one path against the stationary law: columns n,empirical,tau.
    Occupation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: usize,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FamilyArg {
    Natural,
    Integer,
    Tree,
}

#[derive(Args, Debug, Clone)]
struct WindowArgs {
    #[arg(long, value_enum, default_value = "natural")]
    family: FamilyArg,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Extra layers below 0 on Z^n windows (default: the side length).
    #[arg(long)]
    margin: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum PercCmd {
    /// One covered set: columns vertex,y,reach,covered,observed.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Uncovered counts per trial: columns trial,uncovered,censored[,covered_clusters,uncovered_clusters].
    Census {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        clusters: bool,
    },
    /// q_m = P[m uncovered] on N_0: columns m,q.
    Q {
        #[command(flatten)]
        common: Common,
    },
    /// Whether Z^n is covered almost surely.
    Criterion {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Bound on missed outside coverage for a Z^n window.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        margin: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum TreeCmd {
    /// Depth-uncovered probabilities: columns m,r_analytic,r_empirical,stderr.
    R {
        #[command(flatten)]
        common: Common,
    },
    /// rho(M) against 1/n.
    Criterion {
        #[command(flatten)]
        common: Common,
    },
    /// Branching runs: columns trial,survived,saturated,extinct_at,final_total.
    Branching {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        generations: usize,
        #[arg(long, default_value_t = DEFAULT_POPULATION_CAP)]
        cap: u64,
    },
    /// Largest root of the two-point characteristic polynomial against rho(M).
    Charpoly {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Closed form 1 - exp(-c 2^m) against the recurrence: columns m,log_recurrence,log_closed_form.
    Logistic {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    /// Urn stopping time: columns k,tau,empirical.
    Naor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: u64,
    },
    /// Euler distribution: columns n,tau.
    Euler {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: f64,
    },
    /// Limit law of X_n/n: columns y,limit,exact,empirical.
    InverseBeta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        y: Vec<f64>,
        /// Path length n for the finite-n columns.
        #[arg(long)]
        steps: Option<u64>,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Covered set of N_0 against the chain's positive states.
    #[arg(long)]
    coupling: bool,
    /// Stationary recursion and left-eigenvector checks.
    #[arg(long)]
    stationary: bool,
    /// rho(M) against the characteristic polynomial root.
    #[arg(long)]
    spectral: bool,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
}

/// Resolved parameters plus the command-specific extras echoed into outputs.
struct Ctx {
    cfg: RunConfig,
    extra: Map<String, Value>,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let flags = RunConfig {
            dist: common.dist.as_deref().map(parse_dist).transpose()?,
            seed: common.seed,
            trials: common.trials,
            window: common.window,
            depth: common.depth,
            arity: common.arity,
            size: common.size,
            tol: common.tol,
            workers: common.workers,
        };
        let mut cfg = match &common.config {
            Some(path) => flags.or(RunConfig::load(path)?),
            None => flags,
        };
        cfg.seed = Some(cfg.seed());
        Ok(Self {
            cfg,
            extra: Map::new(),
        })
    }

    fn set(&mut self, key: &str, value: impl serde::Serialize) {
        self.extra
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Everything that determines the output; worker count excluded.
    fn echo(&self) -> Value {
        let mut cfg = self.cfg.clone();
        cfg.workers = None;
        let mut v = serde_json::to_value(cfg).unwrap_or(Value::Null);
        if let Value::Object(map) = &mut v {
            for (k, x) in &self.extra {
                map.insert(k.clone(), x.clone());
            }
        }
        v
    }

    fn dist(&self) -> Result<&DistributionSpec> {
        self.cfg.dist()
    }

    fn trials(&self, default: u64) -> u64 {
        self.cfg.trials.unwrap_or(default)
    }

    fn arity(&self) -> usize {
        self.cfg.arity.unwrap_or(2)
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    match dispatch(cli.command) {
        Ok((name, report, ctx, common, failed)) => {
            let wall = start.elapsed().as_secs_f64();
            let format = common.format.map(|f| match f {
                Format::Csv => "csv",
                Format::Json => "json",
            });
            if let Err(e) = output::emit(&name, &report, &ctx.echo(), common.out.as_deref(), format, wall) {
                eprintln!("error: {e}");
                return EXIT_INVALID;
            }
            if failed {
                eprintln!("error: one or more checks failed");
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

type Dispatched = (String, Report, Ctx, Common, bool);

fn dispatch(command: Command) -> Result<Dispatched> {
    match command {
        Command::Exchange(cmd) => run_exchange(cmd),
        Command::Perc(cmd) => run_perc(cmd),
        Command::Tree(cmd) => run_tree(cmd),
        Command::Catalog(cmd) => run_catalog(cmd),
        Command::Verify(args) => run_verify(args),
    }
}

fn done(name: &str, report: Report, ctx: Ctx, common: Common) -> Result<Dispatched> {
    Ok((name.to_string(), report, ctx, common, false))
}

fn run_exchange(cmd: ExchangeCmd) -> Result<Dispatched> {
    match cmd {
        ExchangeCmd::Path { common, steps } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("steps", steps);
            let spec = ctx.dist()?;
            let path = exchange::simulate_path(spec, steps, &mut stream(ctx.cfg.seed(), "exchange.path", 0))?;
            let mut report = Report::new(vec!["n", "y", "x"]);
            for (n, (y, x)) in path.draws.iter().zip(&path.states).enumerate() {
                report.row(cells![n, y, x]);
            }
            let zeros = path.states.iter().filter(|&&x| x == 0).count();
            report.summary = json!({ "steps": steps, "final_state": path.states[steps], "zero_states": zeros });
            done("exchange path", report, ctx, common)
        }
        ExchangeCmd::Stationary { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let k = ctx.cfg.size.unwrap_or(default_truncation(spec) - 1);
            let tau = exchange::stationary_measure(spec, k)?;
            let mut report = Report::new(vec!["n", "tau", "tau_normalized"]);
            for (n, t) in tau.unnormalized.iter().enumerate() {
                let norm = tau.normalized.as_ref().map(|v| v[n].to_string()).unwrap_or_default();
                report.row(cells![n, t, norm]);
            }
            let residual = exchange::recursion_residual(spec, &tau.unnormalized);
            report.summary = json!({
                "normalizing_constant": tau.normalizing_constant,
                "normalizable": tau.is_normalizable(),
                "recursion_residual": residual,
            });
            done("exchange stationary", report, ctx, common)
        }
        ExchangeCmd::Classify { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let class = classify(spec);
            let series = spec.kesten_series(ctx.cfg.size.unwrap_or(1000))?;
            let mut report = Report::new(vec!["m", "term", "partial_sum"]);
            for (m, (t, s)) in series.terms.iter().zip(&series.partial_sums).enumerate() {
                report.row(cells![m, t, s]);
            }
            let class_name = serde_json::to_value(class)?;
            let verdict = serde_json::to_value(series.verdict)?;
            report.text = Some(format!(
                "class={} series={}",
                class_name.as_str().unwrap_or_default(),
                verdict.as_str().unwrap_or_default()
            ));
            report.summary = json!({ "class": class, "series_verdict": series.verdict, "mean": spec.mean() });
            done("exchange classify", report, ctx, common)
        }
        ExchangeCmd::Spectral { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let size = ctx.cfg.size.unwrap_or(default_truncation(spec));
            let est = exchange::spectral_radius(spec, size, ctx.cfg.tol())?;
            let mut report = Report::new(vec!["size", "rho", "iterations", "residual"]);
            report.row(cells![size, est.value, est.iterations, est.residual]);
            report.text = Some(format!("rho={} size={size}", est.value));
            report.summary = json!({ "rho": est.value, "iterations": est.iterations, "residual": est.residual });
            done("exchange spectral", report, ctx, common)
        }
        ExchangeCmd::Occupation { common, steps } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("steps", steps);
            let spec = ctx.dist()?;
            let k = ctx.cfg.size.unwrap_or(default_truncation(spec) - 1);
            let tau = exchange::stationary_measure(spec, k)?;
            let Some(law) = tau.normalized else {
                return Err(Error::InvalidDistribution("stationary measure is not normalizable".into()));
            };
            let path = exchange::simulate_path(spec, steps, &mut stream(ctx.cfg.seed(), "exchange.occupation", 0))?;
            let emp = empirical_law(path.states.iter().copied(), law.len());
            let tv = total_variation(&emp, &law);
            let mut report = Report::new(vec!["n", "empirical", "tau"]);
            for (n, (e, t)) in emp.iter().zip(&law).enumerate() {
                report.row(cells![n, e, t]);
            }
            report.text = Some(format!("tv={tv}"));
            report.summary = json!({ "tv_distance": tv });
            done("exchange occupation", report, ctx, common)
        }
    }
}

fn build_window(ctx: &mut Ctx, w: &WindowArgs) -> Result<GraphWindow> {
    let family = match w.family {
        FamilyArg::Tree => Family::DirectedTree {
            arity: ctx.arity(),
            depth: RunConfig::require(ctx.cfg.depth, "depth")?,
        },
        FamilyArg::Natural => Family::NaturalLattice {
            dim: w.dim,
            side: RunConfig::require(ctx.cfg.window, "window")?,
        },
        FamilyArg::Integer => {
            let side = RunConfig::require(ctx.cfg.window, "window")?;
            Family::IntegerLattice {
                dim: w.dim,
                side,
                margin: w.margin.unwrap_or(side),
            }
        }
    };
    ctx.set("graph", family);
    GraphWindow::new(family)
}

fn run_perc(cmd: PercCmd) -> Result<Dispatched> {
    match cmd {
        PercCmd::Sample { common, window } => {
            let mut ctx = Ctx::new(&common)?;
            let w = build_window(&mut ctx, &window)?;
            let spec = ctx.dist()?;
            let s = percolation::sample_cover(&w, spec, &mut stream(ctx.cfg.seed(), "perc.sample", 0))?;
            let mut report = Report::new(vec!["vertex", "y", "reach", "covered", "observed"]);
            for v in 0..w.len() {
                report.row(cells![v, s.values[v], s.reach[v], s.covered[v] as u8, w.is_observed(v) as u8]);
            }
            let uncovered = s.uncovered_count(&w);
            report.text = Some(format!("uncovered={uncovered}"));
            report.summary = json!({
                "uncovered": uncovered,
                "censored": s.censored(&w),
                "truncation_bound": s.truncation_bound,
            });
            done("perc sample", report, ctx, common)
        }
        PercCmd::Census { common, window, clusters } => {
            let mut ctx = Ctx::new(&common)?;
            let w = build_window(&mut ctx, &window)?;
            ctx.set("clusters", clusters);
            let trials = ctx.trials(1000);
            ctx.cfg.trials = Some(trials);
            let spec = ctx.dist()?;
            let stats = percolation::uncovered_census(
                &w,
                spec,
                &CensusConfig {
                    trials,
                    seed: ctx.cfg.seed(),
                    workers: ctx.cfg.workers(),
                    clusters,
                },
            )?;
            let mut cols = vec!["trial", "uncovered", "censored"];
            if clusters {
                cols.extend(["covered_clusters", "uncovered_clusters"]);
            }
            let mut report = Report::new(cols);
            for (i, o) in stats.outcomes.iter().enumerate() {
                let mut row = cells![i, o.uncovered, o.censored as u8];
                if let Some(c) = o.components {
                    row.extend(cells![c.covered, c.uncovered]);
                }
                report.row(row);
            }
            let line_expectation = matches!(w.family(), Family::NaturalLattice { dim: 1, .. })
                .then(|| percolation::q_sequence(spec, w.len() - 1).iter().sum::<f64>());
            report.text = Some(format!("mean={} stderr={}", stats.mean, stats.stderr()));
            report.summary = json!({
                "stream_label": CENSUS_LABEL,
                "mean": stats.mean,
                "variance": stats.variance,
                "stderr": stats.stderr(),
                "histogram": stats.histogram,
                "censored_fraction": stats.censored_fraction,
                "geometric_fit": stats.geometric_fit,
                "truncation_bound": stats.truncation_bound,
                "window_expectation": line_expectation,
            });
            done("perc census", report, ctx, common)
        }
        PercCmd::Q { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let m_max = ctx.cfg.window.unwrap_or(1000).max(1) - 1;
            let q = percolation::q_sequence(spec, m_max);
            let mut report = Report::new(vec!["m", "q"]);
            for (m, v) in q.iter().enumerate() {
                report.row(cells![m, v]);
            }
            let e = percolation::expected_uncovered_line(spec, m_max);
            report.text = Some(format!("expected_uncovered={} converged={}", e.value, e.converged));
            report.summary = serde_json::to_value(e)?;
            done("perc q", report, ctx, common)
        }
        PercCmd::Criterion { common, dim } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("dim", dim);
            let v = percolation::coverage_criterion(ctx.dist()?, dim)?;
            let mut report = Report::new(vec!["dim", "verdict"]);
            let name = serde_json::to_value(v)?;
            let name = name.as_str().unwrap_or_default().to_string();
            report.row(cells![dim, name]);
            report.text = Some(format!("dim={dim} verdict={name}"));
            report.summary = json!({ "verdict": v });
            done("perc criterion", report, ctx, common)
        }
        PercCmd::Bound { common, dim, margin } => {
            let mut ctx = Ctx::new(&common)?;
            let w = build_window(
                &mut ctx,
                &WindowArgs {
                    family: FamilyArg::Integer,
                    dim,
                    margin,
                },
            )?;
            let b = percolation::z_truncation_bound(&w, ctx.dist()?)?;
            let mut report = Report::new(vec!["bound"]);
            report.row(cells![b]);
            report.text = Some(format!("bound={b}"));
            report.summary = json!({ "bound": if b.is_finite() { json!(b) } else { json!("inf") } });
            done("perc bound", report, ctx, common)
        }
    }
}

fn run_tree(cmd: TreeCmd) -> Result<Dispatched> {
    match cmd {
        TreeCmd::R { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let arity = ctx.arity();
            let depth = ctx.cfg.depth.unwrap_or(10);
            let r = tree::r_recurrence(spec, arity, depth.max(1))?;
            let mut report = Report::new(vec!["m", "r_analytic", "r_empirical", "stderr"]);
            for m in 0..=depth {
                let (emp, se) = match ctx.cfg.trials {
                    Some(trials) => {
                        let p = tree::tree_uncovered_probe(
                            spec,
                            arity,
                            m,
                            trials,
                            ctx.cfg.seed(),
                            ctx.cfg.workers(),
                            DEFAULT_PROBE_BUDGET,
                        )?;
                        (p.frequency.to_string(), p.stderr.to_string())
                    }
                    None => (String::new(), String::new()),
                };
                report.row(cells![m, r.values[m], emp, se]);
            }
            report.summary = json!({ "r": r.values, "log_complement": r.log_complement });
            done("tree r", report, ctx, common)
        }
        TreeCmd::Criterion { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let size = ctx.cfg.size.unwrap_or(default_truncation(spec) - 1).max(1);
            let tol = ctx.cfg.tol.unwrap_or(1e-9);
            let c = tree::infinite_path_criterion(spec, ctx.arity(), size, tol)?;
            let verdict = match c.verdict.as_bool() {
                Some(b) => b.to_string(),
                None => "indeterminate".to_string(),
            };
            let mut report = Report::new(vec!["rho", "threshold", "verdict", "certified"]);
            report.row(cells![c.rho, c.threshold, verdict, c.certified]);
            report.text = Some(format!("rho={} threshold={} verdict={verdict}", c.rho, c.threshold));
            report.summary = serde_json::to_value(&c)?;
            done("tree criterion", report, ctx, common)
        }
        TreeCmd::Branching { common, generations, cap } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("generations", generations);
            ctx.set("cap", cap);
            let trials = ctx.trials(1000);
            ctx.cfg.trials = Some(trials);
            let spec = ctx.dist()?;
            let arity = ctx.arity();
            let splitter = SeedSplitter::new(ctx.cfg.seed(), BRANCHING_LABEL);
            let runs = run_trials(trials, ctx.cfg.workers(), |i| {
                tree::simulate_branching(spec, arity, generations, cap, &mut splitter.stream(i))
            });
            let mut report = Report::new(vec!["trial", "survived", "saturated", "extinct_at", "final_total"]);
            let mut survivors = 0u64;
            for (i, run) in runs.into_iter().enumerate() {
                let run = run?;
                survivors += run.survived() as u64;
                let ext = run.extinct_at.map(|g| g.to_string()).unwrap_or_default();
                let total = run.totals().last().copied().unwrap_or(0);
                report.row(cells![i, run.survived() as u8, run.saturated as u8, ext, total]);
            }
            let frequency = survivors as f64 / trials as f64;
            report.text = Some(format!("survivors={survivors} frequency={frequency} survives={}", survivors > 25));
            report.summary = json!({ "survivors": survivors, "frequency": frequency, "survives": survivors > 25 });
            done("tree branching", report, ctx, common)
        }
        TreeCmd::Charpoly { common, n, p } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("n", n);
            ctx.set("p", p);
            let root = tree::char_poly_largest_root(n, p)?;
            let spec = DistributionSpec::two_point(n, p)?;
            let rho = tree::rho_m(&spec, n, ctx.cfg.tol.unwrap_or(1e-15))?.value;
            let mut report = Report::new(vec!["n", "p", "root", "rho", "difference"]);
            report.row(cells![n, p, root, rho, (root - rho).abs()]);
            report.text = Some(format!("root={root} rho={rho}"));
            report.summary = json!({ "root": root, "rho": rho });
            done("tree charpoly", report, ctx, common)
        }
        TreeCmd::Logistic { common } => {
            let ctx = Ctx::new(&common)?;
            let spec = ctx.dist()?;
            let depth = ctx.cfg.depth.unwrap_or(40);
            let fit = tree::logistic_closed_form(spec, depth)?;
            let r = tree::r_recurrence(spec, 2, depth.max(1))?;
            let mut report = Report::new(vec!["m", "log_recurrence", "log_closed_form"]);
            let mut worst: f64 = 0.0;
            for m in 0..=depth {
                if m as u64 >= fit.n0 {
                    worst = worst.max((r.log_complement[m] - fit.log_complement[m]).abs());
                }
                report.row(cells![m, r.log_complement[m], fit.log_complement[m]]);
            }
            report.text = Some(format!("c={} max_log_difference={worst}", fit.c));
            report.summary = json!({ "c": fit.c, "n0": fit.n0, "max_log_difference": worst });
            done("tree logistic", report, ctx, common)
        }
    }
}

fn run_catalog(cmd: CatalogCmd) -> Result<Dispatched> {
    match cmd {
        CatalogCmd::Naor { common, m } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("m", m);
            let trials = ctx.trials(100_000);
            ctx.cfg.trials = Some(trials);
            let law = catalog::naor_urn(m, trials, ctx.cfg.seed(), ctx.cfg.workers())?;
            let mut report = Report::new(vec!["k", "tau", "empirical"]);
            for (k, (t, e)) in law.tau.iter().zip(&law.empirical).enumerate() {
                report.row(cells![k, t, e]);
            }
            report.text = Some(format!("tv={}", law.tv_distance));
            report.summary = json!({ "tv_distance": law.tv_distance, "exact_t": law.exact_t });
            done("catalog naor", report, ctx, common)
        }
        CatalogCmd::Euler { common, p } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("p", p);
            let k = ctx.cfg.size.unwrap_or(200);
            let phi = catalog::euler_function(p)?;
            let tau = catalog::euler_distribution(p, k)?;
            let mut report = Report::new(vec!["n", "tau"]);
            for (n, t) in tau.iter().enumerate() {
                report.row(cells![n, t]);
            }
            report.text = Some(format!("phi={}", phi.value));
            report.summary = json!({ "phi": phi, "mass": tau.iter().sum::<f64>() });
            done("catalog euler", report, ctx, common)
        }
        CatalogCmd::InverseBeta { common, c, y, steps } => {
            let mut ctx = Ctx::new(&common)?;
            ctx.set("c", c);
            ctx.set("y", &y);
            ctx.set("steps", steps);
            let mut report = Report::new(vec!["y", "limit", "exact", "empirical"]);
            let spec = match ctx.cfg.dist.clone() {
                Some(s) => s,
                None => DistributionSpec::power(c)?,
            };
            let empirical = match (steps, ctx.cfg.trials) {
                (Some(n), Some(trials)) => Some(exchange::final_states(&spec, n, trials, ctx.cfg.seed(), ctx.cfg.workers())),
                _ => None,
            };
            for &yv in &y {
                let limit = catalog::inverse_beta_cdf(c, yv)?;
                let exact = steps
                    .map(|n| catalog::finite_horizon_cdf(&spec, n, (yv * n as f64).floor() as u64).to_string())
                    .unwrap_or_default();
                let emp = match (&empirical, steps) {
                    (Some(xs), Some(n)) => {
                        let bound = (yv * n as f64).floor() as u64;
                        (xs.iter().filter(|&&x| x <= bound).count() as f64 / xs.len() as f64).to_string()
                    }
                    _ => String::new(),
                };
                report.row(cells![yv, limit, exact, emp]);
            }
            done("catalog inverse-beta", report, ctx, common)
        }
    }
}

/// Specs used by `verify` when no `--dist` is given.
pub fn default_verify_specs() -> Result<Vec<(String, DistributionSpec)>> {
    Ok(vec![
        ("uniform:m=4".into(), DistributionSpec::uniform(4)?),
        ("geometric:p=0.5".into(), DistributionSpec::geometric(0.5)?),
        ("power:c=2".into(), DistributionSpec::power(2.0)?),
    ])
}

fn run_verify(args: VerifyArgs) -> Result<Dispatched> {
    let VerifyArgs {
        common,
        coupling,
        stationary,
        spectral,
        steps,
    } = args;
    let mut ctx = Ctx::new(&common)?;
    ctx.set("steps", steps);
    let all = !(coupling || stationary || spectral);
    let specs = match &ctx.cfg.dist {
        Some(s) => vec![("dist".to_string(), s.clone())],
        None => default_verify_specs()?,
    };
    let trials = ctx.trials(1);
    let mut report = Report::new(vec!["check", "target", "passed", "detail"]);
    let mut failed = false;
    let mut record = |report: &mut Report, check: &str, target: &str, ok: bool, detail: String| {
        failed |= !ok;
        report.row(cells![check, target, ok, detail]);
    };
    if coupling || all {
        if steps == 0 {
            return Err(Error::InvalidArgument("--steps must be >= 1".into()));
        }
        for (k, (name, spec)) in specs.iter().enumerate() {
            let outcomes = run_trials(trials, ctx.cfg.workers(), |t| {
                let mut rng = stream(ctx.cfg.seed(), "verify.coupling", k as u64 * trials + t);
                percolation::coupling_check(spec, steps, &mut rng)
            });
            let mismatch = outcomes.into_iter().find_map(|o| o.err());
            let detail = mismatch.as_ref().map(|e| e.to_string()).unwrap_or_default();
            if let Some(e) = mismatch {
                if !matches!(e, Error::CouplingMismatch { .. }) {
                    return Err(e);
                }
            }
            record(&mut report, "coupling", name, detail.is_empty(), detail);
        }
    }
    if stationary || all {
        for (name, spec) in &specs {
            if spec.mean().is_none() {
                continue;
            }
            let k = default_truncation(spec) - 1;
            let tau = exchange::stationary_measure(spec, k)?;
            let residual = exchange::recursion_residual(spec, &tau.unnormalized);
            record(&mut report, "stationary_recursion", name, residual < 1e-10, residual.to_string());
        }
    }
    if spectral || all {
        let tol = ctx.cfg.tol.unwrap_or(1e-9);
        for n in [2usize, 3, 4] {
            for p in [0.3, 0.5, 0.7] {
                let root = tree::char_poly_largest_root(n, p)?;
                let rho = tree::rho_m(&DistributionSpec::two_point(n, p)?, n, 1e-15)?.value;
                let diff = (root - rho).abs();
                record(&mut report, "mean_matrix_root", &format!("n={n},p={p}"), diff < tol, diff.to_string());
            }
        }
    }
    let passed = report.rows.iter().filter(|r| r[2] == "true").count();
    report.text = Some(format!("checks={} passed={passed}", report.rows.len()));
    report.summary = json!({ "checks": report.rows.len(), "passed": passed });
    Ok(("verify".into(), report, ctx, common, failed))
}
