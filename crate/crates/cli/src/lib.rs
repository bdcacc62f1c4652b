//! Library side of the `efgfom` binary: source resolution, the three
//! commands, and the run-directory layout.

pub mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use efgfom::dgf::{compute_weights, DgfKind};
use efgfom::games::{generate_kuhn, generate_leduc, load_game, save_game, GameInstance};
use efgfom::scext::{chain_weights, load_chain, ChainProblem};
use efgfom::solver::{run, theoretical_bound, Algorithm, Cadence, RunOptions, RunResult, SaddlePointProblem};
use efgfom::treeplex::Treeplex;
use efgfom::validate::{validate_chain_problem, validate_game, Report, SuiteConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{GenerateArgs, SolveArgs, SourceArgs, ValidateArgs};

/// Environment variable capping the worker threads used for parallel kernels.
pub const THREADS_ENV: &str = "EFGFOM_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
#[cfg(feature = "parallel")]
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = value.parse().with_context(|| format!("{THREADS_ENV}={value} is not a thread count"))?;
    if n == 0 {
        bail!("{THREADS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads() -> Result<()> {
    Ok(())
}

// ---------------------------------------------------------------------------
// Sources

pub fn builtin_game(name: &str, ranks: Option<usize>) -> Result<GameInstance> {
    match (name, ranks) {
        ("kuhn", None) => Ok(generate_kuhn()),
        ("kuhn", Some(_)) => Err(efgfom::Error::InvalidParameter("kuhn takes no --ranks".into()).into()),
        ("leduc", Some(r)) => Ok(generate_leduc(r)?),
        ("leduc", None) => Err(efgfom::Error::InvalidParameter("leduc requires --ranks".into()).into()),
        (other, _) => bail!("unknown game '{other}' (expected kuhn or leduc)"),
    }
}

#[derive(Debug, Clone)]
pub enum Source {
    Game(GameInstance),
    Chain { name: String, problem: ChainProblem },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceConfig {
    Builtin {
        name: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        ranks: Option<usize>,
    },
    GameFile { path: PathBuf },
    ChainFile { path: PathBuf },
}

impl SourceConfig {
    pub fn from_args(src: &SourceArgs, ranks: Option<usize>) -> Result<Self> {
        let config = match (&src.game, &src.game_file, &src.chain_file) {
            (Some(name), None, None) => SourceConfig::Builtin { name: name.clone(), ranks },
            (None, Some(path), None) => SourceConfig::GameFile { path: path.clone() },
            (None, None, Some(path)) => SourceConfig::ChainFile { path: path.clone() },
            _ => bail!("give exactly one of --game, --game-file, --chain-file"),
        };
        if ranks.is_some() && !matches!(config, SourceConfig::Builtin { .. }) {
            bail!("--ranks only applies to --game");
        }
        Ok(config)
    }

    pub fn load(&self) -> Result<Source> {
        Ok(match self {
            SourceConfig::Builtin { name, ranks } => Source::Game(builtin_game(name, *ranks)?),
            SourceConfig::GameFile { path } => Source::Game(load_game(path)?),
            SourceConfig::ChainFile { path } => {
                let name = path.file_stem().map_or_else(|| "chain".to_string(), |s| s.to_string_lossy().into_owned());
                Source::Chain { name, problem: load_chain(path)? }
            }
        })
    }
}

// ---------------------------------------------------------------------------
// generate

/// `|J₁| |J₂| |Σ₁| |Σ₂| leaves | beta mean/max | gamma mean/max`, weights of player 1.
pub fn stats_line(g: &GameInstance) -> String {
    let (tx, ty) = (&g.treeplex_x, &g.treeplex_y);
    let w = compute_weights(tx);
    format!(
        "{} {} {} {} {} | beta {:.4}/{} | gamma {:.4}/{}",
        tx.num_decision_points(),
        ty.num_decision_points(),
        tx.num_sequences(),
        ty.num_sequences(),
        g.leaves(),
        w.beta.mean(),
        w.beta.max(),
        w.gamma.mean(),
        w.gamma.max()
    )
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<String> {
    let g = builtin_game(&args.name, args.ranks)?;
    if let Some(path) = &args.out {
        save_game(&g, path)?;
    }
    Ok(stats_line(&g))
}

// ---------------------------------------------------------------------------
// solve

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub algorithm: String,
    pub dgf: String,
    pub budget: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
    pub record_time: bool,
}

impl RunConfig {
    pub fn from_args(args: &SolveArgs) -> Result<Self> {
        if args.iters == 0 {
            bail!(efgfom::Error::InvalidParameter("--iters must be at least 1".into()));
        }
        if args.cadence == Some(0) {
            bail!(efgfom::Error::InvalidParameter("--cadence must be at least 1".into()));
        }
        Ok(Self {
            source: SourceConfig::from_args(&args.source, args.ranks)?,
            algorithm: args.alg.as_str().to_string(),
            dgf: args.dgf.as_str().to_string(),
            budget: args.iters,
            seed: args.seed,
            cadence: args.cadence,
            record_time: args.record_time,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of [`RunConfig::to_json`].
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.to_json().as_bytes())[..6])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub source: String,
    pub algorithm: String,
    pub dgf: String,
    pub iterations: usize,
    pub gradient_computations: usize,
    pub final_gap: f64,
    /// `None` for EGT/AS, which carries no bound.
    pub bound_satisfied: Option<bool>,
    pub final_bound: Option<f64>,
    pub opnorm: f64,
    pub omega_x: f64,
    pub omega_y: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub result: RunResult,
    pub summary: Summary,
}

pub fn build_problem(source: &Source, dgf: DgfKind) -> Result<(String, SaddlePointProblem)> {
    Ok(match source {
        Source::Game(g) => (g.name.clone(), SaddlePointProblem::from_game(g, dgf)?),
        Source::Chain { name, problem } => (name.clone(), SaddlePointProblem::from_chains(problem, dgf)?),
    })
}

/// Runs the solver for `cfg` without touching the filesystem beyond loading the source.
pub fn solve(cfg: &RunConfig) -> Result<SolveOutput> {
    let algorithm: Algorithm = cfg.algorithm.parse()?;
    let dgf: DgfKind = cfg.dgf.parse()?;
    let (name, p) = build_problem(&cfg.source.load()?, dgf)?;
    let mut opts = RunOptions::new(algorithm, cfg.budget);
    if let Some(k) = cfg.cadence {
        opts.cadence = Cadence::Every(k);
    }
    opts.record_time = cfg.record_time;
    let result = run(&p, &opts)?;
    let (omega_x, omega_y) = (p.x.diameter_bound(), p.y.diameter_bound());
    let summary = Summary {
        source: name,
        algorithm: cfg.algorithm.clone(),
        dgf: cfg.dgf.clone(),
        iterations: result.iterations,
        gradient_computations: result.gradient_computations,
        final_gap: result.final_gap,
        bound_satisfied: result.bound_satisfied,
        final_bound: theoretical_bound(algorithm, result.iterations.max(1), p.opnorm(), omega_x, omega_y),
        opnorm: p.opnorm(),
        omega_x,
        omega_y,
    };
    Ok(SolveOutput { result, summary })
}

/// Creates `<out>/<unix seconds>-<config hash>/`, adding `-1`, `-2`, … on collision.
pub fn create_run_dir(out: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let base = format!("{secs}-{}", cfg.hash());
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!("unbounded suffix search")
}

pub fn write_run(dir: &Path, cfg: &RunConfig, out: &SolveOutput) -> Result<()> {
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write("config.json", cfg.to_json() + "\n")?;
    write("log.csv", out.result.to_csv())?;
    write("summary.json", serde_json::to_string_pretty(&out.summary)? + "\n")
}

/// Solves and writes the run directory; returns it with the summary.
pub fn cmd_solve(args: &SolveArgs) -> Result<(PathBuf, SolveOutput)> {
    let cfg = RunConfig::from_args(args)?;
    let out = solve(&cfg)?;
    let dir = create_run_dir(&args.out, &cfg)?;
    write_run(&dir, &cfg, &out)?;
    Ok((dir, out))
}

// ---------------------------------------------------------------------------
// validate

pub fn validate_source(source: &Source, seed: u64) -> Report {
    let cfg = SuiteConfig { seed, ..SuiteConfig::default() };
    match source {
        Source::Game(g) => validate_game(g, &cfg),
        Source::Chain { name, problem } => validate_chain_problem(name, problem, &cfg),
    }
}

fn treeplex_tables(t: &Treeplex) -> (String, String) {
    let w = compute_weights(t);
    let mut dps = String::from("decision_point_id,beta,gamma\n");
    let _ = writeln!(dps, "{},{},{}", efgfom::treeplex::EMPTY_LABEL, w.beta.root, w.gamma.root);
    for (j, dp) in t.decision_points().iter().enumerate() {
        let _ = writeln!(dps, "{},{},{}", dp.id, w.beta.decision_points[j], w.gamma.decision_points[j]);
    }
    let mut seqs = String::from("sequence_id,w\n");
    for (s, w) in w.w.iter().enumerate() {
        let _ = writeln!(seqs, "{},{}", t.sequence_label(s), w);
    }
    (dps, seqs)
}

fn chain_table(p: &efgfom::scext::ScExtChain) -> String {
    let w = chain_weights(p);
    let mut out = String::from("block,alpha_dilated,alpha_dge\n");
    for k in 0..p.num_blocks() {
        let _ = writeln!(out, "{k},{},{}", w.alpha_dilated[k], w.alpha_dge[k]);
    }
    out
}

/// Writes weight tables into `dir`; returns the file names.
pub fn write_weight_tables(source: &Source, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    match source {
        Source::Game(g) => {
            for (player, t) in [("player1", &g.treeplex_x), ("player2", &g.treeplex_y)] {
                let (dps, seqs) = treeplex_tables(t);
                files.push((format!("{player}_decision_points.csv"), dps));
                files.push((format!("{player}_sequences.csv"), seqs));
            }
        }
        Source::Chain { problem, .. } => {
            files.push(("chain_blocks.csv".to_string(), chain_table(&problem.chain)));
            if let Some(o) = &problem.opponent {
                files.push(("opponent_blocks.csv".to_string(), chain_table(o)));
            }
        }
    }
    for (name, text) in &files {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(files.into_iter().map(|f| f.0).collect())
}

/// Runs the suites and returns the report; writes it and the weight tables when asked.
pub fn cmd_validate(args: &ValidateArgs) -> Result<Report> {
    let source = SourceConfig::from_args(&args.source, args.ranks)?.load()?;
    let report = validate_source(&source, args.seed);
    if let Some(path) = &args.out {
        fs::write(path, report_json(&report) + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(dir) = &args.weights_dir {
        write_weight_tables(&source, dir)?;
    }
    Ok(report)
}

pub fn report_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
