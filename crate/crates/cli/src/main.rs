use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use monoculture::config::{parse_config, EngineKind, RunConfig};
use monoculture::estimate::{
    check_monotonicity, check_pref_first_position, check_pref_weaker_competition, mc_utility_estimate, McConfig,
};
use monoculture::exact::exact_utility_table;
use monoculture::game::{find_theta_star, sweep_plane, Engine};
use monoculture::output::{Cell, Table};
use monoculture::reproduce::{self, push_sweep_row, sweep_table, Report};
use monoculture::sequential::{exact_sequential_utilities, sequential_optimal_sequence, StrategySequence};
use monoculture::{verify, CandidateDistribution, CandidatePool, CandidateSet, Error, Family};

/// Hiring games between firms sharing an algorithmic ranking or using
/// independent human evaluators.
#[derive(Parser)]
#[command(name = "monoculture", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Default)]
struct Common {
    /// mallows, pl, or rum
    #[arg(long, global = true)]
    family: Option<String>,
    /// gaussian, laplacian, gumbel, three-point:δ, four-point:δ, discrete:v@p,...
    #[arg(long, global = true)]
    noise: Option<String>,
    #[arg(long, global = true)]
    theta_h: Option<String>,
    #[arg(long, global = true)]
    theta_a: Option<String>,
    /// Mallows only: φ = θ + 1
    #[arg(long, global = true)]
    phi_h: Option<String>,
    #[arg(long, global = true)]
    phi_a: Option<String>,
    /// lo:hi:step×lo:hi:step over (θ_H, θ_A)
    #[arg(long, global = true)]
    grid: Option<String>,
    /// v1,v2,... strictly decreasing
    #[arg(long, global = true)]
    pool: Option<String>,
    /// uniform:lo:hi:n, centered:halfwidth:n, unit:n, fixed:v1,v2,...
    #[arg(long, global = true)]
    dist: Option<String>,
    /// exact or mc
    #[arg(long, global = true)]
    engine: Option<String>,
    #[arg(long, global = true)]
    samples: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    /// number of firms for sequential and k-firm sweeps
    #[arg(long, global = true)]
    firms: Option<String>,
    /// z threshold for Monte Carlo verdicts
    #[arg(long, global = true)]
    z: Option<String>,
    /// CSV output path (default stdout)
    #[arg(long, global = true)]
    out: Option<String>,
    /// gnuplot-style data output path
    #[arg(long, global = true)]
    plot: Option<String>,
    /// key = value settings file; flags override it
    #[arg(long, global = true)]
    config: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Expected utilities of first and second movers
    Utilities,
    /// Equilibrium labels over a (θ_H, θ_A) grid
    Sweep,
    /// Optimal or given strategy sequence for firms hiring in a fixed order
    Sequential {
        /// evaluate this sequence (e.g. AHHAA) instead of solving
        #[arg(long)]
        sequence: Option<String>,
    },
    /// First-position, weaker-competition and monotonicity checks
    Conditions,
    /// Accuracy at which the algorithm becomes dominant, with a welfare-loss witness
    BraessSearch {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Re-run a pinned configuration and compare with the stated claim
    Reproduce { target: String },
    /// Run an invariant suite
    Verify { suite: String },
}

enum Failure {
    Usage(String),
    Check,
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Check) => ExitCode::from(2),
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}

fn settings(common: &Common) -> std::result::Result<RunConfig, Failure> {
    let mut pairs = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            parse_config(&text)?
        }
        None => Vec::new(),
    };
    let flags = [
        ("family", &common.family),
        ("noise", &common.noise),
        ("theta-h", &common.theta_h),
        ("theta-a", &common.theta_a),
        ("phi-h", &common.phi_h),
        ("phi-a", &common.phi_a),
        ("grid", &common.grid),
        ("pool", &common.pool),
        ("dist", &common.dist),
        ("engine", &common.engine),
        ("samples", &common.samples),
        ("seed", &common.seed),
        ("threads", &common.threads),
        ("firms", &common.firms),
        ("z", &common.z),
        ("out", &common.out),
        ("plot", &common.plot),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            // a flag replaces the file's setting, including its theta/phi twin
            let twin = match k {
                "theta-h" => Some("phi-h"),
                "phi-h" => Some("theta-h"),
                "theta-a" => Some("phi-a"),
                "phi-a" => Some("theta-a"),
                "pool" => Some("dist"),
                "dist" => Some("pool"),
                _ => None,
            };
            pairs.retain(|(key, _)| key != k && Some(key.as_str()) != twin);
            pairs.push((k.to_string(), v.clone()));
        }
    }
    Ok(RunConfig::from_pairs(&pairs)?)
}

fn run(cli: Cli) -> Outcome {
    let cfg = settings(&cli.common)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Utilities => utilities(&cfg),
        Command::Sweep => sweep(&cfg),
        Command::Sequential { sequence } => sequential(&cfg, sequence.as_deref()),
        Command::Conditions => conditions(&cfg),
        Command::BraessSearch { tol } => braess_search(&cfg, tol),
        Command::Reproduce { target } => report(&cfg, reproduce::reproduce(&target)?),
        Command::Verify { suite } => report(&cfg, verify::verify(&suite)?),
    }
}

fn need<T: Copy>(v: Option<T>, what: &str) -> std::result::Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{what} is required")))
}

fn source(cfg: &RunConfig) -> std::result::Result<&CandidateDistribution, Failure> {
    cfg.source.as_ref().ok_or_else(|| Failure::Usage("--pool or --dist is required".into()))
}

fn exact_pool(cfg: &RunConfig) -> std::result::Result<CandidatePool, Failure> {
    match (&cfg.family, source(cfg)?) {
        (Family::Mallows, src) => Ok(src.expected_pool()?),
        (_, CandidateDistribution::Fixed(p)) => Ok(p.clone()),
        _ => Err(Failure::Usage("the exact engine needs --pool for this family; use --engine mc".into())),
    }
}

fn emit(cfg: &RunConfig, table: &Table) -> Outcome {
    let csv = table.to_csv()?;
    match &cfg.out {
        Some(path) => fs::write(path, csv).map_err(|e| Failure::Usage(format!("{path}: {e}")))?,
        None => print!("{csv}"),
    }
    if let Some(path) = &cfg.plot {
        fs::write(path, table.to_plot_data()).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    }
    Ok(())
}

fn engine_name(cfg: &RunConfig) -> &'static str {
    match cfg.engine {
        EngineKind::Exact => "exact",
        EngineKind::MonteCarlo => "mc",
    }
}

fn utilities(cfg: &RunConfig) -> Outcome {
    let th = need(cfg.theta_h, "theta-h")?;
    let ta = need(cfg.theta_a, "theta-a")?;
    let t = match cfg.engine {
        EngineKind::Exact => exact_utility_table(ta, th, &cfg.family, &exact_pool(cfg)?)?,
        EngineKind::MonteCarlo => {
            mc_utility_estimate(ta, th, &cfg.family, source(cfg)?, McConfig::new(cfg.samples, cfg.seed)?)?.table
        }
    };
    let mut table = Table::new(&[
        "family",
        "theta_h",
        "theta_a",
        "u_first_a",
        "u_first_h",
        "u_aa",
        "u_ah",
        "u_ha",
        "u_hh",
        "se_first_a",
        "se_first_h",
        "se_aa",
        "se_ah",
        "se_ha",
        "se_hh",
        "engine",
        "samples",
        "seed",
    ]);
    let mut row = vec![Cell::text(cfg.family.name()), th.into(), ta.into()];
    row.extend(t.entries().iter().chain(&t.stderr).map(|&v| Cell::F(v)));
    let exact = cfg.engine == EngineKind::Exact;
    row.push(Cell::text(engine_name(cfg)));
    row.push(Cell::text(if exact { String::new() } else { cfg.samples.to_string() }));
    row.push(Cell::text(if exact { String::new() } else { cfg.seed.to_string() }));
    table.push(row);
    emit(cfg, &table)
}

fn sweep(cfg: &RunConfig) -> Outcome {
    let grid = need(cfg.grid, "grid")?;
    let src = source(cfg)?;
    let (hs, as_) = (grid.theta_h.points(), grid.theta_a.points());
    let mut table = sweep_table();
    match cfg.firms {
        Some(k) if k > 2 => {
            if cfg.family != Family::Mallows {
                return Err(Failure::Usage("k-firm sweeps are Mallows only".into()));
            }
            for &th in &hs {
                for &ta in &as_ {
                    let cells = match sequential_optimal_sequence(k, ta + 1.0, th + 1.0, src) {
                        Ok((seq, _)) => vec![
                            Cell::text(""),
                            Cell::text(""),
                            Cell::text(""),
                            Cell::text(""),
                            Cell::text(""),
                            Cell::text(&seq),
                            Cell::text(seq.binary_value()),
                            Cell::text(""),
                        ],
                        Err(e) if e.is_numerical() => return Err(e.into()),
                        Err(Error::InvalidArgument(m)) | Err(Error::Unsupported(m)) => return Err(Failure::Usage(m)),
                        Err(e) => {
                            let mut v: Vec<Cell> = (0..7).map(|_| Cell::text("")).collect();
                            v.push(Cell::text(e));
                            v
                        }
                    };
                    let mut row = vec![Cell::F(th), Cell::F(ta)];
                    row.extend(cells);
                    table.push(row);
                }
            }
        }
        _ => {
            let engine = match cfg.engine {
                EngineKind::Exact => Engine::Exact,
                EngineKind::MonteCarlo => Engine::MonteCarlo { samples: cfg.samples, seed: cfg.seed },
            };
            for c in sweep_plane(&hs, &as_, &cfg.family, src, engine) {
                push_sweep_row(&mut table, c.theta_h, c.theta_a, &c.result);
            }
        }
    }
    emit(cfg, &table)
}

fn sequential(cfg: &RunConfig, sequence: Option<&str>) -> Outcome {
    if cfg.family != Family::Mallows {
        return Err(Failure::Usage("the sequential engine is Mallows only".into()));
    }
    let pa = need(cfg.theta_a, "theta-a or --phi-a")? + 1.0;
    let ph = need(cfg.theta_h, "theta-h or --phi-h")? + 1.0;
    let src = source(cfg)?;
    let (seq, utils) = match sequence {
        Some(s) => {
            let seq = StrategySequence::parse(s)?;
            let u = exact_sequential_utilities(&seq, pa, ph, src)?;
            (seq, u)
        }
        None => sequential_optimal_sequence(need(cfg.firms, "firms")?, pa, ph, src)?,
    };
    let mut table = Table::new(&["phi_h", "phi_a", "sequence", "binary_value", "firm", "strategy", "utility"]);
    for (i, (s, u)) in seq.choices().iter().zip(&utils).enumerate() {
        table.push(vec![
            ph.into(),
            pa.into(),
            Cell::text(&seq),
            Cell::text(seq.binary_value()),
            Cell::text(i + 1),
            Cell::text(s),
            (*u).into(),
        ]);
    }
    emit(cfg, &table)
}

fn conditions(cfg: &RunConfig) -> Outcome {
    let th = need(cfg.theta_h, "theta-h")?;
    let src = source(cfg)?;
    let mc = McConfig::new(cfg.samples, cfg.seed)?;
    let mut reports = vec![(th, None, "", check_pref_first_position(&cfg.family, th, src, mc, cfg.z_threshold)?)];
    if let Some(ta) = cfg.theta_a {
        reports.push((ta, Some(th), "", check_pref_weaker_competition(&cfg.family, ta, th, src, mc, cfg.z_threshold)?));
    }
    let grid = match (cfg.grid, cfg.theta_a) {
        (Some(g), _) => g.theta_h.points(),
        (None, Some(ta)) if ta > th => vec![th, ta],
        _ => vec![th],
    };
    let n = src.len();
    for (removed, label) in [(CandidateSet::EMPTY, ""), (CandidateSet::singleton(0), "1")] {
        if n > removed.len() {
            let rep = check_monotonicity(&cfg.family, &grid, removed, src, mc, cfg.z_threshold)?;
            reports.push((grid[0], grid.last().copied(), label, rep));
        }
    }
    let mut table =
        Table::new(&["condition", "removed", "theta", "theta2", "mean", "stderr", "z", "verdict", "samples"]);
    for (t1, t2, removed, r) in &reports {
        table.push(vec![
            Cell::text(r.condition),
            Cell::text(*removed),
            (*t1).into(),
            t2.map_or(Cell::text(""), Cell::F),
            r.estimate.mean.into(),
            r.estimate.stderr.into(),
            r.estimate.z.into(),
            Cell::text(r.verdict),
            Cell::text(r.estimate.n_samples),
        ]);
    }
    emit(cfg, &table)
}

fn braess_search(cfg: &RunConfig, tol: f64) -> Outcome {
    let th = need(cfg.theta_h, "theta-h")?;
    let ts = find_theta_star(th, &cfg.family, source(cfg)?, tol)?;
    let mut table = Table::new(&[
        "theta_h",
        "theta_star",
        "gap_at_star",
        "theta_prime",
        "f",
        "g",
        "h",
        "welfare_aa",
        "welfare_hh",
        "dom1_margin",
        "dom2_margin",
    ]);
    table.push(vec![
        th.into(),
        ts.theta_star.into(),
        ts.gap_at_star.into(),
        ts.theta_prime.into(),
        ts.f.into(),
        ts.g.into(),
        ts.h.into(),
        ts.welfare_aa.into(),
        ts.welfare_hh.into(),
        ts.dominance.dom1_margin.into(),
        ts.dominance.dom2_margin.into(),
    ]);
    emit(cfg, &table)
}

fn report(cfg: &RunConfig, r: Report) -> Outcome {
    if let Some(t) = &r.table {
        if let Some(path) = &cfg.out {
            fs::write(path, t.to_csv()?).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
        }
        if let Some(path) = &cfg.plot {
            fs::write(path, t.to_plot_data()).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
        }
    }
    println!("{r}");
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
