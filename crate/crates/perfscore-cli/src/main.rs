//! `perfscore`: experiment runner for performative prediction under proper
//! scoring rules.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use perfscore::harness::{
    binary_sweep, counterexample_demo, emit, many_outcome_experiment, max_curves, ramp_demo, render,
    to_json, unit_grid, write_file, Format, ManyOutcomeConfig, SweepConfig,
};
use perfscore::prelude::*;

#[derive(Parser)]
#[command(name = "perfscore", version, about = "Performatively optimal reports, bounds and dynamics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// `quadratic`, `log` or `exp:K=<f>`.
    #[arg(long, global = true, default_value = "quadratic")]
    rule: String,
    /// `affine:p1=<f>,alpha=<f>`, `bankrun`, `linear:seed=<u64>[,n=<k>]`,
    /// `linear:file=<path>` or `ramp:zeta=<f>,eps=<f>`.
    #[arg(long, global = true)]
    env: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Per-solve budget.
    #[arg(long, global = true, default_value_t = 120)]
    timeout_secs: u64,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Fill the `runtime_ms` column (output is then no longer reproducible).
    #[arg(long, global = true)]
    record_timing: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optima of affine binary maps over a grid of slopes and fixed points.
    SweepBinary {
        /// Comma-separated slopes in [0, 1]; default 0, 0.1, …, 1.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.01)]
        pstar_step: f64,
    },
    /// Worst case over fixed points per slope, with the theory overlays.
    MaxCurves {
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-3)]
        pstar_step: f64,
    },
    /// Random linear maps with columns drawn uniformly from the simplex.
    ManyOutcome {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Also write the summary statistics (JSON) here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// A fixed point beaten by another report; `--env ramp:…` runs the ramp
    /// construction instead.
    Counterexample {
        /// Comma-separated interior point; uniform when absent.
        #[arg(long, value_delimiter = ',')]
        p_star: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Accuracy bounds at a report (JSON).
    Bound {
        /// `p1=<f>` or a comma-separated point; the optimum when absent.
        #[arg(long)]
        at: Option<String>,
    },
    /// Market equilibrium and the market-power bound (JSON).
    Market {
        /// Comma-separated trader weights, or a file holding them.
        #[arg(long)]
        weights: String,
    },
    /// Regret of a reporting policy against the performative expert.
    Regret {
        /// `fixedpoint`, `constant:p1=<f>`, `rga` or `sgd`.
        #[arg(long)]
        policy: String,
        #[arg(long = "T", visible_alias = "steps", default_value_t = 100_000)]
        t: usize,
    },
    /// Exponent of the exponential rule meeting an accuracy target (JSON).
    DesignExpRule {
        #[arg(long)]
        lf: f64,
        #[arg(long)]
        eps: f64,
        /// `inaccuracy` or `fixed-point-distance`.
        #[arg(long, default_value = "inaccuracy")]
        target: String,
    },
    /// Misreport costs over an interval of beliefs.
    StakeProfile {
        #[arg(long)]
        lf: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        pl: f64,
        #[arg(long)]
        ph: f64,
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Domain(_) => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn output(common: &Common, contents: &str) -> Result<()> {
    match &common.out {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn env_arg(common: &Common) -> Result<EnvironmentMap> {
    common
        .env
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("this command needs --env".into()))?
        .parse::<EnvSpec>()?
        .build()
}

fn rule_for(common: &Common, n: usize) -> Result<ScoringRule> {
    ScoringRule::new(common.rule.parse::<RuleKind>()?, n)
}

fn solve_cfg(common: &Common) -> SolveConfig {
    SolveConfig {
        seed: common.seed,
        timeout: Some(Duration::from_secs(common.timeout_secs)),
        ..SolveConfig::default()
    }
}

fn default_alphas() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Serialize)]
struct BoundOutput {
    rule: String,
    env: String,
    lipschitz_f: f64,
    at_optimum: bool,
    inaccuracy: f64,
    bound: BoundReport,
    fixed_points: Vec<SimplexPoint>,
    /// Pointwise Lipschitz-form distance bound, when the fixed point is unique.
    fixed_point_distance: Option<f64>,
    log_rule_constant: Option<f64>,
}

#[derive(Serialize)]
struct MarketOutput {
    weights: Vec<f64>,
    equilibrium: MarketEquilibrium,
    bound_check: Vec<PowerBoundCheck>,
    all_ok: bool,
}

#[derive(Serialize)]
struct DesignOutput {
    lipschitz_f: f64,
    epsilon: f64,
    target: DesignTarget,
    k: f64,
    rule: String,
}

#[derive(Serialize)]
struct ManyOutcomeOutput<'a> {
    summary: &'a perfscore::harness::SummaryBundle,
    records: &'a [perfscore::harness::ExperimentRecord],
}

#[derive(Serialize)]
struct RegretOutput<'a> {
    policy: &'a str,
    steps: usize,
    seed: u64,
    average_regret: f64,
    average_prediction_error: f64,
    series: &'a RegretSeries,
}

fn parse_point(s: &str, n: usize) -> Result<SimplexPoint> {
    if let Some(v) = s.strip_prefix("p1=") {
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad p1 '{v}': {e}")))?;
        if n != 2 {
            return Err(Error::InvalidArgument("p1= is only valid for binary environments".into()));
        }
        return SimplexPoint::binary(x);
    }
    let v = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad coordinate '{t}': {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if v.len() != n {
        return Err(Error::InvalidArgument(format!("point has {} coordinates, need {n}", v.len())));
    }
    SimplexPoint::new(v)
}

fn parse_weights(arg: &str) -> Result<Vec<f64>> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|source| Error::Io {
            path: PathBuf::from(arg),
            source,
        })?
    } else {
        arg.to_string()
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad weight '{t}': {e}")))
        })
        .collect()
}

fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    let format: Format = c.format.into();
    match &cli.cmd {
        Cmd::SweepBinary { alphas, pstar_step } => {
            let rule = rule_for(c, 2)?;
            let alphas = alphas.clone().unwrap_or_else(default_alphas);
            let cfg = SweepConfig {
                solve: SolveConfig {
                    restarts: 3,
                    ..solve_cfg(c)
                },
                record_timing: c.record_timing,
                ..SweepConfig::default()
            };
            let recs = binary_sweep(&rule, &alphas, &unit_grid(*pstar_step)?, &cfg)?;
            output(c, &render(recs.as_slice(), format)?)
        }
        Cmd::MaxCurves { alphas, pstar_step } => {
            let rule = rule_for(c, 2)?;
            let alphas = alphas.clone().unwrap_or_else(default_alphas);
            let cfg = SweepConfig {
                solve: SolveConfig {
                    restarts: 3,
                    ..solve_cfg(c)
                },
                ..SweepConfig::default()
            };
            let curves = max_curves(&rule, &alphas, *pstar_step, &cfg)?;
            output(c, &render(curves.as_slice(), format)?)
        }
        Cmd::ManyOutcome { n, trials, summary } => {
            let cfg = ManyOutcomeConfig {
                n: *n,
                trials: *trials,
                seed: c.seed,
                timeout: Duration::from_secs(c.timeout_secs),
                jobs: c.jobs,
                record_timing: c.record_timing,
                ..ManyOutcomeConfig::default()
            };
            let (recs, stats) = many_outcome_experiment(&cfg)?;
            if let Some(p) = summary {
                emit(&stats, Format::Json, p)?;
            }
            match format {
                Format::Csv => output(c, &render(recs.as_slice(), Format::Csv)?),
                Format::Json => output(
                    c,
                    &to_json(&ManyOutcomeOutput {
                        summary: &stats,
                        records: &recs,
                    })?,
                ),
            }
        }
        Cmd::Counterexample { p_star, n } => {
            if let Some(EnvSpec::Ramp { zeta, eps }) = c.env.as_deref().map(str::parse).transpose()? {
                let rule = rule_for(c, 2)?;
                return output(c, &to_json(&ramp_demo(&rule, zeta, eps)?)?);
            }
            let rule = rule_for(c, *n)?;
            let p = match p_star {
                Some(v) => SimplexPoint::new(v.clone())?,
                None => SimplexPoint::uniform(*n)?,
            };
            output(c, &to_json(&counterexample_demo(&rule, &p)?)?)
        }
        Cmd::Bound { at } => {
            let f = env_arg(c)?;
            let rule = rule_for(c, f.n())?;
            let l_f = f.lipschitz_estimate(2000, c.seed);
            let (p, at_optimum) = match at {
                Some(s) => (parse_point(s, f.n())?, false),
                None => (performative_optimum(&rule, &f, &solve_cfg(c))?.report, true),
            };
            let globals = GlobalConstants::for_rule(&rule, l_f);
            let bound = inaccuracy_bound(&rule, &f, &p, globals.as_ref())?;
            let fps = f.find_fixed_points(&FixedPointConfig::default())?;
            let fixed_point_distance = if fps.unique && l_f < 1.0 {
                Some(fixed_point_distance_bound(&rule, &f, &p, l_f)?)
            } else {
                None
            };
            let log_rule_constant = match rule.kind() {
                RuleKind::Logarithmic if rule.n() == 2 => Some(log_binary_bound(l_f).0),
                _ => None,
            };
            let out = BoundOutput {
                rule: rule.kind().to_string(),
                env: f.to_string(),
                lipschitz_f: l_f,
                at_optimum,
                inaccuracy: l2_distance(&p, &f.eval(&p))?,
                bound,
                fixed_points: fps.points,
                fixed_point_distance,
                log_rule_constant,
            };
            output(c, &to_json(&out)?)
        }
        Cmd::Market { weights } => {
            let f = env_arg(c)?;
            let rule = rule_for(c, f.n())?;
            let weights = parse_weights(weights)?;
            let game = MarketGame::new(rule, f, weights.clone())?;
            let cfg = MarketConfig {
                solve: SolveConfig {
                    restarts: 5,
                    ..solve_cfg(c)
                },
                ..MarketConfig::default()
            };
            let eq = market_equilibrium(&game, &cfg)?;
            let checks = market_power_bound_check(&eq, &game)?;
            let out = MarketOutput {
                all_ok: checks.iter().all(|k| k.ok),
                weights,
                equilibrium: eq,
                bound_check: checks,
            };
            output(c, &to_json(&out)?)
        }
        Cmd::Regret { policy, t } => {
            let f = env_arg(c)?;
            let rule = rule_for(c, f.n())?;
            let pol: Policy = policy.parse()?;
            let trace = simulate_policy(&rule, &f, &pol, *t, c.seed)?;
            let series = regret_series(&trace, &rule, &f)?;
            match format {
                Format::Csv => output(c, &render(&series, Format::Csv)?),
                Format::Json => output(
                    c,
                    &to_json(&RegretOutput {
                        policy,
                        steps: *t,
                        seed: c.seed,
                        average_regret: series.average_regret(),
                        average_prediction_error: series.average_prediction_error(),
                        series: &series,
                    })?,
                ),
            }
        }
        Cmd::DesignExpRule { lf, eps, target } => {
            let target: DesignTarget = target.parse()?;
            let k = exponential_rule_k(*lf, *eps, target)?;
            let rule = ScoringRule::exponential_binary(k)?;
            output(
                c,
                &to_json(&DesignOutput {
                    lipschitz_f: *lf,
                    epsilon: *eps,
                    target,
                    k,
                    rule: rule.kind().to_string(),
                })?,
            )
        }
        Cmd::StakeProfile {
            lf,
            eps,
            pl,
            ph,
            grid_step,
        } => {
            let rule = rule_for(c, 2)?;
            let prof = stake_profile(&rule, *lf, *eps, *pl, *ph, *grid_step)?;
            output(c, &render(&prof, format)?)
        }
    }
}
