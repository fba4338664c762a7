use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use levelga::harness::{
    emit_results, run_experiment, scaling_study, write_rows, ExperimentSpec, Family, LambdaRule,
    OutputFormat, PartitionChoice, RateRule, SelectionRule,
};
use levelga::levels::local_search;
use levelga::theory::{
    approximation_certify, check_conditions, corollary_advisor_inputs, lambda_lower_bound,
    lemma1_advisor, prop1_check, theorem1_bound, worst_local_optimum_ratio, CheckMode,
    OperatorSuite, TheoremParams,
};
use levelga::{BitString, Error, Problem, RandomStream};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(
    name = "levelga",
    version,
    about = "Hitting-time experiments and level-based runtime bounds for non-elitist GAs"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated trials and print per-size statistics.
    Run(ExperimentArgs),
    /// Run trials and fit a log-log scaling law.
    Scale {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Exit with status 3 if the fitted slope exceeds this value.
        #[arg(long)]
        assert_slope: Option<f64>,
    },
    /// Selection thresholds from the crossover and mutation constants.
    Advise(AdviseArgs),
    /// Evaluate the runtime bound and the population-size requirement.
    Bound(BoundArgs),
    /// Verify the level-based conditions, or the neighbor-probability bound.
    Check(CheckArgs),
    /// Local search from random starts (baseline).
    Localsearch(ExperimentArgs),
    /// Approximation ratio of a local optimum.
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ProblemArg {
    Rr,
    Vcp,
    Onemax,
    Leadingones,
    Toy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SelectionArg {
    Tournament,
    MuLambda,
    ExpRanking,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PartitionArg {
    Canonical,
    MergedLo,
    InfeasibleFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FormatArg {
    Csv,
    Json,
}

/// Experiment flags; the same keys (kebab-case) are accepted in a TOML
/// config file, with command-line values taking precedence.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ExperimentArgs {
    /// TOML file with any of the flags below as keys.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    /// Royal Road block length.
    #[arg(long)]
    r: Option<usize>,
    /// Tabulated instance for `--problem toy`.
    #[arg(long)]
    toy_file: Option<PathBuf>,
    /// Bitstring lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    /// Tournament size; omitted means the advisor's minimum.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Slack δ used by the tournament-size advisor.
    #[arg(long)]
    delta: Option<f64>,
    /// Fixed mutation rate.
    #[arg(long)]
    pm: Option<f64>,
    /// Mutation rate χ/n.
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    pc: Option<f64>,
    /// Fixed population size.
    #[arg(long)]
    lambda: Option<usize>,
    /// Population size ⌈b ln n⌉.
    #[arg(long)]
    lambda_b: Option<f64>,
    #[arg(long, value_enum)]
    partition: Option<PartitionArg>,
    /// Wrap mutation with the fallback-solution repair.
    #[arg(long)]
    #[serde(default)]
    repair: bool,
    /// Evaluation cap per trial.
    #[arg(long)]
    cap: Option<u64>,
    /// Output path stem.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

macro_rules! overlay {
    ($cli:ident, $cfg:ident, $($f:ident),*) => {
        ExperimentArgs {
            config: None,
            repair: $cli.repair || $cfg.repair,
            $($f: $cli.$f.clone().or($cfg.$f.clone()),)*
        }
    };
}

impl ExperimentArgs {
    fn resolved(&self) -> Result<ExperimentArgs, Error> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentArgs =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cli = self;
        Ok(overlay!(
            cli, cfg, problem, r, toy_file, sizes, trials, seed, selection, k, mu, eta, delta, pm,
            chi, pc, lambda, lambda_b, partition, cap, out, format
        ))
    }

    fn family(&self) -> Result<Family, Error> {
        Ok(
            match self
                .problem
                .ok_or_else(|| Error::Config("--problem is required".into()))?
            {
                ProblemArg::Rr => Family::RoyalRoad {
                    r: self.r.unwrap_or(2),
                },
                ProblemArg::Vcp => Family::Vcp,
                ProblemArg::Onemax => Family::OneMax,
                ProblemArg::Leadingones => Family::LeadingOnes,
                ProblemArg::Toy => Family::Toy {
                    path: self
                        .toy_file
                        .clone()
                        .ok_or_else(|| Error::Config("--problem toy needs --toy-file".into()))?,
                },
            },
        )
    }

    fn spec(&self) -> Result<ExperimentSpec, Error> {
        let family = self.family()?;
        let sizes = match (&self.sizes, &family) {
            (Some(s), _) => s.clone(),
            (None, Family::Toy { path }) => {
                vec![levelga::problems::ToyNpo::load(path)?.dimension()]
            }
            (None, _) => return Err(Error::Config("--sizes is required".into())),
        };
        let selection = match (self.selection, self.k, self.mu, self.eta) {
            (Some(SelectionArg::MuLambda), _, mu, _) | (None, None, mu @ Some(_), None) => {
                SelectionRule::MuLambda(
                    mu.ok_or_else(|| Error::Config("mu-lambda selection needs --mu".into()))?,
                )
            }
            (Some(SelectionArg::ExpRanking), _, _, eta) | (None, None, None, eta @ Some(_)) => {
                SelectionRule::ExpRanking(
                    eta.ok_or_else(|| Error::Config("exp-ranking selection needs --eta".into()))?,
                )
            }
            (_, Some(k), _, _) => SelectionRule::Tournament(k),
            _ => SelectionRule::AdvisedTournament {
                delta: self.delta.unwrap_or(0.1),
            },
        };
        let mutation_rate = match (self.pm, self.chi) {
            (Some(_), Some(_)) => return Err(Error::Config("give either --pm or --chi".into())),
            (Some(p), None) => RateRule::Fixed(p),
            (None, chi) => RateRule::Chi(chi.unwrap_or(1.0)),
        };
        let lambda = match (self.lambda, self.lambda_b) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either --lambda or --lambda-b".into()))
            }
            (Some(l), None) => LambdaRule::Fixed(l),
            (None, b) => LambdaRule::LnScaled(b.unwrap_or(3.0)),
        };
        let partition = match self.partition.unwrap_or(PartitionArg::Canonical) {
            PartitionArg::Canonical => PartitionChoice::Canonical,
            PartitionArg::MergedLo => PartitionChoice::MergedLo,
            PartitionArg::InfeasibleFirst => PartitionChoice::InfeasibleFirst,
        };
        let spec = ExperimentSpec {
            family,
            sizes,
            partition,
            lambda,
            mutation_rate,
            repair: self.repair,
            selection,
            p_c: self.pc.unwrap_or(0.0),
            trials: self.trials.unwrap_or(30),
            seed: self.seed.unwrap_or(1),
            cap: self.cap.unwrap_or(levelga::engine::DEFAULT_MAX_EVALUATIONS),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn format(&self) -> OutputFormat {
        match self.format.unwrap_or(FormatArg::Csv) {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct AdviseArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    delta_prime: Option<f64>,
    /// Derive ε, p₀, δ′ from bitwise mutation χ/n and crossover p_c.
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    pc: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    lambda: usize,
    /// Upgrade probabilities; a single value is used for every level.
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<f64>,
    /// Defaults to the smallest upgrade probability.
    #[arg(long)]
    s_star: Option<f64>,
    #[arg(long)]
    p0: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    gamma0: f64,
}

#[derive(Args)]
struct CheckArgs {
    /// Check the neighbor-probability bound K^K/(en)^K instead.
    #[arg(long)]
    prop1: bool,
    /// Neighborhood radius for --prop1.
    #[arg(long = "K", alias = "kk")]
    big_k: Option<usize>,
    /// Slack δ′ for the advisor.
    #[arg(long, default_value_t = 1.0)]
    delta_prime: f64,
    /// Monte Carlo mode with this many sampled strings.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Local optimum to certify; omitted means the worst one reachable.
    #[arg(long)]
    x: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn single_size(spec: &ExperimentSpec) -> Result<usize, Error> {
    match spec.sizes.as_slice() {
        [n] => Ok(*n),
        _ => Err(Error::Config("give exactly one size".into())),
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run(args) => {
            let args = args.resolved()?;
            let result = run_experiment(&args.spec()?)?;
            write_rows(&result.rows, std::io::stdout().lock())?;
            if let Some(out) = &args.out {
                emit_results(&result, None, out, args.format())?;
            }
        }
        Command::Scale { exp, assert_slope } => {
            let args = exp.resolved()?;
            let (result, report) = scaling_study(&args.spec()?)?;
            write_rows(&result.rows, std::io::stdout().lock())?;
            let fit = &report.scaling.fit;
            println!(
                "slope={:.4} slope_se={:.4} r2={:.4} constant={:.6e} growth={:?}",
                fit.slope,
                fit.slope_std_err,
                fit.r_squared,
                report.scaling.constant,
                report.scaling.growth
            );
            if let Some(out) = &args.out {
                emit_results(&result, Some(&report), out, args.format())?;
            }
            if let Some(limit) = assert_slope {
                if fit.slope > limit {
                    eprintln!("slope {:.4} exceeds {limit}", fit.slope);
                    return Ok(ExitCode::from(EXIT_THRESHOLD));
                }
            }
        }
        Command::Advise(a) => {
            let (eps, p0, dp) = match (a.eps, a.p0, a.delta_prime, a.chi) {
                (Some(e), Some(p), Some(d), None) => (e, p, d),
                (None, None, None, Some(chi)) => {
                    corollary_advisor_inputs(chi, a.pc.unwrap_or(0.0), a.delta.unwrap_or(0.1))?
                }
                _ => {
                    return Err(Error::Config(
                        "give --eps, --p0 and --delta-prime, or --chi [--pc] [--delta]".into(),
                    ))
                }
            };
            let adv = lemma1_advisor(eps, p0, dp)?;
            println!(
                "eps={eps}\np0={p0}\ndelta_prime={dp}\neps_prime={}",
                adv.eps_prime
            );
            println!("k_min={}", adv.k_min);
            println!("mu_ratio_min={}", adv.mu_ratio_min);
            println!("eta_min={}", adv.eta_min);
            println!("gamma0={}", adv.gamma0);
            println!("delta={}", adv.delta_adopted);
        }
        Command::Bound(b) => {
            let s = if b.s.len() == 1 {
                vec![b.s[0]; b.m]
            } else {
                b.s.clone()
            };
            let s_star = b
                .s_star
                .unwrap_or_else(|| s.iter().copied().fold(f64::INFINITY, f64::min));
            let params = TheoremParams {
                m: b.m,
                lambda: b.lambda,
                s,
                s_star,
                p0: b.p0,
                eps: b.eps,
                delta: b.delta,
                gamma0: b.gamma0,
            };
            let bound = theorem1_bound(&params)?;
            let lb = lambda_lower_bound(&params)?;
            println!("bound={bound:.6e}");
            println!(
                "lambda_min={:.6}{}",
                lb.value,
                if lb.trivial { " (trivial)" } else { "" }
            );
            println!("lambda_ok={}", lb.admits(b.lambda));
        }
        Command::Check(c) => {
            let args = c.exp.resolved()?;
            if c.prop1 {
                let k = c
                    .big_k
                    .ok_or_else(|| Error::Config("--prop1 needs --K".into()))?;
                let family = args.family()?;
                let n = single_size(&args.spec()?)?;
                let problem = family.instantiate(n)?;
                let nbhd = levelga::NeighborhoodSpec::HammingRadius(k);
                let r = prop1_check(k, n, problem.as_ref(), &nbhd)?;
                println!("{}", serde_json::to_string_pretty(&r)?);
                return Ok(ExitCode::SUCCESS);
            }
            let spec = args.spec()?;
            let n = single_size(&spec)?;
            let problem = spec.family.instantiate(n)?;
            let partition = spec.partition.build(&spec.family, problem.as_ref())?;
            let config = spec.config_at(problem.as_ref())?;
            let suite = OperatorSuite {
                lambda: config.lambda,
                selection: config.selection,
                crossover: config.crossover,
                mutation: config.mutation,
            };
            let mode = match c.samples {
                Some(points) => CheckMode::MonteCarlo {
                    points,
                    draws: c.draws,
                    seed: spec.seed,
                },
                None => CheckMode::Exact,
            };
            let report =
                check_conditions(problem.as_ref(), &partition, &suite, c.delta_prime, mode)?;
            for e in &report.entries {
                println!(
                    "{:<4} {:<5} value={} threshold={} {}",
                    e.name,
                    e.status.to_string(),
                    e.value.map_or("-".into(), |v| format!("{v:.6e}")),
                    e.threshold.map_or("-".into(), |v| format!("{v:.6e}")),
                    e.witness.as_deref().unwrap_or("")
                );
            }
            let json = serde_json::to_string_pretty(&report)?;
            match &args.out {
                Some(out) => std::fs::write(out.with_extension("json"), json + "\n")?,
                None => println!("{json}"),
            }
        }
        Command::Localsearch(args) => {
            let args = args.resolved()?;
            let spec = args.spec()?;
            println!("family,n,start,moves,value");
            for (si, &n) in spec.sizes.iter().enumerate() {
                let problem = spec.family.instantiate(n)?;
                let nbhd = spec.family.neighborhood();
                let fallback = problem.fallback_feasible();
                let mut rng = RandomStream::new(spec.seed, (si as u64) << 32);
                for t in 0..spec.trials {
                    let mut x = BitString::random(n, &mut rng);
                    if !problem.is_feasible(&x) {
                        x = fallback.clone().ok_or_else(|| {
                            Error::Infeasible("random start infeasible and no fallback".into())
                        })?;
                    }
                    let res = local_search(problem.as_ref(), &nbhd, &x)?;
                    println!(
                        "{},{n},{t},{},{}",
                        spec.family.label(),
                        res.moves,
                        problem.objective(&res.optimum)
                    );
                }
            }
        }
        Command::Certify(c) => {
            let args = c.exp.resolved()?;
            let spec = args.spec()?;
            let n = single_size(&spec)?;
            let problem = spec.family.instantiate(n)?;
            let nbhd = spec.family.neighborhood();
            let report = match &c.x {
                Some(bits) => {
                    let x: BitString = bits.parse()?;
                    approximation_certify(problem.as_ref(), &nbhd, &x)?
                }
                None => worst_local_optimum_ratio(problem.as_ref(), &nbhd)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
