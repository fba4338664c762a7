//! Experiment orchestration: repeated trials over problem sizes, per-size
//! statistics, log-log scaling fits, and CSV / JSON emission.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Problem, RandomStream};
use crate::engine::{run_ga, GaConfig};
use crate::error::{Error, Result};
use crate::levels::{LevelPartition, NeighborhoodSpec};
use crate::operators::{CrossoverOp, MutationOp, SelectionOp};
use crate::problems::{LeadingOnes, OneMax, RoyalRoad, ToyNpo, TriangleVcp};
use crate::stats::{fit_constant, ols, LinearFit, Summary};
use crate::theory::{corollary_advisor_inputs, lemma1_advisor};

/// Benchmark family; sizes are bitstring lengths `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    RoyalRoad {
        r: usize,
    },
    /// `n = 3κ`.
    Vcp,
    OneMax,
    LeadingOnes,
    /// Tabulated instance; its own `n` is the only admissible size.
    Toy {
        path: PathBuf,
    },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::RoyalRoad { r } => format!("rr{r}"),
            Family::Vcp => "vcp".into(),
            Family::OneMax => "onemax".into(),
            Family::LeadingOnes => "leadingones".into(),
            Family::Toy { .. } => "toy".into(),
        }
    }

    pub fn instantiate(&self, n: usize) -> Result<Box<dyn Problem>> {
        Ok(match self {
            Family::RoyalRoad { r } => Box::new(RoyalRoad::new(n, *r)?),
            Family::Vcp => {
                if n == 0 || !n.is_multiple_of(3) {
                    return Err(Error::Parameter(format!(
                        "vcp size {n} is not a positive multiple of 3"
                    )));
                }
                Box::new(TriangleVcp::new(n / 3))
            }
            Family::OneMax => Box::new(OneMax::new(n)),
            Family::LeadingOnes => Box::new(LeadingOnes::new(n)),
            Family::Toy { path } => {
                let toy = ToyNpo::load(path)?;
                if toy.dimension() != n {
                    return Err(Error::Parameter(format!(
                        "toy instance has n = {}, size {n} requested",
                        toy.dimension()
                    )));
                }
                Box::new(toy)
            }
        })
    }

    /// Natural local-search neighborhood of the family.
    pub fn neighborhood(&self) -> NeighborhoodSpec {
        match self {
            Family::RoyalRoad { r } => NeighborhoodSpec::HammingRadius(*r),
            _ => NeighborhoodSpec::HammingRadius(1),
        }
    }

    /// All attained objective values of a feasible string, when known in
    /// closed form.
    fn values(&self, n: usize) -> Option<Vec<u64>> {
        match self {
            Family::RoyalRoad { r } => Some((0..=(n / r) as u64).collect()),
            Family::Vcp => Some((0..=(n / 3) as u64).collect()),
            Family::OneMax | Family::LeadingOnes => Some((0..=n as u64).collect()),
            Family::Toy { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionChoice {
    Canonical,
    MergedLo,
    InfeasibleFirst,
}

impl PartitionChoice {
    pub fn build(&self, family: &Family, problem: &dyn Problem) -> Result<LevelPartition> {
        let n = problem.dimension();
        let nbhd = family.neighborhood();
        match (self, family.values(n)) {
            (PartitionChoice::Canonical, Some(v)) => LevelPartition::canonical(v),
            (PartitionChoice::Canonical, None) => LevelPartition::canonical_enumerated(problem),
            (PartitionChoice::MergedLo, Some(v)) => LevelPartition::merged_lo(v, nbhd),
            (PartitionChoice::MergedLo, None) => {
                LevelPartition::merged_lo_enumerated(problem, nbhd)
            }
            (PartitionChoice::InfeasibleFirst, _) => {
                LevelPartition::infeasible_first_enumerated(problem, nbhd)
            }
        }
    }
}

/// Population size as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaRule {
    Fixed(usize),
    /// `⌈b ln n⌉`, at least 2.
    LnScaled(f64),
}

impl LambdaRule {
    pub fn at(&self, n: usize) -> usize {
        match *self {
            LambdaRule::Fixed(l) => l,
            LambdaRule::LnScaled(b) => ((b * (n as f64).ln()).ceil() as usize).max(2),
        }
    }
}

/// Bitwise mutation rate as a function of `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateRule {
    Fixed(f64),
    /// `χ/n`.
    Chi(f64),
}

impl RateRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            RateRule::Fixed(p) => p,
            RateRule::Chi(chi) => chi / n as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    Tournament(usize),
    /// Smallest tournament admitted by the advisor for bitwise mutation at
    /// rate `χ/n` and the given crossover probability.
    AdvisedTournament {
        delta: f64,
    },
    MuLambda(usize),
    ExpRanking(f64),
}

impl SelectionRule {
    pub fn at(&self, chi: f64, p_c: f64) -> Result<SelectionOp> {
        Ok(match *self {
            SelectionRule::Tournament(k) => SelectionOp::Tournament { k },
            SelectionRule::AdvisedTournament { delta } => {
                let (eps, p0, dp) = corollary_advisor_inputs(chi, p_c, delta)?;
                SelectionOp::Tournament {
                    k: lemma1_advisor(eps, p0, dp)?.k_min,
                }
            }
            SelectionRule::MuLambda(mu) => SelectionOp::MuLambda { mu },
            SelectionRule::ExpRanking(eta) => SelectionOp::ExpRanking { eta },
        })
    }
}

/// Parameter of the selection mechanism as one number (`k`, `μ` or `η`).
pub fn selection_parameter(sel: &SelectionOp) -> f64 {
    match *sel {
        SelectionOp::Tournament { k } => k as f64,
        SelectionOp::MuLambda { mu } => mu as f64,
        SelectionOp::ExpRanking { eta } => eta,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub partition: PartitionChoice,
    pub lambda: LambdaRule,
    pub mutation_rate: RateRule,
    /// Wrap mutation with the fallback-solution repair.
    pub repair: bool,
    pub selection: SelectionRule,
    pub p_c: f64,
    pub trials: usize,
    pub seed: u64,
    pub cap: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Config("no sizes given".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sizes must be strictly increasing".into()));
        }
        if !(0.0..1.0).contains(&self.p_c) {
            return Err(Error::Config(format!(
                "p_c = {} must lie in [0,1)",
                self.p_c
            )));
        }
        Ok(())
    }

    /// GA configuration for size `n`.
    pub fn config_at(&self, problem: &dyn Problem) -> Result<GaConfig> {
        let n = problem.dimension();
        let p_m = self.mutation_rate.at(n);
        let selection = self.selection.at(p_m * n as f64, self.p_c)?;
        let mut mutation = MutationOp::bitwise(p_m);
        if self.repair {
            mutation = MutationOp::repair(mutation);
        }
        let config = GaConfig::new(
            self.lambda.at(n),
            selection,
            CrossoverOp::single_point(self.p_c),
            mutation,
        )
        .with_cap(self.cap);
        config.validate(problem)?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub family: String,
    pub n: usize,
    pub trial: usize,
    /// Empty when censored.
    pub hitting_time: Option<u64>,
    pub censored: bool,
    pub evaluations: u64,
}

/// One CSV row: statistics over the uncensored trials of one size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub family: String,
    pub n: usize,
    pub lambda: usize,
    pub k_or_mu_or_eta: f64,
    pub p_m: f64,
    pub p_c: f64,
    pub trials: usize,
    pub censored: usize,
    #[serde(rename = "mean_T")]
    pub mean_t: Option<f64>,
    #[serde(rename = "median_T")]
    pub median_t: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl SizeStats {
    pub fn censoring_rate(&self) -> f64 {
        self.censored as f64 / self.trials as f64
    }

    /// Fewer than two uncensored trials: the interval is a point.
    pub fn degenerate_ci(&self) -> bool {
        self.trials - self.censored < 2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<SizeStats>,
    pub trials: Vec<TrialRecord>,
}

/// Runs every `(size, trial)` pair on its own stream
/// `(seed, size_index << 32 | trial)`; output order is fixed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let family = spec.family.label();
    let mut rows = Vec::with_capacity(spec.sizes.len());
    let mut trials = Vec::with_capacity(spec.sizes.len() * spec.trials);
    for (si, &n) in spec.sizes.iter().enumerate() {
        let problem = spec.family.instantiate(n)?;
        let partition = spec.partition.build(&spec.family, problem.as_ref())?;
        let config = spec.config_at(problem.as_ref())?;
        let results = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = RandomStream::new(spec.seed, ((si as u64) << 32) | t as u64);
                run_ga(problem.as_ref(), &partition, &config, &mut rng)
                    .map_err(|e| Error::Config(format!("{family} n={n} trial {t}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let times: Vec<f64> = results
            .iter()
            .filter_map(|r| r.hitting_time)
            .map(|t| t as f64)
            .collect();
        let summary = Summary::of(&times);
        let p_m = match config.mutation {
            MutationOp::Bitwise { p_m } => p_m,
            _ => spec.mutation_rate.at(n),
        };
        rows.push(SizeStats {
            family: family.clone(),
            n,
            lambda: config.lambda,
            k_or_mu_or_eta: selection_parameter(&config.selection),
            p_m,
            p_c: spec.p_c,
            trials: spec.trials,
            censored: results.iter().filter(|r| r.censored).count(),
            mean_t: summary.map(|s| s.mean),
            median_t: summary.map(|s| s.median),
            ci_lo: summary.map(|s| s.ci_lo),
            ci_hi: summary.map(|s| s.ci_hi),
        });
        trials.extend(results.into_iter().enumerate().map(|(t, r)| TrialRecord {
            family: family.clone(),
            n,
            trial: t,
            hitting_time: r.hitting_time,
            censored: r.censored,
            evaluations: r.evaluations,
        }));
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows,
        trials,
    })
}

/// Reference growth for the fitted constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    /// `n^e`.
    Power(f64),
    /// `n ln n ln ln n`.
    NLogNLogLogN,
}

impl Growth {
    pub fn at(&self, n: f64) -> f64 {
        match *self {
            Growth::Power(e) => n.powf(e),
            Growth::NLogNLogLogN => n * n.ln() * n.ln().ln(),
        }
    }

    pub fn for_family(family: &Family) -> Growth {
        match family {
            Family::RoyalRoad { r } => Growth::Power(*r as f64 + 1.0),
            Family::Vcp => Growth::NLogNLogLogN,
            Family::OneMax => Growth::Power(1.0),
            Family::LeadingOnes | Family::Toy { .. } => Growth::Power(2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// OLS on `(ln n, ln mean T)`.
    pub fit: LinearFit,
    pub growth: Growth,
    /// Least-squares `c` in `mean T ≈ c·growth(n)`.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<SizeStats>,
    pub scaling: ScalingFit,
}

/// Log-log regression of mean hitting time on `n`.
pub fn fit_scaling(ns: &[f64], means: &[f64], growth: Growth) -> Result<ScalingFit> {
    if ns.len() < 3 || ns.len() != means.len() {
        return Err(Error::Parameter(format!(
            "scaling fit needs at least 3 sizes, got {}",
            ns.len()
        )));
    }
    if let Some(i) = means.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::Degenerate(format!(
            "mean T = {} at n = {}; logarithm undefined",
            means[i], ns[i]
        )));
    }
    let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let fit = ols(&x, &y).ok_or_else(|| Error::Degenerate("sizes do not vary".into()))?;
    let g: Vec<f64> = ns.iter().map(|&n| growth.at(n)).collect();
    let constant = fit_constant(&g, means)
        .ok_or_else(|| Error::Degenerate("reference growth vanishes".into()))?;
    Ok(ScalingFit {
        fit,
        growth,
        constant,
    })
}

pub fn scaling_from_rows(rows: &[SizeStats], growth: Growth) -> Result<ScalingFit> {
    if let Some(r) = rows.iter().find(|r| r.censored == r.trials) {
        return Err(Error::Degenerate(format!(
            "every trial censored at n = {} (lambda {}, {} trials); raise the cap or change parameters",
            r.n, r.lambda, r.trials
        )));
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean_t.unwrap_or(0.0)).collect();
    fit_scaling(&ns, &means, growth)
}

pub fn scaling_study(spec: &ExperimentSpec) -> Result<(ExperimentResult, ScalingReport)> {
    if spec.sizes.len() < 3 {
        return Err(Error::Config(format!(
            "scaling study needs at least 3 sizes, got {}",
            spec.sizes.len()
        )));
    }
    let result = run_experiment(spec)?;
    let scaling = scaling_from_rows(&result.rows, Growth::for_family(&spec.family))?;
    let report = ScalingReport {
        rows: result.rows.clone(),
        scaling,
    };
    Ok((result, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn write_rows<W: Write>(rows: &[SizeStats], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record([
        "family",
        "n",
        "lambda",
        "k_or_mu_or_eta",
        "p_m",
        "p_c",
        "trials",
        "censored",
        "mean_T",
        "median_T",
        "ci_lo",
        "ci_hi",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<SizeStats>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_trials<W: Write>(trials: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if trials.is_empty() {
        w.write_record([
            "family",
            "n",
            "trial",
            "hitting_time",
            "censored",
            "evaluations",
        ])?;
    }
    for t in trials {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`emit_results`].
#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub table: PathBuf,
    pub trials: Option<PathBuf>,
}

/// Writes `<stem>.csv` plus `<stem>_trials.csv`, or `<stem>.json`.
pub fn emit_results(
    result: &ExperimentResult,
    scaling: Option<&ScalingReport>,
    out: &Path,
    format: OutputFormat,
) -> Result<Emitted> {
    let stem = out.with_extension("");
    match format {
        OutputFormat::Csv => {
            let table = stem.with_extension("csv");
            write_rows(&result.rows, File::create(&table)?)?;
            let name = format!(
                "{}_trials.csv",
                stem.file_name()
                    .and_then(|s| s.to_str())
                    .unwrap_or("results")
            );
            let trials = stem.with_file_name(name);
            write_trials(&result.trials, File::create(&trials)?)?;
            Ok(Emitted {
                table,
                trials: Some(trials),
            })
        }
        OutputFormat::Json => {
            let table = stem.with_extension("json");
            let doc = serde_json::json!({
                "experiment": result,
                "scaling": scaling,
            });
            let mut f = File::create(&table)?;
            serde_json::to_writer_pretty(&mut f, &doc)?;
            writeln!(f)?;
            Ok(Emitted {
                table,
                trials: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rr_spec(sizes: Vec<usize>, trials: usize) -> ExperimentSpec {
        ExperimentSpec {
            family: Family::RoyalRoad { r: 2 },
            sizes,
            partition: PartitionChoice::Canonical,
            lambda: LambdaRule::LnScaled(3.0),
            mutation_rate: RateRule::Chi(1.0),
            repair: false,
            selection: SelectionRule::AdvisedTournament { delta: 0.1 },
            p_c: 0.0,
            trials,
            seed: 7,
            cap: 10_000_000,
        }
    }

    #[test]
    fn single_trial_has_degenerate_interval() {
        let res = run_experiment(&rr_spec(vec![8], 1)).unwrap();
        let row = &res.rows[0];
        assert!(row.degenerate_ci());
        assert_eq!(row.ci_lo, row.mean_t);
        assert_eq!(row.ci_hi, row.mean_t);
    }

    #[test]
    fn experiments_are_deterministic() {
        let spec = rr_spec(vec![8, 10], 6);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 12);
        assert_eq!(a.rows[0].lambda, 7);
        assert_eq!(a.rows[0].k_or_mu_or_eta, 24.0);
        let mut other = spec.clone();
        other.seed = 8;
        assert_ne!(run_experiment(&other).unwrap().trials, a.trials);
    }

    #[test]
    fn rr8_corollary_parameters_never_censor() {
        let res = run_experiment(&rr_spec(vec![8], 30)).unwrap();
        assert_eq!(res.rows[0].censored, 0);
    }

    #[test]
    fn censored_trials_excluded_from_mean() {
        let mut spec = rr_spec(vec![20], 4);
        spec.cap = 20;
        spec.lambda = LambdaRule::Fixed(10);
        let res = run_experiment(&spec).unwrap();
        let row = &res.rows[0];
        let uncensored: Vec<f64> = res
            .trials
            .iter()
            .filter_map(|t| t.hitting_time)
            .map(|t| t as f64)
            .collect();
        assert_eq!(row.censored + uncensored.len(), 4);
        match Summary::of(&uncensored) {
            Some(s) => assert_eq!(row.mean_t, Some(s.mean)),
            None => assert_eq!(row.mean_t, None),
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = rr_spec(vec![8, 8], 1);
        assert!(spec.validate().is_err());
        spec.sizes = vec![8];
        spec.trials = 0;
        assert!(spec.validate().is_err());
        spec.trials = 1;
        spec.sizes = vec![9];
        assert!(run_experiment(&spec).is_err());
        assert!(scaling_study(&rr_spec(vec![8, 10], 1)).is_err());
    }

    #[test]
    fn power_law_slope_recovered() {
        let ns = [8.0, 16.0, 32.0, 64.0, 128.0];
        let means: Vec<f64> = ns.iter().map(|n: &f64| n.powi(3)).collect();
        let f = fit_scaling(&ns, &means, Growth::Power(3.0)).unwrap();
        assert!((f.fit.slope - 3.0).abs() < 1e-3);
        assert!((f.constant - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vcp_constant_recovered() {
        let ns = [12.0, 24.0, 48.0, 96.0];
        let g = Growth::NLogNLogLogN;
        let means: Vec<f64> = ns.iter().map(|&n| 4.2 * g.at(n)).collect();
        let f = fit_scaling(&ns, &means, g).unwrap();
        assert!((f.constant - 4.2).abs() < 0.042);
    }

    #[test]
    fn full_censoring_aborts() {
        let row = |n, censored| SizeStats {
            family: "rr2".into(),
            n,
            lambda: 5,
            k_or_mu_or_eta: 2.0,
            p_m: 0.1,
            p_c: 0.0,
            trials: 3,
            censored,
            mean_t: if censored == 3 {
                None
            } else {
                Some(10.0 * n as f64)
            },
            median_t: None,
            ci_lo: None,
            ci_hi: None,
        };
        let rows = vec![row(8, 0), row(10, 3), row(12, 0)];
        let err = scaling_from_rows(&rows, Growth::Power(3.0)).unwrap_err();
        assert!(err.to_string().contains("n = 10"));
    }

    #[test]
    fn csv_round_trip_and_trial_counts() {
        let dir = tempfile::tempdir().unwrap();
        let res = run_experiment(&rr_spec(vec![8, 10], 3)).unwrap();
        let emitted = emit_results(&res, None, &dir.path().join("out"), OutputFormat::Csv).unwrap();
        assert_eq!(read_rows(&emitted.table).unwrap(), res.rows);
        let text = std::fs::read_to_string(emitted.trials.unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        let empty = dir.path().join("empty.csv");
        write_rows(&[], File::create(&empty).unwrap()).unwrap();
        let header = std::fs::read_to_string(&empty).unwrap();
        assert_eq!(header.lines().count(), 1);
        assert!(header.starts_with("family,n,lambda,k_or_mu_or_eta,p_m,p_c,trials,censored,mean_T"));
        assert!(read_rows(&empty).unwrap().is_empty());
        let json = emit_results(&res, None, &dir.path().join("out"), OutputFormat::Json).unwrap();
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(json.table).unwrap()).unwrap();
        assert_eq!(doc["experiment"]["rows"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn unwritable_path_errors() {
        let res = run_experiment(&rr_spec(vec![8], 1)).unwrap();
        let bad = Path::new("/nonexistent-dir/sub/out");
        assert!(emit_results(&res, None, bad, OutputFormat::Csv).is_err());
    }
}
