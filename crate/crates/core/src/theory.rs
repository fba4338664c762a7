//! Runtime bounds, selection-parameter advice, and verification of the
//! level-based conditions on concrete instances.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{fitness, BitString, Problem, RandomStream};
use crate::error::{Error, Result};
use crate::levels::{
    is_local_optimum, local_search, LevelPartition, NeighborhoodSpec, PartitionKind,
};
use crate::operators::{distance_probs, eps0_event, CrossoverOp, MutationOp, SelectionOp};
use crate::stats::{wilson_interval, Proportion};

/// Parameters of the level-based runtime bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremParams {
    pub m: usize,
    pub lambda: usize,
    /// Upgrade probabilities `s_1..s_m`.
    pub s: Vec<f64>,
    pub s_star: f64,
    pub p0: f64,
    pub eps: f64,
    pub delta: f64,
    pub gamma0: f64,
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {v} must lie in (0,1]")))
    }
}

impl TheoremParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.s.len() != self.m {
            return Err(Error::Parameter(format!(
                "need m >= 1 and one s_j per level (m = {}, {} given)",
                self.m,
                self.s.len()
            )));
        }
        for (j, &s) in self.s.iter().enumerate() {
            unit_interval(&format!("s_{}", j + 1), s)?;
        }
        unit_interval("s_*", self.s_star)?;
        unit_interval("p0", self.p0)?;
        unit_interval("eps", self.eps)?;
        if !(self.delta > 0.0) {
            return Err(Error::Parameter(format!(
                "delta = {} must be positive",
                self.delta
            )));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0) {
            return Err(Error::Parameter(format!(
                "gamma0 = {} must lie in (0,1)",
                self.gamma0
            )));
        }
        Ok(())
    }

    /// `a = δ²γ₀ / (2(1+δ))`.
    pub fn a(&self) -> f64 {
        self.delta * self.delta * self.gamma0 / (2.0 * (1.0 + self.delta))
    }

    /// `ψ = min{δ/2, 1/2}`.
    pub fn psi(&self) -> f64 {
        (self.delta / 2.0).min(0.5)
    }

    /// `c = ψ⁴ / 24`.
    pub fn c(&self) -> f64 {
        self.psi().powi(4) / 24.0
    }

    /// Selective-pressure factor `√((1+δ)/(p₀ ε γ₀))`.
    pub fn pressure_factor(&self) -> f64 {
        ((1.0 + self.delta) / (self.p0 * self.eps * self.gamma0)).sqrt()
    }
}

/// Upper bound on the expected hitting time in fitness evaluations:
/// `(2/(cψ))·(mλ(1+ln(1+cλ)) + p₀/((1+δ)γ₀)·Σ_j 1/s_j)`.
pub fn theorem1_bound(params: &TheoremParams) -> Result<f64> {
    params.validate()?;
    let (c, psi) = (params.c(), params.psi());
    let lambda = params.lambda as f64;
    let sum_inv: f64 = params.s.iter().map(|s| 1.0 / s).sum();
    let population_term = params.m as f64 * lambda * (1.0 + (c * lambda).ln_1p());
    let upgrade_term = params.p0 / ((1.0 + params.delta) * params.gamma0) * sum_inv;
    Ok(2.0 / (c * psi) * (population_term + upgrade_term))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaBound {
    /// Smallest admissible population size (real-valued).
    pub value: f64,
    /// The logarithm's argument was at most 1: any λ ≥ 1 qualifies.
    pub trivial: bool,
}

impl LambdaBound {
    pub fn admits(&self, lambda: usize) -> bool {
        lambda as f64 >= self.value
    }
}

/// Population-size requirement `(2/a)·ln(32 m p₀ / ((δγ₀)² c s_* ψ))`.
pub fn lambda_lower_bound(params: &TheoremParams) -> Result<LambdaBound> {
    params.validate()?;
    let arg = 32.0 * params.m as f64 * params.p0
        / ((params.delta * params.gamma0).powi(2) * params.c() * params.s_star * params.psi());
    if arg <= 1.0 {
        return Ok(LambdaBound {
            value: 1.0,
            trivial: true,
        });
    }
    Ok(LambdaBound {
        value: 2.0 / params.a() * arg.ln(),
        trivial: false,
    })
}

/// Selection thresholds guaranteeing the selective-pressure condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvisorResult {
    pub eps: f64,
    pub p0: f64,
    pub delta_prime: f64,
    /// `ε′ = ε·p₀`.
    pub eps_prime: f64,
    /// `⌈4(1+δ′)/ε′⌉`.
    pub k_min: usize,
    /// `(1+δ′)/ε′`, the minimal `λ/μ`.
    pub mu_ratio_min: f64,
    /// `4(1+δ′)/ε′`.
    pub eta_min: f64,
    /// `ε′/(4(1+δ′))`, for tournament and exponential ranking.
    pub gamma0: f64,
    /// `δ` adopted for the runtime bound (equal to `δ′`).
    pub delta_adopted: f64,
}

impl AdvisorResult {
    /// `γ₀` for a concrete mechanism: `μ/λ` for `(μ,λ)`-selection.
    pub fn gamma0_for(&self, selection: &SelectionOp, lambda: usize) -> f64 {
        match selection {
            SelectionOp::MuLambda { mu } => *mu as f64 / lambda as f64,
            _ => self.gamma0,
        }
    }

    /// Whether `selection` meets its threshold.
    pub fn satisfied_by(&self, selection: &SelectionOp, lambda: usize) -> bool {
        match *selection {
            SelectionOp::Tournament { k } => k >= self.k_min,
            SelectionOp::MuLambda { mu } => lambda as f64 / mu as f64 >= self.mu_ratio_min,
            SelectionOp::ExpRanking { eta } => eta >= self.eta_min,
        }
    }
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite value")
}

fn ceil_rational(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}

pub fn lemma1_advisor(eps: f64, p0: f64, delta_prime: f64) -> Result<AdvisorResult> {
    unit_interval("eps", eps)?;
    unit_interval("p0", p0)?;
    if !(delta_prime > 0.0 && delta_prime.is_finite()) {
        return Err(Error::Parameter(format!(
            "delta' = {delta_prime} must be positive"
        )));
    }
    let eps_prime = eps * p0;
    let four_ratio = rational(4.0) * (BigRational::one() + rational(delta_prime))
        / (rational(eps) * rational(p0));
    let k_min = ceil_rational(&four_ratio)
        .to_usize()
        .ok_or_else(|| Error::Parameter("tournament size overflows".into()))?;
    Ok(AdvisorResult {
        eps,
        p0,
        delta_prime,
        eps_prime,
        k_min,
        mu_ratio_min: (1.0 + delta_prime) / eps_prime,
        eta_min: 4.0 * (1.0 + delta_prime) / eps_prime,
        gamma0: eps_prime / (4.0 * (1.0 + delta_prime)),
        delta_adopted: delta_prime,
    })
}

/// Advisor inputs for bitwise mutation at rate `χ/n` with a crossover
/// that returns a parent unchanged with probability `1 - p_c`:
/// `ε = (1-p_c)/2`, `p₀ = e^{-χ}/(1+δ/2)`, `δ′ = (1+δ)/(1+δ/2) - 1`.
pub fn corollary_advisor_inputs(chi: f64, p_c: f64, delta: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..1.0).contains(&p_c) || !(chi > 0.0) || !(delta > 0.0) {
        return Err(Error::Parameter(format!(
            "need chi > 0, p_c in [0,1), delta > 0 (got {chi}, {p_c}, {delta})"
        )));
    }
    let eps = (1.0 - p_c) / 2.0;
    let p0 = (-chi).exp() / (1.0 + delta / 2.0);
    let delta_prime = (1.0 + delta) / (1.0 + delta / 2.0) - 1.0;
    Ok((eps, p0, delta_prime))
}

/// Compares a non-negative rational with `e^{-k}` using rational bounds on
/// `e`; `None` only if the two agree to about 40 digits.
pub fn cmp_exp_neg(r: &BigRational, k: u32) -> Option<Ordering> {
    const TERMS: u32 = 40;
    let mut lower = BigRational::zero();
    let mut term = BigRational::one();
    for j in 0..=TERMS {
        if j > 0 {
            term /= BigRational::from_integer(BigInt::from(j));
        }
        lower += &term;
    }
    // Tail Σ_{j>N} 1/j! < 2/(N+1)!.
    let upper = &lower + &term * BigRational::new(BigInt::from(2), BigInt::from(TERMS + 1));
    let above = BigRational::one() / num_traits::pow(lower, k as usize);
    let below = BigRational::one() / num_traits::pow(upper, k as usize);
    if *r >= above {
        Some(Ordering::Greater)
    } else if *r <= below {
        Some(Ordering::Less)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Result {
    pub k: usize,
    pub n: usize,
    /// `K^K/(en)^K`.
    pub bound: f64,
    /// Worst `Pr(Mut*(x) = y)` over the examined neighbor pairs.
    pub worst_exact: f64,
    pub worst_distance: usize,
    /// Decided in exact arithmetic.
    pub pass: bool,
    /// `(1-K/n)^{n-K} ≥ e^{-K}`, decided in exact arithmetic.
    pub appendix_pass: bool,
}

/// Exact `(K/n)^d ((n-K)/n)^{n-d}`.
fn neighbor_prob_exact(k: usize, n: usize, d: usize) -> BigRational {
    let p = BigRational::new(BigInt::from(k), BigInt::from(n));
    let q = BigRational::new(BigInt::from(n - k), BigInt::from(n));
    num_traits::pow(p, d) * num_traits::pow(q, n - d)
}

/// `(1-K/n)^{n-K} ≥ e^{-K}` in exact arithmetic.
pub fn appendix_inequality(k: usize, n: usize) -> Result<bool> {
    if k == 0 || 2 * k > n {
        return Err(Error::Parameter(format!(
            "need 1 <= K <= n/2 (K = {k}, n = {n})"
        )));
    }
    let q = BigRational::new(BigInt::from(n - k), BigInt::from(n));
    let lhs = num_traits::pow(q, n - k);
    cmp_exp_neg(&lhs, k as u32)
        .map(|o| o != Ordering::Less)
        .ok_or_else(|| Error::Degenerate("comparison with e^-K undecided".into()))
}

/// Checks the neighbor-probability lower bound `K^K/(en)^K` for bitwise
/// mutation at `p_m = K/n` over the neighborhood of `problem`.
pub fn prop1_check(
    k: usize,
    n: usize,
    problem: &dyn Problem,
    nbhd: &NeighborhoodSpec,
) -> Result<Prop1Result> {
    if k == 0 || 2 * k > n {
        return Err(Error::Parameter(format!(
            "need 1 <= K <= n/2 (K = {k}, n = {n})"
        )));
    }
    if problem.dimension() != n {
        return Err(Error::Dimension {
            expected: n,
            got: problem.dimension(),
        });
    }
    if nbhd.bound() > k {
        return Err(Error::Parameter(format!(
            "neighborhood bound {} exceeds K = {k}",
            nbhd.bound()
        )));
    }
    // Pr(Mut*(x) = y) depends on D(x,y) only; collect the attained distances.
    let mut attained = vec![false; k + 1];
    if let (NeighborhoodSpec::HammingRadius(r), true) = (nbhd, problem.all_feasible()) {
        // Every distance up to the radius is attained from any string.
        attained[1..=(*r).min(n)].iter_mut().for_each(|a| *a = true);
    }
    let points: Vec<BitString> = if attained.iter().any(|&a| a) {
        Vec::new()
    } else if n <= 12 {
        BitString::all(n).collect()
    } else {
        let mut rng = RandomStream::new(0x5eed, n as u64);
        (0..32).map(|_| BitString::random(n, &mut rng)).collect()
    };
    for x in points.iter().filter(|x| problem.is_feasible(x)) {
        for y in nbhd.neighbors(problem, x)? {
            attained[x.hamming(&y)] = true;
        }
    }
    let (worst_distance, worst) = (1..=k)
        .filter(|&d| attained[d])
        .map(|d| (d, neighbor_prob_exact(k, n, d)))
        .min_by(|a, b| a.1.cmp(&b.1))
        .ok_or_else(|| Error::Degenerate("no neighbor pairs found".into()))?;
    // worst ≥ K^K/(en)^K  ⟺  worst · n^K / K^K ≥ e^{-K}
    let scaled = &worst
        * BigRational::new(
            num_traits::pow(BigInt::from(n), k),
            num_traits::pow(BigInt::from(k), k),
        );
    let pass = cmp_exp_neg(&scaled, k as u32)
        .map(|o| o != Ordering::Less)
        .ok_or_else(|| Error::Degenerate("comparison with e^-K undecided".into()))?;
    let bound = (k as f64).powi(k as i32) / (std::f64::consts::E * n as f64).powi(k as i32);
    Ok(Prop1Result {
        k,
        n,
        bound,
        worst_exact: worst.to_f64().unwrap_or(0.0),
        worst_distance,
        pass,
        appendix_pass: appendix_inequality(k, n)?,
    })
}

/// Exact upgrade probabilities for `RR_{n,r}` under bitwise mutation and
/// the canonical partition: entry `j-1` is
/// `min_{x ∈ H_j} Pr(RR(Mut(x)) ≥ j)`, `j = 1..=n/r`.
///
/// For `p_m ≤ 1/2` the minimum over a level is attained when every
/// incomplete block is all zeros.
pub fn royal_road_upgrade_probs(n: usize, r: usize, p_m: f64) -> Result<Vec<f64>> {
    if r == 0 || !n.is_multiple_of(r) {
        return Err(Error::Parameter(format!(
            "block length {r} must divide {n}"
        )));
    }
    if !(0.0..=0.5).contains(&p_m) {
        return Err(Error::Parameter("closed form needs p_m <= 1/2".into()));
    }
    let m = n / r;
    let keep = (1.0 - p_m).powi(r as i32);
    let complete = p_m.powi(r as i32);
    let binom_pmf = |trials: usize, p: f64| -> Vec<f64> {
        let mut pmf = vec![0.0; trials + 1];
        pmf[0] = 1.0;
        for _ in 0..trials {
            for i in (0..=trials).rev() {
                pmf[i] = pmf[i] * (1.0 - p) + if i > 0 { pmf[i - 1] * p } else { 0.0 };
            }
        }
        pmf
    };
    // Probability that a string with `c` complete blocks (rest zeros) maps
    // to at least `target` complete blocks.
    let reach = |c: usize, target: usize| -> f64 {
        let kept = binom_pmf(c, keep);
        let made = binom_pmf(m - c, complete);
        let mut total = 0.0;
        for (a, pa) in kept.iter().enumerate() {
            for (b, pb) in made.iter().enumerate() {
                if a + b >= target {
                    total += pa * pb;
                }
            }
        }
        total
    };
    Ok((1..=m)
        .map(|j| {
            (j - 1..=m)
                .map(|c| reach(c, j))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Which set of conditions a partition kind calls for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionVariant {
    /// (C1)–(C5) on a canonical partition.
    Canonical,
    /// (C1), (C2′), (C3′), (C4′), (C5) with merged local optima.
    LocalOptima,
    /// The local-optima variant plus (L1)–(L3) for infeasible strings.
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::NotApplicable => "n/a",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub witness: Option<String>,
    pub method: Method,
    /// Monte Carlo sample count behind `value`.
    pub samples: Option<usize>,
    /// 95% interval for Monte Carlo values.
    pub interval: Option<(f64, f64)>,
}

impl ConditionEntry {
    fn new(name: &str, status: Status, method: Method) -> Self {
        ConditionEntry {
            name: name.into(),
            status,
            value: None,
            threshold: None,
            witness: None,
            method,
            samples: None,
            interval: None,
        }
    }
}

/// Operators and population size under examination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSuite {
    pub lambda: usize,
    pub selection: SelectionOp,
    pub crossover: CrossoverOp,
    pub mutation: MutationOp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CheckMode {
    Exact,
    MonteCarlo {
        /// Sampled strings (and string pairs).
        points: usize,
        /// Operator draws per sampled point.
        draws: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub problem: String,
    pub partition: PartitionKind,
    pub variant: ConditionVariant,
    pub m: usize,
    pub lambda: usize,
    pub method: Method,
    pub s: Vec<f64>,
    pub p0: f64,
    pub eps: f64,
    pub advisor: AdvisorResult,
    pub params: TheoremParams,
    pub lambda_bound: LambdaBound,
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn entry(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Every applicable condition passes.
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }
}

/// Largest `n` for exhaustive mutation sums.
pub const EXACT_MUTATION_MAX_N: usize = 12;
/// Largest `n` for exhaustive crossover pair enumeration.
pub const EXACT_CROSSOVER_MAX_N: usize = 10;

/// Sampled points and their levels (exact mode: all strings).
struct Universe {
    points: Vec<BitString>,
    levels: Vec<usize>,
    table: Option<Vec<usize>>,
}

impl Universe {
    fn level(
        &self,
        problem: &dyn Problem,
        partition: &LevelPartition,
        y: &BitString,
    ) -> Result<usize> {
        match &self.table {
            Some(t) => Ok(t[y.to_index() as usize]),
            None => partition.level_of(problem, y),
        }
    }
}

fn build_universe(
    problem: &dyn Problem,
    partition: &LevelPartition,
    mode: &CheckMode,
) -> Result<Universe> {
    let n = problem.dimension();
    match *mode {
        CheckMode::Exact => {
            if n > EXACT_MUTATION_MAX_N {
                return Err(Error::TooLarge(format!(
                    "exact condition check needs n <= {EXACT_MUTATION_MAX_N}, got {n}"
                )));
            }
            let table = partition.level_table(problem)?;
            Ok(Universe {
                points: BitString::all(n).collect(),
                levels: table.clone(),
                table: Some(table),
            })
        }
        CheckMode::MonteCarlo { points, seed, .. } => {
            // Uniform strings plus the states of hill-climbing walks from
            // them, so that high levels are represented.
            let mut rng = RandomStream::new(seed, 0);
            let walk = partition
                .neighborhood()
                .unwrap_or(NeighborhoodSpec::HammingRadius(1));
            let mut pts: Vec<BitString> = Vec::new();
            while pts.len() < points {
                let x = BitString::random(n, &mut rng);
                pts.push(x.clone());
                if problem.is_feasible(&x) {
                    let mut cur = x;
                    while let Some(y) = walk
                        .neighbors(problem, &cur)?
                        .into_iter()
                        .find(|y| problem.objective(y) > problem.objective(&cur))
                    {
                        pts.push(y.clone());
                        cur = y;
                    }
                }
            }
            pts.truncate(points.max(1));
            pts.sort();
            pts.dedup();
            let levels = pts
                .iter()
                .map(|x| partition.level_of(problem, x))
                .collect::<Result<_>>()?;
            Ok(Universe {
                points: pts,
                levels,
                table: None,
            })
        }
    }
}

/// Probability mass of `Mut(x)` by level (index 0 = level 1).
fn level_mass(
    problem: &dyn Problem,
    partition: &LevelPartition,
    universe: &Universe,
    mutation: &MutationOp,
    x: &BitString,
    mode: &CheckMode,
    rng: &mut RandomStream,
) -> Result<(Vec<f64>, Option<usize>)> {
    let levels = partition.m() + 1;
    let mut mass = vec![0.0; levels];
    match (mode, &universe.table) {
        (CheckMode::Exact, Some(table)) => {
            match mutation {
                MutationOp::Bitwise { p_m } => {
                    let n = problem.dimension();
                    let by_d = distance_probs(*p_m, n);
                    let xi = x.to_index();
                    for (y, &l) in table.iter().enumerate() {
                        mass[l - 1] += by_d[(xi ^ y as u64).count_ones() as usize];
                    }
                }
                _ => {
                    for (y, p) in mutation.distribution(problem, x)?.into_iter().enumerate() {
                        if p > 0.0 {
                            mass[table[y] - 1] += p;
                        }
                    }
                }
            }
            Ok((mass, None))
        }
        (CheckMode::MonteCarlo { draws, .. }, _) => {
            let w = 1.0 / *draws as f64;
            for _ in 0..*draws {
                let y = mutation.mutate(problem, x, rng)?;
                mass[universe.level(problem, partition, &y)? - 1] += w;
            }
            Ok((mass, Some(*draws)))
        }
        (CheckMode::Exact, None) => unreachable!("exact universes carry a level table"),
    }
}

// Summation can overshoot 1 by an ulp or two.
fn tail(mass: &[f64], from_level: usize) -> f64 {
    mass[from_level - 1..].iter().sum::<f64>().min(1.0)
}

struct Worst {
    value: f64,
    witness: Option<String>,
    draws: Option<usize>,
    /// Universe index of the witness and the level it must reach.
    at: Option<(usize, usize)>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::INFINITY,
            witness: None,
            draws: None,
            at: None,
        }
    }

    fn offer_at(
        &mut self,
        value: f64,
        witness: impl FnOnce() -> String,
        draws: Option<usize>,
        at: (usize, usize),
    ) {
        if value < self.value {
            self.at = Some(at);
        }
        self.offer(value, witness, draws);
    }

    fn offer(&mut self, value: f64, witness: impl FnOnce() -> String, draws: Option<usize>) {
        if value < self.value {
            self.value = value;
            self.witness = Some(witness());
            self.draws = draws;
        }
    }

    fn finish(self) -> f64 {
        if self.value.is_finite() {
            self.value
        } else {
            1.0
        }
    }
}

fn positive_entry(name: &str, worst: Worst, method: Method) -> ConditionEntry {
    let mut e = ConditionEntry::new(name, Status::Pass, method);
    let draws = worst.draws;
    e.witness = worst.witness.clone();
    let v = worst.finish();
    e.value = Some(v);
    e.threshold = Some(0.0);
    e.status = if v > 0.0 { Status::Pass } else { Status::Fail };
    if let Some(d) = draws {
        let p = wilson_interval((v * d as f64).round() as usize, d);
        e.samples = Some(d);
        e.interval = Some((p.lo, p.hi));
    }
    e
}

/// Crossover success `Pr(level(Cross(u,v)) ≥ target)`.
#[allow(clippy::too_many_arguments)]
fn crossover_reach(
    problem: &dyn Problem,
    partition: &LevelPartition,
    universe: &Universe,
    crossover: &CrossoverOp,
    u: &BitString,
    v: &BitString,
    target: usize,
    mode: &CheckMode,
    rng: &mut RandomStream,
) -> Result<f64> {
    match mode {
        CheckMode::Exact if problem.dimension() <= EXACT_CROSSOVER_MAX_N => {
            let mut p = 0.0;
            for (c, w) in crossover.distribution(u, v)? {
                if universe.level(problem, partition, &c)? >= target {
                    p += w;
                }
            }
            Ok(p)
        }
        _ => {
            let draws = match mode {
                CheckMode::MonteCarlo { draws, .. } => *draws,
                CheckMode::Exact => 2000,
            };
            let mut hits = 0;
            for _ in 0..draws {
                let c = crossover.cross(u, v, rng)?;
                if universe.level(problem, partition, &c)? >= target {
                    hits += 1;
                }
            }
            Ok(hits as f64 / draws as f64)
        }
    }
}

/// Population universe for the selective-pressure condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PressureUniverse {
    /// Every member on its own level, best first.
    DistinctLevels,
    /// For each grid point, `⌈γλ⌉` members on an upper level and the rest
    /// on a lower one. This minimises `β` for every mechanism here.
    WorstCase,
    /// All level-count compositions over `levels` levels.
    Compositions { levels: usize },
    /// Random level-count compositions.
    Sampled {
        levels: usize,
        count: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureCheck {
    pub points: usize,
    pub populations: usize,
    pub failures: usize,
    /// Smallest `β − γ·factor` seen.
    pub min_margin: f64,
    pub witness: Option<String>,
    /// Comparisons done in rational arithmetic.
    pub exact: bool,
}

impl PressureCheck {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

fn compositions(total: usize, parts: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        acc.push(total);
        out.push(acc.clone());
        acc.pop();
        return;
    }
    for first in 0..=total {
        acc.push(first);
        compositions(total - first, parts - 1, acc, out);
        acc.pop();
    }
}

/// Number of ways to spread `total` members over `parts` levels.
fn composition_count(total: usize, parts: usize) -> f64 {
    (1..parts).fold(1.0, |acc, i| acc * (total + i) as f64 / i as f64)
}

/// Non-empty level blocks, best level first.
fn blocks_best_first(counts: &[usize]) -> Vec<usize> {
    counts.iter().rev().copied().filter(|&c| c > 0).collect()
}

/// Exact `β` when the members at or above the ranked member's level are
/// the top `h` of a population whose fitness is monotone in level.
pub fn beta_top_exact(selection: &SelectionOp, lambda: usize, h: usize) -> Option<BigRational> {
    let l = BigInt::from(lambda);
    match *selection {
        SelectionOp::Tournament { k } => {
            let miss = BigRational::new(BigInt::from(lambda - h), l);
            Some(BigRational::one() - num_traits::pow(miss, k))
        }
        SelectionOp::MuLambda { mu } => {
            Some(BigRational::new(BigInt::from(h.min(mu)), BigInt::from(mu)))
        }
        SelectionOp::ExpRanking { .. } => None,
    }
}

/// Floating-point counterpart of [`beta_top_exact`].
pub fn beta_top(selection: &SelectionOp, lambda: usize, h: usize) -> f64 {
    let frac = h as f64 / lambda as f64;
    match *selection {
        SelectionOp::Tournament { k } => 1.0 - (1.0 - frac).powi(k as i32),
        SelectionOp::MuLambda { mu } => h.min(mu) as f64 / mu as f64,
        SelectionOp::ExpRanking { eta } => (-eta * frac).exp_m1() / (-eta).exp_m1(),
    }
}

/// Verifies `β(γ′, P) ≥ γ′·√factor_sq` at `γ′ = γ₀·i/grid`, `i = 1..=grid`,
/// over the given population universe. Tournament and `(μ,λ)` selection
/// are compared in exact rational arithmetic.
///
/// Populations are synthetic with fitness equal to level, so `β` depends
/// only on how many members share or beat the ranked member's level.
pub fn selective_pressure_check(
    selection: &SelectionOp,
    lambda: usize,
    gamma0: f64,
    factor_sq: f64,
    grid: usize,
    universe: &PressureUniverse,
) -> Result<PressureCheck> {
    selection.validate(lambda)?;
    if !(gamma0 > 0.0 && gamma0 < 1.0) || grid == 0 || !(factor_sq >= 0.0) {
        return Err(Error::Parameter(
            "need gamma0 in (0,1), grid >= 1, factor >= 0".into(),
        ));
    }
    let gamma0_q = rational(gamma0);
    let factor_q = rational(factor_sq);
    let lambda_q = BigRational::from_integer(BigInt::from(lambda));
    let gammas: Vec<BigRational> = (1..=grid)
        .map(|i| &gamma0_q * BigRational::new(BigInt::from(i), BigInt::from(grid)))
        .collect();
    let rank_of = |g: &BigRational| -> usize {
        ceil_rational(&(g * &lambda_q))
            .to_usize()
            .unwrap_or(lambda)
            .clamp(1, lambda)
    };

    // (grid point restriction, block sizes best level first)
    let mut pops: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
    match universe {
        PressureUniverse::DistinctLevels => pops.push((None, vec![1; lambda])),
        PressureUniverse::WorstCase => {
            for (gi, g) in gammas.iter().enumerate() {
                let h = rank_of(g);
                pops.push((Some(gi), blocks_best_first(&[lambda - h, h])));
            }
        }
        PressureUniverse::Compositions { levels } => {
            if lambda > 12 {
                return Err(Error::TooLarge(
                    "compositions enumerated for lambda <= 12 only".into(),
                ));
            }
            let mut all = Vec::new();
            compositions(lambda, (*levels).max(1), &mut Vec::new(), &mut all);
            pops.extend(all.iter().map(|c| (None, blocks_best_first(c))));
        }
        PressureUniverse::Sampled {
            levels,
            count,
            seed,
        } => {
            let mut rng = RandomStream::new(*seed, 0);
            let levels = (*levels).max(1);
            for _ in 0..*count {
                let mut counts = vec![0usize; levels];
                // Random cut points spread λ over a random subset of levels.
                let active = rng.random_range(1..=levels.min(lambda));
                let mut cuts: Vec<usize> = (0..active - 1)
                    .map(|_| rng.random_range(0..=lambda))
                    .collect();
                cuts.push(0);
                cuts.push(lambda);
                cuts.sort_unstable();
                let mut slots: Vec<usize> = (0..levels).collect();
                for i in (1..slots.len()).rev() {
                    slots.swap(i, rng.random_range(0..=i));
                }
                for w in 0..active {
                    counts[slots[w]] += cuts[w + 1] - cuts[w];
                }
                pops.push((None, blocks_best_first(&counts)));
            }
        }
    }

    let factor = factor_sq.sqrt();
    let mut check = PressureCheck {
        points: 0,
        populations: pops.len(),
        failures: 0,
        min_margin: f64::INFINITY,
        witness: None,
        exact: beta_top_exact(selection, lambda, lambda).is_some(),
    };
    // β depends on the population only through h: decide each (γ′, h) once.
    let mut verdicts: Vec<Vec<Option<(bool, f64)>>> = vec![vec![None; lambda + 1]; gammas.len()];
    for (only, blocks) in &pops {
        for (gi, g) in gammas.iter().enumerate() {
            if only.is_some_and(|o| o != gi) {
                continue;
            }
            let rank = rank_of(g);
            let mut h = 0;
            for &b in blocks {
                h += b;
                if h >= rank {
                    break;
                }
            }
            let gf = g.to_f64().unwrap_or(0.0);
            let rhs = gf * factor;
            check.points += 1;
            let (ok, beta) = *verdicts[gi][h].get_or_insert_with(|| {
                match beta_top_exact(selection, lambda, h) {
                    Some(beta) => (
                        &beta * &beta >= g * g * &factor_q,
                        beta.to_f64().unwrap_or(0.0),
                    ),
                    None => {
                        let beta = beta_top(selection, lambda, h);
                        (beta >= rhs, beta)
                    }
                }
            });
            let margin = beta - rhs;
            if margin < check.min_margin {
                check.min_margin = margin;
                check.witness = Some(format!(
                    "gamma'={gf:.6} rank={rank} beta={beta:.6} required={rhs:.6} blocks={blocks:?}"
                ));
            }
            if !ok {
                check.failures += 1;
            }
        }
    }
    Ok(check)
}

/// Verifies the level-based conditions for `suite` on `problem`.
///
/// Measured `ŝ_j`, `p̂₀` and `ε̂` are minima over the examined strings;
/// `γ₀` comes from [`lemma1_advisor`] with the measured `ε̂·p̂₀` and `δ′`,
/// and `δ = δ′` enters the bound.
pub fn check_conditions(
    problem: &dyn Problem,
    partition: &LevelPartition,
    suite: &OperatorSuite,
    delta_prime: f64,
    mode: CheckMode,
) -> Result<ConditionReport> {
    suite.selection.validate(suite.lambda)?;
    suite.crossover.validate()?;
    suite.mutation.validate(problem)?;
    let variant = match partition.kind() {
        PartitionKind::Canonical | PartitionKind::Custom => ConditionVariant::Canonical,
        PartitionKind::MergedLO => ConditionVariant::LocalOptima,
        PartitionKind::InfeasibleFirst => ConditionVariant::General,
    };
    let method = match mode {
        CheckMode::Exact => Method::Exact,
        CheckMode::MonteCarlo { .. } => Method::MonteCarlo,
    };
    let m = partition.m();
    let target = m + 1;
    let universe = build_universe(problem, partition, &mode)?;
    let seed = match mode {
        CheckMode::MonteCarlo { seed, .. } => seed,
        CheckMode::Exact => 0,
    };
    let mut rng = RandomStream::new(seed, 1);

    // Mutation: upgrade (C1), staying (C2 / C2'), feasibility (L2).
    let mut s_worst: Vec<Worst> = (0..m).map(|_| Worst::new()).collect();
    let mut c2 = Worst::new();
    let mut c2p = Worst::new();
    let mut l2 = Worst::new();
    for (xi, (x, &lx)) in universe.points.iter().zip(&universe.levels).enumerate() {
        let (mass, draws) = level_mass(
            problem,
            partition,
            &universe,
            &suite.mutation,
            x,
            &mode,
            &mut rng,
        )?;
        for j in 1..=m.min(lx) {
            let up = tail(&mass, j + 1);
            s_worst[j - 1].offer_at(up, || format!("x={x} level={lx} j={j}"), draws, (xi, j + 1));
        }
        if lx >= 2 {
            c2.offer_at(
                tail(&mass, lx),
                || format!("x={x} level={lx}"),
                draws,
                (xi, lx),
            );
        }
        let stay = match (&suite.mutation, mode) {
            (MutationOp::Bitwise { p_m }, _) => crate::operators::mutation_prob(*p_m, x, x),
            (_, CheckMode::Exact) => suite.mutation.stay_probability(problem, x)?,
            (_, CheckMode::MonteCarlo { draws, .. }) => {
                let mut hits = 0;
                for _ in 0..draws {
                    hits += (suite.mutation.mutate(problem, x, &mut rng)? == *x) as usize;
                }
                hits as f64 / draws as f64
            }
        };
        // Infeasible strings sit on the bottom level, so any output keeps
        // their level; the staying requirement binds on feasible strings.
        if variant != ConditionVariant::General || problem.is_feasible(x) {
            c2p.offer(stay, || format!("x={x}"), None);
        }
        if variant == ConditionVariant::General && !problem.is_feasible(x) {
            let feasible_mass = match (&universe.table, mode) {
                (Some(_), CheckMode::Exact) => {
                    let d = suite.mutation.distribution(problem, x)?;
                    d.iter()
                        .enumerate()
                        .filter(|(i, _)| {
                            problem
                                .is_feasible(&BitString::from_index(*i as u64, problem.dimension()))
                        })
                        .map(|(_, p)| p)
                        .sum()
                }
                _ => tail(&mass, 2),
            };
            l2.offer(feasible_mass, || format!("x={x}"), draws);
        }
    }
    if let CheckMode::MonteCarlo { seed, .. } = mode {
        // The minimum of noisy estimates is biased low; report each witness
        // from an independent batch of draws instead.
        let mut fresh = RandomStream::new(seed, 2);
        for w in s_worst.iter_mut().chain(std::iter::once(&mut c2)) {
            if let Some((xi, reach)) = w.at {
                let x = &universe.points[xi];
                let (mass, _) = level_mass(
                    problem,
                    partition,
                    &universe,
                    &suite.mutation,
                    x,
                    &mode,
                    &mut fresh,
                )?;
                w.value = tail(&mass, reach);
            }
        }
    }
    let s: Vec<f64> = s_worst
        .iter()
        .map(|w| if w.value.is_finite() { w.value } else { 1.0 })
        .collect();
    let mut entries = Vec::new();
    let mut c1 = ConditionEntry::new("C1", Status::Pass, method);
    c1.value = s.iter().copied().reduce(f64::min);
    c1.threshold = Some(0.0);
    if let Some((j, w)) = s_worst
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
    {
        c1.witness = w.witness.clone().map(|wi| format!("s_{}: {wi}", j + 1));
        if let Some(d) = w.draws {
            let p = wilson_interval((w.value * d as f64).round() as usize, d);
            c1.samples = Some(d);
            c1.interval = Some((p.lo, p.hi));
        }
    }
    c1.status = if s.iter().all(|&v| v > 0.0) {
        Status::Pass
    } else {
        Status::Fail
    };
    entries.push(c1);

    let c2_entry = positive_entry("C2", c2, method);
    let mut c2p_entry = positive_entry("C2'", c2p, method);
    if matches!(suite.mutation, MutationOp::Bitwise { .. }) {
        c2p_entry.method = Method::Exact;
        c2p_entry.samples = None;
        c2p_entry.interval = None;
    }
    let p0 = match variant {
        ConditionVariant::Canonical => c2_entry.value.unwrap_or(0.0),
        _ => c2p_entry.value.unwrap_or(0.0),
    };
    let (mut c2_entry, mut c2p_entry) = (c2_entry, c2p_entry);
    if variant == ConditionVariant::Canonical {
        c2p_entry.status = Status::NotApplicable;
    } else {
        c2_entry.status = Status::NotApplicable;
    }
    entries.push(c2_entry);
    entries.push(c2p_entry);

    // Crossover (C3 / C3'): u ∈ H_j, v ∈ H_{j+1}; worst j = min(l(u), l(v)-1).
    let last_j = match variant {
        ConditionVariant::Canonical => m,
        _ => m.saturating_sub(1),
    };
    let mut c3 = Worst::new();
    let pairs: Vec<(usize, usize)> = match mode {
        CheckMode::Exact => {
            let all = universe.points.len();
            (0..all)
                .flat_map(|a| (0..all).map(move |b| (a, b)))
                .collect()
        }
        CheckMode::MonteCarlo { points, .. } => (0..points)
            .map(|_| {
                (
                    rng.random_range(0..universe.points.len()),
                    rng.random_range(0..universe.points.len()),
                )
            })
            .collect(),
    };
    let pair_method =
        if matches!(mode, CheckMode::Exact) && problem.dimension() <= EXACT_CROSSOVER_MAX_N {
            method
        } else {
            Method::MonteCarlo
        };
    if last_j >= 1 {
        for (a, b) in pairs {
            let (lu, lv) = (universe.levels[a], universe.levels[b]);
            if lv < 2 {
                continue;
            }
            let j = lu.min(lv - 1).min(last_j);
            if j == 0 {
                continue;
            }
            let (u, v) = (&universe.points[a], &universe.points[b]);
            let p = crossover_reach(
                problem,
                partition,
                &universe,
                &suite.crossover,
                u,
                v,
                j + 1,
                &mode,
                &mut rng,
            )?;
            c3.offer(
                p,
                || format!("u={u} (level {lu}) v={v} (level {lv}) j={j}"),
                None,
            );
        }
    }
    let mut c3_entry = positive_entry(
        if variant == ConditionVariant::Canonical {
            "C3"
        } else {
            "C3'"
        },
        c3,
        pair_method,
    );
    if pair_method == Method::MonteCarlo {
        c3_entry.samples = Some(match mode {
            CheckMode::MonteCarlo { draws, .. } => draws,
            CheckMode::Exact => 2000,
        });
    }
    let eps = c3_entry.value.unwrap_or(0.0);
    entries.push(c3_entry);

    let advisor = if eps > 0.0 && p0 > 0.0 {
        lemma1_advisor(eps.min(1.0), p0.min(1.0), delta_prime)?
    } else {
        lemma1_advisor(1.0, 1.0, delta_prime)?
    };
    let gamma0 = advisor.gamma0_for(&suite.selection, suite.lambda);
    let s_star = s.iter().copied().fold(1.0, f64::min);
    let params = TheoremParams {
        m,
        lambda: suite.lambda,
        s: s.clone(),
        s_star,
        p0: p0.clamp(f64::MIN_POSITIVE, 1.0),
        eps: eps.clamp(f64::MIN_POSITIVE, 1.0),
        delta: delta_prime,
        gamma0: gamma0.min(0.999_999),
    };

    // Selective pressure (C4 on X^λ for canonical, C4' off the target).
    let c4_name = if variant == ConditionVariant::Canonical {
        "C4"
    } else {
        "C4'"
    };
    let lambda_bound = lambda_lower_bound(&params)?;
    if p0 > 0.0 && eps > 0.0 {
        let factor_sq = (1.0 + params.delta) / (params.p0 * params.eps * params.gamma0);
        let levels_in_universe = match variant {
            ConditionVariant::Canonical => target,
            _ => m,
        };
        let mut pressure = selective_pressure_check(
            &suite.selection,
            suite.lambda,
            params.gamma0,
            factor_sq,
            100,
            &PressureUniverse::WorstCase,
        )?;
        let extra = if suite.lambda <= 12
            && composition_count(suite.lambda, levels_in_universe) <= 200_000.0
        {
            PressureUniverse::Compositions {
                levels: levels_in_universe,
            }
        } else {
            PressureUniverse::Sampled {
                levels: levels_in_universe,
                count: 200,
                seed,
            }
        };
        let more = selective_pressure_check(
            &suite.selection,
            suite.lambda,
            params.gamma0,
            factor_sq,
            100,
            &extra,
        )?;
        if levels_in_universe < 2 {
            // A single available level forces β = 1.
            pressure = more.clone();
        }
        let mut c4 = ConditionEntry::new(
            c4_name,
            if pressure.pass() && more.pass() {
                Status::Pass
            } else {
                Status::Fail
            },
            Method::Exact,
        );
        c4.value = Some(pressure.min_margin.min(more.min_margin));
        c4.threshold = Some(0.0);
        c4.witness = if more.min_margin < pressure.min_margin {
            more.witness.clone()
        } else {
            pressure.witness.clone()
        };
        c4.samples = Some(pressure.populations + more.populations);
        entries.push(c4);

        let mut c5 = ConditionEntry::new(
            "C5",
            if lambda_bound.admits(suite.lambda) {
                Status::Pass
            } else {
                Status::Fail
            },
            Method::Exact,
        );
        c5.value = Some(suite.lambda as f64);
        c5.threshold = Some(lambda_bound.value);
        entries.push(c5);
    } else {
        // Without positive p0 and eps the pressure requirement is unbounded.
        for name in [c4_name, "C5"] {
            let mut e = ConditionEntry::new(name, Status::Fail, Method::Exact);
            e.witness = Some(format!("p0 = {p0}, eps = {eps}"));
            entries.push(e);
        }
    }

    if variant == ConditionVariant::General {
        let mut l1 = Worst::new();
        let nbhd = partition
            .neighborhood()
            .expect("general partition has a neighborhood");
        for x in universe.points.iter().filter(|x| problem.is_feasible(x)) {
            let nb = nbhd.neighbors(problem, x)?;
            if nb.is_empty() {
                continue;
            }
            match mode {
                CheckMode::Exact => {
                    let d = suite.mutation.distribution(problem, x)?;
                    for y in &nb {
                        l1.offer(d[y.to_index() as usize], || format!("x={x} y={y}"), None);
                    }
                }
                CheckMode::MonteCarlo { .. } => {
                    if let MutationOp::Bitwise { p_m } = suite.mutation {
                        for y in &nb {
                            l1.offer(
                                crate::operators::mutation_prob(p_m, x, y),
                                || format!("x={x} y={y}"),
                                None,
                            );
                        }
                    }
                }
            }
        }
        entries.push(positive_entry("L1", l1, method));
        let mut l2_entry = positive_entry("L2", l2, method);
        if l2_entry.witness.is_none() {
            l2_entry.status = Status::NotApplicable;
        }
        entries.push(l2_entry);
        let l3_value = match mode {
            CheckMode::Exact if problem.dimension() <= EXACT_CROSSOVER_MAX_N => {
                crate::operators::exact_eps(&suite.crossover, problem, eps0_event)?
            }
            _ => {
                let draws = match mode {
                    CheckMode::MonteCarlo { points, .. } => points.max(1000),
                    CheckMode::Exact => 10_000,
                };
                let n = problem.dimension();
                let mut sampler =
                    |r: &mut RandomStream| (BitString::random(n, r), BitString::random(n, r));
                crate::operators::estimate_eps0(
                    &suite.crossover,
                    problem,
                    &mut sampler,
                    draws,
                    &mut rng,
                )?
                .estimate
            }
        };
        let mut l3 = ConditionEntry::new(
            "L3",
            if l3_value > 0.0 {
                Status::Pass
            } else {
                Status::Fail
            },
            pair_method,
        );
        l3.value = Some(l3_value);
        l3.threshold = Some(0.0);
        entries.push(l3);
    }

    Ok(ConditionReport {
        problem: problem.name(),
        partition: partition.kind(),
        variant,
        m,
        lambda: suite.lambda,
        method,
        s,
        p0: params.p0,
        eps: params.eps,
        advisor,
        params,
        lambda_bound,
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub instance: String,
    pub local_optimum: String,
    pub value: u64,
    pub optimum: u64,
    /// `OPT / F(x)` (maximisation), at least 1.
    pub ratio: f64,
}

/// Brute-force (or analytic) optimum value over the feasible set.
pub fn optimum_value(problem: &dyn Problem) -> Result<u64> {
    if let Some(v) = problem.known_optimum() {
        return Ok(v);
    }
    let n = problem.dimension();
    if n > 20 {
        return Err(Error::TooLarge(format!("brute-force optimum for n = {n}")));
    }
    BitString::all(n)
        .filter(|x| problem.is_feasible(x))
        .map(|x| problem.objective(&x))
        .max()
        .ok_or_else(|| Error::Degenerate("no feasible solutions".into()))
}

/// Approximation ratio of a local optimum against the optimum.
pub fn approximation_certify(
    problem: &dyn Problem,
    nbhd: &NeighborhoodSpec,
    x: &BitString,
) -> Result<ApproxReport> {
    if !is_local_optimum(problem, nbhd, x)? {
        return Err(Error::Contract(format!("{x} is not a local optimum")));
    }
    let value = fitness(problem, x)?.0;
    let optimum = optimum_value(problem)?;
    let ratio = if value == 0 {
        if optimum == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        optimum as f64 / value as f64
    };
    Ok(ApproxReport {
        instance: problem.name(),
        local_optimum: x.to_string(),
        value,
        optimum,
        ratio,
    })
}

/// Worst ratio over all local optima reached by local search from every
/// feasible start (exhaustive, small `n`).
pub fn worst_local_optimum_ratio(
    problem: &dyn Problem,
    nbhd: &NeighborhoodSpec,
) -> Result<ApproxReport> {
    let n = problem.dimension();
    if n > 16 {
        return Err(Error::TooLarge(format!(
            "exhaustive local-optimum scan for n = {n}"
        )));
    }
    let mut worst: Option<ApproxReport> = None;
    for x in BitString::all(n).filter(|x| problem.is_feasible(x)) {
        let lo = local_search(problem, nbhd, &x)?.optimum;
        let rep = approximation_certify(problem, nbhd, &lo)?;
        if worst.as_ref().is_none_or(|w| rep.ratio > w.ratio) {
            worst = Some(rep);
        }
    }
    worst.ok_or_else(|| Error::Degenerate("no feasible solutions".into()))
}

/// Sign helper for tests and reports: `β − rhs` in rationals.
pub fn rational_margin(beta: &BigRational, rhs_sq: &BigRational) -> Ordering {
    let b2 = beta * beta;
    if beta.is_negative() {
        return Ordering::Less;
    }
    b2.cmp(rhs_sq)
}

/// Proportion helper re-exported for reports.
pub fn proportion(successes: usize, trials: usize) -> Proportion {
    wilson_interval(successes, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{OneMax, RoyalRoad, ToyNpo, TriangleVcp};

    fn example_params() -> TheoremParams {
        TheoremParams {
            m: 1,
            lambda: 10,
            s: vec![1.0],
            s_star: 1.0,
            p0: 1.0,
            eps: 1.0,
            delta: 1.0,
            gamma0: 0.25,
        }
    }

    /// Independent re-evaluation of the bound from its printed form.
    fn bound_oracle(m: f64, lambda: f64, s: &[f64], p0: f64, delta: f64, gamma0: f64) -> f64 {
        let psi = if delta / 2.0 < 0.5 { delta / 2.0 } else { 0.5 };
        let c = psi * psi * psi * psi / 24.0;
        let sum: f64 = s.iter().map(|v| v.recip()).sum();
        (2.0 / (c * psi))
            * (m * lambda * (1.0 + (1.0 + c * lambda).ln()) + p0 / ((1.0 + delta) * gamma0) * sum)
    }

    #[test]
    fn theorem1_bound_example() {
        let p = example_params();
        assert!((p.a() - 0.0625).abs() < 1e-15);
        assert_eq!(p.psi(), 0.5);
        assert!((p.c() - 1.0 / 384.0).abs() < 1e-18);
        let b = theorem1_bound(&p).unwrap();
        let expect = 384.0 * 4.0 * (10.0 * (1.0 + (1.0f64 + 10.0 / 384.0).ln()) + 2.0);
        assert!((b - expect).abs() < 1e-9 * expect);
        assert!((b - 18_826.9).abs() < 1.0);
        assert!((b - bound_oracle(1.0, 10.0, &[1.0], 1.0, 1.0, 0.25)).abs() < 1e-9 * b);
    }

    #[test]
    fn theorem1_bound_linear_and_monotone() {
        let base = TheoremParams {
            m: 3,
            lambda: 20,
            s: vec![0.01, 0.02, 0.05],
            s_star: 0.01,
            p0: 0.3,
            eps: 0.5,
            delta: 0.4,
            gamma0: 0.05,
        };
        let c = base.c();
        let psi = base.psi();
        let sum_term = |p: &TheoremParams| {
            theorem1_bound(p).unwrap() * c * psi / 2.0
                - p.m as f64 * p.lambda as f64 * (1.0 + (c * p.lambda as f64).ln_1p())
        };
        let doubled = TheoremParams {
            s: base.s.iter().map(|v| v * 2.0).collect(),
            s_star: base.s_star * 2.0,
            ..base.clone()
        };
        assert!((sum_term(&doubled) * 2.0 - sum_term(&base)).abs() < 1e-6 * sum_term(&base));
        let mut prev = 0.0;
        for lambda in [2, 5, 10, 50, 100, 1000] {
            let b = theorem1_bound(&TheoremParams {
                lambda,
                ..base.clone()
            })
            .unwrap();
            assert!(b > prev);
            prev = b;
        }
        let mut prev = 0.0;
        for m in 1..6 {
            let p = TheoremParams {
                m,
                s: vec![0.01; m],
                ..base.clone()
            };
            let b = theorem1_bound(&p).unwrap();
            assert!(b > prev);
            prev = b;
        }
        let zero = TheoremParams {
            s: vec![0.0, 0.02, 0.05],
            ..base
        };
        assert!(theorem1_bound(&zero).is_err());
    }

    #[test]
    fn lambda_bound_behaviour() {
        let adv = lemma1_advisor(0.5, (-1.0f64).exp() / 1.05, 0.1).unwrap();
        let s_star = (1.0f64 / 8.0).powi(2) * (7.0f64 / 8.0).powi(6);
        let p = TheoremParams {
            m: 4,
            lambda: 10,
            s: vec![s_star; 4],
            s_star,
            p0: (-1.0f64).exp() / 1.05,
            eps: 0.5,
            delta: 0.1,
            gamma0: adv.gamma0,
        };
        let lb = lambda_lower_bound(&p).unwrap();
        assert!(!lb.trivial);
        assert!(lb.value > 0.0);
        // direct evaluation
        let a = 0.01 * p.gamma0 / 2.2;
        let psi: f64 = 0.05;
        let c = psi.powi(4) / 24.0;
        let direct =
            2.0 / a * (32.0 * 4.0 * p.p0 / ((0.1 * p.gamma0).powi(2) * c * s_star * psi)).ln();
        assert!((lb.value - direct).abs() < 1e-9 * direct);
        let bigger_s = TheoremParams {
            s_star: 0.5,
            ..p.clone()
        };
        assert!(lambda_lower_bound(&bigger_s).unwrap().value < lb.value);
        let huge = TheoremParams {
            delta: 1e6,
            ..p.clone()
        };
        assert_eq!(huge.psi(), 0.5);
        let easy = TheoremParams {
            m: 1,
            s: vec![1.0],
            s_star: 1.0,
            p0: 1e-12,
            ..example_params()
        };
        let lb = lambda_lower_bound(&easy).unwrap();
        assert!(lb.trivial && lb.value == 1.0);
    }

    #[test]
    fn advisor_examples() {
        let a = lemma1_advisor(0.5, 0.5, 1.0).unwrap();
        assert_eq!(a.k_min, 32);
        assert_eq!(a.gamma0, 1.0 / 32.0);
        assert_eq!(a.mu_ratio_min, 8.0);
        assert_eq!(a.eta_min, 32.0);
        assert_eq!(a.delta_adopted, 1.0);
        assert_eq!(lemma1_advisor(1.0, 1.0, 1.0).unwrap().k_min, 8);
        let tiny = lemma1_advisor(0.5, 0.5, 1e-12).unwrap();
        assert!((tiny.eta_min - 16.0).abs() < 1e-9);
        assert_eq!(tiny.k_min, 17);
        assert!(lemma1_advisor(0.0, 0.5, 1.0).is_err());
        assert!(lemma1_advisor(0.5, 1.5, 1.0).is_err());
        assert!(lemma1_advisor(0.5, 0.5, 0.0).is_err());
        // un-rounded thresholds meet their defining equalities
        assert!((a.eta_min * a.eps_prime - 4.0 * (1.0 + a.delta_prime)).abs() < 1e-12);
        assert!((a.gamma0 * a.eta_min - 1.0).abs() < 1e-12);
        assert_eq!(a.gamma0_for(&SelectionOp::MuLambda { mu: 4 }, 32), 0.125);
        assert!(a.satisfied_by(&SelectionOp::Tournament { k: 32 }, 10));
        assert!(!a.satisfied_by(&SelectionOp::Tournament { k: 31 }, 10));
    }

    #[test]
    fn corollary_inputs_reproduce_closed_form() {
        for (chi, p_c, delta) in [(1.0, 0.0, 0.1), (2.0, 0.5, 1.0), (0.5, 0.2, 0.3)] {
            let (eps, p0, dp) = corollary_advisor_inputs(chi, p_c, delta).unwrap();
            let adv = lemma1_advisor(eps, p0, dp).unwrap();
            let closed = 8.0 * (1.0 + delta) * f64::exp(chi) / (1.0 - p_c);
            assert!((adv.eta_min - closed).abs() < 1e-9 * closed);
        }
        let (eps, p0, dp) = corollary_advisor_inputs(1.0, 0.0, 0.1).unwrap();
        assert_eq!(lemma1_advisor(eps, p0, dp).unwrap().k_min, 24);
    }

    #[test]
    fn exp_comparisons() {
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(cmp_exp_neg(&half, 1), Some(Ordering::Greater));
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(cmp_exp_neg(&third, 1), Some(Ordering::Less));
        // e^-2 = 0.1353352832...
        let just_above = BigRational::new(1_353_353.into(), 10_000_000.into());
        let just_below = BigRational::new(1_353_352.into(), 10_000_000.into());
        assert_eq!(cmp_exp_neg(&just_above, 2), Some(Ordering::Greater));
        assert_eq!(cmp_exp_neg(&just_below, 2), Some(Ordering::Less));
    }

    #[test]
    fn prop1_examples() {
        let om = OneMax::new(10);
        let r = prop1_check(1, 10, &om, &NeighborhoodSpec::HammingRadius(1)).unwrap();
        assert!((r.bound - 1.0 / (10.0 * std::f64::consts::E)).abs() < 1e-15);
        assert!((r.bound - 0.036788).abs() < 1e-6);
        assert!((r.worst_exact - 0.1 * 0.9f64.powi(9)).abs() < 1e-15);
        assert!((r.worst_exact - 0.038742).abs() < 1e-6);
        assert!(r.pass && r.appendix_pass);
        let om8 = OneMax::new(8);
        let r = prop1_check(2, 8, &om8, &NeighborhoodSpec::HammingRadius(2)).unwrap();
        assert!((r.bound - 4.0 / (8.0 * std::f64::consts::E).powi(2)).abs() < 1e-15);
        assert!((r.bound - 0.008458).abs() < 1e-6);
        assert_eq!(r.worst_distance, 2);
        // exhaustive oracle over every x and every neighbor
        let mut worst = f64::INFINITY;
        for x in BitString::all(8) {
            for y in crate::levels::hamming_neighborhood(&om8, &x, 2) {
                worst = worst.min(crate::operators::mutation_prob(0.25, &x, &y));
            }
        }
        assert!((r.worst_exact - worst).abs() < 1e-15);
        assert!(r.pass);
        assert!(prop1_check(3, 5, &OneMax::new(5), &NeighborhoodSpec::HammingRadius(1)).is_err());
        assert!(prop1_check(1, 8, &om8, &NeighborhoodSpec::HammingRadius(2)).is_err());
    }

    #[test]
    fn royal_road_closed_form_matches_enumeration() {
        let rr = RoyalRoad::new(8, 2).unwrap();
        let part = LevelPartition::canonical((0..=4).collect()).unwrap();
        let table = part.level_table(&rr).unwrap();
        let probs = distance_probs(0.125, 8);
        let closed = royal_road_upgrade_probs(8, 2, 0.125).unwrap();
        for j in 1..=4usize {
            let mut worst = f64::INFINITY;
            for (xi, &lx) in table.iter().enumerate() {
                if lx < j {
                    continue;
                }
                let up: f64 = table
                    .iter()
                    .enumerate()
                    .filter(|(_, &ly)| ly > j)
                    .map(|(yi, _)| probs[(xi ^ yi).count_ones() as usize])
                    .sum();
                worst = worst.min(up);
            }
            assert!((closed[j - 1] - worst).abs() < 1e-14, "j={j}");
        }
        assert!((closed[3] - (0.125f64).powi(2) * (0.875f64).powi(6)).abs() < 1e-15);
    }

    fn rr_suite(lambda: usize, k: usize) -> OperatorSuite {
        OperatorSuite {
            lambda,
            selection: SelectionOp::Tournament { k },
            crossover: CrossoverOp::single_point(0.0),
            mutation: MutationOp::bitwise(0.125),
        }
    }

    #[test]
    fn conditions_on_royal_road() {
        let rr = RoyalRoad::new(8, 2).unwrap();
        let part = LevelPartition::canonical((0..=4).collect()).unwrap();
        let rep = check_conditions(&rr, &part, &rr_suite(10, 47), 1.0, CheckMode::Exact).unwrap();
        let s_expect = (0.125f64).powi(2) * (0.875f64).powi(6);
        assert!((rep.s[3] - s_expect).abs() < 1e-15);
        assert!((rep.params.s_star - s_expect).abs() < 1e-15);
        assert!((rep.params.s_star - 0.0070124).abs() < 1e-7);
        assert!((rep.p0 - 0.875f64.powi(8)).abs() < 1e-15);
        assert!((rep.p0 - 0.3436).abs() < 1e-4);
        assert!((rep.eps - 0.5).abs() < 1e-12);
        assert_eq!(rep.advisor.k_min, 47);
        assert_eq!(rep.entry("C4").unwrap().status, Status::Pass);
        assert_eq!(rep.entry("C5").unwrap().status, Status::Fail);
        assert!(!rep.all_pass());
        let big = rep.lambda_bound.value.ceil() as usize;
        let rep2 = check_conditions(&rr, &part, &rr_suite(big, 47), 1.0, CheckMode::Exact).unwrap();
        assert!(rep2.all_pass(), "{:#?}", rep2.entries);
        // reproducible bit for bit
        let again = check_conditions(&rr, &part, &rr_suite(10, 47), 1.0, CheckMode::Exact).unwrap();
        assert_eq!(
            serde_json::to_string(&rep).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn weak_tournament_fails_pressure() {
        let rr = RoyalRoad::new(8, 2).unwrap();
        let part = LevelPartition::canonical((0..=4).collect()).unwrap();
        let rep = check_conditions(&rr, &part, &rr_suite(10, 2), 1.0, CheckMode::Exact).unwrap();
        assert_eq!(rep.entry("C4").unwrap().status, Status::Fail);
    }

    #[test]
    fn monte_carlo_brackets_exact_for_witness() {
        let rr = RoyalRoad::new(6, 2).unwrap();
        let part = LevelPartition::canonical((0..=3).collect()).unwrap();
        let suite = OperatorSuite {
            mutation: MutationOp::bitwise(0.3),
            ..rr_suite(8, 20)
        };
        let mc = check_conditions(
            &rr,
            &part,
            &suite,
            1.0,
            CheckMode::MonteCarlo {
                points: 64,
                draws: 4000,
                seed: 3,
            },
        )
        .unwrap();
        let exact = check_conditions(&rr, &part, &suite, 1.0, CheckMode::Exact).unwrap();
        let c1 = mc.entry("C1").unwrap();
        let (lo, hi) = c1.interval.unwrap();
        // The MC witness's exact upgrade probability lies in its interval,
        // and no sampled point can beat the exhaustive minimum.
        let witness = c1.witness.as_ref().unwrap();
        let x: BitString = witness
            .split("x=")
            .nth(1)
            .unwrap()
            .split(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        let j: usize = witness.rsplit("j=").next().unwrap().parse().unwrap();
        let d = suite.mutation.distribution(&rr, &x).unwrap();
        let up: f64 = d
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                part.level_of(&rr, &BitString::from_index(*i as u64, 6))
                    .unwrap()
                    > j
            })
            .map(|(_, p)| p)
            .sum();
        assert!(lo <= up && up <= hi, "{lo} {up} {hi}");
        assert!(up + 1e-12 >= exact.params.s_star);
        assert_eq!(mc.method, Method::MonteCarlo);
    }

    #[test]
    fn general_partition_conditions() {
        let toy = ToyNpo::knapsack(&[3, 4, 5, 6, 2, 7], &[4, 5, 6, 7, 1, 9], 12).unwrap();
        let nb = NeighborhoodSpec::HammingRadius(1);
        let part = LevelPartition::infeasible_first_enumerated(&toy, nb).unwrap();
        let suite = OperatorSuite {
            lambda: 8,
            selection: SelectionOp::Tournament { k: 40 },
            crossover: CrossoverOp::single_point(0.0),
            mutation: MutationOp::repair(MutationOp::bitwise(1.0 / 6.0)),
        };
        let rep = check_conditions(&toy, &part, &suite, 1.0, CheckMode::Exact).unwrap();
        assert_eq!(rep.variant, ConditionVariant::General);
        let l2 = rep.entry("L2").unwrap();
        assert_eq!(l2.status, Status::Pass);
        assert!((l2.value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rep.entry("L1").unwrap().status, Status::Pass);
        assert!(rep.entry("L3").unwrap().value.unwrap() >= 0.5 - 1e-12);
        // Staying is required of feasible strings only.
        let c2p = rep.entry("C2'").unwrap();
        assert_eq!(c2p.status, Status::Pass);
        assert!(c2p.value.unwrap() >= (5.0f64 / 6.0).powi(6) - 1e-12);
    }

    #[test]
    fn pressure_universes_agree_on_worst_case() {
        let sel = SelectionOp::Tournament { k: 32 };
        let worst = selective_pressure_check(
            &sel,
            12,
            1.0 / 32.0,
            256.0,
            100,
            &PressureUniverse::WorstCase,
        )
        .unwrap();
        let comps = selective_pressure_check(
            &sel,
            12,
            1.0 / 32.0,
            256.0,
            100,
            &PressureUniverse::Compositions { levels: 4 },
        )
        .unwrap();
        assert!(worst.pass() && comps.pass());
        assert!(worst.exact);
        assert!(comps.min_margin >= worst.min_margin - 1e-12);
        let sampled = selective_pressure_check(
            &SelectionOp::ExpRanking { eta: 32.0 },
            64,
            1.0 / 32.0,
            256.0,
            50,
            &PressureUniverse::Sampled {
                levels: 5,
                count: 40,
                seed: 1,
            },
        )
        .unwrap();
        assert!(sampled.pass());
        assert!(!sampled.exact);
    }

    #[test]
    fn closed_form_beta_matches_operator() {
        use crate::domain::{FitnessValue, Individual, Population};
        use crate::operators::cumulative_beta_exact_at_rank;
        let levels = [3usize, 3, 2, 2, 2, 1, 1, 1, 1];
        let members = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| Individual {
                genotype: BitString::from_index(i as u64, 8),
                fitness: FitnessValue(l as u64),
                level: Some(l),
            })
            .collect();
        let mut pop = Population::new(members).unwrap();
        pop.sort();
        for sel in [
            SelectionOp::Tournament { k: 3 },
            SelectionOp::MuLambda { mu: 4 },
            SelectionOp::ExpRanking { eta: 5.0 },
        ] {
            for rank in 1..=9 {
                let h = levels.iter().filter(|&&l| l >= levels[rank - 1]).count();
                let gamma = (rank as f64 - 0.5) / 9.0;
                let beta = crate::operators::cumulative_beta(&sel, &pop, gamma).unwrap();
                assert!((beta - beta_top(&sel, 9, h)).abs() < 1e-12);
                if let Some(exact) = beta_top_exact(&sel, 9, h) {
                    assert_eq!(
                        Some(exact),
                        cumulative_beta_exact_at_rank(&sel, &pop, rank).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn certify_examples() {
        let nb1 = NeighborhoodSpec::HammingRadius(1);
        for kappa in 1..=3 {
            let vcp = TriangleVcp::new(kappa);
            let w = worst_local_optimum_ratio(&vcp, &nb1).unwrap();
            assert_eq!(w.ratio, 1.0);
        }
        let rr = RoyalRoad::new(8, 2).unwrap();
        let rep = approximation_certify(
            &rr,
            &NeighborhoodSpec::HammingRadius(2),
            &BitString::ones(8),
        )
        .unwrap();
        assert_eq!(rep.ratio, 1.0);
        assert!(approximation_certify(
            &rr,
            &NeighborhoodSpec::HammingRadius(2),
            &BitString::zeros(8)
        )
        .is_err());
        // toy with a strict local optimum: 100 (value 5) vs optimum 011 (value 6)
        let toy = ToyNpo::from_fn(
            3,
            |_| true,
            |x| match x.to_string().as_str() {
                "100" => 5,
                "011" => 6,
                _ => 1,
            },
        )
        .unwrap();
        let rep = approximation_certify(&toy, &nb1, &"100".parse().unwrap()).unwrap();
        assert_eq!(rep.optimum, 6);
        assert!((rep.ratio - 1.2).abs() < 1e-12);
    }
}
