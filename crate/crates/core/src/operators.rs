//! Selection, crossover and mutation. Every operator has a sampler and an
//! exact transition-probability evaluator.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{fitness, gamma_rank, BitString, Population, Problem};
use crate::error::{Error, Result};
use crate::levels::NeighborhoodSpec;
use crate::stats::{wilson_interval, Proportion};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SelectionOp {
    /// `k` uniform draws with replacement; the fittest wins, ties to the
    /// lowest rank index.
    Tournament { k: usize },
    /// Uniform over the first `mu` ranks.
    MuLambda { mu: usize },
    /// Rank `i` with probability `∫_{(i-1)/λ}^{i/λ} α`, where
    /// `α(γ) = η e^{η(1-γ)} / (e^η - 1)`.
    ExpRanking { eta: f64 },
}

/// `∫_0^γ α(x) dx` for the exponential ranking function.
fn exp_ranking_cdf(eta: f64, gamma: f64) -> f64 {
    ((-eta * gamma).exp_m1() / (-eta).exp_m1()).clamp(0.0, 1.0)
}

impl SelectionOp {
    pub fn validate(&self, lambda: usize) -> Result<()> {
        match *self {
            SelectionOp::Tournament { k: 0 } => Err(Error::Parameter(
                "tournament size must be at least 1".into(),
            )),
            SelectionOp::MuLambda { mu } if mu == 0 || mu > lambda => Err(Error::Config(format!(
                "mu = {mu} must satisfy 1 <= mu <= lambda = {lambda}"
            ))),
            SelectionOp::ExpRanking { eta } if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::Parameter(format!("eta must be positive, got {eta}")))
            }
            _ => Ok(()),
        }
    }

    /// Samples a 0-based rank index.
    pub fn select<R: Rng + ?Sized>(&self, pop: &Population, rng: &mut R) -> Result<usize> {
        pop.require_sorted()?;
        let lambda = pop.lambda();
        self.validate(lambda)?;
        Ok(match *self {
            SelectionOp::Tournament { k } => {
                let mut best = rng.random_range(0..lambda);
                for _ in 1..k {
                    let c = rng.random_range(0..lambda);
                    let (fc, fb) = (pop.get(c).fitness, pop.get(best).fitness);
                    if fc > fb || (fc == fb && c < best) {
                        best = c;
                    }
                }
                best
            }
            SelectionOp::MuLambda { mu } => rng.random_range(0..mu),
            SelectionOp::ExpRanking { eta } => {
                let u: f64 = rng.random();
                let l = lambda as f64;
                let g = -(u * (-eta).exp_m1()).ln_1p() / eta;
                let mut i = ((g * l).ceil() as usize).clamp(1, lambda);
                while i > 1 && exp_ranking_cdf(eta, (i - 1) as f64 / l) > u {
                    i -= 1;
                }
                while i < lambda && exp_ranking_cdf(eta, i as f64 / l) <= u {
                    i += 1;
                }
                i - 1
            }
        })
    }

    /// Exact `p_sel(i | P)` for every 0-based rank.
    pub fn selection_probs(&self, pop: &Population) -> Result<Vec<f64>> {
        pop.require_sorted()?;
        let lambda = pop.lambda();
        self.validate(lambda)?;
        let l = lambda as f64;
        Ok(match *self {
            SelectionOp::Tournament { k } => tournament_weights(pop)
                .into_iter()
                .map(|w| (w as f64 / l).powi(k as i32) - ((w - 1) as f64 / l).powi(k as i32))
                .collect(),
            SelectionOp::MuLambda { mu } => (0..lambda)
                .map(|i| if i < mu { 1.0 / mu as f64 } else { 0.0 })
                .collect(),
            SelectionOp::ExpRanking { eta } => (1..=lambda)
                .map(|i| {
                    exp_ranking_cdf(eta, i as f64 / l) - exp_ranking_cdf(eta, (i - 1) as f64 / l)
                })
                .collect(),
        })
    }

    pub fn selection_prob(&self, pop: &Population, i: usize) -> Result<f64> {
        if i >= pop.lambda() {
            return Err(Error::Parameter(format!("index {i} outside population")));
        }
        Ok(self.selection_probs(pop)?[i])
    }

    /// Exact rational `p_sel`; `None` for mechanisms with irrational
    /// probabilities (exponential ranking).
    pub fn selection_probs_exact(&self, pop: &Population) -> Result<Option<Vec<BigRational>>> {
        pop.require_sorted()?;
        let lambda = pop.lambda();
        self.validate(lambda)?;
        Ok(match *self {
            SelectionOp::Tournament { k } => {
                let denom = BigInt::from(lambda).pow(k as u32);
                Some(
                    tournament_weights(pop)
                        .into_iter()
                        .map(|w| {
                            let num =
                                BigInt::from(w).pow(k as u32) - BigInt::from(w - 1).pow(k as u32);
                            BigRational::new(num, denom.clone())
                        })
                        .collect(),
                )
            }
            SelectionOp::MuLambda { mu } => Some(
                (0..lambda)
                    .map(|i| {
                        if i < mu {
                            BigRational::new(BigInt::one(), BigInt::from(mu))
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect(),
            ),
            SelectionOp::ExpRanking { .. } => None,
        })
    }
}

/// For each rank `i`, the number of members a tournament winner at `i`
/// beats or ties-and-outranks, itself included. The weights form a
/// permutation of `1..=λ`.
fn tournament_weights(pop: &Population) -> Vec<usize> {
    let fits: Vec<u64> = pop.members().iter().map(|m| m.fitness.0).collect();
    let mut sorted = fits.clone();
    sorted.sort_unstable();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut totals: HashMap<u64, usize> = HashMap::new();
    for &f in &fits {
        *totals.entry(f).or_default() += 1;
    }
    fits.iter()
        .map(|&f| {
            let below = sorted.partition_point(|&v| v < f);
            let before = seen.entry(f).or_default();
            let tied_at_or_after = totals[&f] - *before;
            *before += 1;
            below + tied_at_or_after
        })
        .collect()
}

/// Selective pressure `β(γ, P)`: probability of selecting a member at the
/// level of the γ-ranked individual or higher.
pub fn cumulative_beta(sel: &SelectionOp, pop: &Population, gamma: f64) -> Result<f64> {
    let rank = gamma_rank(pop.lambda(), gamma)?;
    let probs = sel.selection_probs(pop)?;
    let (levels, j) = levels_and_threshold(pop, rank)?;
    let beta: f64 = levels
        .iter()
        .zip(&probs)
        .filter(|(l, _)| **l >= j)
        .map(|(_, p)| p)
        .sum();
    // Rounding in the sum can overshoot 1.
    Ok(beta.clamp(0.0, 1.0))
}

/// Exact rational `β` at 1-based rank `rank`; `None` when the mechanism
/// has no rational evaluator.
pub fn cumulative_beta_exact_at_rank(
    sel: &SelectionOp,
    pop: &Population,
    rank: usize,
) -> Result<Option<BigRational>> {
    if rank == 0 || rank > pop.lambda() {
        return Err(Error::Parameter(format!(
            "rank {rank} outside 1..={}",
            pop.lambda()
        )));
    }
    let Some(probs) = sel.selection_probs_exact(pop)? else {
        return Ok(None);
    };
    let (levels, j) = levels_and_threshold(pop, rank)?;
    Ok(Some(
        levels
            .iter()
            .zip(probs)
            .filter(|(l, _)| **l >= j)
            .fold(BigRational::zero(), |acc, (_, p)| acc + p),
    ))
}

fn levels_and_threshold(pop: &Population, rank: usize) -> Result<(Vec<usize>, usize)> {
    let levels: Vec<usize> = pop
        .members()
        .iter()
        .map(|m| {
            m.level
                .ok_or_else(|| Error::Contract("population members lack levels".into()))
        })
        .collect::<Result<_>>()?;
    let j = levels[rank - 1];
    Ok((levels, j))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MutationOp {
    /// Flip each bit independently with probability `p_m`.
    Bitwise { p_m: f64 },
    /// Uniform over the neighborhood; the problem's fallback solution when
    /// the input is infeasible or has no neighbors.
    NeighborhoodUniform { nbhd: NeighborhoodSpec },
    /// Apply `inner`; replace an infeasible result by the fallback.
    RepairWrapped(Box<MutationOp>),
}

impl MutationOp {
    pub fn bitwise(p_m: f64) -> Self {
        MutationOp::Bitwise { p_m }
    }

    pub fn repair(inner: MutationOp) -> Self {
        MutationOp::RepairWrapped(Box::new(inner))
    }

    pub fn validate(&self, problem: &dyn Problem) -> Result<()> {
        match self {
            MutationOp::Bitwise { p_m } => {
                if !(0.0..=1.0).contains(p_m) {
                    return Err(Error::Parameter(format!(
                        "mutation rate {p_m} outside [0,1]"
                    )));
                }
                Ok(())
            }
            MutationOp::NeighborhoodUniform { .. } => Ok(()),
            MutationOp::RepairWrapped(inner) => {
                if problem.fallback_feasible().is_none() {
                    return Err(Error::Config(format!(
                        "repair needs a fallback feasible solution for {}",
                        problem.name()
                    )));
                }
                inner.validate(problem)
            }
        }
    }

    pub fn mutate<R: Rng + ?Sized>(
        &self,
        problem: &dyn Problem,
        x: &BitString,
        rng: &mut R,
    ) -> Result<BitString> {
        if x.len() != problem.dimension() {
            return Err(Error::Dimension {
                expected: problem.dimension(),
                got: x.len(),
            });
        }
        match self {
            MutationOp::Bitwise { p_m } => {
                let mut y = x.clone();
                for i in 0..y.len() {
                    if rng.random::<f64>() < *p_m {
                        y.flip(i);
                    }
                }
                Ok(y)
            }
            MutationOp::NeighborhoodUniform { nbhd } => {
                let nb = if problem.is_feasible(x) {
                    nbhd.neighbors(problem, x)?
                } else {
                    Vec::new()
                };
                if nb.is_empty() {
                    fallback(problem)
                } else {
                    Ok(nb[rng.random_range(0..nb.len())].clone())
                }
            }
            MutationOp::RepairWrapped(inner) => {
                let y = inner.mutate(problem, x, rng)?;
                if problem.is_feasible(&y) {
                    Ok(y)
                } else {
                    fallback(problem)
                }
            }
        }
    }

    /// Exact output distribution of `mutate(x)` as a dense vector indexed
    /// by `BitString::to_index`.
    pub fn distribution(&self, problem: &dyn Problem, x: &BitString) -> Result<Vec<f64>> {
        let n = problem.dimension();
        if n > crate::levels::ENUMERATION_MAX_N {
            return Err(Error::TooLarge(format!(
                "mutation distribution for n = {n}"
            )));
        }
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        let size = 1usize << n;
        match self {
            MutationOp::Bitwise { p_m } => {
                let by_distance = distance_probs(*p_m, n);
                let xi = x.to_index();
                Ok((0..size as u64)
                    .map(|y| by_distance[(xi ^ y).count_ones() as usize])
                    .collect())
            }
            MutationOp::NeighborhoodUniform { nbhd } => {
                let mut d = vec![0.0; size];
                let nb = if problem.is_feasible(x) {
                    nbhd.neighbors(problem, x)?
                } else {
                    Vec::new()
                };
                if nb.is_empty() {
                    d[fallback(problem)?.to_index() as usize] = 1.0;
                } else {
                    let w = 1.0 / nb.len() as f64;
                    for y in nb {
                        d[y.to_index() as usize] += w;
                    }
                }
                Ok(d)
            }
            MutationOp::RepairWrapped(inner) => {
                let mut d = inner.distribution(problem, x)?;
                let y_fallback = fallback(problem)?.to_index() as usize;
                let mut moved = 0.0;
                for (i, p) in d.iter_mut().enumerate() {
                    if *p > 0.0 && !problem.is_feasible(&BitString::from_index(i as u64, n)) {
                        moved += *p;
                        *p = 0.0;
                    }
                }
                d[y_fallback] += moved;
                Ok(d)
            }
        }
    }

    /// `Pr(mutate(x) = x)` in closed form for bitwise mutation of feasible
    /// inputs; otherwise from the exact distribution.
    pub fn stay_probability(&self, problem: &dyn Problem, x: &BitString) -> Result<f64> {
        match self {
            MutationOp::Bitwise { p_m } => Ok(mutation_prob(*p_m, x, x)),
            _ => Ok(self.distribution(problem, x)?[x.to_index() as usize]),
        }
    }
}

fn fallback(problem: &dyn Problem) -> Result<BitString> {
    problem.fallback_feasible().ok_or_else(|| {
        Error::Config(format!(
            "{} has no fallback feasible solution",
            problem.name()
        ))
    })
}

/// `p_m^d (1-p_m)^{n-d}` for `d = 0..=n`, accumulated in log space.
pub(crate) fn distance_probs(p_m: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|d| prob_at_distance(p_m, n, d)).collect()
}

fn prob_at_distance(p_m: f64, n: usize, d: usize) -> f64 {
    let term = |p: f64, k: usize| -> f64 {
        if k == 0 {
            0.0
        } else if p == 0.0 {
            f64::NEG_INFINITY
        } else {
            k as f64 * p.ln()
        }
    };
    (term(p_m, d) + term(1.0 - p_m, n - d)).exp()
}

/// `Pr(Mut*(x) = y) = p_m^{D(x,y)} (1-p_m)^{n-D(x,y)}`.
pub fn mutation_prob(p_m: f64, x: &BitString, y: &BitString) -> f64 {
    prob_at_distance(p_m, x.len(), x.hamming(y))
}

/// Two-offspring crossover operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairCrossover {
    /// With probability `p_c` splice at a uniform cut `Z ∈ [1, n-1]`,
    /// otherwise copy the parents.
    SinglePoint { p_c: f64 },
}

/// Outcome of a two-offspring crossover.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossPair {
    pub first: BitString,
    pub second: BitString,
    /// Cut point when splicing happened.
    pub cut: Option<usize>,
}

fn splice(x: &BitString, y: &BitString, z: usize) -> (BitString, BitString) {
    let (a, b) = (x.bits(), y.bits());
    let first = a[..z].iter().chain(&b[z..]).copied().collect();
    let second = b[..z].iter().chain(&a[z..]).copied().collect();
    (BitString::from_bits(first), BitString::from_bits(second))
}

fn check_rate(p_c: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p_c) {
        return Err(Error::Parameter(format!(
            "crossover probability {p_c} outside [0,1)"
        )));
    }
    Ok(())
}

fn check_pair(x: &BitString, y: &BitString) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

impl PairCrossover {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PairCrossover::SinglePoint { p_c } => check_rate(p_c),
        }
    }

    pub fn cross_pair<R: Rng + ?Sized>(
        &self,
        x: &BitString,
        y: &BitString,
        rng: &mut R,
    ) -> Result<CrossPair> {
        self.validate()?;
        check_pair(x, y)?;
        match *self {
            PairCrossover::SinglePoint { p_c } => {
                let n = x.len();
                if n < 2 {
                    return Err(Error::Dimension {
                        expected: 2,
                        got: n,
                    });
                }
                if rng.random::<f64>() < p_c {
                    let z = rng.random_range(1..n);
                    let (first, second) = splice(x, y, z);
                    Ok(CrossPair {
                        first,
                        second,
                        cut: Some(z),
                    })
                } else {
                    Ok(CrossPair {
                        first: x.clone(),
                        second: y.clone(),
                        cut: None,
                    })
                }
            }
        }
    }

    /// Exact distribution over offspring pairs.
    pub fn pair_distribution(
        &self,
        x: &BitString,
        y: &BitString,
    ) -> Result<Vec<(BitString, BitString, f64)>> {
        self.validate()?;
        check_pair(x, y)?;
        match *self {
            PairCrossover::SinglePoint { p_c } => {
                let n = x.len();
                if n < 2 {
                    return Err(Error::Dimension {
                        expected: 2,
                        got: n,
                    });
                }
                let mut out = vec![(x.clone(), y.clone(), 1.0 - p_c)];
                if p_c > 0.0 {
                    let w = p_c / (n - 1) as f64;
                    for z in 1..n {
                        let (a, b) = splice(x, y, z);
                        out.push((a, b, w));
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Single-offspring crossover used by the GA.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CrossoverOp {
    /// Single-point crossover returning one of the two children uniformly.
    SinglePoint { p_c: f64 },
    /// With probability `1 - p_c` return a parent chosen uniformly,
    /// otherwise delegate to `inner`.
    PassThrough { p_c: f64, inner: Box<CrossoverOp> },
    /// Any two-offspring operator, reduced by `x' ~ unif({u, v})`.
    TwoToOne(PairCrossover),
}

impl CrossoverOp {
    pub fn single_point(p_c: f64) -> Self {
        CrossoverOp::SinglePoint { p_c }
    }

    pub fn pass_through(p_c: f64, inner: CrossoverOp) -> Self {
        CrossoverOp::PassThrough {
            p_c,
            inner: Box::new(inner),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CrossoverOp::SinglePoint { p_c } => check_rate(*p_c),
            CrossoverOp::PassThrough { p_c, inner } => {
                check_rate(*p_c)?;
                inner.validate()
            }
            CrossoverOp::TwoToOne(pair) => pair.validate(),
        }
    }

    pub fn cross<R: Rng + ?Sized>(
        &self,
        x: &BitString,
        y: &BitString,
        rng: &mut R,
    ) -> Result<BitString> {
        match self {
            CrossoverOp::SinglePoint { p_c } => PairCrossover::SinglePoint { p_c: *p_c }
                .cross_pair(x, y, rng)
                .map(|p| pick(p, rng)),
            CrossoverOp::TwoToOne(pair) => pair.cross_pair(x, y, rng).map(|p| pick(p, rng)),
            CrossoverOp::PassThrough { p_c, inner } => {
                check_rate(*p_c)?;
                check_pair(x, y)?;
                if rng.random::<f64>() < *p_c {
                    inner.cross(x, y, rng)
                } else if rng.random::<bool>() {
                    Ok(x.clone())
                } else {
                    Ok(y.clone())
                }
            }
        }
    }

    /// Exact offspring distribution (duplicates not merged).
    pub fn distribution(&self, x: &BitString, y: &BitString) -> Result<Vec<(BitString, f64)>> {
        let halves = |pair: PairCrossover| -> Result<Vec<(BitString, f64)>> {
            Ok(pair
                .pair_distribution(x, y)?
                .into_iter()
                .flat_map(|(a, b, p)| [(a, p / 2.0), (b, p / 2.0)])
                .collect())
        };
        match self {
            CrossoverOp::SinglePoint { p_c } => halves(PairCrossover::SinglePoint { p_c: *p_c }),
            CrossoverOp::TwoToOne(pair) => halves(*pair),
            CrossoverOp::PassThrough { p_c, inner } => {
                check_rate(*p_c)?;
                check_pair(x, y)?;
                let keep = (1.0 - p_c) / 2.0;
                let mut out = vec![(x.clone(), keep), (y.clone(), keep)];
                if *p_c > 0.0 {
                    out.extend(
                        inner
                            .distribution(x, y)?
                            .into_iter()
                            .map(|(z, p)| (z, p * p_c)),
                    );
                }
                Ok(out)
            }
        }
    }
}

fn pick<R: Rng + ?Sized>(pair: CrossPair, rng: &mut R) -> BitString {
    if rng.random::<bool>() {
        pair.first
    } else {
        pair.second
    }
}

/// Event of the crossover lower bound `ε₀`: offspring no worse than the
/// better parent.
pub fn eps0_event(fx: u64, fy: u64, f_child: u64) -> bool {
    f_child >= fx.max(fy)
}

/// Event of the crossover lower bound `ε₁`: the offspring keeps the common
/// fitness of equal parents, or beats the worse parent otherwise.
pub fn eps1_event(fx: u64, fy: u64, f_child: u64) -> bool {
    if fx == fy {
        f_child == fx
    } else {
        f_child > fx.min(fy)
    }
}

fn estimate_event<R: Rng + ?Sized>(
    xor: &CrossoverOp,
    problem: &dyn Problem,
    sampler: &mut dyn FnMut(&mut R) -> (BitString, BitString),
    trials: usize,
    rng: &mut R,
    event: fn(u64, u64, u64) -> bool,
) -> Result<Proportion> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    xor.validate()?;
    let mut successes = 0;
    for _ in 0..trials {
        let (x, y) = sampler(rng);
        let fx = fitness(problem, &x)?.0;
        let fy = fitness(problem, &y)?.0;
        let child = xor.cross(&x, &y, rng)?;
        if event(fx, fy, fitness(problem, &child)?.0) {
            successes += 1;
        }
    }
    Ok(wilson_interval(successes, trials))
}

/// Monte Carlo estimate of `ε₀` over parent pairs drawn by `sampler`.
pub fn estimate_eps0<R: Rng + ?Sized>(
    xor: &CrossoverOp,
    problem: &dyn Problem,
    sampler: &mut dyn FnMut(&mut R) -> (BitString, BitString),
    trials: usize,
    rng: &mut R,
) -> Result<Proportion> {
    estimate_event(xor, problem, sampler, trials, rng, eps0_event)
}

/// Monte Carlo estimate of `ε₁` over parent pairs drawn by `sampler`.
pub fn estimate_eps1<R: Rng + ?Sized>(
    xor: &CrossoverOp,
    problem: &dyn Problem,
    sampler: &mut dyn FnMut(&mut R) -> (BitString, BitString),
    trials: usize,
    rng: &mut R,
) -> Result<Proportion> {
    estimate_event(xor, problem, sampler, trials, rng, eps1_event)
}

/// Monte Carlo estimate for a two-offspring operator: a trial succeeds
/// when either child satisfies `event` (for the `ε₀` event this is
/// `max{f(x'), f(y')} ≥ max{f(x), f(y)}`).
pub fn estimate_pair_eps<R: Rng + ?Sized>(
    xor: &PairCrossover,
    problem: &dyn Problem,
    sampler: &mut dyn FnMut(&mut R) -> (BitString, BitString),
    trials: usize,
    rng: &mut R,
    event: fn(u64, u64, u64) -> bool,
) -> Result<Proportion> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let mut successes = 0;
    for _ in 0..trials {
        let (x, y) = sampler(rng);
        let fx = fitness(problem, &x)?.0;
        let fy = fitness(problem, &y)?.0;
        let pair = xor.cross_pair(&x, &y, rng)?;
        let f1 = fitness(problem, &pair.first)?.0;
        let f2 = fitness(problem, &pair.second)?.0;
        if event(fx, fy, f1) || event(fx, fy, f2) {
            successes += 1;
        }
    }
    Ok(wilson_interval(successes, trials))
}

/// Exact worst-case `ε` over all parent pairs, `n ≤ 10`.
pub fn exact_eps(
    xor: &CrossoverOp,
    problem: &dyn Problem,
    event: fn(u64, u64, u64) -> bool,
) -> Result<f64> {
    let n = problem.dimension();
    if n > 10 {
        return Err(Error::TooLarge(format!(
            "exact crossover enumeration needs n <= 10, got {n}"
        )));
    }
    let all: Vec<(BitString, u64)> = BitString::all(n)
        .map(|x| fitness(problem, &x).map(|f| (x, f.0)))
        .collect::<Result<_>>()?;
    let table: Vec<u64> = all.iter().map(|(_, f)| *f).collect();
    let mut worst = 1.0f64;
    for (x, fx) in &all {
        for (y, fy) in &all {
            let p: f64 = xor
                .distribution(x, y)?
                .into_iter()
                .filter(|(c, _)| event(*fx, *fy, table[c.to_index() as usize]))
                .map(|(_, p)| p)
                .sum();
            worst = worst.min(p);
        }
    }
    Ok(worst)
}
