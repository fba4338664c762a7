//! Genotypes, populations, the problem-instance interface and per-trial
//! random streams.

use std::cmp::{Ordering, Reverse};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::LevelPartition;

/// Fixed-length binary genotype.
///
/// Bits are stored left to right; `from_index`/`to_index` treat bit 0 as
/// the most significant bit, so numeric index order equals lexicographic
/// string order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(n: usize) -> Self {
        BitString(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        BitString(vec![true; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// String whose bits are the binary expansion of `index` (MSB first).
    pub fn from_index(index: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        BitString((0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Uniformly random string, one fair draw per bit.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        BitString((0..n).map(|_| rng.random::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        BitString(self.0.iter().map(|b| !b).collect())
    }

    /// Hamming distance. Panics on length mismatch.
    pub fn hamming(&self, other: &BitString) -> usize {
        assert_eq!(
            self.len(),
            other.len(),
            "hamming distance of unequal lengths"
        );
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Every string of length `n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n <= 30, "exhaustive enumeration limited to n <= 30");
        (0..1u64 << n).map(move |i| BitString::from_index(i, n))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parameter(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// Fitness in objective units. Infeasible genotypes carry the penalty
/// value 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FitnessValue(pub u64);

impl FitnessValue {
    pub const PENALTY: FitnessValue = FitnessValue(0);

    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for FitnessValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An NP optimization problem instance over `{0,1}^n` (maximization).
///
/// `objective` is only consulted for feasible strings. Problems with
/// infeasible strings must keep the objective at least 1 on the feasible
/// set so that the 0 penalty separates the two.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;

    fn dimension(&self) -> usize;

    fn is_feasible(&self, _x: &BitString) -> bool {
        true
    }

    fn objective(&self, x: &BitString) -> u64;

    /// A feasible solution computable without search (`y_I`), if any.
    fn fallback_feasible(&self) -> Option<BitString> {
        None
    }

    /// Problem-defined neighborhood, when the problem has one.
    fn native_neighborhood(&self, _x: &BitString) -> Option<Vec<BitString>> {
        None
    }

    /// Optimal objective value when known analytically.
    fn known_optimum(&self) -> Option<u64> {
        None
    }

    /// Whether every string is feasible, without enumeration.
    fn all_feasible(&self) -> bool {
        false
    }
}

/// Penalised fitness: `F(x)` for feasible `x`, 0 otherwise.
pub fn fitness(problem: &dyn Problem, x: &BitString) -> Result<FitnessValue> {
    if x.len() != problem.dimension() {
        return Err(Error::Dimension {
            expected: problem.dimension(),
            got: x.len(),
        });
    }
    if problem.is_feasible(x) {
        Ok(FitnessValue(problem.objective(x)))
    } else {
        Ok(FitnessValue::PENALTY)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Individual {
    pub genotype: BitString,
    pub fitness: FitnessValue,
    pub level: Option<usize>,
}

impl Individual {
    pub fn evaluate(problem: &dyn Problem, genotype: BitString) -> Result<Self> {
        let fitness = fitness(problem, &genotype)?;
        Ok(Individual {
            genotype,
            fitness,
            level: None,
        })
    }

    /// Evaluates fitness and level in one go.
    pub fn with_level(
        problem: &dyn Problem,
        partition: &LevelPartition,
        genotype: BitString,
    ) -> Result<Self> {
        let fitness = fitness(problem, &genotype)?;
        let level = partition.level_with_fitness(problem, &genotype, fitness)?;
        Ok(Individual {
            genotype,
            fitness,
            level: Some(level),
        })
    }
}

/// Population vector. After [`sort_population`] the members are
/// non-increasing in the level-aligned order.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
    sorted: bool,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Parameter(
                "population must have at least one member".into(),
            ));
        }
        Ok(Population {
            members,
            sorted: false,
        })
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn lambda(&self) -> usize {
        self.members.len()
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn get(&self, i: usize) -> &Individual {
        &self.members[i]
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub(crate) fn require_sorted(&self) -> Result<()> {
        if self.sorted {
            Ok(())
        } else {
            Err(Error::Contract("population must be sorted".into()))
        }
    }

    /// Sorts in place: level (descending), fitness (descending), genotype
    /// (lexicographic ascending), insertion index.
    pub fn sort(&mut self) {
        self.members.sort_by(level_aligned_cmp);
        self.sorted = true;
    }

    /// Best level present; `None` when levels are not assigned.
    pub fn best_level(&self) -> Option<usize> {
        self.members.iter().filter_map(|m| m.level).max()
    }

    /// Member at rank `⌈γλ⌉` (the γ-ranked individual).
    pub fn gamma_ranked(&self, gamma: f64) -> Result<&Individual> {
        self.require_sorted()?;
        let rank = gamma_rank(self.lambda(), gamma)?;
        Ok(&self.members[rank - 1])
    }
}

fn level_aligned_cmp(a: &Individual, b: &Individual) -> Ordering {
    (Reverse(a.level), Reverse(a.fitness), &a.genotype).cmp(&(
        Reverse(b.level),
        Reverse(b.fitness),
        &b.genotype,
    ))
}

/// 1-based rank `⌈γλ⌉` for `γ ∈ (0,1)`.
pub fn gamma_rank(lambda: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!(
            "gamma must lie in (0,1), got {gamma}"
        )));
    }
    let rank = (gamma * lambda as f64).ceil() as usize;
    Ok(rank.clamp(1, lambda))
}

/// Assigns levels under `partition` and sorts.
pub fn sort_population(
    problem: &dyn Problem,
    pop: Population,
    partition: &LevelPartition,
) -> Result<Population> {
    let mut members = pop.members;
    for m in &mut members {
        m.level = Some(partition.level_with_fitness(problem, &m.genotype, m.fitness)?);
    }
    let mut pop = Population {
        members,
        sorted: false,
    };
    pop.sort();
    Ok(pop)
}

/// Deterministic random stream keyed by `(master_seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id selecting an independent
/// keystream, so trials never share generator state.
#[derive(Clone, Debug)]
pub struct RandomStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RandomStream {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl rand::RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
