//! The non-elitist generational GA and its instrumented hitting-time run.
//!
//! Each generation builds λ offspring independently: two selections from
//! the previous population, single-offspring crossover, mutation. Nothing
//! survives by copy. A run stops after the first generation that contains
//! a target-level member, or once `t·λ` reaches the evaluation cap.

use serde::{Deserialize, Serialize};

use crate::domain::{BitString, Individual, Population, Problem, RandomStream};
use crate::error::{Error, Result};
use crate::levels::LevelPartition;
use crate::operators::{CrossoverOp, MutationOp, SelectionOp};

pub const DEFAULT_MAX_EVALUATIONS: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub lambda: usize,
    pub selection: SelectionOp,
    pub crossover: CrossoverOp,
    pub mutation: MutationOp,
    /// Censoring cap on `T` in fitness evaluations.
    pub max_evaluations: u64,
    /// Use the `Sel′`/`Cross′` operators once a target member exists.
    pub prime_mode: bool,
}

impl GaConfig {
    pub fn new(
        lambda: usize,
        selection: SelectionOp,
        crossover: CrossoverOp,
        mutation: MutationOp,
    ) -> Self {
        GaConfig {
            lambda,
            selection,
            crossover,
            mutation,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            prime_mode: false,
        }
    }

    pub fn with_cap(mut self, max_evaluations: u64) -> Self {
        self.max_evaluations = max_evaluations;
        self
    }

    pub fn validate(&self, problem: &dyn Problem) -> Result<()> {
        if self.lambda < 2 {
            return Err(Error::Config(format!(
                "lambda = {} must be at least 2",
                self.lambda
            )));
        }
        if self.max_evaluations < self.lambda as u64 {
            return Err(Error::Config(format!(
                "evaluation cap {} below lambda {}",
                self.max_evaluations, self.lambda
            )));
        }
        self.selection.validate(self.lambda)?;
        self.crossover.validate()?;
        self.mutation.validate(problem)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// `T = t·λ` for the first generation `t` meeting the target; `None`
    /// when censored.
    pub hitting_time: Option<u64>,
    /// Generations produced after `P_0`.
    pub generations: u64,
    pub censored: bool,
    /// Fitness evaluations spent, `P_0` included: `(generations + 1)·λ`.
    pub evaluations: u64,
    /// Best level in each population `P_0, P_1, …`.
    pub best_level_trace: Vec<usize>,
    /// First target-level member of the hitting generation.
    pub target_member: Option<BitString>,
}

/// Uniform random population, evaluated, leveled and sorted.
pub fn init_population(
    problem: &dyn Problem,
    partition: &LevelPartition,
    lambda: usize,
    rng: &mut RandomStream,
) -> Result<Population> {
    if lambda < 2 {
        return Err(Error::Config(format!(
            "lambda = {lambda} must be at least 2"
        )));
    }
    let n = problem.dimension();
    let members = (0..lambda)
        .map(|_| Individual::with_level(problem, partition, BitString::random(n, rng)))
        .collect::<Result<Vec<_>>>()?;
    let mut pop = Population::new(members)?;
    pop.sort();
    Ok(pop)
}

/// Generation-by-generation driver of the GA.
pub struct Evolution<'a> {
    problem: &'a dyn Problem,
    partition: &'a LevelPartition,
    config: &'a GaConfig,
    population: Population,
    generation: u64,
}

impl<'a> Evolution<'a> {
    pub fn new(
        problem: &'a dyn Problem,
        partition: &'a LevelPartition,
        config: &'a GaConfig,
        rng: &mut RandomStream,
    ) -> Result<Self> {
        config.validate(problem)?;
        let population = init_population(problem, partition, config.lambda, rng)?;
        Ok(Evolution {
            problem,
            partition,
            config,
            population,
            generation: 0,
        })
    }

    /// Starts from a given population instead of a random one.
    pub fn from_population(
        problem: &'a dyn Problem,
        partition: &'a LevelPartition,
        config: &'a GaConfig,
        genotypes: Vec<BitString>,
    ) -> Result<Self> {
        config.validate(problem)?;
        if genotypes.len() != config.lambda {
            return Err(Error::Config(format!(
                "population of {} for lambda = {}",
                genotypes.len(),
                config.lambda
            )));
        }
        let members = genotypes
            .into_iter()
            .map(|g| Individual::with_level(problem, partition, g))
            .collect::<Result<Vec<_>>>()?;
        let mut population = Population::new(members)?;
        population.sort();
        Ok(Evolution {
            problem,
            partition,
            config,
            population,
            generation: 0,
        })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn best_level(&self) -> usize {
        self.population.best_level().expect("members are leveled")
    }

    pub fn has_target(&self) -> bool {
        self.best_level() == self.partition.target_level()
    }

    /// Index of the first target-level member in rank order.
    fn first_target(&self) -> Option<usize> {
        let target = self.partition.target_level();
        self.population
            .members()
            .iter()
            .position(|m| m.level == Some(target))
    }

    fn is_target(&self, i: usize) -> bool {
        self.population.get(i).level == Some(self.partition.target_level())
    }

    /// Produces the next generation.
    pub fn step(&mut self, rng: &mut RandomStream) -> Result<()> {
        let prime_target = if self.config.prime_mode {
            self.first_target()
        } else {
            None
        };
        let mut offspring = Vec::with_capacity(self.config.lambda);
        for _ in 0..self.config.lambda {
            let (i, k) = match prime_target {
                Some(t) => (t, t),
                None => (
                    self.config.selection.select(&self.population, rng)?,
                    self.config.selection.select(&self.population, rng)?,
                ),
            };
            let (u, v) = (
                &self.population.get(i).genotype,
                &self.population.get(k).genotype,
            );
            let child = if self.config.prime_mode && self.is_target(i) {
                u.clone()
            } else if self.config.prime_mode && self.is_target(k) {
                v.clone()
            } else {
                self.config.crossover.cross(u, v, rng)?
            };
            let mutated = self.config.mutation.mutate(self.problem, &child, rng)?;
            offspring.push(Individual::with_level(
                self.problem,
                self.partition,
                mutated,
            )?);
        }
        let mut next = Population::new(offspring)?;
        next.sort();
        self.population = next;
        self.generation += 1;
        Ok(())
    }
}

fn run(
    problem: &dyn Problem,
    partition: &LevelPartition,
    config: &GaConfig,
    rng: &mut RandomStream,
) -> Result<RunResult> {
    let mut evo = Evolution::new(problem, partition, config, rng)?;
    let lambda = config.lambda as u64;
    let mut trace = vec![evo.best_level()];
    loop {
        let t = evo.generation();
        if evo.has_target() {
            return Ok(RunResult {
                hitting_time: Some(t * lambda),
                generations: t,
                censored: false,
                evaluations: (t + 1) * lambda,
                best_level_trace: trace,
                target_member: evo
                    .first_target()
                    .map(|i| evo.population.get(i).genotype.clone()),
            });
        }
        if t * lambda >= config.max_evaluations {
            return Ok(RunResult {
                hitting_time: None,
                generations: t,
                censored: true,
                evaluations: (t + 1) * lambda,
                best_level_trace: trace,
                target_member: None,
            });
        }
        evo.step(rng)?;
        trace.push(evo.best_level());
    }
}

/// Runs the GA until the target level is hit or the cap is reached.
pub fn run_ga(
    problem: &dyn Problem,
    partition: &LevelPartition,
    config: &GaConfig,
    rng: &mut RandomStream,
) -> Result<RunResult> {
    if config.prime_mode {
        let plain = GaConfig {
            prime_mode: false,
            ..config.clone()
        };
        return run(problem, partition, &plain, rng);
    }
    run(problem, partition, config, rng)
}

/// Runs the modified GA whose selection returns the first target member
/// and whose crossover copies target parents, once any exist. Before that
/// point it consumes random draws exactly like [`run_ga`].
pub fn run_ga_prime(
    problem: &dyn Problem,
    partition: &LevelPartition,
    config: &GaConfig,
    rng: &mut RandomStream,
) -> Result<RunResult> {
    let prime = GaConfig {
        prime_mode: true,
        ..config.clone()
    };
    run(problem, partition, &prime, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::NeighborhoodSpec;
    use crate::problems::{OneMax, RoyalRoad};

    fn onemax_setup(n: usize) -> (OneMax, LevelPartition) {
        let om = OneMax::new(n);
        let p = LevelPartition::canonical((0..=n as u64).collect()).unwrap();
        (om, p)
    }

    #[test]
    fn initial_population_statistics() {
        let (om, part) = onemax_setup(20);
        let mut rng = RandomStream::new(3, 0);
        let pop = init_population(&om, &part, 10_000, &mut rng).unwrap();
        let mean = pop
            .members()
            .iter()
            .map(|m| m.fitness.0 as f64)
            .sum::<f64>()
            / 10_000.0;
        // Binomial(20, 1/2): sd of the mean = sqrt(5)/100
        assert!((mean - 10.0).abs() < 4.0 * 5f64.sqrt() / 100.0);
        let small = init_population(&om, &part, 2, &mut rng).unwrap();
        assert_eq!(small.lambda(), 2);
        assert!(init_population(&om, &part, 1, &mut rng).is_err());
        let a = init_population(&om, &part, 8, &mut RandomStream::new(5, 1)).unwrap();
        let b = init_population(&om, &part, 8, &mut RandomStream::new(5, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn whole_space_target_hits_at_zero() {
        let om = OneMax::new(6);
        let everything = LevelPartition::custom(1, |_, _, _| 2);
        let cfg = GaConfig::new(
            4,
            SelectionOp::Tournament { k: 2 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(1.0 / 6.0),
        );
        let r = run_ga(&om, &everything, &cfg, &mut RandomStream::new(1, 0)).unwrap();
        assert_eq!(r.hitting_time, Some(0));
        assert_eq!(r.generations, 0);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn onemax_runs_finish() {
        let (om, part) = onemax_setup(8);
        let cfg = GaConfig::new(
            8,
            SelectionOp::Tournament { k: 8 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(1.0 / 8.0),
        )
        .with_cap(1_000_000);
        let mut total = 0u64;
        for seed in 0..100 {
            let r = run_ga(&om, &part, &cfg, &mut RandomStream::new(seed, 0)).unwrap();
            assert!(!r.censored);
            let t = r.hitting_time.unwrap();
            assert_eq!(t % 8, 0);
            assert_eq!(r.evaluations, (r.generations + 1) * 8);
            assert_eq!(r.best_level_trace.len() as u64, r.generations + 1);
            total += t;
        }
        assert!((total as f64 / 100.0) < 1_000_000.0);
    }

    #[test]
    fn no_variation_is_censored() {
        let (om, part) = onemax_setup(12);
        let cfg = GaConfig::new(
            2,
            SelectionOp::Tournament { k: 2 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(0.0),
        )
        .with_cap(200);
        // Both members fixed at zeros; target (all ones) unreachable.
        let zeros = vec![BitString::zeros(12), BitString::zeros(12)];
        let mut evo = Evolution::from_population(&om, &part, &cfg, zeros).unwrap();
        let mut rng = RandomStream::new(0, 0);
        for _ in 0..10 {
            evo.step(&mut rng).unwrap();
            assert_eq!(evo.best_level(), 1);
        }
        // Full runs: a random P0 without the target never improves either.
        let r = run_ga(&om, &part, &cfg, &mut RandomStream::new(4, 0)).unwrap();
        assert!(r.censored);
        assert!(r.hitting_time.is_none());
        assert!(r.generations * 2 >= 200);
    }

    #[test]
    fn non_elitist_best_can_be_lost() {
        let (om, part) = onemax_setup(6);
        let cfg = GaConfig::new(
            4,
            SelectionOp::Tournament { k: 4 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(1.0),
        );
        let start: Vec<BitString> = ["111110", "000000", "000001", "000011"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let mut evo = Evolution::from_population(&om, &part, &cfg, start.clone()).unwrap();
        let mut rng = RandomStream::new(2, 0);
        evo.step(&mut rng).unwrap();
        // Every offspring is a complemented parent; the best parent is gone.
        assert!(evo
            .population()
            .members()
            .iter()
            .all(|m| m.genotype != start[0]));
        assert!(evo
            .population()
            .members()
            .iter()
            .all(|m| start.iter().any(|s| s.complement() == m.genotype)));
    }

    #[test]
    fn config_errors() {
        let (om, part) = onemax_setup(4);
        let mut rng = RandomStream::new(0, 0);
        let bad_mu = GaConfig::new(
            4,
            SelectionOp::MuLambda { mu: 5 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(0.25),
        );
        assert!(run_ga(&om, &part, &bad_mu, &mut rng).is_err());
        let tiny = GaConfig::new(
            1,
            SelectionOp::Tournament { k: 2 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(0.25),
        );
        assert!(run_ga(&om, &part, &tiny, &mut rng).is_err());
        let cap = GaConfig::new(
            4,
            SelectionOp::Tournament { k: 2 },
            CrossoverOp::single_point(0.0),
            MutationOp::bitwise(0.25),
        )
        .with_cap(3);
        assert!(run_ga(&om, &part, &cap, &mut rng).is_err());
    }

    #[test]
    fn prime_variant_matches_before_hit() {
        let rr = RoyalRoad::new(8, 2).unwrap();
        let part = LevelPartition::merged_lo(vec![0, 1, 2, 3], NeighborhoodSpec::HammingRadius(2))
            .unwrap();
        let cfg = GaConfig::new(
            6,
            SelectionOp::Tournament { k: 3 },
            CrossoverOp::single_point(0.5),
            MutationOp::bitwise(0.125),
        )
        .with_cap(100_000);
        for seed in 0..30 {
            let a = run_ga(&rr, &part, &cfg, &mut RandomStream::new(seed, 0)).unwrap();
            let b = run_ga_prime(&rr, &part, &cfg, &mut RandomStream::new(seed, 0)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn prime_selection_is_deterministic_with_target() {
        let (om, part) = onemax_setup(5);
        let cfg = GaConfig {
            prime_mode: true,
            ..GaConfig::new(
                4,
                SelectionOp::Tournament { k: 2 },
                CrossoverOp::single_point(0.5),
                MutationOp::bitwise(0.0),
            )
        };
        let start: Vec<BitString> = ["11111", "00000", "00001", "00011"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let mut evo = Evolution::from_population(&om, &part, &cfg, start).unwrap();
        let mut rng = RandomStream::new(8, 0);
        for _ in 0..5 {
            evo.step(&mut rng).unwrap();
            assert!(evo
                .population()
                .members()
                .iter()
                .all(|m| m.genotype == BitString::ones(5)));
        }
    }
}
