//! Level partitions of the search space, neighborhoods and local optima.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{fitness, BitString, FitnessValue, Problem};
use crate::error::{Error, Result};

/// Largest dimension accepted by enumeration-based constructors.
pub const ENUMERATION_MAX_N: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborhoodSpec {
    /// All feasible `y ≠ x` with `D(x,y) ≤ r`.
    HammingRadius(usize),
    /// Neighborhood supplied by the problem, declared `k`-bounded.
    ProblemNative { k: usize },
}

impl NeighborhoodSpec {
    /// Bound `K` on the Hamming distance of any neighbor.
    pub fn bound(&self) -> usize {
        match *self {
            NeighborhoodSpec::HammingRadius(r) => r,
            NeighborhoodSpec::ProblemNative { k } => k,
        }
    }

    /// Feasible neighbors of `x`, in deterministic scan order.
    pub fn neighbors(&self, problem: &dyn Problem, x: &BitString) -> Result<Vec<BitString>> {
        match *self {
            NeighborhoodSpec::HammingRadius(r) => Ok(hamming_neighborhood(problem, x, r)),
            NeighborhoodSpec::ProblemNative { k } => {
                let nb = problem.native_neighborhood(x).ok_or_else(|| {
                    Error::Config(format!("{} has no native neighborhood", problem.name()))
                })?;
                if let Some(y) = nb.iter().find(|y| y.hamming(x) > k) {
                    return Err(Error::Contract(format!(
                        "neighbor {y} of {x} exceeds the declared bound {k}"
                    )));
                }
                Ok(nb)
            }
        }
    }
}

/// Every string within Hamming distance `1..=r` of `x`, by increasing
/// distance and then lexicographic flip positions.
pub fn hamming_candidates(x: &BitString, r: usize) -> Vec<BitString> {
    let n = x.len();
    let r = r.min(n);
    let mut out = Vec::new();
    let mut positions = Vec::with_capacity(r);
    for d in 1..=r {
        combos(n, d, 0, &mut positions, &mut |pos| {
            let mut y = x.clone();
            for &p in pos {
                y.flip(p);
            }
            out.push(y);
        });
    }
    out
}

fn combos(n: usize, d: usize, start: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if acc.len() == d {
        f(acc);
        return;
    }
    let remaining = d - acc.len();
    for p in start..=n - remaining {
        acc.push(p);
        combos(n, d, p + 1, acc, f);
        acc.pop();
    }
}

/// Feasible strings `y ≠ x` with `D(x,y) ≤ r`.
pub fn hamming_neighborhood(problem: &dyn Problem, x: &BitString, r: usize) -> Vec<BitString> {
    hamming_candidates(x, r)
        .into_iter()
        .filter(|y| problem.is_feasible(y))
        .collect()
}

/// True iff no neighbor of the feasible string `x` has strictly higher
/// objective.
pub fn is_local_optimum(
    problem: &dyn Problem,
    nbhd: &NeighborhoodSpec,
    x: &BitString,
) -> Result<bool> {
    let fx = fitness(problem, x)?;
    if !problem.is_feasible(x) {
        return Err(Error::Infeasible(format!("{x} is not a feasible solution")));
    }
    Ok(nbhd
        .neighbors(problem, x)?
        .iter()
        .all(|y| problem.objective(y) <= fx.0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalSearchResult {
    pub optimum: BitString,
    pub moves: usize,
}

/// First-improvement local search in the neighborhood scan order.
pub fn local_search(
    problem: &dyn Problem,
    nbhd: &NeighborhoodSpec,
    x0: &BitString,
) -> Result<LocalSearchResult> {
    fitness(problem, x0)?;
    if !problem.is_feasible(x0) {
        return Err(Error::Infeasible(format!(
            "start point {x0} is not feasible"
        )));
    }
    let mut x = x0.clone();
    let mut fx = problem.objective(&x);
    let mut moves = 0;
    'search: loop {
        for y in nbhd.neighbors(problem, &x)? {
            let fy = problem.objective(&y);
            if fy > fx {
                x = y;
                fx = fy;
                moves += 1;
                continue 'search;
            }
        }
        return Ok(LocalSearchResult { optimum: x, moves });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    /// One level per fitness value.
    Canonical,
    /// Levels by fitness outside the local optima; all local optima merged
    /// into the target level.
    MergedLO,
    /// Infeasible strings first, then feasible non-local-optima by
    /// fitness, local optima as target.
    InfeasibleFirst,
    /// User-supplied level map.
    Custom,
}

type LevelFn = dyn Fn(&dyn Problem, &BitString, FitnessValue) -> usize + Send + Sync;

#[derive(Clone)]
enum LevelMap {
    Values {
        values: Vec<u64>,
        nbhd: Option<NeighborhoodSpec>,
    },
    Custom(Arc<LevelFn>),
}

/// Ordered partition `(A_1, …, A_{m+1})` of `{0,1}^n`; levels are 1-based
/// and `A_{m+1}` is the target.
///
/// Local-optimum membership is decided per queried string by enumerating
/// its neighborhood, so partitions work at any dimension.
#[derive(Clone)]
pub struct LevelPartition {
    kind: PartitionKind,
    m: usize,
    map: LevelMap,
}

impl fmt::Debug for LevelPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("LevelPartition");
        d.field("kind", &self.kind).field("m", &self.m);
        if let LevelMap::Values { values, nbhd } = &self.map {
            d.field("values", values).field("nbhd", nbhd);
        }
        d.finish()
    }
}

fn check_increasing(values: &[u64]) -> Result<()> {
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "fitness values must be strictly increasing without duplicates".into(),
        ));
    }
    Ok(())
}

fn enumerable(problem: &dyn Problem) -> Result<usize> {
    let n = problem.dimension();
    if n > ENUMERATION_MAX_N {
        return Err(Error::TooLarge(format!("n = {n} > {ENUMERATION_MAX_N}")));
    }
    Ok(n)
}

impl LevelPartition {
    /// Canonical partition over the given attained fitness values,
    /// `A_j = {x : f(x) = values[j-1]}`.
    pub fn canonical(values: Vec<u64>) -> Result<Self> {
        check_increasing(&values)?;
        if values.len() < 2 {
            return Err(Error::Degenerate(
                "canonical partition needs at least two fitness values (m >= 1)".into(),
            ));
        }
        Ok(LevelPartition {
            kind: PartitionKind::Canonical,
            m: values.len() - 1,
            map: LevelMap::Values { values, nbhd: None },
        })
    }

    /// Canonical partition with the attained values found by enumeration.
    pub fn canonical_enumerated(problem: &dyn Problem) -> Result<Self> {
        let n = enumerable(problem)?;
        let mut values: Vec<u64> = BitString::all(n)
            .map(|x| fitness(problem, &x).map(|f| f.0))
            .collect::<Result<_>>()?;
        values.sort_unstable();
        values.dedup();
        Self::canonical(values)
    }

    /// Merged-local-optima partition from the fitness values attained
    /// outside the local optima.
    pub fn merged_lo(values: Vec<u64>, nbhd: NeighborhoodSpec) -> Result<Self> {
        check_increasing(&values)?;
        if values.is_empty() {
            return Err(Error::Degenerate(
                "every point is a local optimum (m = 0)".into(),
            ));
        }
        Ok(LevelPartition {
            kind: PartitionKind::MergedLO,
            m: values.len(),
            map: LevelMap::Values {
                values,
                nbhd: Some(nbhd),
            },
        })
    }

    /// Merged-local-optima partition, values found by enumeration.
    pub fn merged_lo_enumerated(problem: &dyn Problem, nbhd: NeighborhoodSpec) -> Result<Self> {
        let n = enumerable(problem)?;
        let mut values = Vec::new();
        for x in BitString::all(n) {
            if !problem.is_feasible(&x) {
                return Err(Error::Config(format!(
                    "{x} is infeasible; use the infeasible-first partition"
                )));
            }
            if !is_local_optimum(problem, &nbhd, &x)? {
                values.push(problem.objective(&x));
            }
        }
        values.sort_unstable();
        values.dedup();
        Self::merged_lo(values, nbhd)
    }

    /// Infeasible-first partition from the feasible non-local-optimum
    /// values `f_2 < … < f_m`.
    pub fn infeasible_first(values: Vec<u64>, nbhd: NeighborhoodSpec) -> Result<Self> {
        check_increasing(&values)?;
        Ok(LevelPartition {
            kind: PartitionKind::InfeasibleFirst,
            m: values.len() + 1,
            map: LevelMap::Values {
                values,
                nbhd: Some(nbhd),
            },
        })
    }

    /// Infeasible-first partition, values found by enumeration.
    pub fn infeasible_first_enumerated(
        problem: &dyn Problem,
        nbhd: NeighborhoodSpec,
    ) -> Result<Self> {
        let n = enumerable(problem)?;
        let mut values = Vec::new();
        let mut any_feasible = false;
        for x in BitString::all(n) {
            if problem.is_feasible(&x) {
                any_feasible = true;
                if !is_local_optimum(problem, &nbhd, &x)? {
                    values.push(problem.objective(&x));
                }
            }
        }
        if !any_feasible {
            return Err(Error::Degenerate("no feasible solutions".into()));
        }
        values.sort_unstable();
        values.dedup();
        Self::infeasible_first(values, nbhd)
    }

    /// Arbitrary level map; `level` must return values in `1..=m+1`.
    pub fn custom(
        m: usize,
        level: impl Fn(&dyn Problem, &BitString, FitnessValue) -> usize + Send + Sync + 'static,
    ) -> Self {
        LevelPartition {
            kind: PartitionKind::Custom,
            m,
            map: LevelMap::Custom(Arc::new(level)),
        }
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    /// Number of non-target levels.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn target_level(&self) -> usize {
        self.m + 1
    }

    pub fn neighborhood(&self) -> Option<NeighborhoodSpec> {
        match &self.map {
            LevelMap::Values { nbhd, .. } => *nbhd,
            LevelMap::Custom(_) => None,
        }
    }

    /// Level index of `x` (1-based).
    pub fn level_of(&self, problem: &dyn Problem, x: &BitString) -> Result<usize> {
        let f = fitness(problem, x)?;
        self.level_with_fitness(problem, x, f)
    }

    /// Level index of `x` given its already computed fitness.
    pub fn level_with_fitness(
        &self,
        problem: &dyn Problem,
        x: &BitString,
        f: FitnessValue,
    ) -> Result<usize> {
        let (values, nbhd) = match &self.map {
            LevelMap::Custom(level) => {
                let j = level(problem, x, f);
                if j == 0 || j > self.m + 1 {
                    return Err(Error::Contract(format!(
                        "custom level {j} outside 1..={}",
                        self.m + 1
                    )));
                }
                return Ok(j);
            }
            LevelMap::Values { values, nbhd } => (values, nbhd),
        };
        let position = |offset: usize| -> Result<usize> {
            values.binary_search(&f.0).map(|i| i + offset).map_err(|_| {
                Error::Contract(format!(
                    "fitness {} of {x} is not covered by the partition",
                    f.0
                ))
            })
        };
        match self.kind {
            PartitionKind::Canonical => position(1),
            PartitionKind::MergedLO => {
                if !problem.is_feasible(x) {
                    return Err(Error::Config(format!(
                        "{x} is infeasible; merged partition needs Sol = X"
                    )));
                }
                if is_local_optimum(
                    problem,
                    nbhd.as_ref().expect("merged partition has a neighborhood"),
                    x,
                )? {
                    Ok(self.m + 1)
                } else {
                    position(1)
                }
            }
            PartitionKind::InfeasibleFirst => {
                if !problem.is_feasible(x) {
                    Ok(1)
                } else if is_local_optimum(
                    problem,
                    nbhd.as_ref().expect("partition has a neighborhood"),
                    x,
                )? {
                    Ok(self.m + 1)
                } else {
                    position(2)
                }
            }
            PartitionKind::Custom => unreachable!(),
        }
    }

    /// Whether `x` lies in the target level.
    pub fn is_target(&self, problem: &dyn Problem, x: &BitString) -> Result<bool> {
        Ok(self.level_of(problem, x)? == self.m + 1)
    }

    /// Level of every string, indexed by `BitString::to_index`.
    pub fn level_table(&self, problem: &dyn Problem) -> Result<Vec<usize>> {
        let n = enumerable(problem)?;
        BitString::all(n)
            .map(|x| self.level_of(problem, &x))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{OneMax, RoyalRoad, ToyNpo, TriangleVcp};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn hamming_candidate_counts() {
        assert_eq!(hamming_candidates(&BitString::zeros(3), 1).len(), 3);
        assert_eq!(hamming_candidates(&BitString::zeros(4), 2).len(), 10);
        assert_eq!(hamming_candidates(&BitString::zeros(5), 5).len(), 31);
        for r in 0..=6 {
            let expect: usize = (1..=r).map(|d| binom(6, d)).sum();
            let c = hamming_candidates(&bs("010110"), r);
            assert_eq!(c.len(), expect);
            assert!(c
                .iter()
                .all(|y| (1..=r).contains(&y.hamming(&bs("010110")))));
        }
    }

    #[test]
    fn canonical_level_counts() {
        let p = LevelPartition::canonical_enumerated(&OneMax::new(6)).unwrap();
        assert_eq!(p.m() + 1, 7);
        let rr = RoyalRoad::new(8, 2).unwrap();
        let p = LevelPartition::canonical_enumerated(&rr).unwrap();
        assert_eq!(p.m() + 1, 5);
        assert_eq!(p.level_of(&rr, &BitString::zeros(8)).unwrap(), 1);
        assert_eq!(p.level_of(&rr, &BitString::ones(8)).unwrap(), 5);
        assert!(LevelPartition::canonical(vec![3]).is_err());
        assert!(LevelPartition::canonical(vec![2, 1]).is_err());
        assert!(LevelPartition::canonical(vec![1, 1, 2]).is_err());
        let constant = ToyNpo::from_fn(3, |_| true, |_| 5).unwrap();
        assert!(LevelPartition::canonical_enumerated(&constant).is_err());
    }

    #[test]
    fn merged_lo_on_royal_road_equals_canonical() {
        for n in [4usize, 6, 8] {
            let rr = RoyalRoad::new(n, 2).unwrap();
            let nb = NeighborhoodSpec::HammingRadius(2);
            let merged = LevelPartition::merged_lo_enumerated(&rr, nb).unwrap();
            let canon = LevelPartition::canonical_enumerated(&rr).unwrap();
            assert_eq!(merged.m(), canon.m());
            assert_eq!(
                merged.level_table(&rr).unwrap(),
                canon.level_table(&rr).unwrap()
            );
        }
    }

    #[test]
    fn merged_lo_triangle() {
        let vcp = TriangleVcp::new(1);
        let nb = NeighborhoodSpec::HammingRadius(1);
        let p = LevelPartition::merged_lo_enumerated(&vcp, nb).unwrap();
        assert_eq!(p.m(), 1);
        let table = p.level_table(&vcp).unwrap();
        assert_eq!(table.iter().filter(|&&l| l == 2).count(), 6);
        assert_eq!(table[0], 1);
        assert_eq!(table[7], 1);
    }

    #[test]
    fn degenerate_merged_rejected() {
        let flat = ToyNpo::from_fn(3, |_| true, |_| 1).unwrap();
        let err = LevelPartition::merged_lo_enumerated(&flat, NeighborhoodSpec::HammingRadius(1));
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    fn toy_with_infeasible() -> ToyNpo {
        // 011 and 110 infeasible; objective 1 + ones elsewhere.
        ToyNpo::from_fn(
            3,
            |x| !matches!(x.to_string().as_str(), "011" | "110"),
            |x| 1 + x.count_ones() as u64,
        )
        .unwrap()
    }

    #[test]
    fn infeasible_first_by_enumeration() {
        let toy = toy_with_infeasible();
        let nb = NeighborhoodSpec::HammingRadius(1);
        let p = LevelPartition::infeasible_first_enumerated(&toy, nb).unwrap();
        // brute force: feasible = 000,001,010,100,101,111 ; LO under radius 1:
        // 111 (global), 010 (neighbors 000,011x,110x -> only 000 < 010).
        // non-LO values: 000 ->1, 001 ->2, 100 ->2, 101 ->3 => {1,2,3}
        assert_eq!(p.m(), 4);
        let levels: Vec<usize> = p.level_table(&toy).unwrap();
        let expect = [2, 3, 5, 1, 3, 4, 1, 5];
        assert_eq!(levels, expect);
    }

    #[test]
    fn infeasible_first_with_full_feasibility_shifts_merged() {
        let rr = RoyalRoad::new(6, 2).unwrap();
        let nb = NeighborhoodSpec::HammingRadius(2);
        let merged = LevelPartition::merged_lo_enumerated(&rr, nb).unwrap();
        let general = LevelPartition::infeasible_first_enumerated(&rr, nb).unwrap();
        assert_eq!(general.m(), merged.m() + 1);
        let a = merged.level_table(&rr).unwrap();
        let b = general.level_table(&rr).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x + 1 == *y));
    }

    #[test]
    fn infeasible_first_all_feasible_local_optima() {
        // feasible points are isolated: every feasible string is a local optimum
        let toy = ToyNpo::from_fn(
            2,
            |x| x.count_ones() % 2 == 0,
            |x| 1 + x.count_ones() as u64,
        )
        .unwrap();
        let p =
            LevelPartition::infeasible_first_enumerated(&toy, NeighborhoodSpec::HammingRadius(1))
                .unwrap();
        assert_eq!(p.m(), 1);
        assert_eq!(p.level_table(&toy).unwrap(), vec![2, 1, 1, 2]);
        let none = ToyNpo::new(1, vec![false, false], vec![0, 0], None);
        assert!(
            none.is_err()
                || LevelPartition::infeasible_first_enumerated(
                    &none.unwrap(),
                    NeighborhoodSpec::HammingRadius(1)
                )
                .is_err()
        );
    }

    #[test]
    fn local_optimum_examples() {
        let rr = RoyalRoad::new(8, 2).unwrap();
        assert!(is_local_optimum(
            &rr,
            &NeighborhoodSpec::HammingRadius(2),
            &BitString::ones(8)
        )
        .unwrap());
        let vcp = TriangleVcp::new(1);
        assert!(!is_local_optimum(&vcp, &NeighborhoodSpec::HammingRadius(1), &bs("000")).unwrap());
        let om = OneMax::new(5);
        assert!(!is_local_optimum(&om, &NeighborhoodSpec::HammingRadius(1), &bs("11011")).unwrap());
        let toy = toy_with_infeasible();
        assert!(matches!(
            is_local_optimum(&toy, &NeighborhoodSpec::HammingRadius(1), &bs("011")),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn local_search_examples() {
        let om = OneMax::new(7);
        let nb = NeighborhoodSpec::HammingRadius(1);
        let res = local_search(&om, &nb, &BitString::zeros(7)).unwrap();
        assert_eq!(res.moves, 7);
        assert_eq!(res.optimum, BitString::ones(7));
        let res = local_search(&om, &nb, &BitString::ones(7)).unwrap();
        assert_eq!(res.moves, 0);

        let rr = RoyalRoad::new(8, 2).unwrap();
        let nb2 = NeighborhoodSpec::HammingRadius(2);
        for x in BitString::all(8) {
            let res = local_search(&rr, &nb2, &x).unwrap();
            assert!(res.moves <= 4);
            assert!(is_local_optimum(&rr, &nb2, &res.optimum).unwrap());
        }
        let toy = toy_with_infeasible();
        assert!(local_search(&toy, &nb, &bs("110")).is_err());
    }

    #[test]
    fn native_neighborhood_bound_enforced() {
        let toy = ToyNpo::from_fn(2, |_| true, |x| 1 + x.count_ones() as u64)
            .unwrap()
            .with_neighbors(vec![vec![3], vec![0], vec![0], vec![0]])
            .unwrap();
        let tight = NeighborhoodSpec::ProblemNative { k: 1 };
        assert!(tight.neighbors(&toy, &bs("00")).is_err());
        let loose = NeighborhoodSpec::ProblemNative { k: 2 };
        assert_eq!(loose.neighbors(&toy, &bs("00")).unwrap(), vec![bs("11")]);
        assert!(tight.neighbors(&OneMax::new(2), &bs("00")).is_err());
    }
}
