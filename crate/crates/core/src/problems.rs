//! Benchmark problem instances.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::domain::{BitString, Problem};
use crate::error::{Error, Result};

/// Number of ones.
#[derive(Clone, Debug)]
pub struct OneMax {
    n: usize,
}

impl OneMax {
    pub fn new(n: usize) -> Self {
        OneMax { n }
    }
}

impl Problem for OneMax {
    fn name(&self) -> String {
        format!("onemax-{}", self.n)
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn objective(&self, x: &BitString) -> u64 {
        x.count_ones() as u64
    }

    fn known_optimum(&self) -> Option<u64> {
        Some(self.n as u64)
    }

    fn all_feasible(&self) -> bool {
        true
    }
}

/// Length of the longest all-ones prefix.
#[derive(Clone, Debug)]
pub struct LeadingOnes {
    n: usize,
}

impl LeadingOnes {
    pub fn new(n: usize) -> Self {
        LeadingOnes { n }
    }
}

impl Problem for LeadingOnes {
    fn name(&self) -> String {
        format!("leadingones-{}", self.n)
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn objective(&self, x: &BitString) -> u64 {
        x.bits().iter().take_while(|&&b| b).count() as u64
    }

    fn known_optimum(&self) -> Option<u64> {
        Some(self.n as u64)
    }

    fn all_feasible(&self) -> bool {
        true
    }
}

/// Royal Road `RR_{n,r}`: number of consecutive length-`r` blocks that are
/// all ones.
#[derive(Clone, Debug)]
pub struct RoyalRoad {
    n: usize,
    r: usize,
}

impl RoyalRoad {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if r == 0 || n == 0 || !n.is_multiple_of(r) {
            return Err(Error::Parameter(format!(
                "block length {r} must divide dimension {n}"
            )));
        }
        Ok(RoyalRoad { n, r })
    }

    pub fn block_len(&self) -> usize {
        self.r
    }

    pub fn blocks(&self) -> usize {
        self.n / self.r
    }
}

/// `RR_{n,r}(x)` as a free function.
pub fn rr_fitness(x: &BitString, r: usize) -> Result<u64> {
    let n = x.len();
    if r == 0 || !n.is_multiple_of(r) {
        return Err(Error::Parameter(format!(
            "block length {r} must divide dimension {n}"
        )));
    }
    Ok(x.bits().chunks(r).filter(|b| b.iter().all(|&v| v)).count() as u64)
}

impl Problem for RoyalRoad {
    fn name(&self) -> String {
        format!("rr-{}-{}", self.n, self.r)
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn objective(&self, x: &BitString) -> u64 {
        x.bits()
            .chunks(self.r)
            .filter(|b| b.iter().all(|&v| v))
            .count() as u64
    }

    fn known_optimum(&self) -> Option<u64> {
        Some(self.blocks() as u64)
    }

    fn all_feasible(&self) -> bool {
        true
    }
}

/// Vertex cover on `κ` disjoint triangles with the edge-to-endpoint
/// encoding; fitness is `|V| − |C(x)|`.
///
/// Triangle `t` has vertices `v_{3t}, v_{3t+1}, v_{3t+2}` and edges
/// `e_{3t} = (v_{3t}, v_{3t+1})`, `e_{3t+1} = (v_{3t+1}, v_{3t+2})`,
/// `e_{3t+2} = (v_{3t+2}, v_{3t})`. Bit 0 selects the first endpoint,
/// bit 1 the second.
#[derive(Clone, Debug)]
pub struct TriangleVcp {
    kappa: usize,
}

impl TriangleVcp {
    pub fn new(kappa: usize) -> Self {
        assert!(kappa >= 1, "need at least one triangle");
        TriangleVcp { kappa }
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn vertices(&self) -> usize {
        3 * self.kappa
    }

    /// Endpoint assigned to edge `e` by bit value `bit`.
    fn endpoint(e: usize, bit: bool) -> usize {
        let t = e / 3;
        let local = e % 3;
        let (a, b) = (local, (local + 1) % 3);
        3 * t + if bit { b } else { a }
    }

    /// Cover `C(x)` as a vertex membership mask.
    pub fn cover(&self, x: &BitString) -> Result<Vec<bool>> {
        if x.len() != 3 * self.kappa {
            return Err(Error::Dimension {
                expected: 3 * self.kappa,
                got: x.len(),
            });
        }
        let mut c = vec![false; self.vertices()];
        for (e, &bit) in x.bits().iter().enumerate() {
            c[Self::endpoint(e, bit)] = true;
        }
        Ok(c)
    }

    pub fn cover_size(&self, x: &BitString) -> Result<usize> {
        Ok(self.cover(x)?.iter().filter(|&&v| v).count())
    }
}

impl Problem for TriangleVcp {
    fn name(&self) -> String {
        format!("vcp-{}", self.kappa)
    }

    fn dimension(&self) -> usize {
        3 * self.kappa
    }

    fn objective(&self, x: &BitString) -> u64 {
        let mut hit = [false; 3];
        let mut covered = 0usize;
        for t in 0..self.kappa {
            hit.fill(false);
            for local in 0..3 {
                let e = 3 * t + local;
                hit[Self::endpoint(e, x.get(e)) - 3 * t] = true;
            }
            covered += hit.iter().filter(|&&h| h).count();
        }
        (self.vertices() - covered) as u64
    }

    fn known_optimum(&self) -> Option<u64> {
        Some(self.kappa as u64)
    }

    fn all_feasible(&self) -> bool {
        true
    }
}

/// Optimal-solution counts for `G(κ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VcpOptimaCount {
    /// Bitstrings attaining `f = κ`.
    pub strings: u64,
    /// Distinct optimal covers `C(x)` among those strings.
    pub covers: u64,
}

/// Counts optimal strings and optimal covers of `G(κ)` by enumeration.
pub fn count_optima_vcp(kappa: usize) -> Result<VcpOptimaCount> {
    if kappa == 0 || kappa > 6 {
        return Err(Error::TooLarge(format!("kappa {kappa} outside 1..=6")));
    }
    let vcp = TriangleVcp::new(kappa);
    let mut strings = 0;
    let mut covers = HashSet::new();
    for x in BitString::all(3 * kappa) {
        if vcp.objective(&x) == kappa as u64 {
            strings += 1;
            covers.insert(vcp.cover(&x)?);
        }
    }
    Ok(VcpOptimaCount {
        strings,
        covers: covers.len() as u64,
    })
}

/// Desk-scale NP optimization instance given by explicit tables over all
/// `2^n` strings.
///
/// Text format (`#` starts a comment, blank lines ignored):
///
/// ```text
/// n
/// <bits> <feasible 0|1> <objective>
/// ...                       one line per string, all 2^n strings
/// fallback <bits>           optional; default: first feasible string
/// ```
///
/// Infeasible lines may write `-` for the objective. Feasible objectives
/// must be at least 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyNpo {
    n: usize,
    feasible: Vec<bool>,
    objective: Vec<u64>,
    fallback: Option<BitString>,
    neighbors: Option<Vec<Vec<u64>>>,
    label: String,
}

pub const TOY_MAX_N: usize = 12;

impl ToyNpo {
    pub fn new(
        n: usize,
        feasible: Vec<bool>,
        objective: Vec<u64>,
        fallback: Option<BitString>,
    ) -> Result<Self> {
        if n == 0 || n > TOY_MAX_N {
            return Err(Error::Parameter(format!(
                "toy instances need 1 <= n <= {TOY_MAX_N}"
            )));
        }
        let size = 1usize << n;
        if feasible.len() != size || objective.len() != size {
            return Err(Error::Parameter(format!(
                "tables must have 2^{n} = {size} entries"
            )));
        }
        for i in 0..size {
            if feasible[i] && objective[i] == 0 {
                return Err(Error::Parameter(format!(
                    "feasible string {} has objective 0",
                    BitString::from_index(i as u64, n)
                )));
            }
        }
        let fallback = match fallback {
            Some(y) => {
                if y.len() != n || !feasible[y.to_index() as usize] {
                    return Err(Error::Parameter(format!("fallback {y} is not feasible")));
                }
                Some(y)
            }
            None => feasible
                .iter()
                .position(|&f| f)
                .map(|i| BitString::from_index(i as u64, n)),
        };
        Ok(ToyNpo {
            n,
            feasible,
            objective,
            fallback,
            neighbors: None,
            label: format!("toy-{n}"),
        })
    }

    /// Builds the tables from closures over all strings.
    pub fn from_fn(
        n: usize,
        feasible: impl Fn(&BitString) -> bool,
        objective: impl Fn(&BitString) -> u64,
    ) -> Result<Self> {
        if n == 0 || n > TOY_MAX_N {
            return Err(Error::Parameter(format!(
                "toy instances need 1 <= n <= {TOY_MAX_N}"
            )));
        }
        let (f, o): (Vec<bool>, Vec<u64>) = BitString::all(n)
            .map(|x| {
                let ok = feasible(&x);
                (ok, if ok { objective(&x) } else { 0 })
            })
            .unzip();
        ToyNpo::new(n, f, o, None)
    }

    /// 0/1 knapsack: feasible iff total weight ≤ capacity, objective
    /// `1 + Σ values`. The empty knapsack is the fallback.
    pub fn knapsack(weights: &[u64], values: &[u64], capacity: u64) -> Result<Self> {
        if weights.len() != values.len() {
            return Err(Error::Parameter(
                "weights and values differ in length".into(),
            ));
        }
        let n = weights.len();
        let pick = |x: &BitString, v: &[u64]| -> u64 {
            x.bits()
                .iter()
                .zip(v)
                .filter(|(b, _)| **b)
                .map(|(_, w)| *w)
                .sum()
        };
        let mut toy =
            ToyNpo::from_fn(n, |x| pick(x, weights) <= capacity, |x| 1 + pick(x, values))?;
        toy.fallback = Some(BitString::zeros(n));
        toy.label = format!("knapsack-{n}");
        Ok(toy)
    }

    /// Attaches an explicit neighbor list per string (indices), exposed
    /// as the native neighborhood.
    pub fn with_neighbors(mut self, neighbors: Vec<Vec<u64>>) -> Result<Self> {
        if neighbors.len() != 1 << self.n {
            return Err(Error::Parameter(
                "one neighbor list per string required".into(),
            ));
        }
        self.neighbors = Some(neighbors);
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing dimension line".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: first,
            msg: format!("bad dimension {header:?}"),
        })?;
        if n == 0 || n > TOY_MAX_N {
            return Err(Error::Parse {
                line: first,
                msg: format!("dimension must be in 1..={TOY_MAX_N}"),
            });
        }
        let size = 1usize << n;
        let mut seen = vec![false; size];
        let mut feasible = vec![false; size];
        let mut objective = vec![0u64; size];
        let mut fallback = None;
        for (line, l) in lines {
            let err = |msg: String| Error::Parse { line, msg };
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields[0] == "fallback" {
                if fields.len() != 2 {
                    return Err(err("expected `fallback <bits>`".into()));
                }
                fallback = Some(
                    fields[1]
                        .parse::<BitString>()
                        .map_err(|e| err(e.to_string()))?,
                );
                continue;
            }
            if fields.len() != 3 {
                return Err(err("expected `<bits> <feasible> <objective>`".into()));
            }
            let x: BitString = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
            if x.len() != n {
                return Err(err(format!("string {x} has length {} != {n}", x.len())));
            }
            let i = x.to_index() as usize;
            if seen[i] {
                return Err(err(format!("duplicate string {x}")));
            }
            seen[i] = true;
            feasible[i] = match fields[1] {
                "1" => true,
                "0" => false,
                other => return Err(err(format!("feasibility must be 0 or 1, got {other:?}"))),
            };
            objective[i] = match (feasible[i], fields[2]) {
                (false, "-") => 0,
                (_, s) => s.parse().map_err(|_| err(format!("bad objective {s:?}")))?,
            };
            if !feasible[i] {
                objective[i] = 0;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("no entry for {}", BitString::from_index(missing as u64, n)),
            });
        }
        ToyNpo::new(n, feasible, objective, fallback)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let label = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "toy".into());
        Ok(ToyNpo::parse(&text)?.with_label(label))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (i, x) in BitString::all(self.n).enumerate() {
            if self.feasible[i] {
                let _ = writeln!(out, "{x} 1 {}", self.objective[i]);
            } else {
                let _ = writeln!(out, "{x} 0 -");
            }
        }
        if let Some(y) = &self.fallback {
            let _ = writeln!(out, "fallback {y}");
        }
        out
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible.iter().filter(|&&f| f).count()
    }
}

impl Problem for ToyNpo {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn is_feasible(&self, x: &BitString) -> bool {
        self.feasible[x.to_index() as usize]
    }

    fn objective(&self, x: &BitString) -> u64 {
        self.objective[x.to_index() as usize]
    }

    fn fallback_feasible(&self) -> Option<BitString> {
        self.fallback.clone()
    }

    fn native_neighborhood(&self, x: &BitString) -> Option<Vec<BitString>> {
        self.neighbors.as_ref().map(|nb| {
            nb[x.to_index() as usize]
                .iter()
                .map(|&i| BitString::from_index(i, self.n))
                .filter(|y| self.is_feasible(y))
                .collect()
        })
    }

    fn all_feasible(&self) -> bool {
        self.feasible.iter().all(|&f| f)
    }
}
