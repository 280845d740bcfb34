//! Satisfiability graph over target literals and maximal-clique test
//! sampling.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{resolve_targets, targets, DetectError, Polarity, TestMeta, TestSet};
use crate::netlist::Netlist;
use crate::rarity::RareSet;
use crate::sat::{encode_into, Budget, CdclSolver, Cnf, Lit, Model, SatEngine, SatError, Verdict};
use crate::seed::{derive_seed, rng};
use crate::sim::{lane_mask, Pattern, RandomBlocks, Simulator};
use crate::trojan::Literal;

/// Random patterns simulated up front; every pair they co-activate is an
/// edge without a solver call.
const WITNESS_SAMPLES: usize = 4096;
/// Cliques grown sequentially on one solver before handing out the next chunk.
const CLIQUE_CHUNK: usize = 16;

type Bits = Vec<u64>;

fn bit(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

/// Vertices are target literals; `i -- j` iff one input pattern gives both
/// nets their target values. A vertex is satisfiable iff its own target
/// value is reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatGraph {
    pub targets: Vec<Literal>,
    pub satisfiable: Vec<bool>,
    adj: Vec<Bits>,
}

impl SatGraph {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn edge(&self, i: usize, j: usize) -> bool {
        i != j && bit(&self.adj[i], j)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.edge(i, j))
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Golden netlist encoding plus the literal of every target.
struct Encoded {
    cnf: Cnf,
    x: Vec<Lit>,
    target_lits: Vec<Lit>,
    sim: Simulator,
    tgt: Vec<(usize, bool)>,
}

impl Encoded {
    fn new(golden: &Netlist, targets: &[Literal]) -> Result<Self, DetectError> {
        let tgt = resolve_targets(golden, targets)?;
        let mut cnf = Cnf::new();
        let lits = encode_into(&mut cnf, golden, "golden", &HashMap::new())?;
        Ok(Encoded {
            x: golden.inputs().iter().map(|&i| lits[i]).collect(),
            target_lits: tgt
                .iter()
                .map(|&(net, v)| lits[net].with_polarity(v))
                .collect(),
            cnf,
            sim: Simulator::new(golden),
            tgt,
        })
    }

    fn solver(&self, seed: u64) -> CdclSolver {
        let mut s = CdclSolver::new().with_random_polarity(rng(seed));
        s.add_cnf(&self.cnf);
        s
    }

    fn pattern(&self, m: &Model) -> Pattern {
        Pattern::from_bits(self.x.iter().map(|&l| m.lit(l)).collect())
    }

    /// Targets activated by each lane of a packed block.
    fn active_sets(&self, words: &[u64], lanes: usize) -> Vec<Bits> {
        let mut values = Vec::new();
        self.sim.run(words, &mut values);
        let mask = lane_mask(lanes);
        let mut sets = vec![vec![0u64; self.tgt.len().div_ceil(64)]; lanes];
        for (t, &(net, v)) in self.tgt.iter().enumerate() {
            let mut w = if v { values[net] } else { !values[net] } & mask;
            while w != 0 {
                let lane = w.trailing_zeros() as usize;
                set_bit(&mut sets[lane], t);
                w &= w - 1;
            }
        }
        sets
    }

    fn active(&self, p: &Pattern) -> Bits {
        let words: Vec<u64> = p.bits().iter().map(|&b| u64::from(b)).collect();
        self.active_sets(&words, 1).pop().unwrap()
    }

    fn solve(
        &self,
        s: &mut CdclSolver,
        members: &[usize],
        budget: Budget,
    ) -> Result<Option<Pattern>, SatError> {
        let assume: Vec<Lit> = members.iter().map(|&i| self.target_lits[i]).collect();
        Ok(match s.solve(&assume, budget)? {
            Verdict::Sat(m) => Some(self.pattern(&m)),
            Verdict::Unsat => None,
        })
    }
}

/// An input pattern that drives every literal to its value at once, or
/// `None` when the conjunction is unsatisfiable on `golden`.
pub fn activating_input(
    golden: &Netlist,
    literals: &[Literal],
) -> Result<Option<Pattern>, DetectError> {
    if literals.is_empty() {
        return Err(DetectError::EmptyTargets);
    }
    let e = Encoded::new(golden, literals)?;
    let mut s = e.solver(0);
    let all: Vec<usize> = (0..literals.len()).collect();
    Ok(e.solve(&mut s, &all, Budget::unlimited())?)
}

fn mark_clique(adj: &mut [Bits], active: &Bits) {
    let members: Vec<usize> = (0..adj.len()).filter(|&i| bit(active, i)).collect();
    for &i in &members {
        for (w, a) in adj[i].iter_mut().zip(active) {
            *w |= a;
        }
    }
}

/// Builds the satisfiability graph. Pairs co-activated by a seeded random
/// sample or by an earlier solver model are edges outright; every other
/// pair of satisfiable vertices is decided by a solver call.
pub fn satisfiability_graph(
    golden: &Netlist,
    targets: &[Literal],
    seed: u64,
) -> Result<SatGraph, DetectError> {
    let enc = Encoded::new(golden, targets)?;
    build_graph(&enc, targets, seed)
}

fn build_graph(enc: &Encoded, targets: &[Literal], seed: u64) -> Result<SatGraph, DetectError> {
    let m = targets.len();
    let words = m.div_ceil(64);
    // adj[i] bit i set means vertex i is known satisfiable
    let mut adj: Vec<Bits> = vec![vec![0; words]; m];
    let width = enc.x.len();
    for (w, lanes) in RandomBlocks::new(WITNESS_SAMPLES, width, derive_seed(seed, "graph-sample")) {
        for a in enc.active_sets(&w, lanes) {
            mark_clique(&mut adj, &a);
        }
    }
    let mut solver = enc.solver(derive_seed(seed, "graph-vertices"));
    let mut satisfiable = vec![false; m];
    for i in 0..m {
        if bit(&adj[i], i) {
            satisfiable[i] = true;
            continue;
        }
        if let Some(p) = enc.solve(&mut solver, &[i], Budget::unlimited())? {
            satisfiable[i] = true;
            mark_clique(&mut adj, &enc.active(&p));
        }
    }
    let snapshot = adj.clone();
    let rows: Vec<Result<Vec<(usize, Bits)>, SatError>> = (0..m)
        .into_par_iter()
        .map_init(
            || None::<CdclSolver>,
            |slot, i| {
                let mut found: Vec<(usize, Bits)> = Vec::new();
                if !satisfiable[i] {
                    return Ok(found);
                }
                let mut row = snapshot[i].clone();
                for j in i + 1..m {
                    if !satisfiable[j] || bit(&row, j) {
                        continue;
                    }
                    let s =
                        slot.get_or_insert_with(|| enc.solver(derive_seed(seed, "graph-pairs")));
                    if let Some(p) = enc.solve(s, &[i, j], Budget::unlimited())? {
                        let a = enc.active(&p);
                        for (w, x) in row.iter_mut().zip(&a) {
                            *w |= x;
                        }
                        found.push((j, a));
                    }
                }
                Ok(found)
            },
        )
        .collect();
    for r in rows {
        for (_, a) in r? {
            mark_clique(&mut adj, &a);
        }
    }
    Ok(SatGraph {
        targets: targets.to_vec(),
        satisfiable,
        adj,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueParams {
    /// Number of cliques sampled, one test each.
    pub cliques: usize,
    pub polarity: Polarity,
    pub seed: u64,
}

/// Samples `cliques` maximal cliques of the satisfiability graph and emits
/// one satisfying input per clique. Each clique starts from a uniformly
/// random satisfiable vertex and tries its neighbours in random order; a
/// neighbour joins when it is adjacent to every member and the enlarged
/// conjunction stays satisfiable (free when the current witness already
/// activates it). Stops early, flagging the set as partial, when `deadline`
/// passes.
pub fn clique_testgen(
    golden: &Netlist,
    rare: &RareSet,
    params: CliqueParams,
    deadline: Option<Instant>,
) -> Result<TestSet, DetectError> {
    clique_testgen_targets(golden, &targets(rare, params.polarity), params, deadline)
}

pub fn clique_testgen_targets(
    golden: &Netlist,
    targets: &[Literal],
    params: CliqueParams,
    deadline: Option<Instant>,
) -> Result<TestSet, DetectError> {
    let enc = Encoded::new(golden, targets)?;
    let graph = build_graph(&enc, targets, params.seed)?;
    let vertices: Vec<usize> = (0..graph.len()).filter(|&i| graph.satisfiable[i]).collect();
    let budget = Budget {
        max_conflicts: None,
        deadline,
    };
    let chunks: Vec<usize> = (0..params.cliques.div_ceil(CLIQUE_CHUNK)).collect();
    let results: Vec<Result<(Vec<Pattern>, bool), SatError>> = chunks
        .par_iter()
        .map(|&c| {
            let mut out = Vec::new();
            if vertices.is_empty() {
                return Ok((out, false));
            }
            let mut solver = enc.solver(derive_seed(params.seed, &format!("clique-solver-{c}")));
            let end = ((c + 1) * CLIQUE_CHUNK).min(params.cliques);
            for k in c * CLIQUE_CHUNK..end {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    return Ok((out, true));
                }
                match grow_clique(&enc, &graph, &vertices, &mut solver, params.seed, k, budget) {
                    Ok((_, p)) => out.push(p),
                    Err(SatError::Budget(_)) => return Ok((out, true)),
                    Err(e) => return Err(e),
                }
            }
            Ok((out, false))
        })
        .collect();
    let mut seen = HashSet::new();
    let mut patterns = Vec::new();
    let mut partial = false;
    for r in results {
        let (ps, cut) = r?;
        partial |= cut;
        patterns.extend(ps.into_iter().filter(|p| seen.insert(p.clone())));
    }
    let mut meta = TestMeta::new("clique", Some(params.polarity), golden.inputs().len());
    meta.params.insert("cliques".into(), params.cliques.into());
    meta.params.insert("targets".into(), graph.len().into());
    meta.params
        .insert("satisfiable_targets".into(), vertices.len().into());
    meta.params
        .insert("edges".into(), graph.edges().len().into());
    meta.seeds.insert("seed".into(), params.seed);
    meta.partial = partial;
    Ok(TestSet { patterns, meta })
}

/// Grows clique number `k`; returns its members and witness pattern.
fn grow_clique(
    enc: &Encoded,
    graph: &SatGraph,
    vertices: &[usize],
    solver: &mut CdclSolver,
    seed: u64,
    k: usize,
    budget: Budget,
) -> Result<(Vec<usize>, Pattern), SatError> {
    let mut r = rng(derive_seed(seed, &format!("clique-{k}")));
    let v = vertices[r.gen_range(0..vertices.len())];
    let mut cands: Vec<usize> = graph
        .neighbors(v)
        .filter(|&u| graph.satisfiable[u])
        .collect();
    cands.shuffle(&mut r);
    let mut members = vec![v];
    let mut witness = enc
        .solve(solver, &members, budget)?
        .expect("satisfiable vertex");
    let mut active = enc.active(&witness);
    for u in cands {
        if !members.iter().all(|&w| graph.edge(u, w)) {
            continue;
        }
        if bit(&active, u) {
            members.push(u);
            continue;
        }
        members.push(u);
        match enc.solve(solver, &members, budget)? {
            Some(p) => {
                active = enc.active(&p);
                witness = p;
            }
            None => {
                members.pop();
            }
        }
    }
    Ok((members, witness))
}
