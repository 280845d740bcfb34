//! N-detect statistical test generation by single-bit flipping.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{resolve_targets, targets, DetectError, Polarity, TestMeta, TestSet};
use crate::netlist::Netlist;
use crate::rarity::RareSet;
use crate::seed::derive_seed;
use crate::sim::{pack_patterns, random_patterns, Pattern, Simulator, LANES};
use crate::trojan::Literal;

/// Activations demanded per target when none is configured.
pub const DEFAULT_N_DETECT: u32 = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatParams {
    pub n_detect: u32,
    /// Maximum number of distinct patterns returned.
    pub budget: usize,
    pub polarity: Polarity,
    pub seed: u64,
}

pub fn stat_testgen(
    golden: &Netlist,
    rare: &RareSet,
    params: StatParams,
) -> Result<TestSet, DetectError> {
    stat_testgen_targets(golden, &targets(rare, params.polarity), params)
}

/// Bit-sliced per-lane counter of satisfied demands.
struct LaneCounter {
    bits: Vec<u64>,
}

impl LaneCounter {
    fn new(max: usize) -> Self {
        let width = (usize::BITS - max.leading_zeros()) as usize;
        LaneCounter {
            bits: vec![0; width.max(1)],
        }
    }

    fn add(&mut self, mut carry: u64) {
        for b in &mut self.bits {
            if carry == 0 {
                break;
            }
            let next = *b & carry;
            *b ^= carry;
            carry = next;
        }
    }

    fn lane(&self, lane: usize) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .map(|(k, &w)| (w >> lane & 1) << k)
            .sum()
    }
}

struct Demand {
    sim: Simulator,
    targets: Vec<(usize, bool)>,
    counts: Vec<u32>,
    n: u32,
    open: usize,
    values: Vec<u64>,
}

impl Demand {
    /// Per-lane count of still-open targets each lane activates.
    fn gains(&mut self, words: &[u64], lanes: usize) -> Vec<u64> {
        self.sim.run(words, &mut self.values);
        let mut c = LaneCounter::new(self.targets.len());
        for (&(net, v), &k) in self.targets.iter().zip(&self.counts) {
            if k < self.n {
                let w = self.values[net];
                c.add(if v { w } else { !w });
            }
        }
        (0..lanes).map(|l| c.lane(l)).collect()
    }

    /// Lane 0 holds `p`; lane `j` holds `p` with bit `first + j - 1` flipped.
    fn flip_block(p: &Pattern, first: usize, k: usize) -> Vec<u64> {
        let mut words: Vec<u64> = p.bits().iter().map(|&b| if b { !0 } else { 0 }).collect();
        for j in 1..=k {
            words[first + j - 1] ^= 1 << j;
        }
        words
    }

    fn record(&mut self, p: &Pattern) {
        let words = pack_patterns(std::slice::from_ref(p), p.len()).expect("width");
        self.sim.run(&words, &mut self.values);
        for (&(net, v), k) in self.targets.iter().zip(self.counts.iter_mut()) {
            if *k < self.n && (self.values[net] & 1 == 1) == v {
                *k += 1;
                if *k == self.n {
                    self.open -= 1;
                }
            }
        }
    }
}

/// Generator over an explicit target list. Seeds a pool of `4 * budget`
/// random patterns; each pool pattern makes one pass over its bits, keeping
/// a flip only when it strictly raises the number of unmet targets the
/// pattern activates. Patterns that activate at least one unmet target are
/// retained until the budget is spent or every demand is met.
pub fn stat_testgen_targets(
    golden: &Netlist,
    targets: &[Literal],
    params: StatParams,
) -> Result<TestSet, DetectError> {
    assert!(params.n_detect > 0, "N must be positive");
    let tgt = resolve_targets(golden, targets)?;
    let width = golden.inputs().len();
    let mut d = Demand {
        sim: Simulator::new(golden),
        counts: vec![0; tgt.len()],
        open: tgt.len(),
        targets: tgt,
        n: params.n_detect,
        values: Vec::new(),
    };
    let pool_seed = derive_seed(params.seed, "stat-pool");
    let pool = random_patterns(params.budget.saturating_mul(4), width, pool_seed);
    let mut kept = Vec::new();
    let mut seen = HashSet::new();
    for mut p in pool {
        if kept.len() >= params.budget || d.open == 0 {
            break;
        }
        let mut i = 0;
        let mut base = None;
        while i < width {
            let k = (LANES - 1).min(width - i);
            let g = d.gains(&Demand::flip_block(&p, i, k), k + 1);
            match (1..=k).find(|&j| g[j] > g[0]) {
                Some(j) => {
                    p.flip(i + j - 1);
                    base = Some(g[j]);
                    i += j;
                }
                None => {
                    base = Some(g[0]);
                    i += k;
                }
            }
        }
        let gain = match base {
            Some(g) => g,
            None => d.gains(&Demand::flip_block(&p, 0, 0), 1)[0],
        };
        if gain > 0 && seen.insert(p.clone()) {
            d.record(&p);
            kept.push(p);
        }
    }
    let mut meta = TestMeta::new("stat", Some(params.polarity), width);
    meta.params
        .insert("n_detect".into(), params.n_detect.into());
    meta.params.insert("budget".into(), params.budget.into());
    meta.params.insert("targets".into(), d.targets.len().into());
    meta.params
        .insert("demands_met".into(), (d.targets.len() - d.open).into());
    meta.seeds.insert("seed".into(), params.seed);
    meta.seeds.insert("pool".into(), pool_seed);
    Ok(TestSet {
        patterns: kept,
        meta,
    })
}

/// N-detect coverage of `patterns` (each distinct pattern counted once):
/// the sum over targets of `min(activations, n)`.
pub fn n_detect_coverage(
    golden: &Netlist,
    targets: &[Literal],
    n: u32,
    patterns: &[Pattern],
) -> Result<u64, DetectError> {
    let tgt = resolve_targets(golden, targets)?;
    let width = golden.inputs().len();
    let mut seen = HashSet::new();
    let distinct: Vec<Pattern> = patterns
        .iter()
        .filter(|p| seen.insert(*p))
        .cloned()
        .collect();
    let sim = Simulator::new(golden);
    let mut values = Vec::new();
    let mut counts = vec![0u64; tgt.len()];
    for chunk in distinct.chunks(LANES) {
        sim.run(&pack_patterns(chunk, width)?, &mut values);
        let mask = crate::sim::lane_mask(chunk.len());
        for (&(net, v), c) in tgt.iter().zip(counts.iter_mut()) {
            let w = if v { values[net] } else { !values[net] };
            *c += (w & mask).count_ones() as u64;
        }
    }
    Ok(counts.iter().map(|&c| c.min(u64::from(n))).sum())
}
