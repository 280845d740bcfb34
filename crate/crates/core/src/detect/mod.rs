//! Test-based and SAT-based Trojan detection against a black-box suspect.
//!
//! Detectors see the golden netlist and a [`SuspectOracle`]; nothing in this
//! module accepts an infected netlist or a Trojan sidecar.

mod clique;
mod oracle;
mod satdet;
mod stat;

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::Netlist;
use crate::rarity::RareSet;
use crate::sat::SatError;
use crate::sim::{
    emit_patterns, lane_bits, lane_mask, pack_patterns, parse_patterns, Pattern, RandomBlocks,
    SimError, Simulator, LANES,
};
use crate::trojan::Literal;

pub use clique::{
    activating_input, clique_testgen, clique_testgen_targets, satisfiability_graph, CliqueParams,
    SatGraph,
};
pub use oracle::SuspectOracle;
pub use satdet::{sat_detect, SatDetectParams, DEFAULT_SAT_ITERATIONS, DEFAULT_SAT_SECONDS};
pub use stat::{
    n_detect_coverage, stat_testgen, stat_testgen_targets, StatParams, DEFAULT_N_DETECT,
};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("target set is empty")]
    EmptyTargets,
    #[error("unknown target net `{0}`")]
    UnknownTarget(String),
    #[error("witness {0} does not separate suspect from golden")]
    WitnessNotConfirmed(Pattern),
    #[error("test set file: {0}")]
    Format(String),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Which values of the target nodes a generator aims for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// The rare values themselves.
    Rare,
    /// The inverted, prevalent values.
    Prevalent,
    /// Union of a rare and a prevalent set.
    Combined,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Rare => "rare",
            Polarity::Prevalent => "prevalent",
            Polarity::Combined => "combined",
        }
    }
}

/// Target literals for `polarity` (rare values, or their inversions).
pub fn targets(rare: &RareSet, polarity: Polarity) -> Vec<Literal> {
    let invert = match polarity {
        Polarity::Rare => false,
        Polarity::Prevalent => true,
        Polarity::Combined => panic!("combined polarity has no single target list"),
    };
    rare.members
        .iter()
        .map(|m| Literal::new(m.net.clone(), m.value ^ invert))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMeta {
    pub strategy: String,
    pub polarity: Option<Polarity>,
    pub width: usize,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
    /// Set when generation stopped on a resource limit.
    #[serde(default)]
    pub partial: bool,
}

impl TestMeta {
    pub fn new(strategy: &str, polarity: Option<Polarity>, width: usize) -> Self {
        TestMeta {
            strategy: strategy.to_string(),
            polarity,
            width,
            params: BTreeMap::new(),
            seeds: BTreeMap::new(),
            partial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    pub patterns: Vec<Pattern>,
    pub meta: TestMeta,
}

const META_OPEN: &str = "# meta-begin";
const META_CLOSE: &str = "# meta-end";

impl TestSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Number of distinct patterns, the quantity budgets are charged in.
    pub fn distinct(&self) -> usize {
        self.patterns.iter().collect::<HashSet<_>>().len()
    }

    /// Pattern file preceded by a `#`-commented JSON metadata block, so the
    /// body still reads as a plain pattern file.
    pub fn to_file(&self) -> String {
        let json = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        let mut s = String::from(META_OPEN);
        s.push('\n');
        for line in json.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(META_CLOSE);
        s.push('\n');
        s.push_str(&emit_patterns(&self.patterns));
        s
    }

    pub fn from_file(text: &str) -> Result<TestSet, DetectError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(META_OPEN) {
            return Err(DetectError::Format("missing metadata block".into()));
        }
        let mut json = String::new();
        let mut closed = false;
        for line in lines.by_ref() {
            if line.trim() == META_CLOSE {
                closed = true;
                break;
            }
            let body = line
                .strip_prefix('#')
                .ok_or_else(|| DetectError::Format("metadata line without `#`".into()))?;
            json.push_str(body.strip_prefix(' ').unwrap_or(body));
            json.push('\n');
        }
        if !closed {
            return Err(DetectError::Format("unterminated metadata block".into()));
        }
        let meta: TestMeta =
            serde_json::from_str(&json).map_err(|e| DetectError::Format(e.to_string()))?;
        let rest: Vec<&str> = lines.collect();
        let patterns = parse_patterns(&rest.join("\n"), Some(meta.width))?;
        Ok(TestSet { patterns, meta })
    }
}

/// Why a detection run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A pattern made the suspect disagree with the golden netlist.
    Detected,
    /// Every test was applied without a mismatch.
    TestsExhausted,
    /// The oracle's query budget ran out.
    QueryBudget,
    /// No trigger/payload candidate remains consistent with the observations.
    Unsat,
    IterationBudget,
    TimeBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatTrace {
    pub iterations: u64,
    pub distinguishing_inputs: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub strategy: String,
    pub detected: bool,
    pub termination: Termination,
    pub witness: Option<Pattern>,
    pub queries_used: u64,
    pub wall_time_ms: f64,
    pub sat: Option<SatTrace>,
}

impl DetectionReport {
    /// Builds a report; a witness is re-queried (uncounted) and must separate
    /// the suspect from the golden netlist.
    pub(crate) fn new(
        golden: &Netlist,
        oracle: &SuspectOracle,
        strategy: &str,
        witness: Option<Pattern>,
        termination: Termination,
        queries_used: u64,
        started: Instant,
    ) -> Result<Self, DetectError> {
        if let Some(w) = &witness {
            let g = crate::sim::evaluate(golden, w)?.outputs;
            if oracle.recheck(w) == g {
                return Err(DetectError::WitnessNotConfirmed(w.clone()));
            }
        }
        Ok(DetectionReport {
            strategy: strategy.to_string(),
            detected: witness.is_some(),
            termination,
            witness,
            queries_used,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            sat: None,
        })
    }
}

fn check_width(golden: &Netlist, oracle: &SuspectOracle) -> Result<(), DetectError> {
    let (w, o) = (golden.inputs().len(), golden.outputs().len());
    if oracle.width() != w {
        return Err(DetectError::WidthMismatch {
            expected: w,
            found: oracle.width(),
        });
    }
    if oracle.output_count() != o {
        return Err(DetectError::WidthMismatch {
            expected: o,
            found: oracle.output_count(),
        });
    }
    Ok(())
}

/// Applies packed stimulus blocks in order, charging the oracle one query
/// per pattern up to and including the first mismatch.
fn apply_blocks(
    golden: &Netlist,
    oracle: &mut SuspectOracle,
    blocks: impl Iterator<Item = (Vec<u64>, usize)>,
    strategy: &str,
) -> Result<DetectionReport, DetectError> {
    check_width(golden, oracle)?;
    let started = Instant::now();
    let sim = Simulator::new(golden);
    let mut values = Vec::new();
    let mut used = 0u64;
    for (words, lanes) in blocks {
        sim.run(&words, &mut values);
        let suspect = oracle.peek_block(&words, lanes);
        let mask = lane_mask(lanes);
        let diff = sim
            .outputs()
            .iter()
            .zip(&suspect)
            .fold(0u64, |acc, (&o, &s)| acc | ((values[o] ^ s) & mask));
        let needed = if diff != 0 {
            diff.trailing_zeros() as u64 + 1
        } else {
            lanes as u64
        };
        let granted = oracle.charge(needed);
        used += granted;
        if granted < needed {
            return DetectionReport::new(
                golden,
                oracle,
                strategy,
                None,
                Termination::QueryBudget,
                used,
                started,
            );
        }
        if diff != 0 {
            let w = Pattern::from_bits(lane_bits(&words, diff.trailing_zeros() as usize));
            return DetectionReport::new(
                golden,
                oracle,
                strategy,
                Some(w),
                Termination::Detected,
                used,
                started,
            );
        }
    }
    DetectionReport::new(
        golden,
        oracle,
        strategy,
        None,
        Termination::TestsExhausted,
        used,
        started,
    )
}

/// Applies `tests` in order and stops at the first mismatch. Repeated
/// patterns are applied once.
pub fn apply_tests(
    golden: &Netlist,
    oracle: &mut SuspectOracle,
    tests: &TestSet,
) -> Result<DetectionReport, DetectError> {
    let width = golden.inputs().len();
    if tests.meta.width != width {
        return Err(DetectError::WidthMismatch {
            expected: width,
            found: tests.meta.width,
        });
    }
    let mut seen = HashSet::new();
    let distinct: Vec<&Pattern> = tests.patterns.iter().filter(|p| seen.insert(*p)).collect();
    let mut blocks = Vec::with_capacity(distinct.len().div_ceil(LANES));
    for chunk in distinct.chunks(LANES) {
        let owned: Vec<Pattern> = chunk.iter().map(|&p| p.clone()).collect();
        blocks.push((pack_patterns(&owned, width)?, owned.len()));
    }
    apply_blocks(golden, oracle, blocks.into_iter(), &tests.meta.strategy)
}

/// Applies `count` seeded uniformly random patterns.
pub fn random_detect(
    golden: &Netlist,
    oracle: &mut SuspectOracle,
    count: usize,
    seed: u64,
) -> Result<DetectionReport, DetectError> {
    let blocks = RandomBlocks::new(count, golden.inputs().len(), seed);
    apply_blocks(golden, oracle, blocks, "random")
}

/// The seeded random patterns [`random_detect`] applies, as a test set.
pub fn random_testset(width: usize, count: usize, seed: u64) -> TestSet {
    let mut meta = TestMeta::new("random", None, width);
    meta.params.insert("count".into(), count.into());
    meta.seeds.insert("patterns".into(), seed);
    TestSet {
        patterns: crate::sim::random_patterns(count, width, seed),
        meta,
    }
}

/// Rare-target tests followed by prevalent-target tests.
pub fn evolved_union(rare: &TestSet, prevalent: &TestSet) -> Result<TestSet, DetectError> {
    if rare.meta.width != prevalent.meta.width {
        return Err(DetectError::WidthMismatch {
            expected: rare.meta.width,
            found: prevalent.meta.width,
        });
    }
    let mut meta = TestMeta::new(
        &format!("{}_evolved", rare.meta.strategy),
        Some(Polarity::Combined),
        rare.meta.width,
    );
    meta.params
        .insert("rare_patterns".into(), rare.len().into());
    meta.params
        .insert("prevalent_patterns".into(), prevalent.len().into());
    for (k, v) in &rare.meta.seeds {
        meta.seeds.insert(format!("rare.{k}"), *v);
    }
    for (k, v) in &prevalent.meta.seeds {
        meta.seeds.insert(format!("prevalent.{k}"), *v);
    }
    meta.partial = rare.meta.partial || prevalent.meta.partial;
    let mut patterns = rare.patterns.clone();
    patterns.extend(prevalent.patterns.iter().cloned());
    Ok(TestSet { patterns, meta })
}

/// Resolves target literals to (net id, value).
pub(crate) fn resolve_targets(
    golden: &Netlist,
    targets: &[Literal],
) -> Result<Vec<(usize, bool)>, DetectError> {
    if targets.is_empty() {
        return Err(DetectError::EmptyTargets);
    }
    targets
        .iter()
        .map(|t| {
            golden
                .net_id(&t.net)
                .map(|id| (id, t.value))
                .ok_or_else(|| DetectError::UnknownTarget(t.net.clone()))
        })
        .collect()
}
