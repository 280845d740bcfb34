//! Scalar and 64-lane bit-parallel simulation.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{GateKind, NetId, Netlist};
use crate::seed;

/// Lanes per packed word.
pub const LANES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("pattern has {got} bits, netlist has {expected} inputs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("block holds {0} patterns, at most {LANES} allowed")]
    TooManyLanes(usize),
    #[error("pattern file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One bit per primary input, in `Netlist::inputs` order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Pattern(Vec<bool>);

impl Pattern {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Pattern(bits)
    }

    pub fn zeros(width: usize) -> Self {
        Pattern(vec![false; width])
    }

    /// Big-endian view of `value`: the first input receives the most
    /// significant of the `width` low bits.
    pub fn from_index(value: u64, width: usize) -> Self {
        Pattern(
            (0..width)
                .map(|i| value >> (width - 1 - i) & 1 == 1)
                .collect(),
        )
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid pattern character `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Pattern)
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Pattern {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Flattened, topologically ordered gate program.
#[derive(Debug, Clone)]
pub struct Simulator {
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    net_count: usize,
    ops: Vec<(GateKind, NetId, u32, u32)>,
    fanins: Vec<NetId>,
}

impl Simulator {
    pub fn new(n: &Netlist) -> Self {
        let mut ops = Vec::with_capacity(n.gates().len());
        let mut fanins = Vec::new();
        for &gi in n.topo_order() {
            let g = &n.gates()[gi];
            let start = fanins.len() as u32;
            fanins.extend_from_slice(&g.fanins);
            ops.push((g.kind, g.output, start, fanins.len() as u32));
        }
        Simulator {
            inputs: n.inputs().to_vec(),
            outputs: n.outputs().to_vec(),
            net_count: n.net_count(),
            ops,
            fanins,
        }
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn net_count(&self) -> usize {
        self.net_count
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    /// Fills `values` (one word per net) from one word per primary input.
    pub fn run(&self, input_words: &[u64], values: &mut Vec<u64>) {
        debug_assert_eq!(input_words.len(), self.inputs.len());
        values.clear();
        values.resize(self.net_count, 0);
        for (&net, &w) in self.inputs.iter().zip(input_words) {
            values[net] = w;
        }
        for &(kind, out, start, end) in &self.ops {
            let f = &self.fanins[start as usize..end as usize];
            let v = match kind {
                GateKind::And => f.iter().fold(!0, |a, &x| a & values[x]),
                GateKind::Nand => !f.iter().fold(!0, |a, &x| a & values[x]),
                GateKind::Or => f.iter().fold(0, |a, &x| a | values[x]),
                GateKind::Nor => !f.iter().fold(0, |a, &x| a | values[x]),
                GateKind::Xor => f.iter().fold(0, |a, &x| a ^ values[x]),
                GateKind::Xnor => !f.iter().fold(0, |a, &x| a ^ values[x]),
                GateKind::Not => !values[f[0]],
                GateKind::Buf => values[f[0]],
                GateKind::Const0 => 0,
                GateKind::Const1 => !0,
            };
            values[out] = v;
        }
    }

    pub fn output_words(&self, values: &[u64]) -> Vec<u64> {
        self.outputs.iter().map(|&o| values[o]).collect()
    }
}

/// Transposes up to 64 patterns into one word per input.
pub fn pack_patterns(patterns: &[Pattern], width: usize) -> Result<Vec<u64>, SimError> {
    if patterns.len() > LANES {
        return Err(SimError::TooManyLanes(patterns.len()));
    }
    let mut words = vec![0u64; width];
    for (lane, p) in patterns.iter().enumerate() {
        if p.len() != width {
            return Err(SimError::LengthMismatch {
                expected: width,
                got: p.len(),
            });
        }
        for (i, &b) in p.bits().iter().enumerate() {
            words[i] |= (b as u64) << lane;
        }
    }
    Ok(words)
}

/// Extracts lane `lane` of a set of words as bits.
pub fn lane_bits(words: &[u64], lane: usize) -> Vec<bool> {
    words.iter().map(|w| w >> lane & 1 == 1).collect()
}

pub fn lane_mask(lanes: usize) -> u64 {
    if lanes >= LANES {
        !0
    } else {
        (1u64 << lanes) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub outputs: Vec<bool>,
    /// Value of every net, indexed by [`NetId`].
    pub values: Vec<bool>,
}

impl Evaluation {
    pub fn value(&self, n: &Netlist, net: &str) -> Option<bool> {
        n.net_id(net).map(|id| self.values[id])
    }
}

pub fn evaluate(n: &Netlist, p: &Pattern) -> Result<Evaluation, SimError> {
    let block = evaluate_packed(n, std::slice::from_ref(p))?;
    Ok(Evaluation {
        outputs: block.lane_outputs(n, 0),
        values: lane_bits(&block.words, 0),
    })
}

/// Values of every net for up to 64 patterns; inactive lanes are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBlock {
    pub lanes: usize,
    pub words: Vec<u64>,
}

impl PackedBlock {
    pub fn word(&self, net: NetId) -> u64 {
        self.words[net]
    }

    pub fn lane_outputs(&self, n: &Netlist, lane: usize) -> Vec<bool> {
        n.outputs()
            .iter()
            .map(|&o| self.words[o] >> lane & 1 == 1)
            .collect()
    }
}

pub fn evaluate_packed(n: &Netlist, patterns: &[Pattern]) -> Result<PackedBlock, SimError> {
    let inputs = pack_patterns(patterns, n.inputs().len())?;
    let sim = Simulator::new(n);
    let mut words = Vec::new();
    sim.run(&inputs, &mut words);
    let mask = lane_mask(patterns.len());
    for w in &mut words {
        *w &= mask;
    }
    Ok(PackedBlock {
        lanes: patterns.len(),
        words,
    })
}

/// Output bits for every pattern, simulated 64 at a time.
pub fn simulate_outputs(n: &Netlist, patterns: &[Pattern]) -> Result<Vec<Vec<bool>>, SimError> {
    let sim = Simulator::new(n);
    let width = n.inputs().len();
    let mut values = Vec::new();
    let mut out = Vec::with_capacity(patterns.len());
    for chunk in patterns.chunks(LANES) {
        sim.run(&pack_patterns(chunk, width)?, &mut values);
        let words = sim.output_words(&values);
        for lane in 0..chunk.len() {
            out.push(lane_bits(&words, lane));
        }
    }
    Ok(out)
}

/// Seeded random stimulus as packed blocks.
///
/// Block `b` draws one `u64` per input from the stream; lane `j` of those
/// words is pattern `64 b + j`. [`random_patterns`] is the unpacked view of
/// the same stream, so prefixes agree across `count`.
#[derive(Debug, Clone)]
pub struct RandomBlocks {
    rng: rand_chacha::ChaCha8Rng,
    width: usize,
    remaining: usize,
}

impl RandomBlocks {
    pub fn new(count: usize, width: usize, seed: u64) -> Self {
        RandomBlocks {
            rng: seed::rng(seed),
            width,
            remaining: count,
        }
    }
}

impl Iterator for RandomBlocks {
    /// (input words, active lane count)
    type Item = (Vec<u64>, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let lanes = self.remaining.min(LANES);
        self.remaining -= lanes;
        let mask = lane_mask(lanes);
        let words = (0..self.width)
            .map(|_| self.rng.next_u64() & mask)
            .collect();
        Some((words, lanes))
    }
}

pub fn random_patterns(count: usize, width: usize, seed: u64) -> Vec<Pattern> {
    let mut out = Vec::with_capacity(count);
    for (words, lanes) in RandomBlocks::new(count, width, seed) {
        for lane in 0..lanes {
            out.push(Pattern(lane_bits(&words, lane)));
        }
    }
    out
}

/// All `2^width` patterns in binary order (first input is the MSB).
pub fn exhaustive_patterns(width: usize) -> Vec<Pattern> {
    assert!(width <= 24, "exhaustive enumeration limited to 24 inputs");
    (0..1u64 << width)
        .map(|x| Pattern::from_index(x, width))
        .collect()
}

/// Packed blocks enumerating all `2^width` patterns in binary order.
pub fn exhaustive_blocks(width: usize) -> impl Iterator<Item = (Vec<u64>, usize)> {
    assert!(width <= 30, "exhaustive enumeration limited to 30 inputs");
    let total = 1u64 << width;
    (0..total.div_ceil(LANES as u64)).map(move |b| {
        let base = b * LANES as u64;
        let lanes = (total - base).min(LANES as u64) as usize;
        let mut words = vec![0u64; width];
        for lane in 0..lanes {
            let x = base + lane as u64;
            for (i, w) in words.iter_mut().enumerate() {
                *w |= (x >> (width - 1 - i) & 1) << lane;
            }
        }
        (words, lanes)
    })
}

/// Pattern file: one pattern per line, `#` starts a comment.
pub fn parse_patterns(text: &str, width: Option<usize>) -> Result<Vec<Pattern>, SimError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p: Pattern = line.parse().map_err(|message| SimError::Parse {
            line: i + 1,
            message,
        })?;
        if let Some(w) = width {
            if p.len() != w {
                return Err(SimError::Parse {
                    line: i + 1,
                    message: format!("expected {w} bits, found {}", p.len()),
                });
            }
        }
        out.push(p);
    }
    Ok(out)
}

pub fn emit_patterns(patterns: &[Pattern]) -> String {
    let mut s =
        String::with_capacity(patterns.len() * (patterns.first().map_or(0, Pattern::len) + 1));
    for p in patterns {
        s.push_str(&p.to_string());
        s.push('\n');
    }
    s
}
