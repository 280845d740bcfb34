//! Signal-probability profiling and rare-node classification.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::Netlist;
use crate::sim::{
    exhaustive_blocks, pack_patterns, Pattern, RandomBlocks, SimError, Simulator, LANES,
};

/// Threshold used when none is configured.
pub const DEFAULT_RARE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("profile CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("profile needs at least one sample")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetProfile {
    pub net: String,
    pub rare_value: bool,
    /// Observed frequency of `rare_value`, never above 0.5.
    pub rare_prob: f64,
    /// Number of samples in which the net carried `rare_value`.
    pub rare_count: u64,
}

impl NetProfile {
    fn from_ones(net: String, ones: u64, samples: u64) -> Self {
        let zeros = samples - ones;
        let (rare_value, rare_count) = if ones < zeros {
            (true, ones)
        } else {
            (false, zeros)
        };
        NetProfile {
            net,
            rare_value,
            rare_prob: rare_count as f64 / samples as f64,
            rare_count,
        }
    }
}

/// Rare value and probability of every gate-driven net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    /// Gate-driven nets in declaration order.
    pub entries: Vec<NetProfile>,
    pub sample_count: u64,
    pub seed: Option<u64>,
}

impl SignalProfile {
    pub fn get(&self, net: &str) -> Option<&NetProfile> {
        self.entries.iter().find(|e| e.net == net)
    }

    pub fn to_csv(&self) -> String {
        let mut rows: Vec<&NetProfile> = self.entries.iter().collect();
        rows.sort_by(|a, b| a.net.cmp(&b.net));
        let mut s = String::from("net,rare_value,rare_prob,samples\n");
        for r in rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.net, r.rare_value as u8, r.rare_prob, self.sample_count
            );
        }
        s
    }

    /// Reads the CSV written by [`SignalProfile::to_csv`]. Row order is kept
    /// as found (name order); the seed is not part of the file.
    pub fn from_csv(text: &str) -> Result<Self, ProfileError> {
        let err = |line: usize, message: &str| ProfileError::Csv {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "net,rare_value,rare_prob,samples" => {}
            _ => return Err(err(1, "missing header")),
        }
        let mut entries = Vec::new();
        let mut samples = None;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 4 {
                return Err(err(i + 1, "expected 4 columns"));
            }
            let rare_value = match cols[1] {
                "0" => false,
                "1" => true,
                _ => return Err(err(i + 1, "rare_value must be 0 or 1")),
            };
            let rare_prob: f64 = cols[2].parse().map_err(|_| err(i + 1, "bad probability"))?;
            let n: u64 = cols[3]
                .parse()
                .map_err(|_| err(i + 1, "bad sample count"))?;
            if *samples.get_or_insert(n) != n || n == 0 {
                return Err(err(i + 1, "inconsistent sample count"));
            }
            entries.push(NetProfile {
                net: cols[0].to_string(),
                rare_value,
                rare_prob,
                rare_count: (rare_prob * n as f64).round() as u64,
            });
        }
        Ok(SignalProfile {
            entries,
            sample_count: samples.unwrap_or(0),
            seed: None,
        })
    }
}

fn count_block(
    sim: &Simulator,
    words: &[u64],
    lanes: usize,
    values: &mut Vec<u64>,
    ones: &mut [u64],
) {
    sim.run(words, values);
    let mask = crate::sim::lane_mask(lanes);
    for (c, v) in ones.iter_mut().zip(values.iter()) {
        *c += (v & mask).count_ones() as u64;
    }
}

fn finish(n: &Netlist, ones: Vec<u64>, samples: u64, seed: Option<u64>) -> SignalProfile {
    let entries = n
        .internal_nets()
        .map(|net| NetProfile::from_ones(n.net_name(net).to_string(), ones[net], samples))
        .collect();
    SignalProfile {
        entries,
        sample_count: samples,
        seed,
    }
}

fn merge(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Profiles every gate-driven net over `sample_count` seeded random patterns.
/// Counts are merged by addition, so the result does not depend on how the
/// blocks are split across threads.
pub fn profile_signals(
    n: &Netlist,
    sample_count: u64,
    seed: u64,
) -> Result<SignalProfile, ProfileError> {
    if sample_count == 0 {
        return Err(ProfileError::NoSamples);
    }
    let sim = Simulator::new(n);
    let blocks: Vec<(Vec<u64>, usize)> =
        RandomBlocks::new(sample_count as usize, n.inputs().len(), seed).collect();
    let ones = blocks
        .par_chunks(64)
        .map(|chunk| {
            let mut ones = vec![0u64; n.net_count()];
            let mut values = Vec::new();
            for (words, lanes) in chunk {
                count_block(&sim, words, *lanes, &mut values, &mut ones);
            }
            ones
        })
        .reduce(|| vec![0u64; n.net_count()], merge);
    Ok(finish(n, ones, sample_count, Some(seed)))
}

/// Profile over an explicit sample set.
pub fn profile_from_patterns(
    n: &Netlist,
    patterns: &[Pattern],
) -> Result<SignalProfile, ProfileError> {
    if patterns.is_empty() {
        return Err(ProfileError::NoSamples);
    }
    let sim = Simulator::new(n);
    let mut ones = vec![0u64; n.net_count()];
    let mut values = Vec::new();
    for chunk in patterns.chunks(LANES) {
        let words = pack_patterns(chunk, n.inputs().len())?;
        count_block(&sim, &words, chunk.len(), &mut values, &mut ones);
    }
    Ok(finish(n, ones, patterns.len() as u64, None))
}

/// Exact profile by enumerating every input pattern.
pub fn profile_exhaustive(n: &Netlist) -> SignalProfile {
    let width = n.inputs().len();
    assert!(width <= 24, "exhaustive profiling limited to 24 inputs");
    let sim = Simulator::new(n);
    let blocks: Vec<(Vec<u64>, usize)> = exhaustive_blocks(width).collect();
    let ones = blocks
        .par_chunks(256)
        .map(|chunk| {
            let mut ones = vec![0u64; n.net_count()];
            let mut values = Vec::new();
            for (words, lanes) in chunk {
                count_block(&sim, words, *lanes, &mut values, &mut ones);
            }
            ones
        })
        .reduce(|| vec![0u64; n.net_count()], merge);
    finish(n, ones, 1u64 << width, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareNode {
    pub net: String,
    pub value: bool,
    pub prob: f64,
}

/// Profile entries whose rare probability is strictly below `threshold`,
/// ordered by ascending probability then net name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareSet {
    pub threshold: f64,
    pub members: Vec<RareNode>,
}

impl RareSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn rare_set(profile: &SignalProfile, threshold: f64) -> RareSet {
    assert!(
        threshold > 0.0 && threshold < 0.5,
        "rare threshold must lie in (0, 0.5)"
    );
    let mut members: Vec<RareNode> = profile
        .entries
        .iter()
        .filter(|e| e.rare_prob < threshold)
        .map(|e| RareNode {
            net: e.net.clone(),
            value: e.rare_value,
            prob: e.rare_prob,
        })
        .collect();
    members.sort_by(|a, b| a.prob.total_cmp(&b.prob).then_with(|| a.net.cmp(&b.net)));
    RareSet { threshold, members }
}
