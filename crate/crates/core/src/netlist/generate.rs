//! Generated benchmark circuits.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GateKind, Netlist, NetlistBuilder, NetlistError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Multiplier,
    XorTree,
    SboxNetwork,
}

impl BenchmarkKind {
    /// Inclusive width bounds (bits per operand for the multiplier, inputs otherwise).
    pub fn width_range(self) -> (usize, usize) {
        match self {
            BenchmarkKind::Multiplier => (4, 16),
            BenchmarkKind::XorTree => (8, 64),
            BenchmarkKind::SboxNetwork => (16, 64),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::Multiplier => "multiplier",
            BenchmarkKind::XorTree => "xor_tree",
            BenchmarkKind::SboxNetwork => "sbox_network",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiplier" => Ok(BenchmarkKind::Multiplier),
            "xor_tree" => Ok(BenchmarkKind::XorTree),
            "sbox_network" => Ok(BenchmarkKind::SboxNetwork),
            other => Err(format!("unknown benchmark kind `{other}`")),
        }
    }
}

/// Generates a benchmark netlist. Output is a pure function of the arguments.
///
/// * `multiplier`: unsigned array multiplier, inputs `a0..`, `b0..` (LSB first),
///   outputs `p0..p{2w-1}`. The seed is ignored.
/// * `xor_tree`: `max(2, w/4)` outputs, each the parity of a seeded random
///   input subset of size at least two.
/// * `sbox_network`: two rounds of seeded 4-bit S-boxes (decoder + OR planes)
///   with a seeded bit permutation between rounds.
pub fn gen_benchmark(
    kind: BenchmarkKind,
    width: usize,
    seed: u64,
) -> Result<Netlist, NetlistError> {
    let (min, max) = kind.width_range();
    if width < min || width > max {
        return Err(NetlistError::WidthOutOfRange {
            kind,
            width,
            min,
            max,
        });
    }
    let b = match kind {
        BenchmarkKind::Multiplier => multiplier(width),
        BenchmarkKind::XorTree => xor_tree(width, seed),
        BenchmarkKind::SboxNetwork => sbox_network(width, seed),
    };
    b.build()
}

fn multiplier(w: usize) -> NetlistBuilder {
    let mut b = NetlistBuilder::new(format!("mult{w}"));
    for i in 0..w {
        b.input(&format!("a{i}"));
    }
    for i in 0..w {
        b.input(&format!("b{i}"));
    }
    for k in 0..2 * w {
        b.output(&format!("p{k}"));
    }
    let pp = |i: usize, j: usize| format!("pp_{i}_{j}");
    for i in 0..w {
        for j in 0..w {
            b.gate(
                &pp(i, j),
                GateKind::And,
                &[format!("a{j}"), format!("b{i}")],
            );
        }
    }
    // running sum, one net per bit position
    let mut sum: Vec<String> = (0..w).map(|j| pp(0, j)).collect();
    for i in 1..w {
        let mut carry: Option<String> = None;
        for k in i..i + w {
            let x = pp(i, k - i);
            let base = format!("r{i}_{k}");
            let (s, c) = match (sum.get(k).cloned(), carry.take()) {
                (Some(y), Some(c)) => {
                    let t = format!("{base}_t");
                    b.gate(&t, GateKind::Xor, &[&x, &y]);
                    b.gate(&format!("{base}_s"), GateKind::Xor, &[&t, &c]);
                    b.gate(&format!("{base}_g"), GateKind::And, &[&x, &y]);
                    b.gate(&format!("{base}_h"), GateKind::And, &[&t, &c]);
                    b.gate(
                        &format!("{base}_c"),
                        GateKind::Or,
                        &[format!("{base}_g"), format!("{base}_h")],
                    );
                    (format!("{base}_s"), format!("{base}_c"))
                }
                (Some(y), None) | (None, Some(y)) => {
                    b.gate(&format!("{base}_s"), GateKind::Xor, &[&x, &y]);
                    b.gate(&format!("{base}_c"), GateKind::And, &[&x, &y]);
                    (format!("{base}_s"), format!("{base}_c"))
                }
                (None, None) => unreachable!("position {k} has neither sum bit nor carry"),
            };
            if k < sum.len() {
                sum[k] = s;
            } else {
                sum.push(s);
            }
            carry = Some(c);
        }
        sum.push(carry.expect("row produced a carry"));
    }
    debug_assert_eq!(sum.len(), 2 * w);
    for (k, s) in sum.iter().enumerate() {
        b.gate(&format!("p{k}"), GateKind::Buf, &[s]);
    }
    b
}

/// Balanced tree of 2-input gates over `leaves`; returns the root net.
pub(crate) fn balanced_tree(
    b: &mut NetlistBuilder,
    kind: GateKind,
    leaves: Vec<String>,
    mut fresh: impl FnMut() -> String,
) -> String {
    assert!(!leaves.is_empty());
    let mut level = leaves;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            if pair.len() == 2 {
                let n = fresh();
                b.gate(&n, kind, pair);
                next.push(n);
            } else {
                next.push(pair[0].clone());
            }
        }
        level = next;
    }
    level.pop().unwrap()
}

fn xor_tree(w: usize, seed: u64) -> NetlistBuilder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetlistBuilder::new(format!("xortree{w}"));
    let inputs: Vec<String> = (0..w).map(|i| format!("x{i}")).collect();
    for i in &inputs {
        b.input(i);
    }
    let outs = (w / 4).max(2);
    let mut counter = 0usize;
    for o in 0..outs {
        let size = rng.gen_range(2..=w);
        let mut leaves: Vec<String> = inputs.choose_multiple(&mut rng, size).cloned().collect();
        leaves.sort_by_key(|n| n[1..].parse::<usize>().unwrap());
        let root = balanced_tree(&mut b, GateKind::Xor, leaves, || {
            counter += 1;
            format!("xt{counter}")
        });
        let name = format!("o{o}");
        b.output(&name);
        b.gate(&name, GateKind::Buf, &[root]);
    }
    b
}

/// One S-box instance: literal inverters, 16 minterm decoders, 4 OR planes.
fn sbox(b: &mut NetlistBuilder, tag: &str, bits: &[String], table: &[u8; 16]) -> Vec<String> {
    let inv: Vec<String> = bits
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let n = format!("{tag}_n{i}");
            b.gate(&n, GateKind::Not, &[x]);
            n
        })
        .collect();
    let minterms: Vec<String> = (0..16usize)
        .map(|m| {
            let lits: Vec<&String> = (0..4)
                .map(|i| if m >> i & 1 == 1 { &bits[i] } else { &inv[i] })
                .collect();
            let n = format!("{tag}_m{m}");
            b.gate(&n, GateKind::And, &lits);
            n
        })
        .collect();
    (0..4)
        .map(|bit| {
            let terms: Vec<&String> = (0..16)
                .filter(|&m| table[m] >> bit & 1 == 1)
                .map(|m| &minterms[m])
                .collect();
            let n = format!("{tag}_y{bit}");
            b.gate(&n, GateKind::Or, &terms);
            n
        })
        .collect()
}

fn sbox_network(w: usize, seed: u64) -> NetlistBuilder {
    const ROUNDS: usize = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetlistBuilder::new(format!("sbox{w}"));
    let mut state: Vec<String> = (0..w).map(|i| format!("x{i}")).collect();
    for s in &state {
        b.input(s);
    }
    for round in 0..ROUNDS {
        let mut next = state.clone();
        for (j, chunk) in state.chunks(4).enumerate() {
            if chunk.len() < 4 {
                continue;
            }
            let mut table: [u8; 16] = std::array::from_fn(|i| i as u8);
            table.shuffle(&mut rng);
            let ys = sbox(&mut b, &format!("s{round}_{j}"), chunk, &table);
            next[4 * j..4 * j + 4].clone_from_slice(&ys);
        }
        if round + 1 < ROUNDS {
            next.shuffle(&mut rng);
        }
        state = next;
    }
    for (i, s) in state.iter().enumerate() {
        let name = format!("y{i}");
        b.output(&name);
        b.gate(&name, GateKind::Buf, &[s]);
    }
    b
}

/// Seeded random DAG for tests and fuzzing: `inputs` primary inputs `i*`,
/// `gates` gates `g*` drawing fanins from earlier nets (biased towards recent
/// ones), and the last `outputs` gates as primary outputs.
pub fn random_circuit(inputs: usize, gates: usize, outputs: usize, seed: u64) -> Netlist {
    assert!(inputs >= 1 && outputs >= 1 && outputs <= gates);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetlistBuilder::new(format!("rand{seed}"));
    let mut nets: Vec<String> = (0..inputs).map(|i| format!("i{i}")).collect();
    for n in &nets {
        b.input(n);
    }
    use GateKind::*;
    let kinds = [And, And, Or, Or, Nand, Nor, Xor, Xnor, Not, Buf];
    for g in 0..gates {
        let kind = *kinds.choose(&mut rng).unwrap();
        let arity = match kind {
            Not | Buf => 1,
            _ => {
                if rng.gen_bool(0.8) {
                    2
                } else {
                    3
                }
            }
        };
        let fanins: Vec<String> = (0..arity)
            .map(|_| {
                let window = nets.len().min(inputs + 16);
                let idx = if rng.gen_bool(0.7) {
                    nets.len() - 1 - rng.gen_range(0..window)
                } else {
                    rng.gen_range(0..nets.len())
                };
                nets[idx].clone()
            })
            .collect();
        let name = format!("g{g}");
        b.gate(&name, kind, &fanins);
        nets.push(name);
    }
    for g in gates - outputs..gates {
        b.output(&format!("g{g}"));
    }
    b.build().expect("random circuit is valid by construction")
}
