//! Combinational gate-level netlists.
//!
//! A [`Netlist`] is an immutable, validated DAG of [`Gate`]s over named nets.
//! Net ids are canonical: primary inputs first (in declaration order), then
//! gate outputs in gate declaration order. Two netlists built from the same
//! statements therefore compare equal.

mod bench;
mod generate;
mod sweep;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{emit_bench, parse_bench};
pub(crate) use generate::balanced_tree;
pub use generate::{gen_benchmark, random_circuit, BenchmarkKind};
pub use sweep::constant_sweep;

/// Prefix reserved for nets created by insertion and construction passes.
pub const RESERVED_PREFIX: &str = "__t_";

pub type NetId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("net `{net}` has more than one driver")]
    DuplicateDriver { net: String },
    #[error("output `{net}` declared more than once")]
    DuplicateOutput { net: String },
    #[error("net `{net}` is referenced but never driven")]
    UndrivenNet { net: String },
    #[error("combinational cycle through net `{net}`")]
    Cycle { net: String },
    #[error("gate `{net}`: {kind} cannot take {fanins} fanin(s)")]
    Arity {
        net: String,
        kind: GateKind,
        fanins: usize,
    },
    #[error("invalid net name `{0}`")]
    InvalidName(String),
    #[error("unknown net `{0}`")]
    UnknownNet(String),
    #[error("{kind} width {width} outside supported range {min}..={max}")]
    WidthOutOfRange {
        kind: BenchmarkKind,
        width: usize,
        min: usize,
        max: usize,
    },
    #[error("net name prefix `{RESERVED_PREFIX}` already used by `{0}`")]
    ReservedPrefix(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Const0,
    Const1,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Const0 | GateKind::Const1 => n == 0,
            _ => n >= 2,
        }
    }

    /// Evaluates the gate lane-wise over 64 packed patterns.
    ///
    /// Inverting n-ary kinds (NAND, NOR, XNOR) invert the fold of their base
    /// operator, matching the usual bench-file convention.
    #[inline]
    pub fn eval_words(self, fanins: impl IntoIterator<Item = u64>) -> u64 {
        let mut it = fanins.into_iter();
        match self {
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
            GateKind::Buf => it.next().unwrap_or(0),
            GateKind::Not => !it.next().unwrap_or(0),
            GateKind::And => it.fold(!0, |a, b| a & b),
            GateKind::Nand => !it.fold(!0, |a, b| a & b),
            GateKind::Or => it.fold(0, |a, b| a | b),
            GateKind::Nor => !it.fold(0, |a, b| a | b),
            GateKind::Xor => it.fold(0, |a, b| a ^ b),
            GateKind::Xnor => !it.fold(0, |a, b| a ^ b),
        }
    }

    pub fn eval_bits(self, fanins: &[bool]) -> bool {
        let w = self.eval_words(fanins.iter().map(|&b| if b { !0u64 } else { 0 }));
        w & 1 == 1
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "CONST0" => GateKind::Const0,
            "CONST1" => GateKind::Const1,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub output: NetId,
    pub kind: GateKind,
    pub fanins: Vec<NetId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Driver {
    Input(usize),
    Gate(usize),
}

/// Validated combinational netlist. Construct with [`NetlistBuilder`] or
/// [`parse_bench`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    name: String,
    nets: Vec<String>,
    index: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<Gate>,
    drivers: Vec<Driver>,
    order: Vec<usize>,
}

pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Netlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id]
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net]
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs.iter().map(|&i| self.nets[i].clone()).collect()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.outputs.iter().map(|&i| self.nets[i].clone()).collect()
    }

    /// Nets driven by gates, in gate declaration order.
    pub fn internal_nets(&self) -> impl Iterator<Item = NetId> + '_ {
        self.gates.iter().map(|g| g.output)
    }

    pub fn is_input(&self, net: NetId) -> bool {
        matches!(self.drivers[net], Driver::Input(_))
    }

    /// Gate indices in a deterministic topological order: among ready gates
    /// the lowest declaration index goes first.
    pub fn topo_order(&self) -> &[usize] {
        &self.order
    }

    /// True when any net name starts with the reserved construction prefix.
    pub fn reserved_prefix_in_use(&self) -> Option<&str> {
        self.nets
            .iter()
            .find(|n| n.starts_with(RESERVED_PREFIX))
            .map(String::as_str)
    }

    /// Returns a builder holding the same statements, for derived netlists.
    pub fn to_builder(&self) -> NetlistBuilder {
        let mut b = NetlistBuilder::new(self.name.clone());
        for &i in &self.inputs {
            b.input(&self.nets[i]);
        }
        for &o in &self.outputs {
            b.output(&self.nets[o]);
        }
        for g in &self.gates {
            let fanins: Vec<&str> = g.fanins.iter().map(|&f| self.nets[f].as_str()).collect();
            b.gate(&self.nets[g.output], g.kind, &fanins);
        }
        b
    }
}

/// Name-level netlist statements, resolved and validated by [`NetlistBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct NetlistBuilder {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<(String, GateKind, Vec<String>)>,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, name: &str) -> &mut Self {
        self.inputs.push(name.to_string());
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.outputs.push(name.to_string());
        self
    }

    pub fn gate<S: AsRef<str>>(&mut self, output: &str, kind: GateKind, fanins: &[S]) -> &mut Self {
        self.gates.push((
            output.to_string(),
            kind,
            fanins.iter().map(|s| s.as_ref().to_string()).collect(),
        ));
        self
    }

    pub fn input_names(&self) -> &[String] {
        &self.inputs
    }

    pub fn output_names(&self) -> &[String] {
        &self.outputs
    }

    pub(crate) fn outputs_mut(&mut self) -> &mut Vec<String> {
        &mut self.outputs
    }

    pub(crate) fn gates_mut(&mut self) -> &mut Vec<(String, GateKind, Vec<String>)> {
        &mut self.gates
    }

    pub fn build(&self) -> Result<Netlist, NetlistError> {
        let mut nets: Vec<String> = Vec::with_capacity(self.inputs.len() + self.gates.len());
        let mut index: HashMap<String, NetId> = HashMap::new();
        let mut drivers = Vec::with_capacity(nets.capacity());

        let mut declare = |name: &str, driver: Driver, nets: &mut Vec<String>| {
            if !is_valid_name(name) {
                return Err(NetlistError::InvalidName(name.to_string()));
            }
            if index.contains_key(name) {
                return Err(NetlistError::DuplicateDriver {
                    net: name.to_string(),
                });
            }
            index.insert(name.to_string(), nets.len());
            nets.push(name.to_string());
            drivers.push(driver);
            Ok(())
        };
        for (i, name) in self.inputs.iter().enumerate() {
            declare(name, Driver::Input(i), &mut nets)?;
        }
        for (g, (name, _, _)) in self.gates.iter().enumerate() {
            declare(name, Driver::Gate(g), &mut nets)?;
        }

        let resolve = |name: &str| {
            index.get(name).copied().ok_or_else(|| {
                if is_valid_name(name) {
                    NetlistError::UndrivenNet {
                        net: name.to_string(),
                    }
                } else {
                    NetlistError::InvalidName(name.to_string())
                }
            })
        };

        let mut gates = Vec::with_capacity(self.gates.len());
        for (name, kind, fanins) in &self.gates {
            if !kind.arity_ok(fanins.len()) {
                return Err(NetlistError::Arity {
                    net: name.clone(),
                    kind: *kind,
                    fanins: fanins.len(),
                });
            }
            let fanins = fanins
                .iter()
                .map(|f| resolve(f))
                .collect::<Result<Vec<_>, _>>()?;
            gates.push(Gate {
                output: index[name.as_str()],
                kind: *kind,
                fanins,
            });
        }

        let inputs: Vec<NetId> = (0..self.inputs.len()).collect();
        let mut outputs = Vec::with_capacity(self.outputs.len());
        let mut seen = std::collections::HashSet::new();
        for name in &self.outputs {
            let id = resolve(name)?;
            if !seen.insert(id) {
                return Err(NetlistError::DuplicateOutput { net: name.clone() });
            }
            outputs.push(id);
        }

        let order = topo_sort(&gates, &drivers).map_err(|g| NetlistError::Cycle {
            net: nets[gates[g].output].clone(),
        })?;

        Ok(Netlist {
            name: self.name.clone(),
            nets,
            index,
            inputs,
            outputs,
            gates,
            drivers,
            order,
        })
    }
}

/// Kahn's algorithm with a min-heap on gate index. On failure returns a gate
/// that lies on (or behind) a cycle.
fn topo_sort(gates: &[Gate], drivers: &[Driver]) -> Result<Vec<usize>, usize> {
    let mut pending = vec![0usize; gates.len()];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); gates.len()];
    for (gi, g) in gates.iter().enumerate() {
        for &f in &g.fanins {
            if let Driver::Gate(src) = drivers[f] {
                pending[gi] += 1;
                fanout[src].push(gi);
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = pending
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == 0)
        .map(|(g, _)| Reverse(g))
        .collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(Reverse(g)) = ready.pop() {
        order.push(g);
        for &succ in &fanout[g] {
            pending[succ] -= 1;
            if pending[succ] == 0 {
                ready.push(Reverse(succ));
            }
        }
    }
    if order.len() == gates.len() {
        Ok(order)
    } else {
        Err(pending.iter().position(|&p| p > 0).unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and2() -> Netlist {
        let mut b = NetlistBuilder::new("and2");
        b.input("a").input("b").output("y");
        b.gate("y", GateKind::And, &["a", "b"]);
        b.build().unwrap()
    }

    #[test]
    fn builds_smallest_circuit() {
        let n = and2();
        assert_eq!(n.inputs().len(), 2);
        assert_eq!(n.outputs().len(), 1);
        assert_eq!(n.gates().len(), 1);
        assert_eq!(n.net_id("y"), Some(2));
    }

    #[test]
    fn chain_order_is_forced() {
        let mut b = NetlistBuilder::new("chain");
        b.input("a").output("n2");
        b.gate("n2", GateKind::Not, &["n1"]);
        b.gate("n1", GateKind::Not, &["a"]);
        let n = b.build().unwrap();
        assert_eq!(n.topo_order(), &[1, 0]);
    }

    #[test]
    fn independent_gates_keep_declaration_order() {
        let mut b = NetlistBuilder::new("par");
        b.input("a").input("b").output("g0").output("g1");
        b.gate("g0", GateKind::Not, &["a"]);
        b.gate("g1", GateKind::Not, &["b"]);
        assert_eq!(b.build().unwrap().topo_order(), &[0, 1]);
    }

    #[test]
    fn random_dag_order_respects_predecessors() {
        let n = random_circuit(12, 200, 6, 99);
        let order = n.topo_order();
        assert_eq!(order.len(), n.gates().len());
        let mut pos = vec![usize::MAX; n.gates().len()];
        for (i, &g) in order.iter().enumerate() {
            pos[g] = i;
        }
        for (gi, g) in n.gates().iter().enumerate() {
            for &f in &g.fanins {
                if let Driver::Gate(h) = n.driver(f) {
                    assert!(pos[h] < pos[gi]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_netlists() {
        let mut b = NetlistBuilder::new("x");
        b.input("a").input("a");
        assert!(matches!(
            b.build(),
            Err(NetlistError::DuplicateDriver { .. })
        ));

        let mut b = NetlistBuilder::new("x");
        b.input("a").output("y");
        b.gate("y", GateKind::And, &["a", "z"]);
        assert!(matches!(b.build(), Err(NetlistError::UndrivenNet { .. })));

        let mut b = NetlistBuilder::new("x");
        b.input("a").output("y");
        b.gate("y", GateKind::Not, &["a", "a"]);
        assert!(matches!(b.build(), Err(NetlistError::Arity { .. })));

        let mut b = NetlistBuilder::new("x");
        b.input("a").output("y").output("y");
        b.gate("y", GateKind::Not, &["a"]);
        assert!(matches!(
            b.build(),
            Err(NetlistError::DuplicateOutput { .. })
        ));

        let mut b = NetlistBuilder::new("x");
        b.input("a").output("q");
        assert!(matches!(b.build(), Err(NetlistError::UndrivenNet { .. })));
    }

    #[test]
    fn gate_semantics() {
        use GateKind::*;
        let cases: &[(GateKind, [bool; 4])] = &[
            (And, [false, false, false, true]),
            (Nand, [true, true, true, false]),
            (Or, [false, true, true, true]),
            (Nor, [true, false, false, false]),
            (Xor, [false, true, true, false]),
            (Xnor, [true, false, false, true]),
        ];
        for (kind, table) in cases {
            for (i, &want) in table.iter().enumerate() {
                let a = i & 2 != 0;
                let b = i & 1 != 0;
                assert_eq!(kind.eval_bits(&[a, b]), want, "{kind} {a} {b}");
            }
        }
        assert!(Nand.eval_bits(&[true, true, false]));
        assert!(!Nand.eval_bits(&[true, true, true]));
        assert!(Xnor.eval_bits(&[true, true, true]) == false);
        assert!(Const1.eval_bits(&[]));
        assert!(!Const0.eval_bits(&[]));
    }
}
