//! Constant propagation after pinning nets to fixed values.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{Driver, GateKind, Netlist, NetlistBuilder, NetlistError};

#[derive(Debug, Clone)]
enum Sig {
    Const(bool),
    Net(String),
}

enum Folded {
    Const(bool),
    Gate(GateKind, Vec<String>),
}

fn fold(kind: GateKind, fanins: Vec<Sig>) -> Folded {
    use GateKind::*;
    let unary = |s: &Sig, invert: bool| match s {
        Sig::Const(c) => Folded::Const(c ^ invert),
        Sig::Net(n) => Folded::Gate(if invert { Not } else { Buf }, vec![n.clone()]),
    };
    let live = |fanins: &[Sig], drop: bool| -> Vec<String> {
        fanins
            .iter()
            .filter_map(|s| match s {
                Sig::Net(n) => Some(n.clone()),
                Sig::Const(c) => {
                    debug_assert_eq!(*c, drop);
                    None
                }
            })
            .collect()
    };
    match kind {
        Const0 => Folded::Const(false),
        Const1 => Folded::Const(true),
        Buf => unary(&fanins[0], false),
        Not => unary(&fanins[0], true),
        And | Nand | Or | Nor => {
            let invert = matches!(kind, Nand | Nor);
            // controlling value: 0 for AND-type, 1 for OR-type
            let controlling = matches!(kind, Or | Nor);
            if fanins
                .iter()
                .any(|s| matches!(s, Sig::Const(c) if *c == controlling))
            {
                return Folded::Const(controlling ^ invert);
            }
            let rest = live(&fanins, !controlling);
            match rest.len() {
                0 => Folded::Const(!controlling ^ invert),
                1 => unary(&Sig::Net(rest[0].clone()), invert),
                _ => Folded::Gate(kind, rest),
            }
        }
        Xor | Xnor => {
            let mut parity = kind == Xnor;
            let mut rest = Vec::new();
            for s in fanins {
                match s {
                    Sig::Const(c) => parity ^= c,
                    Sig::Net(n) => rest.push(n),
                }
            }
            match rest.len() {
                0 => Folded::Const(parity),
                1 => unary(&Sig::Net(rest.pop().unwrap()), parity),
                _ => Folded::Gate(if parity { Xnor } else { Xor }, rest),
            }
        }
    }
}

fn sweep_once(n: &Netlist, pins: &HashMap<usize, bool>) -> Result<Netlist, NetlistError> {
    let mut state: Vec<Option<bool>> = vec![None; n.net_count()];
    for (&net, &v) in pins {
        state[net] = Some(v);
    }
    let sig = |state: &[Option<bool>], id: usize| match state[id] {
        Some(c) => Sig::Const(c),
        None => Sig::Net(n.net_name(id).to_string()),
    };

    let mut rewritten: Vec<Option<(GateKind, Vec<String>)>> = vec![None; n.gates().len()];
    for &gi in n.topo_order() {
        let g = &n.gates()[gi];
        if state[g.output].is_some() {
            continue;
        }
        let fanins = g.fanins.iter().map(|&f| sig(&state, f)).collect();
        match fold(g.kind, fanins) {
            Folded::Const(c) => state[g.output] = Some(c),
            Folded::Gate(k, f) => rewritten[gi] = Some((k, f)),
        }
    }

    let mut stmts: Vec<(String, GateKind, Vec<String>)> = Vec::new();
    let mut inputs = Vec::new();
    for &i in n.inputs() {
        if state[i].is_none() {
            inputs.push(n.net_name(i).to_string());
        }
    }
    // pinned inputs that are still observed as outputs need a constant driver
    for &o in n.outputs() {
        if let (Driver::Input(_), Some(c)) = (n.driver(o), state[o]) {
            let kind = if c {
                GateKind::Const1
            } else {
                GateKind::Const0
            };
            stmts.push((n.net_name(o).to_string(), kind, Vec::new()));
        }
    }
    for (gi, g) in n.gates().iter().enumerate() {
        let name = n.net_name(g.output).to_string();
        match (&rewritten[gi], state[g.output]) {
            (Some((k, f)), _) => stmts.push((name, *k, f.clone())),
            (None, Some(c)) => {
                let kind = if c {
                    GateKind::Const1
                } else {
                    GateKind::Const0
                };
                stmts.push((name, kind, Vec::new()));
            }
            (None, None) => unreachable!("gate neither folded nor rewritten"),
        }
    }

    // keep only the transitive fanin of the outputs
    let by_name: HashMap<&str, usize> = stmts
        .iter()
        .enumerate()
        .map(|(i, s)| (s.0.as_str(), i))
        .collect();
    let mut live: HashSet<usize> = HashSet::new();
    let mut stack: Vec<usize> = n
        .outputs()
        .iter()
        .filter_map(|&o| by_name.get(n.net_name(o)).copied())
        .collect();
    while let Some(s) = stack.pop() {
        if live.insert(s) {
            for f in &stmts[s].2 {
                if let Some(&d) = by_name.get(f.as_str()) {
                    stack.push(d);
                }
            }
        }
    }
    let mut b = NetlistBuilder::new(n.name());
    for i in &inputs {
        b.input(i);
    }
    for &o in n.outputs() {
        b.output(n.net_name(o));
    }
    let mut gates = Vec::new();
    for (i, s) in stmts.into_iter().enumerate() {
        if live.contains(&i) {
            gates.push(s);
        }
    }
    *b.gates_mut() = gates;
    b.build()
}

/// Pins nets to constants and simplifies to a fixpoint.
///
/// Pinned primary inputs leave the input list; pinned gate outputs become
/// constants. Constants are absorbed by local rules (AND with 0 is CONST0,
/// XOR with 1 is NOT, ...) and gates outside the fanin of any output are
/// removed. Free inputs are kept even when they become unused.
pub fn constant_sweep(n: &Netlist, pins: &BTreeMap<String, bool>) -> Result<Netlist, NetlistError> {
    let mut ids = HashMap::new();
    for (name, &v) in pins {
        let id = n
            .net_id(name)
            .ok_or_else(|| NetlistError::UnknownNet(name.clone()))?;
        ids.insert(id, v);
    }
    let mut current = sweep_once(n, &ids)?;
    loop {
        let next = sweep_once(&current, &HashMap::new())?;
        if next == current {
            return Ok(current);
        }
        current = next;
    }
}
