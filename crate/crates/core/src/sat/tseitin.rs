use std::collections::HashMap;

use super::{Cnf, Lit, SatError};
use crate::netlist::{GateKind, NetId, Netlist};

/// Encodes `n` into a fresh formula. Input variables are allocated first, in
/// input order, so input `i` is variable `i + 1`. Every net is registered
/// under the label `"n"`.
pub fn tseitin_encode(n: &Netlist) -> Cnf {
    let mut cnf = Cnf::new();
    encode_into(&mut cnf, n, "n", &HashMap::new()).expect("fresh formula has no name collisions");
    cnf
}

/// Adds one copy of `n` to `cnf`. Nets listed in `bind` reuse the given
/// literal; every other net gets a fresh variable registered under
/// `(label, net)`. Returns the literal of every net, indexed by net id.
pub fn encode_into(
    cnf: &mut Cnf,
    n: &Netlist,
    label: &str,
    bind: &HashMap<String, Lit>,
) -> Result<Vec<Lit>, SatError> {
    let mut lit: Vec<Option<Lit>> = vec![None; n.net_count()];
    let fresh = |cnf: &mut Cnf, net: NetId| -> Result<Lit, SatError> {
        let name = n.net_name(net);
        match bind.get(name) {
            Some(&l) => Ok(l),
            None => Ok(Lit::pos(cnf.named_var(label, name)?)),
        }
    };
    for &i in n.inputs() {
        lit[i] = Some(fresh(cnf, i)?);
    }
    for &gi in n.topo_order() {
        let g = &n.gates()[gi];
        let y = fresh(cnf, g.output)?;
        lit[g.output] = Some(y);
        let ins: Vec<Lit> = g
            .fanins
            .iter()
            .map(|&f| lit[f].expect("topological order"))
            .collect();
        encode_gate(cnf, g.kind, y, &ins);
    }
    Ok(lit
        .into_iter()
        .map(|l| l.expect("every net is driven"))
        .collect())
}

fn encode_gate(cnf: &mut Cnf, kind: GateKind, y: Lit, ins: &[Lit]) {
    use GateKind::*;
    match kind {
        Const0 => cnf.add_clause([!y]),
        Const1 => cnf.add_clause([y]),
        Buf => equiv(cnf, y, ins[0]),
        Not => equiv(cnf, y, !ins[0]),
        And => and(cnf, y, ins),
        Nand => and(cnf, !y, ins),
        Or => or(cnf, y, ins),
        Nor => or(cnf, !y, ins),
        Xor => xor(cnf, y, ins),
        Xnor => xor(cnf, !y, ins),
    }
}

fn equiv(cnf: &mut Cnf, a: Lit, b: Lit) {
    cnf.add_clause([!a, b]);
    cnf.add_clause([a, !b]);
}

/// y <-> AND(ins)
fn and(cnf: &mut Cnf, y: Lit, ins: &[Lit]) {
    for &a in ins {
        cnf.add_clause([!y, a]);
    }
    let mut big: Vec<Lit> = ins.iter().map(|&a| !a).collect();
    big.push(y);
    cnf.add_clause(big);
}

/// y <-> OR(ins)
fn or(cnf: &mut Cnf, y: Lit, ins: &[Lit]) {
    for &a in ins {
        cnf.add_clause([y, !a]);
    }
    let mut big = ins.to_vec();
    big.push(!y);
    cnf.add_clause(big);
}

/// y <-> XOR(ins), chained through unnamed intermediates.
fn xor(cnf: &mut Cnf, y: Lit, ins: &[Lit]) {
    let mut acc = ins[0];
    for (k, &b) in ins.iter().enumerate().skip(1) {
        let out = if k + 1 == ins.len() {
            y
        } else {
            Lit::pos(cnf.new_var())
        };
        xor2(cnf, out, acc, b);
        acc = out;
    }
    if ins.len() == 1 {
        equiv(cnf, y, acc);
    }
}

fn xor2(cnf: &mut Cnf, y: Lit, a: Lit, b: Lit) {
    cnf.add_clause([!a, !b, !y]);
    cnf.add_clause([a, b, !y]);
    cnf.add_clause([a, !b, y]);
    cnf.add_clause([!a, b, y]);
}
