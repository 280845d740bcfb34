//! Auxiliary circuit emulating an unknown trigger/payload pair, and the
//! two-copy miter whose models are distinguishing inputs.

use std::collections::{BTreeMap, HashMap};

use super::{encode_into, Cnf, Lit, Model, SatError};
use crate::netlist::{balanced_tree, constant_sweep, GateKind, Netlist, RESERVED_PREFIX};
use crate::sim::Pattern;

/// The golden netlist extended with a single-entry lookup: trigger key
/// inputs `K_T` (one per input), payload key inputs `K_P` (one per output),
/// match signal `m = (X == K_T)` and outputs `Y' = Y XOR (K_P AND m)`.
#[derive(Debug, Clone)]
pub struct AuxCircuit {
    pub base: Netlist,
    /// Inputs `X ++ K_T ++ K_P`, outputs `Y'`.
    pub netlist: Netlist,
    pub x: Vec<String>,
    pub trigger_keys: Vec<String>,
    pub payload_keys: Vec<String>,
    pub match_net: String,
    pub outputs: Vec<String>,
}

pub fn build_aux(n: &Netlist) -> Result<AuxCircuit, SatError> {
    if let Some(name) = n.reserved_prefix_in_use() {
        return Err(SatError::NameCollision(name.to_string()));
    }
    let p = RESERVED_PREFIX;
    let x = n.input_names();
    let y = n.output_names();
    let mut b = n.to_builder();
    let trigger_keys: Vec<String> = (0..x.len()).map(|i| format!("{p}kt_{i}")).collect();
    let payload_keys: Vec<String> = (0..y.len()).map(|j| format!("{p}kp_{j}")).collect();
    for k in trigger_keys.iter().chain(&payload_keys) {
        b.input(k);
    }
    let mut eq = Vec::with_capacity(x.len());
    for (i, (xi, ki)) in x.iter().zip(&trigger_keys).enumerate() {
        let e = format!("{p}eq_{i}");
        b.gate(&e, GateKind::Xnor, &[xi, ki]);
        eq.push(e);
    }
    let mut c = 0;
    let root = balanced_tree(&mut b, GateKind::And, eq, || {
        c += 1;
        format!("{p}mt_{c}")
    });
    let match_net = format!("{p}m");
    b.gate(&match_net, GateKind::Buf, &[root]);
    let mut outputs = Vec::with_capacity(y.len());
    for (j, (yj, kp)) in y.iter().zip(&payload_keys).enumerate() {
        let mask = format!("{p}mask_{j}");
        let o = format!("{p}y_{j}");
        b.gate(&mask, GateKind::And, &[kp, &match_net]);
        b.gate(&o, GateKind::Xor, &[yj, &mask]);
        outputs.push(o);
    }
    *b.outputs_mut() = outputs.clone();
    Ok(AuxCircuit {
        base: n.clone(),
        netlist: b.build()?,
        x,
        trigger_keys,
        payload_keys,
        match_net,
        outputs,
    })
}

/// Two aux copies sharing `X` and `K_P` with independent trigger keys, plus
/// the asserted disequality of their outputs. Observation constraints are
/// appended with [`add_observation`].
#[derive(Debug, Clone)]
pub struct DetectionMiter {
    pub cnf: Cnf,
    pub x: Vec<Lit>,
    pub kt_a: Vec<Lit>,
    pub kt_b: Vec<Lit>,
    pub kp: Vec<Lit>,
    pub match_a: Lit,
    pub match_b: Lit,
    pub y_a: Vec<Lit>,
    pub y_b: Vec<Lit>,
    /// Index of the clause asserting that the two copies' outputs differ.
    pub disequality: usize,
    observations: usize,
}

impl DetectionMiter {
    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn x_pattern(&self, m: &Model) -> Pattern {
        Pattern::from_bits(self.x.iter().map(|&l| m.lit(l)).collect())
    }

    pub fn bits(&self, lits: &[Lit], m: &Model) -> Vec<bool> {
        lits.iter().map(|&l| m.lit(l)).collect()
    }
}

pub fn build_detection_miter(aux: &AuxCircuit) -> DetectionMiter {
    let mut cnf = Cnf::new();
    let mut shared = HashMap::new();
    let x: Vec<Lit> = aux
        .x
        .iter()
        .map(|name| Lit::pos(cnf.named_var("shared", name).expect("fresh names")))
        .collect();
    let kp: Vec<Lit> = aux
        .payload_keys
        .iter()
        .map(|name| Lit::pos(cnf.named_var("shared", name).expect("fresh names")))
        .collect();
    for (name, &l) in aux.x.iter().zip(&x).chain(aux.payload_keys.iter().zip(&kp)) {
        shared.insert(name.clone(), l);
    }
    let a = encode_into(&mut cnf, &aux.netlist, "a", &shared).expect("labels are fresh");
    let b = encode_into(&mut cnf, &aux.netlist, "b", &shared).expect("labels are fresh");
    let lits = |enc: &[Lit], names: &[String]| -> Vec<Lit> {
        names
            .iter()
            .map(|s| enc[aux.netlist.net_id(s).unwrap()])
            .collect()
    };
    let (y_a, y_b) = (lits(&a, &aux.outputs), lits(&b, &aux.outputs));
    let mut any = Vec::with_capacity(y_a.len());
    for (j, (&p, &q)) in y_a.iter().zip(&y_b).enumerate() {
        let d = Lit::pos(
            cnf.named_var("miter", &format!("d{j}"))
                .expect("fresh names"),
        );
        cnf.add_clause([!p, !q, !d]);
        cnf.add_clause([p, q, !d]);
        cnf.add_clause([p, !q, d]);
        cnf.add_clause([!p, q, d]);
        any.push(d);
    }
    let disequality = cnf.clauses().len();
    cnf.add_clause(any);
    let m = |enc: &[Lit]| enc[aux.netlist.net_id(&aux.match_net).unwrap()];
    DetectionMiter {
        x,
        kt_a: lits(&a, &aux.trigger_keys),
        kt_b: lits(&b, &aux.trigger_keys),
        kp,
        match_a: m(&a),
        match_b: m(&b),
        y_a,
        y_b,
        cnf,
        disequality,
        observations: 0,
    }
}

/// Requires both aux copies to produce `observed` at input `di`. The aux
/// netlist is swept with `X` pinned to `di`, so each copy costs only the
/// comparator and masking logic. Returns the index of the first clause
/// added, for forwarding to an incremental engine.
pub fn add_observation(
    miter: &mut DetectionMiter,
    aux: &AuxCircuit,
    di: &Pattern,
    observed: &[bool],
) -> Result<usize, SatError> {
    assert_eq!(di.len(), aux.x.len(), "input width");
    assert_eq!(observed.len(), aux.outputs.len(), "output width");
    let first = miter.cnf.clauses().len();
    let pins: BTreeMap<String, bool> = aux
        .x
        .iter()
        .cloned()
        .zip(di.bits().iter().copied())
        .collect();
    let swept = constant_sweep(&aux.netlist, &pins)?;
    let j = miter.observations;
    for (label, kt) in [
        (format!("o{j}a"), &miter.kt_a),
        (format!("o{j}b"), &miter.kt_b),
    ] {
        let mut bind = HashMap::new();
        for (name, &l) in aux.trigger_keys.iter().zip(kt) {
            bind.insert(name.clone(), l);
        }
        for (name, &l) in aux.payload_keys.iter().zip(&miter.kp) {
            bind.insert(name.clone(), l);
        }
        let enc = encode_into(&mut miter.cnf, &swept, &label, &bind)?;
        for (&o, &v) in swept.outputs().iter().zip(observed) {
            miter.cnf.add_clause([enc[o].with_polarity(v)]);
        }
    }
    miter.observations += 1;
    Ok(first)
}
