use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index;
use rand::Rng;

use super::{
    Literal, PayloadSpec, Provenance, Trigger, TriggerCube, TrojanError, TrojanInstance, TrojanKind,
};
use crate::netlist::{balanced_tree, Driver, GateKind, Netlist, NetlistBuilder, RESERVED_PREFIX};
use crate::rarity::{rare_set, SignalProfile};
use crate::seed;

/// The `min(8, outputs)` lexicographically smallest output names.
pub fn default_payload(n: &Netlist) -> PayloadSpec {
    let mut outs = n.output_names();
    outs.sort();
    outs.truncate(8);
    PayloadSpec { flip_outputs: outs }
}

fn check_payload(n: &Netlist, payload: &PayloadSpec) -> Result<(), TrojanError> {
    if payload.flip_outputs.is_empty() {
        return Err(TrojanError::InvalidPayload("no outputs to flip".into()));
    }
    let outputs: HashSet<String> = n.output_names().into_iter().collect();
    let mut seen = HashSet::new();
    for o in &payload.flip_outputs {
        if !outputs.contains(o) {
            return Err(TrojanError::InvalidPayload(format!(
                "`{o}` is not an output"
            )));
        }
        if !seen.insert(o) {
            return Err(TrojanError::InvalidPayload(format!("`{o}` listed twice")));
        }
        if n.is_input(n.net_id(o).unwrap()) {
            return Err(TrojanError::InvalidPayload(format!(
                "`{o}` is a primary input and cannot be rewired"
            )));
        }
    }
    Ok(())
}

fn check_prefix(n: &Netlist) -> Result<(), TrojanError> {
    match n.reserved_prefix_in_use() {
        Some(name) => Err(crate::netlist::NetlistError::ReservedPrefix(name.to_string()).into()),
        None => Ok(()),
    }
}

/// Copy of `n` whose payload outputs are renamed to `__t_pre_<i>` everywhere,
/// leaving the output pin names free for the flipping XORs.
pub(crate) fn detach_payload(
    n: &Netlist,
    payload: &PayloadSpec,
) -> (NetlistBuilder, HashMap<String, String>) {
    let rename: HashMap<String, String> = payload
        .flip_outputs
        .iter()
        .enumerate()
        .map(|(i, o)| (o.clone(), format!("{RESERVED_PREFIX}pre_{i}")))
        .collect();
    let mut b = n.to_builder();
    for (out, _, fanins) in b.gates_mut().iter_mut() {
        if let Some(r) = rename.get(out.as_str()) {
            *out = r.clone();
        }
        for f in fanins.iter_mut() {
            if let Some(r) = rename.get(f.as_str()) {
                *f = r.clone();
            }
        }
    }
    (b, rename)
}

/// Adds `o = XOR(__t_pre_<i>, trigger)` for every payload output.
pub(crate) fn attach_payload(b: &mut NetlistBuilder, payload: &PayloadSpec, trigger: &str) {
    for (i, o) in payload.flip_outputs.iter().enumerate() {
        b.gate(
            o,
            GateKind::Xor,
            &[format!("{RESERVED_PREFIX}pre_{i}"), trigger.to_string()],
        );
    }
}

/// Builds the trigger AND tree over literal taps; returns the trigger net.
fn trigger_tree(b: &mut NetlistBuilder, taps: &[(String, bool)]) -> String {
    let leaves: Vec<String> = taps
        .iter()
        .enumerate()
        .map(|(i, (net, value))| {
            if *value {
                net.clone()
            } else {
                let inv = format!("{RESERVED_PREFIX}inv_{i}");
                b.gate(&inv, GateKind::Not, &[net]);
                inv
            }
        })
        .collect();
    let mut counter = 0;
    balanced_tree(b, GateKind::And, leaves, || {
        counter += 1;
        format!("{RESERVED_PREFIX}and_{counter}")
    })
}

/// Inserts a cube-triggered Trojan: `t = AND(literals)` as a balanced tree of
/// two-input ANDs, and every payload output becomes `XOR(original, t)`.
pub fn insert_troll(
    n: &Netlist,
    trigger: &TriggerCube,
    payload: &PayloadSpec,
) -> Result<TrojanInstance, TrojanError> {
    check_prefix(n)?;
    check_payload(n, payload)?;
    if trigger.literals.is_empty() || trigger.literals.len() > n.inputs().len() {
        return Err(TrojanError::InvalidTrigger(format!(
            "cube width {} outside 1..={}",
            trigger.literals.len(),
            n.inputs().len()
        )));
    }
    let mut seen = HashSet::new();
    for l in &trigger.literals {
        let is_input = n.net_id(&l.net).is_some_and(|id| n.is_input(id));
        if !is_input {
            return Err(TrojanError::InvalidTrigger(format!(
                "`{}` is not a primary input",
                l.net
            )));
        }
        if !seen.insert(&l.net) {
            return Err(TrojanError::InvalidTrigger(format!(
                "`{}` appears twice",
                l.net
            )));
        }
    }
    let (mut b, _) = detach_payload(n, payload);
    let taps: Vec<(String, bool)> = trigger
        .literals
        .iter()
        .map(|l| (l.net.clone(), l.value))
        .collect();
    let t = trigger_tree(&mut b, &taps);
    attach_payload(&mut b, payload, &t);
    let infected = b.build()?;
    let mut params = BTreeMap::new();
    params.insert("trigger_len".to_string(), trigger.width().to_string());
    Ok(TrojanInstance {
        infected,
        kind: TrojanKind::Troll,
        trigger: Trigger::Cube(trigger.clone()),
        payload: payload.clone(),
        provenance: Provenance {
            params,
            ..Default::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeTrojanParams {
    pub kind: TrojanKind,
    /// Number of conjuncts.
    pub q: usize,
    /// Rare threshold, used by `rare_node` only.
    pub threshold: f64,
    pub seed: u64,
}

/// Inserts a Trojan triggered by `q` internal net values.
///
/// `rare_node` samples `q` distinct members of the rare set at their rare
/// values; `random_node` samples `q` distinct gate-driven nets with random
/// polarity. The trigger taps the original nets and does not alter their cone.
/// Satisfiability of the conjunction is not checked here.
pub fn insert_node_trojan(
    n: &Netlist,
    profile: &SignalProfile,
    params: NodeTrojanParams,
    payload: &PayloadSpec,
) -> Result<TrojanInstance, TrojanError> {
    check_prefix(n)?;
    check_payload(n, payload)?;
    let q = params.q;
    let mut rng = seed::rng(params.seed);
    let conjuncts: Vec<Literal> = match params.kind {
        TrojanKind::RareNode => {
            let rs = rare_set(profile, params.threshold);
            if q == 0 || rs.len() < q {
                return Err(TrojanError::InsufficientRareNodes {
                    needed: q,
                    available: rs.len(),
                });
            }
            let mut picked = index::sample(&mut rng, rs.len(), q).into_vec();
            picked.sort_unstable();
            picked
                .into_iter()
                .map(|i| Literal::new(rs.members[i].net.clone(), rs.members[i].value))
                .collect()
        }
        TrojanKind::RandomNode => {
            let internal: Vec<&str> = n.internal_nets().map(|id| n.net_name(id)).collect();
            if q == 0 || internal.len() < q {
                return Err(TrojanError::TooManyNodes {
                    needed: q,
                    available: internal.len(),
                });
            }
            let mut picked = index::sample(&mut rng, internal.len(), q).into_vec();
            picked.sort_unstable();
            picked
                .into_iter()
                .map(|i| Literal::new(internal[i], rng.gen_bool(0.5)))
                .collect()
        }
        TrojanKind::Troll => {
            return Err(TrojanError::InvalidTrigger(
                "cube Trojans are inserted with insert_troll".into(),
            ))
        }
    };
    for c in &conjuncts {
        match n.net_id(&c.net).map(|id| n.driver(id)) {
            Some(Driver::Gate(_)) => {}
            _ => {
                return Err(TrojanError::ProfileMismatch(format!(
                    "`{}` is not a gate output of the netlist",
                    c.net
                )))
            }
        }
    }
    let (mut b, rename) = detach_payload(n, payload);
    let taps: Vec<(String, bool)> = conjuncts
        .iter()
        .map(|c| (rename.get(&c.net).unwrap_or(&c.net).clone(), c.value))
        .collect();
    let t = trigger_tree(&mut b, &taps);
    attach_payload(&mut b, payload, &t);
    let infected = b.build()?;
    let mut seeds = BTreeMap::new();
    seeds.insert("select".to_string(), params.seed);
    let mut p = BTreeMap::new();
    p.insert("q".to_string(), q.to_string());
    if params.kind == TrojanKind::RareNode {
        p.insert("threshold".to_string(), params.threshold.to_string());
    }
    Ok(TrojanInstance {
        infected,
        kind: params.kind,
        trigger: Trigger::Nodes(conjuncts),
        payload: payload.clone(),
        provenance: Provenance {
            seeds,
            p_max: None,
            params: p,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{gen_benchmark, parse_bench, BenchmarkKind};
    use crate::rarity::profile_exhaustive;
    use crate::sim::{evaluate, exhaustive_patterns, Pattern};

    fn diffs(a: &Netlist, b: &Netlist) -> Vec<(Pattern, Vec<bool>)> {
        exhaustive_patterns(a.inputs().len())
            .into_iter()
            .filter_map(|p| {
                let x = evaluate(a, &p).unwrap().outputs;
                let y = evaluate(b, &p).unwrap().outputs;
                let d: Vec<bool> = x.iter().zip(&y).map(|(u, v)| u != v).collect();
                d.iter().any(|&z| z).then_some((p, d))
            })
            .collect()
    }

    #[test]
    fn full_cube_on_multiplier_flips_one_bit_once() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 4, 0).unwrap();
        let t: Pattern = "10110010".parse().unwrap();
        let cube = TriggerCube::full(&n.input_names(), &t);
        let payload = PayloadSpec {
            flip_outputs: vec!["p0".into()],
        };
        let inst = insert_troll(&n, &cube, &payload).unwrap();
        assert_eq!(inst.infected.input_names(), n.input_names());
        assert_eq!(inst.infected.output_names(), n.output_names());
        let d = diffs(&n, &inst.infected);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0, t);
        let mut want = vec![false; 8];
        want[0] = true;
        assert_eq!(d[0].1, want);
    }

    #[test]
    fn single_literal_cube_covers_half() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 4, 0).unwrap();
        let cube = TriggerCube {
            literals: vec![Literal::new("a0", true)],
        };
        let payload = PayloadSpec {
            flip_outputs: n.output_names(),
        };
        let inst = insert_troll(&n, &cube, &payload).unwrap();
        let d = diffs(&n, &inst.infected);
        assert_eq!(d.len(), 128);
        assert!(d
            .iter()
            .all(|(p, bits)| p.get(0) && bits.iter().all(|&b| b)));
    }

    #[test]
    fn insertion_errors() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 4, 0).unwrap();
        let cube = TriggerCube {
            literals: vec![Literal::new("a0", true)],
        };
        let bad = PayloadSpec {
            flip_outputs: vec!["nope".into()],
        };
        assert!(matches!(
            insert_troll(&n, &cube, &bad),
            Err(TrojanError::InvalidPayload(_))
        ));
        let empty = PayloadSpec {
            flip_outputs: vec![],
        };
        assert!(matches!(
            insert_troll(&n, &cube, &empty),
            Err(TrojanError::InvalidPayload(_))
        ));
        let internal = TriggerCube {
            literals: vec![Literal::new("pp_0_0", true)],
        };
        assert!(matches!(
            insert_troll(&n, &internal, &default_payload(&n)),
            Err(TrojanError::InvalidTrigger(_))
        ));
        let clash = parse_bench("c", "INPUT(__t_x)\nOUTPUT(y)\ny = NOT(__t_x)\n").unwrap();
        let cube = TriggerCube {
            literals: vec![Literal::new("__t_x", true)],
        };
        let payload = PayloadSpec {
            flip_outputs: vec!["y".into()],
        };
        assert!(matches!(
            insert_troll(&clash, &cube, &payload),
            Err(TrojanError::Netlist(_))
        ));
    }

    fn three_gate() -> Netlist {
        parse_bench(
            "ex",
            "INPUT(x1)\nINPUT(x2)\nINPUT(x3)\nOUTPUT(y)\nn1 = AND(x1, x2)\nn2 = OR(x1, x3)\ny = XOR(n1, n2)\n",
        )
        .unwrap()
    }

    #[test]
    fn single_rare_node_trojan() {
        let n = three_gate();
        let p = profile_exhaustive(&n);
        // rare set at 0.3 holds n1 (r=1) and n2 (r=0); pick via seeds until n1 is chosen
        let payload = default_payload(&n);
        let mut found = false;
        for seed in 0..20 {
            let inst = insert_node_trojan(
                &n,
                &p,
                NodeTrojanParams {
                    kind: TrojanKind::RareNode,
                    q: 1,
                    threshold: 0.3,
                    seed,
                },
                &payload,
            )
            .unwrap();
            let Trigger::Nodes(c) = &inst.trigger else {
                panic!()
            };
            if c[0].net == "n1" {
                let d = diffs(&n, &inst.infected);
                let pats: Vec<String> = d.iter().map(|(p, _)| p.to_string()).collect();
                assert_eq!(pats, vec!["110", "111"]);
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn unsatisfiable_conjunction_never_fires() {
        let n = parse_bench(
            "u",
            "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nOUTPUT(z)\ny = AND(a, b, c)\nz = NOR(a, b, c)\n",
        )
        .unwrap();
        let p = profile_exhaustive(&n);
        let inst = insert_node_trojan(
            &n,
            &p,
            NodeTrojanParams {
                kind: TrojanKind::RareNode,
                q: 2,
                threshold: 0.2,
                seed: 0,
            },
            &PayloadSpec {
                flip_outputs: vec!["y".into()],
            },
        )
        .unwrap();
        assert!(diffs(&n, &inst.infected).is_empty());
    }

    #[test]
    fn node_trojans_are_deterministic_and_checked() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 6, 0).unwrap();
        let p = crate::rarity::profile_signals(&n, 20_000, 1).unwrap();
        let params = NodeTrojanParams {
            kind: TrojanKind::RandomNode,
            q: 4,
            threshold: 0.1,
            seed: 9,
        };
        let a = insert_node_trojan(&n, &p, params, &default_payload(&n)).unwrap();
        let b = insert_node_trojan(&n, &p, params, &default_payload(&n)).unwrap();
        assert_eq!(a, b);
        let too_many = NodeTrojanParams {
            kind: TrojanKind::RareNode,
            q: 10_000,
            ..params
        };
        assert!(matches!(
            insert_node_trojan(&n, &p, too_many, &default_payload(&n)),
            Err(TrojanError::InsufficientRareNodes { .. })
        ));
        let too_many = NodeTrojanParams {
            q: 10_000,
            ..params
        };
        assert!(matches!(
            insert_node_trojan(&n, &p, too_many, &default_payload(&n)),
            Err(TrojanError::TooManyNodes { .. })
        ));
    }

    #[test]
    fn default_payload_is_lexicographic() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 8, 0).unwrap();
        assert_eq!(
            default_payload(&n).flip_outputs,
            vec!["p0", "p1", "p10", "p11", "p12", "p13", "p14", "p15"]
        );
    }
}
