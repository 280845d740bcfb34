//! Reference Anti-SAT lock and its conversion into a Trojan.
//!
//! The lock adds a mutation unit `MU = AND_i XOR(x_i, k1_i)` and a restore
//! unit `RU = NAND_i XOR(x_i, k2_i)` over the cube inputs, and flips the
//! payload outputs with `AND(MU, RU)`. Pinning `k1` to the inverted trigger,
//! the RU output to 1 and sweeping yields a circuit that must be functionally
//! identical to [`super::insert_troll`]; tests rely on this as a second route.

use std::collections::BTreeMap;

use super::insert::{attach_payload, detach_payload};
use super::{PayloadSpec, TriggerCube, TrojanError};
use crate::netlist::{balanced_tree, constant_sweep, GateKind, Netlist, RESERVED_PREFIX};

pub struct AntiSatLock {
    pub locked: Netlist,
    /// MU key input per cube literal.
    pub mu_keys: Vec<String>,
    /// RU key input per cube literal.
    pub ru_keys: Vec<String>,
    pub ru_output: String,
}

/// Locks the inputs named by `cube` (values ignored) with an Anti-SAT block
/// whose corruption signal flips `payload`.
pub fn lock(
    n: &Netlist,
    cube: &TriggerCube,
    payload: &PayloadSpec,
) -> Result<AntiSatLock, TrojanError> {
    if let Some(name) = n.reserved_prefix_in_use() {
        return Err(crate::netlist::NetlistError::ReservedPrefix(name.to_string()).into());
    }
    let (mut b, _) = detach_payload(n, payload);
    let p = RESERVED_PREFIX;
    let mut mu_keys = Vec::new();
    let mut ru_keys = Vec::new();
    let mut mu_leaves = Vec::new();
    let mut ru_leaves = Vec::new();
    for (i, l) in cube.literals.iter().enumerate() {
        let k1 = format!("{p}k1_{i}");
        let k2 = format!("{p}k2_{i}");
        b.input(&k1).input(&k2);
        b.gate(&format!("{p}mx_{i}"), GateKind::Xor, &[&l.net, &k1]);
        b.gate(&format!("{p}rx_{i}"), GateKind::Xor, &[&l.net, &k2]);
        mu_leaves.push(format!("{p}mx_{i}"));
        ru_leaves.push(format!("{p}rx_{i}"));
        mu_keys.push(k1);
        ru_keys.push(k2);
    }
    let mut c = 0;
    let mu = balanced_tree(&mut b, GateKind::And, mu_leaves, || {
        c += 1;
        format!("{p}mu_{c}")
    });
    let ru_and = balanced_tree(&mut b, GateKind::And, ru_leaves, || {
        c += 1;
        format!("{p}ra_{c}")
    });
    let ru_output = format!("{p}ru");
    b.gate(&ru_output, GateKind::Not, &[ru_and]);
    let corrupt = format!("{p}corrupt");
    b.gate(&corrupt, GateKind::And, &[mu, ru_output.clone()]);
    attach_payload(&mut b, payload, &corrupt);
    Ok(AntiSatLock {
        locked: b.build()?,
        mu_keys,
        ru_keys,
        ru_output,
    })
}

/// Removes the restore unit (output pinned to 1, keys pinned to 0), hard-codes
/// the MU key to the inverted trigger and sweeps constants.
pub fn to_trojan(lock: &AntiSatLock, cube: &TriggerCube) -> Result<Netlist, TrojanError> {
    let mut pins = BTreeMap::new();
    for (k, l) in lock.mu_keys.iter().zip(&cube.literals) {
        pins.insert(k.clone(), !l.value);
    }
    for k in &lock.ru_keys {
        pins.insert(k.clone(), false);
    }
    pins.insert(lock.ru_output.clone(), true);
    Ok(constant_sweep(&lock.locked, &pins)?)
}
