//! Trojan trigger selection, insertion and ground-truth verification.
//!
//! Three Trojan families share one payload mechanism (XOR-flip a fixed set of
//! outputs when the trigger fires):
//!
//! * `troll`: the trigger is an input cube chosen by [`select_trigger`] and cut
//!   to `k` literals by [`restrict_trigger`]; realized as a comparator AND tree
//!   (the mutation unit of a SAT-resilient lock with its restore unit removed).
//! * `rare_node` / `random_node`: the trigger is a conjunction of internal net
//!   values tapped from the original cone.

pub mod antisat;
mod insert;
mod select;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{Netlist, NetlistError};
use crate::sim::SimError;

pub use insert::{default_payload, insert_node_trojan, insert_troll, NodeTrojanParams};
pub use select::{restrict_trigger, select_trigger};
pub use verify::{verify_infection, VerificationReport, VerifyMode};

/// Default number of conjuncts for node-triggered Trojans.
pub const DEFAULT_NODE_CONJUNCTS: usize = 4;
/// Default size of the sample set scanned by [`select_trigger`].
pub const DEFAULT_TRIGGER_SAMPLES: usize = 10_000;

#[derive(Debug, Error)]
pub enum TrojanError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid trigger: {0}")]
    InvalidTrigger(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("trigger selection needs at least one sample")]
    EmptySamples,
    #[error("trigger length {k} outside 1..={width}")]
    KOutOfRange { k: usize, width: usize },
    #[error("need {needed} rare nodes, profile has {available}")]
    InsufficientRareNodes { needed: usize, available: usize },
    #[error("need {needed} internal nets, netlist has {available}")]
    TooManyNodes { needed: usize, available: usize },
    #[error("profile does not describe this netlist: {0}")]
    ProfileMismatch(String),
    #[error("exhaustive verification limited to 20 inputs, netlist has {0}")]
    WidthTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub net: String,
    pub value: bool,
}

impl Literal {
    pub fn new(net: impl Into<String>, value: bool) -> Self {
        Literal {
            net: net.into(),
            value,
        }
    }
}

/// Partial assignment over primary inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerCube {
    pub literals: Vec<Literal>,
}

impl TriggerCube {
    pub fn width(&self) -> usize {
        self.literals.len()
    }

    /// Whether a full input pattern (in `input_names` order) satisfies the cube.
    pub fn matches(&self, input_names: &[String], pattern: &crate::sim::Pattern) -> bool {
        self.literals.iter().all(|l| {
            input_names
                .iter()
                .position(|n| *n == l.net)
                .is_some_and(|i| pattern.get(i) == l.value)
        })
    }

    /// Cube pinning every input to `pattern`.
    pub fn full(input_names: &[String], pattern: &crate::sim::Pattern) -> Self {
        TriggerCube {
            literals: input_names
                .iter()
                .zip(pattern.bits())
                .map(|(n, &v)| Literal::new(n.clone(), v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadSpec {
    pub flip_outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrojanKind {
    Troll,
    RareNode,
    RandomNode,
}

impl TrojanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrojanKind::Troll => "troll",
            TrojanKind::RareNode => "rare_node",
            TrojanKind::RandomNode => "random_node",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Input cube (TroLL).
    Cube(TriggerCube),
    /// Conjunction of internal net values (node-triggered kinds).
    Nodes(Vec<Literal>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seeds: BTreeMap<String, u64>,
    pub p_max: Option<f64>,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrojanInstance {
    pub infected: Netlist,
    pub kind: TrojanKind,
    pub trigger: Trigger,
    pub payload: PayloadSpec,
    pub provenance: Provenance,
}

/// Ground-truth record stored next to an infected netlist. Detection code
/// never receives this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub id: String,
    pub kind: TrojanKind,
    pub trigger: Trigger,
    pub payload_outputs: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub p_max: Option<f64>,
    pub params: BTreeMap<String, String>,
    pub profile: Option<String>,
    /// Filled in once the instance has been verified.
    pub activations: Option<u64>,
}

impl TrojanInstance {
    pub fn sidecar(&self, id: &str, profile_ref: Option<&str>) -> Sidecar {
        Sidecar {
            id: id.to_string(),
            kind: self.kind,
            trigger: self.trigger.clone(),
            payload_outputs: self.payload.flip_outputs.clone(),
            seeds: self.provenance.seeds.clone(),
            p_max: self.provenance.p_max,
            params: self.provenance.params.clone(),
            profile: profile_ref.map(str::to_string),
            activations: None,
        }
    }
}
