//! Hardware Trojan workbench for combinational gate-level netlists.

pub mod campaign;
pub mod detect;
pub mod netlist;
pub mod rarity;
pub mod sat;
pub mod seed;
pub mod sim;
pub mod trojan;
