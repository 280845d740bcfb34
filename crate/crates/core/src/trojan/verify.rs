use serde::{Deserialize, Serialize};

use super::{Trigger, TrojanError, TrojanInstance};
use crate::netlist::Netlist;
use crate::sim::{exhaustive_blocks, lane_bits, Pattern, RandomBlocks, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    /// Every input pattern; at most 20 inputs.
    Exhaustive,
    /// `count` seeded random patterns.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub mode: VerifyMode,
    pub patterns_checked: u64,
    /// Patterns on which the trigger condition held.
    pub activations: u64,
    /// First pattern on which the infected netlist misbehaved.
    pub counterexample: Option<Pattern>,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
}

/// Checks an instance against its own ground truth: the infected netlist
/// must keep the original pins and differ from `original` exactly when the
/// trigger holds, exactly on the payload outputs.
pub fn verify_infection(
    original: &Netlist,
    inst: &TrojanInstance,
    mode: VerifyMode,
) -> Result<VerificationReport, TrojanError> {
    let width = original.inputs().len();
    if mode == VerifyMode::Exhaustive && width > 20 {
        return Err(TrojanError::WidthTooLarge(width));
    }
    let mut report = VerificationReport {
        passed: true,
        mode,
        patterns_checked: 0,
        activations: 0,
        counterexample: None,
        failure: None,
        warnings: Vec::new(),
    };
    let infected = &inst.infected;
    if infected.input_names() != original.input_names()
        || infected.output_names() != original.output_names()
    {
        report.passed = false;
        report.failure = Some("pin lists differ from the original".into());
        return Ok(report);
    }

    // trigger taps: (net in original, required value)
    let taps: Vec<(usize, bool)> = match &inst.trigger {
        Trigger::Cube(c) => &c.literals,
        Trigger::Nodes(n) => n,
    }
    .iter()
    .map(|l| {
        original
            .net_id(&l.net)
            .map(|id| (id, l.value))
            .ok_or_else(|| TrojanError::InvalidTrigger(format!("unknown net `{}`", l.net)))
    })
    .collect::<Result<_, _>>()?;
    let payload: Vec<bool> = original
        .output_names()
        .iter()
        .map(|o| inst.payload.flip_outputs.contains(o))
        .collect();

    let golden = Simulator::new(original);
    let suspect = Simulator::new(infected);
    let (mut gv, mut sv) = (Vec::new(), Vec::new());
    let mut check = |words: Vec<u64>, lanes: usize, report: &mut VerificationReport| -> bool {
        golden.run(&words, &mut gv);
        suspect.run(&words, &mut sv);
        let mask = crate::sim::lane_mask(lanes);
        let fired = taps.iter().fold(mask, |acc, &(net, v)| {
            acc & if v { gv[net] } else { !gv[net] }
        });
        let mut bad = 0u64;
        for (k, (&go, &so)) in original
            .outputs()
            .iter()
            .zip(infected.outputs())
            .enumerate()
        {
            let expected = if payload[k] { fired } else { 0 };
            bad |= (gv[go] ^ sv[so] ^ expected) & mask;
        }
        report.patterns_checked += lanes as u64;
        report.activations += fired.count_ones() as u64;
        if bad != 0 {
            let lane = bad.trailing_zeros() as usize;
            report.passed = false;
            report.counterexample = Some(Pattern::from_bits(lane_bits(&words, lane)));
            report.failure =
                Some("infected output deviates from trigger/payload ground truth".into());
            return false;
        }
        true
    };
    match mode {
        VerifyMode::Exhaustive => {
            for (words, lanes) in exhaustive_blocks(width) {
                if !check(words, lanes, &mut report) {
                    break;
                }
            }
        }
        VerifyMode::Sampled { count, seed } => {
            for (words, lanes) in RandomBlocks::new(count, width, seed) {
                if !check(words, lanes, &mut report) {
                    break;
                }
            }
        }
    }
    if report.passed && report.activations == 0 {
        report
            .warnings
            .push("zero activation: trigger never fired".into());
    }
    Ok(report)
}
