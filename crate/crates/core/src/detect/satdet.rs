//! Oracle-guided detection with the two-copy auxiliary miter.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{check_width, DetectError, DetectionReport, SatTrace, SuspectOracle, Termination};
use crate::netlist::Netlist;
use crate::sat::{
    add_observation, build_aux, build_detection_miter, Budget, CdclSolver, Lit, SatEngine,
    SatError, Verdict,
};
use crate::seed::rng;
use crate::sim::{evaluate, Pattern};

pub const DEFAULT_SAT_ITERATIONS: u64 = 10_000;
pub const DEFAULT_SAT_SECONDS: u64 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatDetectParams {
    pub max_iterations: u64,
    pub time_budget: Duration,
    /// Seeds the solver's decision polarities, which spreads the
    /// distinguishing inputs over the input space.
    pub seed: u64,
}

impl Default for SatDetectParams {
    fn default() -> Self {
        SatDetectParams {
            max_iterations: DEFAULT_SAT_ITERATIONS,
            time_budget: Duration::from_secs(DEFAULT_SAT_SECONDS),
            seed: 0,
        }
    }
}

/// Repeatedly solves the detection miter for a distinguishing input, queries
/// the suspect on it and stops at the first disagreement with the golden
/// netlist. Otherwise the observation is added as a constraint on both aux
/// copies and the search continues.
///
/// The miter needs two consistent trigger keys that disagree, so it turns
/// UNSAT while one candidate may still be untested. At that point a single
/// aux copy is asked for any trigger key with a nonzero payload consistent
/// with every observation; that key is queried as the next input. The run
/// ends undetected only when no candidate remains or a budget runs out.
pub fn sat_detect(
    golden: &Netlist,
    oracle: &mut SuspectOracle,
    params: SatDetectParams,
) -> Result<DetectionReport, DetectError> {
    check_width(golden, oracle)?;
    let started = Instant::now();
    let deadline = started + params.time_budget;
    let aux = build_aux(golden)?;
    let mut miter = build_detection_miter(&aux);
    let mut solver = CdclSolver::new().with_random_polarity(rng(params.seed));
    solver.reserve_vars(miter.cnf.num_vars());
    // selectors: `differ` guards the output disequality, `payload` requires K_P != 0
    let differ = Lit::pos(miter.cnf.new_var());
    let payload = Lit::pos(miter.cnf.new_var());
    for (i, c) in miter.cnf.clauses().iter().enumerate() {
        if i == miter.disequality {
            let mut g = c.clone();
            g.push(!differ);
            solver.add_clause(&g);
        } else {
            solver.add_clause(c);
        }
    }
    let mut any_kp = miter.kp.clone();
    any_kp.push(!payload);
    solver.add_clause(&any_kp);

    let mut dis = Vec::new();
    let mut used = 0u64;
    let budget = Budget {
        max_conflicts: None,
        deadline: Some(deadline),
    };
    let (termination, witness) = loop {
        if dis.len() as u64 >= params.max_iterations {
            break (Termination::IterationBudget, None);
        }
        let di = match solver.solve(&[differ], budget) {
            Ok(Verdict::Sat(m)) => miter.x_pattern(&m),
            Ok(Verdict::Unsat) => match solver.solve(&[!differ, payload], budget) {
                Ok(Verdict::Sat(m)) => Pattern::from_bits(miter.bits(&miter.kt_a, &m)),
                Ok(Verdict::Unsat) => break (Termination::Unsat, None),
                Err(SatError::Budget(_)) => break (Termination::TimeBudget, None),
                Err(e) => return Err(e.into()),
            },
            Err(SatError::Budget(_)) => break (Termination::TimeBudget, None),
            Err(e) => return Err(e.into()),
        };
        let Some(observed) = oracle.query(&di) else {
            break (Termination::QueryBudget, None);
        };
        used += 1;
        dis.push(di.clone());
        if observed != evaluate(golden, &di)?.outputs {
            break (Termination::Detected, Some(di));
        }
        let first = add_observation(&mut miter, &aux, &di, &observed)?;
        for c in &miter.cnf.clauses()[first..] {
            solver.add_clause(c);
        }
    };
    let mut report =
        DetectionReport::new(golden, oracle, "sat", witness, termination, used, started)?;
    report.sat = Some(SatTrace {
        iterations: dis.len() as u64,
        distinguishing_inputs: dis,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{gen_benchmark, random_circuit, BenchmarkKind};
    use crate::sim::random_patterns;
    use crate::trojan::{default_payload, insert_troll, restrict_trigger, TriggerCube};
    use std::collections::HashSet;

    fn params(iters: u64, seed: u64) -> SatDetectParams {
        SatDetectParams {
            max_iterations: iters,
            time_budget: Duration::from_secs(60),
            seed,
        }
    }

    #[test]
    fn clean_suspect_ends_unsat() {
        let n = random_circuit(4, 20, 3, 1);
        let mut o = SuspectOracle::from_netlist(n.clone());
        let r = sat_detect(&n, &mut o, params(1000, 0)).unwrap();
        assert!(!r.detected);
        assert_eq!(r.termination, Termination::Unsat);
        let t = r.sat.unwrap();
        assert!(t.iterations <= 16);
        let distinct: HashSet<_> = t.distinguishing_inputs.iter().collect();
        assert_eq!(distinct.len(), t.distinguishing_inputs.len());
    }

    #[test]
    fn full_trigger_is_found() {
        let n = random_circuit(4, 20, 3, 2);
        for x in 0..16u64 {
            let t = Pattern::from_index(x, 4);
            let inst = insert_troll(
                &n,
                &TriggerCube::full(&n.input_names(), &t),
                &default_payload(&n),
            )
            .unwrap();
            let mut o = SuspectOracle::from_netlist(inst.infected);
            let r = sat_detect(&n, &mut o, params(1000, x)).unwrap();
            assert!(r.detected, "{x}: {:?}", r.termination);
            assert_eq!(r.witness, Some(t));
            assert!(r.sat.unwrap().iterations <= 16);
        }
    }

    #[test]
    fn zero_iterations_is_a_budget_stop() {
        let n = random_circuit(4, 20, 3, 1);
        let mut o = SuspectOracle::from_netlist(n.clone());
        let r = sat_detect(&n, &mut o, params(0, 0)).unwrap();
        assert!(!r.detected);
        assert_eq!(r.termination, Termination::IterationBudget);
        assert_eq!(r.queries_used, 0);
    }

    #[test]
    fn partial_cube_on_multiplier() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 5, 0).unwrap();
        for seed in 0..3 {
            let full = random_patterns(1, 10, seed).pop().unwrap();
            let cube = restrict_trigger(&full, 6, &n.input_names(), seed).unwrap();
            let inst = insert_troll(&n, &cube, &default_payload(&n)).unwrap();
            let mut o = SuspectOracle::from_netlist(inst.infected);
            let r = sat_detect(&n, &mut o, params(2000, seed)).unwrap();
            assert!(r.detected, "{:?}", r.termination);
            assert!(cube.matches(&n.input_names(), r.witness.as_ref().unwrap()));
            assert_eq!(r.queries_used, r.sat.unwrap().iterations);
        }
    }
}
