use rand::seq::index;

use super::{Literal, TriggerCube, TrojanError};
use crate::netlist::Netlist;
use crate::rarity::SignalProfile;
use crate::seed;
use crate::sim::{pack_patterns, Pattern, Simulator, LANES};

/// Scans `samples` for the pattern whose least probable sensitized rare value
/// is as probable as possible.
///
/// For each sample the tracker starts at 0.5 and drops to `p_i` for every net
/// sitting at its rare value `r_i`. The sample with the largest tracker wins;
/// only a strict improvement replaces the incumbent, so ties go to the
/// earliest sample. Returns the winning pattern and its tracker value.
pub fn select_trigger(
    n: &Netlist,
    profile: &SignalProfile,
    samples: &[Pattern],
) -> Result<(Pattern, f64), TrojanError> {
    if samples.is_empty() {
        return Err(TrojanError::EmptySamples);
    }
    // only entries below 0.5 can lower the tracker
    let mut rare: Vec<(usize, bool, f64)> = Vec::new();
    for e in &profile.entries {
        let id = n
            .net_id(&e.net)
            .ok_or_else(|| TrojanError::ProfileMismatch(format!("unknown net `{}`", e.net)))?;
        if e.rare_prob < 0.5 {
            rare.push((id, e.rare_value, e.rare_prob));
        }
    }
    rare.sort_by(|a, b| a.2.total_cmp(&b.2));

    let sim = Simulator::new(n);
    let width = n.inputs().len();
    let mut values = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (bi, chunk) in samples.chunks(LANES).enumerate() {
        sim.run(&pack_patterns(chunk, width)?, &mut values);
        let mut tracker = [0.5f64; LANES];
        let mut open = crate::sim::lane_mask(chunk.len());
        for &(net, value, p) in &rare {
            if open == 0 {
                break;
            }
            let w = if value { values[net] } else { !values[net] };
            let mut hit = w & open;
            open &= !hit;
            while hit != 0 {
                let lane = hit.trailing_zeros() as usize;
                tracker[lane] = p;
                hit &= hit - 1;
            }
        }
        for (lane, &t) in tracker.iter().enumerate().take(chunk.len()) {
            if best.is_none_or(|(_, p_max)| t > p_max) {
                best = Some((bi * LANES + lane, t));
            }
        }
    }
    let (idx, p_max) = best.expect("non-empty sample set");
    Ok((samples[idx].clone(), p_max))
}

/// Keeps `k` uniformly chosen positions of `full` as a trigger cube. Literals
/// are listed in input order.
pub fn restrict_trigger(
    full: &Pattern,
    k: usize,
    input_names: &[String],
    seed: u64,
) -> Result<TriggerCube, TrojanError> {
    let width = full.len();
    if k == 0 || k > width || input_names.len() != width {
        return Err(TrojanError::KOutOfRange { k, width });
    }
    let mut rng = seed::rng(seed);
    let mut picked = index::sample(&mut rng, width, k).into_vec();
    picked.sort_unstable();
    Ok(TriggerCube {
        literals: picked
            .into_iter()
            .map(|i| Literal::new(input_names[i].clone(), full.get(i)))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_bench, random_circuit};
    use crate::rarity::{profile_exhaustive, profile_signals};
    use crate::sim::{evaluate, exhaustive_patterns, random_patterns};

    /// Literal transcription of the selection loop, one scalar simulation per sample.
    fn brute_force(n: &Netlist, profile: &SignalProfile, samples: &[Pattern]) -> (Pattern, f64) {
        let mut p_max = 0.0;
        let mut best = None;
        for x in samples {
            let e = evaluate(n, x).unwrap();
            let mut p_tmp = 0.5;
            for entry in &profile.entries {
                if e.value(n, &entry.net).unwrap() == entry.rare_value && p_tmp > entry.rare_prob {
                    p_tmp = entry.rare_prob;
                }
            }
            if p_tmp > p_max || best.is_none() {
                p_max = p_tmp;
                best = Some(x.clone());
            }
        }
        (best.unwrap(), p_max)
    }

    fn three_gate() -> Netlist {
        parse_bench(
            "ex",
            "INPUT(x1)\nINPUT(x2)\nINPUT(x3)\nOUTPUT(y)\nn1 = AND(x1, x2)\nn2 = OR(x1, x3)\ny = XOR(n1, n2)\n",
        )
        .unwrap()
    }

    #[test]
    fn three_gate_example() {
        let n = three_gate();
        let p = profile_exhaustive(&n);
        assert_eq!(
            (
                p.get("n1").unwrap().rare_value,
                p.get("n1").unwrap().rare_prob
            ),
            (true, 0.25)
        );
        assert_eq!(
            (
                p.get("n2").unwrap().rare_value,
                p.get("n2").unwrap().rare_prob
            ),
            (false, 0.25)
        );
        let samples = exhaustive_patterns(3);
        let (x, p_max) = select_trigger(&n, &p, &samples).unwrap();
        assert_eq!(x.to_string(), "001");
        assert_eq!(p_max, 0.5);
        assert_eq!(brute_force(&n, &p, &samples), (x, p_max));
    }

    #[test]
    fn balanced_circuit_picks_first_sample() {
        let n = parse_bench("x", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = XOR(a, b)\n").unwrap();
        let p = profile_exhaustive(&n);
        let samples = random_patterns(10, 2, 4);
        let (x, p_max) = select_trigger(&n, &p, &samples).unwrap();
        assert_eq!((x, p_max), (samples[0].clone(), 0.5));
    }

    #[test]
    fn singleton_sample() {
        let n = three_gate();
        let p = profile_exhaustive(&n);
        let s: Pattern = "110".parse().unwrap();
        // 110: n1 = 1 (rare, 0.25), n2 = 1
        assert_eq!(select_trigger(&n, &p, &[s.clone()]).unwrap(), (s, 0.25));
        assert!(matches!(
            select_trigger(&n, &p, &[]),
            Err(TrojanError::EmptySamples)
        ));
    }

    #[test]
    fn matches_brute_force_on_random_circuits() {
        for seed in 0..15 {
            let n = random_circuit(10, 70, 4, seed);
            let p = profile_signals(&n, 4000, seed).unwrap();
            let samples = random_patterns(700, 10, seed + 100);
            assert_eq!(
                select_trigger(&n, &p, &samples).unwrap(),
                brute_force(&n, &p, &samples)
            );
        }
    }

    #[test]
    fn restrict_trigger_cases() {
        let names: Vec<String> = (0..64).map(|i| format!("x{i}")).collect();
        let full = random_patterns(1, 64, 8).pop().unwrap();
        let all = restrict_trigger(&full, 64, &names, 1).unwrap();
        assert_eq!(all, TriggerCube::full(&names, &full));
        let a = restrict_trigger(&full, 8, &names, 5).unwrap();
        assert_eq!(a.width(), 8);
        assert_eq!(a, restrict_trigger(&full, 8, &names, 5).unwrap());
        assert!(restrict_trigger(&full, 0, &names, 5).is_err());
        assert!(restrict_trigger(&full, 65, &names, 5).is_err());
    }

    #[test]
    fn restrict_trigger_positions_are_uniform() {
        let names: Vec<String> = (0..16).map(|i| format!("x{i}")).collect();
        let full = Pattern::zeros(16);
        let mut hits = [0usize; 16];
        for s in 0..10_000u64 {
            for l in restrict_trigger(&full, 8, &names, s).unwrap().literals {
                hits[l.net[1..].parse::<usize>().unwrap()] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / 10_000.0;
            assert!((f - 0.5).abs() <= 0.02, "{f}");
        }
    }
}
