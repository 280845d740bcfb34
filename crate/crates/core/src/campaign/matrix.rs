//! Aggregation of per-instance detection reports into the result matrix.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CampaignConfig, CampaignError};
use crate::detect::{DetectionReport, Termination};
use crate::trojan::TrojanKind;

/// One detection run, as stored under `reports/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: String,
    pub group: String,
    pub kind: TrojanKind,
    pub strategy: String,
    pub report: DetectionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub strategy: String,
    pub column: String,
    pub instances: u64,
    pub detected: u64,
    pub percent: f64,
    /// Mean queries over the detected instances.
    pub mean_queries: Option<f64>,
    pub mean_wall_ms: f64,
    /// Instance count per terminal cause.
    pub terminations: BTreeMap<Termination, u64>,
}

impl MatrixCell {
    fn count(&self, t: &[Termination]) -> u64 {
        t.iter()
            .map(|k| self.terminations.get(k).copied().unwrap_or(0))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    pub benchmark: String,
    pub strategies: Vec<String>,
    pub columns: Vec<String>,
    /// Row-major: strategy, then column.
    pub cells: Vec<MatrixCell>,
}

pub const CSV_HEADER: &str =
    "benchmark,strategy,trojans,instances,detected,percent,mean_queries,early_exit,unsat,budget,exhausted";

impl ResultMatrix {
    pub fn cell(&self, strategy: &str, column: &str) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.column == column)
    }

    /// CSV without wall-time columns, so reruns compare byte for byte.
    /// `early_exit` counts detections, `budget` counts query, iteration and
    /// time stops, `exhausted` counts test sets applied in full.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for c in &self.cells {
            let mq = c
                .mean_queries
                .map(|q| format!("{q:.2}"))
                .unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{:.2},{},{},{},{},{}",
                self.benchmark,
                c.strategy,
                c.column,
                c.instances,
                c.detected,
                c.percent,
                mq,
                c.count(&[Termination::Detected]),
                c.count(&[Termination::Unsat]),
                c.count(&[
                    Termination::QueryBudget,
                    Termination::IterationBudget,
                    Termination::TimeBudget
                ]),
                c.count(&[Termination::TestsExhausted]),
            )
            .unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

/// Builds the matrix for `config` from its per-instance results. Every
/// configured (strategy, instance) pair must be present exactly once.
pub fn aggregate(
    config: &CampaignConfig,
    results: &[InstanceResult],
) -> Result<ResultMatrix, CampaignError> {
    let fail = |m: String| CampaignError::stage("report", None, m);
    let mut seen = HashSet::new();
    for r in results {
        if !seen.insert((r.strategy.as_str(), r.instance.as_str())) {
            return Err(fail(format!(
                "duplicate result for {} under {}",
                r.instance, r.strategy
            )));
        }
    }
    let mut cells = Vec::new();
    for s in &config.strategies {
        let strategy = s.label();
        for g in &config.instances {
            let column = g.label();
            let mut cell = MatrixCell {
                strategy: strategy.clone(),
                column: column.clone(),
                instances: g.count as u64,
                detected: 0,
                percent: 0.0,
                mean_queries: None,
                mean_wall_ms: 0.0,
                terminations: BTreeMap::new(),
            };
            let mut queries = 0u64;
            let mut wall = 0.0;
            for i in 0..g.count {
                let id = g.instance_id(i);
                let r = results
                    .iter()
                    .find(|r| r.strategy == strategy && r.instance == id)
                    .ok_or_else(|| fail(format!("missing result for {id} under {strategy}")))?;
                if r.group != column || r.kind != g.kind {
                    return Err(fail(format!("result for {id} names another group")));
                }
                *cell.terminations.entry(r.report.termination).or_default() += 1;
                wall += r.report.wall_time_ms;
                if r.report.detected {
                    cell.detected += 1;
                    queries += r.report.queries_used;
                }
            }
            cell.percent = 100.0 * cell.detected as f64 / cell.instances as f64;
            if cell.detected > 0 {
                cell.mean_queries = Some(queries as f64 / cell.detected as f64);
            }
            cell.mean_wall_ms = wall / g.count as f64;
            cells.push(cell);
        }
    }
    let expected: usize =
        config.strategies.len() * config.instances.iter().map(|g| g.count).sum::<usize>();
    if results.len() != expected {
        return Err(fail(format!(
            "{} results for {expected} configured runs",
            results.len()
        )));
    }
    Ok(ResultMatrix {
        benchmark: config.name.clone(),
        strategies: config.strategies.iter().map(|s| s.label()).collect(),
        columns: config.instances.iter().map(|g| g.label()).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn config() -> CampaignConfig {
        let mut c = CampaignConfig::from_json(
            r#"{"schema": 1, "name": "m", "benchmark": {"kind": "multiplier", "width": 4},
                "instances": [{"kind": "troll", "trigger_bits": 4, "count": 3},
                              {"kind": "rare_node", "count": 2}],
                "strategies": [{"strategy": "random", "count": 10}, {"strategy": "sat"}]}"#,
        )
        .unwrap();
        c.resolve();
        c
    }

    fn result(
        c: &CampaignConfig,
        g: usize,
        i: usize,
        s: usize,
        t: Termination,
        q: u64,
    ) -> InstanceResult {
        let group = &c.instances[g];
        InstanceResult {
            instance: group.instance_id(i),
            group: group.label(),
            kind: group.kind,
            strategy: c.strategies[s].label(),
            report: DetectionReport {
                strategy: c.strategies[s].spec.kind_str().into(),
                detected: t == Termination::Detected,
                termination: t,
                witness: None,
                queries_used: q,
                wall_time_ms: Duration::from_millis(q).as_secs_f64() * 1e3,
                sat: None,
            },
        }
    }

    fn all(c: &CampaignConfig) -> Vec<InstanceResult> {
        let mut v = Vec::new();
        for s in 0..2 {
            for (g, group) in c.instances.iter().enumerate() {
                for i in 0..group.count {
                    let t = if (i + s) % 2 == 0 {
                        Termination::Detected
                    } else if s == 1 {
                        Termination::Unsat
                    } else {
                        Termination::TestsExhausted
                    };
                    v.push(result(c, g, i, s, t, (i as u64 + 1) * 10));
                }
            }
        }
        v
    }

    #[test]
    fn cells_follow_hand_counts() {
        let c = config();
        let mut rs = all(&c);
        rs.reverse();
        let m = aggregate(&c, &rs).unwrap();
        assert_eq!(m.strategies, ["random", "sat"]);
        assert_eq!(m.columns, ["troll4", "rare_node_q4"]);
        // random/troll4: instances 0 and 2 detected with 10 and 30 queries
        let cell = m.cell("random", "troll4").unwrap();
        assert_eq!((cell.detected, cell.instances), (2, 3));
        assert!((cell.percent - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(cell.mean_queries, Some(20.0));
        // sat/troll4: only instance 1 detected
        let cell = m.cell("sat", "troll4").unwrap();
        assert_eq!(cell.detected, 1);
        assert_eq!(cell.terminations[&Termination::Unsat], 2);
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(
            csv.contains("m,sat,troll4,3,1,33.33,20.00,1,2,0,0\n"),
            "{csv}"
        );
        assert!(!csv.contains("wall"));
    }

    #[test]
    fn wall_time_does_not_reach_csv() {
        let c = config();
        let a = all(&c);
        let mut b = a.clone();
        for r in &mut b {
            r.report.wall_time_ms *= 3.0;
        }
        let (ma, mb) = (aggregate(&c, &a).unwrap(), aggregate(&c, &b).unwrap());
        assert_eq!(ma.to_csv(), mb.to_csv());
        assert_ne!(ma.to_json(), mb.to_json());
    }

    #[test]
    fn missing_or_duplicate_results_fail() {
        let c = config();
        let mut rs = all(&c);
        rs.pop();
        assert!(aggregate(&c, &rs).is_err());
        let mut rs = all(&c);
        rs.push(rs[0].clone());
        assert!(aggregate(&c, &rs).is_err());
    }

    #[test]
    fn zero_strategies_give_an_empty_matrix() {
        let mut c = config();
        c.strategies.clear();
        let m = aggregate(&c, &[]).unwrap();
        assert!(m.cells.is_empty());
        assert_eq!(m.to_csv(), format!("{CSV_HEADER}\n"));
    }
}
