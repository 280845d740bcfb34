//! Stage runner and on-disk layout.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::{aggregate, InstanceResult, ResultMatrix};
use super::{
    BenchmarkSpec, CampaignConfig, CampaignError, InstanceGroup, StrategySpec, CONFIG_SCHEMA,
};
use crate::detect::{
    activating_input, apply_tests, clique_testgen, evolved_union, random_detect, sat_detect,
    stat_testgen, CliqueParams, Polarity, SatDetectParams, StatParams, SuspectOracle, TestSet,
};
use crate::netlist::{emit_bench, gen_benchmark, parse_bench, Netlist};
use crate::rarity::{profile_signals, rare_set, RareSet, SignalProfile};
use crate::seed::derive_seed;
use crate::sim::random_patterns;
use crate::trojan::{
    default_payload, insert_node_trojan, insert_troll, restrict_trigger, select_trigger,
    verify_infection, NodeTrojanParams, Sidecar, Trigger, TrojanInstance, TrojanKind, VerifyMode,
};

/// Node-triggered instances whose conjunction cannot fire are redrawn at
/// most this many times.
pub const MAX_NODE_DRAWS: usize = 100;

/// Widths up to this are verified exhaustively.
const EXHAUSTIVE_VERIFY_WIDTH: usize = 16;

/// Directory layout of one campaign. Detection reads `golden.bench`,
/// `suspects/` and `tests/`; ground truth lives outside `suspects/`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub root: PathBuf,
    pub suspects: PathBuf,
    pub ground_truth: PathBuf,
    pub tests: PathBuf,
    pub reports: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
            suspects: root.join("suspects"),
            ground_truth: root.join("ground_truth"),
            tests: root.join("tests"),
            reports: root.join("reports"),
        }
    }

    pub fn golden(&self) -> PathBuf {
        self.root.join("golden.bench")
    }

    pub fn profile(&self) -> PathBuf {
        self.root.join("profile.csv")
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn matrix_csv(&self) -> PathBuf {
        self.root.join("matrix.csv")
    }

    pub fn matrix_json(&self) -> PathBuf {
        self.root.join("matrix.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn suspect(&self, id: &str) -> PathBuf {
        self.suspects.join(format!("{id}.bench"))
    }

    pub fn sidecar(&self, id: &str) -> PathBuf {
        self.ground_truth.join(format!("{id}.json"))
    }

    pub fn testset(&self, strategy: &str) -> PathBuf {
        self.tests.join(format!("{strategy}.tests"))
    }

    pub fn report(&self, strategy: &str, id: &str) -> PathBuf {
        self.reports.join(strategy).join(format!("{id}.json"))
    }
}

/// Reproduction record written next to the matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_schema: u32,
    /// SHA-256 of `config.json`, the resolved config.
    pub config_sha256: String,
    pub golden_sha256: String,
    pub strategies: Vec<String>,
    pub columns: Vec<String>,
    pub instances: usize,
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn normalize(p: &Path) -> PathBuf {
    let abs = if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().unwrap_or_default().join(p)
    };
    let mut out = PathBuf::new();
    for c in abs.components() {
        match c {
            std::path::Component::ParentDir => {
                out.pop();
            }
            std::path::Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

pub struct Campaign {
    pub config: CampaignConfig,
    pub layout: Layout,
    workers: Option<usize>,
    budget_seconds: Option<u64>,
}

impl Campaign {
    /// `out` overrides the config's output directory.
    pub fn new(config: CampaignConfig, out: Option<&Path>) -> Result<Self, CampaignError> {
        let root = out
            .map(Path::to_path_buf)
            .or_else(|| config.out.clone())
            .ok_or_else(|| CampaignError::Config("no output directory given".into()))?;
        let workers = config.workers;
        Ok(Campaign {
            config,
            layout: Layout::new(&root),
            workers,
            budget_seconds: None,
        })
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Result<Self, CampaignError> {
        if workers == Some(0) {
            return Err(CampaignError::Config("workers must be positive".into()));
        }
        if workers.is_some() {
            self.workers = workers;
        }
        Ok(self)
    }

    /// Caps the wall time of each SAT detection run and of clique sampling.
    pub fn with_budget_seconds(mut self, seconds: Option<u64>) -> Self {
        self.budget_seconds = seconds;
        self
    }

    /// Sends sidecars to `dir`, which must not lie inside the suspects
    /// directory that detection reads.
    pub fn with_ground_truth_dir(mut self, dir: &Path) -> Result<Self, CampaignError> {
        let (gt, sus) = (normalize(dir), normalize(&self.layout.suspects));
        if gt.starts_with(&sus) {
            return Err(CampaignError::Opacity {
                ground_truth: dir.to_path_buf(),
                suspects: self.layout.suspects.clone(),
            });
        }
        self.layout.ground_truth = dir.to_path_buf();
        Ok(self)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CampaignError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w);
        }
        b.build()
            .map_err(|e| CampaignError::stage("setup", None, e))
    }

    /// Every stage in order; equivalent to calling them one by one.
    pub fn run(&self) -> Result<ResultMatrix, CampaignError> {
        self.generate()?;
        self.profile()?;
        self.inject()?;
        self.gentests()?;
        self.detect()?;
        self.report()
    }

    /// Builds or loads the benchmark and archives the resolved config.
    pub fn generate(&self) -> Result<Netlist, CampaignError> {
        let st = "generate";
        let n = match &self.config.benchmark {
            BenchmarkSpec::Generated { kind, width, seed } => {
                gen_benchmark(*kind, *width, seed.unwrap_or(0))
                    .map_err(|e| CampaignError::stage(st, None, e))?
            }
            BenchmarkSpec::File { path } => {
                let text = read(st, None, path)?;
                parse_bench(&self.config.name, &text)
                    .map_err(|e| CampaignError::stage(st, None, e))?
            }
        };
        write(st, None, &self.layout.golden(), &emit_bench(&n))?;
        let mut archived = self.config.clone();
        archived.out = None;
        write(st, None, &self.layout.config(), &archived.to_json())?;
        Ok(n)
    }

    fn golden(&self, stage: &'static str) -> Result<Netlist, CampaignError> {
        let text = read(stage, None, &self.layout.golden())?;
        parse_bench(&self.config.name, &text).map_err(|e| CampaignError::stage(stage, None, e))
    }

    fn load_profile(&self, stage: &'static str) -> Result<SignalProfile, CampaignError> {
        let text = read(stage, None, &self.layout.profile())?;
        SignalProfile::from_csv(&text).map_err(|e| CampaignError::stage(stage, None, e))
    }

    fn rare(&self, profile: &SignalProfile) -> RareSet {
        rare_set(profile, self.config.profile.threshold)
    }

    pub fn profile(&self) -> Result<SignalProfile, CampaignError> {
        let st = "profile";
        let n = self.golden(st)?;
        let p = &self.config.profile;
        let prof = profile_signals(&n, p.samples as u64, p.seed.unwrap_or(0))
            .map_err(|e| CampaignError::stage(st, None, e))?;
        write(st, None, &self.layout.profile(), &prof.to_csv())?;
        Ok(prof)
    }

    /// Inserts and verifies every configured instance, writing suspects
    /// and their sidecars.
    pub fn inject(&self) -> Result<Vec<Sidecar>, CampaignError> {
        let st = "inject";
        let golden = self.golden(st)?;
        let profile = self.load_profile(st)?;
        let jobs: Vec<(&InstanceGroup, usize)> = self
            .config
            .instances
            .iter()
            .flat_map(|g| (0..g.count).map(move |i| (g, i)))
            .collect();
        let results: Vec<Result<Sidecar, CampaignError>> = self.pool()?.install(|| {
            jobs.par_iter()
                .map(|&(g, i)| self.inject_one(&golden, &profile, g, i))
                .collect()
        });
        results.into_iter().collect()
    }

    fn inject_one(
        &self,
        golden: &Netlist,
        profile: &SignalProfile,
        g: &InstanceGroup,
        i: usize,
    ) -> Result<Sidecar, CampaignError> {
        let st = "inject";
        let id = g.instance_id(i);
        let err = |e: &dyn std::fmt::Display| CampaignError::stage(st, Some(&id), e);
        let seed = g.instance_seed(i);
        let payload = default_payload(golden);
        let width = golden.inputs().len();
        let inst = match g.kind {
            TrojanKind::Troll => {
                let k = g.trigger_bits.unwrap_or(0);
                let samples_seed = derive_seed(seed, "trigger-samples");
                let restrict_seed = derive_seed(seed, "restrict");
                let samples = random_patterns(self.config.trigger_samples, width, samples_seed);
                let (full, p_max) =
                    select_trigger(golden, profile, &samples).map_err(|e| err(&e))?;
                let cube = restrict_trigger(&full, k, &golden.input_names(), restrict_seed)
                    .map_err(|e| err(&e))?;
                let mut inst = insert_troll(golden, &cube, &payload).map_err(|e| err(&e))?;
                let p = &mut inst.provenance;
                p.p_max = Some(p_max);
                p.seeds.insert("trigger_samples".into(), samples_seed);
                p.seeds.insert("restrict".into(), restrict_seed);
                p.params.insert("trigger_bits".into(), k.to_string());
                inst
            }
            kind => self.draw_node_trojan(golden, profile, g, kind, seed, &id)?,
        };
        let mode = if width <= EXHAUSTIVE_VERIFY_WIDTH {
            VerifyMode::Exhaustive
        } else {
            VerifyMode::Sampled {
                count: self.config.verify_samples,
                seed: derive_seed(seed, "verify"),
            }
        };
        let v = verify_infection(golden, &inst, mode).map_err(|e| err(&e))?;
        if !v.passed {
            return Err(err(&format!(
                "verification failed: {}",
                v.failure.unwrap_or_default()
            )));
        }
        let mut sidecar = inst.sidecar(&id, Some("profile.csv"));
        sidecar.activations = Some(v.activations);
        write(
            st,
            Some(&id),
            &self.layout.suspect(&id),
            &emit_bench(&inst.infected),
        )?;
        let json = serde_json::to_string_pretty(&sidecar).map_err(|e| err(&e))?;
        write(st, Some(&id), &self.layout.sidecar(&id), &json)?;
        Ok(sidecar)
    }

    /// Draws node triggers until the conjunction is satisfiable on the
    /// golden netlist.
    fn draw_node_trojan(
        &self,
        golden: &Netlist,
        profile: &SignalProfile,
        g: &InstanceGroup,
        kind: TrojanKind,
        seed: u64,
        id: &str,
    ) -> Result<TrojanInstance, CampaignError> {
        let err = |e: &dyn std::fmt::Display| CampaignError::stage("inject", Some(id), e);
        for draw in 0..MAX_NODE_DRAWS {
            let s = if draw == 0 {
                seed
            } else {
                derive_seed(seed, &format!("draw-{draw}"))
            };
            let params = NodeTrojanParams {
                kind,
                q: g.q.unwrap_or(crate::trojan::DEFAULT_NODE_CONJUNCTS),
                threshold: self.config.profile.threshold,
                seed: s,
            };
            let mut inst = insert_node_trojan(golden, profile, params, &default_payload(golden))
                .map_err(|e| err(&e))?;
            let Trigger::Nodes(lits) = &inst.trigger else {
                unreachable!("node Trojans carry node triggers")
            };
            if activating_input(golden, lits)
                .map_err(|e| err(&e))?
                .is_some()
            {
                inst.provenance
                    .params
                    .insert("draws".into(), (draw + 1).to_string());
                return Ok(inst);
            }
        }
        Err(err(&format!(
            "no satisfiable trigger in {MAX_NODE_DRAWS} draws"
        )))
    }

    fn deadline(&self, configured: Option<u64>) -> Option<Instant> {
        self.budget_seconds
            .or(configured)
            .map(|s| Instant::now() + Duration::from_secs(s))
    }

    /// Generates each test-set strategy's tests once for the benchmark.
    pub fn gentests(&self) -> Result<Vec<TestSet>, CampaignError> {
        let st = "gentests";
        let golden = self.golden(st)?;
        let rare = self.rare(&self.load_profile(st)?);
        let pool = self.pool()?;
        let mut out = Vec::new();
        for s in &self.config.strategies {
            let label = s.label();
            let err = |e: crate::detect::DetectError| {
                CampaignError::stage(st, None, format!("{label}: {e}"))
            };
            let seed = s.spec.seed();
            let stat = |budget: usize, n_detect: u32, polarity: Polarity, seed: u64| {
                stat_testgen(
                    &golden,
                    &rare,
                    StatParams {
                        n_detect,
                        budget,
                        polarity,
                        seed,
                    },
                )
            };
            let clique = |budget: usize, polarity: Polarity, seed: u64, t: Option<u64>| {
                let params = CliqueParams {
                    cliques: budget,
                    polarity,
                    seed,
                };
                pool.install(|| clique_testgen(&golden, &rare, params, self.deadline(t)))
            };
            let ts = match &s.spec {
                StrategySpec::Random { .. } | StrategySpec::Sat { .. } => continue,
                StrategySpec::Stat {
                    budget, n_detect, ..
                } => stat(*budget, *n_detect, Polarity::Rare, seed).map_err(err)?,
                StrategySpec::StatEvolved {
                    budget, n_detect, ..
                } => {
                    let (r, p) = split(*budget);
                    let a = stat(r, *n_detect, Polarity::Rare, derive_seed(seed, "rare"))
                        .map_err(err)?;
                    let b = stat(
                        p,
                        *n_detect,
                        Polarity::Prevalent,
                        derive_seed(seed, "prevalent"),
                    )
                    .map_err(err)?;
                    evolved_union(&a, &b).map_err(err)?
                }
                StrategySpec::Clique {
                    budget,
                    time_budget_seconds,
                    ..
                } => clique(*budget, Polarity::Rare, seed, *time_budget_seconds).map_err(err)?,
                StrategySpec::CliqueEvolved {
                    budget,
                    time_budget_seconds,
                    ..
                } => {
                    let (r, p) = split(*budget);
                    let a = clique(
                        r,
                        Polarity::Rare,
                        derive_seed(seed, "rare"),
                        *time_budget_seconds,
                    )
                    .map_err(err)?;
                    let b = clique(
                        p,
                        Polarity::Prevalent,
                        derive_seed(seed, "prevalent"),
                        *time_budget_seconds,
                    )
                    .map_err(err)?;
                    evolved_union(&a, &b).map_err(err)?
                }
            };
            write(st, None, &self.layout.testset(&label), &ts.to_file())?;
            out.push(ts);
        }
        Ok(out)
    }

    /// Runs every strategy against every suspect. Only the golden netlist,
    /// the suspect netlists and the generated tests are read.
    pub fn detect(&self) -> Result<Vec<InstanceResult>, CampaignError> {
        let st = "detect";
        let golden = self.golden(st)?;
        let mut tests = Vec::new();
        for s in &self.config.strategies {
            tests.push(if s.spec.uses_testset() {
                let text = read(st, None, &self.layout.testset(&s.label()))?;
                Some(TestSet::from_file(&text).map_err(|e| CampaignError::stage(st, None, e))?)
            } else {
                None
            });
        }
        let mut jobs = Vec::new();
        for g in &self.config.instances {
            for i in 0..g.count {
                for si in 0..self.config.strategies.len() {
                    jobs.push((g, i, si));
                }
            }
        }
        let results: Vec<Result<InstanceResult, CampaignError>> = self.pool()?.install(|| {
            jobs.par_iter()
                .map(|&(g, i, si)| self.detect_one(&golden, g, i, si, tests[si].as_ref()))
                .collect()
        });
        results.into_iter().collect()
    }

    fn detect_one(
        &self,
        golden: &Netlist,
        g: &InstanceGroup,
        i: usize,
        si: usize,
        tests: Option<&TestSet>,
    ) -> Result<InstanceResult, CampaignError> {
        let st = "detect";
        let id = g.instance_id(i);
        let s = &self.config.strategies[si];
        let label = s.label();
        let err = |e: &dyn std::fmt::Display| {
            CampaignError::stage(st, Some(&id), format!("{label}: {e}"))
        };
        let text = read(st, Some(&id), &self.layout.suspect(&id))?;
        let suspect = parse_bench(&id, &text).map_err(|e| err(&e))?;
        let mut oracle = SuspectOracle::from_netlist(suspect);
        let run_seed = derive_seed(s.spec.seed(), &id);
        let report = match (&s.spec, tests) {
            (StrategySpec::Random { count, .. }, _) => {
                random_detect(golden, &mut oracle, *count, run_seed)
            }
            (
                StrategySpec::Sat {
                    max_iterations,
                    time_budget_seconds,
                    ..
                },
                _,
            ) => {
                let params = SatDetectParams {
                    max_iterations: *max_iterations,
                    time_budget: Duration::from_secs(
                        self.budget_seconds.unwrap_or(*time_budget_seconds),
                    ),
                    seed: run_seed,
                };
                sat_detect(golden, &mut oracle, params)
            }
            (_, Some(ts)) => apply_tests(golden, &mut oracle, ts),
            (_, None) => return Err(err(&"test set missing")),
        }
        .map_err(|e| err(&e))?;
        let r = InstanceResult {
            instance: id.clone(),
            group: g.label(),
            kind: g.kind,
            strategy: label.clone(),
            report,
        };
        let json = serde_json::to_string_pretty(&r).map_err(|e| err(&e))?;
        write(st, Some(&id), &self.layout.report(&label, &id), &json)?;
        Ok(r)
    }

    /// Aggregates the stored per-instance reports and writes the matrix
    /// and the manifest.
    pub fn report(&self) -> Result<ResultMatrix, CampaignError> {
        let st = "report";
        let mut results = Vec::new();
        for s in &self.config.strategies {
            for g in &self.config.instances {
                for i in 0..g.count {
                    let id = g.instance_id(i);
                    let text = read(st, Some(&id), &self.layout.report(&s.label(), &id))?;
                    let r: InstanceResult = serde_json::from_str(&text)
                        .map_err(|e| CampaignError::stage(st, Some(&id), e))?;
                    results.push(r);
                }
            }
        }
        let m = aggregate(&self.config, &results)?;
        write(st, None, &self.layout.matrix_csv(), &m.to_csv())?;
        write(st, None, &self.layout.matrix_json(), &m.to_json())?;
        let config = read(st, None, &self.layout.config())?;
        let golden = read(st, None, &self.layout.golden())?;
        let manifest = Manifest {
            tool: "hwtlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_schema: CONFIG_SCHEMA,
            config_sha256: sha256_hex(config.as_bytes()),
            golden_sha256: sha256_hex(golden.as_bytes()),
            strategies: m.strategies.clone(),
            columns: m.columns.clone(),
            instances: self.config.instances.iter().map(|g| g.count).sum(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write(st, None, &self.layout.manifest(), &json)?;
        Ok(m)
    }
}

/// Rare half first; an odd budget gives the extra pattern to it.
fn split(budget: usize) -> (usize, usize) {
    (budget - budget / 2, budget / 2)
}

fn read(stage: &'static str, id: Option<&str>, path: &Path) -> Result<String, CampaignError> {
    fs::read_to_string(path)
        .map_err(|e| CampaignError::stage(stage, id, format!("{}: {e}", path.display())))
}

fn write(
    stage: &'static str,
    id: Option<&str>,
    path: &Path,
    text: &str,
) -> Result<(), CampaignError> {
    let fail =
        |e: std::io::Error| CampaignError::stage(stage, id, format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(fail)?;
    }
    fs::write(path, text).map_err(fail)
}
