//! Campaign configuration (JSON, versioned).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CampaignError;
use crate::detect::{DEFAULT_N_DETECT, DEFAULT_SAT_ITERATIONS, DEFAULT_SAT_SECONDS};
use crate::netlist::BenchmarkKind;
use crate::rarity::DEFAULT_RARE_THRESHOLD;
use crate::seed::derive_seed;
use crate::trojan::{TrojanKind, DEFAULT_NODE_CONJUNCTS, DEFAULT_TRIGGER_SAMPLES};

pub const CONFIG_SCHEMA: u32 = 1;

const DEFAULT_PROFILE_SAMPLES: usize = 100_000;
const DEFAULT_VERIFY_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BenchmarkSpec {
    Generated {
        kind: BenchmarkKind,
        width: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// A `.bench` file, relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "default_profile_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            samples: DEFAULT_PROFILE_SAMPLES,
            seed: None,
            threshold: DEFAULT_RARE_THRESHOLD,
        }
    }
}

fn default_profile_samples() -> usize {
    DEFAULT_PROFILE_SAMPLES
}

fn default_threshold() -> f64 {
    DEFAULT_RARE_THRESHOLD
}

/// One column of the matrix: `count` instances of one Trojan kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceGroup {
    pub kind: TrojanKind,
    /// Cube width for TroLL groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_bits: Option<usize>,
    /// Conjunct count for node-triggered groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl InstanceGroup {
    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.kind {
            TrojanKind::Troll => format!("troll{}", self.trigger_bits.unwrap_or(0)),
            k => format!(
                "{}_q{}",
                k.as_str(),
                self.q.unwrap_or(DEFAULT_NODE_CONJUNCTS)
            ),
        }
    }

    pub fn instance_id(&self, i: usize) -> String {
        format!("{}_{i:03}", self.label())
    }

    pub fn instance_seed(&self, i: usize) -> u64 {
        derive_seed(self.seed.unwrap_or(0), &format!("instance-{i}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    /// `count` fresh random patterns per instance.
    Random {
        count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Stat {
        budget: usize,
        #[serde(default = "default_n_detect")]
        n_detect: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Half the budget on rare targets, half on inverted targets.
    StatEvolved {
        budget: usize,
        #[serde(default = "default_n_detect")]
        n_detect: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Clique {
        budget: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time_budget_seconds: Option<u64>,
    },
    CliqueEvolved {
        budget: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time_budget_seconds: Option<u64>,
    },
    Sat {
        #[serde(default = "default_sat_iterations")]
        max_iterations: u64,
        #[serde(default = "default_sat_seconds")]
        time_budget_seconds: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

fn default_n_detect() -> u32 {
    DEFAULT_N_DETECT
}

fn default_sat_iterations() -> u64 {
    DEFAULT_SAT_ITERATIONS
}

fn default_sat_seconds() -> u64 {
    DEFAULT_SAT_SECONDS
}

impl StrategySpec {
    pub fn kind_str(&self) -> &'static str {
        match self {
            StrategySpec::Random { .. } => "random",
            StrategySpec::Stat { .. } => "stat",
            StrategySpec::StatEvolved { .. } => "stat_evolved",
            StrategySpec::Clique { .. } => "clique",
            StrategySpec::CliqueEvolved { .. } => "clique_evolved",
            StrategySpec::Sat { .. } => "sat",
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed_slot().unwrap_or(0)
    }

    fn seed_slot(&self) -> Option<u64> {
        match self {
            StrategySpec::Random { seed, .. }
            | StrategySpec::Stat { seed, .. }
            | StrategySpec::StatEvolved { seed, .. }
            | StrategySpec::Clique { seed, .. }
            | StrategySpec::CliqueEvolved { seed, .. }
            | StrategySpec::Sat { seed, .. } => *seed,
        }
    }

    fn seed_mut(&mut self) -> &mut Option<u64> {
        match self {
            StrategySpec::Random { seed, .. }
            | StrategySpec::Stat { seed, .. }
            | StrategySpec::StatEvolved { seed, .. }
            | StrategySpec::Clique { seed, .. }
            | StrategySpec::CliqueEvolved { seed, .. }
            | StrategySpec::Sat { seed, .. } => seed,
        }
    }

    /// Whether the strategy applies a test set generated once per benchmark.
    pub fn uses_testset(&self) -> bool {
        !matches!(self, StrategySpec::Random { .. } | StrategySpec::Sat { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    /// Row label; defaults to the strategy kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: StrategySpec,
}

impl StrategyConfig {
    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.spec.kind_str().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema: u32,
    pub name: String,
    /// Master seed; every seed left out of the config is derived from it.
    #[serde(default)]
    pub seed: u64,
    pub benchmark: BenchmarkSpec,
    #[serde(default)]
    pub profile: ProfileConfig,
    /// Random samples scored by trigger selection for each TroLL instance.
    #[serde(default = "default_trigger_samples")]
    pub trigger_samples: usize,
    /// Random patterns used to verify instances too wide for enumeration.
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
    pub instances: Vec<InstanceGroup>,
    #[serde(default)]
    pub strategies: Vec<StrategyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Output directory, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_trigger_samples() -> usize {
    DEFAULT_TRIGGER_SAMPLES
}

fn default_verify_samples() -> usize {
    DEFAULT_VERIFY_SAMPLES
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        let c: CampaignConfig =
            serde_json::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        Ok(c)
    }

    /// Reads a config, makes relative paths absolute against the file's
    /// directory, fills in omitted seeds and validates the result.
    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        Self::load_with_seed(path, None)
    }

    /// As [`CampaignConfig::load`], replacing the master seed first.
    pub fn load_with_seed(path: &Path, seed: Option<u64>) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CampaignError::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        if let Some(s) = seed {
            c.seed = s;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        if let BenchmarkSpec::File { path } = &mut c.benchmark {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(out) = &mut c.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        c.resolve();
        c.validate()?;
        Ok(c)
    }

    /// Writes every derived seed into the config so a saved copy is
    /// self-contained.
    pub fn resolve(&mut self) {
        let m = self.seed;
        if let BenchmarkSpec::Generated { seed, .. } = &mut self.benchmark {
            seed.get_or_insert(derive_seed(m, "benchmark"));
        }
        self.profile.seed.get_or_insert(derive_seed(m, "profile"));
        for (i, g) in self.instances.iter_mut().enumerate() {
            g.seed.get_or_insert(derive_seed(m, &format!("group-{i}")));
            if g.kind != TrojanKind::Troll {
                g.q.get_or_insert(DEFAULT_NODE_CONJUNCTS);
            }
        }
        for (i, s) in self.strategies.iter_mut().enumerate() {
            s.spec
                .seed_mut()
                .get_or_insert(derive_seed(m, &format!("strategy-{i}")));
        }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!(
                "unsupported schema {} (expected {CONFIG_SCHEMA})",
                self.schema
            ));
        }
        if !crate::netlist::is_valid_name(&self.name) {
            return bad(format!(
                "campaign name `{}` is not an identifier",
                self.name
            ));
        }
        match &self.benchmark {
            BenchmarkSpec::Generated { kind, width, .. } => {
                let (lo, hi) = kind.width_range();
                if *width < lo || *width > hi {
                    return bad(format!("{kind} width {width} outside {lo}..={hi}"));
                }
            }
            BenchmarkSpec::File { path } => {
                if !path.is_file() {
                    return bad(format!("benchmark file {} does not exist", path.display()));
                }
            }
        }
        if self.profile.samples == 0 {
            return bad("profile.samples must be positive".into());
        }
        if !(self.profile.threshold > 0.0 && self.profile.threshold < 0.5) {
            return bad(format!(
                "profile.threshold {} outside (0, 0.5)",
                self.profile.threshold
            ));
        }
        if self.trigger_samples == 0 || self.verify_samples == 0 {
            return bad("trigger_samples and verify_samples must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        if self.instances.is_empty() {
            return bad("no instance groups".into());
        }
        let mut labels = HashSet::new();
        for g in &self.instances {
            if g.count == 0 {
                return bad(format!("group `{}` has zero instances", g.label()));
            }
            match g.kind {
                TrojanKind::Troll => {
                    if !matches!(g.trigger_bits, Some(k) if k > 0) || g.q.is_some() {
                        return bad("troll groups need trigger_bits > 0 and no q".into());
                    }
                }
                _ => {
                    if g.trigger_bits.is_some() || g.q == Some(0) {
                        return bad("node groups take q > 0 and no trigger_bits".into());
                    }
                }
            }
            if !crate::netlist::is_valid_name(&g.label()) {
                return bad(format!("group label `{}` is not an identifier", g.label()));
            }
            if !labels.insert(g.label()) {
                return bad(format!("duplicate group label `{}`", g.label()));
            }
        }
        let mut names = HashSet::new();
        for s in &self.strategies {
            let ok = match &s.spec {
                StrategySpec::Random { count, .. } => *count > 0,
                StrategySpec::Stat {
                    budget, n_detect, ..
                }
                | StrategySpec::StatEvolved {
                    budget, n_detect, ..
                } => *budget > 0 && *n_detect > 0,
                StrategySpec::Clique { budget, .. }
                | StrategySpec::CliqueEvolved { budget, .. } => *budget > 0,
                StrategySpec::Sat { .. } => true,
            };
            if !ok {
                return bad(format!("strategy `{}` needs a positive budget", s.label()));
            }
            if !crate::netlist::is_valid_name(&s.label()) {
                return bad(format!(
                    "strategy name `{}` is not an identifier",
                    s.label()
                ));
            }
            if !names.insert(s.label()) {
                return bad(format!(
                    "duplicate strategy `{}`; give one a name",
                    s.label()
                ));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the config, the input to the manifest hash.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "name": "demo",
        "benchmark": {"kind": "multiplier", "width": 4},
        "instances": [{"kind": "troll", "trigger_bits": 4, "count": 2}],
        "strategies": [{"strategy": "stat", "budget": 100}, {"strategy": "sat", "seed": 7}]
    }"#;

    fn parse(text: &str) -> Result<CampaignConfig, CampaignError> {
        let mut c = CampaignConfig::from_json(text)?;
        c.resolve();
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn resolve_fills_every_seed() {
        let c = parse(MINIMAL).unwrap();
        assert!(matches!(
            c.benchmark,
            BenchmarkSpec::Generated { seed: Some(_), .. }
        ));
        assert!(c.profile.seed.is_some());
        assert!(c.instances[0].seed.is_some());
        assert!(c.strategies.iter().all(|s| s.spec.seed_slot().is_some()));
        assert_eq!(c.strategies[1].spec.seed(), 7);
        // a resolved config is a fixed point
        let again = parse(&c.to_json()).unwrap();
        assert_eq!(again, c);
        assert_eq!(c.instances[0].instance_id(3), "troll4_003");
    }

    #[test]
    fn master_seed_changes_derived_seeds() {
        let a = parse(MINIMAL).unwrap();
        let b = parse(&MINIMAL.replace("\"schema\": 1,", "\"schema\": 1, \"seed\": 5,")).unwrap();
        assert_ne!(a.profile.seed, b.profile.seed);
        assert_eq!(a.strategies[1], b.strategies[1]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for (from, to) in [
            ("\"schema\": 1", "\"schema\": 2"),
            ("\"count\": 2", "\"count\": 0"),
            ("\"width\": 4", "\"width\": 40"),
            ("\"trigger_bits\": 4", "\"q\": 4"),
            ("\"budget\": 100}", "\"budget\": 0}"),
            (
                "{\"strategy\": \"sat\", \"seed\": 7}",
                "{\"strategy\": \"stat\", \"budget\": 5}",
            ),
            ("\"name\": \"demo\"", "\"name\": \"two words\""),
            ("\"name\": \"demo\"", "\"name\": \"demo\", \"extra\": 1"),
            ("\"budget\": 100}", "\"budget\": 100, \"extra\": 1}"),
            ("\"width\": 4}", "\"width\": 4, \"extra\": 1}"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert_ne!(text, MINIMAL, "{from}");
            let e = parse(&text).unwrap_err();
            assert!(e.is_config(), "{from}: {e}");
        }
    }

    #[test]
    fn missing_benchmark_file_is_a_config_error() {
        let text = MINIMAL.replace(
            "{\"kind\": \"multiplier\", \"width\": 4}",
            "{\"path\": \"/nonexistent/x.bench\"}",
        );
        assert!(parse(&text).unwrap_err().is_config());
    }
}
