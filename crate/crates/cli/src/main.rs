use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hwtlab::campaign::{Campaign, CampaignConfig, CampaignError};

/// Hardware Trojan insertion and detection campaigns on gate-level netlists.
#[derive(Parser)]
#[command(name = "hwtlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or load the benchmark and archive the resolved config.
    Gen(Common),
    /// Profile signal probabilities of the benchmark.
    Profile(Common),
    /// Insert and verify the configured Trojan instances.
    Inject {
        #[command(flatten)]
        common: Common,
        /// Sidecar directory; must not lie inside the suspects directory.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Generate the test sets of test-based strategies.
    Gentests(Common),
    /// Run every strategy against every suspect.
    Detect(Common),
    /// Run all stages and print the result matrix.
    Campaign(Common),
    /// Aggregate stored reports into the result matrix.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Campaign config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config's.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Wall-time cap per SAT detection run and per clique sampling.
    #[arg(long)]
    budget_seconds: Option<u64>,
}

impl Common {
    fn campaign(&self) -> Result<Campaign, CampaignError> {
        let config = CampaignConfig::load_with_seed(&self.config, self.seed)?;
        Ok(Campaign::new(config, self.out.as_deref())?
            .with_workers(self.workers)?
            .with_budget_seconds(self.budget_seconds))
    }
}

fn run(cli: Cli) -> Result<(), CampaignError> {
    match cli.command {
        Command::Gen(c) => {
            let c = c.campaign()?;
            let n = c.generate()?;
            eprintln!(
                "{}: {} inputs, {} outputs, {} gates",
                c.layout.golden().display(),
                n.inputs().len(),
                n.outputs().len(),
                n.gates().len()
            );
        }
        Command::Profile(c) => {
            let c = c.campaign()?;
            let p = c.profile()?;
            let rare = hwtlab::rarity::rare_set(&p, c.config.profile.threshold);
            eprintln!("{}: {} rare nets", c.layout.profile().display(), rare.len());
        }
        Command::Inject {
            common,
            ground_truth,
        } => {
            let mut c = common.campaign()?;
            if let Some(dir) = ground_truth {
                c = c.with_ground_truth_dir(&dir)?;
            }
            let sidecars = c.inject()?;
            eprintln!(
                "{} instances in {}",
                sidecars.len(),
                c.layout.suspects.display()
            );
        }
        Command::Gentests(c) => {
            let c = c.campaign()?;
            for t in c.gentests()? {
                eprintln!("{}: {} patterns", t.meta.strategy, t.len());
            }
        }
        Command::Detect(c) => {
            let c = c.campaign()?;
            let results = c.detect()?;
            let hits = results.iter().filter(|r| r.report.detected).count();
            eprintln!("{hits}/{} runs detected", results.len());
        }
        Command::Campaign(c) => print!("{}", c.campaign()?.run()?.to_csv()),
        Command::Report(c) => print!("{}", c.campaign()?.report()?.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
