use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use super::{
    check_model, dimacs::parse_solver_output, Budget, Cnf, Lit, SatEngine, SatError, Verdict,
};

static COUNTER: AtomicU64 = AtomicU64::new(0);

/// Runs an external competition-format solver on a DIMACS file per query.
/// `command[0]` is the program; the file path is appended to the arguments.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    command: Vec<String>,
    cnf: Cnf,
}

impl ExternalSolver {
    pub fn new(command: Vec<String>) -> Self {
        assert!(!command.is_empty(), "empty solver command");
        ExternalSolver {
            command,
            cnf: Cnf::new(),
        }
    }

    fn temp_path() -> PathBuf {
        let k = COUNTER.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!("hwtlab-{}-{k}.cnf", std::process::id()))
    }
}

impl SatEngine for ExternalSolver {
    fn reserve_vars(&mut self, num_vars: u32) {
        while self.cnf.num_vars() < num_vars {
            self.cnf.new_var();
        }
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        let max = lits.iter().map(|l| l.var()).max().unwrap_or(0);
        self.reserve_vars(max);
        self.cnf.add_clause(lits.to_vec());
    }

    fn solve(&mut self, assumptions: &[Lit], budget: Budget) -> Result<Verdict, SatError> {
        if let Some(d) = budget.deadline {
            if Instant::now() >= d {
                return Err(SatError::Budget("deadline".into()));
            }
        }
        let path = Self::temp_path();
        std::fs::write(&path, self.cnf.to_dimacs(assumptions))?;
        let out = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(&path)
            .output();
        let _ = std::fs::remove_file(&path);
        let out = out.map_err(|e| SatError::External(format!("{}: {e}", self.command[0])))?;
        let verdict =
            parse_solver_output(&String::from_utf8_lossy(&out.stdout), self.cnf.num_vars())?;
        if let Verdict::Sat(m) = &verdict {
            check_model(self.cnf.clauses(), assumptions, m)?;
        }
        Ok(verdict)
    }
}
