use std::fmt::Write as _;

use super::{Cnf, Lit, Model, SatError, Verdict};

impl Cnf {
    /// DIMACS text. Assumptions are appended as unit clauses.
    pub fn to_dimacs(&self, assumptions: &[Lit]) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "p cnf {} {}",
            self.num_vars(),
            self.clauses().len() + assumptions.len()
        )
        .unwrap();
        for c in self.clauses() {
            for l in c {
                write!(s, "{l} ").unwrap();
            }
            s.push_str("0\n");
        }
        for a in assumptions {
            writeln!(s, "{a} 0").unwrap();
        }
        s
    }

    /// `label,net,var` rows for every named variable, sorted by variable.
    pub fn names_csv(&self) -> String {
        let mut rows: Vec<_> = self.names().iter().collect();
        rows.sort_by_key(|(_, &v)| v);
        let mut s = String::from("label,net,var\n");
        for ((label, net), v) in rows {
            writeln!(s, "{label},{net},{v}").unwrap();
        }
        s
    }
}

pub fn parse_dimacs(text: &str) -> Result<Cnf, SatError> {
    let mut cnf = Cnf::new();
    let mut declared: Option<(u32, usize)> = None;
    let mut current: Vec<Lit> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.len() != 3 || f[0] != "cnf" {
                return Err(SatError::Dimacs(format!("line {}: bad header", no + 1)));
            }
            let nv: u32 = f[1]
                .parse()
                .map_err(|_| SatError::Dimacs(format!("line {}: bad var count", no + 1)))?;
            let nc: usize = f[2]
                .parse()
                .map_err(|_| SatError::Dimacs(format!("line {}: bad clause count", no + 1)))?;
            for _ in 0..nv {
                cnf.new_var();
            }
            declared = Some((nv, nc));
            continue;
        }
        let Some((nv, _)) = declared else {
            return Err(SatError::Dimacs(format!(
                "line {}: clause before header",
                no + 1
            )));
        };
        for tok in line.split_whitespace() {
            let x: i32 = tok
                .parse()
                .map_err(|_| SatError::Dimacs(format!("line {}: bad literal `{tok}`", no + 1)))?;
            if x == 0 {
                if current.is_empty() {
                    return Err(SatError::Dimacs(format!("line {}: empty clause", no + 1)));
                }
                cnf.add_clause(std::mem::take(&mut current));
            } else if x.unsigned_abs() > nv {
                return Err(SatError::LiteralOutOfRange(x));
            } else {
                current.push(Lit::from_dimacs(x));
            }
        }
    }
    if !current.is_empty() {
        cnf.add_clause(current);
    }
    match declared {
        None => Err(SatError::Dimacs("missing header".into())),
        Some((_, nc)) if nc != cnf.clauses().len() => Err(SatError::Dimacs(format!(
            "header declares {nc} clauses, found {}",
            cnf.clauses().len()
        ))),
        Some(_) => Ok(cnf),
    }
}

/// Reads competition-format solver output (`s` and `v` lines).
pub fn parse_solver_output(text: &str, num_vars: u32) -> Result<Verdict, SatError> {
    let mut status = None;
    let mut values = vec![false; num_vars as usize];
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(s.trim().to_string());
        } else if let Some(v) = line.strip_prefix("v ") {
            for tok in v.split_whitespace() {
                let x: i32 = tok
                    .parse()
                    .map_err(|_| SatError::External(format!("bad value `{tok}`")))?;
                if x != 0 {
                    if let Some(slot) = values.get_mut(x.unsigned_abs() as usize - 1) {
                        *slot = x > 0;
                    }
                }
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => Ok(Verdict::Sat(Model::new(values))),
        Some("UNSATISFIABLE") => Ok(Verdict::Unsat),
        Some("UNKNOWN") => Err(SatError::Budget("external solver reported UNKNOWN".into())),
        Some(other) => Err(SatError::External(format!("unexpected status `{other}`"))),
        None => Err(SatError::External("no status line".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_round_trip() {
        let mut f = Cnf::new();
        let a = f.named_var("n", "a").unwrap();
        let b = f.named_var("n", "b").unwrap();
        f.add_clause([Lit::pos(a), !Lit::pos(b)]);
        f.add_clause([Lit::pos(b)]);
        let text = f.to_dimacs(&[]);
        assert_eq!(text, "p cnf 2 2\n1 -2 0\n2 0\n");
        let g = parse_dimacs(&text).unwrap();
        assert_eq!(g.clauses(), f.clauses());
        assert_eq!(f.names_csv(), "label,net,var\nn,a,1\nn,b,2\n");
    }

    #[test]
    fn malformed_dimacs() {
        assert!(parse_dimacs("1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 3 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 2\n1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n0\n").is_err());
    }

    #[test]
    fn solver_output() {
        let v = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3).unwrap();
        let m = v.model().unwrap();
        assert!(m.value(1) && !m.value(2) && m.value(3));
        assert_eq!(
            parse_solver_output("s UNSATISFIABLE\n", 3).unwrap(),
            Verdict::Unsat
        );
        assert!(matches!(
            parse_solver_output("s UNKNOWN\n", 3),
            Err(SatError::Budget(_))
        ));
    }
}
