//! ISCAS-style `.bench` text format.

use std::fmt::Write as _;

use super::{is_valid_name, GateKind, Netlist, NetlistBuilder, NetlistError};

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// 1-based column of `sub`, which must be a subslice of `raw`.
fn col(raw: &str, sub: &str) -> usize {
    sub.as_ptr() as usize - raw.as_ptr() as usize + 1
}

/// Parses `NAME(args)` starting at `s`, returning the head, the raw argument
/// list and the remainder after the closing parenthesis.
fn call<'a>(raw: &str, s: &'a str, line: usize) -> Result<(&'a str, Vec<&'a str>), NetlistError> {
    let open = s
        .find('(')
        .ok_or_else(|| syntax(line, col(raw, s), "expected `(`"))?;
    let head = s[..open].trim();
    let after = &s[open + 1..];
    let close = after
        .find(')')
        .ok_or_else(|| syntax(line, col(raw, after), "expected `)`"))?;
    let trailing = after[close + 1..].trim();
    if !trailing.is_empty() {
        let t = &after[close + 1..];
        return Err(syntax(
            line,
            col(raw, t.trim_start()),
            "unexpected trailing text",
        ));
    }
    let inner = &after[..close];
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        let mut args = Vec::new();
        let mut rest = inner;
        loop {
            let (piece, next) = match rest.find(',') {
                Some(i) => (&rest[..i], Some(&rest[i + 1..])),
                None => (rest, None),
            };
            let name = piece.trim();
            if !is_valid_name(name) {
                let at = col(raw, piece.trim_start());
                return Err(syntax(line, at, format!("invalid net name `{name}`")));
            }
            args.push(name);
            match next {
                Some(n) => rest = n,
                None => break,
            }
        }
        args
    };
    Ok((head, args))
}

/// Parses bench text into a validated netlist called `name`.
///
/// Forward references are allowed; statements may appear in any order.
pub fn parse_bench(name: &str, text: &str) -> Result<Netlist, NetlistError> {
    let mut b = NetlistBuilder::new(name);
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let raw = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let stmt = content.trim_start();
        if stmt.trim().is_empty() {
            continue;
        }
        if let Some(eq) = stmt.find('=') {
            let lhs = stmt[..eq].trim();
            if !is_valid_name(lhs) {
                return Err(syntax(
                    line_no,
                    col(raw, stmt),
                    format!("invalid net name `{lhs}`"),
                ));
            }
            let rhs = stmt[eq + 1..].trim_start();
            let (head, args) = call(raw, rhs, line_no)?;
            let kind: GateKind = head.parse().map_err(|_| {
                syntax(
                    line_no,
                    col(raw, rhs),
                    format!("unknown gate kind `{head}`"),
                )
            })?;
            if !kind.arity_ok(args.len()) {
                return Err(NetlistError::Arity {
                    net: lhs.to_string(),
                    kind,
                    fanins: args.len(),
                });
            }
            b.gate(lhs, kind, &args);
        } else {
            let (head, args) = call(raw, stmt, line_no)?;
            if args.len() != 1 {
                return Err(syntax(
                    line_no,
                    col(raw, stmt),
                    "expected exactly one net name",
                ));
            }
            match head.to_ascii_uppercase().as_str() {
                "INPUT" => b.input(args[0]),
                "OUTPUT" => b.output(args[0]),
                _ => {
                    return Err(syntax(
                        line_no,
                        col(raw, stmt),
                        format!("unknown directive `{head}`"),
                    ))
                }
            };
        }
    }
    b.build()
}

/// Emits canonical bench text: inputs, outputs, then gates in declaration order.
pub fn emit_bench(n: &Netlist) -> String {
    let mut out = String::new();
    for &i in n.inputs() {
        let _ = writeln!(out, "INPUT({})", n.net_name(i));
    }
    for &o in n.outputs() {
        let _ = writeln!(out, "OUTPUT({})", n.net_name(o));
    }
    for g in n.gates() {
        let fanins: Vec<&str> = g.fanins.iter().map(|&f| n.net_name(f)).collect();
        let _ = writeln!(
            out,
            "{} = {}({})",
            n.net_name(g.output),
            g.kind,
            fanins.join(", ")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{gen_benchmark, random_circuit, BenchmarkKind};
    use proptest::prelude::*;

    const AND2: &str = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n";

    #[test]
    fn parses_smallest_circuit() {
        let n = parse_bench("t", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)").unwrap();
        assert_eq!(n.inputs().len(), 2);
        assert_eq!(n.outputs().len(), 1);
        assert_eq!(n.gates().len(), 1);
        assert_eq!(n.gates()[0].kind, GateKind::And);
        assert_eq!(emit_bench(&n), AND2);
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let err = parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = AND(a, y)\n").unwrap_err();
        assert!(matches!(err, NetlistError::Cycle { .. }), "{err}");
    }

    #[test]
    fn comments_crlf_and_spacing() {
        let text =
            "# header\r\nINPUT( a )\r\nINPUT(b)  # trailing\r\n\r\nOUTPUT(y)\r\n  y=and(a,b)\r\n";
        let n = parse_bench("t", text).unwrap();
        assert_eq!(emit_bench(&n), AND2);
    }

    #[test]
    fn const_gates_round_trip() {
        let text = "INPUT(a)\nOUTPUT(y)\nOUTPUT(k)\nk = CONST1()\ny = AND(a, k)\n";
        let n = parse_bench("t", text).unwrap();
        let emitted = emit_bench(&n);
        assert!(emitted.contains("k = CONST1()\n"));
        assert_eq!(parse_bench("t", &emitted).unwrap(), n);
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = FOO(a, a)\n") {
            Err(NetlistError::Syntax { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 5);
            }
            other => panic!("{other:?}"),
        }
        match parse_bench("t", "INPUT(a\n") {
            Err(NetlistError::Syntax { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = AND(a, 9x)\n") {
            Err(NetlistError::Syntax {
                line: 3,
                column: 12,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_categories_are_distinct() {
        assert!(matches!(
            parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = BUF(a)\n"),
            Err(NetlistError::DuplicateDriver { .. })
        ));
        assert!(matches!(
            parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = AND(a, q)\n"),
            Err(NetlistError::UndrivenNet { .. })
        ));
        assert!(matches!(
            parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = AND(a, z)\nz = OR(y, a)\n"),
            Err(NetlistError::Cycle { .. })
        ));
    }

    #[test]
    fn multiplier_16_round_trips() {
        let n = gen_benchmark(BenchmarkKind::Multiplier, 16, 3).unwrap();
        let back = parse_bench(n.name(), &emit_bench(&n)).unwrap();
        assert_eq!(back, n);
    }

    proptest! {
        #[test]
        fn random_circuits_round_trip(inputs in 2usize..12, gates in 1usize..120, seed: u64) {
            let n = random_circuit(inputs, gates, 3.min(gates), seed);
            let text = emit_bench(&n);
            let back = parse_bench(n.name(), &text).unwrap();
            prop_assert_eq!(&back, &n);
            prop_assert_eq!(emit_bench(&back), text);
        }
    }
}
