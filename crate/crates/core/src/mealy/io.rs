//! The line-based `.fsm` text format and DOT export.
//!
//! ```text
//! # comment
//! inputs a b
//! initial q0
//! q0 a / 0 -> q1
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{MealyBuilder, MealyError, MealyMachine};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsmError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid machine: {0}")]
    Validation(#[from] MealyError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FsmError {
    FsmError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_fsm(text: &str) -> Result<MealyMachine, FsmError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("inputs") {
        return Err(parse_err(ln, "expected `inputs <symbols...>`"));
    }
    let mut builder = MealyBuilder::new(tokens).map_err(|e| parse_err(ln, e.to_string()))?;

    let (ln, init) = lines
        .next()
        .ok_or_else(|| parse_err(ln + 1, "expected `initial <state>`"))?;
    match init.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["initial", s] => {
            builder.initial(s);
        }
        _ => return Err(parse_err(ln, "expected `initial <state>`")),
    }

    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [from, input, "/", output, "->", to] = toks.as_slice() else {
            return Err(parse_err(
                ln,
                "expected `<from> <input> / <output> -> <to>`",
            ));
        };
        if builder.has_transition(from, input) {
            return Err(parse_err(
                ln,
                format!("duplicate transition for ({from}, {input})"),
            ));
        }
        builder
            .transition(from, input, output, to)
            .map_err(|e| parse_err(ln, e.to_string()))?;
    }
    Ok(builder.build()?)
}

/// Canonical text form: reachable states renamed `q0, q1, ...` in
/// breadth-first order from the initial state, then any unreachable states
/// in their original order; transitions listed per state in input order.
pub fn write_fsm(m: &MealyMachine) -> String {
    let mut order = m.reachable_states();
    let mut placed = vec![false; m.num_states()];
    for &s in &order {
        placed[s] = true;
    }
    order.extend((0..m.num_states()).filter(|&s| !placed[s]));
    let mut name = vec![0usize; m.num_states()];
    for (i, &s) in order.iter().enumerate() {
        name[s] = i;
    }

    let mut text = String::new();
    let _ = writeln!(text, "inputs {}", m.inputs().join(" "));
    let _ = writeln!(text, "initial q{}", name[m.initial()]);
    for &s in &order {
        for a in 0..m.num_inputs() as u32 {
            let (t, o) = m.step(s, a);
            let _ = writeln!(
                text,
                "q{} {} / {} -> q{}",
                name[s],
                m.inputs()[a as usize],
                m.output_name(o),
                name[t]
            );
        }
    }
    text
}

pub fn to_dot(m: &MealyMachine) -> String {
    let mut dot = String::from("digraph mealy {\n  __start [shape=point];\n");
    for (i, s) in m.states().iter().enumerate() {
        let _ = writeln!(dot, "  s{i} [shape=circle,label=\"{}\"];", s.replace('"', "\\\""));
    }
    let _ = writeln!(dot, "  __start -> s{};", m.initial());
    for s in 0..m.num_states() {
        for a in 0..m.num_inputs() as u32 {
            let (t, o) = m.step(s, a);
            let _ = writeln!(
                dot,
                "  s{s} -> s{t} [label=\"{}/{}\"];",
                m.inputs()[a as usize],
                m.output_name(o)
            );
        }
    }
    dot.push_str("}\n");
    dot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mealy::equivalent;
    use crate::mealy::fixtures::{cycle, toggle};

    #[test]
    fn round_trip() {
        for m in [toggle("a"), cycle("b", 4)] {
            let back = read_fsm(&write_fsm(&m)).unwrap();
            assert!(equivalent(&m, &back).unwrap().is_equivalent());
            assert_eq!(write_fsm(&back), write_fsm(&m));
        }
    }

    #[test]
    fn canonical_text() {
        assert_eq!(
            write_fsm(&toggle("a")),
            "inputs a\ninitial q0\nq0 a / 0 -> q1\nq1 a / 1 -> q0\n"
        );
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# toggle\n\ninputs a  # one symbol\ninitial s\ns a / 0 -> t\nt a / 1 -> s\n";
        let m = read_fsm(text).unwrap();
        assert!(equivalent(&m, &toggle("a")).unwrap().is_equivalent());
    }

    #[test]
    fn missing_row_is_validation_error() {
        let text = "inputs a b\ninitial q0\nq0 a / 0 -> q0\n";
        assert!(matches!(
            read_fsm(text),
            Err(FsmError::Validation(MealyError::MissingTransition { .. }))
        ));
    }

    #[test]
    fn duplicate_row_is_parse_error() {
        let text = "inputs a\ninitial q0\nq0 a / 0 -> q0\nq0 a / 1 -> q0\n";
        assert_eq!(
            read_fsm(text),
            Err(FsmError::Parse {
                line: 4,
                message: "duplicate transition for (q0, a)".into()
            })
        );
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        assert!(matches!(
            read_fsm("inputs a\nstart q0\n"),
            Err(FsmError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_fsm("inputs a\ninitial q0\nq0 a 0 q1\n"),
            Err(FsmError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_fsm("inputs a\ninitial q0\nq0 b / 0 -> q0\n"),
            Err(FsmError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn dot_has_one_edge_per_transition() {
        let dot = to_dot(&cycle("a", 3));
        assert_eq!(dot.matches("[label=\"a/").count(), 3);
    }
}
