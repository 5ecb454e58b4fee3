//! Line-oriented text form of a [`Posg`].
//!
//! ```text
//! posg 1
//! actions 2 2
//! zero_sum true
//! meta family guess_the_string
//! state 0 s0 decision 0 0
//! state 1 win terminal 1/1 -1/1
//! start 0 1/1
//! trans 0 0 1 1 1/1
//! end
//! ```
//!
//! Rationals are always written `num/den`. Writing is canonical (states in
//! index order, transitions by state, joint action and successor), so
//! `write(read(write(g))) == write(g)` byte for byte.

use std::fmt::Write as _;

use thiserror::Error;

use crate::posg::{Posg, PosgError, PosgSpec, StateSpec, TransitionSpec};
use crate::rational::{format_q, parse_q};

#[derive(Debug, Error)]
pub enum GameFormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] PosgError),
}

const MAGIC: &str = "posg 1";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '%' => out.push_str("%25"),
            ' ' => out.push_str("%20"),
            '\t' => out.push_str("%09"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            _ => out.push(ch),
        }
    }
    if out.is_empty() {
        out.push_str("%00");
    }
    out
}

fn unescape(text: &str) -> String {
    if text == "%00" {
        return String::new();
    }
    text.replace("%20", " ")
        .replace("%09", "\t")
        .replace("%0A", "\n")
        .replace("%0D", "\r")
        .replace("%25", "%")
}

pub fn write_game(game: &Posg) -> String {
    let spec = game.to_spec();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "actions {} {}", spec.action_counts[0], spec.action_counts[1]).unwrap();
    writeln!(out, "zero_sum {}", spec.zero_sum).unwrap();
    for (k, v) in &spec.metadata {
        writeln!(out, "meta {} {}", escape(k), escape(v)).unwrap();
    }
    for (i, st) in spec.states.iter().enumerate() {
        match (&st.observations, &st.rewards) {
            (_, Some(r)) => writeln!(
                out,
                "state {i} {} terminal {} {}",
                escape(&st.name),
                format_q(&r[0]),
                format_q(&r[1])
            ),
            (Some(o), None) => writeln!(out, "state {i} {} decision {} {}", escape(&st.name), o[0], o[1]),
            (None, None) => unreachable!("validated games label every state"),
        }
        .unwrap();
    }
    for (s, p) in &spec.start {
        writeln!(out, "start {s} {}", format_q(p)).unwrap();
    }
    for t in &spec.transitions {
        writeln!(
            out,
            "trans {} {} {} {} {}",
            t.state,
            t.a1,
            t.a2,
            t.next,
            format_q(&t.prob)
        )
        .unwrap();
    }
    out.push_str("end\n");
    out
}

pub fn read_game(text: &str) -> Result<Posg, GameFormatError> {
    Ok(Posg::build(parse_spec(text)?)?)
}

pub fn parse_spec(text: &str) -> Result<PosgSpec, GameFormatError> {
    let mut spec = PosgSpec::default();
    let mut seen_magic = false;
    let mut seen_end = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| GameFormatError::Syntax { line, message };
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        if seen_end {
            return Err(err("content after `end`".into()));
        }
        if !seen_magic {
            if raw != MAGIC {
                return Err(err(format!("expected `{MAGIC}` header")));
            }
            seen_magic = true;
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let int = |i: usize| -> Result<usize, GameFormatError> {
            fields
                .get(i)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| err(format!("field {i} is not an integer")))
        };
        let rat = |i: usize| {
            fields
                .get(i)
                .ok_or_else(|| err(format!("missing field {i}")))
                .and_then(|f| parse_q(f).map_err(|e| err(e.to_string())))
        };
        let arity = |k: usize| {
            if fields.len() == k {
                Ok(())
            } else {
                Err(err(format!("`{}` takes {} fields", fields[0], k - 1)))
            }
        };
        match fields[0] {
            "actions" => {
                arity(3)?;
                spec.action_counts = [int(1)?, int(2)?];
            }
            "zero_sum" => {
                arity(2)?;
                spec.zero_sum = match fields[1] {
                    "true" => true,
                    "false" => false,
                    other => return Err(err(format!("bad boolean `{other}`"))),
                };
            }
            "meta" => {
                arity(3)?;
                spec.metadata.push((unescape(fields[1]), unescape(fields[2])));
            }
            "state" => {
                let index = int(1)?;
                if index != spec.states.len() {
                    return Err(err(format!("state {index} out of order")));
                }
                let name = unescape(fields.get(2).ok_or_else(|| err("missing name".into()))?);
                let state = match fields.get(3).copied() {
                    Some("decision") => {
                        arity(6)?;
                        StateSpec::decision(name, int(4)? as u32, int(5)? as u32)
                    }
                    Some("terminal") => {
                        arity(6)?;
                        StateSpec::terminal(name, rat(4)?, rat(5)?)
                    }
                    _ => return Err(err("state kind must be `decision` or `terminal`".into())),
                };
                spec.states.push(state);
            }
            "start" => {
                arity(3)?;
                spec.start.push((int(1)?, rat(2)?));
            }
            "trans" => {
                arity(6)?;
                spec.transitions.push(TransitionSpec {
                    state: int(1)?,
                    a1: int(2)?,
                    a2: int(3)?,
                    next: int(4)?,
                    prob: rat(5)?,
                });
            }
            "end" => {
                arity(1)?;
                seen_end = true;
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    if !seen_magic || !seen_end {
        return Err(GameFormatError::Syntax {
            line: text.lines().count(),
            message: "truncated game file".into(),
        });
    }
    Ok(spec)
}
