//! Plain-text graph format.
//!
//! ```text
//! # comment
//! 1 2        edge (vertices created on demand)
//! 7          isolated vertex
//! #frame
//! 2 H        frame entry by Clifford name
//! ```

use std::fmt::Write;

use super::{Clifford, GraphState};
use crate::error::{Error, Result};

pub fn to_text(g: &GraphState) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        if g.neighbors(v).map(|n| n.is_empty()).unwrap_or(false) {
            writeln!(out, "{v}").expect("writing to a String");
        }
    }
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").expect("writing to a String");
    }
    let frame: Vec<(usize, Clifford)> = g
        .vertices()
        .map(|v| (v, g.vop(v).expect("listed vertex")))
        .filter(|(_, c)| *c != Clifford::IDENTITY)
        .collect();
    if !frame.is_empty() {
        out.push_str("#frame\n");
        for (v, c) in frame {
            writeln!(out, "{v} {c}").expect("writing to a String");
        }
    }
    out
}

fn parse_id(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad vertex id {tok:?}")))
}

pub fn from_text(text: &str) -> Result<GraphState> {
    let mut g = GraphState::new();
    let mut in_frame = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.eq_ignore_ascii_case("#frame") {
            in_frame = true;
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if in_frame {
            let [v, name] = toks.as_slice() else {
                return Err(Error::Parse(format!("line {line}: expected `vertex clifford`")));
            };
            let v = parse_id(v, line)?;
            let c = Clifford::from_name(name)
                .ok_or_else(|| Error::Parse(format!("line {line}: unknown Clifford {name:?}")))?;
            g.set_vop(v, c)?;
            continue;
        }
        let ids = toks
            .iter()
            .map(|t| parse_id(t, line))
            .collect::<Result<Vec<usize>>>()?;
        for &v in &ids {
            if !g.contains(v) {
                g.add_vertex(v)?;
            }
        }
        match ids.as_slice() {
            [_] => {}
            [u, v] if g.has_edge(*u, *v) => {
                return Err(Error::Parse(format!("line {line}: duplicate edge {u} {v}")));
            }
            [u, v] => g.toggle_edge(*u, *v)?,
            _ => return Err(Error::Parse(format!("line {line}: expected `u v` or `v`"))),
        }
    }
    Ok(g)
}
