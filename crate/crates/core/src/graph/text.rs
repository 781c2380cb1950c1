//! Line-oriented graph files.
//!
//! ```text
//! # lasso
//! vertex 0 neumann
//! vertex 1 robin -0.5
//! edge 0 0 0 length 1.0
//! edge 1 0 1 length 2.0
//! ```
//!
//! Ids may appear in any order but must be unique; vertices and edges are
//! numbered internally by ascending id.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Edge, GraphError, MetricGraph, VertexCondition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn number<T: std::str::FromStr>(line: usize, what: &str, token: Option<&str>) -> Result<T, ParseError> {
    let token = token.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    token.parse().map_err(|_| syntax(line, format!("invalid {what} `{token}`")))
}

fn real(line: usize, what: &str, token: Option<&str>) -> Result<f64, ParseError> {
    let x: f64 = number(line, what, token)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(syntax(line, format!("{what} must be finite")))
    }
}

pub fn parse_graph(text: &str) -> Result<MetricGraph, ParseError> {
    let mut vertices: BTreeMap<u64, VertexCondition> = BTreeMap::new();
    let mut edges: BTreeMap<u64, (usize, u64, u64, f64)> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let id: u64 = number(line, "vertex id", tokens.next())?;
                let condition = match tokens.next() {
                    Some("neumann") => VertexCondition::neumann(),
                    Some("dirichlet") => VertexCondition::dirichlet(),
                    Some("robin") => VertexCondition::robin(real(line, "coupling", tokens.next())?),
                    Some("angle") => VertexCondition::from_angle(real(line, "angle", tokens.next())?),
                    Some(other) => return Err(syntax(line, format!("unknown vertex condition `{other}`"))),
                    None => return Err(syntax(line, "missing vertex condition")),
                };
                if vertices.insert(id, condition).is_some() {
                    return Err(syntax(line, format!("duplicate vertex id {id}")));
                }
            }
            Some("edge") => {
                let id: u64 = number(line, "edge id", tokens.next())?;
                let u: u64 = number(line, "vertex id", tokens.next())?;
                let v: u64 = number(line, "vertex id", tokens.next())?;
                if tokens.next() != Some("length") {
                    return Err(syntax(line, "expected `length`"));
                }
                let length = real(line, "length", tokens.next())?;
                if length <= 0.0 {
                    return Err(syntax(line, format!("edge length must be positive, got {length}")));
                }
                if edges.insert(id, (line, u, v, length)).is_some() {
                    return Err(syntax(line, format!("duplicate edge id {id}")));
                }
            }
            Some(other) => return Err(syntax(line, format!("unknown record `{other}`"))),
            None => unreachable!(),
        }
        if let Some(extra) = tokens.next() {
            return Err(syntax(line, format!("unexpected token `{extra}`")));
        }
    }

    let index: BTreeMap<u64, usize> = vertices.keys().enumerate().map(|(i, &id)| (id, i)).collect();
    let lookup = |line: usize, id: u64| {
        index.get(&id).copied().ok_or_else(|| syntax(line, format!("edge references unknown vertex {id}")))
    };
    let mut edge_list = Vec::with_capacity(edges.len());
    for &(line, u, v, length) in edges.values() {
        edge_list.push(Edge { u: lookup(line, u)?, v: lookup(line, v)?, length });
    }
    if vertices.is_empty() {
        return Err(syntax(text.lines().count().max(1), "graph has no vertices"));
    }
    Ok(MetricGraph::new(vertices.into_values().collect(), edge_list)?)
}

/// Serializes a graph so that [`parse_graph`] reproduces it exactly.
pub fn write_graph(g: &MetricGraph) -> String {
    let mut out = String::new();
    for (id, c) in g.conditions().iter().enumerate() {
        let kind = if c.is_dirichlet() {
            "dirichlet".to_string()
        } else if c.angle() == 0.0 {
            "neumann".to_string()
        } else {
            format!("angle {:?}", c.angle())
        };
        writeln!(out, "vertex {id} {kind}").unwrap();
    }
    for (id, e) in g.edges().iter().enumerate() {
        writeln!(out, "edge {id} {} {} length {:?}", e.u, e.v, e.length).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LASSO: &str =
        "# lasso\nvertex 0 neumann\nvertex 1 robin -0.5  # tail end\n\nedge 0 0 0 length 1.0\nedge 1 0 1 length 2.5\n";

    #[test]
    fn parses_lasso() {
        let g = parse_graph(LASSO).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.betti(), 1);
        assert!((g.condition(1).alpha().unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(g.length(1), 2.5);
    }

    #[test]
    fn ids_are_sorted() {
        let g =
            parse_graph("vertex 7 dirichlet\nvertex 3 neumann\nedge 5 3 7 length 2\nedge 1 3 3 length 1\n").unwrap();
        assert!(g.condition(1).is_dirichlet());
        assert_eq!(g.edge(0).length, 1.0);
        assert_eq!((g.edge(1).u, g.edge(1).v), (0, 1));
    }

    #[test]
    fn round_trip() {
        let g = parse_graph("vertex 0 angle 0.3\nvertex 1 dirichlet\nvertex 2 robin 2.0\nedge 0 0 1 length 0.1\nedge 1 1 2 length 1.7\n").unwrap();
        let again = parse_graph(&write_graph(&g)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn reports_line_numbers() {
        let cases = [
            ("vertex 0 neumann\nedge 0 0 1 length 1\n", 2),
            ("vertex 0 neumann\n\nvertex 0 dirichlet\n", 3),
            ("vertex 0 robin\n", 1),
            ("vertex 0 neumann\nedge 0 0 0 length -1\n", 2),
            ("vertex 0 neumann\nedge 0 0 0 len 1\n", 2),
            ("# c\nvertex x neumann\n", 2),
            ("vertex 0 neumann extra\n", 1),
            ("foo\n", 1),
            ("vertex 0 neumann\nedge 0 0 0 length nan\n", 2),
        ];
        for (text, expected) in cases {
            match parse_graph(text) {
                Err(ParseError::Syntax { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_graph("# nothing\n"), Err(ParseError::Syntax { .. })));
    }
}
