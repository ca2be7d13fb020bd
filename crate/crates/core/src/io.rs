//! Text formats: whitespace-delimited edge lists (`u v [w]`), node-weight
//! files (`u w`), contraction maps (`original supernode`), dense matrices as
//! CSV or JSON. `#` starts a comment. Weights are written in shortest
//! round-trip decimal form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{ContractionMap, NodeId, WeightedGraph};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} `{field}`"),
    })
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            line,
            msg: other.to_string(),
        },
    })
}

/// Repeated pairs are merged by summing their weights.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut g = WeightedGraph::new();
    for (line, fields) in data_lines(text) {
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `u v [w]`, found {} fields", fields.len()),
            });
        }
        let u: NodeId = parse_field(line, fields[0], "node id")?;
        let v: NodeId = parse_field(line, fields[1], "node id")?;
        let w: f64 = match fields.get(2) {
            Some(f) => parse_field(line, f, "weight")?,
            None => 1.0,
        };
        for n in [u, v] {
            if !g.has_node(n) {
                g.add_node(n, 1.0)?;
            }
        }
        at_line(line, g.add_edge(u, v, w).map(|_| ()))?;
    }
    Ok(g)
}

/// Sets node weights; unknown ids become isolated nodes.
pub fn apply_node_weights(g: &mut WeightedGraph, text: &str) -> Result<()> {
    for (line, fields) in data_lines(text) {
        if fields.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `u w`, found {} fields", fields.len()),
            });
        }
        let n: NodeId = parse_field(line, fields[0], "node id")?;
        let w: f64 = parse_field(line, fields[1], "node weight")?;
        if g.has_node(n) {
            at_line(line, g.set_node_weight(n, w))?;
        } else {
            at_line(line, g.add_node(n, w))?;
        }
    }
    Ok(())
}

pub fn format_edge_list(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for (_, e) in g.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.weight);
    }
    out
}

/// Every node, including isolated ones and unit weights.
pub fn format_node_weights(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for (n, w) in g.node_weights() {
        let _ = writeln!(out, "{n} {w}");
    }
    out
}

pub fn read_graph(edges: &Path, node_weights: Option<&Path>) -> Result<WeightedGraph> {
    let mut g = parse_edge_list(&fs::read_to_string(edges)?)?;
    if let Some(p) = node_weights {
        apply_node_weights(&mut g, &fs::read_to_string(p)?)?;
    }
    Ok(g)
}

pub fn write_graph(g: &WeightedGraph, edges: &Path, node_weights: Option<&Path>) -> Result<()> {
    fs::write(edges, format_edge_list(g))?;
    if let Some(p) = node_weights {
        fs::write(p, format_node_weights(g))?;
    }
    Ok(())
}

pub fn format_map(map: &ContractionMap) -> String {
    let mut out = String::new();
    for (o, s) in map.pairs() {
        let _ = writeln!(out, "{o} {s}");
    }
    out
}

pub fn parse_map(text: &str) -> Result<ContractionMap> {
    let mut pairs = Vec::new();
    for (line, fields) in data_lines(text) {
        if fields.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `original supernode`, found {} fields", fields.len()),
            });
        }
        pairs.push((
            parse_field(line, fields[0], "node id")?,
            parse_field(line, fields[1], "node id")?,
        ));
    }
    Ok(ContractionMap::from_pairs(pairs))
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.split(',').map(|c| parse_field(i + 1, c.trim(), "number")).collect())
        .collect::<Result<_>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged CSV matrix".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Row-major nested arrays.
pub fn matrix_to_json(m: &DMatrix<f64>) -> Result<String> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(serde_json::to_string(&rows)?)
}
