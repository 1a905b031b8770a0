//! Text formats for hierarchies, class-probability tables and conditionals.
//!
//! * Hierarchy: one node per line, `node_id<TAB>parent_id<TAB>name`, ids are
//!   positive integers and the root's parent is `0`. Lines starting with `#`
//!   and blank lines are skipped. Class indices follow the depth-first leaf
//!   order with children visited in file order.
//! * Probabilities: CSV with header `instance_id,y_true,p_0,...,p_{K-1}`;
//!   `y_true` is a class index or `-1` when unknown.
//! * Conditionals: `node_id<TAB>child_id<TAB>prob` per parent-child pair for
//!   a single instance, or `instance_id<TAB>node_id<TAB>child_id<TAB>prob`
//!   for several instances.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeSpec};
use crate::prob::{FlatDistribution, HierarchicalDistribution};

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn parse_hierarchy(text: &str, file: &str) -> Result<Hierarchy> {
    let mut specs = Vec::new();
    for (no, line) in data_lines(text) {
        let mut fields = line.split('\t');
        let mut num = |what: &str| -> Result<u64> {
            let f = fields
                .next()
                .ok_or_else(|| parse_err(file, no, format!("missing {what}")))?;
            f.trim().parse().map_err(|_| {
                parse_err(
                    file,
                    no,
                    format!("{what} {f:?} is not a non-negative integer"),
                )
            })
        };
        let id = num("node id")?;
        let parent = num("parent id")?;
        if id == 0 {
            return Err(parse_err(
                file,
                no,
                "node id 0 is reserved for the root's parent",
            ));
        }
        let name = fields
            .next()
            .map(str::to_string)
            .unwrap_or_else(|| id.to_string());
        specs.push(NodeSpec::new(id, (parent != 0).then_some(parent), name));
    }
    Hierarchy::build(specs).map_err(|e| match e {
        e @ Error::Parse { .. } => e,
        other => parse_err(file, 0, other.to_string()),
    })
}

pub fn write_hierarchy(h: &Hierarchy) -> String {
    let mut out = String::from("# node_id\tparent_id\tname\n");
    for spec in h.specs() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            spec.id,
            spec.parent.unwrap_or(0),
            spec.name
        );
    }
    out
}

/// One row of a probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbRow {
    pub instance_id: String,
    pub y_true: Option<usize>,
    pub dist: FlatDistribution,
}

pub fn parse_probs(text: &str, file: &str, classes: usize) -> Result<Vec<ProbRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(file, 1, e.to_string()))?
        .clone();
    if header.len() != classes + 2 {
        return Err(parse_err(
            file,
            1,
            format!(
                "header has {} columns, expected {} for {classes} classes",
                header.len(),
                classes + 2
            ),
        ));
    }
    if header.get(0) != Some("instance_id") || header.get(1) != Some("y_true") {
        return Err(parse_err(
            file,
            1,
            "header must start with instance_id,y_true",
        ));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(file, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != classes + 2 {
            return Err(parse_err(
                file,
                line,
                format!("row has {} columns, expected {}", rec.len(), classes + 2),
            ));
        }
        let y: i64 = rec[1].trim().parse().map_err(|_| {
            parse_err(
                file,
                line,
                format!("y_true {:?} is not an integer", &rec[1]),
            )
        })?;
        let y_true = match y {
            -1 => None,
            y if y >= 0 && (y as usize) < classes => Some(y as usize),
            y => return Err(parse_err(file, line, format!("y_true {y} out of range"))),
        };
        let probs = rec
            .iter()
            .skip(2)
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    parse_err(file, line, format!("probability {f:?} is not a number"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let dist =
            FlatDistribution::new(probs).map_err(|e| parse_err(file, line, e.to_string()))?;
        rows.push(ProbRow {
            instance_id: rec[0].to_string(),
            y_true,
            dist,
        });
    }
    Ok(rows)
}

pub fn write_probs(rows: &[ProbRow]) -> String {
    let classes = rows.first().map_or(0, |r| r.dist.class_count());
    let mut out = String::from("instance_id,y_true");
    for c in 0..classes {
        let _ = write!(out, ",p_{c}");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.instance_id);
        match row.y_true {
            Some(y) => {
                let _ = write!(out, ",{y}");
            }
            None => out.push_str(",-1"),
        }
        for p in row.dist.probs() {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

/// Parses conditionals, grouped by instance in order of first appearance.
pub fn parse_conds(
    text: &str,
    file: &str,
    h: &Hierarchy,
) -> Result<Vec<(String, HierarchicalDistribution)>> {
    let mut order: Vec<String> = Vec::new();
    let mut tables: HashMap<String, Vec<Vec<Option<f64>>>> = HashMap::new();
    let blank = || -> Vec<Vec<Option<f64>>> {
        (0..h.node_count())
            .map(|v| vec![None; h.children(v).len()])
            .collect()
    };
    for (no, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (inst, rest) = match fields.len() {
            3 => ("0".to_string(), &fields[..]),
            4 => (fields[0].to_string(), &fields[1..]),
            n => {
                return Err(parse_err(
                    file,
                    no,
                    format!("expected 3 or 4 tab-separated fields, got {n}"),
                ))
            }
        };
        let id = |f: &str| -> Result<u64> {
            f.parse()
                .map_err(|_| parse_err(file, no, format!("node id {f:?} is not an integer")))
        };
        let parent = id(rest[0])?;
        let child = id(rest[1])?;
        let prob: f64 = rest[2].parse().map_err(|_| {
            parse_err(
                file,
                no,
                format!("probability {:?} is not a number", rest[2]),
            )
        })?;
        let p = h
            .node_by_id(parent)
            .ok_or_else(|| parse_err(file, no, format!("unknown node {parent}")))?;
        let c = h
            .node_by_id(child)
            .ok_or_else(|| parse_err(file, no, format!("unknown node {child}")))?;
        let slot =
            h.children(p).iter().position(|&x| x == c).ok_or_else(|| {
                parse_err(file, no, format!("{child} is not a child of {parent}"))
            })?;
        let table = tables.entry(inst.clone()).or_insert_with(|| {
            order.push(inst.clone());
            blank()
        });
        if table[p][slot].replace(prob).is_some() {
            return Err(parse_err(
                file,
                no,
                format!("duplicate conditional for {parent} -> {child}"),
            ));
        }
    }
    order
        .into_iter()
        .map(|inst| {
            let table = tables.remove(&inst).expect("instance recorded");
            let mut cond = Vec::with_capacity(table.len());
            for (v, row) in table.into_iter().enumerate() {
                let row: Option<Vec<f64>> = row.into_iter().collect();
                cond.push(row.ok_or_else(|| {
                    parse_err(
                        file,
                        0,
                        format!(
                            "instance {inst}: missing conditionals below node {}",
                            h.id(v)
                        ),
                    )
                })?);
            }
            let d = HierarchicalDistribution::new(h, cond)
                .map_err(|e| parse_err(file, 0, format!("instance {inst}: {e}")))?;
            Ok((inst, d))
        })
        .collect()
}

/// Writes conditionals in the four-column, multi-instance form.
pub fn write_conds(h: &Hierarchy, instances: &[(String, HierarchicalDistribution)]) -> String {
    let mut out = String::new();
    for (inst, d) in instances {
        for &v in h.preorder() {
            for (&c, p) in h.children(v).iter().zip(d.child_conditionals(v)) {
                let _ = writeln!(out, "{inst}\t{}\t{}\t{p}", h.id(v), h.id(c));
            }
        }
    }
    out
}
