//! Snapshot CSV and domain manifest formats.
//!
//! Snapshot rows are `node, x_1..x_m, c_1..c_{Qn}` with the Q-point
//! coordinates in canonical order. Numbers are written in full-precision
//! scientific notation.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GridDomain, QGridFunction};
use crate::error::{Error, Result};
use crate::qspace::QPoint;

/// Formats a float so that it parses back to the same bits.
pub fn sci(x: f64) -> String {
    format!("{x:.17e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainManifest {
    pub m: usize,
    pub resolution: usize,
    pub delta: f64,
    pub node_count: usize,
    pub edge_count: usize,
    pub boundary_nodes: Vec<usize>,
}

impl DomainManifest {
    pub fn of(domain: &GridDomain) -> Self {
        Self {
            m: domain.m(),
            resolution: domain.resolution(),
            delta: domain.delta(),
            node_count: domain.node_count(),
            edge_count: domain.edges().len(),
            boundary_nodes: domain.boundary_nodes().collect(),
        }
    }
}

pub fn write_snapshot_csv<W: Write>(f: &QGridFunction, out: W) -> Result<()> {
    let dom = f.domain();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["node".to_string()];
    header.extend((0..dom.m()).map(|i| format!("x{i}")));
    for b in 0..f.q() {
        for c in 0..f.n() {
            header.push(format!("b{b}_{c}"));
        }
    }
    w.write_record(&header)?;
    for (node, value) in f.values().iter().enumerate() {
        let mut row = vec![node.to_string()];
        row.extend(dom.coord(node).iter().map(|&c| sci(c)));
        row.extend(value.coords().iter().map(|&c| sci(c)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot_csv`] back onto `domain`.
pub fn read_snapshot_csv<R: Read>(domain: Arc<GridDomain>, n: usize, input: R) -> Result<QGridFunction> {
    let mut r = csv::Reader::from_reader(input);
    let m = domain.m();
    let mut values = Vec::with_capacity(domain.node_count());
    for (expected, record) in r.records().enumerate() {
        let record = record?;
        let fields: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        if fields.len() < 1 + m + n {
            return Err(Error::Snapshot(format!("row {expected} is too short")));
        }
        if fields[0] as usize != expected {
            return Err(Error::Snapshot(format!(
                "expected node {expected}, found {}",
                fields[0]
            )));
        }
        values.push(QPoint::from_flat(n, fields[1 + m..].to_vec())?);
    }
    QGridFunction::new(domain, values)
}
