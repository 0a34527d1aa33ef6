//! CSV export of grid functions and iteration traces.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use itfe_core::gridfn::{Grid, GridFunction};
use itfe_core::solver::{IterationTrace, StepRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Sample {
    x: f64,
    value: f64,
}

/// Writes `x,value` rows, one per node.
pub fn write_grid_function<W: Write>(out: W, g: &GridFunction) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for (&x, &value) in g.nodes().iter().zip(g.values()) {
        w.serialize(Sample { x, value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_function<R: Read>(input: R) -> Result<GridFunction> {
    let mut r = csv::Reader::from_reader(input);
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for row in r.deserialize() {
        let s: Sample = row?;
        nodes.push(s.x);
        values.push(s.value);
    }
    let grid = Grid::from_nodes(nodes)?;
    Ok(GridFunction::new(grid, values)?)
}

/// Writes `n,delta_phi,delta_Phi,residual,seconds` rows.
pub fn write_trace<W: Write>(out: W, t: &IterationTrace) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    if t.steps.is_empty() {
        w.write_record(["n", "delta_phi", "delta_Phi", "residual", "seconds"])?;
    }
    for s in &t.steps {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(anyhow::Error::from))
        .collect()
}

pub fn write_grid_function_file(path: &Path, g: &GridFunction) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_grid_function(std::io::BufWriter::new(f), g)
}

pub fn write_trace_file(path: &Path, t: &IterationTrace) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_trace(std::io::BufWriter::new(f), t)
}
