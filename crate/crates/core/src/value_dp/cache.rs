//! Plain-text persistence for computed value grids.
//!
//! The format is line-oriented and self-describing: a header with the grid
//! geometry, then one line of node values per time slice. Floats are written
//! with Rust's shortest-round-trip formatting, so a save/load cycle
//! reproduces every value bit-for-bit.
//!
//! ```text
//! diffgame-grid v1
//! kind lower
//! dim 1
//! axis -2.6 2.6 201
//! seed -1 1
//! out-of-box 0
//! times 0 0.25 0.5 0.75 1
//! slice 0
//! 0.5 0.51 …            (node_count values)
//! …
//! end
//! ```

use super::{SpatialGrid, ValueGrid, ValueKind};
use crate::dynamics::Partition;
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

const MAGIC: &str = "diffgame-grid v1";

/// Writes a value grid in the plain-text cache format.
pub fn write_value_grid<W: Write>(grid: &ValueGrid, mut w: W) -> Result<()> {
    let g = grid.grid();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "kind {}", grid.kind().label())?;
    writeln!(w, "dim {}", g.dim())?;
    for ax in g.axes() {
        writeln!(w, "axis {} {} {}", ax.lo, ax.hi, ax.count)?;
    }
    for [lo, hi] in g.seed_box() {
        writeln!(w, "seed {lo} {hi}")?;
    }
    writeln!(w, "out-of-box {}", grid.out_of_box())?;
    write!(w, "times")?;
    for t in grid.partition().times() {
        write!(w, " {t}")?;
    }
    writeln!(w)?;
    let nc = g.node_count();
    for m in 0..=grid.partition().intervals() {
        writeln!(w, "slice {m}")?;
        let slice = grid.slice(m);
        let mut line = String::with_capacity(nc * 20);
        for (i, v) in slice.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    writeln!(w, "end")?;
    Ok(())
}

/// Reads a value grid from the plain-text cache format.
pub fn read_value_grid<R: BufRead>(r: R) -> Result<ValueGrid> {
    let mut lines = r.lines();
    let mut next_line = move || -> Result<String> {
        match lines.next() {
            Some(line) => Ok(line?),
            None => Err(bad("file ended early")),
        }
    };

    if next_line()? != MAGIC {
        return Err(bad("missing or unsupported header"));
    }
    let kind_line = next_line()?;
    let kind = match kind_line.strip_prefix("kind ") {
        Some("lower") => ValueKind::Lower,
        Some("upper") => ValueKind::Upper,
        Some("candidate") => ValueKind::Candidate,
        _ => return Err(bad(&format!("bad kind line: {kind_line}"))),
    };
    let dim: usize = field(&next_line()?, "dim")?;

    let mut box_ = Vec::with_capacity(dim);
    let mut counts = Vec::with_capacity(dim);
    for _ in 0..dim {
        let line = next_line()?;
        let rest = line
            .strip_prefix("axis ")
            .ok_or_else(|| bad(&format!("expected an axis line, got: {line}")))?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(bad(&format!("bad axis line: {line}")));
        }
        let lo = parse_f64(parts[0])?;
        let hi = parse_f64(parts[1])?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| bad(&format!("bad axis count: {line}")))?;
        box_.push([lo, hi]);
        counts.push(count);
    }
    let mut seed = Vec::with_capacity(dim);
    for _ in 0..dim {
        let line = next_line()?;
        let rest = line
            .strip_prefix("seed ")
            .ok_or_else(|| bad(&format!("expected a seed line, got: {line}")))?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(bad(&format!("bad seed line: {line}")));
        }
        seed.push([parse_f64(parts[0])?, parse_f64(parts[1])?]);
    }
    let grid = SpatialGrid::with_seed_box(box_, counts, seed)?;

    let out_of_box: u64 = field(&next_line()?, "out-of-box")?;

    let times_line = next_line()?;
    let rest = times_line
        .strip_prefix("times ")
        .ok_or_else(|| bad("expected a times line"))?;
    let times: Vec<f64> = rest
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<_>>()?;
    let partition = Partition::new(times)?;

    let nc = grid.node_count();
    let n = partition.intervals();
    let mut values = Vec::with_capacity((n + 1) * nc);
    for m in 0..=n {
        let line = next_line()?;
        if line != format!("slice {m}") {
            return Err(bad(&format!("expected 'slice {m}', got: {line}")));
        }
        let data = next_line()?;
        let before = values.len();
        for tok in data.split_whitespace() {
            values.push(parse_f64(tok)?);
        }
        if values.len() - before != nc {
            return Err(bad(&format!(
                "slice {m} holds {} values, expected {nc}",
                values.len() - before
            )));
        }
    }
    if next_line()? != "end" {
        return Err(bad("missing end marker"));
    }

    ValueGrid::from_parts(kind, partition, grid, values, out_of_box)
}

/// Saves a value grid to a file.
pub fn save_value_grid(grid: &ValueGrid, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_value_grid(grid, BufWriter::new(file))
}

/// Loads a value grid from a file.
pub fn load_value_grid(path: &Path) -> Result<ValueGrid> {
    let file = File::open(path)?;
    read_value_grid(BufReader::new(file))
}

fn bad(msg: &str) -> Error {
    Error::Config(format!("value-grid cache: {msg}"))
}

fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| bad(&format!("bad float: {tok}")))
}

fn field<T: std::str::FromStr>(line: &str, name: &str) -> Result<T> {
    line.strip_prefix(name)
        .map(str::trim)
        .and_then(|rest| rest.parse().ok())
        .ok_or_else(|| bad(&format!("bad {name} line: {line}")))
}
