//! Curve tables on disk.
//!
//! ```text
//! id,response,t_1,t_2,...,t_N
//! grid,,0.1,0.2,...,0.9
//! s01,42.5,0.31,0.30,...,0.27
//! ```
//!
//! The second line carries the shared sampling grid. An empty response is
//! read as missing. Rows with an empty or `NA` curve value are dropped and
//! reported in [`CurveTable::rejected`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveTable {
    pub ids: Vec<String>,
    pub responses: Vec<Option<f64>>,
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub rejected: Vec<RejectedRow>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan")
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::ParseError {
            row,
            col,
            msg: format!("'{cell}' is not a finite number"),
        })
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::ParseError {
        row,
        col: 0,
        msg: e.to_string(),
    }
}

/// Checks that `grid` is finite and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least two grid points".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("grid values must be finite".into()));
    }
    if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(format!(
            "grid is not strictly increasing at position {}",
            k + 2
        )));
    }
    Ok(())
}

impl CurveTable {
    pub fn new(ids: Vec<String>, responses: Vec<Option<f64>>, grid: Vec<f64>, curves: Vec<Vec<f64>>) -> Result<Self> {
        let table = Self {
            ids,
            responses,
            grid,
            curves,
            rejected: Vec::new(),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        let n = self.curves.len();
        if self.ids.len() != n || self.responses.len() != n {
            return Err(Error::InvalidShape("ids, responses and curves differ in length".into()));
        }
        if let Some(i) = self.curves.iter().position(|c| c.len() != self.grid.len()) {
            return Err(Error::InvalidShape(format!(
                "curve {} has {} values for a grid of {}",
                i + 1,
                self.curves[i].len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    /// All responses, or an error naming the first row without one.
    pub fn require_responses(&self) -> Result<Vec<f64>> {
        self.responses
            .iter()
            .zip(&self.ids)
            .map(|(y, id)| y.ok_or_else(|| Error::InvalidShape(format!("row '{id}' has no response"))))
            .collect()
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| Error::ParseError {
                row: 1,
                col: 1,
                msg: "empty file".into(),
            })?
            .map_err(csv_error)?;
        if header.len() < 4 || &header[0] != "id" || &header[1] != "response" {
            return Err(Error::ParseError {
                row: 1,
                col: 1,
                msg: "header must be id,response,t_1,...,t_N with N >= 2".into(),
            });
        }
        let width = header.len();
        let grid_row = records
            .next()
            .ok_or_else(|| Error::ParseError {
                row: 2,
                col: 1,
                msg: "missing grid line".into(),
            })?
            .map_err(csv_error)?;
        if &grid_row[0] != "grid" {
            return Err(Error::ParseError {
                row: 2,
                col: 1,
                msg: "second line must start with 'grid'".into(),
            });
        }
        if grid_row.len() != width {
            return Err(Error::ParseError {
                row: 2,
                col: grid_row.len().min(width) + 1,
                msg: format!("expected {width} fields, found {}", grid_row.len()),
            });
        }
        let grid = (2..width)
            .map(|c| parse_cell(&grid_row[c], 2, c + 1))
            .collect::<Result<Vec<_>>>()?;
        check_grid(&grid)?;

        let mut table = Self {
            grid,
            ..Self::default()
        };
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            if rec.len() != width {
                return Err(Error::ParseError {
                    row: line,
                    col: rec.len().min(width) + 1,
                    msg: format!("expected {width} fields, found {}", rec.len()),
                });
            }
            let id = rec[0].to_string();
            let response = if is_missing(&rec[1]) {
                None
            } else {
                Some(parse_cell(&rec[1], line, 2)?)
            };
            let mut values = Vec::with_capacity(width - 2);
            let mut gap = None;
            for c in 2..width {
                if is_missing(&rec[c]) {
                    gap.get_or_insert(c + 1);
                } else {
                    values.push(parse_cell(&rec[c], line, c + 1)?);
                }
            }
            if let Some(col) = gap {
                table.rejected.push(RejectedRow {
                    line,
                    id,
                    reason: format!("missing value in column {col}"),
                });
                continue;
            }
            table.ids.push(id);
            table.responses.push(response);
            table.curves.push(values);
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(File::open(path)?)
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["id".to_string(), "response".to_string()];
        header.extend((1..=self.n_points()).map(|j| format!("t_{j}")));
        w.write_record(&header).map_err(io)?;
        let mut grid = vec!["grid".to_string(), String::new()];
        grid.extend(self.grid.iter().map(f64::to_string));
        w.write_record(&grid).map_err(io)?;
        for ((id, y), curve) in self.ids.iter().zip(&self.responses).zip(&self.curves) {
            let mut row = vec![id.clone(), y.map_or_else(String::new, |v| v.to_string())];
            row.extend(curve.iter().map(f64::to_string));
            w.write_record(&row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(File::create(path)?)
    }

    /// The table on `n` equally spaced points spanning the current grid.
    pub fn resample(&self, n: usize) -> Result<Self> {
        if self.n_points() == n && is_equally_spaced(&self.grid) {
            return Ok(self.clone());
        }
        let grid = target_grid(&self.grid, n)?;
        let curves = self
            .curves
            .iter()
            .map(|c| interpolate(&self.grid, c, &grid))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid,
            curves,
            ..self.clone()
        })
    }
}

fn is_equally_spaced(grid: &[f64]) -> bool {
    let span = grid[grid.len() - 1] - grid[0];
    let step = span / (grid.len() - 1) as f64;
    grid.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * span.abs())
}

/// `n` equally spaced points from the first to the last grid point.
pub fn target_grid(grid: &[f64], n: usize) -> Result<Vec<f64>> {
    check_grid(grid)?;
    if n < 2 {
        return Err(Error::InvalidConfig("target grid needs at least two points".into()));
    }
    let (a, b) = (grid[0], grid[grid.len() - 1]);
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k == n - 1 { b } else { a + step * k as f64 })
        .collect())
}

/// Piecewise-linear interpolation of `(grid, values)` at `at`; points outside
/// the grid are rejected.
pub fn interpolate(grid: &[f64], values: &[f64], at: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    if values.len() != grid.len() {
        return Err(Error::InvalidShape(format!(
            "{} values for a grid of {}",
            values.len(),
            grid.len()
        )));
    }
    let last = grid.len() - 1;
    at.iter()
        .map(|&t| {
            if !(t >= grid[0] && t <= grid[last]) {
                return Err(Error::InvalidGrid(format!("{t} lies outside the source grid")));
            }
            let k = grid.partition_point(|&g| g <= t).clamp(1, last);
            let (t0, t1) = (grid[k - 1], grid[k]);
            if t == t1 {
                return Ok(values[k]);
            }
            let w = (t - t0) / (t1 - t0);
            Ok(values[k - 1] + w * (values[k] - values[k - 1]))
        })
        .collect()
}

/// Reads a curve table and resamples it onto `target_n` equally spaced
/// points; `target_n` must be a power of two at least half the source length.
pub fn ingest(path: impl AsRef<Path>, target_n: usize) -> Result<CurveTable> {
    let table = CurveTable::read(path)?;
    ingest_table(&table, target_n)
}

pub fn ingest_table(table: &CurveTable, target_n: usize) -> Result<CurveTable> {
    if !target_n.is_power_of_two() || target_n < 2 {
        return Err(Error::InvalidConfig(format!("target length {target_n} is not a power of two")));
    }
    if 2 * target_n < table.n_points() {
        return Err(Error::InvalidConfig(format!(
            "target length {target_n} is below half the source length {}",
            table.n_points()
        )));
    }
    table.resample(target_n)
}
