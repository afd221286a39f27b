//! Resistive crossbar readout.
//!
//! Nodal model of a selector-less crossbar read one whole row at a time.
//! Each cell `(i, j)` has a wordline node `W(i, j)` and a bitline node
//! `B(i, j)` joined by the cell resistance. Neighbouring wordline nodes in a
//! row and neighbouring bitline nodes in a column are joined by one wire
//! segment `Rw`. Every wordline is driven from its column-0 end through one
//! segment: the selected row at `v_read`, all others at 0 V. Every bitline is
//! terminated through one segment into a virtual-ground sense amplifier at the
//! configured edge. The driver and sense terminals are fixed potentials and
//! are eliminated into the right-hand side, leaving `2 * rows * cols`
//! unknowns.
//!
//! The conductance matrix does not depend on which row is selected, so
//! [`read_array`] factors it once per stored pattern.

pub mod solver;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use solver::{pcg, BandCholesky, CsrMatrix};

/// Arrays with at most this many cells are factored directly.
pub const MAX_DIRECT_CELLS: usize = 64 * 64;

/// Which end of the bitlines the sense amplifiers sit on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SenseEdge {
    /// Row 0 side, next to the first wordline.
    #[default]
    Top,
    /// Row `rows - 1` side.
    Bottom,
}

/// Bias of the wordlines that are not being read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnselectedRows {
    /// Driven to 0 V through their terminal segment.
    #[default]
    Grounded,
    /// Disconnected from any driver.
    Floating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Wire resistance per cell segment, ohms.
    pub wire_resistance: f64,
    pub r_lrs: f64,
    pub r_hrs: f64,
    pub v_read: f64,
    pub solver_rel_tol: f64,
    pub sense_edge: SenseEdge,
    pub unselected_rows: UnselectedRows,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self {
            rows: 32,
            cols: 32,
            wire_resistance: 25.0,
            r_lrs: 1e3,
            r_hrs: 1e6,
            v_read: 1.0,
            solver_rel_tol: 1e-10,
            sense_edge: SenseEdge::Top,
            unselected_rows: UnselectedRows::Grounded,
        }
    }
}

impl CrossbarConfig {
    pub fn with_size(rows: usize, cols: usize, wire_resistance: f64) -> Self {
        Self { rows, cols, wire_resistance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return bad("array must have at least one row and column");
        }
        if !(self.wire_resistance > 0.0 && self.r_lrs > 0.0 && self.r_hrs > 0.0) {
            return bad("resistances must be positive");
        }
        if self.r_hrs <= self.r_lrs {
            return bad("r_hrs must exceed r_lrs");
        }
        if !(self.solver_rel_tol > 0.0) || !self.v_read.is_finite() {
            return bad("solver tolerance must be positive and v_read finite");
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    fn cell_resistance(&self, bit: u8) -> f64 {
        if bit & 1 == 1 {
            self.r_hrs
        } else {
            self.r_lrs
        }
    }

    fn sense_row(&self) -> usize {
        match self.sense_edge {
            SenseEdge::Top => 0,
            SenseEdge::Bottom => self.rows - 1,
        }
    }
}

/// Stored bits, row-major. 1 is the high-resistance state, 0 the low one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<u8>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, got: bits.len() });
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn filled(rows: usize, cols: usize, bit: u8) -> Self {
        Self { rows, cols, bits: vec![bit; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.cols + j]
    }
}

/// Sensed read currents in amperes: entry `(i, j)` is column `j` while row `i` is read.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentMap {
    pub rows: usize,
    pub cols: usize,
    pub amps: Vec<f64>,
}

impl CurrentMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.amps[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.amps[i * self.cols..(i + 1) * self.cols]
    }

    /// Writes `row,col,amps` lines with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,amps")?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                writeln!(out, "{},{},{:e}", i, j, self.get(i, j))?;
            }
        }
        Ok(())
    }
}

/// The assembled nodal system for one selected row.
#[derive(Clone, Debug)]
pub struct NodalSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    layout: Layout,
}

/// Unknown ordering. Wordline and bitline nodes of a cell are adjacent, and
/// cells are enumerated along the shorter dimension first to keep the band narrow.
#[derive(Clone, Copy, Debug)]
struct Layout {
    rows: usize,
    cols: usize,
    row_major: bool,
}

impl Layout {
    fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_major: cols <= rows }
    }

    fn cell(&self, i: usize, j: usize) -> usize {
        if self.row_major {
            i * self.cols + j
        } else {
            j * self.rows + i
        }
    }

    fn w(&self, i: usize, j: usize) -> usize {
        2 * self.cell(i, j)
    }

    fn b(&self, i: usize, j: usize) -> usize {
        2 * self.cell(i, j) + 1
    }
}

// `driven` lists the rows whose driver segment is part of the matrix.
fn assemble_matrix(cfg: &CrossbarConfig, bits: &BitMatrix, driven: &[usize]) -> (CsrMatrix, Layout) {
    let (rows, cols) = (cfg.rows, cfg.cols);
    let layout = Layout::new(rows, cols);
    let gw = 1.0 / cfg.wire_resistance;
    let mut t = Vec::with_capacity(rows * cols * 10);
    let mut link = |a: usize, b: usize, g: f64| {
        t.push((a, a, g));
        t.push((b, b, g));
        t.push((a, b, -g));
        t.push((b, a, -g));
    };
    for i in 0..rows {
        for j in 0..cols {
            let g = 1.0 / cfg.cell_resistance(bits.get(i, j));
            link(layout.w(i, j), layout.b(i, j), g);
            if j + 1 < cols {
                link(layout.w(i, j), layout.w(i, j + 1), gw);
            }
            if i + 1 < rows {
                link(layout.b(i, j), layout.b(i + 1, j), gw);
            }
        }
    }
    // terminal segments to fixed potentials
    let sense = cfg.sense_row();
    for &i in driven {
        t.push((layout.w(i, 0), layout.w(i, 0), gw));
    }
    for j in 0..cols {
        t.push((layout.b(sense, j), layout.b(sense, j), gw));
    }
    (CsrMatrix::from_triplets(2 * rows * cols, t), layout)
}

fn driver_rhs(cfg: &CrossbarConfig, layout: &Layout, selected_row: usize) -> Vec<f64> {
    let mut rhs = vec![0.0; 2 * cfg.cells()];
    rhs[layout.w(selected_row, 0)] = cfg.v_read / cfg.wire_resistance;
    rhs
}

fn check_inputs(cfg: &CrossbarConfig, bits: &BitMatrix) -> Result<()> {
    cfg.validate()?;
    if bits.rows != cfg.rows || bits.cols != cfg.cols {
        return Err(Error::LengthMismatch { expected: cfg.cells(), got: bits.rows * bits.cols });
    }
    Ok(())
}

/// Assembles the reduced nodal system for reading `selected_row`.
pub fn assemble_system(cfg: &CrossbarConfig, bits: &BitMatrix, selected_row: usize) -> Result<NodalSystem> {
    check_inputs(cfg, bits)?;
    if selected_row >= cfg.rows {
        return Err(Error::InvalidConfig(format!("row {selected_row} out of range")));
    }
    let driven: Vec<usize> = match cfg.unselected_rows {
        UnselectedRows::Grounded => (0..cfg.rows).collect(),
        UnselectedRows::Floating => vec![selected_row],
    };
    let (matrix, layout) = assemble_matrix(cfg, bits, &driven);
    let rhs = driver_rhs(cfg, &layout, selected_row);
    Ok(NodalSystem { matrix, rhs, layout })
}

/// Node voltages and terminal currents of one row read.
#[derive(Clone, Debug)]
pub struct RowSolution {
    /// Current delivered to each column's sense terminal, amperes.
    pub sensed: Vec<f64>,
    /// Current drawn from the selected row's driver.
    pub source_current: f64,
    /// Current sunk by the grounded drivers of the unselected rows.
    pub unselected_driver_current: f64,
    pub relative_residual: f64,
}

impl NodalSystem {
    pub fn unknowns(&self) -> usize {
        self.rhs.len()
    }

    pub fn wordline_voltage(&self, v: &[f64], i: usize, j: usize) -> f64 {
        v[self.layout.w(i, j)]
    }

    pub fn bitline_voltage(&self, v: &[f64], i: usize, j: usize) -> f64 {
        v[self.layout.b(i, j)]
    }
}

/// Reusable factorization of one stored pattern.
struct Reader<'a> {
    cfg: &'a CrossbarConfig,
    bits: &'a BitMatrix,
    matrix: CsrMatrix,
    layout: Layout,
    chol: Option<BandCholesky>,
}

impl<'a> Reader<'a> {
    fn new(cfg: &'a CrossbarConfig, bits: &'a BitMatrix) -> Result<Self> {
        check_inputs(cfg, bits)?;
        // With floating unselected rows the factored matrix has no driver
        // segments; the selected driver is added back as a rank-one update.
        let driven: Vec<usize> = match cfg.unselected_rows {
            UnselectedRows::Grounded => (0..cfg.rows).collect(),
            UnselectedRows::Floating => Vec::new(),
        };
        let (matrix, layout) = assemble_matrix(cfg, bits, &driven);
        let chol = if cfg.cells() <= MAX_DIRECT_CELLS { Some(BandCholesky::factor(&matrix)?) } else { None };
        Ok(Self { cfg, bits, matrix, layout, chol })
    }

    // Solves `(A + g e_k e_k^T) x = rhs` when `extra = Some((k, g))`.
    fn solve_with(&self, rhs: &[f64], extra: Option<(usize, f64)>) -> Result<(Vec<f64>, f64)> {
        let tol = self.cfg.solver_rel_tol;
        let base = |b: &[f64]| -> Result<Vec<f64>> {
            match &self.chol {
                Some(chol) => {
                    let mut x = b.to_vec();
                    chol.solve(&mut x);
                    Ok(x)
                }
                None => pcg(&self.matrix, b, tol * 0.1, 20 * b.len()),
            }
        };
        let full = |b: &[f64]| -> Result<Vec<f64>> {
            let mut x = base(b)?;
            if let Some((k, g)) = extra {
                let mut e = vec![0.0; b.len()];
                e[k] = 1.0;
                let y = base(&e)?;
                let s = g * x[k] / (1.0 + g * y[k]);
                for (xi, yi) in x.iter_mut().zip(&y) {
                    *xi -= s * yi;
                }
            }
            Ok(x)
        };
        let residual_of = |x: &[f64]| -> Vec<f64> {
            let mut ax = vec![0.0; rhs.len()];
            self.matrix.mul_vec(x, &mut ax);
            if let Some((k, g)) = extra {
                ax[k] += g * x[k];
            }
            rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
        };
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let bnorm = norm(rhs).max(f64::MIN_POSITIVE);
        let mut x = full(rhs)?;
        let mut r = residual_of(&x);
        let mut residual = norm(&r) / bnorm;
        if residual > tol && self.chol.is_some() {
            // one step of iterative refinement
            let d = full(&r)?;
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += di;
            }
            r = residual_of(&x);
            residual = norm(&r) / bnorm;
        }
        if residual > tol {
            return Err(Error::SolverNonConvergence { residual });
        }
        Ok((x, residual))
    }

    fn read_row(&self, selected_row: usize) -> Result<RowSolution> {
        if selected_row >= self.cfg.rows {
            return Err(Error::InvalidConfig(format!("row {selected_row} out of range")));
        }
        let gw = 1.0 / self.cfg.wire_resistance;
        let rhs = driver_rhs(self.cfg, &self.layout, selected_row);
        let extra = match self.cfg.unselected_rows {
            UnselectedRows::Grounded => None,
            UnselectedRows::Floating => Some((self.layout.w(selected_row, 0), gw)),
        };
        let (v, relative_residual) = self.solve_with(&rhs, extra)?;
        // The bitline only meets cells and its sense terminal, so the sensed
        // current equals the sum of the cell currents into that bitline.
        let sensed = (0..self.cfg.cols)
            .map(|j| {
                (0..self.cfg.rows)
                    .map(|i| {
                        let g = 1.0 / self.cfg.cell_resistance(self.bits.get(i, j));
                        g * (v[self.layout.w(i, j)] - v[self.layout.b(i, j)])
                    })
                    .sum()
            })
            .collect();
        let source_current = gw * (self.cfg.v_read - v[self.layout.w(selected_row, 0)]);
        let unselected_driver_current = match self.cfg.unselected_rows {
            UnselectedRows::Grounded => {
                (0..self.cfg.rows).filter(|&i| i != selected_row).map(|i| gw * v[self.layout.w(i, 0)]).sum()
            }
            UnselectedRows::Floating => 0.0,
        };
        Ok(RowSolution { sensed, source_current, unselected_driver_current, relative_residual })
    }
}

/// Reads one row and returns the full terminal bookkeeping.
pub fn read_row_detailed(cfg: &CrossbarConfig, bits: &BitMatrix, selected_row: usize) -> Result<RowSolution> {
    Reader::new(cfg, bits)?.read_row(selected_row)
}

/// Sensed currents of every column while `selected_row` is read.
pub fn read_row(cfg: &CrossbarConfig, bits: &BitMatrix, selected_row: usize) -> Result<Vec<f64>> {
    Ok(read_row_detailed(cfg, bits, selected_row)?.sensed)
}

/// Reads every row in turn.
pub fn read_array(cfg: &CrossbarConfig, bits: &BitMatrix) -> Result<CurrentMap> {
    let reader = Reader::new(cfg, bits)?;
    let mut amps = Vec::with_capacity(cfg.cells());
    for i in 0..cfg.rows {
        amps.extend(reader.read_row(i)?.sensed);
    }
    Ok(CurrentMap { rows: cfg.rows, cols: cfg.cols, amps })
}
