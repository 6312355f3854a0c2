//! Patch orderings over 2D grids.
//!
//! An order assigns each cell (row-major index) a scalar position. Integer
//! orders are permutations of `0..N`; fractional orders arise once a context
//! bias is added.
//!
//! The generalized Hilbert ("gilbert") construction follows Jakub Červený's
//! gilbert2d algorithm (BSD 2-Clause, Copyright (c) 2018, Jakub Červený).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridShape;

/// Scalar position per grid cell, indexed by cell (not by rank).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchOrder {
    shape: GridShape,
    positions: Vec<f64>,
}

impl PatchOrder {
    pub fn new(shape: GridShape, positions: Vec<f64>) -> Result<Self> {
        if positions.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                actual: positions.len(),
            });
        }
        if let Some(cell) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(cell));
        }
        Ok(Self { shape, positions })
    }

    /// Builds an order from a visit sequence: `path[rank] = cell`.
    pub fn from_path(shape: GridShape, path: &[usize]) -> Result<Self> {
        let n = shape.len();
        if path.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: path.len(),
            });
        }
        let mut positions = vec![f64::NAN; n];
        for (rank, &cell) in path.iter().enumerate() {
            if cell >= n || !positions[cell].is_nan() {
                return Err(Error::NotPermutation(n));
            }
            positions[cell] = rank as f64;
        }
        Ok(Self { shape, positions })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    /// Copy with every position multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            shape: self.shape,
            positions: self.positions.iter().map(|p| p * factor).collect(),
        }
    }

    pub fn is_permutation(&self) -> bool {
        let n = self.positions.len();
        let mut seen = vec![false; n];
        for &p in &self.positions {
            if p.fract() != 0.0 || p < 0.0 || p >= n as f64 {
                return false;
            }
            let idx = p as usize;
            if seen[idx] {
                return false;
            }
            seen[idx] = true;
        }
        true
    }

    /// Cells in visit order. Equal positions are broken by cell index.
    pub fn ranked_cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = (0..self.positions.len()).collect();
        cells.sort_by(|&a, &b| self.positions[a].total_cmp(&self.positions[b]));
        cells
    }
}

/// Which static order to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKind {
    Zigzag,
    Hilbert,
    Gilbert,
}

impl OrderKind {
    pub fn build(self, shape: GridShape) -> Result<PatchOrder> {
        match self {
            OrderKind::Zigzag => Ok(zigzag_order(shape)),
            OrderKind::Hilbert => hilbert_order(shape),
            OrderKind::Gilbert => Ok(gilbert_order(shape)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrderKind::Zigzag => "zigzag",
            OrderKind::Hilbert => "hilbert",
            OrderKind::Gilbert => "gilbert",
        }
    }
}

impl std::str::FromStr for OrderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "zigzag" => Ok(OrderKind::Zigzag),
            "hilbert" => Ok(OrderKind::Hilbert),
            "gilbert" => Ok(OrderKind::Gilbert),
            other => Err(format!("unknown order kind `{other}`")),
        }
    }
}

/// Row-major raster order.
pub fn zigzag_order(shape: GridShape) -> PatchOrder {
    PatchOrder {
        shape,
        positions: (0..shape.len()).map(|c| c as f64).collect(),
    }
}

/// Generalized Hilbert order for any rectangle. Starts at cell (0, 0) and
/// runs along the longer axis.
pub fn gilbert_order(shape: GridShape) -> PatchOrder {
    let path = gilbert_path(shape);
    PatchOrder::from_path(shape, &path).expect("gilbert path visits every cell once")
}

/// Visit sequence of the generalized Hilbert curve as row-major cell indices.
pub fn gilbert_path(shape: GridShape) -> Vec<usize> {
    let (w, h) = (shape.width() as i64, shape.height() as i64);
    let mut path = Vec::with_capacity(shape.len());
    let mut push = |x: i64, y: i64| path.push(shape.cell(y as usize, x as usize));
    if w >= h {
        gilbert_rec(&mut push, 0, 0, (w, 0), (0, h));
    } else {
        gilbert_rec(&mut push, 0, 0, (0, h), (w, 0));
    }
    path
}

/// `a` is the major axis vector, `b` the minor one; coordinates are (x = col, y = row).
fn gilbert_rec(
    visit: &mut impl FnMut(i64, i64),
    mut x: i64,
    mut y: i64,
    a: (i64, i64),
    b: (i64, i64),
) {
    let (ax, ay) = a;
    let (bx, by) = b;
    let w = (ax + ay).abs();
    let h = (bx + by).abs();
    let (dax, day) = (ax.signum(), ay.signum());
    let (dbx, dby) = (bx.signum(), by.signum());

    if h == 1 {
        for _ in 0..w {
            visit(x, y);
            x += dax;
            y += day;
        }
        return;
    }
    if w == 1 {
        for _ in 0..h {
            visit(x, y);
            x += dbx;
            y += dby;
        }
        return;
    }

    let (mut ax2, mut ay2) = (ax / 2, ay / 2);
    let (mut bx2, mut by2) = (bx / 2, by / 2);
    let w2 = (ax2 + ay2).abs();
    let h2 = (bx2 + by2).abs();

    if 2 * w > 3 * h {
        // prefer even steps
        if w2 % 2 != 0 && w > 2 {
            ax2 += dax;
            ay2 += day;
        }
        // long region: two halves along the major axis
        gilbert_rec(visit, x, y, (ax2, ay2), b);
        gilbert_rec(visit, x + ax2, y + ay2, (ax - ax2, ay - ay2), b);
    } else {
        if h2 % 2 != 0 && h > 2 {
            bx2 += dbx;
            by2 += dby;
        }
        // up, across, back down
        gilbert_rec(visit, x, y, (bx2, by2), (ax2, ay2));
        gilbert_rec(visit, x + bx2, y + by2, a, (bx - bx2, by - by2));
        gilbert_rec(
            visit,
            x + (ax - dax) + (bx2 - dbx),
            y + (ay - day) + (by2 - dby),
            (-bx2, -by2),
            (-(ax - ax2), -(ay - ay2)),
        );
    }
}

/// Classic Hilbert order on a `2^n x 2^n` grid.
pub fn hilbert_order(shape: GridShape) -> Result<PatchOrder> {
    let side = shape.width();
    if shape.width() != shape.height() || !side.is_power_of_two() {
        return Err(Error::NotPowerOfTwoSquare {
            width: shape.width(),
            height: shape.height(),
        });
    }
    let path: Vec<usize> = (0..shape.len())
        .map(|d| {
            let (x, y) = hilbert_d2xy(side, d);
            shape.cell(y, x)
        })
        .collect();
    PatchOrder::from_path(shape, &path)
}

fn hilbert_d2xy(side: usize, d: usize) -> (usize, usize) {
    let (mut x, mut y) = (0usize, 0usize);
    let mut t = d;
    let mut s = 1;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub is_permutation: bool,
    /// Largest Chebyshev distance between consecutively ranked cells.
    pub max_step: usize,
    /// Only defined for permutation orders.
    pub locality_score: Option<f64>,
}

pub fn validate_order(order: &PatchOrder) -> OrderReport {
    let is_permutation = order.is_permutation();
    let shape = order.shape();
    let ranked = order.ranked_cells();
    let max_step = ranked
        .windows(2)
        .map(|w| shape.chebyshev(w[0], w[1]))
        .max()
        .unwrap_or(0);
    OrderReport {
        is_permutation,
        max_step,
        locality_score: locality_score(order).ok(),
    }
}

/// Mean absolute position gap over all 4-adjacent cell pairs. Lower is better.
pub fn locality_score(order: &PatchOrder) -> Result<f64> {
    if !order.is_permutation() {
        return Err(Error::NotPermutation(order.positions.len()));
    }
    let p = order.positions();
    let (sum, count) = order
        .shape()
        .adjacent_pairs()
        .fold((0.0, 0usize), |(s, n), (a, b)| (s + (p[a] - p[b]).abs(), n + 1));
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}
