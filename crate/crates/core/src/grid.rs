use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width x height of a patch grid. Cells are indexed row-major:
/// `cell = row * width + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    width: usize,
    height: usize,
}

impl GridShape {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidShape { width, height });
        }
        Ok(Self { width, height })
    }

    /// Square grid with `side` cells per side.
    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    /// `(row, col)` of a cell index.
    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width
    }

    /// Chebyshev (L-infinity) distance between two cells.
    pub fn chebyshev(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb).max(ca.abs_diff(cb))
    }

    /// Manhattan distance between two cells.
    pub fn manhattan(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        ra.abs_diff(rb) + ca.abs_diff(cb)
    }

    /// All unordered 4-adjacent cell pairs: horizontal pairs first, then vertical.
    pub fn adjacent_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let horizontal = (0..self.height).flat_map(move |r| {
            (0..self.width.saturating_sub(1)).map(move |c| (self.cell(r, c), self.cell(r, c + 1)))
        });
        let vertical = (0..self.height.saturating_sub(1)).flat_map(move |r| {
            (0..self.width).map(move |c| (self.cell(r, c), self.cell(r + 1, c)))
        });
        horizontal.chain(vertical)
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}
