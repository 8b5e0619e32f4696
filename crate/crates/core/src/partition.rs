//! Fixed quadtree geometry: a frame tiled by 2Nx2N coding blocks at one depth,
//! each split into four NxN sub-blocks.
//!
//! | depth | CB size (2N) | sub-block (N) |
//! |-------|--------------|---------------|
//! | 0     | 64           | 32            |
//! | 1     | 32           | 16            |
//! | 2     | 16           | 8             |
//!
//! Frames whose dimensions are not multiples of the CB size are analysed and
//! coded on an edge-padded copy; [`BlockGrid::padded_width`] and
//! [`BlockGrid::padded_height`] give that copy's size. One prediction unit per
//! CB, so grid indices double as PU indices.

use crate::error::{invalid, Result};

pub const MAX_DEPTH: u8 = 2;

/// Square block: top-left corner and side length in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockRef {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub depth: u8,
}

impl BlockRef {
    /// `size` must be a power of two.
    pub fn new(x: usize, y: usize, size: usize, depth: u8) -> Result<Self> {
        if !size.is_power_of_two() {
            return Err(invalid(format!("block size {} is not a power of two", size)));
        }
        Ok(BlockRef { x, y, size, depth })
    }

    /// Quadrants in order top-left, top-right, bottom-left, bottom-right.
    ///
    /// Panics on a 1x1 block.
    pub fn sub_blocks(&self) -> [BlockRef; 4] {
        assert!(self.size >= 2, "cannot split a {}x{} block", self.size, self.size);
        let n = self.size / 2;
        let d = self.depth + 1;
        [
            BlockRef { x: self.x, y: self.y, size: n, depth: d },
            BlockRef { x: self.x + n, y: self.y, size: n, depth: d },
            BlockRef { x: self.x, y: self.y + n, size: n, depth: d },
            BlockRef { x: self.x + n, y: self.y + n, size: n, depth: d },
        ]
    }

    pub fn area(&self) -> usize {
        self.size * self.size
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.size && y >= self.y && y < self.y + self.size
    }
}

pub fn cb_size_for_depth(depth: u8) -> Result<usize> {
    if depth > MAX_DEPTH {
        return Err(invalid(format!("CB depth {} outside 0..=2", depth)));
    }
    Ok(64 >> depth)
}

/// Raster-ordered CB tiling of a (padded) frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    width: usize,
    height: usize,
    depth: u8,
    cols: usize,
    rows: usize,
    blocks: Vec<BlockRef>,
}

impl BlockGrid {
    pub fn build(width: usize, height: usize, depth: u8) -> Result<Self> {
        let size = cb_size_for_depth(depth)?;
        if width == 0 || height == 0 {
            return Err(invalid("frame dimensions must be at least 1x1"));
        }
        let cols = width.div_ceil(size);
        let rows = height.div_ceil(size);
        let blocks = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| BlockRef { x: c * size, y: r * size, size, depth }))
            .collect();
        Ok(BlockGrid { width, height, depth, cols, rows, blocks })
    }

    pub fn blocks(&self) -> &[BlockRef] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn cb_size(&self) -> usize {
        64 >> self.depth
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Unpadded frame width.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn padded_width(&self) -> usize {
        self.cols * self.cb_size()
    }

    pub fn padded_height(&self) -> usize {
        self.rows * self.cb_size()
    }

    /// True when part of the block lies in the padding.
    pub fn is_partial(&self, b: &BlockRef) -> bool {
        b.x + b.size > self.width || b.y + b.size > self.height
    }

    /// Index of the CB containing sample `(x, y)` of the padded frame.
    pub fn block_index_at(&self, x: usize, y: usize) -> usize {
        let s = self.cb_size();
        (y / s) * self.cols + x / s
    }
}
