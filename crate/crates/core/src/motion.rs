//! Block-matching motion estimation and constant-velocity extrapolation.
//!
//! Vectors are content displacements from the reference to the current
//! plane: `cur(x, y) ≈ ref(x − dx, y − dy)`. Estimating from x̂ₜ₋₂ to x̂ₜ₋₁
//! therefore yields a per-tile velocity, and warping x̂ₜ₋₁ by that same
//! vector extrapolates one step forward. Nothing here is transmitted; the
//! decoder recomputes the field from its own reconstructions, so the search
//! order and tie-break must stay fixed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::video_io::SamplePlane;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: Self = Self { dx: 0, dy: 0 };

    pub fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionField {
    pub mblock: usize,
    pub cols: usize,
    pub rows: usize,
    pub vectors: Vec<MotionVector>,
}

impl MotionField {
    pub fn uniform(mblock: usize, cols: usize, rows: usize, mv: MotionVector) -> Self {
        Self {
            mblock,
            cols,
            rows,
            vectors: vec![mv; cols * rows],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> MotionVector {
        self.vectors[row * self.cols + col]
    }

    /// Vector governing pixel (x, y); tiles past the field edge reuse the
    /// nearest tile.
    #[inline]
    fn at_pixel(&self, x: usize, y: usize) -> MotionVector {
        let c = (x / self.mblock).min(self.cols - 1);
        let r = (y / self.mblock).min(self.rows - 1);
        self.vectors[r * self.cols + c]
    }

    /// Derives the field for a subsampled plane: tile size and vectors are
    /// scaled by the subsampling shift (vectors rounded half away from zero).
    pub fn subsampled(&self, shift_x: u32, shift_y: u32) -> Self {
        if shift_x == 0 && shift_y == 0 {
            return self.clone();
        }
        let scale = |v: i32, s: u32| (v as f64 / (1 << s) as f64).round() as i32;
        Self {
            mblock: (self.mblock >> shift_x.max(shift_y)).max(1),
            cols: self.cols,
            rows: self.rows,
            vectors: self
                .vectors
                .iter()
                .map(|v| MotionVector::new(scale(v.dx, shift_x), scale(v.dy, shift_y)))
                .collect(),
        }
    }
}

fn sad_at(
    reference: &SamplePlane,
    current: &SamplePlane,
    x0: usize,
    y0: usize,
    size: usize,
    mv: MotionVector,
) -> u64 {
    let rx = x0 as isize - mv.dx as isize;
    let ry = y0 as isize - mv.dy as isize;
    let inside = rx >= 0
        && ry >= 0
        && rx as usize + size <= reference.width
        && ry as usize + size <= reference.height;
    let mut sad = 0u64;
    if inside {
        let (rx, ry) = (rx as usize, ry as usize);
        for y in 0..size {
            let cur = &current.data[(y0 + y) * current.width + x0..][..size];
            let rf = &reference.data[(ry + y) * reference.width + rx..][..size];
            sad += cur
                .iter()
                .zip(rf)
                .map(|(&a, &b)| (a as i32 - b as i32).unsigned_abs() as u64)
                .sum::<u64>();
        }
    } else {
        for y in 0..size {
            for x in 0..size {
                let a = current.get(x0 + x, y0 + y) as i32;
                let b = reference.get_clamped(rx + x as isize, ry + y as isize) as i32;
                sad += (a - b).unsigned_abs() as u64;
            }
        }
    }
    sad
}

/// Candidate order key: SAD, then |dx|+|dy|, then dy, then dx.
fn better(a: (u64, MotionVector), b: (u64, MotionVector)) -> bool {
    let key = |(s, v): (u64, MotionVector)| (s, v.dx.abs() + v.dy.abs(), v.dy, v.dx);
    key(a) < key(b)
}

/// Exhaustive ±`search_range` block matching over `mblock` tiles of `current`.
pub fn estimate_motion(
    reference: &SamplePlane,
    current: &SamplePlane,
    search_range: usize,
    mblock: usize,
) -> Result<MotionField> {
    if !reference.same_dims(current) {
        return Err(Error::DimensionMismatch(format!(
            "motion planes {}x{} vs {}x{}",
            reference.width, reference.height, current.width, current.height
        )));
    }
    if mblock == 0
        || !current.width.is_multiple_of(mblock)
        || !current.height.is_multiple_of(mblock)
    {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} plane not aligned to motion block {mblock}",
            current.width, current.height
        )));
    }
    let cols = current.width / mblock;
    let rows = current.height / mblock;
    let r = search_range as i32;
    let vectors = (0..rows * cols)
        .into_par_iter()
        .map(|t| {
            let (x0, y0) = ((t % cols) * mblock, (t / cols) * mblock);
            let mut best = (u64::MAX, MotionVector::ZERO);
            for dy in -r..=r {
                for dx in -r..=r {
                    let mv = MotionVector::new(dx, dy);
                    let cand = (sad_at(reference, current, x0, y0, mblock, mv), mv);
                    if better(cand, best) {
                        best = cand;
                    }
                }
            }
            best.1
        })
        .collect();
    Ok(MotionField {
        mblock,
        cols,
        rows,
        vectors,
    })
}

/// Displaces each tile of `frame` by its vector, clamping reads at the edges.
pub fn extrapolate_warp(field: &MotionField, frame: &SamplePlane) -> SamplePlane {
    let mut out = frame.clone();
    for y in 0..frame.height {
        for x in 0..frame.width {
            let mv = field.at_pixel(x, y);
            let v = frame.get_clamped(x as isize - mv.dx as isize, y as isize - mv.dy as isize);
            out.data[y * frame.width + x] = v;
        }
    }
    out
}
