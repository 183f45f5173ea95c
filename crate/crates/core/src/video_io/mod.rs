//! Raw video ingestion and planar frame types.
//!
//! Frames are held as independent planes (Y, U, V or a single luma plane).
//! Every downstream stage operates on one plane at a time.

mod raw;
mod y4m;

pub use raw::{read_raw, write_raw};
pub use y4m::{read_y4m, write_y4m};

use crate::error::{Error, Result};

/// A row-major 2-D array of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy + Default> Plane<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![T::default(); width * height],
        }
    }
}

impl<T: Copy> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Samples `f(x, y)` in raster order.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} plane",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Sample lookup with coordinates clamped to the plane edges.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, mut f: impl FnMut(T) -> U) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Plane<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Edge-replicates the right and bottom borders up to the given size.
    pub fn extend_to(&self, width: usize, height: usize) -> Self {
        assert!(width >= self.width && height >= self.height);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let row = self.row(y.min(self.height - 1));
            data.extend_from_slice(row);
            let last = row[self.width - 1];
            data.extend(std::iter::repeat_n(last, width - self.width));
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Edge-replicates right/bottom so both dimensions are multiples of `multiple`.
    pub fn pad_to_multiple(&self, multiple: usize) -> Self {
        let m = multiple.max(1);
        self.extend_to(self.width.div_ceil(m) * m, self.height.div_ceil(m) * m)
    }

    /// Top-left `width`×`height` window.
    pub fn crop(&self, width: usize, height: usize) -> Self {
        self.sub_plane(0, 0, width, height)
    }

    pub fn sub_plane(&self, x0: usize, y0: usize, width: usize, height: usize) -> Self {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + width]);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn put_sub_plane(&mut self, x0: usize, y0: usize, src: &Plane<T>) {
        assert!(x0 + src.width <= self.width && y0 + src.height <= self.height);
        for y in 0..src.height {
            let dst = (y0 + y) * self.width + x0;
            self.data[dst..dst + src.width].copy_from_slice(src.row(y));
        }
    }
}

/// Integer sample plane.
pub type SamplePlane = Plane<u16>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChromaMode {
    Yuv420,
    Yuv444,
    Mono,
}

impl ChromaMode {
    pub fn plane_count(self) -> usize {
        match self {
            ChromaMode::Mono => 1,
            _ => 3,
        }
    }

    /// Dimensions of plane `index` for a picture of `width`×`height` luma samples.
    pub fn plane_dims(self, index: usize, width: usize, height: usize) -> (usize, usize) {
        match (self, index) {
            (_, 0) | (ChromaMode::Yuv444, _) => (width, height),
            (ChromaMode::Yuv420, _) => (width.div_ceil(2), height.div_ceil(2)),
            (ChromaMode::Mono, _) => (0, 0),
        }
    }

    /// Horizontal and vertical subsampling shift of plane `index`.
    pub fn subsampling(self, index: usize) -> (u32, u32) {
        match (self, index) {
            (ChromaMode::Yuv420, 1..) => (1, 1),
            _ => (0, 0),
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            ChromaMode::Yuv420 => 0,
            ChromaMode::Yuv444 => 1,
            ChromaMode::Mono => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ChromaMode::Yuv420),
            1 => Some(ChromaMode::Yuv444),
            2 => Some(ChromaMode::Mono),
            _ => None,
        }
    }
}

impl std::str::FromStr for ChromaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "420" | "4:2:0" | "yuv420" => Ok(ChromaMode::Yuv420),
            "444" | "4:4:4" | "yuv444" => Ok(ChromaMode::Yuv444),
            "mono" | "400" | "gray" => Ok(ChromaMode::Mono),
            other => Err(Error::UnsupportedChroma(other.to_string())),
        }
    }
}

/// Frames per second as a ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub const fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::new(25, 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub planes: Vec<SamplePlane>,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma: ChromaMode,
}

impl Frame {
    /// Creates a frame after checking plane geometry and sample range.
    pub fn new(
        planes: Vec<SamplePlane>,
        width: usize,
        height: usize,
        bit_depth: u8,
        chroma: ChromaMode,
    ) -> Result<Self> {
        if !(8..=16).contains(&bit_depth) {
            return Err(Error::InvalidConfig(format!("bit depth {bit_depth}")));
        }
        if planes.len() != chroma.plane_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} planes for {:?}",
                planes.len(),
                chroma
            )));
        }
        for (i, p) in planes.iter().enumerate() {
            let (w, h) = chroma.plane_dims(i, width, height);
            if p.width != w || p.height != h {
                return Err(Error::DimensionMismatch(format!(
                    "plane {i} is {}x{}, expected {w}x{h}",
                    p.width, p.height
                )));
            }
        }
        let max = max_sample(bit_depth);
        if let Some(&v) = planes
            .iter()
            .flat_map(|p| p.data.iter())
            .find(|&&v| v > max)
        {
            return Err(Error::SampleOutOfRange {
                value: v as u32,
                bit_depth,
            });
        }
        Ok(Self {
            planes,
            width,
            height,
            bit_depth,
            chroma,
        })
    }

    /// A frame with every sample set to the mid-level of its range.
    pub fn gray(width: usize, height: usize, bit_depth: u8, chroma: ChromaMode) -> Self {
        let mid = 1u16 << (bit_depth - 1);
        let planes = (0..chroma.plane_count())
            .map(|i| {
                let (w, h) = chroma.plane_dims(i, width, height);
                Plane::filled(w, h, mid)
            })
            .collect();
        Self {
            planes,
            width,
            height,
            bit_depth,
            chroma,
        }
    }

    pub fn luma(&self) -> &SamplePlane {
        &self.planes[0]
    }

    pub fn byte_len(&self) -> usize {
        let bps = if self.bit_depth > 8 { 2 } else { 1 };
        self.planes.iter().map(|p| p.data.len() * bps).sum()
    }
}

pub fn max_sample(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

/// A frame padded on the right/bottom, remembering the original picture size.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedFrame {
    pub frame: Frame,
    pub orig_width: usize,
    pub orig_height: usize,
}

impl PaddedFrame {
    pub fn crop(&self) -> Frame {
        let f = &self.frame;
        let planes = f
            .planes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (w, h) = f.chroma.plane_dims(i, self.orig_width, self.orig_height);
                p.crop(w, h)
            })
            .collect();
        Frame {
            planes,
            width: self.orig_width,
            height: self.orig_height,
            bit_depth: f.bit_depth,
            chroma: f.chroma,
        }
    }
}

/// Pads the picture to the next multiple of `multiple` by edge replication.
///
/// Chroma planes follow the padded luma geometry, so the result still obeys
/// the chroma-mode plane dimension rule.
pub fn pad_to_multiple(frame: &Frame, multiple: usize) -> PaddedFrame {
    let m = multiple.max(1);
    let width = frame.width.div_ceil(m) * m;
    let height = frame.height.div_ceil(m) * m;
    let planes = frame
        .planes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (w, h) = frame.chroma.plane_dims(i, width, height);
            p.extend_to(w, h)
        })
        .collect();
    PaddedFrame {
        frame: Frame {
            planes,
            width,
            height,
            bit_depth: frame.bit_depth,
            chroma: frame.chroma,
        },
        orig_width: frame.width,
        orig_height: frame.height,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub frame_rate: Rational,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, frame_rate: Rational) -> Result<Self> {
        if let Some(first) = frames.first() {
            for f in &frames[1..] {
                if f.width != first.width
                    || f.height != first.height
                    || f.bit_depth != first.bit_depth
                    || f.chroma != first.chroma
                {
                    return Err(Error::DimensionMismatch(
                        "frames differ in geometry or format".into(),
                    ));
                }
            }
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> SamplePlane {
        Plane::from_vec(w, h, (0..w * h).map(|i| (i % 251) as u16).collect()).unwrap()
    }

    #[test]
    fn pad_1080p_to_64() {
        let f = Frame::gray(1920, 1080, 8, ChromaMode::Yuv420);
        let p = pad_to_multiple(&f, 64);
        assert_eq!((p.frame.width, p.frame.height), (1920, 1088));
        assert_eq!(p.frame.planes[1].height, 544);
        assert_eq!(p.crop(), f);
    }

    #[test]
    fn pad_aligned_is_identity() {
        let f = Frame::new(vec![ramp(16, 8)], 16, 8, 8, ChromaMode::Mono).unwrap();
        let p = pad_to_multiple(&f, 8);
        assert_eq!(p.frame, f);
    }

    #[test]
    fn pad_5x5_replicates_border() {
        let plane = ramp(5, 5);
        let padded = plane.pad_to_multiple(4);
        assert_eq!((padded.width, padded.height), (8, 8));
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(padded.get(x, y), plane.get(x.min(4), y.min(4)));
            }
        }
        assert_eq!(padded.crop(5, 5), plane);
    }

    #[test]
    fn frame_rejects_out_of_range_samples() {
        let p = Plane::filled(2, 2, 1024u16);
        let err = Frame::new(vec![p], 2, 2, 10, ChromaMode::Mono).unwrap_err();
        assert!(matches!(err, Error::SampleOutOfRange { .. }));
    }

    #[test]
    fn frame_rejects_bad_chroma_dims() {
        let y = Plane::filled(4, 4, 0u16);
        let c = Plane::filled(4, 4, 0u16);
        assert!(Frame::new(vec![y, c.clone(), c], 4, 4, 8, ChromaMode::Yuv420).is_err());
    }

    #[test]
    fn odd_420_chroma_dims_round_up() {
        assert_eq!(ChromaMode::Yuv420.plane_dims(1, 5, 3), (3, 2));
    }
}
