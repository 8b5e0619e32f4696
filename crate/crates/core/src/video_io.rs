//! Raw planar RGB 4:4:4 sequences.
//!
//! File layout (no header, no container):
//!
//! ```text
//! frame 0: G plane, B plane, R plane
//! frame 1: G plane, B plane, R plane
//! ...
//! ```
//!
//! Each plane is `width * height` samples in raster order. Bit depth 8 stores
//! one byte per sample; bit depths 10 and 12 store one little-endian `u16` per
//! sample with the unused upper bits zero. On load, samples are masked to the
//! declared bit depth.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

pub const SUPPORTED_BIT_DEPTHS: [u8; 3] = [8, 10, 12];

/// Color channel, in storage and processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    G = 0,
    B = 1,
    R = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::G, Channel::B, Channel::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::G => "G",
            Channel::B => "B",
            Channel::R => "R",
        }
    }
}

/// One channel's samples in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Plane { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if data.len() != width * height {
            return Err(invalid(format!(
                "plane data has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u16) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u16] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Copy extended to `width x height` by replicating the last column and row.
    pub fn edge_padded(&self, width: usize, height: usize) -> Plane {
        assert!(width >= self.width && height >= self.height);
        Plane::from_fn(width, height, |x, y| {
            self.get(x.min(self.width - 1), y.min(self.height - 1))
        })
    }

    /// Top-left `width x height` window.
    pub fn cropped(&self, width: usize, height: usize) -> Plane {
        assert!(width <= self.width && height <= self.height);
        Plane::from_fn(width, height, |x, y| self.get(x, y))
    }
}

/// Three same-sized planes in G, B, R order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    bit_depth: u8,
    planes: [Plane; 3],
}

impl Frame {
    pub fn new(bit_depth: u8, planes: [Plane; 3]) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        let (width, height) = (planes[0].width, planes[0].height);
        if width == 0 || height == 0 {
            return Err(invalid("frame must be at least 1x1"));
        }
        if planes.iter().any(|p| p.width != width || p.height != height) {
            return Err(invalid("all three planes must share dimensions (4:4:4)"));
        }
        let max = max_sample(bit_depth);
        if planes.iter().any(|p| p.data.iter().any(|&s| s > max)) {
            return Err(invalid(format!("sample exceeds {}-bit range", bit_depth)));
        }
        Ok(Frame { width, height, bit_depth, planes })
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: u16) -> Result<Self> {
        Frame::new(bit_depth, std::array::from_fn(|_| Plane::filled(width, height, value)))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn max_sample(&self) -> u16 {
        max_sample(self.bit_depth)
    }

    pub fn plane(&self, c: Channel) -> &Plane {
        &self.planes[c.index()]
    }

    pub fn planes(&self) -> &[Plane; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Plane; 3] {
        self.planes
    }

    pub fn edge_padded(&self, width: usize, height: usize) -> Frame {
        Frame {
            width,
            height,
            bit_depth: self.bit_depth,
            planes: std::array::from_fn(|i| self.planes[i].edge_padded(width, height)),
        }
    }

    pub fn cropped(&self, width: usize, height: usize) -> Frame {
        Frame {
            width,
            height,
            bit_depth: self.bit_depth,
            planes: std::array::from_fn(|i| self.planes[i].cropped(width, height)),
        }
    }

    pub fn bytes_per_sample(&self) -> usize {
        bytes_per_sample(self.bit_depth)
    }
}

/// Ordered frames sharing dimensions and bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    frames: Vec<Frame>,
    pub frame_rate: f64,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>, frame_rate: f64) -> Result<Self> {
        let first = frames.first().ok_or_else(|| invalid("sequence needs at least one frame"))?;
        let (w, h, d) = (first.width, first.height, first.bit_depth);
        if frames.iter().any(|f| f.width != w || f.height != h || f.bit_depth != d) {
            return Err(invalid("frames in a sequence must share dimensions and bit depth"));
        }
        Ok(Sequence { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn bit_depth(&self) -> u8 {
        self.frames[0].bit_depth
    }
}

pub fn max_sample(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

pub fn bytes_per_sample(bit_depth: u8) -> usize {
    if bit_depth <= 8 {
        1
    } else {
        2
    }
}

fn check_bit_depth(bit_depth: u8) -> Result<()> {
    if SUPPORTED_BIT_DEPTHS.contains(&bit_depth) {
        Ok(())
    } else {
        Err(invalid(format!("unsupported bit depth {} (expected 8, 10 or 12)", bit_depth)))
    }
}

/// Byte size of one frame in the raw layout.
pub fn frame_bytes(width: usize, height: usize, bit_depth: u8) -> usize {
    3 * width * height * bytes_per_sample(bit_depth)
}

/// Loads up to `max_frames` frames from a raw planar G/B/R file.
pub fn load_raw(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    bit_depth: u8,
    max_frames: usize,
) -> Result<Sequence> {
    check_bit_depth(bit_depth)?;
    if width == 0 || height == 0 {
        return Err(invalid("width and height must be at least 1"));
    }
    let bytes = fs::read(path.as_ref())?;
    decode_raw(&bytes, width, height, bit_depth, max_frames)
}

pub fn decode_raw(
    bytes: &[u8],
    width: usize,
    height: usize,
    bit_depth: u8,
    max_frames: usize,
) -> Result<Sequence> {
    check_bit_depth(bit_depth)?;
    let frame_size = frame_bytes(width, height, bit_depth);
    if frame_size == 0 || bytes.len() % frame_size != 0 {
        return Err(Error::InputFormat(format!(
            "{} bytes is not a multiple of the {}-byte frame size ({}x{}, {}-bit)",
            bytes.len(),
            frame_size,
            width,
            height,
            bit_depth
        )));
    }
    let available = bytes.len() / frame_size;
    if available == 0 {
        return Err(Error::InputFormat("file contains no frames".into()));
    }
    let count = available.min(max_frames);
    if count == 0 {
        return Err(invalid("max_frames must be at least 1"));
    }
    let mask = max_sample(bit_depth);
    let plane_len = width * height;
    let bps = bytes_per_sample(bit_depth);
    let frames = bytes
        .chunks_exact(frame_size)
        .take(count)
        .map(|chunk| {
            let planes: [Plane; 3] = std::array::from_fn(|c| {
                let raw = &chunk[c * plane_len * bps..(c + 1) * plane_len * bps];
                let data = if bps == 1 {
                    raw.iter().map(|&b| u16::from(b) & mask).collect()
                } else {
                    raw.chunks_exact(2).map(|w| u16::from_le_bytes([w[0], w[1]]) & mask).collect()
                };
                Plane { width, height, data }
            });
            Frame { width, height, bit_depth, planes }
        })
        .collect();
    Sequence::new(frames, 0.0)
}

pub fn encode_raw(seq: &Sequence) -> Vec<u8> {
    let first = &seq.frames[0];
    let mut out = Vec::with_capacity(seq.len() * frame_bytes(first.width, first.height, first.bit_depth));
    for frame in &seq.frames {
        for plane in &frame.planes {
            if frame.bytes_per_sample() == 1 {
                out.extend(plane.data.iter().map(|&s| s as u8));
            } else {
                for &s in &plane.data {
                    out.extend_from_slice(&s.to_le_bytes());
                }
            }
        }
    }
    out
}

/// Writes `seq` in the raw planar layout.
pub fn write_raw(seq: &Sequence, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    w.write_all(&encode_raw(seq))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_bytes_give_zero_frame() {
        let seq = decode_raw(&[0u8; 12], 2, 2, 8, 10).unwrap();
        assert_eq!(seq.len(), 1);
        for c in Channel::ALL {
            assert!(seq.frames()[0].plane(c).data().iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn ten_bit_little_endian_word() {
        let mut bytes = vec![0u8; 3 * 4 * 2];
        bytes[0] = 0xFF;
        bytes[1] = 0x03;
        let seq = decode_raw(&bytes, 2, 2, 10, 1).unwrap();
        assert_eq!(seq.frames()[0].plane(Channel::G).get(0, 0), 1023);
        assert_eq!(seq.frames()[0].plane(Channel::B).get(0, 0), 0);
    }

    #[test]
    fn upper_bits_are_masked() {
        let mut bytes = vec![0u8; 3 * 4 * 2];
        bytes[0] = 0xFF;
        bytes[1] = 0xFF;
        let seq = decode_raw(&bytes, 2, 2, 10, 1).unwrap();
        assert_eq!(seq.frames()[0].plane(Channel::G).get(0, 0), 1023);
    }

    #[test]
    fn truncated_file_is_input_format_error() {
        let err = decode_raw(&[0u8; 13], 2, 2, 8, 1).unwrap_err();
        assert!(matches!(err, Error::InputFormat(_)));
    }

    #[test]
    fn max_frames_limits_output() {
        let seq = decode_raw(&[7u8; 36], 2, 2, 8, 2).unwrap();
        assert_eq!(seq.len(), 2);
    }

    #[test]
    fn unsupported_bit_depth_rejected() {
        assert!(decode_raw(&[0u8; 12], 2, 2, 9, 1).is_err());
        assert!(Frame::filled(2, 2, 16, 0).is_err());
    }

    #[test]
    fn out_of_range_sample_rejected() {
        let planes = std::array::from_fn(|_| Plane::filled(2, 2, 256));
        assert!(Frame::new(8, planes).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let seq = Sequence::new(vec![Frame::filled(2, 2, 8, 1).unwrap()], 30.0).unwrap();
        // A directory cannot be opened as a file.
        let err = write_raw(&seq, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn gradient_sequence_byte_length() {
        let (w, h) = (5, 3);
        for depth in [8u8, 10] {
            let frames = (0..3)
                .map(|n| {
                    let planes = std::array::from_fn(|c| {
                        Plane::from_fn(w, h, |x, y| (x + y + n + c) as u16)
                    });
                    Frame::new(depth, planes).unwrap()
                })
                .collect();
            let seq = Sequence::new(frames, 25.0).unwrap();
            assert_eq!(encode_raw(&seq).len(), 3 * 3 * w * h * bytes_per_sample(depth));
        }
    }

    #[test]
    fn padding_replicates_edges() {
        let p = Plane::from_fn(2, 2, |x, y| (10 * y + x) as u16);
        let q = p.edge_padded(4, 3);
        assert_eq!(q.row(0), &[0, 1, 1, 1]);
        assert_eq!(q.row(2), &[10, 11, 11, 11]);
        assert_eq!(q.cropped(2, 2), p);
    }

    fn arb_sequence() -> impl Strategy<Value = Sequence> {
        (prop::sample::select(SUPPORTED_BIT_DEPTHS.to_vec()), 1usize..6, 1usize..6, 1usize..4)
            .prop_flat_map(|(depth, w, h, n)| {
                let max = max_sample(depth);
                prop::collection::vec(0..=max, 3 * w * h * n).prop_map(move |samples| {
                    let frames = samples
                        .chunks_exact(3 * w * h)
                        .map(|f| {
                            let planes = std::array::from_fn(|c| {
                                Plane::from_vec(w, h, f[c * w * h..(c + 1) * w * h].to_vec()).unwrap()
                            });
                            Frame::new(depth, planes).unwrap()
                        })
                        .collect();
                    Sequence::new(frames, 30.0).unwrap()
                })
            })
    }

    proptest! {
        #[test]
        fn raw_round_trip(seq in arb_sequence()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("seq.rgb");
            write_raw(&seq, &path).unwrap();
            let back = load_raw(&path, seq.width(), seq.height(), seq.bit_depth(), usize::MAX).unwrap();
            prop_assert_eq!(back.frames(), seq.frames());
        }

        #[test]
        fn channel_permutation_commutes(seq in arb_sequence()) {
            // Swapping B and R before writing swaps them after reading.
            let swapped: Vec<Frame> = seq
                .frames()
                .iter()
                .map(|f| {
                    let [g, b, r] = f.clone().into_planes();
                    Frame::new(f.bit_depth(), [g, r, b]).unwrap()
                })
                .collect();
            let swapped = Sequence::new(swapped, 30.0).unwrap();
            let back = decode_raw(&encode_raw(&swapped), seq.width(), seq.height(), seq.bit_depth(), usize::MAX).unwrap();
            for (a, b) in back.frames().iter().zip(seq.frames()) {
                prop_assert_eq!(a.plane(Channel::B), b.plane(Channel::R));
                prop_assert_eq!(a.plane(Channel::R), b.plane(Channel::B));
                prop_assert_eq!(a.plane(Channel::G), b.plane(Channel::G));
            }
        }
    }
}
