//! Spatiotemporal perceptual quantization (SPAQ) for RGB 4:4:4 video.
//!
//! The crate derives per-coding-block, per-channel QPs from spatial variance,
//! motion-vector magnitude and color masking, and runs them through a small
//! transform-coding loop so the perceptual allocation can be compared against
//! a uniform-QP anchor.
//!
//! Module map:
//!
//! - [`video_io`]: raw planar G/B/R files and the [`Frame`] / [`Sequence`] types.
//! - [`partition`]: fixed quadtree CB geometry and edge padding.
//! - [`activity`]: normalized spatial activity per CB and channel.
//! - [`motion`]: full-search block matching and temporal masking offsets.
//! - [`qp`]: final CB-level QPs and the QP to QStep law.
//! - [`codec`]: DCT, dead-zone quantizer, bit-cost proxy and the frame encoder.
//! - [`metrics`]: PSNR, global GBR SSIM and percentage deltas.
//! - [`experiment`]: synthetic sources, the anchor-vs-SPAQ runner and report files.

pub mod activity;
pub mod codec;
mod error;
pub mod experiment;
pub mod metrics;
pub mod motion;
pub mod partition;
pub mod qp;
pub mod video_io;

pub use error::{Error, Result};
pub use video_io::{Channel, Frame, Plane, Sequence};
