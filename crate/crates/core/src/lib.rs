//! Posed multi-view clips from single RGB-D frames and from posed RGB-D videos.
//!
//! A frame is cut into a chain of overlapping patches; each patch becomes a
//! view with its own camera, either by rescaling the intrinsics or by solving
//! for a virtual camera with PnP, optionally swung about the patch centroid
//! and re-rendered from the colored pointmap. For videos, pairwise geometric
//! overlap picks a small set of keyframes and each keyframe is expanded the
//! same way.
//!
//! Conventions used throughout: pinhole cameras with integer pixel centers,
//! camera frame x right / y down / z forward, z-depth in meters, and poses
//! stored world-to-camera unless a name says `c2w`.
//!
//! [`pipeline::image_to_clips`] and [`pipeline::clips_to_clips`] are the two
//! entry points; [`synthetic`] provides ray-cast scenes to try them on.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment2d;
pub mod calibration;
pub mod config;
pub mod covisibility;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod keyframe;
pub mod motion;
pub mod patch;
pub mod pipeline;
pub mod render;
pub mod synthetic;

pub use error::{Error, Result};
