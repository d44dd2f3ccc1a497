//! Facial expression recognition toolkit.
//!
//! The pipeline runs landmark-driven face extraction ([`geometry`]), a
//! five-variant filter chain and resizing ([`imgproc`]), a convolutional
//! network trained from scratch ([`nn`], [`model`]), and per-class
//! evaluation ([`metrics`]). [`data`] handles manifests, preprocessing and
//! batching; [`cli`] wires everything into the `ferkit` binary.

pub mod geometry;
pub mod imgproc;
pub mod nn;
pub mod seed;
pub mod metrics;
pub mod model;
pub mod cli;
pub mod data;
