//! Synthesis and closed-loop simulation for resilient fixed-time cooperative
//! output regulation of heterogeneous linear multi-agent systems coupled over
//! a directed graph, with communication subject to denial-of-service attacks.
//!
//! The crate is organized as a synthesis pipeline:
//! graph topology and coupling gains ([`graph`]), attack schedules ([`dos`]),
//! regulator equations and canonical forms ([`regulation`]), distributed
//! observer certificates ([`observer`]), fixed-time feedback gains and
//! settling bounds ([`gains`]), closed-loop integration ([`sim`]), and
//! declarative scenario assembly ([`scenario`]), all on top of the dense
//! kernels in [`numerics`].

// Indexed loops deliberately mirror the row/column notation of the math they
// implement, and `!(x > 0.0)`-style guards reject NaN along with the
// out-of-range values.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dos;
pub mod gains;
pub mod graph;
pub mod numerics;
pub mod observer;
pub mod regulation;
pub mod scenario;
pub mod sim;
