//! Simulation and reconstruction for photon-counting image sensors.
//!
//! A pixel's photon count over one frame is Poisson with mean `θ = τ·c`
//! and is clipped at the counter capacity `L`. [`stats`] gives the moments
//! and exposure-referred SNR of the clipped count, [`sensor`] draws seeded
//! captures, [`hdr`] inverts and fuses exposures into a flux map, [`metrics`]
//! scores images and sweeps SNR curves, and [`io`] covers the file formats.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod display;
pub mod hdr;
pub mod io;
pub mod metrics;
pub mod scenes;
pub mod sensor;
pub mod stats;
