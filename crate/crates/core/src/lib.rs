//! Downlink SDMA-OFDMA scheduling simulator with frequency-selective
//! subband scheduling.
//!
//! The pipeline per frame is:
//!
//! 1. [`channel`] draws a static multi-antenna, frequency-selective channel
//!    per drop and exposes decimated CSI.
//! 2. [`frame::partition_frame`] splits the downlink subframe into subbands.
//! 3. [`grouping`] forms spatially compatible SDMA groups per subband, using
//!    MinMSE precoding and EESM link abstraction from [`phy`].
//! 4. [`qos`] keeps per-MS buffers and tags candidate packets with
//!    proportional-fair utilities.
//! 5. [`frame::frame_construction`] packs groups into column-spanning bursts
//!    while accounting for the column-wise growing DL-MAP.
//!
//! [`experiment`] wires these stages into Monte Carlo drops and parameter
//! sweeps.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod grouping;
pub mod phy;
pub mod qos;

pub use error::{Error, Result};

/// Index of a mobile station within a drop (0-based).
pub type MsIndex = usize;
