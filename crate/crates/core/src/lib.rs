//! Split-parallel switch modelling and HBM switch simulation.
//!
//! * [`config`]: parameters, derived geometry, SRAM/power/area figures.
//! * [`traffic`]: traffic matrices and their generators.
//! * [`sps`]: fiber assignment, matrix splitting and fluid loss.
//! * [`hbm`]: slot-level HBM switch running parallel frame interleaving.
//! * [`oracle`]: ideal output-queued switch and comparators.
//! * [`io`]: file formats, reports and experiment dispatch.

pub mod config;
pub mod error;
pub mod hbm;
pub mod io;
pub mod oracle;
pub mod seed;
pub mod sps;
pub mod traffic;

pub use config::{Config, HbmTiming, SwitchConfig};
pub use error::{Error, Result};
pub use traffic::TrafficMatrix;
