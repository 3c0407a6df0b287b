//! Sparse receive-array design for maximum output SINR.

pub mod beamform;
pub mod coarray;
pub mod conic;
pub mod design;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod scene;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/beamforming.md")]
    mod beamforming {}
    #[doc = include_str!("../../../book/src/enumeration.md")]
    mod enumeration {}
    #[doc = include_str!("../../../book/src/relaxation.md")]
    mod relaxation {}
    #[doc = include_str!("../../../book/src/design.md")]
    mod design {}
    #[doc = include_str!("../../../book/src/coarrays.md")]
    mod coarrays {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
