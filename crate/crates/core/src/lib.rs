//! Exact and certified computation around the Dobiński identity: binary run
//! lengths, partial products, limsup stage families, gauge series, box
//! counting and willow sets with their Frostman measures.

pub mod error;
pub mod expansion;
pub mod gauge;
pub mod identity;
pub mod limsup;
pub mod numerics;
pub mod willow;

pub use error::{Error, ErrorKind, Result};
