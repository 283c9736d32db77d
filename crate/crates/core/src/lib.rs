//! Fourier transforms of indicator functions and the smoothness criteria that
//! decide when they are `p`-integrable.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apnorms;
pub mod bessel;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod integrability;
pub mod moduli;
pub mod profile;
pub mod quad;
pub mod sobolev;
pub mod spectra;

pub use error::{Error, Result};
pub use moduli::{ChiMap, Modulus, ModulusSpec};
pub use profile::{Profile, ProfileSpec};
pub use geometry::{Domain, DomainSpec};
