pub mod conv;
pub mod dyadic;
pub mod error;
pub mod gridfn;
pub mod profile;
pub mod kernels;
pub(crate) mod quad;
pub mod sqfn;
pub mod avgops;
pub mod accretive;
pub mod stopping;
pub mod carleson;
pub mod paraproduct;
#[cfg(feature = "cli")]
pub mod cli;
