//! Spectral simulation of the Wick-ordered stochastic cubic Schrödinger
//! equation on the circle, with the norms and estimates used to study it.

pub mod ensemble;
pub mod error;
pub mod lab;
pub mod noise;
pub mod norms;
pub mod rng;
pub mod spectral;
pub mod wick;

pub use error::{Error, Result};
pub use spectral::{bracket, ConvolutionMethod, SpectralField};
