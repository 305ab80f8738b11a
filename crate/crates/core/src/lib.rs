//! Spectral theory and Cauchy problems for the measure-weighted ultrametric
//! diffusion operator
//!
//! ```text
//! (W_m f)(x) = ∫ m(y) W(|x - y|_p) (f(y) - f(x)) d_p y
//! ```
//!
//! on a finite window of `Q_p`. The measure `m(x) d_p x` is held exactly (as
//! rationals) in a [`MeasureTree`]; eigenvalues, wavelet-type eigenfunctions,
//! an orthonormal eigenbasis and spectral solutions of `df/dt = W_m f` live in
//! [`spectral`]. Two independent oracles in [`oracle`] (a dense generator with
//! its matrix exponential, and a jump-process simulator) check the spectral
//! results.
//!
//! Finite ultrametric spaces enter through [`embedding`], which places them
//! isometrically inside `Q_p` so that a random walk on the space becomes the
//! diffusion above with `m` the indicator of the image.
//!
//! The guide under `book/` walks through the concepts; its code listings are
//! compiled as doctests of this crate.

pub mod embedding;
pub mod error;
pub mod function;
pub mod kernel;
pub mod kolmogorov;
pub mod measure;
mod numerics;
pub mod oracle;
pub mod padic;
pub mod rational;
pub mod spectral;

pub use error::{Error, Result};
pub use function::PiecewiseFunction;
pub use kernel::RateProfile;
pub use measure::MeasureTree;
pub use padic::{ball_of, BallAddress, Base, PAdicApprox, Window};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/padic.md")]
    mod padic {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/cauchy.md")]
    mod cauchy {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
}
