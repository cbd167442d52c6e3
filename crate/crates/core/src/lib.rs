//! Moment-sequence and Hankel analysis of unilateral weighted shifts:
//! truncated Hamburger/Stieltjes positivity with exact certificates, atomic
//! measure recovery from recursive moment sequences, the multiplicative
//! convolution algebra of finitely atomic charges, Aluthge transforms with
//! certified classification, and jumping-flatness propagation.
//!
//! Everything defaults to exact arithmetic (arbitrary-precision rationals,
//! extended by sums of square roots where transforms demand it); approximate
//! mode is an explicit opt-in carrying a global tolerance.

pub mod aluthge;
pub mod error;
pub mod flatness;
pub mod hankel;
mod interval;
mod linalg;
pub mod measure;
pub mod model;
pub mod radical;
pub mod recursion;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use hankel::{
    classify, classify_sqrt_squares, extract_recursion, hankel, is_psd, property_h,
    property_h_tilde, ClassificationReport, FirstFailure, HankelMatrix, PropertyKind,
    PsdCertificate, PsdVerdict, PsdWitness,
};
pub use model::{
    moment_positivity_horizon, moments_to_weights, weights_to_moments, Atom, AtomicCharge,
    MomentSequence, RecursionSpec, SupportSet, WeightSequence,
};
pub use radical::RadicalSum;
pub use scalar::{Mode, Scalar, DEFAULT_EPS};
