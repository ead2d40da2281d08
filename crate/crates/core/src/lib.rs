//! Numerical toolkit for the holomorphic correspondences
//! `(J_a ∘ Cov)(z) = w` on the Riemann sphere, where `Cov` relates `z` to the
//! other solutions of `w^3 - 3w = z^3 - 3z`.
//!
//! Points live in [`sphere`]; branch arithmetic in [`corr`]; the Klein pair,
//! the restriction `f_a` and limit-set membership in [`klein`]; periodic
//! points in [`periodic`] (built on [`polyalg`]); measure transport in
//! [`measure`]; pictures in [`render`].

pub mod corr;
pub mod error;
pub mod klein;
pub mod measure;
pub mod par;
pub mod periodic;
pub mod polyalg;
pub mod render;
pub mod sphere;

pub use corr::{CorrContext, Direction, WeightedImage};
pub use error::{Error, Result};
pub use klein::{KleinPair, Side};
pub use measure::AtomicMeasure;
pub use sphere::{MobiusMap, SpherePoint};
