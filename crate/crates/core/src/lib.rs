//! Radon transforms of data distributions, and neural networks read as
//! slicing operators.
//!
//! A linear classifier `theta . x` pushes the data density forward onto one
//! slice of its Radon transform; a perceptron `sigma(theta . x)` does the same
//! up to an invertible reparametrization of the output axis; a deep network
//! integrates the density over the curved level sets of its output, i.e. it
//! computes a slice of a generalized Radon transform. This crate provides the
//! pieces to compute and inspect all of that on finite samples:
//!
//! - [`dataset`]: seeded samplers (two moons, isotropic Gaussians) and CSV I/O.
//! - [`defining_fn`]: linear, circular, homogeneous-polynomial and MLP
//!   defining functions with analytic gradients.
//! - [`density`]: 1-D KDE / histogram density estimates and KS distances.
//! - [`empirical_radon`]: slices, sinograms and push-forward densities of
//!   empirical distributions.
//! - [`grid_radon`]: gridded forward Radon transform, ramp filtering,
//!   filtered back-projection and a Fourier-slice diagnostic.
//! - [`nn`]: perceptron stacks, backpropagation, pooling.
//! - [`train`]: cross-entropy fitting with optional unit-norm rows.
//! - [`adversarial`]: gradient-ascent walks across a decision boundary.
//! - [`levelset`]: surface rasterization and marching squares.

pub mod adversarial;
pub mod dataset;
pub mod defining_fn;
pub mod density;
pub mod empirical_radon;
pub mod error;
pub mod grid_radon;
pub mod levelset;
pub mod nn;
pub mod train;

pub use dataset::{EmpiricalDistribution, LabeledDataset};
pub use defining_fn::{Circular, DefiningFunction, HomogeneousPoly, Linear, MultiIndex, Surface};
pub use density::{Density1D, DensityMethod};
pub use empirical_radon::{Sinogram, Slice};
pub use error::{Error, Result};
pub use grid_radon::{GridImage, RampFilterSpec};
pub use levelset::{Bounds, LevelCurveSet};
pub use nn::{Activation, MaxPool, MlpModel};
pub use train::{Classifier, SigmoidHead, TrainConfig};
