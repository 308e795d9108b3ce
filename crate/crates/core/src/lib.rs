//! Two-dimensional electromagnetic inverse scattering.
//!
//! The crate bundles a method-of-moments forward solver for TM illumination,
//! adjoint-state likelihood gradients, a small convolutional network runtime
//! for learned decoders and score models, and a posterior sampler that
//! alternates Langevin likelihood steps with reverse-diffusion prior steps.
//! Classical baselines (Occam, TV-ADMM, latent optimization) and evaluation
//! helpers round it out.
//!
//! ```
//! use isp_core::forward::{forward_simulate, SolverOptions};
//! use isp_core::phantom::PhantomSpec;
//! use isp_core::scene::{BackgroundSpec, GridSpec, Scene};
//!
//! let grid = GridSpec::new(16, 16, 0.01).unwrap();
//! let scene = Scene::ring(grid, BackgroundSpec::vacuum(), 4, 8, 0.5, vec![1e9]).unwrap();
//! let truth = PhantomSpec::cylinder([0.0, 0.0], 0.04, 2.0, 0.0).rasterize(&grid).unwrap();
//! let data = forward_simulate(&truth, &scene, &SolverOptions::default()).unwrap();
//! assert_eq!(data.len(), 4 * 8);
//! ```

pub mod baselines;
pub mod decoder;
pub mod error;
pub mod fixtures;
pub mod forward;
pub mod io;
pub mod likelihood;
pub mod measurement;
pub mod metrics;
pub mod nn;
pub mod phantom;
pub mod priors;
pub mod sampler;
pub mod scene;
pub mod special;

pub use error::{Error, Result};
pub use measurement::MeasurementSet;
pub use scene::{BackgroundSpec, GridSpec, PropertyGradient, PropertyMaps, Scene, EPS0};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
