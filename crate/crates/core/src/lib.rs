//! Continuous point-cloud registration in a reproducing kernel Hilbert space.
//!
//! Two labeled clouds become functions `f_X = Σ ℓ(x_i) k(·, x_i)` and
//! `f_Z`; the rigid motion aligning them maximizes `⟨f_X, h.f_Z⟩`. The
//! solver follows the gradient flow of that inner product on SE(n),
//! integrating with the group exponential and a quartic Taylor line search.
//!
//! - [`liegroup`]: SO(n)/SE(n) arithmetic and distances (n = 2, 3).
//! - [`rkhs`]: clouds, kernel, sparsified kernel matrix, inner product.
//! - [`flow`]: gradient, Taylor step size, registration loop.
//! - [`rgbd`]: TUM RGB-D ingestion and semi-dense point selection.
//! - [`odometry`]: frame-to-frame tracking and relative pose error.
//! - [`config`]: flat key-value run configuration.
//! - [`synth`]: deterministic synthetic cloud pairs.

pub mod config;
pub mod flow;
pub mod liegroup;
pub mod odometry;
pub mod rgbd;
pub mod rkhs;
pub mod synth;

pub use flow::{register, RegistrationConfig, RegistrationResult, StopReason};
pub use liegroup::{Isometry, Isometry3, Rotation, Twist, Twist3};
pub use rkhs::{KernelParams, LabeledCloud, LabeledCloud3};
