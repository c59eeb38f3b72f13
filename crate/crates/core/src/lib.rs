//! Boolean percolation of interacting particle systems in the
//! (intensity, inverse-temperature) plane.
//!
//! The crate has two halves that check each other. The analytic half
//! ([`potential`], [`bounds`], [`branching`]) evaluates the explicit constants
//! and curves bounding the non-percolation region (a subcritical dominating
//! branching process) and the percolation region (an empty-cell contour
//! estimate, dimension 2). The simulation half ([`sampler`], [`percolation`],
//! [`contour2d`]) equilibrates grand-canonical configurations, extracts
//! clusters and contours, and estimates the percolation probability through a
//! finite-box crossing proxy.

pub mod bounds;
pub mod branching;
pub mod contour2d;
pub mod percolation;
pub mod potential;
pub mod sampler;
pub mod snapshot;
pub mod stats;

pub use potential::{Energy, PotentialSpec};
pub use sampler::{Configuration, McParams};
