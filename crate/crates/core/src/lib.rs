//! Batched multi-agent 2D driving simulation.
//!
//! The crate is layered bottom-up: [`geometry`] kernels, a [`bvh`] broad
//! phase, vehicle [`dynamics`], the [`scenario`] data model, then the static
//! road [`map`], per-agent [`observation`]s and the batched [`engine`].

pub mod bvh;
pub mod dynamics;
pub mod geometry;
pub mod scenario;
pub mod map;
pub mod observation;
pub mod engine;
