//! Planning suite for the four-player bomber free-for-all.
//!
//! * [`engine`]: deterministic game simulation and observation encoding.
//! * [`opponents`]: scripted and network-backed opponent models.
//! * [`model`]: the reference policy/value network and its weight format.
//! * [`search`]: single-player and two-player reductions of PUCT search.
//! * [`dataset`]: training samples, D4 augmentation and the dataset format.

pub mod engine;
pub mod model;
pub mod opponents;
pub mod dataset;
pub mod search;
