//! Planar UAV navigation stack built around a learned-model predictive
//! planner inside an actor-critic training loop.
//!
//! The pieces, bottom up:
//!
//! - [`geom`] / [`sim`]: a deterministic, seeded 2D world with cylindrical
//!   obstacles (read as radius x height), a 7-ray planar lidar, and episode
//!   termination rules. Walls are opaque to the lidar and lethal on contact.
//! - [`mdp`]: the 13-component observation vector, the [-1, 1]^2 speed/steer
//!   action, and the four-term shaped reward.
//! - [`nn`]: hand-rolled dense and stacked-LSTM networks with exact
//!   reverse-mode gradients, an adaptive-moment optimizer, soft target
//!   updates, and parameter files.
//! - [`dynamics`]: an LSTM one-step transition model over recent
//!   (state, action) history, trainable online and pre-trainable from
//!   obstacle-free flight.
//! - [`mpc`]: a receding-horizon cross-entropy planner over model rollouts;
//!   its first action is the deterministic policy.
//! - [`agent`]: DDPG-style training with an experience pool, the planner's
//!   predicting pool, critic warm start, and plain DDPG / twin-critic
//!   baselines under one interface.

pub mod agent;
pub mod dynamics;
pub mod geom;
pub mod mdp;
pub mod mpc;
pub mod nn;
pub mod sim;
pub mod trace;

#[cfg(feature = "oracle")]
pub mod oracle;
