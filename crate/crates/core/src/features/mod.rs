//! Global features computed from raw pen trajectories.

mod kinematics;
mod recipe;

pub use kinematics::{derive_kinematics, gradient, Kinematics};
pub use recipe::{extract_globals, Channel, Extra, FeatureRecipe, Statistic};
