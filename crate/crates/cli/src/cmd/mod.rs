pub mod ablate;
pub mod aggregate;
pub mod compare;
pub mod evaluate;
pub mod features;
pub mod predict;
pub mod synth;
pub mod train;
