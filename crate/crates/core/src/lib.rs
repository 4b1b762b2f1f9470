//! Classification of rice water-management practices from per-plot radar
//! backscatter time series.
//!
//! Practices are treated along two independent dimensions: sowing (direct
//! seeded vs puddled transplanted) and irrigation (alternate wetting and
//! drying vs continuous flooding). The crate covers the whole batch path:
//!
//! - [`timeseries`]: plot series types, Gaussian smoothing, natural cubic
//!   splines and regular resampling, derived ratio / RVI bands.
//! - [`zonal`]: reduction of gridded backscatter to per-plot mean series.
//! - [`features`]: the 76-value hand-crafted temporal feature schema.
//! - [`synth`]: a labeled synthetic scene generator with known ground truth.
//! - [`learn`]: random forest and gradient boosted tree ensembles, task label
//!   collapsing, stratified splits, seeded hyperparameter search.
//! - [`eval`]: classification metrics, Pearson, rank-biased overlap and the
//!   temporal-window ablation harness.
//! - [`scale`]: streaming batch inference and district-level aggregation.

pub mod error;
pub mod eval;
pub mod features;
pub mod learn;
pub mod rng;
pub mod scale;
pub mod synth;
pub mod timeseries;
pub mod zonal;

pub use error::{Error, Result};
