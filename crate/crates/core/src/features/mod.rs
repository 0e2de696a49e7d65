//! Daily feature construction: base schema, 8-hour means, targets,
//! standardization and the interaction expansion.

pub mod eight_hour;
pub mod expand;
pub mod rows;
pub mod schema;
pub mod standardize;

pub use eight_hour::{eight_hour_means, eight_hour_means_strict, EightHourMeans};
pub use expand::{expanded_len, term_of, ExpandedDesign, Term};
pub use rows::{
    build_base_features, delta_target, feature_vector, reanchor, DailyFeatureRow, FeatureSet,
    TargetMode,
};
pub use schema::{base_schema, Category, FeatureDescriptor, Variant};
pub use standardize::{apply_standardizer, fit_standardizer, StandardizationParams};
