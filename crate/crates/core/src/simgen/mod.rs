//! Data-generating processes for the simulation studies.

pub mod clustered;
pub mod drift;
pub mod hier;
pub mod nsrs;

pub use clustered::{gen_clustered, ClusteredConfig, FeatureMode};
pub use drift::{gen_drift, DriftConfig, DriftHandle, Strength};
pub use hier::{gen_hier_data, generate_tree, HierConfig, HierModel};
pub use nsrs::{draw_pps_sample, gen_nsrs_population, gen_nsrs_superpopulation, NsrsConfig};
