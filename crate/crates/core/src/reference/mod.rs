//! Offline hydrogen SoC references and their online kernel-weighted blend.
//!
//! Every scenario of a library is planned once with perfect foresight. During
//! operation the observed prefix of load, solar and wind is compared with the
//! same prefix of each library scenario; Gaussian kernel weights on those
//! distances blend the stored references into the reference for the next
//! step, and the highest-weight scenario supplies the hydrogen segments.

mod library;
mod offline;
mod tracker;

pub use library::{perturb_scenarios, PerturbMode, ScenarioLibrary};
pub use offline::{generate_offline_references, read_reference_csv, ReferenceSet, ScenarioReference};
pub use tracker::{
    blend_reference, golden_section, kernel_weights, reference_rmse, select_bandwidth, track_reference, Blend,
    KernelTracker, KernelWeights, TrackerRecord,
};
