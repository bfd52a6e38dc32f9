//! Activation bundles and the NPY tensor format they are stored in.

mod bundle;
pub mod npy;

pub use bundle::{
    layer_file_name, load_bundle, save_bundle, ActivationBundle, LayerActivations,
    BUNDLE_SCHEMA, LABELS_FILE, MANIFEST_FILE, PREDICTIONS_FILE,
};
