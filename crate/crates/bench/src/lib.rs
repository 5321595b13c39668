//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use plantutor_core::{BundleError, EnvironmentBundle};

pub const DOMAINS: [&str; 2] = ["coffee_shop", "hanoi"];

/// Loads one of the bundled environments.
pub fn bundle(name: &str) -> Result<EnvironmentBundle, BundleError> {
    EnvironmentBundle::load(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../env").join(name))
}
