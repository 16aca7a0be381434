pub mod bench;
pub mod segment;
pub mod simulate;
pub mod train_ref;

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use chromoseg::{read_reference, synthetic_reference, ReferenceModel, SyntheticSpec};

/// Load a reference model from disk, or tabulate the default synthetic one.
pub fn load_reference(path: Option<&Path>) -> Result<Arc<ReferenceModel>> {
    match path {
        Some(path) => {
            let file = std::fs::File::open(path)
                .with_context(|| format!("cannot open reference file {}", path.display()))?;
            let model = read_reference(std::io::BufReader::new(file))
                .with_context(|| format!("cannot parse reference file {}", path.display()))?;
            Ok(Arc::new(model))
        }
        None => Ok(Arc::new(synthetic_reference(&SyntheticSpec::default())?)),
    }
}

/// Cap rayon's parallelism from the CHROMOSEG_THREADS environment variable.
pub fn configure_threads() {
    if let Ok(raw) = std::env::var("CHROMOSEG_THREADS") {
        if let Ok(threads) = raw.trim().parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

/// Format an optional float as its shortest representation or `NA`.
pub fn na(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_else(|| "NA".into())
}
