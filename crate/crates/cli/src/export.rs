use std::path::Path;

use treetrade::cart::{deserialize, export_dot, export_rules, feature_usage};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    Rules,
    Dot,
}

/// Export text and the sorted set of features the model tests.
pub fn export_tree(model_path: &Path, format: ExportFormat) -> CliResult<(String, Vec<String>)> {
    let text = std::fs::read_to_string(model_path).map_err(|source| CliError::Read {
        path: model_path.to_path_buf(),
        source,
    })?;
    let model = deserialize(&text)?;
    let export = match format {
        ExportFormat::Rules => export_rules(&model),
        ExportFormat::Dot => export_dot(&model),
    };
    Ok((export, feature_usage(&model).into_iter().collect()))
}
