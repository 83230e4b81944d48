//! Search provider configuration files.
//!
//! ```toml
//! [[provider]]
//! kind = "fixture"
//! path = "media_provider.json"
//!
//! [[provider]]
//! kind = "http"
//! name = "example"
//! url_template = "https://search.example.org/?q={term}&lang={language}"
//! items_pointer = "/results"
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use disaster_monitor_core::media::{FixtureProvider, HttpProvider, HttpProviderConfig, SearchProvider};
use serde::Deserialize;

use crate::config::ConfigError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderSpec {
    Fixture { path: PathBuf },
    Http(Box<HttpProviderConfig>),
}

#[derive(Debug, Deserialize)]
struct ProviderFile {
    #[serde(default, rename = "provider")]
    providers: Vec<ProviderSpec>,
}

pub fn parse_provider_file(path: &Path) -> Result<Vec<ProviderSpec>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |message: String| ConfigError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let file: ProviderFile = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
    };
    Ok(file.providers)
}

/// Instantiates every provider listed in `path`. Fixture paths are relative
/// to the file.
pub fn load_providers(path: &Path) -> Result<Vec<Arc<dyn SearchProvider>>, ConfigError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out: Vec<Arc<dyn SearchProvider>> = Vec::new();
    for spec in parse_provider_file(path)? {
        let provider: Arc<dyn SearchProvider> = match spec {
            ProviderSpec::Fixture { path: p } => {
                let p = if p.is_relative() { base.join(p) } else { p };
                Arc::new(FixtureProvider::from_file(&p).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
            ProviderSpec::Http(cfg) => Arc::new(HttpProvider::new(*cfg).map_err(|e| ConfigError::Invalid(e.to_string()))?),
        };
        out.push(provider);
    }
    Ok(out)
}
