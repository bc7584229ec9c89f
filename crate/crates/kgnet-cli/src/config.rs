//! Platform configuration: defaults, then a TOML config file, then
//! `KGNET_*` environment variables, then command-line flags — each layer
//! overriding the previous one.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone)]
pub struct PlatformConfig {
    /// "embedded" or an absolute SPARQL endpoint URL.
    pub data_endpoint: String,
    /// Named graph holding the data KG.
    pub graph: String,
    /// Directory for persisted state: data triples, model metadata, and
    /// trained artifacts.
    pub state_dir: PathBuf,
    pub page_size: usize,
    pub call_ms: f64,
    pub item_ms: f64,
    pub embedding_dim: u32,
}

impl Default for PlatformConfig {
    fn default() -> PlatformConfig {
        PlatformConfig {
            data_endpoint: "embedded".into(),
            graph: "https://www.kgnet.com/kg/".into(),
            state_dir: PathBuf::from("kgnet-state"),
            page_size: 100_000,
            call_ms: 50.0,
            item_ms: 0.01,
            embedding_dim: 32,
        }
    }
}

/// The optional-field mirror of `PlatformConfig` used for file parsing.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data_endpoint: Option<String>,
    graph: Option<String>,
    state_dir: Option<PathBuf>,
    page_size: Option<usize>,
    call_ms: Option<f64>,
    item_ms: Option<f64>,
    embedding_dim: Option<u32>,
}

/// Flag-level overrides collected from the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub config_file: Option<PathBuf>,
    pub data_endpoint: Option<String>,
    pub graph: Option<String>,
    pub state_dir: Option<PathBuf>,
}

impl PlatformConfig {
    pub fn resolve(overrides: &Overrides) -> Result<PlatformConfig> {
        let mut cfg = PlatformConfig::default();

        let file = overrides
            .config_file
            .clone()
            .or_else(|| std::env::var_os("KGNET_CONFIG").map(PathBuf::from))
            .or_else(|| {
                let default = Path::new("kgnet.toml");
                default.exists().then(|| default.to_path_buf())
            });
        if let Some(path) = file {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let parsed: FileConfig = toml::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            cfg.apply_file(parsed);
        }

        cfg.apply_env()?;

        if let Some(v) = &overrides.data_endpoint {
            cfg.data_endpoint = v.clone();
        }
        if let Some(v) = &overrides.graph {
            cfg.graph = v.clone();
        }
        if let Some(v) = &overrides.state_dir {
            cfg.state_dir = v.clone();
        }

        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: FileConfig) {
        if let Some(v) = f.data_endpoint {
            self.data_endpoint = v;
        }
        if let Some(v) = f.graph {
            self.graph = v;
        }
        if let Some(v) = f.state_dir {
            self.state_dir = v;
        }
        if let Some(v) = f.page_size {
            self.page_size = v;
        }
        if let Some(v) = f.call_ms {
            self.call_ms = v;
        }
        if let Some(v) = f.item_ms {
            self.item_ms = v;
        }
        if let Some(v) = f.embedding_dim {
            self.embedding_dim = v;
        }
    }

    fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var("KGNET_DATA_ENDPOINT") {
            self.data_endpoint = v;
        }
        if let Ok(v) = std::env::var("KGNET_GRAPH") {
            self.graph = v;
        }
        if let Ok(v) = std::env::var("KGNET_STATE_DIR") {
            self.state_dir = PathBuf::from(v);
        }
        if let Ok(v) = std::env::var("KGNET_PAGE_SIZE") {
            self.page_size = v.parse().context("KGNET_PAGE_SIZE must be an integer")?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.data_endpoint != "embedded" && !self.data_endpoint.starts_with("http") {
            bail!(
                "data_endpoint must be \"embedded\" or an absolute http(s) URL, got {:?}",
                self.data_endpoint
            );
        }
        if !self.graph.contains(':') {
            bail!("graph must be an absolute IRI, got {:?}", self.graph);
        }
        if self.page_size == 0 || self.embedding_dim == 0 {
            bail!("page_size and embedding_dim must be positive");
        }
        if self.call_ms <= 0.0 || self.item_ms < 0.0 {
            bail!("cost-model parameters must be positive");
        }
        Ok(())
    }
}
