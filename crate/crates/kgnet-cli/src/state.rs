//! Building a `Platform` from config and persisting its mutable state
//! between CLI invocations: data triples and model metadata as N-Triples
//! files, trained artifacts via the service's own artifact directory.

use anyhow::{Context, Result};
use kgnet_core::gml::GmlService;
use kgnet_core::pipeline::Platform;
use kgnet_core::planner::CostModelParams;
use kgnet_core::rdf::ntriples;
use kgnet_http::RemoteEndpoint;

use crate::config::PlatformConfig;

fn data_file(cfg: &PlatformConfig) -> std::path::PathBuf {
    cfg.state_dir.join("data.nt")
}

fn kgmeta_file(cfg: &PlatformConfig) -> std::path::PathBuf {
    cfg.state_dir.join("kgmeta.nt")
}

/// Builds the platform, restoring any persisted state from the state dir.
pub fn open_platform(cfg: &PlatformConfig) -> Result<Platform> {
    std::fs::create_dir_all(&cfg.state_dir)
        .with_context(|| format!("creating state dir {}", cfg.state_dir.display()))?;

    let mut platform = Platform::in_memory(cfg.graph.clone());
    platform.gml = GmlService::with_dir(cfg.state_dir.join("models"))
        .map_err(|e| anyhow::anyhow!("opening model store: {e}"))?;
    platform.page_size = cfg.page_size;
    platform.embedding_dim = cfg.embedding_dim;
    platform.cost_params = CostModelParams {
        c_call_ms: cfg.call_ms,
        c_item_ms: cfg.item_ms,
    };
    if cfg.data_endpoint != "embedded" {
        platform.remote = Some(Box::new(RemoteEndpoint::new(cfg.data_endpoint.clone())));
    }

    if let Ok(text) = std::fs::read_to_string(data_file(cfg)) {
        let triples =
            ntriples::parse(&text).map_err(|e| anyhow::anyhow!("restoring data triples: {e}"))?;
        platform
            .store
            .insert(&cfg.graph, triples)
            .map_err(|e| anyhow::anyhow!("restoring data triples: {e}"))?;
    }
    if let Ok(text) = std::fs::read_to_string(kgmeta_file(cfg)) {
        platform
            .governor
            .import_ntriples(&text)
            .map_err(|e| anyhow::anyhow!("restoring model metadata: {e}"))?;
    }
    Ok(platform)
}

/// Writes the embedded data graph and the metadata graph back to disk.
pub fn persist(cfg: &PlatformConfig, platform: &Platform) -> Result<()> {
    if cfg.data_endpoint == "embedded" {
        let triples = platform.store.triples(&cfg.graph);
        std::fs::write(data_file(cfg), ntriples::serialize(&triples))
            .context("writing data triples")?;
    }
    std::fs::write(kgmeta_file(cfg), platform.governor.export_ntriples())
        .context("writing model metadata")?;
    Ok(())
}
