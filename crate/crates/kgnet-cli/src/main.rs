//! `kgnet`: operator CLI for the platform — serve the HTTP APIs, load
//! data, sample subgraphs, build dataset packages, train models, run
//! SPARQL-ML queries, and manage registered models.

mod config;
mod state;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use kgnet_core::engine::{BackendError, SparqlBackend};
use kgnet_core::pipeline::{task_type_from_str, PipelineError, QueryOutput};
use kgnet_core::rdf::{ntriples, BindingTable, Term};
use kgnet_core::sampler::{extract_subgraph_paged, SamplingSpec};
use kgnet_core::sparqlml::{parse_train_json, ConstraintKey, TaskType};
use kgnet_core::transform::{package_write, package_write_dir};
use kgnet_http::results::table_to_json;
use serde_json::json;

use crate::config::{Overrides, PlatformConfig};

#[derive(Parser)]
#[command(name = "kgnet", version, about = "GML-enabled knowledge-graph platform")]
struct Cli {
    /// Config file (default: ./kgnet.toml if present, or $KGNET_CONFIG)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data backend: "embedded" or a SPARQL endpoint URL
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// Named graph holding the data KG
    #[arg(long, global = true)]
    graph: Option<String>,
    /// Directory for persisted platform state
    #[arg(long, global = true)]
    state_dir: Option<PathBuf>,
    /// Emit machine-readable JSON instead of tables
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start the SPARQL, SPARQL-ML, and GMLaaS HTTP services
    Serve {
        #[arg(long, default_value = "127.0.0.1:8890")]
        addr: String,
    },
    /// Load an N-Triples file into the data graph
    Load {
        file: PathBuf,
        /// Override the target named graph
        #[arg(long)]
        into: Option<String>,
    },
    /// Extract a (d,h)-scoped subgraph around a target node type
    Sample {
        #[arg(long)]
        target: String,
        #[arg(short, default_value_t = 1)]
        d: u8,
        #[arg(long, default_value_t = 1)]
        hops: u8,
        /// Write N-Triples here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample and encode a training dataset package
    Transform {
        /// TrainGML task file
        train: PathBuf,
        /// Output package: a .zip file or a directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a model from a TrainGML task file and register it
    Train { train: PathBuf },
    /// Run a SPARQL-ML query from a file ("-" for stdin)
    Query { file: PathBuf },
    /// Inspect or delete registered models
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
}

#[derive(Subcommand)]
enum ModelsAction {
    /// List every registered model
    List,
    /// Delete models matching a task and constraints (artifacts first)
    Delete {
        /// Task type: nc, lp, or es
        #[arg(long)]
        task: String,
        #[arg(long)]
        target_node: Option<String>,
        #[arg(long)]
        node_label: Option<String>,
        #[arg(long)]
        source_node: Option<String>,
        #[arg(long)]
        destination_node: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code(&err));
        }
    }
}

/// 1 for user errors, 2 for backend/transport failures.
fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<BackendError>().is_some() {
            return 2;
        }
        if let Some(s) = cause.downcast_ref::<kgnet_core::sampler::SamplerError>() {
            return match s {
                kgnet_core::sampler::SamplerError::Backend(_) => 2,
                _ => 1,
            };
        }
        if let Some(p) = cause.downcast_ref::<PipelineError>() {
            return match p {
                PipelineError::Backend(_) => 2,
                PipelineError::Sampler(kgnet_core::sampler::SamplerError::Backend(_)) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = PlatformConfig::resolve(&Overrides {
        config_file: cli.config.clone(),
        data_endpoint: cli.endpoint.clone(),
        graph: cli.graph.clone(),
        state_dir: cli.state_dir.clone(),
    })?;

    match &cli.command {
        Command::Serve { addr } => serve(&cfg, addr),
        Command::Load { file, into } => load(&cfg, cli.json, file, into.as_deref()),
        Command::Sample {
            target,
            d,
            hops,
            out,
        } => sample(&cfg, target, *d, *hops, out.as_deref()),
        Command::Transform { train, out, seed } => transform(&cfg, cli.json, train, out, *seed),
        Command::Train { train } => train_cmd(&cfg, cli.json, train),
        Command::Query { file } => query(&cfg, cli.json, file),
        Command::Models { action } => models(&cfg, cli.json, action),
    }
}

fn serve(cfg: &PlatformConfig, addr: &str) -> Result<()> {
    let platform = Arc::new(state::open_platform(cfg)?);
    let server = kgnet_http::ServerHandle::spawn(platform, addr)
        .with_context(|| format!("binding {addr}"))?;
    println!("listening on http://{}", server.addr());
    // announce the bound address immediately even when piped
    std::io::Write::flush(&mut std::io::stdout())?;
    server.wait();
    Ok(())
}

fn load(cfg: &PlatformConfig, json: bool, file: &PathBuf, into: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(file)
        .with_context(|| format!("reading {}", file.display()))?;
    let triples = ntriples::parse(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let total = triples.len();
    let platform = state::open_platform(cfg)?;
    let graph = into.unwrap_or(&cfg.graph);

    let added = match &platform.remote {
        None => platform
            .store
            .insert(graph, triples)
            .map_err(|e| anyhow!("{e}"))?,
        Some(remote) => {
            // remote endpoints take batched INSERT DATA updates
            for chunk in triples.chunks(1000) {
                let body: String = chunk.iter().map(|t| format!("{t}\n")).collect();
                remote
                    .update(&format!("insert data {{\n{body}}}"))
                    .map_err(anyhow::Error::from)?;
            }
            total
        }
    };
    state::persist(cfg, &platform)?;
    if json {
        println!("{}", json!({ "loaded": added, "parsed": total, "graph": graph }));
    } else {
        println!("loaded {added} of {total} triples into <{graph}>");
    }
    Ok(())
}

fn sample(
    cfg: &PlatformConfig,
    target: &str,
    d: u8,
    hops: u8,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let platform = state::open_platform(cfg)?;
    let spec = SamplingSpec::new(target, d, hops).map_err(|e| anyhow!("{e}"))?;
    let embedded;
    let backend: &dyn SparqlBackend = match &platform.remote {
        Some(b) => b.as_ref(),
        None => {
            embedded = platform.backend();
            &embedded
        }
    };
    let extraction =
        extract_subgraph_paged(backend, &spec, cfg.page_size).map_err(anyhow::Error::from)?;
    for w in &extraction.warnings {
        eprintln!("warning: {w}");
    }
    let triples: Vec<_> = extraction.triples.into_iter().collect();
    let text = ntriples::serialize(&triples);
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_task(path: &PathBuf) -> Result<kgnet_core::sparqlml::TrainGmlSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_train_json(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn transform(
    cfg: &PlatformConfig,
    json: bool,
    train: &PathBuf,
    out: &PathBuf,
    seed: Option<u64>,
) -> Result<()> {
    let task = read_task(train)?;
    let mut platform = state::open_platform(cfg)?;
    if let Some(seed) = seed {
        platform.transform_options.seed = seed;
    }
    let embedded;
    let backend: &dyn SparqlBackend = match &platform.remote {
        Some(b) => b.as_ref(),
        None => {
            embedded = platform.backend();
            &embedded
        }
    };
    let (pkg, sampling) = platform.build_package(backend, &task)?;
    let result = if out.extension().is_some_and(|e| e == "zip") {
        package_write(&pkg, out)
    } else {
        std::fs::create_dir_all(out)?;
        package_write_dir(&pkg, out)
    };
    result.map_err(|e| anyhow!("writing package: {e}"))?;
    if json {
        println!(
            "{}",
            json!({
                "package": out,
                "sampling": { "d": sampling.direction, "h": sampling.hops },
                "nodes": pkg.stats.total_nodes(),
                "edges": pkg.stats.n_edges.values().sum::<usize>(),
                "labels": pkg.labels.len(),
            })
        );
    } else {
        println!(
            "wrote {} (d{}h{}, {} nodes, {} labels)",
            out.display(),
            sampling.direction,
            sampling.hops,
            pkg.stats.total_nodes(),
            pkg.labels.len()
        );
    }
    Ok(())
}

fn train_cmd(cfg: &PlatformConfig, json: bool, train: &PathBuf) -> Result<()> {
    let task = read_task(train)?;
    let platform = state::open_platform(cfg)?;
    let meta = platform.train(&task)?;
    state::persist(cfg, &platform)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&meta)?);
    } else {
        println!("trained {} ({})", meta.model_uri, meta.method_name);
        println!(
            "  accuracy {:.4}  inference {:.3} ms  cardinality {}",
            meta.accuracy, meta.inference_time_ms, meta.model_cardinality
        );
    }
    Ok(())
}

fn query(cfg: &PlatformConfig, json: bool, file: &PathBuf) -> Result<()> {
    let text = if file.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?
    };
    let platform = state::open_platform(cfg)?;
    let output = platform.query(&text)?;
    match output {
        QueryOutput::Bindings(table) => print_table(json, &table),
        QueryOutput::Trained(meta) => {
            state::persist(cfg, &platform)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&meta)?);
            } else {
                println!("trained {} ({})", meta.model_uri, meta.method_name);
            }
        }
        QueryOutput::Deleted(uris) => {
            state::persist(cfg, &platform)?;
            if json {
                println!("{}", json!({ "deleted": uris }));
            } else {
                for uri in &uris {
                    println!("deleted {uri}");
                }
                println!("{} model(s) removed", uris.len());
            }
        }
    }
    Ok(())
}

fn render_cell(t: &Term) -> String {
    match t {
        Term::Iri(iri) => iri.clone(),
        Term::Literal { lexical, .. } => lexical.clone(),
        other => other.to_string(),
    }
}

fn print_table(json: bool, table: &BindingTable) {
    if json {
        println!("{}", table_to_json(table));
        return;
    }
    println!("{}", table.variables.join("\t"));
    for row in &table.rows {
        let cells: Vec<String> = table
            .variables
            .iter()
            .map(|v| row.get(v).map(render_cell).unwrap_or_default())
            .collect();
        println!("{}", cells.join("\t"));
    }
    eprintln!("({} rows)", table.rows.len());
}

fn models(cfg: &PlatformConfig, json: bool, action: &ModelsAction) -> Result<()> {
    let platform = state::open_platform(cfg)?;
    match action {
        ModelsAction::List => {
            let mut all = Vec::new();
            for task in [
                TaskType::NodeClassifier,
                TaskType::LinkPredictor,
                TaskType::NodeSimilarity,
            ] {
                all.extend(
                    platform
                        .governor
                        .lookup_models(task, &BTreeMap::new())
                        .map_err(|e| anyhow!("{e}"))?,
                );
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&all)?);
            } else {
                println!("uri\ttask\tmethod\taccuracy\ttime_ms\tcardinality");
                for m in &all {
                    println!(
                        "{}\t{:?}\t{}\t{:.4}\t{:.3}\t{}",
                        m.model_uri,
                        m.task_type,
                        m.method_name,
                        m.accuracy,
                        m.inference_time_ms,
                        m.model_cardinality
                    );
                }
                eprintln!("({} models)", all.len());
            }
        }
        ModelsAction::Delete {
            task,
            target_node,
            node_label,
            source_node,
            destination_node,
        } => {
            let task = task_type_from_str(task).map_err(|e| anyhow!(e))?;
            let mut constraints = BTreeMap::new();
            let pairs = [
                (ConstraintKey::TargetNode, target_node),
                (ConstraintKey::NodeLabel, node_label),
                (ConstraintKey::SourceNode, source_node),
                (ConstraintKey::DestinationNode, destination_node),
            ];
            for (key, value) in pairs {
                if let Some(iri) = value {
                    constraints.insert(key, Term::iri(iri.clone()));
                }
            }
            if constraints.is_empty() {
                bail!("refusing to delete without constraints; pass at least --target-node");
            }
            let deleted = platform
                .governor
                .delete_models(task, &constraints, &platform.gml)
                .map_err(|e| anyhow!("{e}"))?;
            state::persist(cfg, &platform)?;
            if json {
                println!("{}", json!({ "deleted": deleted }));
            } else {
                for uri in &deleted {
                    println!("deleted {uri}");
                }
                println!("{} model(s) removed", deleted.len());
            }
        }
    }
    Ok(())
}
