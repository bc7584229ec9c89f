//! Dataset package persistence: a directory layout of CSV files plus
//! manifest/stats JSON, optionally archived as a single zip file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{hex_string, DatasetPackage, DatasetStats, Edge, Manifest, Splits, TransformError, FORMAT_VERSION};

fn io_err(e: impl std::fmt::Display) -> TransformError {
    TransformError::Io(e.to_string())
}

/// Filesystem-safe file stem for a type IRI: sanitized local name plus a
/// short digest to keep distinct IRIs distinct.
fn file_stem(iri: &str) -> String {
    let local = iri.rsplit(['#', '/']).next().unwrap_or(iri);
    let safe: String = local
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    let mut hasher = Sha256::new();
    hasher.update(iri.as_bytes());
    let digest = hex_string(&hasher.finalize());
    format!("{safe}__{}", &digest[..8])
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    #[serde(flatten)]
    manifest: Manifest,
    node_files: BTreeMap<String, String>,
    relation_files: BTreeMap<String, String>,
    /// sha256 per member file (everything except manifest.json itself).
    checksums: BTreeMap<String, String>,
}

/// The package as an in-memory file map, the common form behind both the
/// directory and zip codecs.
fn to_files(pkg: &DatasetPackage) -> Result<BTreeMap<String, Vec<u8>>, TransformError> {
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();

    let mut node_files = BTreeMap::new();
    for (ty, keys) in &pkg.node_maps {
        let name = format!("nodes/{}.csv", file_stem(ty));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "iri"]).map_err(io_err)?;
        for (id, key) in keys.iter().enumerate() {
            w.write_record([id.to_string().as_str(), key]).map_err(io_err)?;
        }
        files.insert(name.clone(), w.into_inner().map_err(io_err)?);
        node_files.insert(ty.clone(), name);
    }

    let mut relation_files = BTreeMap::new();
    for (ty, edges) in &pkg.relations {
        let name = format!("relations/{}.csv", file_stem(ty));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["src_type", "src_id", "dst_type", "dst_id"])
            .map_err(io_err)?;
        for e in edges {
            w.write_record([
                e.src_type.as_str(),
                &e.src_id.to_string(),
                &e.dst_type,
                &e.dst_id.to_string(),
            ])
            .map_err(io_err)?;
        }
        files.insert(name.clone(), w.into_inner().map_err(io_err)?);
        relation_files.insert(ty.clone(), name);
    }

    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["target_id", "label_id"]).map_err(io_err)?;
        for (t, l) in &pkg.labels {
            w.write_record([t.to_string(), l.to_string()]).map_err(io_err)?;
        }
        files.insert("labels.csv".into(), w.into_inner().map_err(io_err)?);
    }
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "label"]).map_err(io_err)?;
        for (id, label) in pkg.label_dict.iter().enumerate() {
            w.write_record([id.to_string().as_str(), label]).map_err(io_err)?;
        }
        files.insert("label_dict.csv".into(), w.into_inner().map_err(io_err)?);
    }
    for (name, ids) in [
        ("split/train.csv", &pkg.splits.train),
        ("split/valid.csv", &pkg.splits.valid),
        ("split/test.csv", &pkg.splits.test),
    ] {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["target_id"]).map_err(io_err)?;
        for id in ids {
            w.write_record([id.to_string()]).map_err(io_err)?;
        }
        files.insert(name.into(), w.into_inner().map_err(io_err)?);
    }

    files.insert(
        "stats.json".into(),
        serde_json::to_vec_pretty(&pkg.stats).map_err(io_err)?,
    );

    let checksums: BTreeMap<String, String> = files
        .iter()
        .map(|(name, data)| {
            let mut hasher = Sha256::new();
            hasher.update(data);
            (name.clone(), hex_string(&hasher.finalize()))
        })
        .collect();
    let manifest = ManifestFile {
        manifest: pkg.manifest.clone(),
        node_files,
        relation_files,
        checksums,
    };
    files.insert(
        "manifest.json".into(),
        serde_json::to_vec_pretty(&manifest).map_err(io_err)?,
    );
    Ok(files)
}

fn from_files(files: &BTreeMap<String, Vec<u8>>) -> Result<DatasetPackage, TransformError> {
    let manifest_bytes = files
        .get("manifest.json")
        .ok_or_else(|| io_err("manifest.json missing"))?;
    let mf: ManifestFile = serde_json::from_slice(manifest_bytes).map_err(io_err)?;
    if mf.manifest.format_version != FORMAT_VERSION {
        return Err(TransformError::VersionMismatch {
            found: mf.manifest.format_version,
            expected: FORMAT_VERSION,
        });
    }
    for (name, expected) in &mf.checksums {
        let data = files
            .get(name)
            .ok_or_else(|| io_err(format!("member {name} missing")))?;
        let mut hasher = Sha256::new();
        hasher.update(data);
        if &hex_string(&hasher.finalize()) != expected {
            return Err(TransformError::ChecksumMismatch(name.clone()));
        }
    }

    let csv_rows = |name: &str| -> Result<Vec<csv::StringRecord>, TransformError> {
        let data = files
            .get(name)
            .ok_or_else(|| io_err(format!("member {name} missing")))?;
        let mut reader = csv::Reader::from_reader(data.as_slice());
        reader.records().collect::<Result<_, _>>().map_err(io_err)
    };

    let mut node_maps = BTreeMap::new();
    for (ty, file) in &mf.node_files {
        let mut keys = Vec::new();
        for (i, row) in csv_rows(file)?.iter().enumerate() {
            if row[0].parse::<usize>().ok() != Some(i) {
                return Err(io_err(format!("non-contiguous ids in {file}")));
            }
            keys.push(row[1].to_string());
        }
        node_maps.insert(ty.clone(), keys);
    }

    let mut relations = BTreeMap::new();
    for (ty, file) in &mf.relation_files {
        let mut edges = Vec::new();
        for row in csv_rows(file)? {
            edges.push(Edge {
                src_type: row[0].to_string(),
                src_id: row[1].parse().map_err(io_err)?,
                dst_type: row[2].to_string(),
                dst_id: row[3].parse().map_err(io_err)?,
            });
        }
        relations.insert(ty.clone(), edges);
    }

    let labels = csv_rows("labels.csv")?
        .iter()
        .map(|r| Ok((r[0].parse().map_err(io_err)?, r[1].parse().map_err(io_err)?)))
        .collect::<Result<Vec<(u32, u32)>, TransformError>>()?;
    let label_dict = csv_rows("label_dict.csv")?
        .iter()
        .map(|r| r[1].to_string())
        .collect();
    let split_set = |name: &str| -> Result<BTreeSet<u32>, TransformError> {
        csv_rows(name)?
            .iter()
            .map(|r| r[0].parse().map_err(io_err))
            .collect()
    };
    let splits = Splits {
        train: split_set("split/train.csv")?,
        valid: split_set("split/valid.csv")?,
        test: split_set("split/test.csv")?,
    };
    let stats: DatasetStats = serde_json::from_slice(
        files.get("stats.json").ok_or_else(|| io_err("stats.json missing"))?,
    )
    .map_err(io_err)?;

    Ok(DatasetPackage {
        node_maps,
        relations,
        labels,
        label_dict,
        splits,
        stats,
        manifest: mf.manifest,
    })
}

/// Writes the package as a directory tree.
pub fn package_write_dir(pkg: &DatasetPackage, dir: &Path) -> Result<(), TransformError> {
    let files = to_files(pkg)?;
    for (name, data) in files {
        let path = dir.join(&name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        fs::write(path, data).map_err(io_err)?;
    }
    Ok(())
}

pub fn package_read_dir(dir: &Path) -> Result<DatasetPackage, TransformError> {
    let mut files = BTreeMap::new();
    for sub in ["", "nodes", "relations", "split"] {
        let base = if sub.is_empty() { dir.to_path_buf() } else { dir.join(sub) };
        let entries = match fs::read_dir(&base) {
            Ok(e) => e,
            Err(_) if !sub.is_empty() => continue,
            Err(e) => return Err(io_err(e)),
        };
        for entry in entries {
            let entry = entry.map_err(io_err)?;
            if entry.file_type().map_err(io_err)?.is_file() {
                let rel = if sub.is_empty() {
                    entry.file_name().to_string_lossy().into_owned()
                } else {
                    format!("{sub}/{}", entry.file_name().to_string_lossy())
                };
                files.insert(rel, fs::read(entry.path()).map_err(io_err)?);
            }
        }
    }
    from_files(&files)
}

/// Writes the package as a single zip archive.
pub fn package_write(pkg: &DatasetPackage, path: &Path) -> Result<(), TransformError> {
    let files = to_files(pkg)?;
    let file = fs::File::create(path).map_err(io_err)?;
    let mut zip = zip::ZipWriter::new(file);
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Stored);
    for (name, data) in files {
        zip.start_file(name, options).map_err(io_err)?;
        zip.write_all(&data).map_err(io_err)?;
    }
    zip.finish().map_err(io_err)?;
    Ok(())
}

pub fn package_read(path: &Path) -> Result<DatasetPackage, TransformError> {
    let file = fs::File::open(path).map_err(io_err)?;
    let mut zip = zip::ZipArchive::new(file).map_err(io_err)?;
    let mut files = BTreeMap::new();
    for i in 0..zip.len() {
        let mut member = zip.by_index(i).map_err(io_err)?;
        let mut data = Vec::new();
        member.read_to_end(&mut data).map_err(io_err)?;
        files.insert(member.name().to_string(), data);
    }
    from_files(&files)
}
