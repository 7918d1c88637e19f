//! Interchange format: `manifest.json` plus headerless little-endian `f32`
//! tensor files laid out as (sample, channel, row, col).

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::ClassUnitStack;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub id: String,
    pub side: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorRef {
    pub class: String,
    pub layer: String,
    /// Path relative to the manifest's directory.
    pub file: String,
    pub samples: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    version: u32,
    classes: Vec<String>,
    layers: Vec<LayerSpec>,
    tensors: Vec<TensorRef>,
}

/// A validated manifest. Every referenced file existed with the right size
/// when it was loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub classes: Vec<String>,
    pub layers: Vec<LayerSpec>,
    pub tensors: Vec<TensorRef>,
}

impl DatasetManifest {
    pub fn layer(&self, layer_id: &str) -> Result<&LayerSpec> {
        self.layers
            .iter()
            .find(|l| l.id == layer_id)
            .ok_or_else(|| Error::UnknownIdentifier {
                kind: "layer",
                id: layer_id.to_string(),
            })
    }

    fn check_class(&self, class_id: &str) -> Result<()> {
        if self.classes.iter().any(|c| c == class_id) {
            Ok(())
        } else {
            Err(Error::UnknownIdentifier {
                kind: "class",
                id: class_id.to_string(),
            })
        }
    }

    /// Tensor files for one (class, layer), in manifest order.
    pub fn tensors_for(&self, class_id: &str, layer_id: &str) -> Vec<&TensorRef> {
        self.tensors
            .iter()
            .filter(|t| t.class == class_id && t.layer == layer_id)
            .collect()
    }

    pub fn sample_count(&self, class_id: &str, layer_id: &str) -> usize {
        self.tensors_for(class_id, layer_id).iter().map(|t| t.samples).sum()
    }

    pub fn tensor_path(&self, tensor: &TensorRef) -> PathBuf {
        self.root.join(&tensor.file)
    }
}

fn expected_bytes(samples: usize, layer: &LayerSpec) -> u64 {
    samples as u64 * layer.channels as u64 * (layer.side * layer.side) as u64 * 4
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile { path: path.clone() }
        } else {
            Error::io(&path, e)
        }
    })?;
    let malformed = |reason: String| Error::MalformedManifest {
        path: path.clone(),
        reason,
    };
    let doc: ManifestDoc = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    if doc.version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported version {}", doc.version)));
    }
    let mut seen = HashSet::new();
    for c in &doc.classes {
        if !seen.insert(c.as_str()) {
            return Err(malformed(format!("duplicate class `{c}`")));
        }
    }
    let mut seen = HashSet::new();
    for l in &doc.layers {
        if !seen.insert(l.id.as_str()) {
            return Err(malformed(format!("duplicate layer `{}`", l.id)));
        }
        if l.side < 2 || l.channels == 0 {
            return Err(malformed(format!(
                "layer `{}` needs side >= 2 and channels >= 1 (got side {}, channels {})",
                l.id, l.side, l.channels
            )));
        }
    }
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = DatasetManifest {
        root,
        classes: doc.classes,
        layers: doc.layers,
        tensors: doc.tensors,
    };
    for (i, t) in manifest.tensors.iter().enumerate() {
        if !manifest.classes.contains(&t.class) {
            return Err(malformed(format!("tensor {i} ({}) names unknown class `{}`", t.file, t.class)));
        }
        let layer = manifest
            .layer(&t.layer)
            .map_err(|_| malformed(format!("tensor {i} ({}) names unknown layer `{}`", t.file, t.layer)))?;
        if t.samples == 0 {
            return Err(malformed(format!("tensor {i} ({}) has zero samples", t.file)));
        }
        let file = manifest.tensor_path(t);
        let meta = fs::metadata(&file).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile { path: file.clone() }
            } else {
                Error::io(&file, e)
            }
        })?;
        let expected = expected_bytes(t.samples, layer);
        if meta.len() != expected {
            return Err(Error::SizeMismatch {
                path: file,
                expected,
                found: meta.len(),
            });
        }
    }
    Ok(manifest)
}

fn decode(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Loads every sample of one channel.
pub fn load_class_stack(
    manifest: &DatasetManifest,
    class_id: &str,
    layer_id: &str,
    channel_id: usize,
) -> Result<ClassUnitStack<f32>> {
    manifest.check_class(class_id)?;
    let layer = manifest.layer(layer_id)?;
    if channel_id >= layer.channels {
        return Err(Error::UnknownIdentifier {
            kind: "channel",
            id: format!("{channel_id} (layer `{layer_id}` has {} channels)", layer.channels),
        });
    }
    let cells = layer.side * layer.side;
    let mut grids = Vec::new();
    let mut buf = vec![0u8; cells * 4];
    for t in manifest.tensors_for(class_id, layer_id) {
        let path = manifest.tensor_path(t);
        let mut file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        for sample in 0..t.samples {
            let offset = ((sample * layer.channels + channel_id) * cells * 4) as u64;
            file.seek(SeekFrom::Start(offset)).map_err(|e| Error::io(&path, e))?;
            file.read_exact(&mut buf).map_err(|e| Error::io(&path, e))?;
            grids.push(decode(&buf));
        }
    }
    if grids.is_empty() {
        return Err(Error::UnknownIdentifier {
            kind: "tensor",
            id: format!("{class_id}/{layer_id}"),
        });
    }
    ClassUnitStack::from_grids(class_id, layer_id, channel_id, layer.side, grids)
}

/// Loads all channels of one (class, layer), reading each file once.
pub fn load_layer_stacks(
    manifest: &DatasetManifest,
    class_id: &str,
    layer_id: &str,
) -> Result<Vec<ClassUnitStack<f32>>> {
    manifest.check_class(class_id)?;
    let layer = manifest.layer(layer_id)?;
    let cells = layer.side * layer.side;
    let mut per_channel: Vec<Vec<Vec<f32>>> = vec![Vec::new(); layer.channels];
    for t in manifest.tensors_for(class_id, layer_id) {
        let path = manifest.tensor_path(t);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let expected = expected_bytes(t.samples, layer);
        if bytes.len() as u64 != expected {
            return Err(Error::SizeMismatch {
                path,
                expected,
                found: bytes.len() as u64,
            });
        }
        let values = decode(&bytes);
        for (block, grid) in values.chunks_exact(cells).enumerate() {
            per_channel[block % layer.channels].push(grid.to_vec());
        }
    }
    if per_channel[0].is_empty() {
        return Err(Error::UnknownIdentifier {
            kind: "tensor",
            id: format!("{class_id}/{layer_id}"),
        });
    }
    per_channel
        .into_iter()
        .enumerate()
        .map(|(ch, grids)| ClassUnitStack::from_grids(class_id, layer_id, ch, layer.side, grids))
        .collect()
}

/// Writes tensors in the interchange format. The manifest is written last by
/// [`DatasetWriter::finish`], so a dataset without one is incomplete.
#[derive(Debug)]
pub struct DatasetWriter {
    dir: PathBuf,
    classes: Vec<String>,
    layers: Vec<LayerSpec>,
    tensors: Vec<TensorRef>,
}

impl DatasetWriter {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(DatasetWriter {
            dir,
            classes: Vec::new(),
            layers: Vec::new(),
            tensors: Vec::new(),
        })
    }

    /// Writes one tensor file holding `channels[c]` as channel `c`. All
    /// stacks must share side and sample count.
    pub fn add_tensor(&mut self, class_id: &str, layer_id: &str, channels: &[ClassUnitStack<f32>]) -> Result<()> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("a tensor needs at least one channel"))?;
        let (side, samples) = (first.side(), first.sample_count());
        if channels.iter().any(|s| s.side() != side || s.sample_count() != samples) {
            return Err(Error::DimensionMismatch("channel stacks differ in side or sample count".into()));
        }
        match self.layers.iter().find(|l| l.id == layer_id) {
            Some(l) if l.side != side || l.channels != channels.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "layer `{layer_id}` already registered with side {} and {} channels",
                    l.side, l.channels
                )));
            }
            Some(_) => {}
            None => self.layers.push(LayerSpec {
                id: layer_id.to_string(),
                side,
                channels: channels.len(),
            }),
        }
        if !self.classes.iter().any(|c| c == class_id) {
            self.classes.push(class_id.to_string());
        }
        let name = format!("tensor_{:04}.f32", self.tensors.len());
        let path = self.dir.join(&name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for sample in 0..samples {
            for stack in channels {
                for v in stack.units()[sample].values() {
                    out.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&path, e))?;
                }
            }
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        self.tensors.push(TensorRef {
            class: class_id.to_string(),
            layer: layer_id.to_string(),
            file: name,
            samples,
        });
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let doc = ManifestDoc {
            version: FORMAT_VERSION,
            classes: self.classes,
            layers: self.layers,
            tensors: self.tensors,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
