//! Benchmark manifests: a list of (image, corruption, seed) entries executed
//! deterministically, optionally across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corruption::{apply_corruption_with, CorruptionKind, CorruptionParams, CorruptionRanges, CorruptionSpec, DepthMap, SideInputs};
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::io;
use crate::raw::demosaic_bilinear;
use crate::rng::{derive_seed, RngStream};

/// Where the pixels of one manifest image come from. Paths are relative to
/// the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    /// PPM/PGM read as linear values.
    Rgb(String),
    /// RAW container (`.pgm` + `.json` sidecar), demosaiced.
    Raw(String),
    /// Deterministic synthetic scene.
    Synthetic { width: usize, height: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DepthSource {
    Procedural,
    File(String),
}

/// One manifest row. A missing seed is derived from the master seed and
/// the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EntryRepr", into = "EntryRepr")]
pub struct BenchEntry {
    pub image_id: String,
    pub kind: CorruptionKind,
    pub seed: Option<u64>,
    pub params: Option<CorruptionParams>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRepr {
    image_id: String,
    kind: CorruptionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

impl TryFrom<EntryRepr> for BenchEntry {
    type Error = String;

    fn try_from(r: EntryRepr) -> std::result::Result<Self, String> {
        let params = match r.params {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(
                CorruptionParams::from_value(r.kind, v)
                    .map_err(|e| format!("entry `{}` params for {}: {e}", r.image_id, r.kind))?,
            ),
        };
        Ok(Self {
            image_id: r.image_id,
            kind: r.kind,
            seed: r.seed,
            params,
        })
    }
}

impl From<BenchEntry> for EntryRepr {
    fn from(e: BenchEntry) -> Self {
        Self {
            image_id: e.image_id,
            kind: e.kind,
            seed: e.seed,
            params: e.params.map(|p| serde_json::to_value(p).expect("params serialize")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchManifest {
    pub master_seed: u64,
    pub images: BTreeMap<String, ImageSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthSource>,
    /// Flare layer asset applied to every flare entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flare: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<CorruptionRanges>,
    pub entries: Vec<BenchEntry>,
}

impl BenchManifest {
    pub fn seed_of(&self, index: usize) -> u64 {
        self.entries[index]
            .seed
            .unwrap_or_else(|| derive_seed(self.master_seed, index as u64))
    }

    pub fn spec_of(&self, index: usize) -> CorruptionSpec {
        let e = &self.entries[index];
        CorruptionSpec {
            kind: e.kind,
            seed: self.seed_of(index),
            params: e.params.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if !self.images.contains_key(&e.image_id) {
                return Err(Error::param("entries", format!("entry {i} names unknown image `{}`", e.image_id)));
            }
            if !seen.insert((e.image_id.clone(), e.kind, self.seed_of(i))) {
                return Err(Error::param(
                    "entries",
                    format!("entry {i} repeats image `{}` for ({}, seed {})", e.image_id, e.kind, self.seed_of(i)),
                ));
            }
        }
        if let Some(r) = &self.ranges {
            r.validate()?;
        }
        Ok(())
    }

    /// One entry per corruption kind for every image, seeds left to the
    /// master seed.
    pub fn sweep(master_seed: u64, images: BTreeMap<String, ImageSource>, depth: Option<DepthSource>) -> Self {
        let entries = images
            .keys()
            .flat_map(|id| {
                CorruptionKind::ALL.into_iter().map(move |kind| BenchEntry {
                    image_id: id.clone(),
                    kind,
                    seed: None,
                    params: None,
                })
            })
            .collect();
        Self {
            master_seed,
            images,
            depth,
            flare: None,
            ranges: None,
            entries,
        }
    }
}

/// Smooth colored gradients with a checker and seeded texture, values in
/// (0, 1).
pub fn synthetic_scene(width: usize, height: usize, seed: u64) -> LinearRgbImage {
    let mut rng = RngStream::from_seed(seed);
    let (w, h) = (width.max(1) as f64, height.max(1) as f64);
    LinearRgbImage::from_fn(width, height, |x, y| {
        let (u, v) = (x as f64 / w, y as f64 / h);
        let checker = if (x / 8 + y / 8) % 2 == 0 { 0.1 } else { 0.0 };
        let n = 0.05 * rng.uniform();
        [
            0.15 + 0.6 * u + checker + n,
            0.2 + 0.5 * v + checker + n,
            0.1 + 0.4 * (1.0 - u) * v + checker + n,
        ]
    })
}

/// Decoded inputs for a manifest.
#[derive(Debug, Clone)]
pub struct BenchInputs {
    pub images: BTreeMap<String, LinearRgbImage>,
    pub depth: BTreeMap<String, DepthMap>,
    pub flare: Option<LinearRgbImage>,
}

pub fn load_inputs(manifest: &BenchManifest, base: &Path) -> Result<BenchInputs> {
    let mut images = BTreeMap::new();
    for (id, src) in &manifest.images {
        let img = match src {
            ImageSource::Rgb(p) => io::read_rgb(&base.join(p))?,
            ImageSource::Raw(p) => {
                let pgm = base.join(p);
                demosaic_bilinear(&io::read_raw(&pgm, &io::sidecar_path_for(&pgm))?)
            }
            ImageSource::Synthetic { width, height, seed } => synthetic_scene(*width, *height, *seed),
        };
        images.insert(id.clone(), img);
    }
    let mut depth = BTreeMap::new();
    if let Some(d) = &manifest.depth {
        for (id, img) in &images {
            let map = match d {
                DepthSource::Procedural => DepthMap::procedural(img.width(), img.height()),
                DepthSource::File(p) => {
                    let g = io::read_gray(&base.join(p))?;
                    DepthMap::new(g.width(), g.height(), g.data().to_vec())?
                }
            };
            depth.insert(id.clone(), map);
        }
    }
    let flare = manifest.flare.as_ref().map(|p| io::read_rgb(&base.join(p))).transpose()?;
    Ok(BenchInputs { images, depth, flare })
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub index: usize,
    pub image_id: String,
    pub kind: CorruptionKind,
    pub seed: u64,
    pub params: CorruptionParams,
    pub image: LinearRgbImage,
    pub hash: String,
}

impl BenchResult {
    /// `<index>\t<image_id>\t<kind>\t<seed>\t<hash>`.
    pub fn hash_line(&self) -> String {
        format!("{}\t{}\t{}\t{}\t{}", self.index, self.image_id, self.kind, self.seed, self.hash)
    }
}

/// Runs every entry on `jobs` threads (`0` = rayon default). Output order
/// and content do not depend on `jobs`.
pub fn run_bench(manifest: &BenchManifest, inputs: &BenchInputs, jobs: usize) -> Result<Vec<BenchResult>> {
    manifest.validate()?;
    let ranges = manifest.ranges.clone().unwrap_or_default();
    let run_one = |i: usize| -> Result<BenchResult> {
        let e = &manifest.entries[i];
        let img = inputs
            .images
            .get(&e.image_id)
            .ok_or_else(|| Error::MissingDependency(format!("image `{}` was not loaded", e.image_id)))?;
        let side = SideInputs {
            depth: inputs.depth.get(&e.image_id),
            flare: inputs.flare.as_ref(),
            snow: None,
        };
        let spec = manifest.spec_of(i);
        let (y, params) = apply_corruption_with(&spec, img, &side, &ranges)?;
        Ok(BenchResult {
            index: i,
            image_id: e.image_id.clone(),
            kind: e.kind,
            seed: spec.seed,
            params,
            hash: y.content_hash(),
            image: y,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param("jobs", e.to_string()))?;
    pool.install(|| (0..manifest.entries.len()).into_par_iter().map(run_one).collect())
}
