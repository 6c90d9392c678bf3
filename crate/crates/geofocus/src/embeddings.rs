//! Per-article, per-feature-kind embedding vectors: binary store files,
//! lookups, and a synthetic generator for desk-scale experiments.
//!
//! One store file per feature kind. Layout, all little-endian:
//! magic `MMLN` (4 bytes), version `u16` = 1, kind-name length `u16` +
//! UTF-8 kind name, dimension `u32`, record count `u64`; then per record
//! id length `u16`, UTF-8 id, dimension x `f32`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Manifest, Split};
use crate::error::Error;
use crate::geo::{Continent, GeoPoint, Location, LocationKind};
use crate::num::Real;

pub const STORE_MAGIC: &[u8; 4] = b"MMLN";
pub const STORE_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Visual,
    Textual,
}

/// The six feature descriptors the model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    Scene,
    LocationDesc,
    Object,
    ClipImage,
    BertBody,
    BertEntities,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Scene,
        FeatureKind::LocationDesc,
        FeatureKind::Object,
        FeatureKind::ClipImage,
        FeatureKind::BertBody,
        FeatureKind::BertEntities,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Scene => "Scene",
            FeatureKind::LocationDesc => "LocationDesc",
            FeatureKind::Object => "Object",
            FeatureKind::ClipImage => "ClipImage",
            FeatureKind::BertBody => "BertBody",
            FeatureKind::BertEntities => "BertEntities",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("feature kind", format!("unknown kind `{s}`")))
    }

    pub fn modality(&self) -> Modality {
        match self {
            FeatureKind::Scene
            | FeatureKind::LocationDesc
            | FeatureKind::Object
            | FeatureKind::ClipImage => Modality::Visual,
            FeatureKind::BertBody | FeatureKind::BertEntities => Modality::Textual,
        }
    }

    /// Default dimension for this kind.
    pub fn default_dim(&self) -> usize {
        match self {
            FeatureKind::Scene | FeatureKind::LocationDesc | FeatureKind::Object => 2048,
            FeatureKind::ClipImage => 512,
            FeatureKind::BertBody | FeatureKind::BertEntities => 768,
        }
    }

    /// Default synthetic noise level; textual kinds are generated as more
    /// location-discriminative than visual kinds.
    pub fn default_sigma(&self) -> f64 {
        match self.modality() {
            Modality::Visual => 0.6,
            Modality::Textual => 0.2,
        }
    }
}

/// In-memory embedding collection: a dimension table per kind plus one
/// vector per (article, kind).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dims: BTreeMap<FeatureKind, usize>,
    vectors: BTreeMap<FeatureKind, BTreeMap<String, Vec<f32>>>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_kind(&mut self, kind: FeatureKind, dim: usize) -> Result<(), Error> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "dimension must be positive"));
        }
        match self.dims.get(&kind) {
            Some(&d) if d != dim => Err(Error::Dimension {
                what: "feature kind",
                expected: d,
                got: dim,
            }),
            _ => {
                self.dims.insert(kind, dim);
                self.vectors.entry(kind).or_default();
                Ok(())
            }
        }
    }

    pub fn dim(&self, kind: FeatureKind) -> Option<usize> {
        self.dims.get(&kind).copied()
    }

    pub fn kinds(&self) -> impl Iterator<Item = FeatureKind> + '_ {
        self.dims.keys().copied()
    }

    pub fn len(&self, kind: FeatureKind) -> usize {
        self.vectors.get(&kind).map_or(0, BTreeMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.values().all(BTreeMap::is_empty)
    }

    pub fn insert(
        &mut self,
        article_id: &str,
        kind: FeatureKind,
        vector: Vec<f32>,
    ) -> Result<(), Error> {
        let dim = *self.dims.get(&kind).ok_or_else(|| {
            Error::invalid("feature kind", format!("kind {} not declared", kind.name()))
        })?;
        if vector.len() != dim {
            return Err(Error::Dimension {
                what: "embedding vector",
                expected: dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(article_id.to_string()));
        }
        let slot = self.vectors.entry(kind).or_default();
        if slot.contains_key(article_id) {
            return Err(Error::DuplicateRecord {
                id: article_id.to_string(),
                kind: kind.name().to_string(),
            });
        }
        slot.insert(article_id.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, article_id: &str, kind: FeatureKind) -> Option<&[f32]> {
        self.vectors
            .get(&kind)
            .and_then(|m| m.get(article_id))
            .map(Vec::as_slice)
    }

    /// Article ids (from `ids`) missing a vector for any of `kinds`.
    pub fn missing<'a, I: IntoIterator<Item = &'a str>>(
        &self,
        ids: I,
        kinds: &[FeatureKind],
    ) -> Vec<String> {
        ids.into_iter()
            .filter(|id| kinds.iter().any(|k| self.get(id, *k).is_none()))
            .map(String::from)
            .collect()
    }

    /// Concatenation of this article's vectors over `kinds`, in order,
    /// converted to the working scalar.
    pub fn concat<F: Real>(&self, article_id: &str, kinds: &[FeatureKind]) -> Result<Vec<F>, Error> {
        let mut out = Vec::new();
        for kind in kinds {
            let v = self
                .get(article_id, *kind)
                .ok_or_else(|| Error::MissingEmbeddings(vec![article_id.to_string()]))?;
            out.extend(v.iter().map(|&x| F::of(f64::from(x))));
        }
        Ok(out)
    }

    /// Total input dimension of the given kind list.
    pub fn concat_dim(&self, kinds: &[FeatureKind]) -> Result<usize, Error> {
        kinds
            .iter()
            .map(|k| {
                self.dim(*k).ok_or_else(|| {
                    Error::invalid("feature kind", format!("kind {} not in store", k.name()))
                })
            })
            .sum()
    }

    /// Write one kind to its binary store file.
    pub fn write_kind(&self, kind: FeatureKind, path: &Path) -> Result<(), Error> {
        let dim = self.dims.get(&kind).ok_or_else(|| {
            Error::invalid("feature kind", format!("kind {} not declared", kind.name()))
        })?;
        let records = self.vectors.get(&kind).expect("declared kind has a map");
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(STORE_MAGIC);
        buf.extend_from_slice(&STORE_VERSION.to_le_bytes());
        let name = kind.name().as_bytes();
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.extend_from_slice(&(*dim as u32).to_le_bytes());
        buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
        for (id, vec) in records {
            buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
            buf.extend_from_slice(id.as_bytes());
            for v in vec {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(path, e))
    }

    /// Read one kind file into this store.
    pub fn read_kind(&mut self, path: &Path) -> Result<FeatureKind, Error> {
        let mut data = Vec::new();
        File::open(path)
            .map_err(|e| Error::io(path, e))?
            .read_to_end(&mut data)
            .map_err(|e| Error::io(path, e))?;
        let mut r = ByteReader::new(&data, "embedding store");

        if r.take(4)? != STORE_MAGIC {
            return Err(Error::BadMagic {
                what: "embedding store",
            });
        }
        let version = r.u16()?;
        if version != STORE_VERSION {
            return Err(Error::Version {
                what: "embedding store",
                found: version,
            });
        }
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::invalid("embedding store", "kind name is not UTF-8"))?;
        let kind = FeatureKind::parse(name)?;
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        self.declare_kind(kind, dim)?;
        for _ in 0..count {
            let id_len = r.u16()? as usize;
            let id = std::str::from_utf8(r.take(id_len)?)
                .map_err(|_| Error::invalid("embedding store", "article id is not UTF-8"))?
                .to_string();
            let mut vec = Vec::with_capacity(dim);
            for _ in 0..dim {
                vec.push(r.f32()?);
            }
            self.insert(&id, kind, vec)?;
        }
        if !r.at_end() {
            return Err(Error::invalid(
                "embedding store",
                "trailing bytes after the declared record count",
            ));
        }
        Ok(kind)
    }

    /// Write every kind into `dir` as `<Kind>.emb`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for kind in self.dims.keys() {
            self.write_kind(*kind, &dir.join(format!("{}.emb", kind.name())))?;
        }
        Ok(())
    }

    /// Read all `*.emb` files from `dir`.
    pub fn read_dir(dir: &Path) -> Result<Self, Error> {
        let mut store = EmbeddingStore::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "emb"))
            .collect();
        paths.sort();
        for p in paths {
            store.read_kind(&p)?;
        }
        Ok(store)
    }
}

pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(data: &'a [u8], what: &'static str) -> Self {
        ByteReader { data, pos: 0, what }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        if self.pos + n > self.data.len() {
            return Err(Error::Truncated { what: self.what });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u16(&mut self) -> Result<u16, Error> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, Error> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Result<f32, Error> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos == self.data.len()
    }
}

/// How synthetic class prototypes are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthMode {
    /// Independent unit-norm prototype per (class, kind).
    Prototype,
    /// Visual kinds discriminate only classes below the boundary, textual
    /// kinds only classes at or above it; the other side shares one
    /// prototype per kind.
    Complementary { visual_classes: usize },
    /// Prototypes tile the class centroid's unit 3-vector across the
    /// dimension, so embeddings are noisy encodings of the coordinates.
    GeoEncoded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    /// Kinds to generate, with dimension and noise level each.
    pub kinds: Vec<(FeatureKind, usize, f64)>,
    pub seed: u64,
    pub mode: SynthMode,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.classes < 2 {
            return Err(Error::invalid("synth config", "need at least 2 classes"));
        }
        if self.kinds.is_empty() {
            return Err(Error::invalid("synth config", "need at least one kind"));
        }
        for (kind, dim, sigma) in &self.kinds {
            if *dim == 0 || !(*sigma > 0.0) {
                return Err(Error::invalid(
                    "synth config",
                    format!("kind {}: dim and sigma must be positive", kind.name()),
                ));
            }
        }
        if let SynthMode::Complementary { visual_classes } = self.mode {
            if visual_classes == 0 || visual_classes >= self.classes {
                return Err(Error::invalid(
                    "synth config",
                    "complementary boundary must split the classes",
                ));
            }
        }
        Ok(())
    }
}

/// Output of [`synth_generate`]: everything a training run needs.
pub struct SynthData {
    pub store: EmbeddingStore,
    pub manifest: Manifest,
    pub registry: crate::corpus::LocationRegistry,
}

fn synth_centroid(class: usize, classes: usize) -> GeoPoint {
    let cols = (classes as f64).sqrt().ceil() as usize;
    let rows = classes.div_ceil(cols);
    let (row, col) = (class / cols, class % cols);
    let lat = if rows == 1 {
        0.0
    } else {
        -60.0 + 120.0 * row as f64 / (rows - 1) as f64
    };
    let lon = if cols == 1 {
        0.0
    } else {
        -150.0 + 300.0 * col as f64 / (cols - 1) as f64
    };
    GeoPoint::new(lat, lon).expect("grid point valid")
}

fn l2_normalize(v: &mut [f32]) {
    let norm = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (*x as f64 / norm) as f32;
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            x as f32
        })
        .collect()
}

/// Generate a deterministic synthetic dataset: class prototypes on the
/// unit sphere, samples perturbed by Gaussian noise of expected norm
/// sigma and re-normalized; plus a matching manifest and location
/// registry.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthData, Error> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // registry
    let continents = Continent::ALL;
    let locations: Vec<Location> = (0..cfg.classes)
        .map(|c| Location {
            id: format!("synth-loc-{c:03}"),
            name: format!("Synthville {c}"),
            kind: LocationKind::City,
            centroid: synth_centroid(c, cfg.classes),
            area_km2: Some(729.0),
            population: Some(100_000),
            continent: continents[c % continents.len()],
        })
        .collect();
    let registry = crate::corpus::LocationRegistry::new(locations)?;

    // prototypes, one pass in fixed (class, kind) order
    let mut prototypes: BTreeMap<(usize, FeatureKind), Vec<f32>> = BTreeMap::new();
    let mut shared: BTreeMap<FeatureKind, Vec<f32>> = BTreeMap::new();
    for (kind, dim, _) in &cfg.kinds {
        if matches!(cfg.mode, SynthMode::Complementary { .. }) {
            let mut p = gaussian_vec(&mut rng, *dim);
            l2_normalize(&mut p);
            shared.insert(*kind, p);
        }
    }
    for class in 0..cfg.classes {
        for (kind, dim, _) in &cfg.kinds {
            let proto = match cfg.mode {
                SynthMode::Prototype => {
                    let mut p = gaussian_vec(&mut rng, *dim);
                    l2_normalize(&mut p);
                    p
                }
                SynthMode::Complementary { visual_classes } => {
                    let discriminative = match kind.modality() {
                        Modality::Visual => class < visual_classes,
                        Modality::Textual => class >= visual_classes,
                    };
                    // the rng is advanced either way so prototypes do not
                    // depend on the boundary
                    let mut p = gaussian_vec(&mut rng, *dim);
                    l2_normalize(&mut p);
                    if discriminative {
                        p
                    } else {
                        shared[kind].clone()
                    }
                }
                SynthMode::GeoEncoded => {
                    let g = registry.locations()[class].centroid.unit_vector();
                    (0..*dim).map(|i| g[i % 3] as f32).collect()
                }
            };
            prototypes.insert((class, *kind), proto);
        }
    }

    // samples
    let mut store = EmbeddingStore::new();
    for (kind, dim, _) in &cfg.kinds {
        store.declare_kind(*kind, *dim)?;
    }
    let mut articles = Vec::new();
    let per_class = cfg.train_per_class + cfg.val_per_class + cfg.test_per_class;
    for class in 0..cfg.classes {
        let loc_id = format!("synth-loc-{class:03}");
        for idx in 0..per_class {
            let article_id = format!("synth-{class:03}-{idx:03}");
            let split = if idx < cfg.train_per_class {
                Split::Train
            } else if idx < cfg.train_per_class + cfg.val_per_class {
                Split::Val
            } else {
                Split::Test
            };
            for (kind, dim, sigma) in &cfg.kinds {
                let proto = &prototypes[&(class, *kind)];
                let noise = gaussian_vec(&mut rng, *dim);
                // sigma is the expected norm of the whole perturbation, so
                // the per-dimension std shrinks with the dimension
                let s = (*sigma / (*dim as f64).sqrt()) as f32;
                let mut v: Vec<f32> = proto
                    .iter()
                    .zip(noise)
                    .map(|(p, n)| p + s * n)
                    .collect();
                l2_normalize(&mut v);
                store.insert(&article_id, *kind, v)?;
            }
            articles.push(Article {
                id: article_id,
                title: format!("Synthetic article {idx} for class {class}"),
                text: format!("synthetic body {class} {idx}"),
                event_id: format!("synth-ev-{class:03}"),
                event_similarity: 1.0,
                query_location_id: loc_id.clone(),
                image_ref: None,
                split: Some(split),
            });
        }
    }

    Ok(SynthData {
        store,
        manifest: Manifest::new(articles)?,
        registry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_store() -> EmbeddingStore {
        let mut s = EmbeddingStore::new();
        s.declare_kind(FeatureKind::BertBody, 3).unwrap();
        s.insert("a1", FeatureKind::BertBody, vec![1.0, 2.0, 3.0])
            .unwrap();
        s.insert("a2", FeatureKind::BertBody, vec![-0.5, 0.0, 0.25])
            .unwrap();
        s
    }

    #[test]
    fn round_trip_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("BertBody.emb");
        let s = small_store();
        s.write_kind(FeatureKind::BertBody, &path).unwrap();
        let mut loaded = EmbeddingStore::new();
        loaded.read_kind(&path).unwrap();
        assert_eq!(s, loaded);
        // second write is byte-identical
        let path2 = dir.path().join("again.emb");
        loaded.write_kind(FeatureKind::BertBody, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupted_header_errors_are_distinct() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.emb");
        let s = small_store();
        s.write_kind(FeatureKind::BertBody, &path).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(matches!(
            EmbeddingStore::new().read_kind(&path),
            Err(Error::BadMagic { .. })
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        std::fs::write(&path, &bad_version).unwrap();
        assert!(matches!(
            EmbeddingStore::new().read_kind(&path),
            Err(Error::Version { found: 9, .. })
        ));

        let truncated = &good[..good.len() - 3];
        std::fs::write(&path, truncated).unwrap();
        assert!(matches!(
            EmbeddingStore::new().read_kind(&path),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn duplicate_and_dimension_errors() {
        let mut s = small_store();
        assert!(matches!(
            s.insert("a1", FeatureKind::BertBody, vec![0.0; 3]),
            Err(Error::DuplicateRecord { .. })
        ));
        assert!(matches!(
            s.insert("a3", FeatureKind::BertBody, vec![0.0; 4]),
            Err(Error::Dimension { expected: 3, got: 4, .. })
        ));
        assert!(matches!(
            s.insert("a4", FeatureKind::BertBody, vec![f32::NAN, 0.0, 0.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn missing_reported_not_zero_filled() {
        let s = small_store();
        let missing = s.missing(["a1", "zz"], &[FeatureKind::BertBody]);
        assert_eq!(missing, vec!["zz"]);
        assert!(s.concat::<f64>("zz", &[FeatureKind::BertBody]).is_err());
    }

    fn tiny_cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            classes: 2,
            train_per_class: 40,
            val_per_class: 5,
            test_per_class: 5,
            kinds: vec![(FeatureKind::BertBody, 16, 0.05)],
            seed,
            mode: SynthMode::Prototype,
        }
    }

    #[test]
    fn synth_deterministic() {
        let a = synth_generate(&tiny_cfg(7)).unwrap();
        let b = synth_generate(&tiny_cfg(7)).unwrap();
        assert_eq!(a.store, b.store);
        assert_eq!(a.manifest.len(), b.manifest.len());
    }

    #[test]
    fn synth_zero_noise_limit() {
        let mut cfg = tiny_cfg(3);
        cfg.kinds[0].2 = 1e-9;
        let data = synth_generate(&cfg).unwrap();
        let first = data.store.get("synth-000-000", FeatureKind::BertBody).unwrap();
        let second = data.store.get("synth-000-001", FeatureKind::BertBody).unwrap();
        for (a, b) in first.iter().zip(second) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn synth_nearest_prototype_separates() {
        // n=2, sigma=0.05: brute-force nearest-prototype is 100% correct
        let cfg = tiny_cfg(11);
        let data = synth_generate(&cfg).unwrap();
        // recover prototypes as per-class sample means
        let mut means = vec![vec![0.0f64; 16]; 2];
        let mut counts = [0usize; 2];
        for a in data.manifest.articles() {
            let class: usize = a.query_location_id[10..].parse().unwrap();
            let v = data.store.get(&a.id, FeatureKind::BertBody).unwrap();
            for (m, x) in means[class].iter_mut().zip(v) {
                *m += *x as f64;
            }
            counts[class] += 1;
        }
        for (m, c) in means.iter_mut().zip(counts) {
            for x in m.iter_mut() {
                *x /= c as f64;
            }
        }
        for a in data.manifest.articles() {
            let class: usize = a.query_location_id[10..].parse().unwrap();
            let v = data.store.get(&a.id, FeatureKind::BertBody).unwrap();
            let dist = |m: &[f64]| -> f64 {
                v.iter()
                    .zip(m)
                    .map(|(x, y)| (*x as f64 - y).powi(2))
                    .sum()
            };
            let pred = if dist(&means[0]) < dist(&means[1]) { 0 } else { 1 };
            assert_eq!(pred, class, "article {}", a.id);
        }
    }

    #[test]
    fn synth_centroids_far_apart() {
        let cfg = SynthConfig {
            classes: 20,
            ..tiny_cfg(1)
        };
        let data = synth_generate(&cfg).unwrap();
        let locs = data.registry.locations();
        for i in 0..locs.len() {
            for j in (i + 1)..locs.len() {
                let d = crate::geo::great_circle_km(locs[i].centroid, locs[j].centroid);
                assert!(d > 50.0, "classes {i} and {j} only {d} km apart");
            }
        }
    }
}
