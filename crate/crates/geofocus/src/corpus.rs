//! Data model and persistence: articles, event clusters, entity mentions,
//! the offline knowledge snapshot, annotations, and stratified splitting.
//!
//! All files are JSON Lines, UTF-8, one object per line. Line order is
//! preserved across a load/save round trip.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geo::{Continent, GeoPoint, Location};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "Train",
            Split::Val => "Val",
            Split::Test => "Test",
        }
    }
}

/// One news document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub text: String,
    pub event_id: String,
    /// Closeness of the article to its event cluster, in [0, 1].
    pub event_similarity: f64,
    pub query_location_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventCluster {
    pub id: String,
    pub name: String,
    pub query_location_id: String,
    pub category_relevance: f64,
    pub query_relevance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityMention {
    pub article_id: String,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kb_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KbKind {
    Place,
    Person,
    Other,
}

/// One entry of the offline knowledge snapshot standing in for a live
/// knowledge base.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KbEntry {
    pub kb_id: String,
    pub kind: KbKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birthplace_coord: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_km2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
    Unsure,
}

/// Per-article yes/no/unsure answers to the three annotation criteria
/// from one coder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub article_id: String,
    pub coder_id: String,
    pub c1: Answer,
    pub c2: Answer,
    pub c3: Answer,
}

/// Generic JSONL reader; errors name the offending line number.
pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            source: e,
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn save_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("serializable");
        writeln!(writer, "{line}").map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// An ordered article collection with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    articles: Vec<Article>,
}

impl Manifest {
    pub fn new(articles: Vec<Article>) -> Result<Self, Error> {
        let mut seen = HashSet::new();
        for a in &articles {
            if !seen.insert(a.id.clone()) {
                return Err(Error::DuplicateId {
                    what: "article",
                    id: a.id.clone(),
                });
            }
            if !(0.0..=1.0).contains(&a.event_similarity) {
                return Err(Error::invalid(
                    "event_similarity",
                    format!("article `{}`: {} outside [0, 1]", a.id, a.event_similarity),
                ));
            }
        }
        Ok(Manifest { articles })
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Article> {
        self.articles.iter().find(|a| a.id == id)
    }

    /// Articles restricted to one split, in manifest order.
    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &Article> {
        self.articles.iter().filter(move |a| a.split == Some(split))
    }

    /// Keep only the articles whose id is in `keep`; order preserved.
    pub fn retain_ids(&self, keep: &HashSet<String>) -> Manifest {
        Manifest {
            articles: self
                .articles
                .iter()
                .filter(|a| keep.contains(&a.id))
                .cloned()
                .collect(),
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, Error> {
    Manifest::new(load_jsonl(path)?)
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<(), Error> {
    save_jsonl(&manifest.articles, path)
}

/// Location registry keyed by id.
#[derive(Debug, Clone, Default)]
pub struct LocationRegistry {
    locations: Vec<Location>,
    index: HashMap<String, usize>,
}

impl LocationRegistry {
    pub fn new(locations: Vec<Location>) -> Result<Self, Error> {
        let mut index = HashMap::new();
        for (i, loc) in locations.iter().enumerate() {
            loc.validate()?;
            if index.insert(loc.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    what: "location",
                    id: loc.id.clone(),
                });
            }
        }
        Ok(LocationRegistry { locations, index })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::new(load_jsonl(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        save_jsonl(&self.locations, path)
    }

    pub fn get(&self, id: &str) -> Option<&Location> {
        self.index.get(id).map(|&i| &self.locations[i])
    }

    pub fn require(&self, id: &str) -> Result<&Location, Error> {
        self.get(id).ok_or_else(|| Error::UnknownId {
            what: "location",
            id: id.to_string(),
        })
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// Knowledge snapshot keyed by kb id.
#[derive(Debug, Clone, Default)]
pub struct Knowledge {
    entries: HashMap<String, KbEntry>,
}

impl Knowledge {
    pub fn new(entries: Vec<KbEntry>) -> Result<Self, Error> {
        let mut map = HashMap::new();
        for e in entries {
            if map.insert(e.kb_id.clone(), e.clone()).is_some() {
                return Err(Error::DuplicateId {
                    what: "kb entry",
                    id: e.kb_id,
                });
            }
        }
        Ok(Knowledge { entries: map })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::new(load_jsonl(path)?)
    }

    pub fn get(&self, kb_id: &str) -> Option<&KbEntry> {
        self.entries.get(kb_id)
    }
}

/// Coordinate a mention resolves to: places contribute their own
/// coordinate, persons their place of birth.
pub fn resolve_entity_coord(mention: &EntityMention, kb: &Knowledge) -> Option<GeoPoint> {
    let entry = kb.get(mention.kb_id.as_deref()?)?;
    match entry.kind {
        KbKind::Place => entry.coord,
        KbKind::Person => entry.birthplace_coord,
        KbKind::Other => None,
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SplitSummary {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub warnings: Vec<String>,
}

/// Assign train/val/test splits per location: shuffle with a seeded PRNG,
/// give round(0.1 m) articles each to Val and Test (at least 1 when
/// m >= 5), rest to Train. Locations with fewer than 3 articles go
/// entirely to Train with a warning.
pub fn split_dataset(manifest: &mut Manifest, seed: u64) -> Result<SplitSummary, Error> {
    let mut by_location: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, a) in manifest.articles.iter().enumerate() {
        if a.query_location_id.is_empty() {
            return Err(Error::invalid(
                "query_location_id",
                format!("article `{}` has no query location", a.id),
            ));
        }
        by_location.entry(a.query_location_id.clone()).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = SplitSummary::default();
    for (loc_id, mut idx) in by_location {
        idx.shuffle(&mut rng);
        let m = idx.len();
        if m < 3 {
            summary.warnings.push(format!(
                "location `{loc_id}` has only {m} article(s); all assigned to Train"
            ));
            for i in idx {
                manifest.articles[i].split = Some(Split::Train);
                summary.train += 1;
            }
            continue;
        }
        let mut holdout = (0.1 * m as f64).round() as usize;
        if m >= 5 {
            holdout = holdout.max(1);
        }
        for (pos, i) in idx.into_iter().enumerate() {
            let split = if pos < holdout {
                Split::Val
            } else if pos < 2 * holdout {
                Split::Test
            } else {
                Split::Train
            };
            manifest.articles[i].split = Some(split);
            match split {
                Split::Train => summary.train += 1,
                Split::Val => summary.val += 1,
                Split::Test => summary.test += 1,
            }
        }
    }
    Ok(summary)
}

/// Per-continent, per-split article counts plus totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    /// Rows Train/Val/Test, columns in [`Continent::ALL`] order.
    pub counts: [[usize; 6]; 3],
    pub row_totals: [usize; 3],
    pub col_totals: [usize; 6],
    pub total: usize,
}

pub fn stats(manifest: &Manifest, registry: &LocationRegistry) -> Result<DatasetStats, Error> {
    let mut counts = [[0usize; 6]; 3];
    for a in manifest.articles() {
        let split = a.split.ok_or_else(|| {
            Error::invalid("split", format!("article `{}` has no split assigned", a.id))
        })?;
        let loc = registry.require(&a.query_location_id)?;
        let row = Split::ALL.iter().position(|s| *s == split).unwrap();
        let col = Continent::ALL.iter().position(|c| *c == loc.continent).unwrap();
        counts[row][col] += 1;
    }
    let row_totals = std::array::from_fn(|r| counts[r].iter().sum());
    let col_totals = std::array::from_fn(|c| (0..3).map(|r| counts[r][c]).sum());
    let total = row_totals.iter().sum();
    Ok(DatasetStats {
        counts,
        row_totals,
        col_totals,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LocationKind;
    use tempfile::tempdir;

    fn article(id: &str, loc: &str) -> Article {
        Article {
            id: id.to_string(),
            title: format!("title {id}"),
            text: format!("text {id}"),
            event_id: "ev-1".to_string(),
            event_similarity: 0.5,
            query_location_id: loc.to_string(),
            image_ref: None,
            split: None,
        }
    }

    fn registry_with(continent: Continent) -> LocationRegistry {
        LocationRegistry::new(vec![Location {
            id: "loc-1".to_string(),
            name: "Somewhere".to_string(),
            kind: LocationKind::City,
            centroid: GeoPoint::new(50.0, 8.0).unwrap(),
            area_km2: Some(100.0),
            population: Some(100_000),
            continent,
        }])
        .unwrap()
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("articles.jsonl");
        let m = Manifest::new(vec![article("a", "loc-1"), article("b", "loc-1")]).unwrap();
        save_manifest(&m, &path).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded.articles()[0].id, "a");
        assert_eq!(loaded.articles()[1].id, "b");
        // byte-identical re-save
        save_manifest(&loaded, &dir.path().join("again.jsonl")).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(dir.path().join("again.jsonl")).unwrap()
        );
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = Manifest::new(vec![article("a", "l"), article("a", "l")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { .. }));
    }

    #[test]
    fn empty_file_is_empty_manifest() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_manifest(&path).unwrap().is_empty());
    }

    #[test]
    fn malformed_line_names_line_number() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&article("a", "l")).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        match load_manifest(&path).unwrap_err() {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn resolve_place_and_person() {
        let kb = Knowledge::new(vec![
            KbEntry {
                kb_id: "Q1".to_string(),
                kind: KbKind::Place,
                coord: Some(GeoPoint::new(48.85, 2.35).unwrap()),
                birthplace_coord: None,
                area_km2: None,
            },
            KbEntry {
                kb_id: "Q2".to_string(),
                kind: KbKind::Person,
                coord: None,
                birthplace_coord: Some(GeoPoint::new(40.4, -3.7).unwrap()),
                area_km2: None,
            },
        ])
        .unwrap();
        let m = |kb_id: Option<&str>| EntityMention {
            article_id: "a".to_string(),
            surface: "x".to_string(),
            kb_id: kb_id.map(String::from),
        };
        let p = resolve_entity_coord(&m(Some("Q1")), &kb).unwrap();
        assert_eq!((p.lat_deg(), p.lon_deg()), (48.85, 2.35));
        let b = resolve_entity_coord(&m(Some("Q2")), &kb).unwrap();
        assert_eq!((b.lat_deg(), b.lon_deg()), (40.4, -3.7));
        assert!(resolve_entity_coord(&m(Some("Q404")), &kb).is_none());
        assert!(resolve_entity_coord(&m(None), &kb).is_none());
    }

    #[test]
    fn split_counts_follow_rounding_rule() {
        let mut arts = Vec::new();
        for i in 0..10 {
            arts.push(article(&format!("a{i:02}"), "loc-1"));
        }
        let mut m = Manifest::new(arts).unwrap();
        let s = split_dataset(&mut m, 7).unwrap();
        assert_eq!((s.train, s.val, s.test), (8, 1, 1));

        let mut m5 =
            Manifest::new((0..5).map(|i| article(&format!("b{i}"), "loc-1")).collect()).unwrap();
        let s5 = split_dataset(&mut m5, 7).unwrap();
        assert_eq!((s5.train, s5.val, s5.test), (3, 1, 1));
    }

    #[test]
    fn split_deterministic() {
        let arts: Vec<_> = (0..37).map(|i| article(&format!("a{i:02}"), "loc-1")).collect();
        let mut m1 = Manifest::new(arts.clone()).unwrap();
        let mut m2 = Manifest::new(arts).unwrap();
        split_dataset(&mut m1, 99).unwrap();
        split_dataset(&mut m2, 99).unwrap();
        for (a, b) in m1.articles().iter().zip(m2.articles()) {
            assert_eq!(a.split, b.split);
        }
    }

    #[test]
    fn tiny_location_all_train_with_warning() {
        let mut m =
            Manifest::new((0..2).map(|i| article(&format!("t{i}"), "loc-1")).collect()).unwrap();
        let s = split_dataset(&mut m, 1).unwrap();
        assert_eq!((s.train, s.val, s.test), (2, 0, 0));
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn stats_single_article() {
        let reg = registry_with(Continent::EU);
        let mut a = article("a", "loc-1");
        a.split = Some(Split::Train);
        let m = Manifest::new(vec![a]).unwrap();
        let st = stats(&m, &reg).unwrap();
        assert_eq!(st.counts[0][2], 1); // Train row, EU column
        assert_eq!(st.total, 1);
        assert_eq!(st.counts.iter().flatten().sum::<usize>(), 1);
    }

    #[test]
    fn stats_unknown_location_errors() {
        let reg = registry_with(Continent::EU);
        let mut a = article("a", "loc-404");
        a.split = Some(Split::Train);
        let m = Manifest::new(vec![a]).unwrap();
        assert!(matches!(stats(&m, &reg), Err(Error::UnknownId { .. })));
    }

    #[test]
    fn splits_partition_articles() {
        let mut arts = Vec::new();
        for loc in ["loc-a", "loc-b", "loc-c"] {
            for i in 0..17 {
                arts.push(article(&format!("{loc}-{i:02}"), loc));
            }
        }
        let mut m = Manifest::new(arts).unwrap();
        let s = split_dataset(&mut m, 5).unwrap();
        assert!(m.articles().iter().all(|a| a.split.is_some()));
        assert_eq!(s.train + s.val + s.test, m.len());
        // per-location holdouts within +-1 of 10% for m >= 5
        assert_eq!(s.val, 6); // 3 locations * round(1.7) = 2
        assert_eq!(s.test, 6);
    }
}
