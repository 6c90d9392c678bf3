//! The weakly-supervised filtering chain: event relevance, entity-location
//! match, event-article distance, TF-IDF redundancy removal, and
//! rare-location pruning, in that order.
//!
//! Every stage only ever removes articles. Aggregate statistics (means)
//! are computed over a stage's input before any per-article decision, and
//! final assembly is in ascending article-id order, so the whole run is
//! deterministic.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    resolve_entity_coord, Article, EntityMention, EventCluster, Knowledge, LocationRegistry,
    Manifest,
};
use crate::error::Error;
use crate::geo::{area_radius_km, great_circle_km, Location};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Root parameter of the entity-match radius (the k in the k-th root
    /// of the location area).
    pub k: u32,
    /// Cosine similarity above which the later of two articles is dropped.
    pub dedup_threshold: f64,
    /// Locations with fewer surviving articles than this are removed.
    pub min_articles: usize,
    /// Entity-match radius when the location has no area value.
    pub default_radius_km: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            k: 6,
            dedup_threshold: 0.5,
            min_articles: 5,
            default_radius_km: 50.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.k < 1 {
            return Err(Error::invalid("filter config", "k must be >= 1"));
        }
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return Err(Error::invalid(
                "filter config",
                "dedup_threshold must lie in (0, 1]",
            ));
        }
        if self.min_articles < 1 {
            return Err(Error::invalid("filter config", "min_articles must be >= 1"));
        }
        if !(self.default_radius_km > 0.0) {
            return Err(Error::invalid(
                "filter config",
                "default_radius_km must be positive",
            ));
        }
        Ok(())
    }
}

/// L2-normalized sparse TF-IDF vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfidfVector(BTreeMap<String, f64>);

impl TfidfVector {
    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cosine(&self, other: &TfidfVector) -> f64 {
        // both unit vectors, so the dot product is the cosine
        let (small, large) = if self.0.len() <= other.0.len() {
            (&self.0, &other.0)
        } else {
            (&other.0, &self.0)
        };
        small
            .iter()
            .filter_map(|(t, w)| large.get(t).map(|v| w * v))
            .sum()
    }
}

/// Lowercase, split on non-alphanumeric runs, drop tokens shorter than 2.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(String::from)
        .collect()
}

/// TF-IDF vectors for a document collection: raw term counts weighted by
/// the smoothed idf `ln((1+N)/(1+df)) + 1`, then L2-normalized.
pub fn tfidf_corpus<S: AsRef<str>>(documents: &[S]) -> Vec<TfidfVector> {
    let token_lists: Vec<Vec<String>> = documents.iter().map(|d| tokenize(d.as_ref())).collect();
    let n_docs = token_lists.len() as f64;

    let mut df: HashMap<&str, f64> = HashMap::new();
    for tokens in &token_lists {
        let unique: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_insert(0.0) += 1.0;
        }
    }

    token_lists
        .iter()
        .map(|tokens| {
            let mut tf: BTreeMap<String, f64> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t.clone()).or_insert(0.0) += 1.0;
            }
            for (term, w) in tf.iter_mut() {
                let idf = ((1.0 + n_docs) / (1.0 + df[term.as_str()])).ln() + 1.0;
                *w *= idf;
            }
            let norm = tf.values().map(|w| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for w in tf.values_mut() {
                    *w /= norm;
                }
            }
            TfidfVector(tf)
        })
        .collect()
}

/// Keep an event iff the location name occurs (case-insensitively) in the
/// event name and both relevance scores are at or above the mean of the
/// input list.
pub fn filter_events<'a>(
    events: &[&'a EventCluster],
    location: &Location,
) -> Vec<&'a EventCluster> {
    if events.is_empty() {
        return Vec::new();
    }
    let n = events.len() as f64;
    let mean_cat = events.iter().map(|e| e.category_relevance).sum::<f64>() / n;
    let mean_query = events.iter().map(|e| e.query_relevance).sum::<f64>() / n;
    let needle = location.name.to_lowercase();
    events
        .iter()
        .filter(|e| {
            e.name.to_lowercase().contains(&needle)
                && e.category_relevance >= mean_cat
                && e.query_relevance >= mean_query
        })
        .copied()
        .collect()
}

/// Matching entity evidence for a kept article.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub surface: String,
    pub kb_id: Option<String>,
    pub gcd_km: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntityMatch {
    pub keep: bool,
    /// The matching entity with the smallest GCD, when kept.
    pub witness: Option<Witness>,
    /// Discard reason, when not kept.
    pub reason: Option<String>,
}

/// Keep an article iff some resolved mention lies strictly within the
/// area-root radius of the query location centroid.
pub fn filter_entity_match(
    _article: &Article,
    mentions: &[&EntityMention],
    kb: &Knowledge,
    location: &Location,
    cfg: &FilterConfig,
) -> Result<EntityMatch, Error> {
    let radius_km = match location.area_km2 {
        Some(a) => area_radius_km(a, cfg.k)?,
        None => cfg.default_radius_km,
    };

    let mut nearest: Option<Witness> = None;
    for m in mentions {
        if let Some(coord) = resolve_entity_coord(m, kb) {
            let d = great_circle_km(coord, location.centroid);
            if nearest.as_ref().map_or(true, |w| d < w.gcd_km) {
                nearest = Some(Witness {
                    surface: m.surface.clone(),
                    kb_id: m.kb_id.clone(),
                    gcd_km: d,
                });
            }
        }
    }

    match nearest {
        None => Ok(EntityMatch {
            keep: false,
            witness: None,
            reason: Some("no resolvable entities".to_string()),
        }),
        Some(w) if w.gcd_km < radius_km => Ok(EntityMatch {
            keep: true,
            witness: Some(w),
            reason: None,
        }),
        Some(w) => Ok(EntityMatch {
            keep: false,
            witness: None,
            reason: Some(format!(
                "nearest entity `{}` at {:.3} km >= radius {:.3} km",
                w.surface, w.gcd_km, radius_km
            )),
        }),
    }
}

/// Keep the articles of one event cluster whose similarity is at or above
/// the cluster mean.
pub fn filter_event_distance<'a>(articles: &[&'a Article]) -> Vec<&'a Article> {
    if articles.is_empty() {
        return Vec::new();
    }
    let mean = articles.iter().map(|a| a.event_similarity).sum::<f64>() / articles.len() as f64;
    articles
        .iter()
        .filter(|a| a.event_similarity >= mean)
        .copied()
        .collect()
}

/// Greedy near-duplicate sweep in ascending id order: keep an article iff
/// its cosine to every already-kept article is at or below the threshold.
pub fn dedupe(
    articles: &[(String, TfidfVector)],
    threshold: f64,
) -> (Vec<String>, Vec<(String, String, f64)>) {
    let mut order: Vec<&(String, TfidfVector)> = articles.iter().collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));

    let mut kept: Vec<&(String, TfidfVector)> = Vec::new();
    let mut dropped = Vec::new();
    'outer: for item in order {
        for k in &kept {
            let sim = item.1.cosine(&k.1);
            if sim > threshold {
                dropped.push((item.0.clone(), k.0.clone(), sim));
                continue 'outer;
            }
        }
        kept.push(item);
    }
    (kept.into_iter().map(|k| k.0.clone()).collect(), dropped)
}

/// Remove every location (with its articles) that retains fewer than
/// `min_articles` articles.
pub fn filter_rare_locations(manifest: &Manifest, min_articles: usize) -> Manifest {
    let mut per_location: HashMap<&str, usize> = HashMap::new();
    for a in manifest.articles() {
        *per_location.entry(a.query_location_id.as_str()).or_insert(0) += 1;
    }
    let keep: HashSet<String> = manifest
        .articles()
        .iter()
        .filter(|a| per_location[a.query_location_id.as_str()] >= min_articles)
        .map(|a| a.id.clone())
        .collect();
    manifest.retain_ids(&keep)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageCounts {
    pub stage: String,
    pub input: usize,
    pub kept: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Discard {
    pub article_id: String,
    pub stage: String,
    pub reason: String,
}

/// Per-stage counts and per-article discard reasons for one pipeline run.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct PipelineReport {
    pub stages: Vec<StageCounts>,
    pub discards: Vec<Discard>,
}

impl PipelineReport {
    fn record_stage(&mut self, stage: &str, input: usize, kept: usize) {
        self.stages.push(StageCounts {
            stage: stage.to_string(),
            input,
            kept,
            discarded: input - kept,
        });
    }

    fn record_discard(&mut self, article_id: &str, stage: &str, reason: String) {
        self.discards.push(Discard {
            article_id: article_id.to_string(),
            stage: stage.to_string(),
            reason,
        });
    }
}

const STAGE_EVENTS: &str = "event_relevance";
const STAGE_ENTITY: &str = "entity_match";
const STAGE_DISTANCE: &str = "event_distance";
const STAGE_DEDUPE: &str = "dedupe";
const STAGE_RARE: &str = "rare_locations";

/// Run the full filtering chain. Cross-references are validated before
/// any stage; a dangling reference fails the whole run.
pub fn run_pipeline(
    manifest: &Manifest,
    events: &[EventCluster],
    mentions: &[EntityMention],
    kb: &Knowledge,
    registry: &LocationRegistry,
    cfg: &FilterConfig,
) -> Result<(Manifest, PipelineReport), Error> {
    cfg.validate()?;

    let event_by_id: HashMap<&str, &EventCluster> =
        events.iter().map(|e| (e.id.as_str(), e)).collect();
    if event_by_id.len() != events.len() {
        let mut seen = HashSet::new();
        for e in events {
            if !seen.insert(&e.id) {
                return Err(Error::DuplicateId {
                    what: "event",
                    id: e.id.clone(),
                });
            }
        }
    }
    for a in manifest.articles() {
        registry.require(&a.query_location_id)?;
        if !event_by_id.contains_key(a.event_id.as_str()) {
            return Err(Error::UnknownId {
                what: "event",
                id: a.event_id.clone(),
            });
        }
    }
    for e in events {
        registry.require(&e.query_location_id)?;
    }
    for m in mentions {
        if manifest.get(&m.article_id).is_none() {
            return Err(Error::UnknownId {
                what: "article (entity mention)",
                id: m.article_id.clone(),
            });
        }
    }

    let mut report = PipelineReport::default();

    // Stage 1: event relevance, grouped per query location.
    let mut events_by_location: BTreeMap<&str, Vec<&EventCluster>> = BTreeMap::new();
    for e in events {
        events_by_location
            .entry(e.query_location_id.as_str())
            .or_default()
            .push(e);
    }
    let mut kept_events: HashSet<&str> = HashSet::new();
    for (loc_id, evs) in &events_by_location {
        let location = registry.require(loc_id)?;
        for e in filter_events(evs, location) {
            kept_events.insert(e.id.as_str());
        }
    }
    let mut survivors: Vec<&Article> = Vec::new();
    for a in manifest.articles() {
        if kept_events.contains(a.event_id.as_str()) {
            survivors.push(a);
        } else {
            report.record_discard(
                &a.id,
                STAGE_EVENTS,
                format!("event `{}` failed the relevance filter", a.event_id),
            );
        }
    }
    report.record_stage(STAGE_EVENTS, manifest.len(), survivors.len());

    // Stage 2: entity-location match.
    let mut mentions_by_article: HashMap<&str, Vec<&EntityMention>> = HashMap::new();
    for m in mentions {
        mentions_by_article
            .entry(m.article_id.as_str())
            .or_default()
            .push(m);
    }
    let input = survivors.len();
    let mut next = Vec::new();
    for a in survivors {
        let location = registry.require(&a.query_location_id)?;
        let ms = mentions_by_article
            .get(a.id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let decision = filter_entity_match(a, ms, kb, location, cfg)?;
        if decision.keep {
            next.push(a);
        } else {
            report.record_discard(
                &a.id,
                STAGE_ENTITY,
                decision.reason.unwrap_or_else(|| "no match".to_string()),
            );
        }
    }
    report.record_stage(STAGE_ENTITY, input, next.len());
    let survivors = next;

    // Stage 3: event-article distance, grouped per event cluster.
    let mut by_event: BTreeMap<&str, Vec<&Article>> = BTreeMap::new();
    for a in &survivors {
        by_event.entry(a.event_id.as_str()).or_default().push(a);
    }
    let input = survivors.len();
    let mut kept_ids: HashSet<&str> = HashSet::new();
    for cluster in by_event.values() {
        for a in filter_event_distance(cluster) {
            kept_ids.insert(a.id.as_str());
        }
    }
    let mut next = Vec::new();
    for a in survivors {
        if kept_ids.contains(a.id.as_str()) {
            next.push(a);
        } else {
            report.record_discard(
                &a.id,
                STAGE_DISTANCE,
                format!(
                    "similarity {:.3} below the cluster mean",
                    a.event_similarity
                ),
            );
        }
    }
    report.record_stage(STAGE_DISTANCE, input, next.len());
    let survivors = next;

    // Stage 4: TF-IDF redundancy removal.
    let input = survivors.len();
    let texts: Vec<&str> = survivors.iter().map(|a| a.text.as_str()).collect();
    let vectors = tfidf_corpus(&texts);
    let pairs: Vec<(String, TfidfVector)> = survivors
        .iter()
        .zip(vectors)
        .map(|(a, v)| (a.id.clone(), v))
        .collect();
    let (kept, dropped) = dedupe(&pairs, cfg.dedup_threshold);
    for (id, kept_id, sim) in dropped {
        report.record_discard(
            &id,
            STAGE_DEDUPE,
            format!("near-duplicate of `{kept_id}` (cosine {sim:.3})"),
        );
    }
    let kept: HashSet<String> = kept.into_iter().collect();
    let survivors: Vec<&Article> = survivors
        .into_iter()
        .filter(|a| kept.contains(&a.id))
        .collect();
    report.record_stage(STAGE_DEDUPE, input, survivors.len());

    // Stage 5: rare-location pruning.
    let input = survivors.len();
    let interim = Manifest::new(survivors.iter().map(|a| (*a).clone()).collect())?;
    let pruned = filter_rare_locations(&interim, cfg.min_articles);
    let pruned_ids: HashSet<&str> = pruned.articles().iter().map(|a| a.id.as_str()).collect();
    for a in interim.articles() {
        if !pruned_ids.contains(a.id.as_str()) {
            report.record_discard(
                &a.id,
                STAGE_RARE,
                format!(
                    "location `{}` has fewer than {} surviving articles",
                    a.query_location_id, cfg.min_articles
                ),
            );
        }
    }
    report.record_stage(STAGE_RARE, input, pruned.len());

    Ok((pruned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Continent, GeoPoint, LocationKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn location(name: &str) -> Location {
        Location {
            id: "loc-1".to_string(),
            name: name.to_string(),
            kind: LocationKind::City,
            centroid: GeoPoint::new(10.0, 10.0).unwrap(),
            area_km2: Some(729.0),
            population: None,
            continent: Continent::AS,
        }
    }

    fn event(id: &str, name: &str, cat: f64, query: f64) -> EventCluster {
        EventCluster {
            id: id.to_string(),
            name: name.to_string(),
            query_location_id: "loc-1".to_string(),
            category_relevance: cat,
            query_relevance: query,
        }
    }

    #[test]
    fn tokenize_basics() {
        assert_eq!(
            tokenize("Floods hit Jakarta, again -- 7x!"),
            vec!["floods", "hit", "jakarta", "again", "7x"]
        );
        assert!(tokenize("a . b !").is_empty());
    }

    #[test]
    fn tfidf_identical_and_disjoint() {
        let vs = tfidf_corpus(&["apple banana", "apple banana", "cherry durian"]);
        assert_relative_eq!(vs[0].cosine(&vs[1]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(vs[0].cosine(&vs[2]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tfidf_three_document_oracle() {
        // straight-line formula evaluation, independent of tfidf_corpus
        let docs = ["apple banana apple", "banana cherry", "cherry apple"];
        let idf = |df: f64| ((1.0 + 3.0) / (1.0 + df)).ln() + 1.0;
        let (ia, ib, ic) = (idf(2.0), idf(2.0), idf(2.0));
        // doc 0: apple tf 2, banana tf 1
        let n0 = ((2.0 * ia).powi(2) + ib.powi(2)).sqrt();
        let expect_apple0 = 2.0 * ia / n0;
        let expect_banana0 = ib / n0;

        let vs = tfidf_corpus(&docs);
        assert_relative_eq!(vs[0].weights()["apple"], expect_apple0, epsilon = 1e-9);
        assert_relative_eq!(vs[0].weights()["banana"], expect_banana0, epsilon = 1e-9);
        // unit norms
        for v in &vs {
            let norm: f64 = v.weights().values().map(|w| w * w).sum::<f64>().sqrt();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-9);
        }
        // cosines: idfs all equal here, so they reduce to closed forms
        assert_relative_eq!(vs[0].cosine(&vs[1]), 1.0 / 10.0f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(vs[0].cosine(&vs[2]), 2.0 / 10.0f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(vs[1].cosine(&vs[2]), 0.5, epsilon = 1e-9);
        let _ = ic;
    }

    #[test]
    fn tfidf_unequal_idf_oracle() {
        let docs = ["apple banana", "apple", "cherry"];
        let idf = |df: f64| (4.0 / (1.0 + df)).ln() + 1.0;
        let (ia, ib) = (idf(2.0), idf(1.0));
        let n0 = (ia * ia + ib * ib).sqrt();
        let vs = tfidf_corpus(&docs);
        assert_relative_eq!(vs[0].weights()["apple"], ia / n0, epsilon = 1e-9);
        assert_relative_eq!(vs[0].weights()["banana"], ib / n0, epsilon = 1e-9);
        assert_relative_eq!(vs[1].weights()["apple"], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_text_empty_vector() {
        let vs = tfidf_corpus(&[""]);
        assert!(vs[0].is_empty());
    }

    #[test]
    fn filter_events_rules() {
        let loc = location("Jakarta");
        let e1 = event("e1", "Floods hit Jakarta", 0.5, 0.5);
        let e2 = event("e2", "Stormwatch", 0.9, 0.9);
        // boundary: scores exactly at the mean are kept
        let evs = vec![&e1];
        assert_eq!(filter_events(&evs, &loc).len(), 1);

        let evs = vec![&e1, &e2];
        // means: cat 0.7, query 0.7; e1 is below mean, e2 lacks the name
        assert!(filter_events(&evs, &loc).is_empty());

        let e3 = event("e3", "Jakarta summit", 0.9, 0.9);
        let evs = vec![&e2, &e3];
        let kept = filter_events(&evs, &loc);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "e3");

        assert!(filter_events(&[], &loc).is_empty());
    }

    #[test]
    fn entity_match_radius() {
        let loc = location("X"); // area 729, k=6 -> radius 3 km
        let cfg = FilterConfig::default();
        let art = Article {
            id: "a".to_string(),
            title: String::new(),
            text: String::new(),
            event_id: "e".to_string(),
            event_similarity: 0.5,
            query_location_id: "loc-1".to_string(),
            image_ref: None,
            split: None,
        };
        let kb = Knowledge::new(vec![
            crate::corpus::KbEntry {
                kb_id: "near".to_string(),
                kind: crate::corpus::KbKind::Place,
                coord: Some(GeoPoint::new(10.018, 10.0).unwrap()), // ~2 km
                birthplace_coord: None,
                area_km2: None,
            },
            crate::corpus::KbEntry {
                kb_id: "far".to_string(),
                kind: crate::corpus::KbKind::Place,
                coord: Some(GeoPoint::new(10.045, 10.0).unwrap()), // ~5 km
                birthplace_coord: None,
                area_km2: None,
            },
        ])
        .unwrap();
        let mention = |kb_id: &str| EntityMention {
            article_id: "a".to_string(),
            surface: kb_id.to_string(),
            kb_id: Some(kb_id.to_string()),
        };

        let near = mention("near");
        let far = mention("far");
        let d = filter_entity_match(&art, &[&near, &far], &kb, &loc, &cfg).unwrap();
        assert!(d.keep);
        assert_eq!(d.witness.unwrap().surface, "near");

        let d = filter_entity_match(&art, &[&far], &kb, &loc, &cfg).unwrap();
        assert!(!d.keep);
        assert!(d.reason.unwrap().contains("nearest entity"));

        let d = filter_entity_match(&art, &[], &kb, &loc, &cfg).unwrap();
        assert!(!d.keep);
        assert_eq!(d.reason.unwrap(), "no resolvable entities");

        // entity exactly at the centroid: 0 < radius
        let kb0 = Knowledge::new(vec![crate::corpus::KbEntry {
            kb_id: "center".to_string(),
            kind: crate::corpus::KbKind::Place,
            coord: Some(loc.centroid),
            birthplace_coord: None,
            area_km2: None,
        }])
        .unwrap();
        let center = mention("center");
        assert!(filter_entity_match(&art, &[&center], &kb0, &loc, &cfg)
            .unwrap()
            .keep);
    }

    fn sim_article(id: &str, sim: f64) -> Article {
        Article {
            id: id.to_string(),
            title: String::new(),
            text: String::new(),
            event_id: "e".to_string(),
            event_similarity: sim,
            query_location_id: "loc-1".to_string(),
            image_ref: None,
            split: None,
        }
    }

    #[test]
    fn event_distance_mean_rule() {
        let a = sim_article("a", 0.9);
        let b = sim_article("b", 0.5);
        let c = sim_article("c", 0.1);
        let kept = filter_event_distance(&[&a, &b, &c]);
        let ids: Vec<&str> = kept.iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]); // mean 0.5, boundary kept

        assert_eq!(filter_event_distance(&[&a]).len(), 1);
        let e1 = sim_article("x", 0.4);
        let e2 = sim_article("y", 0.4);
        assert_eq!(filter_event_distance(&[&e1, &e2]).len(), 2);
        assert!(filter_event_distance(&[]).is_empty());
    }

    fn vector_of(pairs: &[(&str, f64)]) -> TfidfVector {
        let mut map = BTreeMap::new();
        let norm = pairs.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        for (t, w) in pairs {
            map.insert(t.to_string(), w / norm);
        }
        TfidfVector(map)
    }

    #[test]
    fn dedupe_greedy_chain() {
        // A~B 0.9, B~C 0.9, A~C 0.1 -> keep A and C, drop B
        let a = vector_of(&[("x", 1.0), ("p", 0.2)]);
        let b = vector_of(&[("x", 1.0), ("y", 1.0)]);
        let c = vector_of(&[("y", 1.0), ("q", 0.2)]);
        assert!(a.cosine(&b) > 0.5);
        assert!(b.cosine(&c) > 0.5);
        assert!(a.cosine(&c) <= 0.5);
        let items = vec![
            ("a".to_string(), a),
            ("b".to_string(), b),
            ("c".to_string(), c),
        ];
        let (kept, dropped) = dedupe(&items, 0.5);
        assert_eq!(kept, vec!["a", "c"]);
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].0, "b");
    }

    #[test]
    fn dedupe_exact_duplicate_drops_later_id() {
        let v = vector_of(&[("x", 1.0)]);
        let items = vec![("a2".to_string(), v.clone()), ("a1".to_string(), v)];
        let (kept, _) = dedupe(&items, 0.5);
        assert_eq!(kept, vec!["a1"]);
    }

    #[test]
    fn rare_location_boundary() {
        let mk = |loc: &str, n: usize| -> Vec<Article> {
            (0..n)
                .map(|i| {
                    let mut a = sim_article(&format!("{loc}-{i}"), 0.5);
                    a.query_location_id = loc.to_string();
                    a
                })
                .collect()
        };
        let mut arts = mk("big", 5);
        arts.extend(mk("small", 4));
        let m = Manifest::new(arts).unwrap();
        let out = filter_rare_locations(&m, 5);
        assert_eq!(out.len(), 5);
        assert!(out.articles().iter().all(|a| a.query_location_id == "big"));

        let empty = filter_rare_locations(&Manifest::default(), 5);
        assert!(empty.is_empty());
    }

    proptest! {
        #[test]
        fn dedupe_output_has_no_close_pair(
            seeds in proptest::collection::vec(0u64..1000, 2..12)
        ) {
            // random sparse vectors over a tiny vocabulary
            let items: Vec<(String, TfidfVector)> = seeds
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let w1 = (s % 7) as f64 + 0.5;
                    let w2 = (s % 3) as f64;
                    let t1 = format!("t{}", s % 5);
                    let t2 = format!("t{}", (s / 5) % 5);
                    let mut pairs = vec![(t1.as_str(), w1)];
                    if t2 != t1 && w2 > 0.0 {
                        pairs.push((t2.as_str(), w2));
                    }
                    (format!("a{i:03}"), vector_of(&pairs))
                })
                .collect();
            let (kept, _) = dedupe(&items, 0.5);
            let by_id: std::collections::HashMap<&str, &TfidfVector> =
                items.iter().map(|(id, v)| (id.as_str(), v)).collect();
            for i in 0..kept.len() {
                for j in (i + 1)..kept.len() {
                    let sim = by_id[kept[i].as_str()].cosine(by_id[kept[j].as_str()]);
                    prop_assert!(sim <= 0.5 + 1e-12);
                }
            }
        }

        #[test]
        fn event_distance_keeps_at_least_one(sims in proptest::collection::vec(0.0..1.0f64, 1..20)) {
            let arts: Vec<Article> = sims
                .iter()
                .enumerate()
                .map(|(i, s)| sim_article(&format!("a{i}"), *s))
                .collect();
            let refs: Vec<&Article> = arts.iter().collect();
            prop_assert!(!filter_event_distance(&refs).is_empty());
        }
    }
}
