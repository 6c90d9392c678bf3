//! Evaluation: GCD accuracy levels, mean/median GCD, test-variant
//! construction from annotations, and inter-annotator agreement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationRecord, Answer, LocationRegistry};
use crate::error::Error;
use crate::geo::{accuracy_level, great_circle_km, AccuracyLevel, GeoPoint};

/// Percentage of samples within each accuracy level, plus the raw
/// per-sample distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub city_pct: f64,
    pub region_pct: f64,
    pub country_pct: f64,
    pub continent_pct: f64,
    pub samples: usize,
    pub gcd_km: Vec<f64>,
}

impl ClassificationReport {
    pub fn pct(&self, level: AccuracyLevel) -> f64 {
        match level {
            AccuracyLevel::City => self.city_pct,
            AccuracyLevel::Region => self.region_pct,
            AccuracyLevel::Country => self.country_pct,
            AccuracyLevel::Continent => self.continent_pct,
            AccuracyLevel::None => 100.0,
        }
    }
}

/// Accuracy at the four GCD levels for predicted location classes against
/// ground-truth locations.
pub fn classify_metrics(
    predicted_location_ids: &[String],
    truth_location_ids: &[String],
    registry: &LocationRegistry,
) -> Result<ClassificationReport, Error> {
    if predicted_location_ids.len() != truth_location_ids.len() {
        return Err(Error::Dimension {
            what: "prediction list",
            expected: truth_location_ids.len(),
            got: predicted_location_ids.len(),
        });
    }
    if predicted_location_ids.is_empty() {
        return Err(Error::EmptyInput("classification metrics"));
    }
    let mut gcd_km = Vec::with_capacity(predicted_location_ids.len());
    let mut within = [0usize; 4];
    for (pred, truth) in predicted_location_ids.iter().zip(truth_location_ids) {
        let p = registry.require(pred)?.centroid;
        let t = registry.require(truth)?.centroid;
        let d = great_circle_km(p, t);
        let level = accuracy_level(d)?;
        for (i, l) in AccuracyLevel::GRADED.iter().enumerate() {
            if level <= *l {
                within[i] += 1;
            }
        }
        gcd_km.push(d);
    }
    let n = gcd_km.len() as f64;
    Ok(ClassificationReport {
        city_pct: 100.0 * within[0] as f64 / n,
        region_pct: 100.0 * within[1] as f64 / n,
        country_pct: 100.0 * within[2] as f64 / n,
        continent_pct: 100.0 * within[3] as f64 / n,
        samples: gcd_km.len(),
        gcd_km,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionReport {
    pub mean_km: f64,
    pub median_km: f64,
    /// Raw values divided by 1000.
    pub mean_scaled: f64,
    pub median_scaled: f64,
    pub samples: usize,
}

/// Mean and median GCD between predicted and ground-truth points.
pub fn regression_metrics(
    predicted: &[GeoPoint],
    truth: &[GeoPoint],
) -> Result<RegressionReport, Error> {
    if predicted.len() != truth.len() {
        return Err(Error::Dimension {
            what: "prediction list",
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput("regression metrics"));
    }
    let mut d: Vec<f64> = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| great_circle_km(*p, *t))
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let median = if d.len() % 2 == 1 {
        d[d.len() / 2]
    } else {
        (d[d.len() / 2 - 1] + d[d.len() / 2]) / 2.0
    };
    Ok(RegressionReport {
        mean_km: mean,
        median_km: median,
        mean_scaled: mean / 1000.0,
        median_scaled: median / 1000.0,
        samples: d.len(),
    })
}

/// Annotation criteria: image depicts the query location (C1), text
/// focuses on it (C2), image and text are conceptually related (C3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    C1,
    C2,
    C3,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::C1, Criterion::C2, Criterion::C3];

    pub fn of(&self, r: &AnnotationRecord) -> Answer {
        match self {
            Criterion::C1 => r.c1,
            Criterion::C2 => r.c2,
            Criterion::C3 => r.c3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TestVariant {
    T1,
    T2,
    T3,
}

impl TestVariant {
    pub const ALL: [TestVariant; 3] = [TestVariant::T1, TestVariant::T2, TestVariant::T3];

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(TestVariant::T1),
            "T2" => Ok(TestVariant::T2),
            "T3" => Ok(TestVariant::T3),
            other => Err(Error::invalid(
                "test variant",
                format!("unknown variant `{other}`"),
            )),
        }
    }
}

/// Member article ids per test variant.
#[derive(Debug, Clone, Default, Serialize)]
pub struct VariantSets {
    pub t1: BTreeSet<String>,
    pub t2: BTreeSet<String>,
    pub t3: BTreeSet<String>,
    pub warnings: Vec<String>,
}

impl VariantSets {
    pub fn members(&self, v: TestVariant) -> &BTreeSet<String> {
        match v {
            TestVariant::T1 => &self.t1,
            TestVariant::T2 => &self.t2,
            TestVariant::T3 => &self.t3,
        }
    }
}

fn aggregate(answers: &[Answer]) -> Answer {
    let first = answers[0];
    if answers.iter().all(|a| *a == first) {
        first
    } else {
        Answer::Unsure
    }
}

/// Build the three test variants from the annotation records: coders that
/// disagree on a criterion aggregate to Unsure; T1 requires C2 = Yes,
/// T2 additionally C1 = Yes, T3 instead C1 = Unsure and C3 = Yes.
pub fn build_test_variants(annotations: &[AnnotationRecord]) -> VariantSets {
    let mut by_article: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in annotations {
        by_article.entry(r.article_id.as_str()).or_default().push(r);
    }
    let mut sets = VariantSets::default();
    for (article, records) in by_article {
        let agg = |c: Criterion| -> Answer {
            let answers: Vec<Answer> = records.iter().map(|r| c.of(r)).collect();
            aggregate(&answers)
        };
        let (c1, c2, c3) = (agg(Criterion::C1), agg(Criterion::C2), agg(Criterion::C3));
        if c2 == Answer::Yes {
            sets.t1.insert(article.to_string());
            if c1 == Answer::Yes {
                sets.t2.insert(article.to_string());
            }
            if c1 == Answer::Unsure && c3 == Answer::Yes {
                sets.t3.insert(article.to_string());
            }
        }
    }
    sets
}

/// Per-unit coder answers for one criterion, grouped by article in id
/// order.
pub fn criterion_units(annotations: &[AnnotationRecord], criterion: Criterion) -> Vec<Vec<Answer>> {
    let mut by_article: BTreeMap<&str, Vec<Answer>> = BTreeMap::new();
    for r in annotations {
        by_article
            .entry(r.article_id.as_str())
            .or_default()
            .push(criterion.of(r));
    }
    by_article.into_values().collect()
}

/// Nominal-level Krippendorff alpha from the coincidence matrix of
/// pairable values. Units with fewer than two codings are excluded.
pub fn krippendorff_alpha(units: &[Vec<Answer>]) -> Result<f64, Error> {
    let categories = [Answer::Yes, Answer::No, Answer::Unsure];
    let cat = |a: Answer| categories.iter().position(|c| *c == a).unwrap();

    let mut coincidence = [[0.0f64; 3]; 3];
    let mut any = false;
    for unit in units {
        let m = unit.len();
        if m < 2 {
            continue;
        }
        any = true;
        let weight = 1.0 / (m as f64 - 1.0);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    coincidence[cat(unit[i])][cat(unit[j])] += weight;
                }
            }
        }
    }
    if !any {
        return Err(Error::AgreementUndefined);
    }

    let totals: [f64; 3] = std::array::from_fn(|c| coincidence[c].iter().sum());
    let n: f64 = totals.iter().sum();
    let observed: f64 = (0..3)
        .flat_map(|c| (0..3).map(move |k| (c, k)))
        .filter(|(c, k)| c != k)
        .map(|(c, k)| coincidence[c][k])
        .sum();
    let expected: f64 = (0..3)
        .flat_map(|c| (0..3).map(move |k| (c, k)))
        .filter(|(c, k)| c != k)
        .map(|(c, k)| totals[c] * totals[k] / (n - 1.0))
        .sum();
    if expected == 0.0 {
        return Err(Error::invalid(
            "krippendorff alpha",
            "expected disagreement is zero (single category)",
        ));
    }
    Ok(1.0 - observed / expected)
}

/// Fraction of multi-coded units on which all coders agree, in percent.
pub fn percent_agreement(units: &[Vec<Answer>]) -> Result<f64, Error> {
    let pairable: Vec<&Vec<Answer>> = units.iter().filter(|u| u.len() >= 2).collect();
    if pairable.is_empty() {
        return Err(Error::AgreementUndefined);
    }
    let agreeing = pairable
        .iter()
        .filter(|u| u.iter().all(|a| *a == u[0]))
        .count();
    Ok(100.0 * agreeing as f64 / pairable.len() as f64)
}
