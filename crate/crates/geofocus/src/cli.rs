//! Command-line interface: dataset generation, filtering, splitting,
//! training, evaluation and agreement analysis.
//!
//! Option precedence is flags over config file over built-in defaults;
//! `GEOFOCUS_CONFIG` and `GEOFOCUS_SEED` slot in between file and flags.
//! Diagnostics go to stderr, machine-readable output to stdout or `--out`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    load_jsonl, load_manifest, save_manifest, split_dataset, stats, AnnotationRecord,
    EntityMention, EventCluster, KbEntry, Knowledge, LocationRegistry, Manifest, Split,
};
use crate::embeddings::{synth_generate, EmbeddingStore, FeatureKind, SynthConfig, SynthMode};
use crate::error::Error;
use crate::eval::{
    build_test_variants, classify_metrics, criterion_units, krippendorff_alpha, percent_agreement,
    regression_metrics, Criterion, TestVariant,
};
use crate::geo::great_circle_km;
use crate::model::{
    load_checkpoint, regression_forward, save_checkpoint, train_classifier, train_regression,
    BranchMode, Checkpoint, Model, ModelConfig,
};
use crate::pipeline::{run_pipeline, FilterConfig};
use crate::Scalar;

#[derive(Parser)]
#[command(
    name = "geofocus",
    about = "Focus-location estimation for news articles",
    version
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed override for any seeded subcommand.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (manifest, locations, embeddings).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the weakly supervised filtering pipeline.
    Filter {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        /// Output directory for filtered.jsonl and pipeline_report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign train/val/test splits in place.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        /// Output manifest path (defaults to overwriting the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a classifier or the coordinate regressor.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
        /// classify or regress.
        #[arg(long, default_value = "classify")]
        mode: String,
        /// visual, textual or multimodal (classify only).
        #[arg(long, default_value = "multimodal")]
        branch: String,
        /// Comma-separated feature kinds for the regression trunk.
        #[arg(long)]
        features: Option<String>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// T1, T2, T3 or all; restricts the test set via annotations.
        #[arg(long, default_value = "all")]
        variant: String,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Per-article predictions as JSONL.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output file (defaults to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inter-annotator agreement per criterion.
    Agreement {
        #[arg(long)]
        annotations: PathBuf,
    },
    /// Dataset statistics by split and continent.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        locations: PathBuf,
    },
}

#[derive(Args)]
pub struct DataArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub locations: PathBuf,
    /// Directory of .emb files.
    #[arg(long)]
    pub embeddings: PathBuf,
}

/// The file-level configuration; every section is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    seed: Option<u64>,
    model: Option<ModelConfig>,
    filter: Option<FilterConfig>,
    synth: Option<SynthConfig>,
}

fn log(msg: &str) {
    eprintln!("geofocus: {msg}");
}

fn load_file_config(cli: &Cli) -> Result<FileConfig, Error> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("GEOFOCUS_CONFIG").map(PathBuf::from));
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    toml::from_str(&text).map_err(|e| Error::invalid("config file", e.to_string()))
}

/// flags > GEOFOCUS_SEED > config file > fallback
fn effective_seed(cli: &Cli, file: &FileConfig, fallback: u64) -> u64 {
    if let Some(s) = cli.seed {
        return s;
    }
    if let Some(s) = std::env::var("GEOFOCUS_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return s;
    }
    file.seed.unwrap_or(fallback)
}

fn default_synth() -> SynthConfig {
    SynthConfig {
        classes: 20,
        train_per_class: 40,
        val_per_class: 10,
        test_per_class: 10,
        kinds: vec![
            (FeatureKind::ClipImage, 32, FeatureKind::ClipImage.default_sigma()),
            (FeatureKind::BertBody, 32, FeatureKind::BertBody.default_sigma()),
        ],
        seed: 0,
        mode: SynthMode::Prototype,
    }
}

fn parse_features(s: &str) -> Result<Vec<FeatureKind>, Error> {
    let kinds: Result<Vec<_>, _> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(FeatureKind::parse)
        .collect();
    let kinds = kinds?;
    if kinds.is_empty() {
        return Err(Error::EmptyInput("feature list"));
    }
    Ok(kinds)
}

fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid("JSON output", e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sorted_class_ids(registry: &LocationRegistry) -> Vec<String> {
    let mut ids: Vec<String> = registry.locations().iter().map(|l| l.id.clone()).collect();
    ids.sort();
    ids
}

/// Test-split article ids, optionally restricted to a variant.
fn test_articles<'a>(
    manifest: &'a Manifest,
    variant: &str,
    annotations: Option<&Path>,
) -> Result<Vec<&'a crate::corpus::Article>, Error> {
    let restriction: Option<BTreeSet<String>> = if variant.eq_ignore_ascii_case("all") {
        None
    } else {
        let v = TestVariant::parse(variant)?;
        let path = annotations.ok_or_else(|| {
            Error::invalid("eval", "--variant other than `all` needs --annotations")
        })?;
        let records: Vec<AnnotationRecord> = load_jsonl(path)?;
        Some(build_test_variants(&records).members(v).clone())
    };
    let articles: Vec<_> = manifest
        .in_split(Split::Test)
        .filter(|a| restriction.as_ref().map_or(true, |r| r.contains(&a.id)))
        .collect();
    if articles.is_empty() {
        return Err(Error::EmptyInput("test split"));
    }
    Ok(articles)
}

#[derive(Serialize)]
struct PredictionLine {
    article_id: String,
    predicted_location_id: Option<String>,
    top5: Vec<(String, f64)>,
    predicted_lat: f64,
    predicted_lon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gcd_to_truth_km: Option<f64>,
}

fn classifier_inputs(
    model: &Model<Scalar>,
    store: &EmbeddingStore,
    id: &str,
) -> Result<(Option<Vec<Scalar>>, Option<Vec<Scalar>>), Error> {
    let x_v = if model.visual.is_some() {
        Some(store.concat(id, &model.cfg.visual_kinds)?)
    } else {
        None
    };
    let x_t = if model.textual.is_some() {
        Some(store.concat(id, &model.cfg.textual_kinds)?)
    } else {
        None
    };
    Ok((x_v, x_t))
}

pub fn run(cli: &Cli) -> Result<(), Error> {
    let file = load_file_config(cli)?;
    match &cli.command {
        Command::Synth { out } => {
            let mut cfg = file.synth.clone().unwrap_or_else(default_synth);
            cfg.seed = effective_seed(cli, &file, cfg.seed);
            let data = synth_generate(&cfg)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            save_manifest(&data.manifest, &out.join("manifest.jsonl"))?;
            data.registry.save(&out.join("locations.jsonl"))?;
            let emb_dir = out.join("embeddings");
            fs::create_dir_all(&emb_dir).map_err(|e| Error::io(&emb_dir, e))?;
            data.store.write_dir(&emb_dir)?;
            log(&format!(
                "wrote {} articles over {} locations to {}",
                data.manifest.len(),
                data.registry.len(),
                out.display()
            ));
            Ok(())
        }
        Command::Filter {
            manifest,
            events,
            mentions,
            kb,
            locations,
            out,
        } => {
            let manifest = load_manifest(manifest)?;
            let events: Vec<EventCluster> = load_jsonl(events)?;
            let mentions: Vec<EntityMention> = load_jsonl(mentions)?;
            let kb = Knowledge::new(load_jsonl::<KbEntry>(kb)?)?;
            let registry = LocationRegistry::load(locations)?;
            let cfg = file.filter.clone().unwrap_or_default();
            let (filtered, report) =
                run_pipeline(&manifest, &events, &mentions, &kb, &registry, &cfg)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            save_manifest(&filtered, &out.join("filtered.jsonl"))?;
            write_json_file(&report, &out.join("pipeline_report.json"))?;
            for s in &report.stages {
                log(&format!(
                    "stage {}: {} -> {} ({} discarded)",
                    s.stage, s.input, s.kept, s.discarded
                ));
            }
            Ok(())
        }
        Command::Split { manifest, out } => {
            let seed = effective_seed(cli, &file, 0);
            let mut m = load_manifest(manifest)?;
            let summary = split_dataset(&mut m, seed)?;
            for w in &summary.warnings {
                log(&format!("warning: {w}"));
            }
            log(&format!(
                "split (seed {seed}): {} train, {} val, {} test",
                summary.train, summary.val, summary.test
            ));
            save_manifest(&m, out.as_deref().unwrap_or(manifest))
        }
        Command::Train {
            data,
            out,
            mode,
            branch,
            features,
        } => {
            let manifest = load_manifest(&data.manifest)?;
            let registry = LocationRegistry::load(&data.locations)?;
            let store = EmbeddingStore::read_dir(&data.embeddings)?;
            let mut cfg = file.model.clone().unwrap_or_default();
            cfg.seed = effective_seed(cli, &file, cfg.seed);
            match mode.as_str() {
                "classify" => {
                    cfg.n_classes = registry.len();
                    let branch = BranchMode::parse(branch)?;
                    let trained =
                        train_classifier::<Scalar>(&manifest, &store, &registry, &cfg, branch)?;
                    log(&format!(
                        "trained {} epochs, best epoch {} (val mean {:.1}%)",
                        trained.log.epochs.len(),
                        trained.log.best_epoch,
                        trained.log.epochs[trained.log.best_epoch - 1].val_mean_pct
                    ));
                    save_checkpoint(
                        &Checkpoint::Classifier {
                            model: trained.model,
                            log: trained.log,
                        },
                        out,
                    )
                }
                "regress" => {
                    let kinds = match features {
                        Some(s) => parse_features(s)?,
                        None => vec![FeatureKind::ClipImage, FeatureKind::BertBody],
                    };
                    let trained =
                        train_regression::<Scalar>(&manifest, &store, &registry, &cfg, &kinds)?;
                    log(&format!(
                        "trained {} epochs, best epoch {} (val median {:.1} km)",
                        trained.log.epochs.len(),
                        trained.log.best_epoch,
                        trained.log.epochs[trained.log.best_epoch - 1].val_median_km
                    ));
                    save_checkpoint(
                        &Checkpoint::Regressor {
                            cfg: trained.cfg,
                            kinds: trained.kinds,
                            params: trained.params,
                            log: trained.log,
                        },
                        out,
                    )
                }
                other => Err(Error::invalid(
                    "mode",
                    format!("expected classify or regress, got `{other}`"),
                )),
            }
        }
        Command::Eval {
            data,
            checkpoint,
            variant,
            annotations,
        } => {
            let manifest = load_manifest(&data.manifest)?;
            let registry = LocationRegistry::load(&data.locations)?;
            let store = EmbeddingStore::read_dir(&data.embeddings)?;
            let articles = test_articles(&manifest, variant, annotations.as_deref())?;
            match load_checkpoint(checkpoint)? {
                Checkpoint::Classifier { model, .. } => {
                    let classes = sorted_class_ids(&registry);
                    let mut predicted = Vec::new();
                    let mut truth = Vec::new();
                    for a in &articles {
                        let (x_v, x_t) = classifier_inputs(&model, &store, &a.id)?;
                        let pred = model.predict(x_v.as_deref(), x_t.as_deref())?;
                        predicted.push(classes[pred.argmax].clone());
                        truth.push(a.query_location_id.clone());
                    }
                    let report = classify_metrics(&predicted, &truth, &registry)?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report)
                            .map_err(|e| Error::invalid("JSON output", e.to_string()))?
                    );
                    Ok(())
                }
                Checkpoint::Regressor {
                    cfg, kinds, params, ..
                } => {
                    let mut predicted = Vec::new();
                    let mut truth = Vec::new();
                    for a in &articles {
                        let x: Vec<Scalar> = store.concat(&a.id, &kinds)?;
                        let act = regression_forward(&x, &params, cfg.norm_clamp)?;
                        predicted.push(act.point()?);
                        truth.push(registry.require(&a.query_location_id)?.centroid);
                    }
                    let report = regression_metrics(&predicted, &truth)?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report)
                            .map_err(|e| Error::invalid("JSON output", e.to_string()))?
                    );
                    Ok(())
                }
            }
        }
        Command::Predict {
            data,
            checkpoint,
            out,
        } => {
            let manifest = load_manifest(&data.manifest)?;
            let registry = LocationRegistry::load(&data.locations)?;
            let store = EmbeddingStore::read_dir(&data.embeddings)?;
            let ckpt = load_checkpoint(checkpoint)?;
            let mut lines = Vec::new();
            for a in manifest.in_split(Split::Test) {
                let truth = registry.get(&a.query_location_id).map(|l| l.centroid);
                let line = match &ckpt {
                    Checkpoint::Classifier { model, .. } => {
                        let classes = sorted_class_ids(&registry);
                        let (x_v, x_t) = classifier_inputs(model, &store, &a.id)?;
                        let pred = model.predict(x_v.as_deref(), x_t.as_deref())?;
                        let scores: &[f64] = pred
                            .fused
                            .as_deref()
                            .or(pred.probs_v.as_deref())
                            .or(pred.probs_t.as_deref())
                            .expect("at least one branch");
                        let mut ranked: Vec<(String, f64)> = classes
                            .iter()
                            .cloned()
                            .zip(scores.iter().copied())
                            .collect();
                        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
                        ranked.truncate(5);
                        let centroid = registry.require(&classes[pred.argmax])?.centroid;
                        PredictionLine {
                            article_id: a.id.clone(),
                            predicted_location_id: Some(classes[pred.argmax].clone()),
                            top5: ranked,
                            predicted_lat: centroid.lat_deg(),
                            predicted_lon: centroid.lon_deg(),
                            gcd_to_truth_km: truth.map(|t| great_circle_km(centroid, t)),
                        }
                    }
                    Checkpoint::Regressor {
                        cfg, kinds, params, ..
                    } => {
                        let x: Vec<Scalar> = store.concat(&a.id, kinds)?;
                        let act = regression_forward(&x, params, cfg.norm_clamp)?;
                        let p = act.point()?;
                        PredictionLine {
                            article_id: a.id.clone(),
                            predicted_location_id: None,
                            top5: Vec::new(),
                            predicted_lat: p.lat_deg(),
                            predicted_lon: p.lon_deg(),
                            gcd_to_truth_km: truth.map(|t| great_circle_km(p, t)),
                        }
                    }
                };
                lines.push(line);
            }
            let mut text = String::new();
            for l in &lines {
                text.push_str(
                    &serde_json::to_string(l)
                        .map_err(|e| Error::invalid("JSON output", e.to_string()))?,
                );
                text.push('\n');
            }
            match out {
                Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Agreement { annotations } => {
            let records: Vec<AnnotationRecord> = load_jsonl(annotations)?;
            #[derive(Serialize)]
            struct CriterionAgreement {
                criterion: &'static str,
                alpha: f64,
                percent: f64,
            }
            let mut rows = Vec::new();
            for (c, name) in Criterion::ALL.iter().zip(["C1", "C2", "C3"]) {
                let units = criterion_units(&records, *c);
                rows.push(CriterionAgreement {
                    criterion: name,
                    alpha: krippendorff_alpha(&units)?,
                    percent: percent_agreement(&units)?,
                });
            }
            let variants = build_test_variants(&records);
            #[derive(Serialize)]
            struct AgreementReport {
                criteria: Vec<CriterionAgreement>,
                t1: usize,
                t2: usize,
                t3: usize,
            }
            let report = AgreementReport {
                criteria: rows,
                t1: variants.t1.len(),
                t2: variants.t2.len(),
                t3: variants.t3.len(),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| Error::invalid("JSON output", e.to_string()))?
            );
            Ok(())
        }
        Command::Report {
            manifest,
            locations,
        } => {
            let manifest = load_manifest(manifest)?;
            let registry = LocationRegistry::load(locations)?;
            let s = stats(&manifest, &registry)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&s)
                    .map_err(|e| Error::invalid("JSON output", e.to_string()))?
            );
            Ok(())
        }
    }
}
