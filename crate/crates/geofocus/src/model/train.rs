//! Mini-batch Adam training for the classifier and the regression head,
//! with per-epoch validation and checkpoint selection.
//!
//! Training is single-threaded and fully determined by the config seed:
//! initialization, shuffling, and batch order all come from one stream.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamParams, AdamState};
use super::net::{branch_backward, branch_forward, ce_loss, init_branch};
use super::regression::{
    init_regression, regression_backward, regression_forward, unit_vector_loss, RegressionParams,
};
use super::{BranchMode, BranchParams, Model, ModelConfig};
use crate::corpus::{LocationRegistry, Manifest, Split};
use crate::embeddings::{EmbeddingStore, FeatureKind};
use crate::error::Error;
use crate::geo::{accuracy_level, great_circle_km, AccuracyLevel, GeoPoint};
use crate::num::Real;

/// Stable class indexing: locations sorted by id.
pub(crate) fn class_index(registry: &LocationRegistry) -> Vec<String> {
    let mut ids: Vec<String> = registry.locations().iter().map(|l| l.id.clone()).collect();
    ids.sort();
    ids
}

struct Sample<F> {
    x_v: Option<Vec<F>>,
    x_t: Option<Vec<F>>,
    class: usize,
    centroid: GeoPoint,
}

fn collect_samples<F: Real>(
    manifest: &Manifest,
    store: &EmbeddingStore,
    registry: &LocationRegistry,
    cfg: &ModelConfig,
    mode: BranchMode,
    split: Split,
    classes: &[String],
) -> Result<Vec<Sample<F>>, Error> {
    let mut required: Vec<FeatureKind> = Vec::new();
    if mode.visual_active() {
        required.extend(&cfg.visual_kinds);
    }
    if mode.textual_active() {
        required.extend(&cfg.textual_kinds);
    }
    let ids: Vec<&str> = manifest.in_split(split).map(|a| a.id.as_str()).collect();
    let mut missing = store.missing(ids.iter().copied(), &required);
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingEmbeddings(missing));
    }

    let mut samples = Vec::new();
    for a in manifest.in_split(split) {
        let loc = registry.require(&a.query_location_id)?;
        let class = classes
            .binary_search(&a.query_location_id)
            .map_err(|_| Error::UnknownId {
                what: "location",
                id: a.query_location_id.clone(),
            })?;
        samples.push(Sample {
            x_v: if mode.visual_active() {
                Some(store.concat(&a.id, &cfg.visual_kinds)?)
            } else {
                None
            },
            x_t: if mode.textual_active() {
                Some(store.concat(&a.id, &cfg.textual_kinds)?)
            } else {
                None
            },
            class,
            centroid: loc.centroid,
        });
    }
    Ok(samples)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_city_pct: f64,
    pub val_region_pct: f64,
    pub val_mean_pct: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) of the retained checkpoint: the argmax of
    /// `val_mean_pct`, earlier epoch on ties.
    pub best_epoch: usize,
}

pub struct TrainedClassifier<F> {
    pub model: Model<F>,
    pub log: TrainingLog,
}

fn val_accuracy<F: Real>(model: &Model<F>, samples: &[Sample<F>], classes: &[GeoPoint]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mut city = 0usize;
    let mut region = 0usize;
    for s in samples {
        let pred = model
            .predict(s.x_v.as_deref(), s.x_t.as_deref())
            .expect("validated inputs");
        let d = great_circle_km(classes[pred.argmax], s.centroid);
        let level = accuracy_level(d).expect("non-negative");
        if level <= AccuracyLevel::City {
            city += 1;
        }
        if level <= AccuracyLevel::Region {
            region += 1;
        }
    }
    let n = samples.len() as f64;
    (100.0 * city as f64 / n, 100.0 * region as f64 / n)
}

/// Train the classifier on the Train split, validating on Val after every
/// epoch; the returned model carries the parameters of the epoch with the
/// highest mean of City and Region validation accuracy.
pub fn train_classifier<F: Real>(
    manifest: &Manifest,
    store: &EmbeddingStore,
    registry: &LocationRegistry,
    cfg: &ModelConfig,
    mode: BranchMode,
) -> Result<TrainedClassifier<F>, Error> {
    cfg.validate(mode)?;
    let classes = class_index(registry);
    if classes.len() != cfg.n_classes {
        return Err(Error::invalid(
            "model config",
            format!(
                "n_classes is {} but the registry has {} locations",
                cfg.n_classes,
                classes.len()
            ),
        ));
    }
    let class_centroids: Vec<GeoPoint> = classes
        .iter()
        .map(|id| registry.require(id).map(|l| l.centroid))
        .collect::<Result<_, _>>()?;

    let train = collect_samples::<F>(manifest, store, registry, cfg, mode, Split::Train, &classes)?;
    let val = collect_samples::<F>(manifest, store, registry, cfg, mode, Split::Val, &classes)?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }

    let clamp = F::of(cfg.norm_clamp);
    let tau = F::of(cfg.temperature);
    let hp = AdamParams::with_lr(F::of(cfg.lr));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut visual = if mode.visual_active() {
        let d_in = store.concat_dim(&cfg.visual_kinds)?;
        Some(init_branch::<F>(d_in, cfg.hidden, cfg.n_classes, &mut rng))
    } else {
        None
    };
    let mut textual = if mode.textual_active() {
        let d_in = store.concat_dim(&cfg.textual_kinds)?;
        Some(init_branch::<F>(d_in, cfg.hidden, cfg.n_classes, &mut rng))
    } else {
        None
    };
    let state_shapes = |p: &BranchParams<F>| -> Vec<usize> {
        p.tensors().iter().map(|t| t.len()).collect()
    };
    let mut visual_state = visual.as_ref().map(|p| AdamState::for_shapes(&state_shapes(p)));
    let mut textual_state = textual.as_ref().map(|p| AdamState::for_shapes(&state_shapes(p)));

    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Model<F>)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = F::zero();
        let mut seen = 0usize;
        for batch in order.chunks(cfg.batch) {
            let mut grads_v = visual.as_ref().map(|p| p.zeros_like());
            let mut grads_t = textual.as_ref().map(|p| p.zeros_like());
            for &i in batch {
                let s = &train[i];
                if let (Some(p), Some(x)) = (&visual, &s.x_v) {
                    let act = branch_forward(x, p, clamp)?;
                    let (loss, grad_y) = ce_loss(&act.y_hat, s.class, tau);
                    epoch_loss = epoch_loss + loss;
                    let g = branch_backward(&act, p, &grad_y, clamp);
                    grads_v.as_mut().unwrap().accumulate(&g, F::one());
                }
                if let (Some(p), Some(x)) = (&textual, &s.x_t) {
                    let act = branch_forward(x, p, clamp)?;
                    let (loss, grad_y) = ce_loss(&act.y_hat, s.class, tau);
                    epoch_loss = epoch_loss + loss;
                    let g = branch_backward(&act, p, &grad_y, clamp);
                    grads_t.as_mut().unwrap().accumulate(&g, F::one());
                }
            }
            seen += batch.len();
            let scale = F::one() / F::of(batch.len() as f64);
            if let (Some(p), Some(g), Some(st)) = (&mut visual, &mut grads_v, &mut visual_state) {
                for t in g.tensors_mut() {
                    for x in t.iter_mut() {
                        *x = *x * scale;
                    }
                }
                let gt = g.tensors();
                adam_step(&mut p.tensors_mut(), &gt, st, &hp);
            }
            if let (Some(p), Some(g), Some(st)) = (&mut textual, &mut grads_t, &mut textual_state) {
                for t in g.tensors_mut() {
                    for x in t.iter_mut() {
                        *x = *x * scale;
                    }
                }
                let gt = g.tensors();
                adam_step(&mut p.tensors_mut(), &gt, st, &hp);
            }
        }

        let model = Model {
            cfg: cfg.clone(),
            mode,
            visual: visual.clone(),
            textual: textual.clone(),
        };
        let (city, region) = val_accuracy(&model, &val, &class_centroids);
        let mean = (city + region) / 2.0;
        // per-branch CE terms summed; divide by samples for the log
        let denom = if mode.visual_active() && mode.textual_active() {
            2 * seen
        } else {
            seen
        };
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss.to_f64_lossy() / denom as f64,
            val_city_pct: city,
            val_region_pct: region,
            val_mean_pct: mean,
        });
        if best.as_ref().map_or(true, |(b, _)| mean > *b) {
            log.best_epoch = epoch;
            best = Some((mean, model));
        }
    }

    let (_, model) = best.expect("at least one epoch ran");
    Ok(TrainedClassifier { model, log })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegressionEpochRecord {
    pub epoch: usize,
    pub train_loss_km: f64,
    pub val_mean_km: f64,
    pub val_median_km: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct RegressionLog {
    pub epochs: Vec<RegressionEpochRecord>,
    /// Epoch (1-based) with the lowest validation median GCD.
    pub best_epoch: usize,
}

pub struct TrainedRegressor<F> {
    pub params: RegressionParams<F>,
    pub cfg: ModelConfig,
    pub kinds: Vec<FeatureKind>,
    pub log: RegressionLog,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Train the coordinate-regression head over a single concatenated trunk
/// of `kinds`, minimizing the differentiable great-circle distance.
pub fn train_regression<F: Real>(
    manifest: &Manifest,
    store: &EmbeddingStore,
    registry: &LocationRegistry,
    cfg: &ModelConfig,
    kinds: &[FeatureKind],
) -> Result<TrainedRegressor<F>, Error> {
    if kinds.is_empty() {
        return Err(Error::EmptyInput("regression feature kinds"));
    }
    let gather = |split: Split| -> Result<Vec<(Vec<F>, [F; 3])>, Error> {
        let ids: Vec<&str> = manifest.in_split(split).map(|a| a.id.as_str()).collect();
        let mut missing = store.missing(ids.iter().copied(), kinds);
        if !missing.is_empty() {
            missing.sort();
            return Err(Error::MissingEmbeddings(missing));
        }
        manifest
            .in_split(split)
            .map(|a| {
                let loc = registry.require(&a.query_location_id)?;
                let g = loc.centroid.unit_vector();
                Ok((
                    store.concat::<F>(&a.id, kinds)?,
                    [F::of(g[0]), F::of(g[1]), F::of(g[2])],
                ))
            })
            .collect()
    };
    let train = gather(Split::Train)?;
    let val = gather(Split::Val)?;
    if train.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }

    let clamp = F::of(cfg.norm_clamp);
    let hp = AdamParams::with_lr(F::of(cfg.lr));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d_in = store.concat_dim(kinds)?;
    let mut params = init_regression::<F>(d_in, cfg.hidden, &mut rng);
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut state = AdamState::for_shapes(&shapes);

    let mut log = RegressionLog::default();
    let mut best: Option<(f64, RegressionParams<F>)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = F::zero();
        for batch in order.chunks(cfg.batch) {
            let mut grads = params.zeros_like();
            for &i in batch {
                let (x, g) = &train[i];
                let act = regression_forward(x, &params, clamp)?;
                let (loss, grad_c) = unit_vector_loss(&act.c, g);
                epoch_loss = epoch_loss + loss;
                let gp = regression_backward(&act, &params, &grad_c, clamp);
                grads.accumulate(&gp, F::one());
            }
            let scale = F::one() / F::of(batch.len() as f64);
            for t in grads.tensors_mut() {
                for x in t.iter_mut() {
                    *x = *x * scale;
                }
            }
            let gt = grads.tensors();
            adam_step(&mut params.tensors_mut(), &gt, &mut state, &hp);
        }

        let mut val_d: Vec<f64> = val
            .iter()
            .map(|(x, g)| {
                let act = regression_forward(x, &params, clamp).expect("validated");
                unit_vector_loss(&act.c, g).0.to_f64_lossy()
            })
            .collect();
        val_d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (val_mean, val_median) = if val_d.is_empty() {
            (0.0, 0.0)
        } else {
            (
                val_d.iter().sum::<f64>() / val_d.len() as f64,
                median(&val_d),
            )
        };
        log.epochs.push(RegressionEpochRecord {
            epoch,
            train_loss_km: epoch_loss.to_f64_lossy() / train.len() as f64,
            val_mean_km: val_mean,
            val_median_km: val_median,
        });
        if best.as_ref().map_or(true, |(b, _)| val_median < *b) {
            log.best_epoch = epoch;
            best = Some((val_median, params.clone()));
        }
    }

    let (_, params) = best.expect("at least one epoch ran");
    Ok(TrainedRegressor {
        params,
        cfg: cfg.clone(),
        kinds: kinds.to_vec(),
        log,
    })
}
