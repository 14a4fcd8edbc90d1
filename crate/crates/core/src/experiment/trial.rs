use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::esn::{init_model, EsnConfig, EsnModel, EsnState, RidgeProblem};
use crate::mackey_glass::TimeSeries;
use crate::topology::{content_hash, format_hash, ReservoirKind, ReservoirMatrix};

use super::{derive_seed, mse, ExperimentError, HyperGrid, ModelClass, SplitSpec, TrialRecord};

/// Everything a trial needs besides its hyperparameters and seed.
#[derive(Debug, Clone)]
pub struct TrialContext<'a> {
    pub model_class: ModelClass,
    pub reservoir: Arc<ReservoirMatrix>,
    pub series: &'a TimeSeries,
    pub split: SplitSpec,
    pub input_scale: f64,
    /// Start validation from the final training state instead of zeros.
    pub carry_state: bool,
}

impl<'a> TrialContext<'a> {
    pub fn new(
        model_class: ModelClass,
        reservoir: Arc<ReservoirMatrix>,
        series: &'a TimeSeries,
        split: SplitSpec,
    ) -> Result<Self, ExperimentError> {
        let expected = match model_class {
            ModelClass::Ffesn => ReservoirKind::Connectome,
            ModelClass::Esn => ReservoirKind::Random,
        };
        if reservoir.kind() != expected {
            return Err(ExperimentError::Config(format!(
                "{model_class} needs a {expected:?} reservoir, got {:?}",
                reservoir.kind()
            )));
        }
        split.check_bounds(series.len())?;
        Ok(Self {
            model_class,
            reservoir,
            series,
            split,
            input_scale: 1.0,
            carry_state: false,
        })
    }

    pub fn with_input_scale(mut self, input_scale: f64) -> Self {
        self.input_scale = input_scale;
        self
    }

    pub fn with_carry_state(mut self, carry_state: bool) -> Self {
        self.carry_state = carry_state;
        self
    }

    fn block(&self, r: &std::ops::Range<usize>) -> &[f64] {
        &self.series.values[r.clone()]
    }

    /// Builds the model and harvests training states for one `(alpha, seed)`.
    pub fn prepare(&self, alpha: f64, win_seed: u64) -> Result<PreparedTrial, ExperimentError> {
        let config = EsnConfig {
            input_scale: self.input_scale,
            ..EsnConfig::scalar(self.reservoir.n(), alpha, 0.0, win_seed)
        };
        let model = init_model(config, self.reservoir.clone())?;
        let zero = EsnState::zeros(self.reservoir.n());
        let states = model.harvest_series(self.block(&self.split.train_in), &zero)?;
        let train_out = self.block(&self.split.train_out);
        let targets = DMatrix::from_row_slice(1, train_out.len(), train_out);
        let problem = RidgeProblem::new(&states, &targets)?;
        let train_final = states.last_state(1).expect("training block is non-empty");
        Ok(PreparedTrial {
            model,
            problem,
            train_final,
            alpha,
            win_seed,
        })
    }

    fn record(
        &self,
        lambda: f64,
        alpha: f64,
        trial_index: usize,
        win_seed: u64,
        mse: f64,
    ) -> TrialRecord {
        TrialRecord {
            model_class: self.model_class,
            variant: self.split.variant,
            train_size: self.split.train_size,
            lambda,
            alpha,
            trial_index,
            win_seed,
            mse,
        }
    }
}

/// A model with harvested training statistics, ready to be solved for any lambda.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    model: EsnModel,
    problem: RidgeProblem,
    train_final: EsnState,
    pub alpha: f64,
    pub win_seed: u64,
}

impl PreparedTrial {
    /// Fits the readout at `lambda` and scores it on the validation blocks.
    pub fn evaluate(
        &self,
        ctx: &TrialContext<'_>,
        lambda: f64,
    ) -> Result<(f64, Vec<f64>), ExperimentError> {
        let w_out = self.problem.solve(lambda)?;
        let fitted = self.model.clone().with_readout(w_out)?;
        let initial = if ctx.carry_state {
            self.train_final.clone()
        } else {
            EsnState::zeros(ctx.reservoir.n())
        };
        let prediction = fitted.predict_series(ctx.block(&ctx.split.val_in), &initial)?;
        let score = mse(&prediction, ctx.block(&ctx.split.val_out))?;
        if !score.is_finite() {
            return Err(ExperimentError::Shape(format!(
                "non-finite validation mse {score}"
            )));
        }
        Ok((score, prediction))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    /// Validation-block prediction.
    pub prediction: Vec<f64>,
}

pub fn run_trial_outcome(
    ctx: &TrialContext<'_>,
    lambda: f64,
    alpha: f64,
    win_seed: u64,
    trial_index: usize,
) -> Result<TrialOutcome, ExperimentError> {
    let prepared = ctx.prepare(alpha, win_seed)?;
    let (score, prediction) = prepared.evaluate(ctx, lambda)?;
    Ok(TrialOutcome {
        record: ctx.record(lambda, alpha, trial_index, win_seed, score),
        prediction,
    })
}

/// Train on `train_in -> train_out`, validate on `val_in -> val_out`.
pub fn run_single_trial(
    ctx: &TrialContext<'_>,
    lambda: f64,
    alpha: f64,
    win_seed: u64,
) -> Result<TrialRecord, ExperimentError> {
    run_trial_outcome(ctx, lambda, alpha, win_seed, 0).map(|o| o.record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub model_class: ModelClass,
    pub lambda: f64,
    pub alpha: f64,
    pub val_mse: f64,
    pub win_seed: u64,
    /// Alpha-major, in grid order.
    pub points: Vec<GridPoint>,
}

/// Evaluates every grid point with one shared input-weight seed and returns
/// the lowest validation MSE; ties go to the smaller lambda, then alpha.
/// Failed points are kept in `points` and skipped.
pub fn grid_search(
    ctx: &TrialContext<'_>,
    grid: &HyperGrid,
    search_seed: u64,
) -> Result<GridSearchResult, ExperimentError> {
    grid.validate()?;
    let win_seed = derive_seed(search_seed, 0);
    let per_alpha: Vec<Vec<GridPoint>> = grid
        .alphas
        .par_iter()
        .map(|&alpha| match ctx.prepare(alpha, win_seed) {
            Ok(prepared) => grid
                .lambdas
                .iter()
                .map(|&lambda| match prepared.evaluate(ctx, lambda) {
                    Ok((score, _)) => GridPoint {
                        lambda,
                        alpha,
                        mse: Some(score),
                        error: None,
                    },
                    Err(e) => GridPoint {
                        lambda,
                        alpha,
                        mse: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect(),
            Err(e) => grid
                .lambdas
                .iter()
                .map(|&lambda| GridPoint {
                    lambda,
                    alpha,
                    mse: None,
                    error: Some(e.to_string()),
                })
                .collect(),
        })
        .collect();
    let points: Vec<GridPoint> = per_alpha.into_iter().flatten().collect();

    let mut best: Option<(f64, f64, f64)> = None;
    for p in &points {
        let Some(score) = p.mse else { continue };
        let better = match best {
            None => true,
            Some((m, l, a)) => {
                score < m || (score == m && (p.lambda < l || (p.lambda == l && p.alpha < a)))
            }
        };
        if better {
            best = Some((score, p.lambda, p.alpha));
        }
    }
    match best {
        Some((val_mse, lambda, alpha)) => Ok(GridSearchResult {
            model_class: ctx.model_class,
            lambda,
            alpha,
            val_mse,
            win_seed,
            points,
        }),
        None => Err(ExperimentError::SearchFailed {
            causes: points
                .iter()
                .map(|p| {
                    format!(
                        "(lambda={}, alpha={}): {}",
                        p.lambda,
                        p.alpha,
                        p.error.as_deref().unwrap_or("unknown")
                    )
                })
                .collect(),
        }),
    }
}

/// Repeats one configuration `n_trials` times with seeds derived from
/// `(master_seed, trial_index)`. Results are in trial order regardless of
/// scheduling; any failure fails the batch.
pub fn run_trials(
    ctx: &TrialContext<'_>,
    lambda: f64,
    alpha: f64,
    n_trials: usize,
    master_seed: u64,
) -> Result<Vec<TrialOutcome>, ExperimentError> {
    if n_trials == 0 {
        return Err(ExperimentError::Config(
            "n_trials must be at least 1".into(),
        ));
    }
    let expected = ctx.reservoir.content_hash();
    let results: Vec<Result<TrialOutcome, ExperimentError>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let found = content_hash(ctx.reservoir.data());
            if found != expected {
                return Err(ExperimentError::ReservoirChanged {
                    expected: format_hash(expected),
                    found: format_hash(found),
                    trial: i,
                });
            }
            run_trial_outcome(ctx, lambda, alpha, derive_seed(master_seed, i as u64), i)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(n_trials);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(outcomes)
    } else {
        Err(ExperimentError::TrialsFailed { failures })
    }
}
