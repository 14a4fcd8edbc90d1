//! Leaky-integrator echo state network with a ridge-regression readout.
//!
//! State update, for input `u(n)` and previous state `x(n-1)`:
//!
//! ```text
//! x~(n) = tanh(W_in [1; u(n)] + W x(n-1))
//! x(n)  = (1 - alpha) x(n-1) + alpha x~(n)
//! y(n)  = W_out [1; u(n); x(n)]
//! ```
//!
//! The reservoir `W` is used as given; it is never rescaled.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::topology::{format_hash, ReservoirMatrix};

mod ridge;

pub use ridge::{fit_readout, RidgeProblem};

#[derive(Debug, Error)]
pub enum EsnError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(
        "ridge system is singular at pivot {pivot} with lambda = {lambda}; use a positive regularization coefficient"
    )]
    Singular { lambda: f64, pivot: usize },
    #[error("model has no fitted readout")]
    NotTrained,
    #[error("model document: {0}")]
    Document(String),
}

impl EsnError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            EsnError::Config(_) => ErrorCategory::InvalidConfig,
            EsnError::Shape(_) | EsnError::Singular { .. } | EsnError::NotTrained => {
                ErrorCategory::Numerical
            }
            EsnError::Document(_) => ErrorCategory::Parse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnConfig {
    pub n_reservoir: usize,
    pub n_input: usize,
    pub n_output: usize,
    /// Leaking rate in `(0, 1]`.
    pub alpha: f64,
    /// Ridge penalty, `>= 0`.
    pub lambda: f64,
    pub input_scale: f64,
    pub win_seed: u64,
}

impl EsnConfig {
    pub fn scalar(n_reservoir: usize, alpha: f64, lambda: f64, win_seed: u64) -> Self {
        Self {
            n_reservoir,
            n_input: 1,
            n_output: 1,
            alpha,
            lambda,
            input_scale: 1.0,
            win_seed,
        }
    }

    pub fn validate(&self) -> Result<(), EsnError> {
        if self.n_reservoir == 0 || self.n_input == 0 || self.n_output == 0 {
            return Err(EsnError::Config("dimensions must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(EsnError::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(EsnError::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.input_scale >= 0.0 && self.input_scale.is_finite()) {
            return Err(EsnError::Config(format!(
                "input_scale must be finite and >= 0, got {}",
                self.input_scale
            )));
        }
        Ok(())
    }

    /// Rows of `[1; u; x]`.
    pub fn feature_len(&self) -> usize {
        1 + self.n_input + self.n_reservoir
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnState {
    pub x: DVector<f64>,
}

impl EsnState {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: DVector::zeros(n),
        }
    }
}

/// Concatenated `[1; u(n); x(n)]` columns, one per driven step.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    data: DMatrix<f64>,
}

impl StateMatrix {
    pub fn from_matrix(data: DMatrix<f64>) -> Self {
        Self { data }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    /// Reservoir part of the last column.
    pub fn last_state(&self, n_input: usize) -> Option<EsnState> {
        let c = self.data.ncols().checked_sub(1)?;
        let x = self
            .data
            .view((1 + n_input, c), (self.data.nrows() - 1 - n_input, 1));
        Some(EsnState {
            x: x.column(0).into_owned(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct EsnModel {
    w_in: DMatrix<f64>,
    reservoir: Arc<ReservoirMatrix>,
    w_out: Option<DMatrix<f64>>,
    config: EsnConfig,
}

/// Input weights: i.i.d. uniform `[-0.5, 0.5)` scaled by `input_scale`, drawn
/// row-major from a ChaCha8 stream seeded with `win_seed`.
fn sample_input_weights(config: &EsnConfig) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.win_seed);
    let cols = 1 + config.n_input;
    let draws: Vec<f64> = (0..config.n_reservoir * cols)
        .map(|_| rng.random_range(-0.5..0.5) * config.input_scale)
        .collect();
    DMatrix::from_row_slice(config.n_reservoir, cols, &draws)
}

pub fn init_model(
    config: EsnConfig,
    reservoir: Arc<ReservoirMatrix>,
) -> Result<EsnModel, EsnError> {
    config.validate()?;
    if reservoir.n() != config.n_reservoir {
        return Err(EsnError::Config(format!(
            "reservoir side {} does not match n_reservoir {}",
            reservoir.n(),
            config.n_reservoir
        )));
    }
    Ok(EsnModel {
        w_in: sample_input_weights(&config),
        reservoir,
        w_out: None,
        config,
    })
}

impl EsnModel {
    /// Builds a model from explicit weights.
    pub fn from_parts(
        config: EsnConfig,
        w_in: DMatrix<f64>,
        reservoir: Arc<ReservoirMatrix>,
        w_out: Option<DMatrix<f64>>,
    ) -> Result<EsnModel, EsnError> {
        config.validate()?;
        if reservoir.n() != config.n_reservoir {
            return Err(EsnError::Config(format!(
                "reservoir side {} does not match n_reservoir {}",
                reservoir.n(),
                config.n_reservoir
            )));
        }
        if w_in.shape() != (config.n_reservoir, 1 + config.n_input) {
            return Err(EsnError::Shape(format!(
                "w_in has shape {:?}",
                w_in.shape()
            )));
        }
        let model = EsnModel {
            w_in,
            reservoir,
            w_out: None,
            config,
        };
        match w_out {
            Some(w) => model.with_readout(w),
            None => Ok(model),
        }
    }

    pub fn config(&self) -> &EsnConfig {
        &self.config
    }

    pub fn w_in(&self) -> &DMatrix<f64> {
        &self.w_in
    }

    pub fn w_out(&self) -> Option<&DMatrix<f64>> {
        self.w_out.as_ref()
    }

    pub fn reservoir(&self) -> &Arc<ReservoirMatrix> {
        &self.reservoir
    }

    pub fn with_readout(mut self, w_out: DMatrix<f64>) -> Result<EsnModel, EsnError> {
        let expected = (self.config.n_output, self.config.feature_len());
        if w_out.shape() != expected {
            return Err(EsnError::Shape(format!(
                "w_out has shape {:?}, expected {expected:?}",
                w_out.shape()
            )));
        }
        self.w_out = Some(w_out);
        Ok(self)
    }

    fn check_state(&self, state: &EsnState) -> Result<(), EsnError> {
        if state.x.len() != self.config.n_reservoir {
            return Err(EsnError::Shape(format!(
                "state has length {}, expected {}",
                state.x.len(),
                self.config.n_reservoir
            )));
        }
        Ok(())
    }

    fn check_inputs(&self, inputs: &DMatrix<f64>) -> Result<(), EsnError> {
        if inputs.nrows() != self.config.n_input {
            return Err(EsnError::Shape(format!(
                "inputs have {} rows, expected {}",
                inputs.nrows(),
                self.config.n_input
            )));
        }
        if inputs.ncols() == 0 {
            return Err(EsnError::Shape("input sequence is empty".into()));
        }
        Ok(())
    }

    /// Writes the next state into `next`. `scratch` holds the pre-activation.
    fn step_into(
        &self,
        prev: &DVector<f64>,
        u: impl Iterator<Item = f64>,
        scratch: &mut DVector<f64>,
        next: &mut DVector<f64>,
    ) {
        scratch.gemv(1.0, self.reservoir.data(), prev, 0.0);
        scratch.axpy(1.0, &self.w_in.column(0), 1.0);
        for (k, uk) in u.enumerate() {
            scratch.axpy(uk, &self.w_in.column(k + 1), 1.0);
        }
        let alpha = self.config.alpha;
        for i in 0..next.len() {
            next[i] = (1.0 - alpha) * prev[i] + alpha * scratch[i].tanh();
        }
    }

    /// One leaky-tanh update; `state` is left untouched.
    pub fn update_state(&self, state: &EsnState, u: &[f64]) -> Result<EsnState, EsnError> {
        self.check_state(state)?;
        if u.len() != self.config.n_input {
            return Err(EsnError::Shape(format!(
                "input has length {}, expected {}",
                u.len(),
                self.config.n_input
            )));
        }
        let n = self.config.n_reservoir;
        let mut scratch = DVector::zeros(n);
        let mut next = DVector::zeros(n);
        self.step_into(&state.x, u.iter().copied(), &mut scratch, &mut next);
        Ok(EsnState { x: next })
    }

    /// Drives the reservoir over `inputs` (`n_input x T`) from `initial`,
    /// collecting `[1; u(n); x(n)]` for every step. No washout.
    pub fn harvest_states(
        &self,
        inputs: &DMatrix<f64>,
        initial: &EsnState,
    ) -> Result<StateMatrix, EsnError> {
        self.check_state(initial)?;
        self.check_inputs(inputs)?;
        let (n, nu) = (self.config.n_reservoir, self.config.n_input);
        let steps = inputs.ncols();
        let mut out = DMatrix::zeros(self.config.feature_len(), steps);
        let mut prev = initial.x.clone();
        let mut next = DVector::zeros(n);
        let mut scratch = DVector::zeros(n);
        for t in 0..steps {
            let u = inputs.column(t);
            self.step_into(&prev, u.iter().copied(), &mut scratch, &mut next);
            let mut col = out.column_mut(t);
            col[0] = 1.0;
            col.rows_mut(1, nu).copy_from(&u);
            col.rows_mut(1 + nu, n).copy_from(&next);
            std::mem::swap(&mut prev, &mut next);
        }
        Ok(StateMatrix::from_matrix(out))
    }

    /// Scalar-input convenience for `harvest_states`.
    pub fn harvest_series(
        &self,
        inputs: &[f64],
        initial: &EsnState,
    ) -> Result<StateMatrix, EsnError> {
        self.harvest_states(&DMatrix::from_row_slice(1, inputs.len(), inputs), initial)
    }

    /// Applies the readout to every column of a harvested state matrix.
    pub fn readout(&self, states: &StateMatrix) -> Result<DMatrix<f64>, EsnError> {
        let w_out = self.w_out.as_ref().ok_or(EsnError::NotTrained)?;
        if states.matrix().nrows() != w_out.ncols() {
            return Err(EsnError::Shape(
                "state matrix does not match readout width".into(),
            ));
        }
        Ok(w_out * states.matrix())
    }

    /// Outputs `n_output x T`, states evolving as in `harvest_states`.
    pub fn predict(
        &self,
        inputs: &DMatrix<f64>,
        initial: &EsnState,
    ) -> Result<DMatrix<f64>, EsnError> {
        if self.w_out.is_none() {
            return Err(EsnError::NotTrained);
        }
        let states = self.harvest_states(inputs, initial)?;
        self.readout(&states)
    }

    /// Scalar-input, scalar-output prediction.
    pub fn predict_series(&self, inputs: &[f64], initial: &EsnState) -> Result<Vec<f64>, EsnError> {
        let y = self.predict(&DMatrix::from_row_slice(1, inputs.len(), inputs), initial)?;
        Ok(y.row(0).iter().copied().collect())
    }

    pub fn to_document(&self) -> ModelDocument {
        let flat = |m: &DMatrix<f64>| DenseArray {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        };
        ModelDocument {
            config: self.config.clone(),
            w_in: flat(&self.w_in),
            w_out: self.w_out.as_ref().map(flat),
            reservoir_hash: format_hash(self.reservoir.content_hash()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }

    /// Restores a model; `reservoir` must hash to the recorded digest.
    pub fn from_json(text: &str, reservoir: Arc<ReservoirMatrix>) -> Result<EsnModel, EsnError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| EsnError::Document(e.to_string()))?;
        let actual = format_hash(reservoir.content_hash());
        if doc.reservoir_hash != actual {
            return Err(EsnError::Document(format!(
                "reservoir hash {actual} does not match recorded {}",
                doc.reservoir_hash
            )));
        }
        let w_out = doc.w_out.map(DenseArray::into_matrix).transpose()?;
        EsnModel::from_parts(doc.config, doc.w_in.into_matrix()?, reservoir, w_out)
    }
}

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseArray {
    fn into_matrix(self) -> Result<DMatrix<f64>, EsnError> {
        if self.rows * self.cols != self.data.len() {
            return Err(EsnError::Document(format!(
                "array declares {}x{} but holds {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub config: EsnConfig,
    pub w_in: DenseArray,
    pub w_out: Option<DenseArray>,
    pub reservoir_hash: String,
}
