//! Mackey-Glass delay differential equation, integrated with fixed-step RK4.
//!
//! The delayed value `x(t - tau)` is read from a ring buffer holding the last
//! `ceil(tau / dt) + 2` integration steps, linearly interpolated when the
//! lookup falls between steps (RK4 half-steps, or a non-integer `tau / dt`).
//! Before `t = 0` the history is the constant `history_value`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;

#[derive(Debug, Error)]
pub enum MgError {
    #[error("invalid Mackey-Glass parameters: {0}")]
    InvalidParams(String),
    #[error("integration diverged to a non-finite value at step {step}")]
    Divergence { step: usize },
    #[error("series csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("series csv i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl MgError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            MgError::InvalidParams(_) => ErrorCategory::InvalidConfig,
            MgError::Divergence { .. } => ErrorCategory::Numerical,
            MgError::Csv { .. } => ErrorCategory::Parse,
            MgError::Io(_) => ErrorCategory::Io,
        }
    }
}

/// Which right-hand side to integrate.
///
/// `Standard`: `dx/dt = beta * x(t-tau) / (1 + x(t-tau)^n) - gamma * x(t)`.
///
/// `Additive`: `dx/dt = beta * x(t) + gamma * x(t-tau) / (1 + x(t-tau)^n)`,
/// the two-positive-term variant. It is unstable for `beta > 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationForm {
    #[default]
    Standard,
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgParams {
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub exponent: u32,
    pub dt: f64,
    pub sample_stride: usize,
    pub history_value: f64,
    pub discard: usize,
    pub length: usize,
    pub equation_form: EquationForm,
}

impl Default for MgParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            tau: 17.0,
            exponent: 10,
            dt: 0.1,
            sample_stride: 10,
            history_value: 1.2,
            discard: 1000,
            length: 2000,
            equation_form: EquationForm::Standard,
        }
    }
}

impl MgParams {
    pub fn validate(&self) -> Result<(), MgError> {
        let bad = |msg: &str| Err(MgError::InvalidParams(msg.to_string()));
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad("tau must be a positive finite number");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be a positive finite number");
        }
        if self.dt > self.tau {
            return bad("dt must not exceed tau");
        }
        if self.length == 0 {
            return bad("length must be positive");
        }
        if self.exponent == 0 {
            return bad("exponent must be at least 1");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be positive");
        }
        if !(self.beta.is_finite() && self.gamma.is_finite() && self.history_value.is_finite()) {
            return bad("beta, gamma and history_value must be finite");
        }
        Ok(())
    }

    /// Time between emitted samples.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_stride as f64
    }

    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        let feedback = delayed / (1.0 + delayed.powi(self.exponent as i32));
        match self.equation_form {
            EquationForm::Standard => self.beta * feedback - self.gamma * x,
            EquationForm::Additive => self.beta * x + self.gamma * feedback,
        }
    }
}

/// Uniformly sampled real-valued series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub dt_effective: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt_effective: f64) -> Self {
        Self {
            values,
            dt_effective,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.values.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Affine rescale to zero mean and unit max-abs. A constant series maps to zeros.
    pub fn normalized(&self) -> TimeSeries {
        if self.values.is_empty() {
            return self.clone();
        }
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        let scale = self
            .values
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0, f64::max);
        let values = if scale > 0.0 {
            self.values.iter().map(|v| (v - mean) / scale).collect()
        } else {
            vec![0.0; self.values.len()]
        };
        TimeSeries::new(values, self.dt_effective)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads the `index,value` format. Indices must run 0, 1, 2, ...
    pub fn read_csv<R: BufRead>(input: R, dt_effective: f64) -> Result<TimeSeries, MgError> {
        let mut values = Vec::new();
        let mut lines = input.lines();
        match lines.next() {
            Some(header) => {
                let header = header?;
                if header.trim() != "index,value" {
                    return Err(MgError::Csv {
                        line: 1,
                        message: format!(
                            "expected header `index,value`, found `{}`",
                            header.trim()
                        ),
                    });
                }
            }
            None => {
                return Err(MgError::Csv {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        }
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| MgError::Csv {
                line: line_no,
                message,
            };
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| err("expected two columns".into()))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| err(format!("bad index: {e}")))?;
            if idx != values.len() {
                return Err(err(format!("expected index {}, found {idx}", values.len())));
            }
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|e| err(format!("bad value: {e}")))?;
            if !val.is_finite() {
                return Err(err("non-finite value".into()));
            }
            values.push(val);
        }
        if values.is_empty() {
            return Err(MgError::Csv {
                line: 2,
                message: "no samples".into(),
            });
        }
        Ok(TimeSeries::new(values, dt_effective))
    }
}

/// Fixed-capacity store of the most recent integration steps.
struct History {
    buf: Vec<f64>,
    initial: f64,
    /// Delay measured in integration steps.
    lag: f64,
}

impl History {
    fn new(lag: f64, initial: f64) -> Self {
        let cap = lag.ceil() as usize + 2;
        let mut buf = vec![initial; cap];
        buf[0] = initial;
        Self { buf, initial, lag }
    }

    fn record(&mut self, step: usize, value: f64) {
        let cap = self.buf.len();
        self.buf[step % cap] = value;
    }

    /// `x` at fractional step position `pos - lag`.
    fn delayed(&self, pos: f64) -> f64 {
        let p = pos - self.lag;
        if p <= 0.0 {
            return self.initial;
        }
        let lo = p.floor();
        let frac = p - lo;
        let cap = self.buf.len();
        let lo = lo as usize;
        let a = self.buf[lo % cap];
        if frac == 0.0 {
            return a;
        }
        let b = self.buf[(lo + 1) % cap];
        a + frac * (b - a)
    }
}

/// Integrates the equation and returns `length` samples after dropping `discard`.
pub fn generate(params: &MgParams) -> Result<TimeSeries, MgError> {
    params.validate()?;
    let dt = params.dt;
    let stride = params.sample_stride;
    let mut lag = params.tau / dt;
    // 17 / 0.1 is not exactly 170 in binary; snap so integer delays hit grid points.
    if (lag - lag.round()).abs() < 1e-9 * lag.max(1.0) {
        lag = lag.round();
    }

    let total_samples = params.discard + params.length;
    let total_steps = (total_samples - 1) * stride;
    let mut history = History::new(lag, params.history_value);
    let mut values = Vec::with_capacity(params.length);
    let mut x = params.history_value;
    if params.discard == 0 {
        values.push(x);
    }

    for k in 0..total_steps {
        let t = k as f64;
        let d0 = history.delayed(t);
        let dh = history.delayed(t + 0.5);
        let d1 = history.delayed(t + 1.0);
        let k1 = params.rhs(x, d0);
        let k2 = params.rhs(x + 0.5 * dt * k1, dh);
        let k3 = params.rhs(x + 0.5 * dt * k2, dh);
        let k4 = params.rhs(x + dt * k3, d1);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() {
            return Err(MgError::Divergence { step: k + 1 });
        }
        let step = k + 1;
        history.record(step, x);
        if step % stride == 0 && step / stride >= params.discard {
            values.push(x);
        }
    }

    debug_assert_eq!(values.len(), params.length);
    Ok(TimeSeries::new(values, params.sample_interval()))
}

/// Sup-norm gap between the trajectory at `dt` and at `dt / 2` over the emitted window.
pub fn convergence_check(params: &MgParams) -> Result<f64, MgError> {
    params.validate()?;
    let coarse = generate(params)?;
    let fine_params = MgParams {
        dt: params.dt / 2.0,
        sample_stride: params.sample_stride * 2,
        ..params.clone()
    };
    let fine = generate(&fine_params)?;
    Ok(coarse
        .values
        .iter()
        .zip(&fine.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_params() -> MgParams {
        MgParams {
            beta: 0.0,
            gamma: 0.1,
            history_value: 1.0,
            discard: 0,
            length: 200,
            ..MgParams::default()
        }
    }

    /// Euler reference with 100x finer steps and exact grid-aligned delays.
    fn euler_reference(params: &MgParams) -> Vec<f64> {
        let dt = params.dt / 100.0;
        let stride = params.sample_stride * 100;
        let lag = (params.tau / dt).round() as usize;
        let steps = (params.discard + params.length - 1) * stride;
        let mut xs = Vec::with_capacity(steps + 1);
        xs.push(params.history_value);
        for k in 0..steps {
            let x = xs[k];
            let xd = if k >= lag {
                xs[k - lag]
            } else {
                params.history_value
            };
            let f = params.beta * xd / (1.0 + xd.powi(params.exponent as i32)) - params.gamma * x;
            xs.push(x + dt * f);
        }
        xs.into_iter()
            .step_by(stride)
            .skip(params.discard)
            .collect()
    }

    #[test]
    fn linear_decay_matches_closed_form_in_both_forms() {
        let standard = generate(&decay_params()).unwrap();
        let additive = generate(&MgParams {
            beta: -0.1,
            gamma: 0.0,
            equation_form: EquationForm::Additive,
            ..decay_params()
        })
        .unwrap();
        for series in [standard, additive] {
            for (i, v) in series.values.iter().enumerate() {
                let t = i as f64 * series.dt_effective;
                assert!((v - (-0.1 * t).exp()).abs() < 1e-6, "t={t}: {v}");
            }
        }
    }

    #[test]
    fn equilibrium_is_preserved() {
        // beta / gamma = 2 puts the fixed point at x = 1.
        let p = MgParams {
            history_value: 1.0,
            discard: 0,
            length: 1001,
            sample_stride: 1,
            ..MgParams::default()
        };
        let s = generate(&p).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-9));

        // additive form: beta + gamma / (1 + x^10) = 0 at x = 1.
        let p = MgParams {
            beta: -0.1,
            gamma: 0.2,
            equation_form: EquationForm::Additive,
            ..p
        };
        let s = generate(&p).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn chaotic_regime_is_bounded_and_aperiodic() {
        let s = generate(&MgParams::default()).unwrap();
        assert_eq!(s.len(), 2000);
        assert!(s.values.iter().all(|&v| v > 0.0 && v < 1.5));

        let n = s.len();
        let mean = s.values.iter().sum::<f64>() / n as f64;
        let c: Vec<f64> = s.values.iter().map(|v| v - mean).collect();
        let var: f64 = c.iter().map(|v| v * v).sum::<f64>();
        for lag in 1..=500 {
            let num: f64 = c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
            let den = (c[..n - lag].iter().map(|v| v * v).sum::<f64>()
                * c[lag..].iter().map(|v| v * v).sum::<f64>())
            .sqrt();
            assert!(
                num / den <= 0.999,
                "lag {lag} autocorrelation {}",
                num / den
            );
        }
        assert!(var > 0.0);
    }

    #[test]
    fn matches_fine_euler_reference() {
        let p = MgParams {
            discard: 0,
            length: 500,
            ..MgParams::default()
        };
        let rk = generate(&p).unwrap();
        let euler = euler_reference(&p);
        let gap = rk
            .values
            .iter()
            .zip(&euler)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-3, "sup-norm gap {gap}");
    }

    #[test]
    fn boundedness_over_ten_thousand_steps() {
        let p = MgParams {
            discard: 0,
            length: 10_001,
            sample_stride: 1,
            ..MgParams::default()
        };
        let s = generate(&p).unwrap();
        assert!(s.values.iter().all(|&v| v > 0.0 && v < 1.5));
    }

    #[test]
    fn deterministic() {
        let a = generate(&MgParams::default()).unwrap();
        let b = generate(&MgParams::default()).unwrap();
        assert!(a
            .values
            .iter()
            .zip(&b.values)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn convergence_gauges() {
        assert!(convergence_check(&decay_params()).unwrap() < 1e-8);

        let chaotic = MgParams {
            length: 300,
            ..MgParams::default()
        };
        let gap = convergence_check(&chaotic).unwrap();
        assert!(gap < 1e-2, "gap {gap}");

        let single = MgParams {
            length: 1,
            discard: 0,
            ..MgParams::default()
        };
        assert!(convergence_check(&single).unwrap() < 1e-6);
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            MgParams {
                length: 0,
                ..MgParams::default()
            },
            MgParams {
                tau: 0.0,
                ..MgParams::default()
            },
            MgParams {
                dt: 20.0,
                ..MgParams::default()
            },
            MgParams {
                exponent: 0,
                ..MgParams::default()
            },
            MgParams {
                sample_stride: 0,
                ..MgParams::default()
            },
        ] {
            assert!(matches!(generate(&p), Err(MgError::InvalidParams(_))));
        }
    }

    #[test]
    fn divergence_reports_step() {
        let p = MgParams {
            beta: 50.0,
            gamma: 0.0,
            equation_form: EquationForm::Additive,
            discard: 0,
            length: 100_000,
            ..MgParams::default()
        };
        match generate(&p) {
            Err(MgError::Divergence { step }) => assert!(step > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn non_integer_delay_ratio() {
        let p = MgParams {
            dt: 0.3,
            sample_stride: 3,
            discard: 0,
            length: 300,
            ..MgParams::default()
        };
        let s = generate(&p).unwrap();
        let reference = euler_reference(&MgParams {
            dt: 0.1,
            sample_stride: 9,
            ..p.clone()
        });
        let gap = s.values[..100]
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-2, "gap {gap}");
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = generate(&MgParams {
            length: 50,
            ..MgParams::default()
        })
        .unwrap();
        let text = s.to_csv_string();
        let back = TimeSeries::read_csv(text.as_bytes(), s.dt_effective).unwrap();
        assert_eq!(back, s);

        let err = TimeSeries::read_csv("index,value\n0,1.0\n2,3.0\n".as_bytes(), 1.0).unwrap_err();
        assert!(matches!(err, MgError::Csv { line: 3, .. }));
        assert!(TimeSeries::read_csv("index,value\n".as_bytes(), 1.0).is_err());
    }

    #[test]
    fn normalization() {
        let s = TimeSeries::new(vec![1.0, 2.0, 3.0], 1.0).normalized();
        assert_eq!(s.values, vec![-1.0, 0.0, 1.0]);
        let c = TimeSeries::new(vec![5.0; 4], 1.0).normalized();
        assert_eq!(c.values, vec![0.0; 4]);
    }
}
