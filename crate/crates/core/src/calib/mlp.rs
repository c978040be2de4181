use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{check_representation, CalibError, Calibrator};
use crate::model::{Representation, Wrench};
use crate::rng::{stream, Stream};
use crate::Dataset;

pub const HIDDEN_UNITS: usize = 12;

/// Weights of a 6-hidden-6 network with tanh hidden units and linear output.
/// Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl Network {
    pub fn zeros(hidden: usize) -> Network {
        Network {
            w1: DMatrix::zeros(hidden, 6),
            b1: DVector::zeros(hidden),
            w2: DMatrix::zeros(6, hidden),
            b2: DVector::zeros(6),
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(hidden: usize, rng: &mut R) -> Network {
        let l1 = (6.0 / (6 + hidden) as f64).sqrt();
        let mut n = Network::zeros(hidden);
        n.w1 = DMatrix::from_fn(hidden, 6, |_, _| rng.gen_range(-l1..l1));
        n.w2 = DMatrix::from_fn(6, hidden, |_, _| rng.gen_range(-l1..l1));
        n
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    /// Rows of `x` are samples; returns the output batch.
    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self.hidden_activations(x);
        let mut out = z * self.w2.transpose();
        for mut row in out.row_iter_mut() {
            row += self.b2.transpose();
        }
        out
    }

    fn hidden_activations(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = x * self.w1.transpose();
        for mut row in a.row_iter_mut() {
            row += self.b1.transpose();
        }
        a.map(f64::tanh)
    }

    /// Mean squared error over all samples and outputs.
    pub fn loss(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let r = self.forward(x) - y;
        r.norm_squared() / (r.len().max(1) as f64)
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Network) {
        let z = self.hidden_activations(x);
        let mut out = &z * self.w2.transpose();
        for mut row in out.row_iter_mut() {
            row += self.b2.transpose();
        }
        let r = out - y;
        let count = r.len().max(1) as f64;
        let loss = r.norm_squared() / count;
        let g_out = r * (2.0 / count);
        let w2 = g_out.transpose() * &z;
        let b2 = DVector::from_iterator(6, g_out.column_iter().map(|c| c.sum()));
        let g_hidden = (&g_out * &self.w2).component_mul(&z.map(|v| 1.0 - v * v));
        let w1 = g_hidden.transpose() * x;
        let b1 = DVector::from_iterator(self.hidden(), g_hidden.column_iter().map(|c| c.sum()));
        (loss, Network { w1, b1, w2, b2 })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.w1.iter().chain(self.b1.iter()).chain(self.w2.iter()).chain(self.b2.iter()).copied().collect()
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Network {
        let mut n = Network::zeros(hidden);
        let mut it = flat.iter().copied();
        for v in n.w1.iter_mut().chain(n.b1.iter_mut()).chain(n.w2.iter_mut()).chain(n.b2.iter_mut()) {
            *v = it.next().expect("flat parameter vector too short");
        }
        n
    }

    fn step(&mut self, grad: &Network, lr: f64) {
        self.w1 -= &grad.w1 * lr;
        self.b1 -= &grad.b1 * lr;
        self.w2 -= &grad.w2 * lr;
        self.b2 -= &grad.b2 * lr;
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpSettings {
    fn default() -> Self {
        MlpSettings { epochs: 3000, learning_rate: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingHistory {
    /// Training loss after `k` steps, `k = 0..epochs`.
    pub train_loss: Vec<f64>,
    /// Validation loss after `k` steps, `k = 0..=epochs`.
    pub validation_loss: Vec<f64>,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpCalibrator {
    pub network: Network,
    pub input_mean: [f64; 6],
    pub input_std: [f64; 6],
    pub output_mean: [f64; 6],
    pub output_std: [f64; 6],
    pub representation: Representation,
    pub history: TrainingHistory,
}

fn moments(rows: &[[f64; 6]]) -> ([f64; 6], [f64; 6]) {
    let n = rows.len().max(1) as f64;
    let mean: [f64; 6] = std::array::from_fn(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n);
    let std: [f64; 6] = std::array::from_fn(|j| {
        let v = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
        if v > 0.0 {
            v.sqrt()
        } else {
            1.0
        }
    });
    (mean, std)
}

fn standardize(rows: &[[f64; 6]], idx: &[usize], mean: &[f64; 6], std: &[f64; 6]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), 6, |r, c| (rows[idx[r]][c] - mean[c]) / std[c])
}

/// Full-batch gradient descent on standardized inputs and outputs. A seeded
/// shuffle holds out 20% for validation; the parameters with the lowest
/// validation loss are returned.
pub fn train_mlp(data: &Dataset, settings: MlpSettings) -> Result<MlpCalibrator, CalibError> {
    if !(settings.learning_rate > 0.0) || !settings.learning_rate.is_finite() {
        return Err(CalibError::InvalidParameter(format!(
            "learning rate must be positive, got {}",
            settings.learning_rate
        )));
    }
    if data.len() < 2 {
        return Err(CalibError::InsufficientData { needed: 2, got: data.len() });
    }
    let representation = check_representation(data)?;
    let inputs: Vec<[f64; 6]> = data.frames().map(|f| f.values).collect();
    let targets: Vec<[f64; 6]> = data.samples().iter().map(|s| s.wrench.to_array()).collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut stream(settings.seed, Stream::Shuffle));
    let n_val = (data.len() / 5).max(1);
    let (val_idx, train_idx) = order.split_at(n_val);

    let train_in: Vec<[f64; 6]> = train_idx.iter().map(|&i| inputs[i]).collect();
    let train_out: Vec<[f64; 6]> = train_idx.iter().map(|&i| targets[i]).collect();
    let (input_mean, input_std) = moments(&train_in);
    let (output_mean, output_std) = moments(&train_out);

    let xt = standardize(&inputs, train_idx, &input_mean, &input_std);
    let yt = standardize(&targets, train_idx, &output_mean, &output_std);
    let xv = standardize(&inputs, val_idx, &input_mean, &input_std);
    let yv = standardize(&targets, val_idx, &output_mean, &output_std);

    let mut net = Network::init(HIDDEN_UNITS, &mut stream(settings.seed, Stream::MlpInit));
    let mut best = net.clone();
    let mut history = TrainingHistory::default();
    let mut best_val = net.loss(&xv, &yv);
    history.validation_loss.push(best_val);
    for epoch in 1..=settings.epochs {
        let (loss, grad) = net.loss_and_gradient(&xt, &yt);
        if !loss.is_finite() {
            return Err(CalibError::Diverged { epoch });
        }
        history.train_loss.push(loss);
        net.step(&grad, settings.learning_rate);
        if !net.is_finite() {
            return Err(CalibError::Diverged { epoch });
        }
        let val = net.loss(&xv, &yv);
        if !val.is_finite() {
            return Err(CalibError::Diverged { epoch });
        }
        history.validation_loss.push(val);
        if val < best_val {
            best_val = val;
            best = net.clone();
            history.best_epoch = epoch;
        }
    }
    Ok(MlpCalibrator { network: best, input_mean, input_std, output_mean, output_std, representation, history })
}

impl MlpCalibrator {
    pub fn validation_loss(&self) -> f64 {
        self.history.validation_loss[self.history.best_epoch]
    }
}

impl Calibrator for MlpCalibrator {
    fn input_representation(&self) -> Representation {
        self.representation
    }

    fn estimate(&self, values: &[f64; 6]) -> Wrench {
        let x = DMatrix::from_fn(1, 6, |_, c| (values[c] - self.input_mean[c]) / self.input_std[c]);
        let y = self.network.forward(&x);
        Wrench::from_array(std::array::from_fn(|c| y[(0, c)] * self.output_std[c] + self.output_mean[c]))
    }
}
