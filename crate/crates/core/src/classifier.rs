//! Sigmoid multilayer perceptron trained online by backpropagation with
//! heavy-ball momentum on the squared-error loss `0.5 * |a - t|^2`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_out x fan_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub weight_velocity: Vec<f64>,
    pub bias_velocity: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            biases: vec![0.0; fan_out],
            weight_velocity: vec![0.0; fan_in * fan_out],
            bias_velocity: vec![0.0; fan_out],
        }
    }

    #[inline]
    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.fan_in + inp]
    }

    fn activate(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.fan_in)
            .zip(&self.biases)
            .map(|(row, b)| sigmoid(row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Gradients with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradient {
    /// All entries flattened layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub seed: u64,
    /// Reshuffle sample order every epoch with a generator seeded from `seed`.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            max_epochs: 2000,
            target_mse: 1e-3,
            seed: 0,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.target_mse >= 0.0) {
            return Err(Error::InvalidArgument("target_mse must be non-negative".into()));
        }
        Ok(())
    }
}

/// One labelled training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Sample {
    pub fn one_hot(input: Vec<f64>, class: usize, classes: usize) -> Self {
        let mut target = vec![0.0; classes];
        target[class] = 1.0;
        Sample { input, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_mse: f64,
    pub mse_history: Vec<f64>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Random initialization: weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`,
/// biases and velocities zero.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    let mut model = MlpModel::zeros(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut model.layers {
        let bound = 1.0 / (layer.fan_in as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.gen_range(-bound..=bound);
        }
    }
    Ok(model)
}

impl MlpModel {
    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "an MLP needs at least 2 layer sizes, got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "layer sizes must be positive: {layer_sizes:?}"
            )));
        }
        Ok(MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            layers: layer_sizes
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        })
    }

    /// Builds a model from `(weights, biases)` per layer with zero velocity.
    pub fn from_parameters(layer_sizes: &[usize], params: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let mut model = MlpModel::zeros(layer_sizes)?;
        if params.len() != model.layers.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} layers of parameters, got {}",
                model.layers.len(),
                params.len()
            )));
        }
        for (layer, (w, b)) in model.layers.iter_mut().zip(params) {
            if w.len() != layer.weights.len() || b.len() != layer.biases.len() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {}x{} got {} weights and {} biases",
                    layer.fan_out,
                    layer.fan_in,
                    w.len(),
                    b.len()
                )));
            }
            if w.iter().chain(&b).any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("non-finite MLP parameter".into()));
            }
            layer.weights = w;
            layer.biases = b;
        }
        Ok(model)
    }

    /// Zeroes the momentum state, leaving weights and biases untouched.
    pub fn reset_velocity(&mut self) {
        for layer in &mut self.layers {
            layer.weight_velocity.iter_mut().for_each(|v| *v = 0.0);
            layer.bias_velocity.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::DimensionMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_size(),
                x.len()
            )));
        }
        Ok(())
    }

    fn check_sample(&self, s: &Sample) -> Result<()> {
        self.check_input(&s.input)?;
        if s.target.len() != self.output_size() {
            return Err(Error::DimensionMismatch(format!(
                "network has {} outputs, target has {}",
                self.output_size(),
                s.target.len()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.activate(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().expect("non-empty"))
    }

    /// Index of the largest output, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Squared-error loss `0.5 * |a - t|^2` for one sample.
    pub fn loss(&self, sample: &Sample) -> Result<f64> {
        self.check_sample(sample)?;
        let out = self.forward(&sample.input)?;
        Ok(0.5 * out.iter().zip(&sample.target).map(|(a, t)| (a - t).powi(2)).sum::<f64>())
    }

    /// Backpropagated gradient of the per-sample loss.
    pub fn gradient(&self, sample: &Sample) -> Result<Gradient> {
        self.check_sample(sample)?;
        Ok(self.backprop(sample).0)
    }

    /// Returns the gradient and the sample's mean squared output error.
    fn backprop(&self, sample: &Sample) -> (Gradient, f64) {
        let acts = self.activations(&sample.input);
        let out = acts.last().expect("non-empty");
        let mse = out
            .iter()
            .zip(&sample.target)
            .map(|(a, t)| (a - t).powi(2))
            .sum::<f64>()
            / out.len() as f64;

        let mut delta: Vec<f64> = out
            .iter()
            .zip(&sample.target)
            .map(|(a, t)| (a - t) * a * (1.0 - a))
            .collect();
        let mut gw = vec![Vec::new(); self.layers.len()];
        let mut gb = vec![Vec::new(); self.layers.len()];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[l];
            let mut w = Vec::with_capacity(layer.weights.len());
            for d in &delta {
                w.extend(input.iter().map(|x| d * x));
            }
            gw[l] = w;
            gb[l] = delta.clone();
            if l > 0 {
                delta = (0..layer.fan_in)
                    .map(|i| {
                        let back: f64 = delta.iter().enumerate().map(|(o, d)| layer.weight(o, i) * d).sum();
                        back * input[i] * (1.0 - input[i])
                    })
                    .collect();
            }
        }
        (Gradient { weights: gw, biases: gb }, mse)
    }

    /// `v <- momentum * v - lr * g; theta <- theta + v`.
    fn apply(&mut self, grad: &Gradient, cfg: &TrainConfig) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let update = |theta: &mut [f64], vel: &mut [f64], g: &[f64]| {
                for ((p, v), g) in theta.iter_mut().zip(vel.iter_mut()).zip(g) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *p += *v;
                }
            };
            update(&mut layer.weights, &mut layer.weight_velocity, &grad.weights[l]);
            update(&mut layer.biases, &mut layer.bias_velocity, &grad.biases[l]);
        }
    }

    /// One online pass over `samples` in the given order. Returns the mean of
    /// the per-sample MSEs, each measured before that sample's update.
    pub fn train_epoch(&mut self, samples: &[Sample], cfg: &TrainConfig) -> Result<f64> {
        let order: Vec<usize> = (0..samples.len()).collect();
        self.train_epoch_ordered(samples, &order, cfg)
    }

    fn train_epoch_ordered(&mut self, samples: &[Sample], order: &[usize], cfg: &TrainConfig) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no training samples".into()));
        }
        cfg.validate()?;
        for s in samples {
            self.check_sample(s)?;
        }
        let mut total = 0.0;
        for &i in order {
            let (grad, mse) = self.backprop(&samples[i]);
            total += mse;
            self.apply(&grad, cfg);
        }
        let non_finite = self
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .any(|p| !p.is_finite());
        if non_finite {
            return Err(Error::InvalidArgument(
                "training diverged to non-finite parameters".into(),
            ));
        }
        Ok(total / order.len() as f64)
    }

    /// Trains until the epoch MSE reaches `target_mse` or `max_epochs` run out.
    pub fn train(&mut self, samples: &[Sample], cfg: &TrainConfig) -> Result<TrainSummary> {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
        let mut history = Vec::new();
        for _ in 0..cfg.max_epochs {
            if cfg.shuffle {
                order.shuffle(&mut rng);
            }
            let mse = self.train_epoch_ordered(samples, &order, cfg)?;
            history.push(mse);
            if mse <= cfg.target_mse {
                break;
            }
        }
        Ok(TrainSummary {
            epochs: history.len(),
            final_mse: history.last().copied().unwrap_or(f64::NAN),
            mse_history: history,
        })
    }
}

pub fn forward(model: &MlpModel, x: &[f64]) -> Result<Vec<f64>> {
    model.forward(x)
}

pub fn predict(model: &MlpModel, x: &[f64]) -> Result<usize> {
    model.predict(x)
}

pub fn gradient(model: &MlpModel, sample: &Sample) -> Result<Gradient> {
    model.gradient(sample)
}

pub fn train_epoch(model: &mut MlpModel, samples: &[Sample], cfg: &TrainConfig) -> Result<f64> {
    model.train_epoch(samples, cfg)
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_net(w: f64, b: f64) -> MlpModel {
        MlpModel::from_parameters(&[1, 1], vec![(vec![w], vec![b])]).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = init_mlp(&[40, 100, 10], 7).unwrap();
        let b = init_mlp(&[40, 100, 10], 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_mlp(&[40, 100, 10], 8).unwrap());
        assert_eq!(a.layers()[0].weights.len(), 100 * 40);
        assert_eq!(a.layers()[1].weights.len(), 10 * 100);
        let bound = 1.0 / 40f64.sqrt();
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= bound));
        assert!(a.layers().iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        assert!(init_mlp(&[3], 0).is_err());
        assert!(init_mlp(&[3, 0, 2], 0).is_err());
    }

    #[test]
    fn forward_examples() {
        let z = MlpModel::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(z.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(scalar_net(1.0, 0.0).forward(&[0.0]).unwrap(), vec![0.5]);
        let y = scalar_net(2.0, -1.0).forward(&[1.0]).unwrap()[0];
        assert!((y - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!(z.forward(&[1.0]).is_err());
    }

    #[test]
    fn predict_ties_and_argmax() {
        let z = MlpModel::zeros(&[2, 3]).unwrap();
        assert_eq!(z.predict(&[0.3, 0.1]).unwrap(), 0);
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[0.2, 0.7, 0.7]), 1);
    }

    #[test]
    fn hand_computed_single_step() {
        // [1,1] net, w=0.5, b=0.1, x=2, t=1, lr=0.5, no momentum
        let (w, b, x, t, lr) = (0.5, 0.1, 2.0, 1.0, 0.5);
        let mut net = scalar_net(w, b);
        let a = sigmoid(w * x + b);
        let delta = (a - t) * a * (1.0 - a);
        let cfg = TrainConfig {
            learning_rate: lr,
            momentum: 0.0,
            ..TrainConfig::default()
        };
        let mse = net
            .train_epoch(&[Sample { input: vec![x], target: vec![t] }], &cfg)
            .unwrap();
        assert!((mse - (a - t).powi(2)).abs() < 1e-15);
        let layer = &net.layers()[0];
        assert!((layer.weights[0] - (w - lr * delta * x)).abs() < 1e-15);
        assert!((layer.biases[0] - (b - lr * delta)).abs() < 1e-15);
    }

    #[test]
    fn momentum_accumulates_velocity() {
        let mut net = scalar_net(0.5, 0.1);
        let s = [Sample { input: vec![2.0], target: vec![1.0] }];
        let cfg = TrainConfig {
            learning_rate: 0.5,
            momentum: 0.9,
            ..TrainConfig::default()
        };
        let g1 = net.gradient(&s[0]).unwrap();
        net.train_epoch(&s, &cfg).unwrap();
        let v1 = net.layers()[0].weight_velocity[0];
        assert!((v1 + 0.5 * g1.weights[0][0]).abs() < 1e-15);
        let g2 = net.gradient(&s[0]).unwrap();
        let w_before = net.layers()[0].weights[0];
        net.train_epoch(&s, &cfg).unwrap();
        let v2 = 0.9 * v1 - 0.5 * g2.weights[0][0];
        assert!((net.layers()[0].weights[0] - (w_before + v2)).abs() < 1e-15);
    }

    #[test]
    fn zero_momentum_is_plain_gradient_descent() {
        let mut net = init_mlp(&[3, 4, 2], 3).unwrap();
        let sample = Sample::one_hot(vec![0.2, -0.4, 0.9], 1, 2);
        let g = net.gradient(&sample).unwrap();
        let before = net.clone();
        let cfg = TrainConfig {
            learning_rate: 0.3,
            momentum: 0.0,
            ..TrainConfig::default()
        };
        net.train_epoch(std::slice::from_ref(&sample), &cfg).unwrap();
        for (l, (a, b)) in net.layers().iter().zip(before.layers()).enumerate() {
            for (i, (wa, wb)) in a.weights.iter().zip(&b.weights).enumerate() {
                assert!((wa - (wb - 0.3 * g.weights[l][i])).abs() < 1e-15);
            }
            for (i, (ba, bb)) in a.biases.iter().zip(&b.biases).enumerate() {
                assert!((ba - (bb - 0.3 * g.biases[l][i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let mut net = init_mlp(&[2, 3, 2], 1).unwrap();
        let before = net.clone();
        let samples = vec![Sample::one_hot(vec![0.1, 0.2], 0, 2), Sample::one_hot(vec![0.9, 0.4], 1, 2)];
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let m1 = net.train_epoch(&samples, &cfg).unwrap();
        let m2 = net.train_epoch(&samples, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(net.layers()[0].weights, before.layers()[0].weights);
        assert_eq!(net.layers()[1].biases, before.layers()[1].biases);
    }

    #[test]
    fn bias_free_zero_input_gives_zero_first_layer_gradient() {
        let net = init_mlp(&[3, 4, 2], 9).unwrap();
        let s = Sample { input: vec![0.0; 3], target: vec![0.0; 2] };
        let g = net.gradient(&s).unwrap();
        assert!(g.weights[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn shape_errors() {
        let mut net = init_mlp(&[2, 2], 0).unwrap();
        let bad = Sample { input: vec![0.0; 3], target: vec![1.0, 0.0] };
        assert!(net.gradient(&bad).is_err());
        let bad = Sample { input: vec![0.0; 2], target: vec![1.0] };
        assert!(net.train_epoch(&[bad], &TrainConfig::default()).is_err());
        assert!(net.train_epoch(&[], &TrainConfig::default()).is_err());
        let cfg = TrainConfig { momentum: 1.0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn xor_two_class() {
        let data = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];
        let samples: Vec<Sample> = data
            .iter()
            .map(|(x, c)| Sample::one_hot(x.to_vec(), *c, 2))
            .collect();
        let mut net = init_mlp(&[2, 6, 2], 4).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.5,
            momentum: 0.9,
            max_epochs: 20_000,
            target_mse: 1e-3,
            ..TrainConfig::default()
        };
        let summary = net.train(&samples, &cfg).unwrap();
        assert!(summary.final_mse < 1e-3, "mse {}", summary.final_mse);
        for (x, c) in data {
            assert_eq!(net.predict(&x).unwrap(), c);
        }
    }

    #[test]
    fn training_is_deterministic_with_shuffle() {
        let samples: Vec<Sample> = (0..10)
            .map(|i| Sample::one_hot(vec![i as f64 / 10.0, (i % 3) as f64], i % 2, 2))
            .collect();
        let cfg = TrainConfig {
            max_epochs: 50,
            shuffle: true,
            seed: 3,
            ..TrainConfig::default()
        };
        let mut a = init_mlp(&[2, 5, 2], 3).unwrap();
        let mut b = a.clone();
        let sa = a.train(&samples, &cfg).unwrap();
        let sb = b.train(&samples, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }
}
