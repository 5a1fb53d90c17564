//! Fully connected layers and small MLPs.

use rand_chacha::rand_core::RngCore;

use crate::autodiff::{Tape, Tensor, Var};
use crate::rng;
use crate::{real, Real};

/// Dense layer `y = x W + b` with `W: [input, output]`, `b: [output]`.
#[derive(Clone, Debug)]
pub struct Linear<T: Real> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> Linear<T> {
    /// Kaiming-style fan-in init: weights uniform in `±√(6/input)`, biases
    /// uniform in `±1/√input`.
    pub fn init(input: usize, output: usize, rng: &mut impl RngCore) -> Self {
        let w_bound = (6.0 / input as f64).sqrt();
        let b_bound = (input as f64).sqrt().recip();
        Self {
            weight: Tensor::from_vec(
                vec![input, output],
                (0..input * output).map(|_| rng::uniform(rng, -w_bound, w_bound)).collect(),
            ),
            bias: Tensor::from_vec(
                vec![output],
                (0..output).map(|_| rng::uniform(rng, -b_bound, b_bound)).collect(),
            ),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }

    /// Scale both weight and bias in place (used to start layers near zero).
    pub fn scale(&mut self, factor: f64) {
        let f = real::<T>(factor);
        for w in self.weight.data_mut() {
            *w *= f;
        }
        for b in self.bias.data_mut() {
            *b *= f;
        }
    }
}

/// Multilayer perceptron with ReLU on hidden layers and a linear output.
#[derive(Clone, Debug)]
pub struct Mlp<T: Real> {
    layers: Vec<Linear<T>>,
}

impl<T: Real> Mlp<T> {
    /// `hidden_layers` hidden layers of width `hidden` between `input` and
    /// `output`.
    pub fn new(
        input: usize,
        hidden: usize,
        hidden_layers: usize,
        output: usize,
        rng: &mut impl RngCore,
    ) -> Self {
        assert!(hidden_layers > 0, "at least one hidden layer");
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        layers.push(Linear::init(input, hidden, rng));
        for _ in 1..hidden_layers {
            layers.push(Linear::init(hidden, hidden, rng));
        }
        layers.push(Linear::init(hidden, output, rng));
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Linear<T>>) -> Self {
        assert!(!layers.is_empty());
        for pair in layers.windows(2) {
            assert_eq!(pair[0].output_dim(), pair[1].input_dim(), "layer shapes must compose");
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    pub fn layers(&self) -> &[Linear<T>] {
        &self.layers
    }

    pub fn last_layer_mut(&mut self) -> &mut Linear<T> {
        self.layers.last_mut().unwrap()
    }

    /// Parameters in checkpoint order: weight then bias, layer by layer.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }

    /// Register all parameters on the tape for one optimization step.
    pub fn bind(&self, tape: &mut Tape<T>) -> BoundMlp {
        BoundMlp {
            vars: self
                .layers
                .iter()
                .map(|l| (tape.param(l.weight.clone()), tape.param(l.bias.clone())))
                .collect(),
        }
    }
}

/// Tape-registered view of an [`Mlp`] for a single step.
pub struct BoundMlp {
    vars: Vec<(Var, Var)>,
}

impl BoundMlp {
    pub fn forward<T: Real>(&self, tape: &mut Tape<T>, input: Var) -> Var {
        let mut x = input;
        let last = self.vars.len() - 1;
        for (i, &(w, b)) in self.vars.iter().enumerate() {
            let lin = tape.matmul(x, w);
            x = tape.add_row(lin, b);
            if i != last {
                x = tape.relu(x);
            }
        }
        x
    }

    /// Parameter vars in the same order as [`Mlp::params`].
    pub fn param_vars(&self) -> Vec<Var> {
        self.vars.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shapes_compose() {
        let mlp = Mlp::<f64>::new(52, 64, 5, 2, &mut rng::seeded(0));
        assert_eq!(mlp.layers().len(), 6);
        assert_eq!(mlp.input_dim(), 52);
        assert_eq!(mlp.output_dim(), 2);
        assert_eq!(mlp.params().len(), 12);
    }

    #[test]
    fn untrained_forward_is_finite_and_deterministic() {
        let mlp = Mlp::<f64>::new(4, 8, 2, 3, &mut rng::seeded(7));
        let run = || {
            let mut tape = Tape::new();
            let bound = mlp.bind(&mut tape);
            let x = tape.constant(Tensor::from_vec(vec![2, 4], vec![0.3; 8]));
            let y = bound.forward(&mut tape, x);
            tape.value(y).data().to_vec()
        };
        let a = run();
        assert!(a.iter().all(|v| v.is_finite()));
        assert_eq!(a, run());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mlp = Mlp::<f64>::new(3, 5, 2, 2, &mut rng::seeded(13));
        let input = Tensor::from_vec(vec![4, 3], (0..12).map(|k| 0.1 * k as f64 - 0.5).collect::<Vec<_>>());

        let loss_of = |m: &Mlp<f64>| -> f64 {
            let mut tape = Tape::new();
            let bound = m.bind(&mut tape);
            let x = tape.constant(input.clone());
            let y = bound.forward(&mut tape, x);
            let sq = tape.mul(y, y);
            let loss = tape.sum(sq);
            tape.value(loss).item()
        };

        let mut tape = Tape::new();
        let bound = mlp.bind(&mut tape);
        let x = tape.constant(input.clone());
        let y = bound.forward(&mut tape, x);
        let sq = tape.mul(y, y);
        let loss = tape.sum(sq);
        let grads = tape.backward(loss).unwrap();

        let h = 1e-6;
        let vars = bound.param_vars();
        for (pi, p) in mlp.params().iter().enumerate() {
            let analytic = grads.of(vars[pi], p);
            for k in 0..p.len() {
                let perturb = |delta: f64| {
                    let mut m = mlp.clone();
                    m.params_mut()[pi].data_mut()[k] += delta;
                    loss_of(&m)
                };
                let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                assert_relative_eq!(analytic.data()[k], fd, epsilon = 1e-7, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn scaling_the_last_layer_shrinks_outputs() {
        let mut mlp = Mlp::<f64>::new(4, 8, 2, 2, &mut rng::seeded(3));
        mlp.last_layer_mut().scale(1e-4);
        let mut tape = Tape::new();
        let bound = mlp.bind(&mut tape);
        let x = tape.constant(Tensor::from_vec(vec![1, 4], vec![0.5; 4]));
        let y = bound.forward(&mut tape, x);
        for v in tape.value(y).data() {
            assert!(v.abs() < 1e-2, "output {v} not near zero");
        }
    }

    #[test]
    #[should_panic(expected = "compose")]
    fn mismatched_layers_rejected() {
        let mut r = rng::seeded(0);
        let _ = Mlp::from_layers(vec![Linear::<f64>::init(3, 4, &mut r), Linear::init(5, 2, &mut r)]);
    }
}
