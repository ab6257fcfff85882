//! Reference policy/value network.
//!
//! Input is the 23x11x11 observation. The trunk is three 3x3 convolutions
//! with 32 filters, zero padding 1 and ReLU. The policy head is a 1x1
//! convolution to 2 planes, a flatten and an affine map to 6 logits followed
//! by softmax. The value head is a 1x1 convolution to 1 plane, a flatten, an
//! affine map to 64 units with ReLU and an affine map to one unit with tanh.
//!
//! Tensors follow the PyTorch conventions: convolution weights are
//! `[out, in, kh, kw]`, linear weights are `[out, in]`, and flattening a
//! `[c, h, w]` map uses index `c * 121 + h * 11 + w`.

mod io;
mod loss;
mod net;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{ObservationPlanes, BOARD_SIZE, NUM_ACTIONS, NUM_PLANES};

pub use io::{read_weights, write_weights, MAGIC, VERSION};
pub use loss::{loss, loss_and_grad, DEFAULT_ALPHA, P_CLAMP};
pub use net::Network;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a weight file (bad magic)")]
    BadMagic,
    #[error("unsupported weight file version {0}")]
    Version(u32),
    #[error("expected {expected} tensors, found {found}")]
    TensorCount { expected: usize, found: usize },
    #[error("tensor {index}: expected {expected_name} {expected:?}, found {found_name} {found:?}")]
    Shape {
        index: usize,
        expected_name: String,
        expected: Vec<usize>,
        found_name: String,
        found: Vec<usize>,
    },
    #[error("tensor {name}: {len} values for shape {shape:?}")]
    DataLength { name: String, shape: Vec<usize>, len: usize },
    #[error("tensor {0} holds a non-finite value")]
    NonFinite(String),
    #[error("tensor name is not valid UTF-8")]
    BadName,
    #[error("observation has {0} values")]
    InputLength(usize),
    #[error("empty batch")]
    EmptyBatch,
}

/// Layer sizes of the network. Only the reference configuration is used by
/// the suite; the struct exists so that the sizes live in one place.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetConfig {
    pub input_planes: usize,
    pub board: usize,
    pub trunk_layers: usize,
    pub filters: usize,
    pub policy_planes: usize,
    pub value_hidden: usize,
    pub actions: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            input_planes: NUM_PLANES,
            board: BOARD_SIZE,
            trunk_layers: 3,
            filters: 32,
            policy_planes: 2,
            value_hidden: 64,
            actions: NUM_ACTIONS,
        }
    }
}

impl NetConfig {
    pub fn cells(&self) -> usize {
        self.board * self.board
    }

    /// Names and shapes of every tensor in file order.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut cin = self.input_planes;
        for l in 0..self.trunk_layers {
            out.push((format!("trunk.{l}.weight"), vec![self.filters, cin, 3, 3]));
            out.push((format!("trunk.{l}.bias"), vec![self.filters]));
            cin = self.filters;
        }
        let f = self.filters;
        let cells = self.cells();
        out.push(("policy.conv.weight".into(), vec![self.policy_planes, f, 1, 1]));
        out.push(("policy.conv.bias".into(), vec![self.policy_planes]));
        out.push(("policy.fc.weight".into(), vec![self.actions, self.policy_planes * cells]));
        out.push(("policy.fc.bias".into(), vec![self.actions]));
        out.push(("value.conv.weight".into(), vec![1, f, 1, 1]));
        out.push(("value.conv.bias".into(), vec![1]));
        out.push(("value.fc1.weight".into(), vec![self.value_hidden, cells]));
        out.push(("value.fc1.bias".into(), vec![self.value_hidden]));
        out.push(("value.fc2.weight".into(), vec![1, self.value_hidden]));
        out.push(("value.fc2.bias".into(), vec![1]));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            data: vec![0.0; n],
        }
    }
}

/// Network parameters in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights {
    pub tensors: Vec<Tensor>,
}

impl ModelWeights {
    pub fn zeros() -> Self {
        let tensors = NetConfig::default()
            .tensor_specs()
            .into_iter()
            .map(|(name, shape)| Tensor::zeros(name, shape))
            .collect();
        Self { tensors }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases
    /// alike, where fan-in is the input size of the layer.
    pub fn init_random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Self::zeros();
        let mut fan_in = 1;
        for t in &mut w.tensors {
            if t.shape.len() > 1 {
                fan_in = t.shape[1..].iter().product::<usize>();
            }
            let bound = 1.0 / (fan_in as f32).sqrt();
            for x in &mut t.data {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        w
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    /// Checks names, shapes, lengths and finiteness against the reference
    /// configuration.
    pub fn validate(&self) -> Result<(), ModelError> {
        let specs = NetConfig::default().tensor_specs();
        if specs.len() != self.tensors.len() {
            return Err(ModelError::TensorCount {
                expected: specs.len(),
                found: self.tensors.len(),
            });
        }
        for (index, ((name, shape), t)) in specs.into_iter().zip(&self.tensors).enumerate() {
            if name != t.name || shape != t.shape {
                return Err(ModelError::Shape {
                    index,
                    expected_name: name,
                    expected: shape,
                    found_name: t.name.clone(),
                    found: t.shape.clone(),
                });
            }
            if t.data.len() != shape.iter().product::<usize>() {
                return Err(ModelError::DataLength {
                    name: t.name.clone(),
                    shape,
                    len: t.data.len(),
                });
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite(t.name.clone()));
            }
        }
        Ok(())
    }
}

pub fn init_random(seed: u64) -> ModelWeights {
    ModelWeights::init_random(seed)
}

/// Policy on the simplex and value in [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelOutput {
    pub p: [f32; NUM_ACTIONS],
    pub v: f32,
}

impl ModelOutput {
    pub fn uniform() -> Self {
        Self {
            p: [1.0 / NUM_ACTIONS as f32; NUM_ACTIONS],
            v: 0.0,
        }
    }
}

/// Anything that maps a model input to a policy and a value.
pub trait Evaluator<I: ?Sized> {
    fn evaluate(&self, input: &I) -> ModelOutput;
}

impl Evaluator<ObservationPlanes> for Network {
    fn evaluate(&self, input: &ObservationPlanes) -> ModelOutput {
        self.forward(input)
    }
}

impl<I: ?Sized, F: Fn(&I) -> ModelOutput> Evaluator<I> for F {
    fn evaluate(&self, input: &I) -> ModelOutput {
        self(input)
    }
}

/// Uniform policy and zero value for every input.
#[derive(Clone, Copy, Debug, Default)]
pub struct Uniform;

impl<I: ?Sized> Evaluator<I> for Uniform {
    fn evaluate(&self, _: &I) -> ModelOutput {
        ModelOutput::uniform()
    }
}

/// One-off forward pass. Repacks the weights on every call; hold a
/// [`Network`] for repeated use.
pub fn forward(weights: &ModelWeights, obs: &ObservationPlanes) -> Result<ModelOutput, ModelError> {
    Ok(Network::new(weights)?.forward(obs))
}

pub fn forward_batch(
    weights: &ModelWeights,
    batch: &[ObservationPlanes],
) -> Result<Vec<ModelOutput>, ModelError> {
    Network::new(weights)?.forward_batch(batch)
}

pub(crate) fn softmax(logits: &[f32; NUM_ACTIONS]) -> [f32; NUM_ACTIONS] {
    let m = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut p = logits.map(|l| (l - m).exp());
    let s: f32 = p.iter().sum();
    for x in &mut p {
        *x /= s;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_tensors() {
        let specs = NetConfig::default().tensor_specs();
        assert_eq!(specs.len(), 16);
        assert_eq!(specs[0].1, vec![32, 23, 3, 3]);
        assert_eq!(specs[8].1, vec![6, 242]);
        ModelWeights::zeros().validate().unwrap();
    }

    #[test]
    fn init_is_seeded() {
        let a = init_random(3);
        assert_eq!(a, init_random(3));
        assert_ne!(a, init_random(4));
        a.validate().unwrap();
        let w = &a.get("trunk.0.weight").unwrap().data;
        let bound = 1.0 / ((23 * 9) as f32).sqrt();
        assert!(w.iter().all(|x| x.abs() <= bound));
        let b = &a.get("value.fc2.bias").unwrap().data;
        assert!(b[0].abs() <= 1.0 / 8.0);
    }

    #[test]
    fn validate_catches_problems() {
        let mut w = ModelWeights::zeros();
        w.tensors[3].data[0] = f32::NAN;
        assert!(matches!(w.validate(), Err(ModelError::NonFinite(_))));
        let mut w = ModelWeights::zeros();
        w.tensors.pop();
        assert!(matches!(w.validate(), Err(ModelError::TensorCount { expected: 16, found: 15 })));
        let mut w = ModelWeights::zeros();
        w.tensors[2].shape = vec![32, 32, 1, 9];
        assert!(matches!(w.validate(), Err(ModelError::Shape { index: 2, .. })));
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|x| x.is_finite()));
    }
}
