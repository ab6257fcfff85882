use std::cell::RefCell;

use crate::engine::{ObservationPlanes, NUM_ACTIONS, OBS_LEN};

use super::{softmax, ModelError, ModelOutput, ModelWeights, NetConfig};

struct Conv3 {
    /// `[kh, kw, cin] x cout`, row-major.
    w: Vec<f32>,
    b: Vec<f32>,
    cin: usize,
    cout: usize,
}

/// Weights repacked for inference. Activations are kept cell-major
/// (`[cell][channel]`) so that every layer is one matrix product.
pub struct Network {
    cfg: NetConfig,
    trunk: Vec<Conv3>,
    /// `filters x policy_planes`
    policy_conv_w: Vec<f32>,
    policy_conv_b: Vec<f32>,
    /// `actions x (cells * policy_planes)`, input index `cell * planes + c`.
    policy_fc_w: Vec<f32>,
    policy_fc_b: Vec<f32>,
    value_conv_w: Vec<f32>,
    value_conv_b: f32,
    value_fc1_w: Vec<f32>,
    value_fc1_b: Vec<f32>,
    value_fc2_w: Vec<f32>,
    value_fc2_b: f32,
}

#[derive(Default)]
struct Scratch {
    act: Vec<f32>,
    next: Vec<f32>,
    cols: Vec<f32>,
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl Network {
    pub fn new(weights: &ModelWeights) -> Result<Self, ModelError> {
        weights.validate()?;
        let cfg = NetConfig::default();
        let t = |name: &str| &weights.get(name).expect("validated").data;

        let mut trunk = Vec::new();
        let mut cin = cfg.input_planes;
        for l in 0..cfg.trunk_layers {
            let src = t(&format!("trunk.{l}.weight"));
            let cout = cfg.filters;
            let mut w = vec![0.0; 9 * cin * cout];
            for o in 0..cout {
                for i in 0..cin {
                    for k in 0..9 {
                        w[(k * cin + i) * cout + o] = src[(o * cin + i) * 9 + k];
                    }
                }
            }
            trunk.push(Conv3 {
                w,
                b: t(&format!("trunk.{l}.bias")).clone(),
                cin,
                cout,
            });
            cin = cout;
        }

        let f = cfg.filters;
        let pp = cfg.policy_planes;
        let cells = cfg.cells();
        let src = t("policy.conv.weight");
        let mut policy_conv_w = vec![0.0; f * pp];
        for o in 0..pp {
            for i in 0..f {
                policy_conv_w[i * pp + o] = src[o * f + i];
            }
        }
        let src = t("policy.fc.weight");
        let mut policy_fc_w = vec![0.0; cfg.actions * cells * pp];
        for a in 0..cfg.actions {
            for c in 0..pp {
                for cell in 0..cells {
                    policy_fc_w[a * cells * pp + cell * pp + c] = src[a * cells * pp + c * cells + cell];
                }
            }
        }

        Ok(Self {
            cfg,
            trunk,
            policy_conv_w,
            policy_conv_b: t("policy.conv.bias").clone(),
            policy_fc_w,
            policy_fc_b: t("policy.fc.bias").clone(),
            value_conv_w: t("value.conv.weight").clone(),
            value_conv_b: t("value.conv.bias")[0],
            value_fc1_w: t("value.fc1.weight").clone(),
            value_fc1_b: t("value.fc1.bias").clone(),
            value_fc2_w: t("value.fc2.weight").clone(),
            value_fc2_b: t("value.fc2.bias")[0],
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn forward(&self, obs: &ObservationPlanes) -> ModelOutput {
        self.run(&[obs.as_slice()])[0]
    }

    /// Raw observation slice of length 23 * 11 * 11.
    pub fn forward_slice(&self, obs: &[f32]) -> Result<ModelOutput, ModelError> {
        if obs.len() != OBS_LEN {
            return Err(ModelError::InputLength(obs.len()));
        }
        Ok(self.run(&[obs])[0])
    }

    pub fn forward_batch(&self, batch: &[ObservationPlanes]) -> Result<Vec<ModelOutput>, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let rows: Vec<&[f32]> = batch.iter().map(ObservationPlanes::as_slice).collect();
        Ok(self.run(&rows))
    }

    /// Policy logits and value pre-activation, before softmax and tanh.
    pub fn forward_raw(&self, obs: &ObservationPlanes) -> ([f32; NUM_ACTIONS], f32) {
        let mut out = ([0.0; NUM_ACTIONS], 0.0);
        self.run_raw(&[obs.as_slice()], |_, logits, v| out = (*logits, v));
        out
    }

    fn run(&self, inputs: &[&[f32]]) -> Vec<ModelOutput> {
        let mut out = Vec::with_capacity(inputs.len());
        self.run_raw(inputs, |_, logits, v| {
            out.push(ModelOutput {
                p: softmax(logits),
                v: v.tanh(),
            })
        });
        out
    }

    fn run_raw(&self, inputs: &[&[f32]], mut emit: impl FnMut(usize, &[f32; NUM_ACTIONS], f32)) {
        let cfg = &self.cfg;
        let cells = cfg.cells();
        let n = inputs.len();
        let rows = n * cells;
        let planes = cfg.input_planes;

        SCRATCH.with(|s| {
            let s = &mut *s.borrow_mut();
            s.act.clear();
            s.act.resize(rows * planes, 0.0);
            for (b, obs) in inputs.iter().enumerate() {
                let base = b * cells * planes;
                for c in 0..planes {
                    let plane = &obs[c * cells..(c + 1) * cells];
                    for (cell, &x) in plane.iter().enumerate() {
                        s.act[base + cell * planes + c] = x;
                    }
                }
            }

            for layer in &self.trunk {
                im2col(&s.act, n, cfg.board, layer.cin, &mut s.cols);
                s.next.clear();
                s.next.resize(rows * layer.cout, 0.0);
                for r in 0..rows {
                    s.next[r * layer.cout..(r + 1) * layer.cout].copy_from_slice(&layer.b);
                }
                gemm(rows, 9 * layer.cin, layer.cout, &s.cols, &layer.w, &mut s.next);
                s.next.iter_mut().for_each(|x| *x = x.max(0.0));
                std::mem::swap(&mut s.act, &mut s.next);
            }

            let f = cfg.filters;
            let pp = cfg.policy_planes;
            s.next.clear();
            s.next.resize(rows * pp, 0.0);
            for r in 0..rows {
                s.next[r * pp..(r + 1) * pp].copy_from_slice(&self.policy_conv_b);
            }
            gemm(rows, f, pp, &s.act, &self.policy_conv_w, &mut s.next);

            let mut vplane = vec![0.0f32; cells];
            let mut hidden = vec![0.0f32; cfg.value_hidden];
            for b in 0..n {
                let feat = &s.next[b * cells * pp..(b + 1) * cells * pp];
                let mut logits = [0.0f32; NUM_ACTIONS];
                for (a, l) in logits.iter_mut().enumerate() {
                    let w = &self.policy_fc_w[a * cells * pp..(a + 1) * cells * pp];
                    *l = self.policy_fc_b[a] + dot(w, feat);
                }

                for (cell, v) in vplane.iter_mut().enumerate() {
                    let x = &s.act[(b * cells + cell) * f..(b * cells + cell + 1) * f];
                    *v = self.value_conv_b + dot(&self.value_conv_w, x);
                }
                for (j, h) in hidden.iter_mut().enumerate() {
                    let w = &self.value_fc1_w[j * cells..(j + 1) * cells];
                    *h = (self.value_fc1_b[j] + dot(w, &vplane)).max(0.0);
                }
                let v = self.value_fc2_b + dot(&self.value_fc2_w, &hidden);
                emit(b, &logits, v);
            }
        });
    }
}

/// Eight independent partial sums so the loop vectorises.
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f32; 8];
    let chunks = n / 8;
    for i in 0..chunks {
        let x = &a[i * 8..i * 8 + 8];
        let y = &b[i * 8..i * 8 + 8];
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    acc.iter().sum::<f32>() + tail
}

/// `c += a * b` with `a: m x k`, `b: k x n`, `c: m x n`, all row-major.
fn gemm(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: bounds checked above; strides describe dense row-major
    // matrices that do not alias.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Patch matrix for a 3x3 convolution with zero padding 1 over `n`
/// cell-major images. Row `(img, cell)` holds `[kh][kw][channel]`.
fn im2col(x: &[f32], n: usize, board: usize, cin: usize, cols: &mut Vec<f32>) {
    let cells = board * board;
    let width = 9 * cin;
    cols.resize(n * cells * width, 0.0);
    for img in 0..n {
        let src = &x[img * cells * cin..(img + 1) * cells * cin];
        for r in 0..board {
            for c in 0..board {
                let row = &mut cols[(img * cells + r * board + c) * width..][..width];
                let (c_lo, c_hi) = (c.saturating_sub(1), (c + 1).min(board - 1));
                let kw_lo = c_lo + 1 - c;
                for kh in 0..3 {
                    let rr = r as isize + kh as isize - 1;
                    let dst = &mut row[kh * 3 * cin..(kh + 1) * 3 * cin];
                    if rr < 0 || rr >= board as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    // the in-board taps of this kernel row are contiguous
                    let from = (rr as usize * board + c_lo) * cin;
                    let len = (c_hi - c_lo + 1) * cin;
                    dst[..kw_lo * cin].fill(0.0);
                    dst[kw_lo * cin..kw_lo * cin + len].copy_from_slice(&src[from..from + len]);
                    dst[kw_lo * cin + len..].fill(0.0);
                }
            }
        }
    }
}
