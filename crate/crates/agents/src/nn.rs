//! A small convolutional actor-critic with hand-written backpropagation.
//!
//! Trunk: two 3x3 stride-2 convolutions (padding 1) with ReLU, then two
//! fully connected ReLU layers. Heads: policy logits and a scalar value.
//! All parameters live in one flat vector so the optimiser and the
//! checkpoint code can treat them uniformly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
    pub n_actions: usize,
}

/// Output side of a 3x3, stride 2, padding 1 convolution.
fn halve(n: usize) -> usize {
    n.div_ceil(2)
}

#[derive(Clone, Copy, Debug)]
struct Span {
    at: usize,
    len: usize,
}

impl Span {
    fn range(self) -> std::ops::Range<usize> {
        self.at..self.at + self.len
    }
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    c1_w: Span,
    c1_b: Span,
    c2_w: Span,
    c2_b: Span,
    f1_w: Span,
    f1_b: Span,
    f2_w: Span,
    f2_b: Span,
    pi_w: Span,
    pi_b: Span,
    v_w: Span,
    v_b: Span,
    total: usize,
}

impl NetShape {
    pub fn conv1_dims(&self) -> (usize, usize) {
        (halve(self.height), halve(self.width))
    }

    pub fn conv2_dims(&self) -> (usize, usize) {
        let (h, w) = self.conv1_dims();
        (halve(h), halve(w))
    }

    pub fn flat(&self) -> usize {
        let (h, w) = self.conv2_dims();
        self.conv2 * h * w
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    fn layout(&self) -> Layout {
        let mut at = 0;
        let mut take = |len: usize| {
            let s = Span { at, len };
            at += len;
            s
        };
        let c1_w = take(self.conv1 * self.in_channels * 9);
        let c1_b = take(self.conv1);
        let c2_w = take(self.conv2 * self.conv1 * 9);
        let c2_b = take(self.conv2);
        let f1_w = take(self.hidden * self.flat());
        let f1_b = take(self.hidden);
        let f2_w = take(self.hidden * self.hidden);
        let f2_b = take(self.hidden);
        let pi_w = take(self.n_actions * self.hidden);
        let pi_b = take(self.n_actions);
        let v_w = take(self.hidden);
        let v_b = take(1);
        Layout { c1_w, c1_b, c2_w, c2_b, f1_w, f1_b, f2_w, f2_b, pi_w, pi_b, v_w, v_b, total: at }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    input: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub shape: NetShape,
    pub params: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    (c_in, h, w): (usize, usize, usize),
    weights: &[f64],
    bias: &[f64],
    c_out: usize,
    (oh, ow): (usize, usize),
    out: &mut [f64],
) {
    for o in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias[o];
                for c in 0..c_in {
                    let wbase = (o * c_in + c) * 9;
                    let xbase = c * h * w;
                    for ky in 0..3 {
                        let iy = (oy * 2 + ky) as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let ix = (ox * 2 + kx) as isize - 1;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += weights[wbase + ky * 3 + kx] * x[xbase + iy as usize * w + ix as usize];
                        }
                    }
                }
                out[(o * oh + oy) * ow + ox] = acc.max(0.0);
            }
        }
    }
}

/// Backward through ReLU and the convolution. `dout` is the gradient at the
/// post-ReLU output `a`; `dx` may be `None` for the input layer.
#[allow(clippy::too_many_arguments)]
#[allow(clippy::needless_range_loop)]
fn conv_backward(
    x: &[f64],
    (c_in, h, w): (usize, usize, usize),
    weights: &[f64],
    a: &[f64],
    dout: &[f64],
    c_out: usize,
    (oh, ow): (usize, usize),
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    for o in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let k = (o * oh + oy) * ow + ox;
                if a[k] <= 0.0 {
                    continue;
                }
                let g = dout[k];
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                for c in 0..c_in {
                    let wbase = (o * c_in + c) * 9;
                    let xbase = c * h * w;
                    for ky in 0..3 {
                        let iy = (oy * 2 + ky) as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let ix = (ox * 2 + kx) as isize - 1;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let xi = xbase + iy as usize * w + ix as usize;
                            dw[wbase + ky * 3 + kx] += g * x[xi];
                            if let Some(dx) = dx.as_deref_mut() {
                                dx[xi] += g * weights[wbase + ky * 3 + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn dense(x: &[f64], w: &[f64], b: &[f64], relu: bool) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &w[o * n_in..(o + 1) * n_in];
            let z = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            if relu {
                z.max(0.0)
            } else {
                z
            }
        })
        .collect()
}

/// Accumulates weight and bias gradients of a dense layer and returns the
/// gradient at its input. `dz` is taken after any activation derivative.
fn dense_backward(x: &[f64], w: &[f64], dz: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let n_in = x.len();
    let mut dx = vec![0.0; n_in];
    for (o, &g) in dz.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        db[o] += g;
        let row = o * n_in;
        for i in 0..n_in {
            dw[row + i] += g * x[i];
            dx[i] += g * w[row + i];
        }
    }
    dx
}

fn relu_mask(dz: &mut [f64], a: &[f64]) {
    for (g, &v) in dz.iter_mut().zip(a) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}

impl Network {
    /// He-style uniform initialisation. The policy head starts near zero
    /// so the initial policy is close to uniform over legal actions.
    pub fn new(shape: NetShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = shape.layout();
        let mut params = vec![0.0; l.total];
        let mut fill = |span: Span, fan_in: usize, scale: f64| {
            let bound = scale * (6.0 / fan_in.max(1) as f64).sqrt();
            for p in &mut params[span.range()] {
                *p = rng.gen_range(-bound..bound);
            }
        };
        fill(l.c1_w, shape.in_channels * 9, 1.0);
        fill(l.c2_w, shape.conv1 * 9, 1.0);
        fill(l.f1_w, shape.flat(), 1.0);
        fill(l.f2_w, shape.hidden, 1.0);
        fill(l.pi_w, shape.hidden, 0.01);
        fill(l.v_w, shape.hidden, 0.5);
        Self { shape, params }
    }

    pub fn from_params(shape: NetShape, params: Vec<f64>) -> Option<Self> {
        (params.len() == shape.param_count()).then_some(Self { shape, params })
    }

    pub fn forward(&self, input: &[f64]) -> Cache {
        let s = &self.shape;
        assert_eq!(input.len(), s.input_len(), "input size");
        let l = s.layout();
        let p = &self.params;
        let (h1, w1) = s.conv1_dims();
        let (h2, w2) = s.conv2_dims();
        let mut a1 = vec![0.0; s.conv1 * h1 * w1];
        conv_forward(
            input,
            (s.in_channels, s.height, s.width),
            &p[l.c1_w.range()],
            &p[l.c1_b.range()],
            s.conv1,
            (h1, w1),
            &mut a1,
        );
        let mut a2 = vec![0.0; s.conv2 * h2 * w2];
        conv_forward(&a1, (s.conv1, h1, w1), &p[l.c2_w.range()], &p[l.c2_b.range()], s.conv2, (h2, w2), &mut a2);
        let f1 = dense(&a2, &p[l.f1_w.range()], &p[l.f1_b.range()], true);
        let f2 = dense(&f1, &p[l.f2_w.range()], &p[l.f2_b.range()], true);
        let logits = dense(&f2, &p[l.pi_w.range()], &p[l.pi_b.range()], false);
        let value = dense(&f2, &p[l.v_w.range()], &p[l.v_b.range()], false)[0];
        Cache { input: input.to_vec(), a1, a2, h1: f1, h2: f2, logits, value }
    }

    /// Adds the parameter gradient of a loss with the given gradients at the
    /// logits and the value output to `grads`.
    pub fn backward(&self, cache: &Cache, dlogits: &[f64], dvalue: f64, grads: &mut [f64]) {
        let s = &self.shape;
        let l = s.layout();
        let p = &self.params;
        let (h1, w1) = s.conv1_dims();
        let (h2, w2) = s.conv2_dims();

        let (head, rest) = grads.split_at_mut(l.pi_w.at);
        let (pi_w, rest) = rest.split_at_mut(l.pi_w.len);
        let (pi_b, rest) = rest.split_at_mut(l.pi_b.len);
        let (v_w, v_b) = rest.split_at_mut(l.v_w.len);
        let mut dh2 = dense_backward(&cache.h2, &p[l.pi_w.range()], dlogits, pi_w, pi_b);
        let dv = dense_backward(&cache.h2, &p[l.v_w.range()], &[dvalue], v_w, v_b);
        for (a, b) in dh2.iter_mut().zip(dv) {
            *a += b;
        }
        relu_mask(&mut dh2, &cache.h2);

        let (trunk, fc2) = head.split_at_mut(l.f2_w.at);
        let (f2_w, f2_b) = fc2.split_at_mut(l.f2_w.len);
        let mut dh1 = dense_backward(&cache.h1, &p[l.f2_w.range()], &dh2, f2_w, f2_b);
        relu_mask(&mut dh1, &cache.h1);

        let (convs, fc1) = trunk.split_at_mut(l.f1_w.at);
        let (f1_w, f1_b) = fc1.split_at_mut(l.f1_w.len);
        let da2 = dense_backward(&cache.a2, &p[l.f1_w.range()], &dh1, f1_w, f1_b);

        let (c1, c2) = convs.split_at_mut(l.c2_w.at);
        let (c2_w, c2_b) = c2.split_at_mut(l.c2_w.len);
        let mut da1 = vec![0.0; cache.a1.len()];
        conv_backward(
            &cache.a1,
            (s.conv1, h1, w1),
            &p[l.c2_w.range()],
            &cache.a2,
            &da2,
            s.conv2,
            (h2, w2),
            c2_w,
            c2_b,
            Some(&mut da1),
        );
        let (c1_w, c1_b) = c1.split_at_mut(l.c1_w.len);
        conv_backward(
            &cache.input,
            (s.in_channels, s.height, s.width),
            &p[l.c1_w.range()],
            &cache.a1,
            &da1,
            s.conv1,
            (h1, w1),
            c1_w,
            c1_b,
            None,
        );
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let update = self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
            params[i] -= update;
        }
    }
}
