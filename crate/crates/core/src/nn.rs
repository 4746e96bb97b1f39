//! Minimal LSTM numerics shared by the tagger and the classifier.
//!
//! Parameters live in one flat `f64` slice per model so that SGD updates,
//! finite-difference checks and serialization all work on the same
//! buffer. A direction's block is laid out as `W (4H x I) | U (4H x H) |
//! b (4H)`, row-major, with gate rows ordered input, forget, output,
//! candidate.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LstmShape {
    pub input: usize,
    pub hidden: usize,
}

impl LstmShape {
    pub fn param_count(&self) -> usize {
        4 * self.hidden * (self.input + self.hidden + 1)
    }

    fn w_len(&self) -> usize {
        4 * self.hidden * self.input
    }

    fn u_len(&self) -> usize {
        4 * self.hidden * self.hidden
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without overflow.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform initialization in `[-scale, scale)`.
pub(crate) fn init_uniform<R: Rng>(params: &mut [f64], scale: f64, rng: &mut R) {
    for p in params {
        *p = rng.gen_range(-scale..scale);
    }
}

/// Round every parameter to the nearest `f32` so that in-memory models
/// equal their serialized form.
pub(crate) fn quantize_f32(params: &mut [f64]) {
    for p in params {
        *p = *p as f32 as f64;
    }
}

pub(crate) fn clip_norm(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
}

/// Activations of one direction over a sequence, in processing order.
pub(crate) struct LstmTrace {
    hidden: usize,
    reverse: bool,
    /// Activated gates i, f, o, g per step.
    gates: Vec<f64>,
    cells: Vec<f64>,
    hiddens: Vec<f64>,
}

impl LstmTrace {
    fn steps(&self) -> usize {
        self.cells.len() / self.hidden.max(1)
    }

    fn step_of(&self, position: usize) -> usize {
        if self.reverse {
            self.steps() - 1 - position
        } else {
            position
        }
    }

    /// Hidden state emitted at sequence `position`.
    pub fn hidden_at(&self, position: usize) -> &[f64] {
        let k = self.step_of(position);
        &self.hiddens[k * self.hidden..(k + 1) * self.hidden]
    }

    /// Hidden state after the last processed step.
    pub fn final_hidden(&self) -> &[f64] {
        let k = self.steps() - 1;
        &self.hiddens[k * self.hidden..(k + 1) * self.hidden]
    }

    /// Sequence position of the last processed step.
    pub fn final_position(&self) -> usize {
        if self.reverse {
            0
        } else {
            self.steps() - 1
        }
    }
}

pub(crate) fn lstm_forward(params: &[f64], shape: LstmShape, xs: &[Vec<f64>], reverse: bool) -> LstmTrace {
    let (h, input) = (shape.hidden, shape.input);
    let w = &params[..shape.w_len()];
    let u = &params[shape.w_len()..shape.w_len() + shape.u_len()];
    let b = &params[shape.w_len() + shape.u_len()..shape.param_count()];
    let n = xs.len();
    let mut trace = LstmTrace {
        hidden: h,
        reverse,
        gates: Vec::with_capacity(n * 4 * h),
        cells: Vec::with_capacity(n * h),
        hiddens: Vec::with_capacity(n * h),
    };
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    let mut pre = vec![0.0; 4 * h];
    for k in 0..n {
        let x = &xs[if reverse { n - 1 - k } else { k }];
        debug_assert_eq!(x.len(), input);
        for (r, z) in pre.iter_mut().enumerate() {
            *z = b[r] + dot(&w[r * input..(r + 1) * input], x) + dot(&u[r * h..(r + 1) * h], &h_prev);
        }
        for j in 0..h {
            let i_g = sigmoid(pre[j]);
            let f_g = sigmoid(pre[h + j]);
            let o_g = sigmoid(pre[2 * h + j]);
            let g_g = pre[3 * h + j].tanh();
            let c = f_g * c_prev[j] + i_g * g_g;
            c_prev[j] = c;
            h_prev[j] = o_g * c.tanh();
            pre[j] = i_g;
            pre[h + j] = f_g;
            pre[2 * h + j] = o_g;
            pre[3 * h + j] = g_g;
        }
        trace.gates.extend_from_slice(&pre);
        trace.cells.extend_from_slice(&c_prev);
        trace.hiddens.extend_from_slice(&h_prev);
    }
    trace
}

/// Backpropagate through time. `dh` holds the loss gradient with respect to
/// the hidden state emitted at each sequence position; parameter gradients
/// are accumulated into `grad` (same layout as `params`).
pub(crate) fn lstm_backward(
    params: &[f64],
    shape: LstmShape,
    xs: &[Vec<f64>],
    trace: &LstmTrace,
    dh: &[Vec<f64>],
    grad: &mut [f64],
) {
    let (h, input) = (shape.hidden, shape.input);
    let (w_len, u_len) = (shape.w_len(), shape.u_len());
    let u = &params[w_len..w_len + u_len];
    let (gw, rest) = grad.split_at_mut(w_len);
    let (gu, gb) = rest.split_at_mut(u_len);
    let n = xs.len();
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    let zeros = vec![0.0; h];
    for k in (0..n).rev() {
        let position = if trace.reverse { n - 1 - k } else { k };
        let x = &xs[position];
        let gates = &trace.gates[k * 4 * h..(k + 1) * 4 * h];
        let c = &trace.cells[k * h..(k + 1) * h];
        let (c_prev, h_prev) = if k == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&trace.cells[(k - 1) * h..k * h], &trace.hiddens[(k - 1) * h..k * h])
        };
        for j in 0..h {
            let (i_g, f_g, o_g, g_g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = c[j].tanh();
            let dhj = dh[position][j] + dh_next[j];
            let d_o = dhj * tc;
            let dc = dhj * o_g * (1.0 - tc * tc) + dc_next[j];
            dz[j] = dc * g_g * i_g * (1.0 - i_g);
            dz[h + j] = dc * c_prev[j] * f_g * (1.0 - f_g);
            dz[2 * h + j] = d_o * o_g * (1.0 - o_g);
            dz[3 * h + j] = dc * i_g * (1.0 - g_g * g_g);
            dc_next[j] = dc * f_g;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[r] += d;
            for (g, &xv) in gw[r * input..(r + 1) * input].iter_mut().zip(x) {
                *g += d * xv;
            }
            let u_row = &u[r * h..(r + 1) * h];
            for ((g, &hv), (dn, &uv)) in gu[r * h..(r + 1) * h]
                .iter_mut()
                .zip(h_prev)
                .zip(dh_next.iter_mut().zip(u_row))
            {
                *g += d * hv;
                *dn += d * uv;
            }
        }
    }
}

/// Forward and optional backward encoder over a sequence of input rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Encoder {
    pub shape: LstmShape,
    pub bidirectional: bool,
}

pub(crate) struct EncoderTrace {
    pub forward: LstmTrace,
    pub backward: Option<LstmTrace>,
}

impl Encoder {
    pub fn param_count(&self) -> usize {
        self.shape.param_count() * (1 + self.bidirectional as usize)
    }

    pub fn output_dim(&self) -> usize {
        self.shape.hidden * (1 + self.bidirectional as usize)
    }

    fn split<'a>(&self, params: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let n = self.shape.param_count();
        (&params[..n], &params[n..self.param_count()])
    }

    pub fn forward(&self, params: &[f64], xs: &[Vec<f64>]) -> EncoderTrace {
        let (fwd, bwd) = self.split(params);
        EncoderTrace {
            forward: lstm_forward(fwd, self.shape, xs, false),
            backward: self.bidirectional.then(|| lstm_forward(bwd, self.shape, xs, true)),
        }
    }

    /// Concatenated hidden state at `position`.
    pub fn output_at(&self, trace: &EncoderTrace, position: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(trace.forward.hidden_at(position));
        if let Some(b) = &trace.backward {
            out.extend_from_slice(b.hidden_at(position));
        }
    }

    /// `d_out[t]` is the gradient with respect to [`Self::output_at`] for
    /// position `t`.
    pub fn backward(
        &self,
        params: &[f64],
        xs: &[Vec<f64>],
        trace: &EncoderTrace,
        d_out: &[Vec<f64>],
        grad: &mut [f64],
    ) {
        let h = self.shape.hidden;
        let (fwd, bwd) = self.split(params);
        let n = self.shape.param_count();
        let (g_fwd, g_bwd) = grad[..self.param_count()].split_at_mut(n);
        let d_fwd: Vec<Vec<f64>> = d_out.iter().map(|d| d[..h].to_vec()).collect();
        lstm_backward(fwd, self.shape, xs, &trace.forward, &d_fwd, g_fwd);
        if let Some(b) = &trace.backward {
            let d_bwd: Vec<Vec<f64>> = d_out.iter().map(|d| d[h..2 * h].to_vec()).collect();
            lstm_backward(bwd, self.shape, xs, b, &d_bwd, g_bwd);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stable_sigmoids() {
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((log_sigmoid(-1000.0) + 1000.0).abs() < 1e-9);
        assert!(log_sigmoid(1000.0).abs() < 1e-12);
        assert!((log_sigmoid(0.3) - sigmoid(0.3).ln()).abs() < 1e-14);
    }

    /// Loss = sum_t c_t . h_t for fixed random c_t, checked against central
    /// differences.
    #[test]
    fn lstm_backward_matches_finite_differences() {
        let shape = LstmShape { input: 3, hidden: 2 };
        for reverse in [false, true] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut params = vec![0.0; shape.param_count()];
            init_uniform(&mut params, 0.8, &mut rng);
            let xs: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let cs: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let loss = |p: &[f64]| {
                let trace = lstm_forward(p, shape, &xs, reverse);
                (0..4).map(|t| dot(trace.hidden_at(t), &cs[t])).sum::<f64>()
            };
            let trace = lstm_forward(&params, shape, &xs, reverse);
            let mut grad = vec![0.0; params.len()];
            lstm_backward(&params, shape, &xs, &trace, &cs, &mut grad);
            let eps = 1e-5;
            for i in 0..params.len() {
                let mut p = params.clone();
                p[i] += eps;
                let up = loss(&p);
                p[i] -= 2.0 * eps;
                let down = loss(&p);
                let numeric = (up - down) / (2.0 * eps);
                let denom = numeric.abs().max(grad[i].abs()).max(1e-8);
                assert!(
                    (numeric - grad[i]).abs() / denom < 1e-5 || (numeric - grad[i]).abs() < 1e-9,
                    "param {i}: analytic {} numeric {numeric}",
                    grad[i]
                );
            }
        }
    }
}
