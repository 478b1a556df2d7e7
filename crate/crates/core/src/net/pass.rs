//! Forward and backward passes over a flat parameter vector.
//!
//! Decoder feature maps are stored channel-major, `a[c * P + p]`, for `P`
//! time positions. Position 0 is the last history time.

use super::layout::{Layout, ENC_INPUTS};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) struct EncoderCache {
    steps: usize,
    xs: Vec<f64>,
    /// Activated gates `[i, f, g, o]` per step.
    gates: Vec<f64>,
    /// Cell states including the zero initial state.
    cs: Vec<f64>,
    /// Hidden states including the zero initial state.
    hs: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl EncoderCache {
    pub fn last_hidden(&self) -> &[f64] {
        let d = self.hs.len() / (self.steps + 1);
        &self.hs[self.steps * d..]
    }
}

/// Run the encoder over `inputs` (pairs of normalized cycle and HI).
pub(crate) fn encode(lay: &Layout, p: &[f64], inputs: &[[f64; 2]]) -> EncoderCache {
    let d = lay.hidden;
    let cols = ENC_INPUTS + d;
    let steps = inputs.len();
    let w = &p[lay.enc_w..lay.enc_w + 4 * d * cols];
    let b = &p[lay.enc_b..lay.enc_b + 4 * d];
    let mut cache = EncoderCache {
        steps,
        xs: Vec::with_capacity(steps * ENC_INPUTS),
        gates: vec![0.0; steps * 4 * d],
        cs: vec![0.0; (steps + 1) * d],
        hs: vec![0.0; (steps + 1) * d],
        tanh_c: vec![0.0; steps * d],
    };
    let mut pre = vec![0.0; 4 * d];
    for (s, x) in inputs.iter().enumerate() {
        cache.xs.extend_from_slice(x);
        let (h_prev_all, h_rest) = cache.hs.split_at_mut((s + 1) * d);
        let h_prev = &h_prev_all[s * d..];
        for r in 0..4 * d {
            let row = &w[r * cols..(r + 1) * cols];
            let mut acc = b[r] + row[0] * x[0] + row[1] * x[1];
            for (wk, hk) in row[ENC_INPUTS..].iter().zip(h_prev) {
                acc += wk * hk;
            }
            pre[r] = acc;
        }
        let g = &mut cache.gates[s * 4 * d..(s + 1) * 4 * d];
        for j in 0..d {
            g[j] = sigmoid(pre[j]);
            g[d + j] = sigmoid(pre[d + j]);
            g[2 * d + j] = pre[2 * d + j].tanh();
            g[3 * d + j] = sigmoid(pre[3 * d + j]);
        }
        let (c_prev_all, c_rest) = cache.cs.split_at_mut((s + 1) * d);
        let c_prev = &c_prev_all[s * d..];
        let c_new = &mut c_rest[..d];
        let h_new = &mut h_rest[..d];
        let tc = &mut cache.tanh_c[s * d..(s + 1) * d];
        for j in 0..d {
            c_new[j] = g[d + j] * c_prev[j] + g[j] * g[2 * d + j];
            tc[j] = c_new[j].tanh();
            h_new[j] = g[3 * d + j] * tc[j];
        }
    }
    cache
}

/// Backpropagate `dh` at the final hidden state through time.
pub(crate) fn encode_backward(lay: &Layout, p: &[f64], cache: &EncoderCache, dh_last: &[f64], grad: &mut [f64]) {
    let d = lay.hidden;
    let cols = ENC_INPUTS + d;
    let w = &p[lay.enc_w..lay.enc_w + 4 * d * cols];
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; d];
    let mut dpre = vec![0.0; 4 * d];
    for s in (0..cache.steps).rev() {
        let g = &cache.gates[s * 4 * d..(s + 1) * 4 * d];
        let tc = &cache.tanh_c[s * d..(s + 1) * d];
        let c_prev = &cache.cs[s * d..(s + 1) * d];
        for j in 0..d {
            let (i, f, gg, o) = (g[j], g[d + j], g[2 * d + j], g[3 * d + j]);
            dc[j] += dh[j] * o * (1.0 - tc[j] * tc[j]);
            dpre[3 * d + j] = dh[j] * tc[j] * o * (1.0 - o);
            dpre[j] = dc[j] * gg * i * (1.0 - i);
            dpre[2 * d + j] = dc[j] * i * (1.0 - gg * gg);
            dpre[d + j] = dc[j] * c_prev[j] * f * (1.0 - f);
            dc[j] *= f;
        }
        let x = &cache.xs[s * ENC_INPUTS..(s + 1) * ENC_INPUTS];
        let h_prev = &cache.hs[s * d..(s + 1) * d];
        for v in dh.iter_mut() {
            *v = 0.0;
        }
        for r in 0..4 * d {
            let dr = dpre[r];
            if dr == 0.0 {
                continue;
            }
            grad[lay.enc_b + r] += dr;
            let gw = &mut grad[lay.enc_w + r * cols..lay.enc_w + (r + 1) * cols];
            gw[0] += dr * x[0];
            gw[1] += dr * x[1];
            for k in 0..d {
                gw[ENC_INPUTS + k] += dr * h_prev[k];
            }
            let row = &w[r * cols + ENC_INPUTS..(r + 1) * cols];
            for k in 0..d {
                dh[k] += dr * row[k];
            }
        }
    }
}

pub(crate) struct DecoderCache {
    positions: usize,
    hd: Vec<f64>,
    tau: Vec<f64>,
    /// Activations of each conv layer, channel-major.
    acts: Vec<Vec<f64>>,
}

fn pad_left(kernel: usize) -> usize {
    (kernel - 1) / 2
}

/// Decode the (masked) health vector `hd` at relative times `tau` into raw
/// curve values, one per position.
pub(crate) fn decode(lay: &Layout, p: &[f64], hd: &[f64], tau: &[f64]) -> (Vec<f64>, DecoderCache) {
    let d = lay.hidden;
    let np = tau.len();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(lay.convs.len());
    for (l, cv) in lay.convs.iter().enumerate() {
        let w = &p[cv.weight..cv.weight + cv.out_ch * cv.in_ch * cv.kernel];
        let b = &p[cv.bias..cv.bias + cv.out_ch];
        let pl = pad_left(cv.kernel) as isize;
        let mut out = vec![0.0; cv.out_ch * np];
        if l == 0 {
            // The first d input channels repeat hd at every position, so
            // their contribution per kernel tap is a constant.
            let mut u = vec![0.0; cv.out_ch * cv.kernel];
            for o in 0..cv.out_ch {
                for c in 0..d {
                    let wr = &w[(o * cv.in_ch + c) * cv.kernel..(o * cv.in_ch + c + 1) * cv.kernel];
                    for k in 0..cv.kernel {
                        u[o * cv.kernel + k] += wr[k] * hd[c];
                    }
                }
            }
            for o in 0..cv.out_ch {
                let wt = &w[(o * cv.in_ch + d) * cv.kernel..(o * cv.in_ch + d + 1) * cv.kernel];
                for q in 0..np {
                    let mut acc = b[o];
                    for k in 0..cv.kernel {
                        let src = q as isize + k as isize - pl;
                        if src >= 0 && (src as usize) < np {
                            acc += u[o * cv.kernel + k] + wt[k] * tau[src as usize];
                        }
                    }
                    out[o * np + q] = acc.tanh();
                }
            }
        } else {
            let input = &acts[l - 1];
            for o in 0..cv.out_ch {
                let row = &mut out[o * np..(o + 1) * np];
                row.fill(b[o]);
                for c in 0..cv.in_ch {
                    let wr = &w[(o * cv.in_ch + c) * cv.kernel..(o * cv.in_ch + c + 1) * cv.kernel];
                    let xin = &input[c * np..(c + 1) * np];
                    for (k, &wk) in wr.iter().enumerate() {
                        let shift = k as isize - pl;
                        let lo = (-shift).max(0) as usize;
                        let hi = (np as isize - shift).min(np as isize).max(0) as usize;
                        for q in lo..hi {
                            row[q] += wk * xin[(q as isize + shift) as usize];
                        }
                    }
                }
                for v in row.iter_mut() {
                    *v = v.tanh();
                }
            }
        }
        acts.push(out);
    }
    let last = acts.last().expect("at least one conv layer");
    let ch = lay.convs.last().map(|c| c.out_ch).unwrap_or(0);
    let hw = &p[lay.head_w..lay.head_w + ch];
    let hb = p[lay.head_b];
    let mut raw = vec![hb; np];
    for c in 0..ch {
        for q in 0..np {
            raw[q] += hw[c] * last[c * np + q];
        }
    }
    (
        raw,
        DecoderCache {
            positions: np,
            hd: hd.to_vec(),
            tau: tau.to_vec(),
            acts,
        },
    )
}

/// Accumulate decoder gradients for `draw` (dL/draw per position) and return
/// the gradient with respect to the masked health vector.
pub(crate) fn decode_backward(lay: &Layout, p: &[f64], cache: &DecoderCache, draw: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let d = lay.hidden;
    let np = cache.positions;
    let n_layers = lay.convs.len();
    let ch = lay.convs[n_layers - 1].out_ch;
    let hw = &p[lay.head_w..lay.head_w + ch];
    let last = &cache.acts[n_layers - 1];
    let mut dact = vec![0.0; ch * np];
    for q in 0..np {
        grad[lay.head_b] += draw[q];
    }
    for c in 0..ch {
        let mut s = 0.0;
        for q in 0..np {
            s += draw[q] * last[c * np + q];
            dact[c * np + q] = draw[q] * hw[c];
        }
        grad[lay.head_w + c] += s;
    }
    let mut dhd = vec![0.0; d];
    for l in (0..n_layers).rev() {
        let cv = lay.convs[l];
        let w = &p[cv.weight..cv.weight + cv.out_ch * cv.in_ch * cv.kernel];
        let act = &cache.acts[l];
        let pl = pad_left(cv.kernel) as isize;
        // Through tanh.
        let mut dpre = dact;
        for (g, a) in dpre.iter_mut().zip(act) {
            *g *= 1.0 - a * a;
        }
        for o in 0..cv.out_ch {
            grad[cv.bias + o] += dpre[o * np..(o + 1) * np].iter().sum::<f64>();
        }
        if l == 0 {
            for o in 0..cv.out_ch {
                let dp = &dpre[o * np..(o + 1) * np];
                for k in 0..cv.kernel {
                    let shift = k as isize - pl;
                    let lo = (-shift).max(0) as usize;
                    let hi = (np as isize - shift).min(np as isize).max(0) as usize;
                    let mut s_const = 0.0;
                    let mut s_tau = 0.0;
                    for q in lo..hi {
                        s_const += dp[q];
                        s_tau += dp[q] * cache.tau[(q as isize + shift) as usize];
                    }
                    for c in 0..d {
                        let wi = cv.weight + (o * cv.in_ch + c) * cv.kernel + k;
                        grad[wi] += s_const * cache.hd[c];
                        dhd[c] += s_const * p[wi];
                    }
                    grad[cv.weight + (o * cv.in_ch + d) * cv.kernel + k] += s_tau;
                }
            }
            dact = Vec::new();
        } else {
            let input = &cache.acts[l - 1];
            let mut dinput = vec![0.0; cv.in_ch * np];
            for o in 0..cv.out_ch {
                let dp = &dpre[o * np..(o + 1) * np];
                for c in 0..cv.in_ch {
                    let base = (o * cv.in_ch + c) * cv.kernel;
                    let wr = &w[base..base + cv.kernel];
                    let xin = &input[c * np..(c + 1) * np];
                    let din = &mut dinput[c * np..(c + 1) * np];
                    for (k, &wk) in wr.iter().enumerate() {
                        let shift = k as isize - pl;
                        let lo = (-shift).max(0) as usize;
                        let hi = (np as isize - shift).min(np as isize).max(0) as usize;
                        let mut gw = 0.0;
                        for q in lo..hi {
                            let src = (q as isize + shift) as usize;
                            gw += dp[q] * xin[src];
                            din[src] += dp[q] * wk;
                        }
                        grad[cv.weight + base + k] += gw;
                    }
                }
            }
            dact = dinput;
        }
    }
    dhd
}
