use rand::Rng;

use crate::error::Result;
use crate::nn::params::{ParamId, ParamStore, Tensor};
use crate::nn::tape::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        let w = store.add_uniform(format!("{name}.w"), output, input, input, rng);
        let b = store.add_uniform(format!("{name}.b"), output, 1, input, rng);
        Linear {
            w,
            b,
            input,
            output,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        let y = tape.matvec(w, x)?;
        tape.add(y, b)
    }

    /// Plain evaluation without recording.
    pub fn eval(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        let w = store.get(self.w);
        let b = store.get(self.b);
        (0..self.output)
            .map(|i| {
                b.data[i]
                    + w.data[i * self.input..(i + 1) * self.input]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Fully connected stack with `tanh` between layers and a linear output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        sizes: &[usize],
        rng: &mut R,
    ) -> Self {
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| Linear::new(store, &format!("{name}.l{k}"), w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let mut h = x;
        for (k, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, h)?;
            if k + 1 < self.layers.len() {
                h = tape.tanh(h);
            }
        }
        Ok(h)
    }

    pub fn eval(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            h = layer.eval(store, &h);
            if k + 1 < self.layers.len() {
                h.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        h
    }
}

/// LSTM with gate order input, forget, cell, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lstm {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl Lstm {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w_ih = store.add_uniform(format!("{name}.w_ih"), 4 * hidden, input, hidden, rng);
        let w_hh = store.add_uniform(format!("{name}.w_hh"), 4 * hidden, hidden, hidden, rng);
        let mut bias = Tensor::zeros(4 * hidden, 1);
        let bound = 1.0 / (hidden as f64).sqrt();
        for (k, v) in bias.data.iter_mut().enumerate() {
            *v = rng.random_range(-bound..=bound);
            if (hidden..2 * hidden).contains(&k) {
                *v += 1.0;
            }
        }
        let b = store.add(format!("{name}.b"), bias);
        Lstm {
            w_ih,
            w_hh,
            b,
            input,
            hidden,
        }
    }

    pub fn zero_state(&self, tape: &mut Tape) -> LstmState {
        LstmState {
            h: tape.constant(vec![0.0; self.hidden]),
            c: tape.constant(vec![0.0; self.hidden]),
        }
    }

    pub fn step(&self, tape: &mut Tape, x: Var, state: LstmState) -> Result<LstmState> {
        let h = self.hidden;
        let w_ih = tape.param(self.w_ih);
        let w_hh = tape.param(self.w_hh);
        let b = tape.param(self.b);
        let gx = tape.matvec(w_ih, x)?;
        let gh = tape.matvec(w_hh, state.h)?;
        let pre = tape.add(gx, gh)?;
        let pre = tape.add(pre, b)?;
        let i = tape.slice(pre, 0, h)?;
        let f = tape.slice(pre, h, h)?;
        let g = tape.slice(pre, 2 * h, h)?;
        let o = tape.slice(pre, 3 * h, h)?;
        let i = tape.sigmoid(i);
        let f = tape.sigmoid(f);
        let g = tape.tanh(g);
        let o = tape.sigmoid(o);
        let fc = tape.mul(f, state.c)?;
        let ig = tape.mul(i, g)?;
        let c = tape.add(fc, ig)?;
        let tc = tape.tanh(c);
        let h = tape.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    /// Runs the sequence from the zero state; returns every hidden state and
    /// the final state (the zero state for an empty sequence).
    pub fn run(&self, tape: &mut Tape, xs: &[Var]) -> Result<(Vec<Var>, LstmState)> {
        let mut state = self.zero_state(tape);
        let mut hs = Vec::with_capacity(xs.len());
        for &x in xs {
            state = self.step(tape, x, state)?;
            hs.push(state.h);
        }
        Ok((hs, state))
    }
}

/// Additive attention `u_j = v · tanh(W_ref e_j + W_q q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attention {
    pub w_ref: ParamId,
    pub w_q: ParamId,
    pub v: ParamId,
    pub hidden: usize,
}

impl Attention {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        Attention {
            w_ref: store.add_uniform(format!("{name}.w_ref"), hidden, hidden, hidden, rng),
            w_q: store.add_uniform(format!("{name}.w_q"), hidden, hidden, hidden, rng),
            v: store.add_uniform(format!("{name}.v"), hidden, 1, hidden, rng),
            hidden,
        }
    }

    /// Projects the keys once; reuse the result across decoding steps.
    pub fn project_keys(&self, tape: &mut Tape, keys: &[Var]) -> Result<Vec<Var>> {
        let w = tape.param(self.w_ref);
        keys.iter().map(|&k| tape.matvec(w, k)).collect()
    }

    pub fn logits(&self, tape: &mut Tape, projected: &[Var], query: Var) -> Result<Var> {
        let wq = tape.param(self.w_q);
        let v = tape.param(self.v);
        let q = tape.matvec(wq, query)?;
        let mut scores = Vec::with_capacity(projected.len());
        for &p in projected {
            let s = tape.add(p, q)?;
            let t = tape.tanh(s);
            scores.push(tape.dot(v, t)?);
        }
        Ok(tape.concat(&scores))
    }
}
