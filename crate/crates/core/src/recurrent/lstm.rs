//! Bidirectional LSTM classifier with backpropagation through time.
//!
//! Each layer runs a forward-in-time and a backward-in-time LSTM over its
//! input and concatenates their hidden states per frame. A second layer, if
//! present, consumes those concatenated states. The top layer's states are
//! pooled (time mean, or final states of both directions) and passed to a
//! linear output layer.
//!
//! Gate order in the stacked weight matrices is input, forget, cell, output.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::head::{ParamGroup, Scorer, SequenceHead, Target};
use crate::probe::{loss_for_target, sigmoid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LstmReadout {
    /// Time mean of the top layer's concatenated states.
    Mean,
    /// Last forward state concatenated with the last backward state.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiLstmConfig {
    pub hidden_size: usize,
    pub num_layers: usize,
    pub readout: LstmReadout,
}

impl Default for BiLstmConfig {
    fn default() -> Self {
        Self {
            hidden_size: 256,
            num_layers: 2,
            readout: LstmReadout::Mean,
        }
    }
}

/// Weights of one LSTM direction in one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    /// `4H x (in + H)`, applied to `[x_t; h_{t-1}]`.
    pub weights: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

impl LstmCellParams {
    fn zeros_like(&self) -> Self {
        Self {
            weights: Array2::zeros(self.weights.dim()),
            bias: Array1::zeros(self.bias.len()),
        }
    }

    fn hidden_size(&self) -> usize {
        self.bias.len() / 4
    }

    fn input_size(&self) -> usize {
        self.weights.ncols() - self.hidden_size()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub hidden_size: usize,
    /// `[forward, backward]` per layer.
    pub layers: Vec<[LstmCellParams; 2]>,
    /// `C x 2H`
    pub output_weights: Array2<f64>,
    /// `C`
    pub output_bias: Array1<f64>,
    pub readout: LstmReadout,
}

impl LstmParams {
    /// Uniform `(-1/sqrt(H), 1/sqrt(H))` weights, zero biases except the
    /// forget gate, which starts at 1.
    pub fn init<R: Rng>(config: &BiLstmConfig, input_dim: usize, classes: usize, rng: &mut R) -> Result<Self> {
        let h = config.hidden_size;
        if h == 0 || input_dim == 0 || classes == 0 {
            return Err(Error::InvalidArgument("LSTM sizes must be positive".into()));
        }
        if !(1..=2).contains(&config.num_layers) {
            return Err(Error::InvalidArgument(format!(
                "biLSTM supports 1 or 2 layers, got {}",
                config.num_layers
            )));
        }
        let bound = 1.0 / (h as f64).sqrt();
        let mut cell = |input: usize| {
            let mut bias = Array1::zeros(4 * h);
            bias.slice_mut(s![h..2 * h]).fill(1.0);
            LstmCellParams {
                weights: Array2::from_shape_fn((4 * h, input + h), |_| rng.gen_range(-bound..bound)),
                bias,
            }
        };
        let mut layers = Vec::with_capacity(config.num_layers);
        for l in 0..config.num_layers {
            let input = if l == 0 { input_dim } else { 2 * h };
            layers.push([cell(input), cell(input)]);
        }
        let out_bound = 1.0 / ((2 * h) as f64).sqrt();
        Ok(Self {
            hidden_size: h,
            layers,
            output_weights: Array2::from_shape_fn((classes, 2 * h), |_| {
                rng.gen_range(-out_bound..out_bound)
            }),
            output_bias: Array1::zeros(classes),
            readout: config.readout,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0][0].input_size()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            hidden_size: self.hidden_size,
            layers: self
                .layers
                .iter()
                .map(|[f, b]| [f.zeros_like(), b.zeros_like()])
                .collect(),
            output_weights: Array2::zeros(self.output_weights.dim()),
            output_bias: Array1::zeros(self.output_bias.len()),
            readout: self.readout,
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    fn signature(&self) -> (usize, usize, usize, usize) {
        (
            self.hidden_size,
            self.num_layers(),
            self.input_dim(),
            self.output_bias.len(),
        )
    }

    fn tensors(&self) -> Vec<(&[f64], bool)> {
        let mut out = Vec::new();
        for pair in &self.layers {
            for cell in pair {
                out.push((cell.weights.as_slice().expect("standard layout"), true));
                out.push((cell.bias.as_slice().expect("standard layout"), false));
            }
        }
        out.push((self.output_weights.as_slice().expect("standard layout"), true));
        out.push((self.output_bias.as_slice().expect("standard layout"), false));
        out
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    input: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    c_prev: Array1<f64>,
    tanh_c: Array1<f64>,
}

#[derive(Debug, Clone)]
struct DirectionPass {
    /// Indexed by time, not processing order.
    steps: Vec<StepCache>,
    hidden: Array2<f64>,
    cells: Array2<f64>,
}

fn run_direction(cell: &LstmCellParams, xs: ArrayView2<'_, f64>, reverse: bool) -> DirectionPass {
    let t_len = xs.nrows();
    let h_size = cell.hidden_size();
    let in_size = xs.ncols();
    let mut h = Array1::<f64>::zeros(h_size);
    let mut c = Array1::<f64>::zeros(h_size);
    let mut steps: Vec<Option<StepCache>> = vec![None; t_len];
    let mut hidden = Array2::zeros((t_len, h_size));
    let mut cells = Array2::zeros((t_len, h_size));
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..t_len).rev())
    } else {
        Box::new(0..t_len)
    };
    for t in order {
        let mut input = Array1::zeros(in_size + h_size);
        input.slice_mut(s![..in_size]).assign(&xs.row(t));
        input.slice_mut(s![in_size..]).assign(&h);
        let z = cell.weights.dot(&input) + &cell.bias;
        let i = z.slice(s![..h_size]).mapv(sigmoid);
        let f = z.slice(s![h_size..2 * h_size]).mapv(sigmoid);
        let g = z.slice(s![2 * h_size..3 * h_size]).mapv(f64::tanh);
        let o = z.slice(s![3 * h_size..]).mapv(sigmoid);
        let c_new = &f * &c + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        hidden.row_mut(t).assign(&h_new);
        cells.row_mut(t).assign(&c_new);
        steps[t] = Some(StepCache {
            input,
            i,
            f,
            g,
            o,
            c_prev: std::mem::replace(&mut c, c_new),
            tanh_c,
        });
        h = h_new;
    }
    DirectionPass {
        steps: steps.into_iter().map(|s| s.expect("every step visited")).collect(),
        hidden,
        cells,
    }
}

/// Returns the input gradient `T x in` and accumulates parameter gradients
/// into `grad`.
fn backward_direction(
    cell: &LstmCellParams,
    pass: &DirectionPass,
    dh_ext: ArrayView2<'_, f64>,
    reverse: bool,
    grad: &mut LstmCellParams,
) -> Array2<f64> {
    let t_len = pass.steps.len();
    let h_size = cell.hidden_size();
    let in_size = cell.input_size();
    let mut dx = Array2::zeros((t_len, in_size));
    let mut dh_next = Array1::<f64>::zeros(h_size);
    let mut dc_next = Array1::<f64>::zeros(h_size);
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new(0..t_len)
    } else {
        Box::new((0..t_len).rev())
    };
    let mut dz = Array1::<f64>::zeros(4 * h_size);
    for t in order {
        let st = &pass.steps[t];
        let dh = &dh_ext.row(t) + &dh_next;
        let d_o = &dh * &st.tanh_c;
        let dc = &dh * &st.o * &st.tanh_c.mapv(|v| 1.0 - v * v) + &dc_next;
        let di = &dc * &st.g;
        let dg = &dc * &st.i;
        let df = &dc * &st.c_prev;
        dc_next = &dc * &st.f;
        dz.slice_mut(s![..h_size])
            .assign(&(&di * &st.i.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(s![h_size..2 * h_size])
            .assign(&(&df * &st.f.mapv(|v| v * (1.0 - v))));
        dz.slice_mut(s![2 * h_size..3 * h_size])
            .assign(&(&dg * &st.g.mapv(|v| 1.0 - v * v)));
        dz.slice_mut(s![3 * h_size..])
            .assign(&(&d_o * &st.o.mapv(|v| v * (1.0 - v))));
        add_outer(&mut grad.weights, dz.view(), st.input.view());
        grad.bias += &dz;
        let dinput = cell.weights.t().dot(&dz);
        dx.row_mut(t).assign(&dinput.slice(s![..in_size]));
        dh_next = dinput.slice(s![in_size..]).to_owned();
    }
    dx
}

fn add_outer(m: &mut Array2<f64>, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) {
    for (mut row, &ai) in m.rows_mut().into_iter().zip(a.iter()) {
        if ai != 0.0 {
            row.scaled_add(ai, &b);
        }
    }
}

/// Cached activations of one forward pass, consumed by [`bilstm_backward`].
#[derive(Debug, Clone)]
pub struct LstmForward {
    signature: (usize, usize, usize, usize),
    seq_len: usize,
    passes: Vec<[DirectionPass; 2]>,
    pub pooled: Array1<f64>,
    pub logits: Array1<f64>,
}

impl LstmForward {
    /// Concatenated `[forward; backward]` hidden states of `layer`, `T x 2H`.
    pub fn layer_states(&self, layer: usize) -> Array2<f64> {
        let [f, b] = &self.passes[layer];
        ndarray::concatenate(Axis(1), &[f.hidden.view(), b.hidden.view()]).expect("same T")
    }

    /// Cell states of one direction of `layer`, `T x H`.
    pub fn cell_states(&self, layer: usize, direction: usize) -> &Array2<f64> {
        &self.passes[layer][direction].cells
    }

    pub fn top_states(&self) -> Array2<f64> {
        self.layer_states(self.passes.len() - 1)
    }
}

pub fn bilstm_forward(frames: ArrayView2<'_, f32>, params: &LstmParams) -> Result<LstmForward> {
    if frames.nrows() == 0 {
        return Err(Error::DegenerateInput("sequence has no frames".into()));
    }
    if frames.ncols() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            found: frames.ncols(),
        });
    }
    let t_len = frames.nrows();
    let h = params.hidden_size;
    let mut input = frames.mapv(f64::from);
    let mut passes = Vec::with_capacity(params.num_layers());
    for [fwd, bwd] in &params.layers {
        let pf = run_direction(fwd, input.view(), false);
        let pb = run_direction(bwd, input.view(), true);
        input = ndarray::concatenate(Axis(1), &[pf.hidden.view(), pb.hidden.view()])
            .expect("same T");
        passes.push([pf, pb]);
    }
    let pooled = match params.readout {
        LstmReadout::Mean => input.mean_axis(Axis(0)).expect("T >= 1"),
        LstmReadout::Final => {
            let mut p = Array1::zeros(2 * h);
            p.slice_mut(s![..h]).assign(&input.slice(s![t_len - 1, ..h]));
            p.slice_mut(s![h..]).assign(&input.slice(s![0, h..]));
            p
        }
    };
    let logits = params.output_weights.dot(&pooled) + &params.output_bias;
    Ok(LstmForward {
        signature: params.signature(),
        seq_len: t_len,
        passes,
        pooled,
        logits,
    })
}

/// Full BPTT through every layer and direction.
///
/// `cache` must come from [`bilstm_forward`] with the same parameters.
/// Gradients are returned in the shape of `params`.
pub fn bilstm_backward(
    params: &LstmParams,
    cache: &LstmForward,
    logit_grad: ArrayView1<'_, f64>,
) -> Result<LstmParams> {
    if cache.signature != params.signature() {
        return Err(Error::InvalidArgument(
            "forward cache was produced with differently shaped parameters".into(),
        ));
    }
    if logit_grad.len() != params.output_bias.len() {
        return Err(Error::DimensionMismatch {
            expected: params.output_bias.len(),
            found: logit_grad.len(),
        });
    }
    let h = params.hidden_size;
    let t_len = cache.seq_len;
    let mut grads = params.zeros_like();
    add_outer(&mut grads.output_weights, logit_grad, cache.pooled.view());
    grads.output_bias.assign(&logit_grad);
    let dpooled = params.output_weights.t().dot(&logit_grad);

    let mut dout = Array2::<f64>::zeros((t_len, 2 * h));
    match params.readout {
        LstmReadout::Mean => {
            let share = &dpooled / t_len as f64;
            for mut row in dout.rows_mut() {
                row.assign(&share);
            }
        }
        LstmReadout::Final => {
            dout.slice_mut(s![t_len - 1, ..h]).assign(&dpooled.slice(s![..h]));
            dout.slice_mut(s![0, h..]).assign(&dpooled.slice(s![h..]));
        }
    }
    for l in (0..params.num_layers()).rev() {
        let [fwd, bwd] = &params.layers[l];
        let [pf, pb] = &cache.passes[l];
        let [gf, gb] = &mut grads.layers[l];
        let dx_f = backward_direction(fwd, pf, dout.slice(s![.., ..h]), false, gf);
        let dx_b = backward_direction(bwd, pb, dout.slice(s![.., h..]), true, gb);
        dout = dx_f + dx_b;
    }
    Ok(grads)
}

impl Scorer for LstmParams {
    fn num_classes(&self) -> usize {
        self.output_bias.len()
    }

    fn logits(&self, frames: ArrayView2<'_, f32>) -> Result<Array1<f64>> {
        Ok(bilstm_forward(frames, self)?.logits)
    }
}

impl SequenceHead for LstmParams {
    fn param_sizes(&self) -> Vec<usize> {
        self.tensors().iter().map(|(t, _)| t.len()).collect()
    }

    fn param_groups(&mut self) -> Vec<ParamGroup<'_>> {
        let mut out = Vec::new();
        for pair in &mut self.layers {
            for cell in pair.iter_mut() {
                out.push(ParamGroup {
                    values: cell.weights.as_slice_mut().expect("standard layout"),
                    decay: true,
                });
                out.push(ParamGroup {
                    values: cell.bias.as_slice_mut().expect("standard layout"),
                    decay: false,
                });
            }
        }
        out.push(ParamGroup {
            values: self.output_weights.as_slice_mut().expect("standard layout"),
            decay: true,
        });
        out.push(ParamGroup {
            values: self.output_bias.as_slice_mut().expect("standard layout"),
            decay: false,
        });
        out
    }

    fn accumulate_gradients(
        &self,
        frames: ArrayView2<'_, f32>,
        target: &Target,
        grads: &mut [Vec<f64>],
    ) -> Result<f64> {
        let cache = bilstm_forward(frames, self)?;
        let (loss, dz) = loss_for_target(cache.logits.view(), target)?;
        let g = bilstm_backward(self, &cache, dz.view())?;
        for (dst, (src, _)) in grads.iter_mut().zip(g.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(d: usize, h: usize, layers: usize, c: usize, readout: LstmReadout, seed: u64) -> LstmParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = BiLstmConfig {
            hidden_size: h,
            num_layers: layers,
            readout,
        };
        LstmParams::init(&cfg, d, c, &mut rng).unwrap()
    }

    fn frames(t: usize, d: usize, seed: u64) -> Array2<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((t, d), |_| rng.gen_range(-1.5f32..1.5))
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let p = params(3, 2, 2, 2, LstmReadout::Mean, 0);
        for pair in &p.layers {
            for cell in pair {
                assert_eq!(cell.bias.to_vec(), vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
            }
        }
        assert!(LstmParams::init(
            &BiLstmConfig { num_layers: 3, ..Default::default() },
            3,
            2,
            &mut ChaCha8Rng::seed_from_u64(0)
        )
        .is_err());
    }

    #[test]
    fn zero_weights_give_zero_states() {
        let mut p = params(3, 2, 2, 2, LstmReadout::Mean, 1);
        for pair in &mut p.layers {
            for cell in pair.iter_mut() {
                cell.weights.fill(0.0);
                cell.bias.fill(0.0);
            }
        }
        let cache = bilstm_forward(frames(4, 3, 2).view(), &p).unwrap();
        for l in 0..2 {
            assert!(cache.layer_states(l).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn reversal_swaps_directions() {
        let mut p = params(3, 2, 1, 2, LstmReadout::Mean, 3);
        let fwd = p.layers[0][0].clone();
        p.layers[0][1] = fwd;
        let x = frames(5, 3, 4);
        let mut rev = x.clone();
        rev.invert_axis(Axis(0));
        let a = bilstm_forward(x.view(), &p).unwrap().layer_states(0);
        let b = bilstm_forward(rev.view(), &p).unwrap().layer_states(0);
        for t in 0..5 {
            for k in 0..2 {
                assert_abs_diff_eq!(a[[t, k]], b[[4 - t, 2 + k]], epsilon = 1e-14);
                assert_abs_diff_eq!(a[[t, 2 + k]], b[[4 - t, k]], epsilon = 1e-14);
            }
        }
    }

    /// Gate-by-gate reference recurrence for one direction.
    fn reference_direction(cell: &LstmCellParams, xs: &Array2<f64>, reverse: bool) -> Array2<f64> {
        let (t_len, d) = xs.dim();
        let hs = cell.hidden_size();
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        let mut out = Array2::zeros((t_len, hs));
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let ts: Vec<usize> = if reverse { (0..t_len).rev().collect() } else { (0..t_len).collect() };
        for t in ts {
            let pre = |gate: usize, k: usize| {
                let row = gate * hs + k;
                let mut z = cell.bias[row];
                for j in 0..d {
                    z += cell.weights[[row, j]] * xs[[t, j]];
                }
                for j in 0..hs {
                    z += cell.weights[[row, d + j]] * h[j];
                }
                z
            };
            let mut nh = vec![0.0; hs];
            for k in 0..hs {
                let i = sig(pre(0, k));
                let f = sig(pre(1, k));
                let g = pre(2, k).tanh();
                let o = sig(pre(3, k));
                c[k] = f * c[k] + i * g;
                nh[k] = o * c[k].tanh();
            }
            h = nh;
            for k in 0..hs {
                out[[t, k]] = h[k];
            }
        }
        out
    }

    #[test]
    fn forward_matches_gate_equations() {
        let p = params(3, 2, 2, 3, LstmReadout::Mean, 5);
        let x = frames(4, 3, 6);
        let cache = bilstm_forward(x.view(), &p).unwrap();
        let mut input = x.mapv(f64::from);
        for l in 0..2 {
            let f = reference_direction(&p.layers[l][0], &input, false);
            let b = reference_direction(&p.layers[l][1], &input, true);
            let got = cache.layer_states(l);
            for t in 0..4 {
                for k in 0..2 {
                    assert_abs_diff_eq!(got[[t, k]], f[[t, k]], epsilon = 1e-9);
                    assert_abs_diff_eq!(got[[t, 2 + k]], b[[t, k]], epsilon = 1e-9);
                }
            }
            input = ndarray::concatenate(Axis(1), &[f.view(), b.view()]).unwrap();
        }
        let mean = input.mean_axis(Axis(0)).unwrap();
        let logits = p.output_weights.dot(&mean) + &p.output_bias;
        for c in 0..3 {
            assert_abs_diff_eq!(cache.logits[c], logits[c], epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = params(3, 2, 2, 2, LstmReadout::Mean, 7);
        let cache = bilstm_forward(frames(4, 3, 8).view(), &p).unwrap();
        let g = bilstm_backward(&p, &cache, Array1::zeros(2).view()).unwrap();
        assert!(g.tensors().iter().all(|(t, _)| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn mismatched_cache_rejected() {
        let p = params(3, 2, 1, 2, LstmReadout::Mean, 7);
        let q = params(3, 3, 1, 2, LstmReadout::Mean, 7);
        let cache = bilstm_forward(frames(4, 3, 8).view(), &q).unwrap();
        assert!(bilstm_backward(&p, &cache, Array1::zeros(2).view()).is_err());
    }

    #[test]
    fn single_step_matches_cell_gradient() {
        // one layer, T=1: both directions see the same single step from a
        // zero state, so each cell's gradient has no recurrent terms.
        let p = params(3, 2, 1, 2, LstmReadout::Mean, 9);
        let x = frames(1, 3, 10);
        let cache = bilstm_forward(x.view(), &p).unwrap();
        let dz = Array1::from(vec![0.3, -0.8]);
        let g = bilstm_backward(&p, &cache, dz.view()).unwrap();
        let dpooled = p.output_weights.t().dot(&dz);
        let xin: Vec<f64> = x.row(0).iter().map(|&v| v as f64).collect();
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        for dir in 0..2 {
            let cell = &p.layers[0][dir];
            for k in 0..2 {
                let pre = |gate: usize| {
                    let row = gate * 2 + k;
                    cell.bias[row] + (0..3).map(|j| cell.weights[[row, j]] * xin[j]).sum::<f64>()
                };
                let (i, f, gg, o) = (sig(pre(0)), sig(pre(1)), pre(2).tanh(), sig(pre(3)));
                let _ = f; // c_prev = 0, so the forget gate gets no gradient
                let c = i * gg;
                let dh = dpooled[dir * 2 + k];
                let dc = dh * o * (1.0 - c.tanh().powi(2));
                let dzs = [
                    dc * gg * i * (1.0 - i),
                    0.0,
                    dc * i * (1.0 - gg * gg),
                    dh * c.tanh() * o * (1.0 - o),
                ];
                for (gate, &dzg) in dzs.iter().enumerate() {
                    let row = gate * 2 + k;
                    assert_abs_diff_eq!(g.layers[0][dir].bias[row], dzg, epsilon = 1e-12);
                    for j in 0..3 {
                        assert_abs_diff_eq!(
                            g.layers[0][dir].weights[[row, j]],
                            dzg * xin[j],
                            epsilon = 1e-12
                        );
                    }
                    // recurrent weights multiply h_0 = 0
                    for j in 3..5 {
                        assert_eq!(g.layers[0][dir].weights[[row, j]], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn cell_state_is_bounded_by_step_count() {
        for seed in 0..5 {
            let mut p = params(4, 3, 2, 2, LstmReadout::Mean, seed);
            for pair in &mut p.layers {
                for cell in pair.iter_mut() {
                    cell.weights *= 5.0;
                }
            }
            let x = frames(8, 4, 100 + seed) * 4.0;
            let cache = bilstm_forward(x.view(), &p).unwrap();
            for l in 0..2 {
                for dir in 0..2 {
                    let cells = cache.cell_states(l, dir);
                    for t in 0..8 {
                        let steps = if dir == 0 { t + 1 } else { 8 - t };
                        for &c in cells.row(t) {
                            assert!(c.abs() <= steps as f64 + 1e-12);
                        }
                    }
                }
            }
        }
    }
}
