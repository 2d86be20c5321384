//! Echo state network: a fixed random reservoir whose time-averaged state is
//! mapped to class scores by a closed-form ridge readout.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::head::Scorer;
use crate::probe::Example;
use crate::head::Target;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsnConfig {
    pub reservoir_size: usize,
    pub spectral_radius: f64,
    pub input_scaling: f64,
    /// 1.0 means no leaky integration.
    pub leak_rate: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            reservoir_size: 512,
            spectral_radius: 0.9,
            input_scaling: 1.0,
            leak_rate: 1.0,
            ridge_lambda: 1e-2,
            seed: 0,
        }
    }
}

impl EsnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reservoir_size == 0 {
            return Err(Error::InvalidArgument("reservoir size must be positive".into()));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::InvalidArgument("spectral radius must be positive".into()));
        }
        if !(self.input_scaling > 0.0 && self.input_scaling.is_finite()) {
            return Err(Error::InvalidArgument("input scaling must be positive".into()));
        }
        if !(self.leak_rate > 0.0 && self.leak_rate <= 1.0) {
            return Err(Error::InvalidArgument("leak rate must be in (0, 1]".into()));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::InvalidArgument("ridge lambda must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fixed reservoir weights. Never modified after [`esn_init`].
#[derive(Debug, Clone, PartialEq)]
pub struct EsnReservoir {
    /// `N x d`
    pub input_weights: Array2<f64>,
    /// `N x N`
    pub recurrent_weights: Array2<f64>,
    pub leak_rate: f64,
}

impl EsnReservoir {
    pub fn size(&self) -> usize {
        self.recurrent_weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.ncols()
    }
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    dm.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Draws a reservoir from `config.seed`.
///
/// Input weights are standard normal scaled by `input_scaling / sqrt(d)` so
/// pre-activations stay O(1) for unit-variance inputs of any width. The
/// recurrent matrix is standard normal rescaled so that its largest
/// eigenvalue modulus equals `spectral_radius`.
pub fn esn_init(config: &EsnConfig, dim: usize) -> Result<EsnReservoir> {
    config.validate()?;
    if dim == 0 {
        return Err(Error::InvalidArgument("input dimension must be positive".into()));
    }
    let n = config.reservoir_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let in_scale = config.input_scaling / (dim as f64).sqrt();
    let input_weights = Array2::from_shape_fn((n, dim), |_| {
        in_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let mut recurrent_weights =
        Array2::from_shape_fn((n, n), |_| StandardNormal.sample(&mut rng));
    let rho = spectral_radius(&recurrent_weights);
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::IllConditioned(
            "recurrent matrix has zero spectral radius".into(),
        ));
    }
    recurrent_weights *= config.spectral_radius / rho;
    Ok(EsnReservoir {
        input_weights,
        recurrent_weights,
        leak_rate: config.leak_rate,
    })
}

/// All reservoir states, `T x N`, starting from a zero state.
pub fn esn_states(frames: ArrayView2<'_, f32>, reservoir: &EsnReservoir) -> Result<Array2<f64>> {
    if frames.nrows() == 0 {
        return Err(Error::DegenerateInput("sequence has no frames".into()));
    }
    if frames.ncols() != reservoir.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: reservoir.input_dim(),
            found: frames.ncols(),
        });
    }
    let n = reservoir.size();
    let leak = reservoir.leak_rate;
    let mut states = Array2::zeros((frames.nrows(), n));
    let mut h = Array1::<f64>::zeros(n);
    for (t, row) in frames.rows().into_iter().enumerate() {
        let x = row.mapv(f64::from);
        let pre = reservoir.input_weights.dot(&x) + reservoir.recurrent_weights.dot(&h);
        h = h * (1.0 - leak) + pre.mapv(f64::tanh) * leak;
        states.row_mut(t).assign(&h);
    }
    Ok(states)
}

/// Time-mean of the reservoir states.
pub fn esn_run(frames: ArrayView2<'_, f32>, reservoir: &EsnReservoir) -> Result<Array1<f64>> {
    let states = esn_states(frames, reservoir)?;
    Ok(states.mean_axis(ndarray::Axis(0)).expect("T >= 1"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnReadout {
    /// `C x N`
    pub weights: Array2<f64>,
    /// `C`
    pub bias: Array1<f64>,
}

/// Bias-augmented ridge system `(X'X + lambda*I') beta = X'Y`, where `I'`
/// leaves the bias row unpenalized.
fn normal_equations(
    states: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    lambda: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = states.dim();
    let x = DMatrix::from_fn(m, n + 1, |i, j| if j < n { states[[i, j]] } else { 1.0 });
    let y = DMatrix::from_fn(m, targets.ncols(), |i, j| targets[[i, j]]);
    let mut a = x.transpose() * &x;
    for j in 0..n {
        a[(j, j)] += lambda;
    }
    let b = x.transpose() * y;
    (a, b)
}

/// Scaled residual `|A beta - B|_inf / (|A|_inf |beta|_inf + |B|_inf)` of
/// the ridge normal equations for a fitted readout.
pub fn ridge_residual(
    states: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    lambda: f64,
    readout: &EsnReadout,
) -> f64 {
    let (a, b) = normal_equations(states, targets, lambda);
    let n = states.ncols();
    let beta = DMatrix::from_fn(n + 1, targets.ncols(), |i, c| {
        if i < n {
            readout.weights[[c, i]]
        } else {
            readout.bias[c]
        }
    });
    let r = &a * &beta - &b;
    let inf = |m: &DMatrix<f64>| m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    inf(&r) / (inf(&a) * inf(&beta) + inf(&b)).max(f64::MIN_POSITIVE)
}

/// Closed-form ridge readout on time-pooled states.
pub fn esn_fit_readout(
    states: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    lambda: f64,
) -> Result<EsnReadout> {
    let (m, n) = states.dim();
    if m == 0 {
        return Err(Error::DegenerateInput("no training states".into()));
    }
    if targets.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: targets.nrows(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument("ridge lambda must be non-negative".into()));
    }
    let (a, b) = normal_equations(states, targets, lambda);
    let chol = a.clone().cholesky().ok_or_else(|| {
        Error::IllConditioned("normal equations are not positive definite".into())
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v.abs()), hi.max(v.abs())));
    if !(hi > 0.0) || (lo / hi).powi(2) < 1e-13 {
        return Err(Error::IllConditioned(format!(
            "normal equations are numerically singular (pivot ratio {:.3e})",
            (lo / hi).powi(2)
        )));
    }
    let mut beta = chol.solve(&b);
    // one step of iterative refinement
    let r = &b - &a * &beta;
    beta += chol.solve(&r);

    let c = targets.ncols();
    Ok(EsnReadout {
        weights: Array2::from_shape_fn((c, n), |(k, j)| beta[(j, k)]),
        bias: Array1::from_shape_fn(c, |k| beta[(n, k)]),
    })
}

/// Reservoir plus trained readout.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    pub reservoir: EsnReservoir,
    pub readout: EsnReadout,
}

impl Scorer for EsnModel {
    fn num_classes(&self) -> usize {
        self.readout.bias.len()
    }

    fn logits(&self, frames: ArrayView2<'_, f32>) -> Result<Array1<f64>> {
        let state = esn_run(frames, &self.reservoir)?;
        Ok(self.readout.weights.dot(&state) + &self.readout.bias)
    }
}

/// Encodes targets as regression rows: one-hot for classes, 0/1 for
/// multi-label.
pub fn target_matrix(examples: &[Example<'_>], classes: usize) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((examples.len(), classes));
    for (i, e) in examples.iter().enumerate() {
        match &e.target {
            Target::Class(t) if *t < classes => y[[i, *t]] = 1.0,
            Target::Multi(v) if v.len() == classes => y.row_mut(i).assign(v),
            _ => {
                return Err(Error::Validation(
                    "example target does not fit the label space".into(),
                ))
            }
        }
    }
    Ok(y)
}

/// Builds a reservoir for the frame width of `train` and fits the readout.
pub fn train_esn(train: &[Example<'_>], classes: usize, config: &EsnConfig) -> Result<EsnModel> {
    let dim = train
        .first()
        .ok_or_else(|| Error::DegenerateInput("empty train split".into()))?
        .frames
        .ncols();
    let reservoir = esn_init(config, dim)?;
    let mut states = Array2::zeros((train.len(), reservoir.size()));
    for (mut row, e) in states.rows_mut().into_iter().zip(train) {
        row.assign(&esn_run(e.frames, &reservoir)?);
    }
    let targets = target_matrix(train, classes)?;
    let readout = esn_fit_readout(states.view(), targets.view(), config.ridge_lambda)?;
    Ok(EsnModel { reservoir, readout })
}
