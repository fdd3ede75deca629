//! Zero-noise extrapolation by identity-layer folding.
//!
//! Noise is amplified by appending `m` layers that compose to the identity,
//! the observable is measured at each total depth `n + m`, and a fit is
//! extrapolated to zero layers.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{LayerOrder, LayeredCircuit};
use crate::error::{Result, SimError};
use crate::noise::{apply_readout_error, sample_trajectories, NoiseModel};
use crate::pauli::PauliString;
use crate::qstate::{sample_in_basis, Statevector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedCircuit {
    pub base: LayeredCircuit,
    pub m_identity: usize,
}

impl FoldedCircuit {
    /// Base followed by `m` identity-rotation layers.
    pub fn circuit(&self) -> LayeredCircuit {
        let mut c = self.base.clone();
        let mut order = self.base.layout().last().map_or(LayerOrder::Forward, |o| o.flipped());
        let orders: Vec<LayerOrder> = (0..self.m_identity)
            .map(|_| {
                let o = order;
                order = order.flipped();
                o
            })
            .collect();
        c.push_identity_layers(&orders);
        c
    }

    pub fn total_layers(&self) -> usize {
        self.base.n_layers() + self.m_identity
    }
}

/// Appends `m/2` mirrored layer pairs with identity rotations.
pub fn fold(base: &LayeredCircuit, m: usize) -> Result<FoldedCircuit> {
    if m % 2 != 0 {
        return Err(SimError::InvalidArgument(format!("identity layer count must be even, got {m}")));
    }
    Ok(FoldedCircuit { base: base.clone(), m_identity: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtrapolationForm {
    Linear,
    Quadratic,
    /// `a + b·r^x`.
    Exponential,
}

impl ExtrapolationForm {
    pub fn n_params(self) -> usize {
        match self {
            ExtrapolationForm::Linear => 2,
            ExtrapolationForm::Quadratic | ExtrapolationForm::Exponential => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub yerrs: Vec<f64>,
    /// The form actually fitted.
    pub form: ExtrapolationForm,
    /// Linear/quadratic: polynomial coefficients from the constant term up.
    /// Exponential: `[a, b, r]`.
    pub coefficients: Vec<f64>,
    pub zero_noise_value: f64,
    /// Root-mean-square of the unweighted residuals.
    pub fit_residual: f64,
    /// Set when an exponential fit failed and the quadratic form was used.
    pub fell_back: bool,
}

impl ExtrapolationFit {
    pub fn evaluate(&self, x: f64) -> f64 {
        eval_form(self.form, &self.coefficients, x)
    }
}

fn eval_form(form: ExtrapolationForm, c: &[f64], x: f64) -> f64 {
    match form {
        ExtrapolationForm::Exponential => c[0] + c[1] * c[2].powf(x),
        _ => c.iter().rev().fold(0.0, |acc, k| acc * x + k),
    }
}

/// Weighted least squares on the given basis functions. Returns the
/// coefficients and the weighted sum of squared residuals.
fn weighted_ls(columns: &[Vec<f64>], ys: &[f64], weights: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = ys.len();
    let k = columns.len();
    let a = DMatrix::from_fn(n, k, |i, j| columns[j][i] * weights[i].sqrt());
    let b = DVector::from_fn(n, |i, _| ys[i] * weights[i].sqrt());
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= 1e-12 * smax {
        return None;
    }
    let coef = svd.solve(&b, 0.0).ok()?;
    let resid = &a * &coef - b;
    let sse = resid.norm_squared();
    coef.iter().all(|c| c.is_finite()).then(|| (coef.iter().copied().collect(), sse))
}

fn poly_columns(xs: &[f64], degree: usize) -> Vec<Vec<f64>> {
    (0..=degree).map(|d| xs.iter().map(|x| x.powi(d as i32)).collect()).collect()
}

const R_MIN: f64 = 0.05;
const R_MAX: f64 = 0.9995;

fn exponential_fit(xs: &[f64], ys: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let sse_at = |r: f64| {
        let cols = vec![vec![1.0; xs.len()], xs.iter().map(|x| r.powf(*x)).collect()];
        weighted_ls(&cols, ys, w)
    };
    let score = |r: f64| sse_at(r).map_or(f64::INFINITY, |(_, s)| s);

    // Coarse scan, then golden-section refinement around the best grid point.
    let grid: Vec<f64> = (0..=200).map(|i| R_MIN + (R_MAX - R_MIN) * i as f64 / 200.0).collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, score(r)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    if best == 0 || best == grid.len() - 1 {
        return None;
    }
    let (mut lo, mut hi) = (grid[best - 1], grid[best + 1]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = hi - phi * (hi - lo);
        let d = lo + phi * (hi - lo);
        if score(c) <= score(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let r = 0.5 * (lo + hi);
    let (ab, _) = sse_at(r)?;
    Some(vec![ab[0], ab[1], r])
}

/// Fits `ys ± yerrs` against total layer counts `xs` and extrapolates to `x = 0`.
pub fn extrapolate(
    xs: &[f64],
    ys: &[f64],
    yerrs: &[f64],
    form: ExtrapolationForm,
) -> Result<ExtrapolationFit> {
    if xs.len() != ys.len() || xs.len() != yerrs.len() {
        return Err(SimError::DimensionMismatch { expected: xs.len(), got: ys.len().min(yerrs.len()) });
    }
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || xs.len() < form.n_params() + 1 {
        return Err(SimError::FitFailed(format!(
            "{:?} fit needs at least {} points at 3 distinct depths, got {}",
            form,
            form.n_params() + 1,
            xs.len()
        )));
    }
    let weights: Vec<f64> = if yerrs.iter().all(|e| *e > 0.0 && e.is_finite()) {
        yerrs.iter().map(|e| 1.0 / (e * e)).collect()
    } else {
        vec![1.0; xs.len()]
    };

    let poly = |degree: usize| {
        weighted_ls(&poly_columns(xs, degree), ys, &weights)
            .map(|(c, _)| c)
            .ok_or_else(|| SimError::FitFailed("degenerate design matrix".into()))
    };
    let (used, coefficients, fell_back) = match form {
        ExtrapolationForm::Linear => (form, poly(1)?, false),
        ExtrapolationForm::Quadratic => (form, poly(2)?, false),
        ExtrapolationForm::Exponential => match exponential_fit(xs, ys, &weights) {
            Some(c) => (form, c, false),
            None => (ExtrapolationForm::Quadratic, poly(2)?, true),
        },
    };
    let sq: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (eval_form(used, &coefficients, *x) - y).powi(2)).collect();
    let fit_residual = (sq.iter().sum::<f64>() / sq.len() as f64).sqrt();
    Ok(ExtrapolationFit {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        yerrs: yerrs.to_vec(),
        form: used,
        zero_noise_value: eval_form(used, &coefficients, 0.0),
        coefficients,
        fit_residual,
        fell_back,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZneSettings {
    pub m_list: Vec<usize>,
    pub form: ExtrapolationForm,
    pub shots: u64,
    pub trajectories: usize,
}

impl Default for ZneSettings {
    fn default() -> Self {
        Self { m_list: vec![0, 2, 4, 6], form: ExtrapolationForm::Exponential, shots: 20000, trajectories: 1000 }
    }
}

/// Raw (unfolded) and mitigated estimates of one observable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZneResult {
    pub observable: String,
    pub raw: f64,
    pub raw_err: f64,
    pub mitigated: f64,
    pub fit: ExtrapolationFit,
}

/// Shot estimate of a Pauli string's expectation from its own basis setting.
fn shot_estimate(
    states: &[Statevector],
    obs: &PauliString,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(f64, f64)> {
    let record = sample_in_basis(states, &obs.letters, shots, seed)?;
    let record = apply_readout_error(&record, noise);
    let mean = obs.coefficient.re * record.parity_mean(&obs.support());
    let scale = obs.coefficient.norm();
    let err = scale * ((1.0 - (mean / scale.max(1e-300)).powi(2)).max(0.0) / shots as f64).sqrt();
    Ok((mean, err))
}

/// Full pipeline for several observables sharing one set of trajectories per
/// depth: fold, run noisy trajectories, sample each observable's basis with
/// readout error, and extrapolate.
pub fn zne_expectations(
    base: &LayeredCircuit,
    input: &Statevector,
    observables: &[PauliString],
    noise: &NoiseModel,
    settings: &ZneSettings,
    seed: u64,
) -> Result<Vec<ZneResult>> {
    if settings.shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let mut ms = settings.m_list.clone();
    ms.sort_unstable();
    ms.dedup();
    if ms.first() != Some(&0) {
        ms.insert(0, 0);
    }
    for o in observables {
        if !o.is_hermitian() {
            return Err(SimError::NotHermitian);
        }
    }

    // per_depth[i][k] = (mean, err) of observable k at depth m_i.
    let per_depth: Vec<Vec<(f64, f64)>> = ms
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let folded = fold(base, m)?.circuit();
            let model = noise.with_seed(noise.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
            let states = sample_trajectories(&folded.gates(), input, &model, settings.trajectories)?;
            observables
                .iter()
                .enumerate()
                .map(|(k, o)| {
                    let rec_seed = seed ^ ((i as u64) << 32) ^ k as u64;
                    shot_estimate(&states, o, settings.shots, &model, rec_seed)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let xs: Vec<f64> = ms.iter().map(|m| (base.n_layers() + m) as f64).collect();
    observables
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let ys: Vec<f64> = per_depth.iter().map(|d| d[k].0).collect();
            let es: Vec<f64> = per_depth.iter().map(|d| d[k].1).collect();
            let fit = extrapolate(&xs, &ys, &es, settings.form)?;
            Ok(ZneResult { observable: o.to_string(), raw: ys[0], raw_err: es[0], mitigated: fit.zero_noise_value, fit })
        })
        .collect()
}

pub fn zne_expectation(
    base: &LayeredCircuit,
    input: &Statevector,
    observable: &PauliString,
    noise: &NoiseModel,
    settings: &ZneSettings,
    seed: u64,
) -> Result<(f64, ExtrapolationFit)> {
    let mut r = zne_expectations(base, input, std::slice::from_ref(observable), noise, settings, seed)?;
    let r = r.remove(0);
    Ok((r.mitigated, r.fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::density_matrix_reference;
    use crate::pauli::Pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_circuit(n: usize, layers: usize, seed: u64) -> LayeredCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = LayeredCircuit::new(n, layers);
        c.params.iter_mut().for_each(|p| *p = rng.gen_range(-3.0..3.0));
        c
    }

    #[test]
    fn folding_is_noiselessly_invisible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for layers in [1, 2, 3] {
            let base = random_circuit(4, layers, layers as u64);
            let psi = Statevector::random(4, &mut rng);
            let out = base.evaluate(&psi).unwrap();
            assert_eq!(fold(&base, 0).unwrap().circuit(), base);
            for m in [2, 4, 6] {
                let folded = fold(&base, m).unwrap();
                assert_eq!(folded.total_layers(), layers + m);
                let f = folded.circuit().evaluate(&psi).unwrap().inner(&out).unwrap().norm();
                assert!((f - 1.0).abs() < 1e-10);
            }
        }
        assert!(fold(&random_circuit(2, 1, 0), 3).is_err());
    }

    #[test]
    fn folding_degrades_noisy_edge_magnetization() {
        // Two mirrored identity-rotation layers: the noiseless output is |0000>.
        let base = LayeredCircuit::new(4, 2);
        let psi = Statevector::zero(4);
        let model = NoiseModel::new(0.005, 0.0, 0).unwrap();
        let edge = |c: &LayeredCircuit| {
            let rho = density_matrix_reference(c, &psi, &model).unwrap();
            let z = |q| rho.expectation(&PauliString::single(4, q, Pauli::Z).unwrap()).unwrap();
            (z(0) + z(3)) / 2.0
        };
        let v0 = edge(&base);
        let v2 = edge(&fold(&base, 2).unwrap().circuit());
        assert!(v0 < 1.0 - 1e-4);
        assert!(v2 < v0 - 1e-4, "{v2} vs {v0}");
    }

    #[test]
    fn constant_data_extrapolates_to_constant() {
        let xs = [2.0, 4.0, 6.0, 8.0];
        for form in [ExtrapolationForm::Linear, ExtrapolationForm::Quadratic, ExtrapolationForm::Exponential] {
            let fit = extrapolate(&xs, &[0.7; 4], &[0.01; 4], form).unwrap();
            assert!((fit.zero_noise_value - 0.7).abs() < 1e-9, "{form:?}");
            assert!((fit.evaluate(0.0) - fit.zero_noise_value).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_linear_intercept() {
        let xs = [0.0, 2.0, 4.0, 6.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 0.1 * x).collect();
        let fit = extrapolate(&xs, &ys, &[0.0; 4], ExtrapolationForm::Linear).unwrap();
        assert!((fit.zero_noise_value - 1.0).abs() < 1e-9);
        assert!(fit.fit_residual < 1e-12);
    }

    #[test]
    fn exponential_recovers_geometric_decay() {
        let xs = [4.0, 6.0, 8.0, 10.0, 12.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.1 + 0.8 * 0.9f64.powf(*x)).collect();
        let fit = extrapolate(&xs, &ys, &[0.001; 5], ExtrapolationForm::Exponential).unwrap();
        assert!(!fit.fell_back);
        assert!((fit.zero_noise_value - 0.9).abs() < 1e-6, "{}", fit.zero_noise_value);
    }

    #[test]
    fn exponential_falls_back_when_curvature_is_wrong() {
        // Upward-curving growth has no a + b r^x fit with r < 1.
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 1.0, 4.0, 9.0];
        let fit = extrapolate(&xs, &ys, &[0.0; 4], ExtrapolationForm::Exponential).unwrap();
        assert!(fit.fell_back);
        assert_eq!(fit.form, ExtrapolationForm::Quadratic);
        assert!(fit.zero_noise_value.abs() < 1e-9);
    }

    #[test]
    fn too_few_points_is_rejected() {
        assert!(extrapolate(&[0.0, 2.0], &[1.0, 0.9], &[0.0; 2], ExtrapolationForm::Linear).is_err());
        assert!(extrapolate(&[0.0, 2.0, 4.0], &[1.0, 0.9, 0.8], &[0.0; 3], ExtrapolationForm::Quadratic).is_err());
        assert!(extrapolate(&[0.0, 0.0, 0.0, 0.0], &[1.0; 4], &[0.0; 4], ExtrapolationForm::Linear).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let xs = [2.0, 4.0, 6.0, 8.0];
        let ys = [0.8, 0.71, 0.66, 0.58];
        let a = extrapolate(&xs, &ys, &[0.01; 4], ExtrapolationForm::Exponential).unwrap();
        let b = extrapolate(&xs, &ys, &[0.01; 4], ExtrapolationForm::Exponential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_noise_pipeline_matches_raw_within_shot_noise() {
        let base = random_circuit(3, 2, 4);
        let psi = Statevector::zero(3);
        let obs: PauliString = "ZXZ".parse().unwrap();
        let exact = base.evaluate(&psi).unwrap().expectation(&obs).unwrap();
        let settings = ZneSettings { form: ExtrapolationForm::Linear, shots: 20000, trajectories: 4, ..Default::default() };
        let r = zne_expectations(&base, &psi, &[obs], &NoiseModel::noiseless(1), &settings, 5).unwrap();
        let sigma = ((1.0 - exact * exact) / 20000.0).sqrt().max(1e-3);
        assert!((r[0].raw - exact).abs() < 4.0 * sigma);
        assert!((r[0].mitigated - exact).abs() < 12.0 * sigma);
    }
}
