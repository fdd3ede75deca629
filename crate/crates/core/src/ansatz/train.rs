use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{params_per_layer, LayerOrder, LayeredCircuit, Objective};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Iteration budget per restart.
    pub max_iters: usize,
    pub restarts: usize,
    /// Cost below which a restart counts as converged.
    pub tol: f64,
    pub seed: u64,
    /// Half-width of the uniform initialization around the identity rotation.
    pub init_scale: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// Use the circuit's current parameters as the starting point of restart 0.
    pub warm_start: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { max_iters: 500, restarts: 8, tol: 1e-3, seed: 0, init_scale: 0.1, memory: 10, warm_start: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub final_cost: f64,
    pub iterations: usize,
    pub cost_history: Vec<f64>,
    pub seed: u64,
    pub restart: usize,
    pub converged: bool,
}

impl TrainingReport {
    /// Picks the better of two reports: converged beats non-converged, then
    /// fewer iterations among converged, lower cost otherwise. Restart index
    /// breaks the remaining ties so the merge is associative.
    pub fn better(self, other: Self) -> Self {
        let key = |r: &Self| {
            if r.converged {
                (0, r.iterations as f64, r.restart)
            } else {
                (1, r.final_cost, r.restart)
            }
        };
        let (a, b) = (key(&self), key(&other));
        let self_wins = match a.0.cmp(&b.0) {
            std::cmp::Ordering::Equal => match a.1.total_cmp(&b.1) {
                std::cmp::Ordering::Equal => a.2 <= b.2,
                o => o.is_lt(),
            },
            o => o.is_lt(),
        };
        if self_wins {
            self
        } else {
            other
        }
    }
}

/// Multi-start L-BFGS on the exact simulated cost.
pub fn train(
    circuit: &LayeredCircuit,
    objective: &Objective,
    opts: &TrainOptions,
) -> Result<(LayeredCircuit, TrainingReport)> {
    if opts.max_iters == 0 {
        return Err(SimError::InvalidArgument("training budget must be positive".into()));
    }
    if opts.restarts == 0 {
        return Err(SimError::InvalidArgument("at least one restart is required".into()));
    }
    if objective.n_qubits() != circuit.n_qubits() {
        return Err(SimError::DimensionMismatch { expected: circuit.n_qubits(), got: objective.n_qubits() });
    }

    let runs: Vec<(Vec<f64>, TrainingReport)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 && opts.warm_start {
                circuit.params.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(r as u64);
                (0..circuit.n_params()).map(|_| rng.gen_range(-opts.init_scale..=opts.init_scale)).collect()
            };
            let (params, mut report) = lbfgs(circuit, objective, start, opts)?;
            report.restart = r;
            Ok((params, report))
        })
        .collect::<Result<_>>()?;

    let best = runs
        .iter()
        .map(|(_, r)| r.clone())
        .reduce(TrainingReport::better)
        .expect("restarts > 0");
    let params = runs[best.restart].0.clone();
    let trained = LayeredCircuit::from_parts(circuit.n_qubits(), circuit.layout().to_vec(), params)?;
    Ok((trained, best))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lbfgs(
    circuit: &LayeredCircuit,
    objective: &Objective,
    mut x: Vec<f64>,
    opts: &TrainOptions,
) -> Result<(Vec<f64>, TrainingReport)> {
    let (mut f, mut g) = objective.cost_and_gradient_at(circuit, &x)?;
    let mut history = vec![f];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;

    while iterations < opts.max_iters && f >= opts.tol {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-14 {
            break;
        }

        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        } else {
            q.iter_mut().for_each(|qi| *qi /= gnorm.max(1.0));
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }

        // Armijo backtracking.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = objective.cost_and_gradient_at(circuit, &trial)?;
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else { break };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == opts.memory.max(1) {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        let progress = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        history.push(f);
        if progress.abs() < 1e-15 {
            break;
        }
    }

    let report = TrainingReport {
        final_cost: f,
        iterations,
        cost_history: history,
        seed: opts.seed,
        restart: 0,
        converged: f < opts.tol,
    };
    Ok((x, report))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompileOptions {
    pub start_layers: usize,
    pub max_layers: usize,
    pub train: TrainOptions,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { start_layers: 2, max_layers: 12, train: TrainOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledCircuit {
    pub circuit: LayeredCircuit,
    pub report: TrainingReport,
    /// `(n_layers, best cost)` for every depth attempted.
    pub attempts: Vec<(usize, f64)>,
}

impl CompiledCircuit {
    pub fn converged(&self) -> bool {
        self.report.converged
    }
}

/// Grows the layer count from `start_layers`, doubling up to `max_layers`,
/// until the cost drops below the tolerance. Each depth is warm-started from
/// the previous optimum padded with identity layers, so the best cost never
/// increases with depth.
pub fn compile(n_qubits: usize, objective: &Objective, opts: &CompileOptions) -> Result<CompiledCircuit> {
    if opts.start_layers == 0 || opts.max_layers < opts.start_layers {
        return Err(SimError::InvalidArgument(format!(
            "invalid layer range {}..={}",
            opts.start_layers, opts.max_layers
        )));
    }
    let mut attempts = Vec::new();
    let mut previous: Option<LayeredCircuit> = None;
    let mut layers = opts.start_layers;
    loop {
        let (start, warm) = match &previous {
            Some(prev) => {
                let mut c = prev.clone();
                let orders: Vec<LayerOrder> = (prev.n_layers()..layers)
                    .map(|k| if k % 2 == 0 { LayerOrder::Forward } else { LayerOrder::Mirrored })
                    .collect();
                c.push_identity_layers(&orders);
                debug_assert_eq!(c.n_params(), layers * params_per_layer(n_qubits));
                (c, true)
            }
            None => (LayeredCircuit::new(n_qubits, layers), false),
        };
        let train_opts = TrainOptions { warm_start: warm || opts.train.warm_start, ..opts.train.clone() };
        let (trained, report) = train(&start, objective, &train_opts)?;
        attempts.push((layers, report.final_cost));
        if report.converged || layers >= opts.max_layers {
            return Ok(CompiledCircuit { circuit: trained, report, attempts });
        }
        previous = Some(trained);
        layers = (layers * 2).min(opts.max_layers);
    }
}
