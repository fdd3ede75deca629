use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;
use sptforge_core::observables::string_order_operator;
use sptforge_core::zne::ZneResult;

use crate::config::{ExperimentConfig, Mode};
use crate::pipeline::{derive_seed, ground_average, ground_space, hamiltonian, prepare_ground, CompileRecord};

/// `⟨O_str(L)⟩` at one parameter point in every computed mode.
#[derive(Debug, Clone, Serialize)]
pub struct StringPoint {
    pub j: f64,
    pub h: f64,
    pub g: f64,
    pub exact: f64,
    pub noiseless: Option<f64>,
    pub raw: Option<f64>,
    pub raw_err: Option<f64>,
    pub mitigated: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct StringRun {
    pub points: Vec<StringPoint>,
    pub compiles: Vec<CompileRecord>,
    pub fits: Vec<ZneResult>,
}

type PointOutput = (StringPoint, Option<CompileRecord>, Option<ZneResult>);

fn evaluate_point(j: f64, h: f64, g: f64, cfg: &ExperimentConfig, mode: Mode, seed: u64, label: String) -> Result<PointOutput> {
    let l = cfg.model.l;
    let ham = hamiltonian(j, h, g, l)?;
    let op = string_order_operator(l, l)?;
    let exact = ground_average(&ground_space(&ham, &cfg.preparation)?, std::slice::from_ref(&op))?[0];
    let mut point = StringPoint { j, h, g, exact, noiseless: None, raw: None, raw_err: None, mitigated: None };
    if mode == Mode::Exact {
        return Ok((point, None, None));
    }
    let prep = prepare_ground(&ham, cfg, seed, label)?;
    point.noiseless = Some(prep.output.expectation(&op)?);
    let mut fit = None;
    if mode == Mode::Noisy {
        let z = prep.mitigate(std::slice::from_ref(&op), cfg, seed)?.remove(0);
        point.raw = Some(z.raw);
        point.raw_err = Some(z.raw_err);
        point.mitigated = Some(z.mitigated);
        fit = Some(z);
    }
    Ok((point, Some(prep.record), fit))
}

fn run_points(params: Vec<(f64, f64, f64)>, cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<StringRun> {
    let outputs: Vec<PointOutput> = params
        .par_iter()
        .enumerate()
        .map(|(k, &(j, h, g))| evaluate_point(j, h, g, cfg, mode, derive_seed(seed, k as u64), format!("J={j} h={h} g={g}")))
        .collect::<Result<_>>()?;
    let mut run = StringRun::default();
    for (p, c, f) in outputs {
        run.points.push(p);
        run.compiles.extend(c);
        run.fits.extend(f);
    }
    Ok(run)
}

/// Normalized `(J̃, h̃, g̃)` on a triangular grid with `n` points per edge.
pub fn simplex_grid(n: usize) -> Result<Vec<(f64, f64, f64)>> {
    if n < 3 {
        bail!("simplex grid needs at least 3 points per edge, got {n}");
    }
    let d = (n - 1) as f64;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in 0..n - a {
            let c = n - 1 - a - b;
            out.push((a as f64 / d, b as f64 / d, c as f64 / d));
        }
    }
    Ok(out)
}

pub fn phase_diagram(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<StringRun> {
    run_points(simplex_grid(cfg.grid_points)?, cfg, mode, seed)
}

pub fn string_sweep(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<StringRun> {
    if cfg.g_list.is_empty() {
        bail!("g_list is empty");
    }
    let params = cfg.g_list.iter().map(|&g| (cfg.model.j, cfg.model.h, g)).collect();
    run_points(params, cfg, mode, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    /// Exact column non-decreasing along the configured g order.
    pub exact_monotone: bool,
    /// Share of points where the mitigated value is closer to exact than the raw one.
    pub mitigated_closer_fraction: Option<f64>,
    pub max_noiseless_deviation: Option<f64>,
}

pub fn summarize(points: &[StringPoint]) -> SweepSummary {
    let exact_monotone = points.windows(2).all(|w| w[1].exact >= w[0].exact - 1e-9);
    let pairs: Vec<(f64, f64, f64)> = points.iter().filter_map(|p| Some((p.exact, p.raw?, p.mitigated?))).collect();
    let mitigated_closer_fraction = (!pairs.is_empty())
        .then(|| pairs.iter().filter(|(e, r, m)| (m - e).abs() < (r - e).abs()).count() as f64 / pairs.len() as f64);
    let max_noiseless_deviation = points
        .iter()
        .map(|p| p.noiseless.map(|n| (n - p.exact).abs()))
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    SweepSummary { exact_monotone, mitigated_closer_fraction, max_noiseless_deviation }
}
