use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;
use sptforge_core::model::quench_propagator;
use sptforge_core::observables::{edge_bulk_average, magnetization_profile, quench_edge_bulk};
use sptforge_core::zne::ZneResult;
use sptforge_core::Statevector;

use super::edge::z_observables;
use crate::config::{ExperimentConfig, Mode};
use crate::pipeline::{derive_seed, hamiltonian, prepare_unitary, CompileRecord};

/// Noiseless edge magnetization the quench is expected to stay above.
pub const EDGE_FLOOR: f64 = 0.6;

#[derive(Debug, Clone, Serialize)]
pub struct QuenchRow {
    pub t: f64,
    pub exact_edge: f64,
    pub exact_bulk: f64,
    pub noiseless_edge: Option<f64>,
    pub noiseless_bulk: Option<f64>,
    pub raw_edge: Option<f64>,
    pub raw_bulk: Option<f64>,
    pub mitigated_edge: Option<f64>,
    pub mitigated_bulk: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnSummary {
    pub column: String,
    pub min_edge: f64,
    pub max_abs_bulk: f64,
    pub edge_above_floor: bool,
}

#[derive(Debug, Clone)]
pub struct QuenchRun {
    pub rows: Vec<QuenchRow>,
    pub compiles: Vec<CompileRecord>,
    pub fits: Vec<ZneResult>,
}

impl QuenchRun {
    pub fn summary(&self) -> Vec<ColumnSummary> {
        type Pick = fn(&QuenchRow) -> Option<(f64, f64)>;
        let columns: [(&str, Pick); 4] = [
            ("exact", |r| Some((r.exact_edge, r.exact_bulk))),
            ("noiseless", |r| Some((r.noiseless_edge?, r.noiseless_bulk?))),
            ("raw", |r| Some((r.raw_edge?, r.raw_bulk?))),
            ("mitigated", |r| Some((r.mitigated_edge?, r.mitigated_bulk?))),
        ];
        columns
            .iter()
            .filter_map(|(name, pick)| {
                let vals: Vec<(f64, f64)> = self.rows.iter().map(pick).collect::<Option<_>>()?;
                let min_edge = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
                let max_abs_bulk = vals.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
                Some(ColumnSummary { column: name.to_string(), min_edge, max_abs_bulk, edge_above_floor: min_edge > EDGE_FLOOR })
            })
            .collect()
    }
}

/// `⟨Z_edge(t)⟩`, `⟨Z_bulk(t)⟩` after `e^{−itH}` on a product state. Circuit
/// modes compile a fresh ansatz for the evolved state at every `t`.
pub fn quench(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<QuenchRun> {
    let m = &cfg.model;
    if cfg.quench.bitstring.len() != m.l {
        bail!("quench bitstring {:?} does not match L = {}", cfg.quench.bitstring, m.l);
    }
    let ham = hamiltonian(m.j, m.h, m.g, m.l)?;
    let ts = cfg.ts();
    let trace = quench_edge_bulk(&ham, &cfg.quench.bitstring, &ts)?;
    let mut rows: Vec<QuenchRow> = ts
        .iter()
        .enumerate()
        .map(|(k, &t)| QuenchRow {
            t,
            exact_edge: trace.edge[k],
            exact_bulk: trace.bulk[k],
            noiseless_edge: None,
            noiseless_bulk: None,
            raw_edge: None,
            raw_bulk: None,
            mitigated_edge: None,
            mitigated_bulk: None,
        })
        .collect();
    if mode == Mode::Exact {
        return Ok(QuenchRun { rows, compiles: Vec::new(), fits: Vec::new() });
    }

    let input = Statevector::from_bitstring(&cfg.quench.bitstring)?;
    let obs = z_observables(m.l)?;
    let per_t: Vec<(CompileRecord, Vec<ZneResult>, (f64, f64))> = ts
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let s = derive_seed(seed, k as u64);
            let u = quench_propagator(&ham, t)?;
            let prep = prepare_unitary(&u, &input, cfg, s, format!("t={t}"))?;
            let noiseless = edge_bulk_average(&magnetization_profile(&prep.output));
            let fits = if mode == Mode::Noisy { prep.mitigate(&obs, cfg, s)? } else { Vec::new() };
            Ok((prep.record, fits, noiseless))
        })
        .collect::<Result<_>>()?;

    let mut compiles = Vec::with_capacity(per_t.len());
    let mut all_fits = Vec::new();
    for (row, (record, fits, (edge, bulk))) in rows.iter_mut().zip(per_t) {
        row.noiseless_edge = Some(edge);
        row.noiseless_bulk = Some(bulk);
        if !fits.is_empty() {
            let raw: Vec<f64> = fits.iter().map(|f| f.raw).collect();
            let mit: Vec<f64> = fits.iter().map(|f| f.mitigated).collect();
            let (re, rb) = edge_bulk_average(&raw);
            let (me, mb) = edge_bulk_average(&mit);
            row.raw_edge = Some(re);
            row.raw_bulk = Some(rb);
            row.mitigated_edge = Some(me);
            row.mitigated_bulk = Some(mb);
        }
        compiles.push(record);
        all_fits.extend(fits);
    }
    Ok(QuenchRun { rows, compiles, fits: all_fits })
}
