//! Figure-data experiments. Each computes its columns up to the requested
//! mode and returns plain rows; [`run`] writes them out.

pub mod edge;
pub mod quench;
pub mod renyi;
pub mod strings;
pub mod tomography;

use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, Mode};
use crate::output::{RunManifest, RunWriter};

#[derive(Serialize)]
struct PhaseRow {
    j_tilde: f64,
    h_tilde: f64,
    g_tilde: f64,
    exact: f64,
    noiseless: Option<f64>,
    raw: Option<f64>,
    raw_err: Option<f64>,
    mitigated: Option<f64>,
}

#[derive(Serialize)]
struct SweepRow {
    g: f64,
    exact: f64,
    noiseless: Option<f64>,
    raw: Option<f64>,
    raw_err: Option<f64>,
    mitigated: Option<f64>,
}

/// Runs `experiment` and writes its figure data plus `manifest.json` to `out`.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig, mode: Mode, seed: u64, out: &Path) -> Result<RunManifest> {
    let mut w = RunWriter::create(out)?;
    match experiment {
        Experiment::PhaseDiagram | Experiment::StringSweep => {
            let run = w.time("compute", || match experiment {
                Experiment::PhaseDiagram => strings::phase_diagram(cfg, mode, seed),
                _ => strings::string_sweep(cfg, mode, seed),
            })?;
            if experiment == Experiment::PhaseDiagram {
                let rows: Vec<PhaseRow> = run
                    .points
                    .iter()
                    .map(|p| PhaseRow {
                        j_tilde: p.j,
                        h_tilde: p.h,
                        g_tilde: p.g,
                        exact: p.exact,
                        noiseless: p.noiseless,
                        raw: p.raw,
                        raw_err: p.raw_err,
                        mitigated: p.mitigated,
                    })
                    .collect();
                w.csv("phase_diagram.csv", &rows)?;
            } else {
                let rows: Vec<SweepRow> = run
                    .points
                    .iter()
                    .map(|p| SweepRow {
                        g: p.g,
                        exact: p.exact,
                        noiseless: p.noiseless,
                        raw: p.raw,
                        raw_err: p.raw_err,
                        mitigated: p.mitigated,
                    })
                    .collect();
                w.csv("string_sweep.csv", &rows)?;
                w.json("summary.json", &strings::summarize(&run.points))?;
            }
            write_optional(&mut w, "circuits.json", &run.compiles)?;
            write_optional(&mut w, "zne_fits.json", &run.fits)?;
        }
        Experiment::EdgeProfile => {
            let run = w.time("compute", || edge::edge_profile(cfg, mode, seed))?;
            w.csv("edge_profile.csv", &run.rows)?;
            let margins: Vec<(&str, f64)> = [
                ("exact", run.column(|r| Some(r.exact))),
                ("noiseless", run.column(|r| r.noiseless)),
                ("raw", run.column(|r| r.raw)),
                ("mitigated", run.column(|r| r.mitigated)),
            ]
            .into_iter()
            .filter_map(|(name, col)| Some((name, edge::edge_margin(&col?))))
            .collect();
            w.json("summary.json", &serde_json::json!({ "edge_margin": margins }))?;
            write_optional(&mut w, "circuits.json", &run.compile.into_iter().collect::<Vec<_>>())?;
            write_optional(&mut w, "zne_fits.json", &run.fits)?;
        }
        Experiment::Quench => {
            let run = w.time("compute", || quench::quench(cfg, mode, seed))?;
            w.csv("quench.csv", &run.rows)?;
            let summary = run.summary();
            for s in &summary {
                if s.column != "exact" && !s.edge_above_floor {
                    eprintln!("warning: {} edge magnetization dips to {:.4} (floor {})", s.column, s.min_edge, quench::EDGE_FLOOR);
                }
            }
            w.json("summary.json", &summary)?;
            write_optional(&mut w, "circuits.json", &run.compiles)?;
            write_optional(&mut w, "zne_fits.json", &run.fits)?;
        }
        Experiment::Renyi => {
            let run = w.time("compute", || renyi::renyi(cfg, mode, seed))?;
            w.csv("renyi.csv", &run.rows)?;
            write_optional(&mut w, "circuits.json", &run.compile.into_iter().collect::<Vec<_>>())?;
            write_optional(&mut w, "zne_fits.json", &run.fits)?;
        }
        Experiment::Tomography => {
            let run = w.time("compute", || tomography::tomography(cfg, mode, seed))?;
            w.csv("spectrum.csv", &run.spectrum_rows())?;
            w.json("reconstructions.json", &run.reconstructions)?;
            let records: Vec<_> = run
                .reconstructions
                .iter()
                .filter(|r| !r.records.is_empty())
                .map(|r| serde_json::json!({ "source": r.source, "shots_per_basis": r.shots_per_basis, "records": r.records }))
                .collect();
            write_optional(&mut w, "measurement_records.json", &records)?;
            write_optional(&mut w, "circuits.json", &run.compile.into_iter().collect::<Vec<_>>())?;
        }
        Experiment::Verify => bail!("verify is not a figure experiment"),
    }
    w.finish(experiment, mode, seed, cfg)
}

fn write_optional<T: Serialize>(w: &mut RunWriter, name: &str, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Ok(());
    }
    w.json(name, &items)
}
