//! The `simulate` command: phase-space or space-homogeneous runs with
//! diagnostics rows and binary snapshots at configured cadences.

use std::path::{Path, PathBuf};

use vpil_core::config::{parse_sim_config, HomogeneousRunConfig, SimConfig, VpilRunConfig};
use vpil_core::diagnostics::{
    csv_row, measure_radial, DiagnosticsEngine, MeasureSettings, CSV_HEADER,
};
use vpil_core::sim::{run_homogeneous, KineticRun, KineticState, RadialState};
use vpil_core::snapshot::{write_phase_snapshot, write_radial_snapshot};
use vpil_core::VpilError;

use crate::outputs::{load_config, prepare_out_dir, CsvSink};
use crate::{config_err, runtime_err, Failure, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let file = load_config(args)?;
    let cfg = parse_sim_config(&file).map_err(config_err)?;
    let out = prepare_out_dir("simulate", args, &file)?;
    match cfg {
        SimConfig::Vpil(c) => run_vpil(&c, &out),
        SimConfig::Homogeneous(c) => run_radial(&c, &out),
    }
}

/// Steps needed to reach `t_end`; zero horizon means record the initial
/// state and stop.
fn step_count(t_end: f64, dt: f64) -> u64 {
    if t_end <= 0.0 {
        0
    } else {
        (t_end / dt - 1e-9).ceil().max(1.0) as u64
    }
}

fn due(step: u64, every: usize, last: u64) -> bool {
    every > 0 && (step % every as u64 == 0 || step == last)
}

fn snapshot_dir(out: &Path, every: usize) -> Result<Option<PathBuf>, Failure> {
    if every == 0 {
        return Ok(None);
    }
    let dir = out.join("snapshots");
    std::fs::create_dir_all(&dir).map_err(runtime_err)?;
    Ok(Some(dir))
}

fn run_vpil(cfg: &VpilRunConfig, out: &Path) -> Result<(), Failure> {
    let grid = cfg.grid().map_err(config_err)?;
    let settings = MeasureSettings {
        sign: cfg.sign,
        collisions_enabled: cfg.collisions_enabled,
        field_enabled: cfg.field_enabled,
        variant: cfg.collision.variant,
    };
    let mut runner = KineticRun::new(grid, cfg.kinetic_params()).map_err(config_err)?;
    let mut state = KineticState::new(cfg.initial_state().map_err(config_err)?);
    let mut engine = DiagnosticsEngine::new(grid);
    let mut sink = CsvSink::create(&out.join("diagnostics.csv"), CSV_HEADER)?;
    let snap_dir = snapshot_dir(out, cfg.snapshot_every)?;
    let steps = step_count(cfg.t_end, cfg.dt);

    let result = runner.run(&mut state, steps, |st| {
        if due(st.step_index, cfg.diagnostics_every, steps) {
            let record = engine.measure(&st.f, st.t, st.clipped_mass_total, &settings)?;
            sink.row(&csv_row(&record)).map_err(VpilError::from)?;
        }
        if let Some(dir) = &snap_dir {
            if due(st.step_index, cfg.snapshot_every, steps) {
                let path = dir.join(format!("step_{}.bin", st.step_index));
                write_phase_snapshot(&path, st, cfg.sign)?;
            }
        }
        Ok(())
    });
    sink.flush()?;
    result.map_err(runtime_err)
}

fn run_radial(cfg: &HomogeneousRunConfig, out: &Path) -> Result<(), Failure> {
    let mut state = RadialState::new(cfg.initial_profile().map_err(config_err)?);
    let mut sink = CsvSink::create(&out.join("diagnostics.csv"), CSV_HEADER)?;
    let snap_dir = snapshot_dir(out, cfg.snapshot_every)?;
    let steps = step_count(cfg.t_end, cfg.dt);
    let variant = cfg.collision.variant;

    let result = run_homogeneous(&mut state, cfg.dt, steps, &cfg.collision, |st| {
        if due(st.step_index, cfg.diagnostics_every, steps) {
            let record = measure_radial(&st.f, st.t, st.clipped_mass_total, variant)?;
            sink.row(&csv_row(&record)).map_err(VpilError::from)?;
        }
        if let Some(dir) = &snap_dir {
            if due(st.step_index, cfg.snapshot_every, steps) {
                let path = dir.join(format!("step_{}.bin", st.step_index));
                // Radial runs have no field; the sign tag is a placeholder.
                write_radial_snapshot(&path, st, vpil_core::InteractionSign::Gravitational)?;
            }
        }
        Ok(())
    });
    sink.flush()?;
    result.map_err(runtime_err)
}
