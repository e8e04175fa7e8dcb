//! The `iterate` command: run the linearized fixed-point iteration and write
//! one JSON report per iterate plus a summary of the bound data.

use serde::Serialize;
use vpil_core::config::{parse_iterate_config, IterateAmplitude};
use vpil_core::linear::{picard_sequence, smallness_threshold};
use vpil_core::weights::weighted_c2_norm;
use vpil_core::{VpilError, WeightParams};

use crate::outputs::{load_config, prepare_out_dir, write_json, JsonlSink};
use crate::{config_err, runtime_err, Failure, RunArgs};

#[derive(Debug, Serialize)]
struct IterateSummary {
    iterates: usize,
    amplitude: f64,
    norm_c2: f64,
    smallness_threshold: f64,
    s_large: f64,
    all_bounds_satisfied: bool,
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let file = load_config(args)?;
    let cfg = parse_iterate_config(&file).map_err(config_err)?;
    let out = prepare_out_dir("iterate", args, &file)?;
    let lin = cfg.linear_config().map_err(config_err)?;

    let mut f_init = cfg.unit_profile().map_err(config_err)?;
    let amplitude = match cfg.amplitude {
        IterateAmplitude::Fixed(a) => a,
        IterateAmplitude::ThresholdFraction(frac) => {
            let weight = WeightParams::new(lin.m, lin.t_horizon, 1.0).map_err(config_err)?;
            let unit_norm = weighted_c2_norm(&f_init, &weight).map_err(config_err)?;
            if unit_norm == 0.0 {
                0.0
            } else {
                frac * smallness_threshold(&lin) / unit_norm
            }
        }
    };
    for v in f_init.values_mut() {
        *v *= amplitude;
    }

    // The (empty) report file exists before the run starts, so an aborted
    // run still leaves a schema-valid output set behind.
    let mut sink = JsonlSink::create(&out.join("iterates.jsonl"))?;
    sink.flush()?;
    let outcome = picard_sequence(&f_init, cfg.count, cfg.dt_max, cfg.store_every, &lin)
        .map_err(|e| match e {
            // Data that violates the smallness requirement is a
            // configuration problem, not a mid-run abort.
            VpilError::InvalidParameter(msg) => Failure::Config(msg),
            other => runtime_err(other),
        })?;
    for report in &outcome.reports {
        sink.line(report)?;
    }
    sink.flush()?;
    write_json(
        &out.join("iterate_summary.json"),
        &IterateSummary {
            iterates: outcome.reports.len(),
            amplitude,
            norm_c2: outcome.norm_c2,
            smallness_threshold: outcome.smallness_threshold,
            s_large: outcome.s_large,
            all_bounds_satisfied: outcome.reports.iter().all(|r| r.bound_satisfied),
        },
    )
}
