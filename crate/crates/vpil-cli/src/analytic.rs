//! The `criterion` command: evaluate the configured analytic sections and
//! write `criterion.json`.

use serde::Serialize;
use vpil_core::config::parse_criterion_config;
use vpil_core::criterion::{
    cubic_bound, existence_time_bound, phi_iterate, phi_threshold_and_roots, CriterionReport,
    PhiRoots,
};

use crate::outputs::{load_config, prepare_out_dir, write_json};
use crate::{config_err, runtime_err, Failure, RunArgs};

#[derive(Debug, Serialize)]
struct PhiOutput {
    c: f64,
    a: f64,
    threshold: f64,
    roots: PhiRoots,
    s0: f64,
    classification: String,
    iterates: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ExistenceOutput {
    norm_c2: f64,
    big_m: f64,
    m: f64,
    time_bound: Option<f64>,
    c_of_m: f64,
}

#[derive(Debug, Serialize)]
struct CriterionOutput {
    cubic: Option<CriterionReport>,
    phi: Option<PhiOutput>,
    existence: Option<ExistenceOutput>,
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let file = load_config(args)?;
    let cfg = parse_criterion_config(&file).map_err(config_err)?;
    let out = prepare_out_dir("criterion", args, &file)?;

    let mut output = CriterionOutput {
        cubic: None,
        phi: None,
        existence: None,
    };
    if let Some(section) = &cfg.cubic {
        let report = cubic_bound(&section.input, section.condition.as_ref()).map_err(runtime_err)?;
        output.cubic = Some(report);
    }
    if let Some(section) = &cfg.phi {
        let (threshold, roots) = phi_threshold_and_roots(&section.params);
        let (iterates, classification) =
            phi_iterate(&section.params, section.s0, section.iterations).map_err(runtime_err)?;
        output.phi = Some(PhiOutput {
            c: section.params.c,
            a: section.params.a,
            threshold,
            roots,
            s0: section.s0,
            classification: classification.as_str().to_string(),
            iterates,
        });
    }
    if let Some(section) = &cfg.existence {
        let (time_bound, c_of_m) =
            existence_time_bound(section.norm, section.big_m, section.m).map_err(runtime_err)?;
        output.existence = Some(ExistenceOutput {
            norm_c2: section.norm,
            big_m: section.big_m,
            m: section.m,
            time_bound,
            c_of_m,
        });
    }
    write_json(&out.join("criterion.json"), &output)
}
