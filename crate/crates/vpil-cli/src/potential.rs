//! The `potential-verify` command: solve `(-Lap) u = e^{-r^2}` along every
//! implemented route and compare against the closed form
//! `u(r) = (1/(2r)) int_0^r e^{-t^2} dt`, reporting worst-case errors.

use serde::Serialize;
use vpil_core::config::parse_potential_config;
use vpil_core::fields::{RadialField, ScalarField3};
use vpil_core::grid::{Grid3, RadialGrid};
use vpil_core::poisson::{
    radial_conservative_potential, radial_potential, ConservativePoisson, SpectralPoisson,
};
use vpil_core::quadrature::gauss_legendre;

use crate::outputs::{load_config, prepare_out_dir, write_json};
use crate::{config_err, runtime_err, Failure, RunArgs};

/// Closed-form potential of the unit Gaussian under the `1/(4 pi |x|)`
/// kernel, by high-order quadrature of the error-function integral.
struct ExactPotential {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ExactPotential {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(64);
        Self { nodes, weights }
    }

    fn value(&self, r: f64) -> f64 {
        if r < 1e-12 {
            return 0.5;
        }
        // int_0^r e^{-t^2} dt with t = r (s + 1) / 2 on s in [-1, 1].
        let half = 0.5 * r;
        let integral: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| {
                let t = half * (s + 1.0);
                w * (-t * t).exp()
            })
            .sum::<f64>()
            * half;
        integral / (2.0 * r)
    }
}

#[derive(Debug, Serialize)]
struct RadialCheck {
    points: usize,
    r_max: f64,
    mass: f64,
    quadrature_vs_exact_max_rel: f64,
    conservative_vs_exact_max_rel: f64,
    routes_max_rel_difference: f64,
}

#[derive(Debug, Serialize)]
struct CartesianCheck {
    points: usize,
    extent_half: f64,
    center_value: f64,
    center_exact: f64,
    spectral_vs_exact_max_rel: f64,
    conservative_vs_exact_max_rel: f64,
    spectral_vs_conservative_max_rel: f64,
}

#[derive(Debug, Serialize)]
struct PotentialVerifyOutput {
    radial: RadialCheck,
    cartesian: CartesianCheck,
}

fn max_rel(diff_iter: impl Iterator<Item = f64>, scale: f64) -> f64 {
    diff_iter.fold(0.0_f64, f64::max) / scale
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let file = load_config(args)?;
    let cfg = parse_potential_config(&file).map_err(config_err)?;
    let out = prepare_out_dir("potential-verify", args, &file)?;
    let exact = ExactPotential::new();
    // Peak of the closed form, used as the relative-error scale.
    let scale = 0.5;

    let r_max = 8.0;
    let radial_grid = RadialGrid::new(r_max, cfg.radial_points).map_err(config_err)?;
    let f_radial = RadialField::from_fn(radial_grid, |r| (-r * r).exp());
    let u_quad = radial_potential(&f_radial).map_err(runtime_err)?;
    let u_cons = radial_conservative_potential(&f_radial).map_err(runtime_err)?;
    let exact_radial: Vec<f64> = (0..radial_grid.len())
        .map(|i| exact.value(radial_grid.node(i)))
        .collect();
    let radial = RadialCheck {
        points: cfg.radial_points,
        r_max,
        mass: f_radial.integral(),
        quadrature_vs_exact_max_rel: max_rel(
            u_quad
                .values()
                .iter()
                .zip(&exact_radial)
                .map(|(&u, &e)| (u - e).abs()),
            scale,
        ),
        conservative_vs_exact_max_rel: max_rel(
            u_cons
                .values()
                .iter()
                .zip(&exact_radial)
                .map(|(&u, &e)| (u - e).abs()),
            scale,
        ),
        routes_max_rel_difference: max_rel(
            u_quad
                .values()
                .iter()
                .zip(u_cons.values())
                .map(|(&a, &b)| (a - b).abs()),
            scale,
        ),
    };

    let extent_half = 6.0;
    let cube = Grid3::new(extent_half, cfg.cube_points).map_err(config_err)?;
    let f_cube = ScalarField3::from_fn(cube, |x| {
        (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
    });
    let u_spec = SpectralPoisson::new(cube)
        .potential(&f_cube)
        .map_err(runtime_err)?;
    let u_cons3 = ConservativePoisson::new(cube)
        .solve(&f_cube)
        .map_err(runtime_err)?;
    let n = cube.points_per_axis();
    let mut exact_cube = vec![0.0; cube.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = cube.position(i, j, k);
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                exact_cube[(i * n + j) * n + k] = exact.value(r);
            }
        }
    }
    let center = (n / 2 * n + n / 2) * n + n / 2;
    let cartesian = CartesianCheck {
        points: cfg.cube_points,
        extent_half,
        center_value: u_spec.values()[center],
        center_exact: exact_cube[center],
        spectral_vs_exact_max_rel: max_rel(
            u_spec
                .values()
                .iter()
                .zip(&exact_cube)
                .map(|(&u, &e)| (u - e).abs()),
            scale,
        ),
        conservative_vs_exact_max_rel: max_rel(
            u_cons3
                .values()
                .iter()
                .zip(&exact_cube)
                .map(|(&u, &e)| (u - e).abs()),
            scale,
        ),
        spectral_vs_conservative_max_rel: max_rel(
            u_spec
                .values()
                .iter()
                .zip(u_cons3.values())
                .map(|(&a, &b)| (a - b).abs()),
            scale,
        ),
    };

    write_json(
        &out.join("potential_verify.json"),
        &PotentialVerifyOutput { radial, cartesian },
    )
}
