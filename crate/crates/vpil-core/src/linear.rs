//! The constructive linearized scheme: coefficients of the localized linear
//! operator, its mollified source, an explicit forward-in-time solver, and
//! the Picard sequence f^0 = 0, f^1, f^2, ... with weighted-norm bound
//! checks.
//!
//! The continuous operator applied to f is
//!
//! ```text
//!   -eps_a Lap_{x,v} f + chi(eps v)v . grad_x f
//!     + J^eps(t) chi(eps x) E_g . grad_v f
//!     - (-Lap_v)^{-1}_eps g  Lap_v f - g f
//! ```
//!
//! and the forced equation is  d_t f = -(operator f) + (operator f_init) I^eps(t).
//! The discrete source reuses the exact stencil code of the operator, so on
//! the startup plateau (I^eps = 1) the state f = f_init is preserved to
//! rounding: the two evaluations cancel term by term.

use serde::{Deserialize, Serialize};

use crate::collision::{PotentialVariant, VelocitySolvers};
use crate::criterion::{phi_iterate, s_large_bound, PhiParams, DEFAULT_S_LARGE_C0};
use crate::error::{Result, VpilError};
use crate::fields::{
    mass_density, self_consistent_field, InteractionSign, PhaseField, ScalarField3, VectorField3,
};
use crate::grid::{PhaseGrid, WeightParams};
use crate::poisson::SpectralPoisson;
use crate::weights::{
    bracket_scalar, cutoff_chi, startup_indicator, time_cutoff_j, weighted_c2_norm, weighted_sup,
};

/// Allowed overshoot of the measured weighted norm over the Phi-chain bound,
/// covering discretization of the sup.
pub const BOUND_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub struct LinearConfig {
    pub sign: InteractionSign,
    /// Weight exponent m > 3 of the decay class.
    pub m: f64,
    /// Time horizon T of the solve.
    pub t_horizon: f64,
    /// Startup-window exponent: the source stays on until ~2 eps^kappa.
    pub kappa: f64,
    /// Comparison-principle constant M(m); a calibration input, not derived.
    pub big_m: f64,
    pub variant: PotentialVariant,
    /// Fraction of the explicit stability bound the solver is allowed.
    pub cfl_safety: f64,
}

impl LinearConfig {
    pub fn new(sign: InteractionSign, m: f64, t_horizon: f64) -> Result<Self> {
        let cfg = Self {
            sign,
            m,
            t_horizon,
            kappa: 1.0,
            big_m: 1.0,
            variant: PotentialVariant::Conservative,
            cfl_safety: 0.9,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 3.0) {
            return Err(VpilError::InvalidParameter(format!(
                "weight exponent must exceed 3, got {}",
                self.m
            )));
        }
        if !(self.t_horizon > 0.0) || !self.t_horizon.is_finite() {
            return Err(VpilError::InvalidParameter(format!(
                "time horizon must be positive and finite, got {}",
                self.t_horizon
            )));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(VpilError::InvalidParameter(format!(
                "startup exponent must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.big_m > 0.0) || !self.big_m.is_finite() {
            return Err(VpilError::InvalidParameter(format!(
                "comparison constant must be positive, got {}",
                self.big_m
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(VpilError::InvalidParameter(format!(
                "stability safety factor must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// Frozen coefficient fields of the linear operator for one value of g.
///
/// `acceleration` holds the static profile chi(eps x) E_g; the time cutoff
/// J^eps(t) multiplies it inside [`apply_linear_operator`], so one set serves
/// every time level that shares its g.
pub struct CoefficientSet {
    /// chi(eps v) v on the velocity grid.
    pub transport: VectorField3,
    /// chi(eps x) E_g on the space grid (time factor applied at use).
    pub acceleration: VectorField3,
    /// Localized velocity potential of g per phase point, >= 0 for g >= 0.
    pub diffusion_coeff: PhaseField,
    /// g itself.
    pub reaction: PhaseField,
    pub epsilon: f64,
    /// Coefficient of the artificial Lap_{x,v} regularization.
    pub artificial_diffusion: f64,
}

/// Build every coefficient field of the operator for the frozen profile `g`.
///
/// The localized potential multiplies each velocity fiber of g by
/// chi(eps u) before inverting -Lap_v; tiny negative ripples from the solve
/// are clamped to zero so the diffusion coefficient stays admissible.
pub fn assemble_coefficients(
    g: &PhaseField,
    epsilon: f64,
    cfg: &LinearConfig,
) -> Result<CoefficientSet> {
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(VpilError::InvalidParameter(format!(
            "localization scale must lie in (0, 1], got {epsilon}"
        )));
    }
    g.ensure_finite("coefficient profile")?;
    let grid = g.grid();
    let vg = grid.velocity;
    let nv = vg.points_per_axis();

    let mut transport = VectorField3::zeros(vg);
    for a in 0..nv {
        for b in 0..nv {
            for c in 0..nv {
                let v = vg.position(a, b, c);
                let chi = cutoff_chi([v[0] * epsilon, v[1] * epsilon, v[2] * epsilon]);
                let lin = vg.index(a, b, c);
                for axis in 0..3 {
                    transport.component_mut(axis)[lin] = chi * v[axis];
                }
            }
        }
    }

    let rho = mass_density(g);
    let mut acceleration = VectorField3::zeros(grid.space);
    if rho.max_abs() > 0.0 {
        let mut solver = SpectralPoisson::new(grid.space);
        let field = self_consistent_field(&rho, cfg.sign, &mut solver)?;
        let nx = grid.space.points_per_axis();
        for i in 0..nx {
            for j in 0..nx {
                for k in 0..nx {
                    let x = grid.space.position(i, j, k);
                    let chi = cutoff_chi([x[0] * epsilon, x[1] * epsilon, x[2] * epsilon]);
                    let lin = grid.space.index(i, j, k);
                    for axis in 0..3 {
                        acceleration.component_mut(axis)[lin] = chi * field.component(axis)[lin];
                    }
                }
            }
        }
    }

    let mut diffusion_coeff = PhaseField::zeros(grid);
    let mut solvers = VelocitySolvers::new(vg);
    let mut chi_fiber = ScalarField3::zeros(vg);
    for ix in 0..grid.space.len() {
        let fiber = g.fiber(ix);
        if fiber.iter().all(|&x| x == 0.0) {
            continue;
        }
        let chi_vals = chi_fiber.values_mut();
        let mut lin = 0;
        for a in 0..nv {
            for b in 0..nv {
                for c in 0..nv {
                    let u = vg.position(a, b, c);
                    let chi = cutoff_chi([u[0] * epsilon, u[1] * epsilon, u[2] * epsilon]);
                    chi_vals[lin] = chi * fiber[lin];
                    lin += 1;
                }
            }
        }
        let pot = solvers.potential(&chi_fiber, cfg.variant)?;
        let out = diffusion_coeff.fiber_mut(ix);
        for (dst, &src) in out.iter_mut().zip(pot.values()) {
            *dst = src.max(0.0);
        }
    }

    Ok(CoefficientSet {
        transport,
        acceleration,
        diffusion_coeff,
        reaction: g.clone(),
        epsilon,
        artificial_diffusion: epsilon,
    })
}

/// One explicit stability bound for the whole operator: diffusion terms
/// contribute 2/h^2 per axis, upwind advection |a|/h per axis. Infinite when
/// every coefficient vanishes.
pub fn stable_dt(coeffs: &CoefficientSet, grid: &PhaseGrid, cfg: &LinearConfig) -> f64 {
    let hx = grid.space.spacing();
    let hv = grid.velocity.spacing();
    let aeps = coeffs.artificial_diffusion;
    let d_max = coeffs
        .diffusion_coeff
        .values()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v));
    let mut denom = 6.0 * aeps / (hx * hx) + 6.0 * (aeps + d_max) / (hv * hv);
    for axis in 0..3 {
        let t_max = coeffs.transport.component(axis).iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let a_max = coeffs
            .acceleration
            .component(axis)
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        denom += t_max / hx + a_max / hv;
    }
    if denom == 0.0 {
        f64::INFINITY
    } else {
        cfg.cfl_safety / denom
    }
}

/// Discrete operator evaluation at time `t`: upwind first differences,
/// centered second differences, zero beyond the boundary (compact support).
pub fn apply_linear_operator(
    f: &PhaseField,
    coeffs: &CoefficientSet,
    t: f64,
    cfg: &LinearConfig,
) -> PhaseField {
    let grid = f.grid();
    let nx = grid.space.points_per_axis();
    let nv = grid.velocity.points_per_axis();
    let nv3 = grid.velocity.len();
    let hx = grid.space.spacing();
    let hv = grid.velocity.spacing();
    let aeps = coeffs.artificial_diffusion;
    let j_factor = time_cutoff_j(t, coeffs.epsilon, cfg.t_horizon);
    let vals = f.values();
    let mut out = PhaseField::zeros(grid);
    let out_vals = out.values_mut();

    let strides = [nx * nx * nv3, nx * nv3, nv3, nv * nv, nv, 1];
    let dims = [nx, nx, nx, nv, nv, nv];
    let diff = coeffs.diffusion_coeff.values();
    let react = coeffs.reaction.values();

    let mut idx6 = [0usize; 6];
    for lin in 0..vals.len() {
        if lin > 0 {
            let mut axis = 5;
            loop {
                idx6[axis] += 1;
                if idx6[axis] < dims[axis] {
                    break;
                }
                idx6[axis] = 0;
                axis -= 1;
            }
        }
        let ix = (idx6[0] * nx + idx6[1]) * nx + idx6[2];
        let iv = (idx6[3] * nv + idx6[4]) * nv + idx6[5];
        let center = vals[lin];

        let mut lapx = 0.0;
        let mut lapv = 0.0;
        let mut advect = 0.0;
        for axis in 0..6 {
            let stride = strides[axis];
            let i = idx6[axis];
            let n = dims[axis];
            let h = if axis < 3 { hx } else { hv };
            let prev = if i > 0 { vals[lin - stride] } else { 0.0 };
            let next = if i + 1 < n { vals[lin + stride] } else { 0.0 };
            let lap = (next - 2.0 * center + prev) / (h * h);
            if axis < 3 {
                lapx += lap;
            } else {
                lapv += lap;
            }
            let speed = if axis < 3 {
                coeffs.transport.component(axis)[iv]
            } else {
                j_factor * coeffs.acceleration.component(axis - 3)[ix]
            };
            let upwind = if speed >= 0.0 {
                (center - prev) / h
            } else {
                (next - center) / h
            };
            advect += speed * upwind;
        }

        out_vals[lin] =
            -aeps * (lapx + lapv) + advect - diff[lin] * lapv - react[lin] * center;
    }
    out
}

/// Source of the forced equation: the operator applied to the mollified
/// initial data, scaled by the startup indicator. Identically zero once the
/// indicator has closed (t >= 2 eps^kappa).
pub fn linear_source(
    f_init_eps: &PhaseField,
    coeffs: &CoefficientSet,
    t: f64,
    cfg: &LinearConfig,
) -> PhaseField {
    let scale = startup_indicator(t, coeffs.epsilon, cfg.kappa);
    if scale == 0.0 {
        return PhaseField::zeros(f_init_eps.grid());
    }
    let mut src = apply_linear_operator(f_init_eps, coeffs, t, cfg);
    if scale != 1.0 {
        for v in src.values_mut() {
            *v *= scale;
        }
    }
    src
}

/// The paper-style mollified initial data: the product with a smooth cutoff
/// in both position and velocity, compactly supported in |x|, |v| < 1/eps.
pub fn mollify_initial(f: &PhaseField, epsilon: f64) -> PhaseField {
    let grid = f.grid();
    let nx = grid.space.points_per_axis();
    let nv = grid.velocity.points_per_axis();
    let mut out = f.clone();
    for i in 0..nx {
        for j in 0..nx {
            for k in 0..nx {
                let x = grid.space.position(i, j, k);
                let chi_x = cutoff_chi([x[0] * epsilon, x[1] * epsilon, x[2] * epsilon]);
                let ix = grid.space.index(i, j, k);
                let fiber = out.fiber_mut(ix);
                let mut lin = 0;
                for a in 0..nv {
                    for b in 0..nv {
                        for c in 0..nv {
                            let v = grid.velocity.position(a, b, c);
                            let chi_v =
                                cutoff_chi([v[0] * epsilon, v[1] * epsilon, v[2] * epsilon]);
                            fiber[lin] *= chi_x * chi_v;
                            lin += 1;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Supplies the coefficient set for a requested time level.
pub trait CoefficientProvider {
    fn coefficients(&mut self, t: f64) -> Result<&CoefficientSet>;
}

/// A single set used for every time (g frozen over the solve).
pub struct FrozenCoefficients(pub CoefficientSet);

impl CoefficientProvider for FrozenCoefficients {
    fn coefficients(&mut self, _t: f64) -> Result<&CoefficientSet> {
        Ok(&self.0)
    }
}

/// Piecewise-constant-in-time sets built from samples of a trajectory; each
/// request resolves to the nearest sample time.
pub struct SampledCoefficients {
    times: Vec<f64>,
    sets: Vec<CoefficientSet>,
}

impl SampledCoefficients {
    pub fn build(samples: &[(f64, PhaseField)], epsilon: f64, cfg: &LinearConfig) -> Result<Self> {
        if samples.is_empty() {
            return Err(VpilError::InvalidParameter(
                "coefficient sampling needs at least one trajectory sample".into(),
            ));
        }
        let mut times = Vec::with_capacity(samples.len());
        let mut sets = Vec::with_capacity(samples.len());
        for (t, g) in samples {
            times.push(*t);
            sets.push(assemble_coefficients(g, epsilon, cfg)?);
        }
        Ok(Self { times, sets })
    }

    pub fn min_stable_dt(&self, grid: &PhaseGrid, cfg: &LinearConfig) -> f64 {
        self.sets
            .iter()
            .map(|s| stable_dt(s, grid, cfg))
            .fold(f64::INFINITY, f64::min)
    }
}

impl CoefficientProvider for SampledCoefficients {
    fn coefficients(&mut self, t: f64) -> Result<&CoefficientSet> {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &s) in self.times.iter().enumerate() {
            let d = (t - s).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(&self.sets[best])
    }
}

/// Outcome of one forward linear solve.
pub struct ForwardReport {
    /// (t, state) at the storage cadence, always including t = 0 and the
    /// final time.
    pub trajectory: Vec<(f64, PhaseField)>,
    /// Sup over time levels and grid of the moving weight times |f|.
    pub weighted_sup_norm: f64,
    /// Most negative value seen anywhere in the trajectory.
    pub min_value: f64,
    /// Max |f - f_init| over the startup plateau t <= eps^kappa.
    pub max_startup_deviation: f64,
    pub steps: usize,
    pub dt: f64,
}

/// March the forced linear equation from `f_init_eps` to the horizon with
/// explicit Euler steps of size `dt`, checking the stability bound of the
/// current coefficients at every step.
pub fn solve_linear_forward<P: CoefficientProvider>(
    provider: &mut P,
    f_init_eps: &PhaseField,
    dt: f64,
    store_every: usize,
    cfg: &LinearConfig,
) -> Result<ForwardReport> {
    cfg.validate()?;
    f_init_eps.ensure_finite("linear solve initial data")?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(VpilError::InvalidParameter(format!(
            "time step must be positive and finite, got {dt}"
        )));
    }
    let grid = f_init_eps.grid();
    let steps = (cfg.t_horizon / dt).ceil() as usize;
    let store_every = store_every.max(1);

    let mut f = f_init_eps.clone();
    let eps0 = provider.coefficients(0.0)?.epsilon;
    let plateau_end = eps0.powf(cfg.kappa);
    let init_vals: Vec<f64> = f_init_eps.values().to_vec();

    let mut trajectory = vec![(0.0, f.clone())];
    let mut wsup = weighted_sup(&f, 0.0, cfg.m, eps0);
    let mut min_value = f.min();
    let mut max_dev: f64 = 0.0;

    for k in 0..steps {
        let t = k as f64 * dt;
        let coeffs = provider.coefficients(t)?;
        let bound = stable_dt(coeffs, &grid, cfg);
        if dt > bound {
            return Err(VpilError::CflViolation {
                dt,
                bound,
                constraint: "linear scheme explicit step",
            });
        }
        let m_f = apply_linear_operator(&f, coeffs, t, cfg);
        let src_scale = startup_indicator(t, coeffs.epsilon, cfg.kappa);
        if src_scale != 0.0 {
            let m_init = apply_linear_operator(f_init_eps, coeffs, t, cfg);
            for ((dst, &mf), &mi) in f
                .values_mut()
                .iter_mut()
                .zip(m_f.values())
                .zip(m_init.values())
            {
                *dst += dt * (src_scale * mi - mf);
            }
        } else {
            for (dst, &mf) in f.values_mut().iter_mut().zip(m_f.values()) {
                *dst -= dt * mf;
            }
        }
        f.ensure_finite("linear iterate")?;

        let t_next = (k + 1) as f64 * dt;
        wsup = wsup.max(weighted_sup(&f, t_next, cfg.m, coeffs.epsilon));
        min_value = min_value.min(f.min());
        if t_next <= plateau_end {
            for (a, b) in f.values().iter().zip(&init_vals) {
                max_dev = max_dev.max((a - b).abs());
            }
        }
        if (k + 1) % store_every == 0 || k + 1 == steps {
            trajectory.push((t_next, f.clone()));
        }
    }

    Ok(ForwardReport {
        trajectory,
        weighted_sup_norm: wsup,
        min_value,
        max_startup_deviation: max_dev,
        steps,
        dt,
    })
}

/// Per-iterate record of the Picard sequence, one JSON object per line in
/// the external stream.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationReport {
    pub n: usize,
    pub weighted_sup_norm: f64,
    pub min_value: f64,
    /// n-fold composition of Phi at 0.
    pub phi_chain_bound: f64,
    pub bound_satisfied: bool,
}

pub struct PicardOutcome {
    pub reports: Vec<IterationReport>,
    pub final_iterate: PhaseField,
    /// Bound on the largest admissible fixed point of Phi, 0 for zero data.
    pub s_large: f64,
    pub smallness_threshold: f64,
    /// Weighted C^2-type norm of the initial data.
    pub norm_c2: f64,
}

/// Largest initial norm the bound chain tolerates:
/// 1 / (e^{-e} M (2<T>)^m (T+1)^3 e^{M(T+1)^3}).
pub fn smallness_threshold(cfg: &LinearConfig) -> f64 {
    let t1 = cfg.t_horizon + 1.0;
    let a = cfg.big_m * t1 * t1 * t1;
    1.0 / ((-std::f64::consts::E).exp()
        * cfg.big_m
        * (2.0 * bracket_scalar(cfg.t_horizon)).powf(cfg.m)
        * t1
        * t1
        * t1
        * a.exp())
}

/// Run the Picard sequence: iterate n uses the localization scale 1/n and
/// the previous iterate's trajectory as the frozen profile g. Requires the
/// initial norm below [`smallness_threshold`].
pub fn picard_sequence(
    f_init: &PhaseField,
    n_iterates: usize,
    dt_max: f64,
    store_every: usize,
    cfg: &LinearConfig,
) -> Result<PicardOutcome> {
    cfg.validate()?;
    if n_iterates == 0 {
        return Err(VpilError::InvalidParameter(
            "iteration count must be at least 1".into(),
        ));
    }
    f_init.ensure_finite("iteration initial data")?;
    if f_init.min() < 0.0 {
        return Err(VpilError::InvalidParameter(format!(
            "iteration initial data must be nonnegative, min = {:.3e}",
            f_init.min()
        )));
    }
    let weight = WeightParams::new(cfg.m, cfg.t_horizon, 1.0)?;
    let norm_c2 = weighted_c2_norm(f_init, &weight)?;
    let threshold = smallness_threshold(cfg);
    if norm_c2 > threshold {
        return Err(VpilError::InvalidParameter(format!(
            "initial norm {norm_c2:.6e} exceeds the smallness threshold {threshold:.6e} \
             for T = {}, m = {}",
            cfg.t_horizon, cfg.m
        )));
    }

    let t1 = cfg.t_horizon + 1.0;
    let a_rate = cfg.big_m * t1 * t1 * t1;
    let c_phi = norm_c2 * (2.0 * bracket_scalar(cfg.t_horizon)).powf(cfg.m);
    let (chain, s_large) = if c_phi > 0.0 {
        let phi = PhiParams::new(c_phi, a_rate)?;
        let (chain, _) = phi_iterate(&phi, 0.0, n_iterates)?;
        let s_large = s_large_bound(c_phi * a_rate.exp(), a_rate, DEFAULT_S_LARGE_C0)?;
        (chain, s_large)
    } else {
        (vec![0.0; n_iterates], 0.0)
    };

    let grid = f_init.grid();
    let mut prev_samples: Vec<(f64, PhaseField)> = vec![(0.0, PhaseField::zeros(grid))];
    let mut reports = Vec::with_capacity(n_iterates);
    let mut final_iterate = PhaseField::zeros(grid);

    for n in 1..=n_iterates {
        let eps = 1.0 / n as f64;
        let f_init_eps = mollify_initial(f_init, eps);
        let mut provider = SampledCoefficients::build(&prev_samples, eps, cfg)?;
        let dt = dt_max.min(provider.min_stable_dt(&grid, cfg));
        let store = if store_every == 0 {
            let steps = (cfg.t_horizon / dt).ceil() as usize;
            (steps / 8).max(1)
        } else {
            store_every
        };
        let fwd = solve_linear_forward(&mut provider, &f_init_eps, dt, store, cfg)?;
        let bound = chain[n - 1];
        reports.push(IterationReport {
            n,
            weighted_sup_norm: fwd.weighted_sup_norm,
            min_value: fwd.min_value,
            phi_chain_bound: bound,
            bound_satisfied: fwd.weighted_sup_norm <= bound * (1.0 + BOUND_TOLERANCE),
        });
        final_iterate = fwd.trajectory.last().unwrap().1.clone();
        prev_samples = fwd.trajectory;
    }

    Ok(PicardOutcome {
        reports,
        final_iterate,
        s_large,
        smallness_threshold: threshold,
        norm_c2,
    })
}
