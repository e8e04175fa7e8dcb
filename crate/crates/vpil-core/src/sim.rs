//! Time integration of the kinetic system.
//!
//! One step of the full model is a Strang splitting around the collision
//! term: half-step spatial streaming, field solve, half-step acceleration,
//! full collision step on every spatial node's velocity fiber, then the
//! mirrored acceleration and streaming half-steps. The field is computed
//! once per step, after the first streaming half-step; the sweeps between
//! the two uses keep the density of each spatial node fixed (velocity remap
//! and collisions both act fiber-by-fiber), so the reuse is consistent.
//!
//! The space-free (velocity-only) variant integrates the pure collision
//! equation on a radial mesh.

use crate::collision::{collision_step_cartesian, collision_step_radial, CollisionSettings, VelocitySolvers};
use crate::error::{Result, VpilError};
use crate::fields::{
    mass_density, self_consistent_field, InteractionSign, PhaseField, RadialField, ScalarField3,
    VectorField3,
};
use crate::grid::PhaseGrid;
use crate::poisson::SpectralPoisson;
use crate::transport::{shift_space_axis, shift_velocity_axis, Reconstruction};

/// Fraction of the positive mass that may sit in negative cells before the
/// run aborts; small undershoots are normal for the centered reconstruction.
pub const NEGATIVE_MASS_ABORT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
pub struct KineticParams {
    pub sign: InteractionSign,
    pub reconstruction: Reconstruction,
    pub collision: CollisionSettings,
    pub collisions_enabled: bool,
    pub field_enabled: bool,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct KineticState {
    pub f: PhaseField,
    pub t: f64,
    pub step_index: u64,
    pub clipped_mass_total: f64,
}

impl KineticState {
    pub fn new(f: PhaseField) -> Self {
        Self {
            f,
            t: 0.0,
            step_index: 0,
            clipped_mass_total: 0.0,
        }
    }
}

/// Owns the solver caches for one phase grid; reusable across steps and runs.
pub struct KineticRun {
    params: KineticParams,
    grid: PhaseGrid,
    space_solver: SpectralPoisson,
    velocity_solvers: VelocitySolvers,
    fiber_buf: ScalarField3,
}

impl KineticRun {
    pub fn new(grid: PhaseGrid, params: KineticParams) -> Result<Self> {
        if !params.dt.is_finite() || params.dt <= 0.0 {
            return Err(VpilError::InvalidParameter(format!(
                "dt must be positive and finite, got {}",
                params.dt
            )));
        }
        Ok(Self {
            params,
            grid,
            space_solver: SpectralPoisson::new(grid.space),
            velocity_solvers: VelocitySolvers::new(grid.velocity),
            fiber_buf: ScalarField3::zeros(grid.velocity),
        })
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    /// The field the current distribution generates, honoring the
    /// interaction sign; zero when the self-consistent field is disabled.
    pub fn field(&mut self, f: &PhaseField) -> Result<VectorField3> {
        if !self.params.field_enabled {
            return Ok(VectorField3::zeros(self.grid.space));
        }
        let rho = mass_density(f);
        self_consistent_field(&rho, self.params.sign, &mut self.space_solver)
    }

    pub fn step(&mut self, state: &mut KineticState) -> Result<()> {
        let dt = self.params.dt;
        let hx = self.grid.space.spacing();
        let hv = self.grid.velocity.spacing();

        // Streaming must not cross more than one cell per full step.
        let vmax = self.grid.velocity.max_abs_coord();
        if vmax * dt > hx {
            return Err(VpilError::CflViolation {
                dt,
                bound: hx / vmax,
                constraint: "spatial streaming",
            });
        }

        let recon = self.params.reconstruction;
        for axis in 0..3 {
            shift_space_axis(&mut state.f, axis, 0.5 * dt, recon);
        }

        let field = self.field(&state.f)?;
        let emax = field.max_abs_component();
        if emax * dt > hv {
            return Err(VpilError::CflViolation {
                dt,
                bound: hv / emax,
                constraint: "field acceleration",
            });
        }

        for axis in 0..3 {
            shift_velocity_axis(&mut state.f, axis, &field, 0.5 * dt, recon);
        }

        if self.params.collisions_enabled {
            let nv3 = self.grid.velocity.len();
            let nx3 = self.grid.space.len();
            for ix in 0..nx3 {
                let fiber = state.f.fiber(ix);
                if fiber.iter().all(|&v| v == 0.0) {
                    continue;
                }
                self.fiber_buf.values_mut()[..nv3].copy_from_slice(fiber);
                let outcome = collision_step_cartesian(
                    &mut self.fiber_buf,
                    dt,
                    &mut self.velocity_solvers,
                    &self.params.collision,
                )?;
                state.clipped_mass_total += outcome.clipped_mass * self.grid.space.cell_volume();
                state.f.fiber_mut(ix).copy_from_slice(&self.fiber_buf.values()[..nv3]);
            }
        }

        for axis in 0..3 {
            shift_velocity_axis(&mut state.f, axis, &field, 0.5 * dt, recon);
        }
        for axis in 0..3 {
            shift_space_axis(&mut state.f, axis, 0.5 * dt, recon);
        }

        state.t += dt;
        state.step_index += 1;

        state.f.ensure_finite("distribution after step")?;
        let (mut pos, mut neg) = (0.0, 0.0);
        for &v in state.f.values() {
            if v >= 0.0 {
                pos += v;
            } else {
                neg -= v;
            }
        }
        if neg > NEGATIVE_MASS_ABORT_FRACTION * pos {
            return Err(VpilError::Abort {
                step: state.step_index,
                reason: format!(
                    "negative mass fraction {:.3e} exceeds {:.3e}",
                    neg / pos.max(f64::MIN_POSITIVE),
                    NEGATIVE_MASS_ABORT_FRACTION
                ),
            });
        }
        Ok(())
    }

    /// Advance `steps` steps, invoking `hook` on the initial state and then
    /// after every step. An error from the hook or a step stops the run with
    /// the state as of the last completed step.
    pub fn run<H: FnMut(&KineticState) -> Result<()>>(
        &mut self,
        state: &mut KineticState,
        steps: u64,
        mut hook: H,
    ) -> Result<()> {
        hook(state)?;
        for _ in 0..steps {
            self.step(state)?;
            hook(state)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RadialState {
    pub f: RadialField,
    pub t: f64,
    pub step_index: u64,
    pub clipped_mass_total: f64,
}

impl RadialState {
    pub fn new(f: RadialField) -> Self {
        Self {
            f,
            t: 0.0,
            step_index: 0,
            clipped_mass_total: 0.0,
        }
    }
}

/// One step of the space-free collision equation on a radial mesh.
pub fn step_homogeneous(
    state: &mut RadialState,
    dt: f64,
    settings: &CollisionSettings,
) -> Result<()> {
    let outcome = collision_step_radial(&mut state.f, dt, settings)?;
    state.clipped_mass_total += outcome.clipped_mass;
    state.t += dt;
    state.step_index += 1;
    state.f.ensure_finite("radial distribution after step")
}

pub fn run_homogeneous<H: FnMut(&RadialState) -> Result<()>>(
    state: &mut RadialState,
    dt: f64,
    steps: u64,
    settings: &CollisionSettings,
    mut hook: H,
) -> Result<()> {
    hook(state)?;
    for _ in 0..steps {
        step_homogeneous(state, dt, settings)?;
        hook(state)?;
    }
    Ok(())
}
