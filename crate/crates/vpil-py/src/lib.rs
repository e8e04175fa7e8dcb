//! Python bindings for the kinetic solver and the blow-up analytics.
//!
//! The surface is deliberately small: two stateful run wrappers
//! ([`Simulation`], [`HomogeneousRun`]), the contraction-map and cubic-bound
//! analytics, and the radial potential table. Bulk data crosses the boundary
//! as plain lists; anything heavier should stay on the Rust side.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vpil_core::collision::{CollisionSettings, CollisionStepper, PotentialVariant};
use vpil_core::config::{PhaseGaussianInit, RadialGaussianInit};
use vpil_core::criterion::{
    cubic_bound as cubic_bound_rs, existence_time_bound, k_of_m as k_of_m_rs,
    phi_iterate as phi_iterate_rs, phi_threshold_and_roots, ConditionParams, CriterionInput,
    PhiParams, PhiRoots,
};
use vpil_core::diagnostics::{measure_radial, DiagnosticsEngine, DiagnosticsRecord, MeasureSettings};
use vpil_core::poisson::RadialPotentialTable;
use vpil_core::sim::{run_homogeneous, KineticParams, KineticRun, KineticState, RadialState};
use vpil_core::snapshot::{
    read_phase_snapshot, read_radial_snapshot, write_phase_snapshot, write_radial_snapshot,
};
use vpil_core::transport::Reconstruction;
use vpil_core::{Grid3, InteractionSign, PhaseGrid, RadialField, RadialGrid, VpilError};

fn runtime_err(e: VpilError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_sign(s: &str) -> PyResult<InteractionSign> {
    match s {
        "gravitational" => Ok(InteractionSign::Gravitational),
        "plasma" => Ok(InteractionSign::Plasma),
        other => Err(PyValueError::new_err(format!(
            "sign must be 'gravitational' or 'plasma', got '{other}'"
        ))),
    }
}

fn parse_variant(s: &str) -> PyResult<PotentialVariant> {
    match s {
        "spectral" => Ok(PotentialVariant::Spectral),
        "conservative" => Ok(PotentialVariant::Conservative),
        other => Err(PyValueError::new_err(format!(
            "variant must be 'spectral' or 'conservative', got '{other}'"
        ))),
    }
}

fn parse_stepper(s: &str) -> PyResult<CollisionStepper> {
    match s {
        "explicit-euler" => Ok(CollisionStepper::ExplicitEuler),
        "rk2" => Ok(CollisionStepper::Rk2),
        "semi-implicit" => Ok(CollisionStepper::SemiImplicit),
        other => Err(PyValueError::new_err(format!(
            "stepper must be 'explicit-euler', 'rk2', or 'semi-implicit', got '{other}'"
        ))),
    }
}

fn parse_reconstruction(s: &str) -> PyResult<Reconstruction> {
    match s {
        "minmod" => Ok(Reconstruction::Minmod),
        "centered" => Ok(Reconstruction::Centered),
        other => Err(PyValueError::new_err(format!(
            "reconstruction must be 'minmod' or 'centered', got '{other}'"
        ))),
    }
}

fn sign_str(sign: InteractionSign) -> &'static str {
    match sign {
        InteractionSign::Gravitational => "gravitational",
        InteractionSign::Plasma => "plasma",
    }
}

fn record_dict<'py>(py: Python<'py>, r: &DiagnosticsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("mass", r.mass)?;
    d.set_item("momentum", r.momentum.to_vec())?;
    d.set_item("ke", r.ke)?;
    d.set_item("field_energy", r.field_energy)?;
    d.set_item("entropy", r.entropy)?;
    d.set_item("inertia", r.inertia)?;
    d.set_item("mixed_moment", r.mixed_moment)?;
    d.set_item("inertia_dd", r.inertia_dd)?;
    d.set_item("inertia_ddd", r.inertia_ddd)?;
    d.set_item("clipped_mass", r.clipped_mass)?;
    d.set_item("min_f", r.min_f)?;
    Ok(d)
}

/// Full phase-space run: split transport + self-consistent field + collisions
/// on a `space_points^3 x velocity_points^3` grid, Gaussian initial data.
#[pyclass]
struct Simulation {
    run: KineticRun,
    state: KineticState,
    engine: DiagnosticsEngine,
    settings: MeasureSettings,
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (
        space_extent, space_points, velocity_extent, velocity_points, dt, *,
        amplitude = 1.0, x_width = 1.0, v_width = 1.0, vx_shift = 0.0, inflow = 0.0,
        sign = "gravitational", reconstruction = "minmod",
        collisions = true, field = true,
        stepper = "semi-implicit", variant = "conservative"
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        space_extent: f64,
        space_points: usize,
        velocity_extent: f64,
        velocity_points: usize,
        dt: f64,
        amplitude: f64,
        x_width: f64,
        v_width: f64,
        vx_shift: f64,
        inflow: f64,
        sign: &str,
        reconstruction: &str,
        collisions: bool,
        field: bool,
        stepper: &str,
        variant: &str,
    ) -> PyResult<Self> {
        let grid = PhaseGrid::new(
            Grid3::new(space_extent, space_points).map_err(runtime_err)?,
            Grid3::new(velocity_extent, velocity_points).map_err(runtime_err)?,
        );
        let sign = parse_sign(sign)?;
        let variant = parse_variant(variant)?;
        let params = KineticParams {
            sign,
            reconstruction: parse_reconstruction(reconstruction)?,
            collision: CollisionSettings {
                variant,
                stepper: parse_stepper(stepper)?,
                ..CollisionSettings::default()
            },
            collisions_enabled: collisions,
            field_enabled: field,
            dt,
        };
        let init = PhaseGaussianInit {
            amplitude,
            x_width,
            v_width,
            vx_shift,
            inflow,
        };
        let state = KineticState::new(init.build(grid));
        let run = KineticRun::new(grid, params).map_err(runtime_err)?;
        let settings = MeasureSettings {
            sign,
            collisions_enabled: collisions,
            field_enabled: field,
            variant,
        };
        Ok(Self {
            run,
            state,
            engine: DiagnosticsEngine::new(grid),
            settings,
        })
    }

    /// Advance `n` full steps of size `dt`.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, py: Python<'_>, n: u64) -> PyResult<()> {
        py.detach(|| {
            for _ in 0..n {
                self.run.step(&mut self.state).map_err(runtime_err)?;
            }
            Ok(())
        })
    }

    /// Moment, energy, entropy, and virial diagnostics of the current state.
    fn measure<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = py
            .detach(|| {
                self.engine.measure(
                    &self.state.f,
                    self.state.t,
                    self.state.clipped_mass_total,
                    &self.settings,
                )
            })
            .map_err(runtime_err)?;
        record_dict(py, &r)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    #[getter]
    fn step_index(&self) -> u64 {
        self.state.step_index
    }

    #[getter]
    fn clipped_mass(&self) -> f64 {
        self.state.clipped_mass_total
    }

    fn save(&self, path: &str) -> PyResult<()> {
        write_phase_snapshot(path.as_ref(), &self.state, self.settings.sign).map_err(runtime_err)
    }

    /// Resume from a snapshot; solver parameters are not stored in the file
    /// and must be passed again.
    #[staticmethod]
    #[pyo3(signature = (
        path, dt, *,
        reconstruction = "minmod", collisions = true, field = true,
        stepper = "semi-implicit", variant = "conservative"
    ))]
    fn load(
        path: &str,
        dt: f64,
        reconstruction: &str,
        collisions: bool,
        field: bool,
        stepper: &str,
        variant: &str,
    ) -> PyResult<Self> {
        let (state, sign) = read_phase_snapshot(path.as_ref()).map_err(runtime_err)?;
        let grid = state.f.grid();
        let variant = parse_variant(variant)?;
        let params = KineticParams {
            sign,
            reconstruction: parse_reconstruction(reconstruction)?,
            collision: CollisionSettings {
                variant,
                stepper: parse_stepper(stepper)?,
                ..CollisionSettings::default()
            },
            collisions_enabled: collisions,
            field_enabled: field,
            dt,
        };
        let run = KineticRun::new(grid, params).map_err(runtime_err)?;
        let settings = MeasureSettings {
            sign,
            collisions_enabled: collisions,
            field_enabled: field,
            variant,
        };
        Ok(Self {
            run,
            state,
            engine: DiagnosticsEngine::new(grid),
            settings,
        })
    }

    #[getter]
    fn sign(&self) -> &'static str {
        sign_str(self.settings.sign)
    }

    fn __repr__(&self) -> String {
        let g = self.run.grid();
        format!(
            "Simulation(space={n_x}^3, velocity={n_v}^3, t={t:.6}, step={s})",
            n_x = g.space.points_per_axis(),
            n_v = g.velocity.points_per_axis(),
            t = self.state.t,
            s = self.state.step_index,
        )
    }
}

/// Space-homogeneous isotropic run: f(t, |v|) on a radial grid, collisions
/// only.
#[pyclass]
struct HomogeneousRun {
    state: RadialState,
    dt: f64,
    settings: CollisionSettings,
    sign: InteractionSign,
}

#[pymethods]
impl HomogeneousRun {
    #[new]
    #[pyo3(signature = (
        r_max, points, dt, *,
        amplitude = 1.0, width = 1.0,
        stepper = "semi-implicit", variant = "conservative",
        sign = "gravitational"
    ))]
    fn new(
        r_max: f64,
        points: usize,
        dt: f64,
        amplitude: f64,
        width: f64,
        stepper: &str,
        variant: &str,
        sign: &str,
    ) -> PyResult<Self> {
        let grid = RadialGrid::new(r_max, points).map_err(runtime_err)?;
        let init = RadialGaussianInit { amplitude, width };
        Ok(Self {
            state: RadialState::new(init.build(grid)),
            dt,
            settings: CollisionSettings {
                variant: parse_variant(variant)?,
                stepper: parse_stepper(stepper)?,
                ..CollisionSettings::default()
            },
            sign: parse_sign(sign)?,
        })
    }

    #[pyo3(signature = (n = 1))]
    fn step(&mut self, py: Python<'_>, n: u64) -> PyResult<()> {
        py.detach(|| run_homogeneous(&mut self.state, self.dt, n, &self.settings, |_| Ok(())))
            .map_err(runtime_err)
    }

    fn measure<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = measure_radial(
            &self.state.f,
            self.state.t,
            self.state.clipped_mass_total,
            self.settings.variant,
        )
        .map_err(runtime_err)?;
        record_dict(py, &r)
    }

    /// `(nodes, values)` of the current profile.
    fn profile(&self) -> (Vec<f64>, Vec<f64>) {
        let grid = self.state.f.grid();
        let nodes = (0..grid.len()).map(|i| grid.node(i)).collect();
        (nodes, self.state.f.values().to_vec())
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    #[getter]
    fn step_index(&self) -> u64 {
        self.state.step_index
    }

    fn save(&self, path: &str) -> PyResult<()> {
        write_radial_snapshot(path.as_ref(), &self.state, self.sign).map_err(runtime_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, dt, *, stepper = "semi-implicit", variant = "conservative"))]
    fn load(path: &str, dt: f64, stepper: &str, variant: &str) -> PyResult<Self> {
        let (state, sign) = read_radial_snapshot(path.as_ref()).map_err(runtime_err)?;
        Ok(Self {
            state,
            dt,
            settings: CollisionSettings {
                variant: parse_variant(variant)?,
                stepper: parse_stepper(stepper)?,
                ..CollisionSettings::default()
            },
            sign,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "HomogeneousRun(points={n}, t={t:.6}, step={s})",
            n = self.state.f.grid().len(),
            t = self.state.t,
            s = self.state.step_index,
        )
    }
}

/// Threshold and fixed points of phi(s) = c + a s^2 e^s: returns a dict with
/// `threshold` = e^{-a}/(e a) and the root structure of phi(s) = s.
#[pyfunction]
fn phi_map<'py>(py: Python<'py>, c: f64, a: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = PhiParams::new(c, a).map_err(runtime_err)?;
    let (threshold, roots) = phi_threshold_and_roots(&p);
    let d = PyDict::new(py);
    d.set_item("threshold", threshold)?;
    match roots {
        PhiRoots::Two { n1, n2 } => {
            d.set_item("kind", "two")?;
            d.set_item("n1", n1)?;
            d.set_item("n2", n2)?;
        }
        PhiRoots::Tangent(s) => {
            d.set_item("kind", "tangent")?;
            d.set_item("root", s)?;
        }
        PhiRoots::None => d.set_item("kind", "none")?,
    }
    Ok(d)
}

/// Iterate s -> phi(s) from `s0`; returns the sequence and the predicted
/// behavior ("converges_to_N1", "decreases_to_N1", "diverges", "constant").
#[pyfunction]
#[pyo3(signature = (c, a, s0, n = 64))]
fn phi_iterate(c: f64, a: f64, s0: f64, n: usize) -> PyResult<(Vec<f64>, &'static str)> {
    let p = PhiParams::new(c, a).map_err(runtime_err)?;
    let (seq, class) = phi_iterate_rs(&p, s0, n).map_err(runtime_err)?;
    Ok((seq, class.as_str()))
}

/// Cubic bound g(t) on the moment of inertia from the initial scalars, with
/// the finite-time verdict. `condition = (c, norm_ratio)` additionally
/// evaluates the sufficient condition `E_E - 2 KE >= c (3 I/|I'| + k) ratio`.
#[pyfunction]
#[pyo3(signature = (i0, ip0, ke0, ee0, c1, k, m, condition = None))]
#[allow(clippy::too_many_arguments)]
fn cubic_bound<'py>(
    py: Python<'py>,
    i0: f64,
    ip0: f64,
    ke0: f64,
    ee0: f64,
    c1: f64,
    k: f64,
    m: f64,
    condition: Option<(f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let inp = CriterionInput {
        i0,
        ip0,
        ke0,
        ee0,
        c1,
        k,
        m,
    };
    let cond = condition.map(|(c, norm_ratio)| ConditionParams { c, norm_ratio });
    let rep = cubic_bound_rs(&inp, cond.as_ref()).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("a3", rep.a3)?;
    d.set_item("a2", rep.a2)?;
    d.set_item("a1", rep.a1)?;
    d.set_item("a0", rep.a0)?;
    d.set_item("inertia_dd0", rep.inertia_dd0)?;
    d.set_item("discriminant", rep.discriminant)?;
    d.set_item("t2", rep.t2)?;
    d.set_item("g_at_t2", rep.g_at_t2)?;
    d.set_item("m2", rep.m2)?;
    d.set_item("m3", rep.m3)?;
    d.set_item("condition_23_satisfied", rep.condition_23_satisfied)?;
    d.set_item("verdict", rep.verdict.as_str())?;
    Ok(d)
}

/// Guaranteed existence horizon for C^2 data of norm `norm_c2` under decay
/// constant `big_m` and weight exponent `m`; returns `(t_bound, c_of_m)`
/// with `t_bound = None` when the calculus gives no positive horizon.
#[pyfunction]
fn existence_time(norm_c2: f64, big_m: f64, m: f64) -> PyResult<(Option<f64>, f64)> {
    existence_time_bound(norm_c2, big_m, m).map_err(runtime_err)
}

/// k(m) = m pi / (3 (m - 3)).
#[pyfunction]
fn k_of_m(m: f64) -> f64 {
    k_of_m_rs(m)
}

/// Evaluate u = (-Lap)^{-1} f for a radial profile given as node values on
/// [0, r_max]; returns u at the query radii.
#[pyfunction]
fn radial_potential(r_max: f64, values: Vec<f64>, at: Vec<f64>) -> PyResult<Vec<f64>> {
    let grid = RadialGrid::new(r_max, values.len()).map_err(runtime_err)?;
    let f = RadialField::from_values(grid, values).map_err(runtime_err)?;
    let table = RadialPotentialTable::new(&f).map_err(runtime_err)?;
    Ok(at.iter().map(|&r| table.value_at(r)).collect())
}

#[pymodule]
fn vpil(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Simulation>()?;
    m.add_class::<HomogeneousRun>()?;
    m.add_function(wrap_pyfunction!(phi_map, m)?)?;
    m.add_function(wrap_pyfunction!(phi_iterate, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(existence_time, m)?)?;
    m.add_function(wrap_pyfunction!(k_of_m, m)?)?;
    m.add_function(wrap_pyfunction!(radial_potential, m)?)?;
    Ok(())
}
