//! Field containers over the grids, velocity moments, and the self-consistent
//! field of both interaction signs.

use crate::error::{Result, VpilError};
use crate::grid::{Grid3, PhaseGrid, RadialGrid};
use crate::poisson::SpectralPoisson;
use serde::{Deserialize, Serialize};

/// Sign of the mean-field coupling: gravity attracts, like charges repel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionSign {
    Gravitational,
    Plasma,
}

impl InteractionSign {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gravitational => "gravitational",
            Self::Plasma => "plasma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gravitational" => Ok(Self::Gravitational),
            "plasma" => Ok(Self::Plasma),
            other => Err(VpilError::Config(format!(
                "unknown interaction sign {other:?}, expected \"gravitational\" or \"plasma\""
            ))),
        }
    }
}

/// Scalar samples on a [`Grid3`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3 {
    grid: Grid3,
    values: Vec<f64>,
}

impl ScalarField3 {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> f64>(grid: Grid3, mut f: F) -> Self {
        let n = grid.points_per_axis();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    values.push(f(grid.position(i, j, k)));
                }
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(VpilError::InvalidParameter(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Sum of samples times the cell volume.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(VpilError::NonFinite { context })
        }
    }
}

/// Vector samples on a [`Grid3`], stored as three component planes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    grid: Grid3,
    components: [Vec<f64>; 3],
}

impl VectorField3 {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            components: [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]],
        }
    }

    pub fn from_components(grid: Grid3, components: [Vec<f64>; 3]) -> Result<Self> {
        for c in &components {
            if c.len() != grid.len() {
                return Err(VpilError::InvalidParameter(format!(
                    "vector component length {} does not match grid size {}",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.components[axis]
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let lin = self.grid.index(i, j, k);
        [
            self.components[0][lin],
            self.components[1][lin],
            self.components[2][lin],
        ]
    }

    /// Largest |component| over all nodes and axes.
    pub fn max_abs_component(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Field energy `1/2 int |E|^2 dx`.
    pub fn energy(&self) -> f64 {
        let mut sum = 0.0;
        for lin in 0..self.grid.len() {
            let ex = self.components[0][lin];
            let ey = self.components[1][lin];
            let ez = self.components[2][lin];
            sum += ex * ex + ey * ey + ez * ez;
        }
        0.5 * sum * self.grid.cell_volume()
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.components.iter().all(|c| c.iter().all(|v| v.is_finite())) {
            Ok(())
        } else {
            Err(VpilError::NonFinite { context })
        }
    }
}

/// Scalar samples on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: RadialGrid, mut f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(VpilError::InvalidParameter(format!(
                "radial field length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> RadialGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// `int f dv` over R^3 for radial data, using exact shell volumes.
    pub fn integral(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.values[i] * self.grid.shell_volume(i))
            .sum()
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(VpilError::NonFinite { context })
        }
    }
}

/// Phase-space density on a [`PhaseGrid`], x-major so each spatial node owns a
/// contiguous velocity fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl PhaseField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: FnMut([f64; 3], [f64; 3]) -> f64>(grid: PhaseGrid, mut f: F) -> Self {
        let nx = grid.space.points_per_axis();
        let nv = grid.velocity.points_per_axis();
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..nx {
            for iy in 0..nx {
                for iz in 0..nx {
                    let x = grid.space.position(ix, iy, iz);
                    for jx in 0..nv {
                        for jy in 0..nv {
                            for jz in 0..nv {
                                values.push(f(x, grid.velocity.position(jx, jy, jz)));
                            }
                        }
                    }
                }
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(VpilError::InvalidParameter(format!(
                "phase field length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Velocity fiber attached to linear spatial index `ix`.
    pub fn fiber(&self, ix: usize) -> &[f64] {
        let nv3 = self.grid.velocity.len();
        &self.values[ix * nv3..(ix + 1) * nv3]
    }

    pub fn fiber_mut(&mut self, ix: usize) -> &mut [f64] {
        let nv3 = self.grid.velocity.len();
        &mut self.values[ix * nv3..(ix + 1) * nv3]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(VpilError::NonFinite { context })
        }
    }
}

/// Spatial mass density `rho(x) = int f dv`.
pub fn mass_density(f: &PhaseField) -> ScalarField3 {
    let hv3 = f.grid().velocity.cell_volume();
    let mut rho = ScalarField3::zeros(f.grid().space);
    for ix in 0..f.grid().space.len() {
        rho.values_mut()[ix] = f.fiber(ix).iter().sum::<f64>() * hv3;
    }
    rho
}

/// Current density `j(x) = int v f dv`.
pub fn current_density(f: &PhaseField) -> VectorField3 {
    let vg = f.grid().velocity;
    let nv = vg.points_per_axis();
    let hv3 = vg.cell_volume();
    let vcoords = vg.coords();
    let mut out = VectorField3::zeros(f.grid().space);
    for ix in 0..f.grid().space.len() {
        let fiber = f.fiber(ix);
        let mut jx = 0.0;
        let mut jy = 0.0;
        let mut jz = 0.0;
        let mut lin = 0;
        for a in 0..nv {
            let va = vcoords[a];
            for b in 0..nv {
                let vb = vcoords[b];
                for c in 0..nv {
                    let w = fiber[lin];
                    jx += va * w;
                    jy += vb * w;
                    jz += vcoords[c] * w;
                    lin += 1;
                }
            }
        }
        out.component_mut(0)[ix] = jx * hv3;
        out.component_mut(1)[ix] = jy * hv3;
        out.component_mut(2)[ix] = jz * hv3;
    }
    out
}

/// Self-consistent field of the density `rho`:
/// gravitational `E = +grad (-Lap)^{-1} rho` (pointing toward mass),
/// plasma `E = -grad (-Lap)^{-1} rho` (pointing away from charge).
pub fn self_consistent_field(
    rho: &ScalarField3,
    sign: InteractionSign,
    solver: &mut SpectralPoisson,
) -> Result<VectorField3> {
    rho.ensure_finite("self-consistent field source")?;
    let mut grad = solver.gradient_potential(rho)?;
    if sign == InteractionSign::Plasma {
        for axis in 0..3 {
            for v in grad.component_mut(axis) {
                *v = -*v;
            }
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid3, PhaseGrid, RadialGrid};

    #[test]
    fn scalar_integral_uses_cell_volume() {
        let g = Grid3::new(1.0, 4).unwrap();
        let f = ScalarField3::from_fn(g, |_| 2.0);
        // 2 * (2L)^3 = 16.
        assert!((f.integral() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn radial_integral_of_unit_ball_indicator() {
        let g = RadialGrid::new(2.0, 256).unwrap();
        let f = RadialField::from_fn(g, |r| if r < 1.0 { 1.0 } else { 0.0 });
        let ball = 4.0 * std::f64::consts::PI / 3.0;
        // Indicator is piecewise constant per cell; with r_max/points even the
        // jump can straddle a cell, so allow one cell of slop.
        assert!((f.integral() - ball).abs() < 4.0 * std::f64::consts::PI * 1.5 * g.spacing());
    }

    #[test]
    fn gaussian_moments_match_closed_form() {
        // f(x, v) = pi^{-3} exp(-|x|^2 - |v|^2): mass 1, zero momentum.
        let space = Grid3::new(5.0, 20).unwrap();
        let velocity = Grid3::new(5.0, 20).unwrap();
        let pg = PhaseGrid::new(space, velocity);
        let norm = std::f64::consts::PI.powi(-3);
        let f = PhaseField::from_fn(pg, |x, v| {
            let x2: f64 = x.iter().map(|c| c * c).sum();
            let v2: f64 = v.iter().map(|c| c * c).sum();
            norm * (-x2 - v2).exp()
        });
        let rho = mass_density(&f);
        let mass = rho.integral();
        assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
        let j = current_density(&f);
        assert!(j.max_abs_component() < 1e-14);
        // Midpoint sums of a centered Gaussian are symmetric to rounding.
        let e = j.energy();
        assert!(e < 1e-20);
    }

    #[test]
    fn fiber_slices_are_contiguous() {
        let pg = PhaseGrid::new(Grid3::new(1.0, 4).unwrap(), Grid3::new(1.0, 4).unwrap());
        let mut f = PhaseField::zeros(pg);
        f.fiber_mut(3)[5] = 7.0;
        assert_eq!(f.values()[3 * 64 + 5], 7.0);
        assert_eq!(f.fiber(3)[5], 7.0);
    }

    #[test]
    fn finiteness_guard_reports_context() {
        let g = Grid3::new(1.0, 4).unwrap();
        let mut f = ScalarField3::zeros(g);
        f.values_mut()[10] = f64::NAN;
        let err = f.ensure_finite("test field").unwrap_err();
        assert!(err.to_string().contains("test field"));
    }

    #[test]
    fn sign_parsing_round_trips() {
        for s in [InteractionSign::Gravitational, InteractionSign::Plasma] {
            assert_eq!(InteractionSign::parse(s.as_str()).unwrap(), s);
        }
        assert!(InteractionSign::parse("coulomb").is_err());
    }
}
