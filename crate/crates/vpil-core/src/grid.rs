//! Uniform cell-centered grids.
//!
//! Every grid in the crate is cell-centered: nodes sit at cell midpoints, so
//! no node falls on a domain boundary and, for the symmetric cubes used in
//! velocity space, none falls on the origin either. That keeps the Newtonian
//! kernel 1/|u - v| evaluable node-to-node with a single cell-averaged value
//! for the coincident cell.

use crate::error::{Result, VpilError};
use serde::{Deserialize, Serialize};

/// Cube `[-L, L]^3` with `n` cells per axis, nodes at cell centers.
///
/// `n` must be even (so the origin is a cell corner, never a node) and at
/// least 4. Spacing is `2L / n`; node `i` along an axis sits at
/// `-L + (i + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    extent_half: f64,
    points_per_axis: usize,
    spacing: f64,
}

impl Grid3 {
    pub fn new(extent_half: f64, points_per_axis: usize) -> Result<Self> {
        if !extent_half.is_finite() || extent_half <= 0.0 {
            return Err(VpilError::InvalidGrid(format!(
                "extent_half must be positive and finite, got {extent_half}"
            )));
        }
        if points_per_axis < 4 {
            return Err(VpilError::InvalidGrid(format!(
                "points_per_axis must be at least 4, got {points_per_axis}"
            )));
        }
        if points_per_axis % 2 != 0 {
            return Err(VpilError::InvalidGrid(format!(
                "points_per_axis must be even, got {points_per_axis}"
            )));
        }
        let spacing = 2.0 * extent_half / points_per_axis as f64;
        Ok(Self {
            extent_half,
            points_per_axis,
            spacing,
        })
    }

    pub fn extent_half(&self) -> f64 {
        self.extent_half
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinate of node `i` along any axis, `0 <= i < n`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent_half + (i as f64 + 0.5) * self.spacing
    }

    /// Largest |coordinate| attained by any node: `L - h/2`.
    pub fn max_abs_coord(&self) -> f64 {
        self.extent_half - 0.5 * self.spacing
    }

    /// Total node count `n^3`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major linear index of node `(i, j, k)`.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.points_per_axis && j < self.points_per_axis && k < self.points_per_axis);
        (i * self.points_per_axis + j) * self.points_per_axis + k
    }

    /// Inverse of [`Grid3::index`].
    pub fn unindex(&self, lin: usize) -> (usize, usize, usize) {
        let n = self.points_per_axis;
        (lin / (n * n), (lin / n) % n, lin % n)
    }

    /// Position of node `(i, j, k)`.
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// All node coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coord(i)).collect()
    }
}

/// Radial grid on `(0, r_max]` with `n` cells, nodes at shell midpoints.
///
/// Node `i` sits at `(i + 1/2) h` with `h = r_max / n`; the first node is at
/// `h/2`, never at the origin. Faces sit at `i h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    points: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, points: usize) -> Result<Self> {
        if !r_max.is_finite() || r_max <= 0.0 {
            return Err(VpilError::InvalidGrid(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        if points < 8 {
            return Err(VpilError::InvalidGrid(format!(
                "radial grid needs at least 8 points, got {points}"
            )));
        }
        Ok(Self {
            r_max,
            points,
            spacing: r_max / points as f64,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Radius of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing
    }

    /// Radius of face `i`, `0 <= i <= n`. Face 0 is the origin.
    pub fn face(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    /// Exact volume of shell `i`: `(4 pi / 3)(r_{i+1}^3 - r_i^3)` between faces.
    ///
    /// Quadrature against these volumes integrates piecewise-constant radial
    /// data exactly; the midpoint weights `4 pi r_i^2 h` do not (they are off
    /// by O(1) on the first shell, which matters for Laplacians near r = 0).
    pub fn shell_volume(&self, i: usize) -> f64 {
        let a = self.face(i);
        let b = self.face(i + 1);
        4.0 * std::f64::consts::PI / 3.0 * (b.powi(3) - a.powi(3))
    }

    /// Area of face `i`: `4 pi r_i^2`.
    pub fn face_area(&self, i: usize) -> f64 {
        let r = self.face(i);
        4.0 * std::f64::consts::PI * r * r
    }
}

/// Product grid for phase space: a spatial cube times a velocity cube.
///
/// Linear layout is x-major: the velocity cube attached to one spatial node
/// is contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub space: Grid3,
    pub velocity: Grid3,
}

impl PhaseGrid {
    pub fn new(space: Grid3, velocity: Grid3) -> Self {
        Self { space, velocity }
    }

    pub fn len(&self) -> usize {
        self.space.len() * self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index from linear spatial and velocity indices.
    pub fn index(&self, ix: usize, iv: usize) -> usize {
        ix * self.velocity.len() + iv
    }

    /// Phase-space cell volume `h_x^3 h_v^3`.
    pub fn cell_volume(&self) -> f64 {
        self.space.cell_volume() * self.velocity.cell_volume()
    }
}

/// Parameters of the weighted norms used by the linearized scheme:
/// decay exponent `m`, time horizon `T`, localization scale `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub m: f64,
    pub t_horizon: f64,
    pub epsilon: f64,
}

impl WeightParams {
    pub fn new(m: f64, t_horizon: f64, epsilon: f64) -> Result<Self> {
        if !(m.is_finite() && m > 3.0) {
            return Err(VpilError::InvalidParameter(format!(
                "weight exponent m must exceed 3, got {m}"
            )));
        }
        if !(t_horizon.is_finite() && t_horizon > 0.0) {
            return Err(VpilError::InvalidParameter(format!(
                "time horizon T must be positive, got {t_horizon}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0) {
            return Err(VpilError::InvalidParameter(format!(
                "localization scale epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        Ok(Self {
            m,
            t_horizon,
            epsilon,
        })
    }

    /// The inertia comparison needs integrable |x|^2 tails, hence m > 6.
    pub fn require_virial_decay(&self) -> Result<()> {
        if self.m > 6.0 {
            Ok(())
        } else {
            Err(VpilError::InvalidParameter(format!(
                "virial moments need weight exponent m > 6, got {}",
                self.m
            )))
        }
    }
}
