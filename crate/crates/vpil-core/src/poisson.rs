//! Free-space Newtonian potential solvers.
//!
//! The inverse Laplacian appearing in both the collision operator and the
//! mean field is the convolution `(-Lap)^{-1} f (v) = (1/4pi) int f(u)/|u-v| du`
//! on all of R^3. Three discrete routes are provided, deliberately distinct so
//! they can cross-check one another:
//!
//! * [`SpectralPoisson`]: zero-padded FFT convolution with the exact kernel,
//!   the singular cell replaced by its cell average. Free-space boundary
//!   conditions are exact; the quadrature is second order.
//! * [`ConservativePoisson`]: direct diagonalization of the 7-point Dirichlet
//!   Laplacian (sine transform per axis), with far-field monopole values
//!   folded into the right-hand side. Satisfies a discrete Green identity, so
//!   collision sums built from it telescope to the boundary.
//! * Radial quadrature ([`RadialPotentialTable`]) and a radial conservative
//!   solve ([`radial_conservative_potential`]) for spherically symmetric data,
//!   using exact shell volumes.
//!
//! All-pairs summation ([`direct_convolution`]) duplicates the spectral route
//! without an FFT and is capped at 32 points per axis.

use crate::error::{Result, VpilError};
use crate::fields::{RadialField, ScalarField3, VectorField3};
use crate::grid::{Grid3, RadialGrid};
use crate::quadrature::unit_cube_kernel_average;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Residual acceptance threshold for the conservative solves, relative to the
/// right-hand side magnitude.
const RESIDUAL_RTOL: f64 = 1e-10;

/// Homogeneous 7-point Laplacian on a cube: ghost values are zero, so this is
/// the symmetric Dirichlet operator `A_h`.
pub fn laplacian_7pt(f: &ScalarField3) -> ScalarField3 {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let h2 = grid.spacing() * grid.spacing();
    let vals = f.values();
    let mut out = ScalarField3::zeros(grid);
    let o = out.values_mut();
    let s = [n * n, n, 1usize];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lin = (i * n + j) * n + k;
                let c = vals[lin];
                let mut acc = -6.0 * c;
                let idx = [i, j, k];
                for (axis, &st) in s.iter().enumerate() {
                    acc += if idx[axis] > 0 { vals[lin - st] } else { 0.0 };
                    acc += if idx[axis] + 1 < n { vals[lin + st] } else { 0.0 };
                }
                o[lin] = acc / h2;
            }
        }
    }
    out
}

/// Radial flux-form Laplacian with exact shell volumes:
/// `(Lap f)_i = (A_{i+1} F_{i+1} - A_i F_i) / V_i`, `F_i = (f_i - f_{i-1})/h`.
///
/// The origin face has zero area, so no condition is needed there; the outer
/// ghost value is zero. This operator is self-adjoint with respect to the
/// shell volumes and reproduces `Lap e^{-r^2} = -6` at the first node to
/// O(h^2), which the naive `r_i^2 h` weighting does not.
pub fn radial_laplacian(f: &RadialField) -> RadialField {
    let grid = f.grid();
    let n = grid.len();
    let h = grid.spacing();
    let vals = f.values();
    let mut out = RadialField::zeros(grid);
    let o = out.values_mut();
    for i in 0..n {
        let flux_lo = if i == 0 {
            0.0
        } else {
            grid.face_area(i) * (vals[i] - vals[i - 1]) / h
        };
        let flux_hi = if i + 1 == n {
            grid.face_area(n) * (0.0 - vals[i]) / h
        } else {
            grid.face_area(i + 1) * (vals[i + 1] - vals[i]) / h
        };
        o[i] = (flux_hi - flux_lo) / grid.shell_volume(i);
    }
    out
}

fn ensure_radial_tail(f: &RadialField) -> Result<()> {
    let max = f.max_abs();
    let last = f.values()[f.grid().len() - 1].abs();
    let threshold = 1e-8 * max;
    if max > 0.0 && last > threshold {
        return Err(VpilError::TailNotNegligible {
            value: last,
            threshold,
        });
    }
    Ok(())
}

/// Exact free-space potential of piecewise-constant radial data.
///
/// Splitting `(1/4pi) int f/|u - v| du` into shells gives
/// `u(r) = (1/r) int_0^r s^2 f(s) ds + int_r^inf s f(s) ds`; with `f` constant
/// per cell both integrals are polynomials of the face radii, evaluated here
/// exactly. `value_at` works for any radius, including 0 and beyond `r_max`
/// (where the potential is `mass / (4 pi r)`).
pub struct RadialPotentialTable {
    grid: RadialGrid,
    f: Vec<f64>,
    /// `cum_in[k] = int_0^{face_k} s^2 f ds`, length n+1.
    cum_in: Vec<f64>,
    /// `cum_out[k] = int_{face_k}^{r_max} s f ds`, length n+1.
    cum_out: Vec<f64>,
}

impl RadialPotentialTable {
    pub fn new(f: &RadialField) -> Result<Self> {
        f.ensure_finite("radial potential source")?;
        ensure_radial_tail(f)?;
        let grid = f.grid();
        let n = grid.len();
        let vals = f.values().to_vec();
        let mut cum_in = vec![0.0; n + 1];
        for i in 0..n {
            let a = grid.face(i);
            let b = grid.face(i + 1);
            cum_in[i + 1] = cum_in[i] + vals[i] * (b.powi(3) - a.powi(3)) / 3.0;
        }
        let mut cum_out = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let a = grid.face(i);
            let b = grid.face(i + 1);
            cum_out[i] = cum_out[i + 1] + vals[i] * (b * b - a * a) / 2.0;
        }
        Ok(Self {
            grid,
            f: vals,
            cum_in,
            cum_out,
        })
    }

    /// Total mass `4 pi int s^2 f ds`.
    pub fn mass(&self) -> f64 {
        FOUR_PI * self.cum_in[self.grid.len()]
    }

    /// Potential at an arbitrary radius `r >= 0`.
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.grid.len();
        if r <= 0.0 {
            return self.cum_out[0];
        }
        if r >= self.grid.r_max() {
            return self.cum_in[n] / r;
        }
        let h = self.grid.spacing();
        let k = ((r / h) as usize).min(n - 1);
        let a = self.grid.face(k);
        let b = self.grid.face(k + 1);
        let inner = self.cum_in[k] + self.f[k] * (r.powi(3) - a.powi(3)) / 3.0;
        let outer = self.cum_out[k + 1] + self.f[k] * (b * b - r * r) / 2.0;
        inner / r + outer
    }

    /// Potential sampled at the grid nodes.
    pub fn node_values(&self) -> RadialField {
        let grid = self.grid;
        RadialField::from_fn(grid, |r| self.value_at(r))
    }
}

/// Free-space potential of radial data at the grid nodes.
///
/// Errors if the data has not decayed at `r_max` (relative threshold 1e-8),
/// since the reconstruction silently assumes compact support.
pub fn radial_potential(f: &RadialField) -> Result<RadialField> {
    Ok(RadialPotentialTable::new(f)?.node_values())
}

/// Conservative radial potential: solves the flux-form system
/// `Lap u = -f` with a monopole ghost value `mass / (4 pi (r_max + h/2))`
/// beyond the outer face, by a tridiagonal solve. The resulting `u` pairs with
/// [`radial_laplacian`] in summation-by-parts identities.
pub fn radial_conservative_potential(f: &RadialField) -> Result<RadialField> {
    f.ensure_finite("conservative radial potential source")?;
    ensure_radial_tail(f)?;
    let grid = f.grid();
    let n = grid.len();
    let h = grid.spacing();
    let mass = f.integral();
    let ghost = mass / (FOUR_PI * (grid.r_max() + 0.5 * h));

    // Row i: a_i u_{i-1} + b_i u_i + c_i u_{i+1} = rhs_i.
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let area_lo = grid.face_area(i);
        let area_hi = grid.face_area(i + 1);
        let vol = grid.shell_volume(i);
        a[i] = area_lo / (h * vol);
        c[i] = area_hi / (h * vol);
        b[i] = -(area_lo + area_hi) / (h * vol);
        rhs[i] = -f.values()[i];
    }
    rhs[n - 1] -= c[n - 1] * ghost;
    c[n - 1] = 0.0;

    // Thomas elimination.
    let mut u = vec![0.0; n];
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = rhs[0] / b[0];
    for i in 1..n {
        let denom = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / denom;
        dp[i] = (rhs[i] - a[i] * dp[i - 1]) / denom;
    }
    u[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = dp[i] - cp[i] * u[i + 1];
    }

    let out = RadialField::from_values(grid, u)?;

    // Verify the solve: flux-form Laplacian with the ghost value restored.
    let mut res_max: f64 = 0.0;
    let mut rhs_max: f64 = 0.0;
    for i in 0..n {
        let uv = out.values();
        let flux_lo = if i == 0 {
            0.0
        } else {
            grid.face_area(i) * (uv[i] - uv[i - 1]) / h
        };
        let upper = if i + 1 == n { ghost } else { uv[i + 1] };
        let flux_hi = grid.face_area(i + 1) * (upper - uv[i]) / h;
        let lap = (flux_hi - flux_lo) / grid.shell_volume(i);
        res_max = res_max.max((lap + f.values()[i]).abs());
        rhs_max = rhs_max.max(f.values()[i].abs());
    }
    let tol = RESIDUAL_RTOL * (rhs_max + f64::MIN_POSITIVE);
    if res_max > tol {
        return Err(VpilError::ResidualTooLarge {
            residual: res_max,
            tolerance: tol,
        });
    }
    Ok(out)
}

/// Plans and applies complex FFTs along the three axes of a cube in place.
struct Fft3 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        debug_assert_eq!(data.len(), m * m * m);
        let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Axis 2: contiguous lines.
        for chunk in data.chunks_exact_mut(m) {
            plan.process_with_scratch(chunk, &mut scratch);
        }
        // Axes 1 and 0: gather strided lines through a buffer.
        let mut line = vec![Complex::new(0.0, 0.0); m];
        for i in 0..m {
            for k in 0..m {
                let base = i * m * m + k;
                for j in 0..m {
                    line[j] = data[base + j * m];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for j in 0..m {
                    data[base + j * m] = line[j];
                }
            }
        }
        for j in 0..m {
            for k in 0..m {
                let base = j * m + k;
                for i in 0..m {
                    line[i] = data[base + i * m * m];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for i in 0..m {
                    data[base + i * m * m] = line[i];
                }
            }
        }
    }

    fn forward(&self, data: &mut [Complex<f64>]) {
        self.transform(data, &self.forward.clone());
    }

    fn inverse(&self, data: &mut [Complex<f64>]) {
        self.transform(data, &self.inverse.clone());
    }
}

/// FFT convolution with the free-space kernel on a zero-padded cube.
///
/// Padding to twice the grid size makes the circular convolution equal to the
/// linear one for every displacement that occurs, so the only approximation is
/// the quadrature itself. Displacement zero uses the cell average of the
/// kernel, `avg 1/|z| over a cell = A / h` with `A` the unit-cube constant.
pub struct SpectralPoisson {
    grid: Grid3,
    m: usize,
    fft: Fft3,
    kernel_hat: Vec<Complex<f64>>,
    gradient_hat: Option<Box<[Vec<Complex<f64>>; 3]>>,
}

impl SpectralPoisson {
    pub fn new(grid: Grid3) -> Self {
        let n = grid.points_per_axis();
        let m = 2 * n;
        let fft = Fft3::new(m);
        let h = grid.spacing();
        let avg = unit_cube_kernel_average();
        let mut kernel = vec![Complex::new(0.0, 0.0); m * m * m];
        for di in 0..m {
            let dx = Self::signed_offset(di, m);
            for dj in 0..m {
                let dy = Self::signed_offset(dj, m);
                for dk in 0..m {
                    let dz = Self::signed_offset(dk, m);
                    let r2 = (dx * dx + dy * dy + dz * dz) as f64;
                    let val = if r2 == 0.0 {
                        avg / (FOUR_PI * h)
                    } else {
                        1.0 / (FOUR_PI * h * r2.sqrt())
                    };
                    kernel[(di * m + dj) * m + dk] = Complex::new(val, 0.0);
                }
            }
        }
        fft.forward(&mut kernel);
        Self {
            grid,
            m,
            fft,
            kernel_hat: kernel,
            gradient_hat: None,
        }
    }

    fn signed_offset(i: usize, m: usize) -> i64 {
        if i < m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    fn build_gradient_kernels(&mut self) {
        if self.gradient_hat.is_some() {
            return;
        }
        let m = self.m;
        let h = self.grid.spacing();
        let mut kernels = Box::new([
            vec![Complex::new(0.0, 0.0); m * m * m],
            vec![Complex::new(0.0, 0.0); m * m * m],
            vec![Complex::new(0.0, 0.0); m * m * m],
        ]);
        for di in 0..m {
            let dx = Self::signed_offset(di, m);
            for dj in 0..m {
                let dy = Self::signed_offset(dj, m);
                for dk in 0..m {
                    let dz = Self::signed_offset(dk, m);
                    let r2 = (dx * dx + dy * dy + dz * dz) as f64;
                    let lin = (di * m + dj) * m + dk;
                    if r2 == 0.0 {
                        continue;
                    }
                    // grad u (v) = sum_u f(u) (u - v) / (4 pi |u - v|^3) h^3;
                    // at displacement d = v_index - u_index the factor is -d h.
                    let denom = FOUR_PI * h * h * r2 * r2.sqrt();
                    kernels[0][lin] = Complex::new(-(dx as f64) / denom, 0.0);
                    kernels[1][lin] = Complex::new(-(dy as f64) / denom, 0.0);
                    kernels[2][lin] = Complex::new(-(dz as f64) / denom, 0.0);
                }
            }
        }
        for k in kernels.iter_mut() {
            self.fft.forward(k);
        }
        self.gradient_hat = Some(kernels);
    }

    fn embed(&self, f: &ScalarField3) -> Vec<Complex<f64>> {
        let n = self.grid.points_per_axis();
        let m = self.m;
        let mut buf = vec![Complex::new(0.0, 0.0); m * m * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    buf[(i * m + j) * m + k] =
                        Complex::new(f.values()[(i * n + j) * n + k], 0.0);
                }
            }
        }
        buf
    }

    fn extract(&self, buf: &[Complex<f64>]) -> ScalarField3 {
        let n = self.grid.points_per_axis();
        let m = self.m;
        let scale = self.grid.cell_volume() / (m * m * m) as f64;
        let mut out = ScalarField3::zeros(self.grid);
        let o = out.values_mut();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    o[(i * n + j) * n + k] = buf[(i * m + j) * m + k].re * scale;
                }
            }
        }
        out
    }

    /// `(-Lap)^{-1} f` at the grid nodes.
    pub fn potential(&mut self, f: &ScalarField3) -> Result<ScalarField3> {
        if f.grid() != self.grid {
            return Err(VpilError::InvalidParameter(
                "potential input grid does not match solver grid".into(),
            ));
        }
        f.ensure_finite("spectral potential source")?;
        let mut buf = self.embed(f);
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(self.kernel_hat.iter()) {
            *b *= *k;
        }
        self.fft.inverse(&mut buf);
        Ok(self.extract(&buf))
    }

    /// `grad (-Lap)^{-1} f` at the grid nodes.
    pub fn gradient_potential(&mut self, f: &ScalarField3) -> Result<VectorField3> {
        if f.grid() != self.grid {
            return Err(VpilError::InvalidParameter(
                "gradient input grid does not match solver grid".into(),
            ));
        }
        f.ensure_finite("gradient potential source")?;
        self.build_gradient_kernels();
        let f_hat = {
            let mut buf = self.embed(f);
            self.fft.forward(&mut buf);
            buf
        };
        let mut out = VectorField3::zeros(self.grid);
        let kernels = self.gradient_hat.as_ref().unwrap();
        for axis in 0..3 {
            let mut buf: Vec<Complex<f64>> = f_hat
                .iter()
                .zip(kernels[axis].iter())
                .map(|(a, b)| a * b)
                .collect();
            self.fft.inverse(&mut buf);
            let n = self.grid.points_per_axis();
            let m = self.m;
            let scale = self.grid.cell_volume() / (m * m * m) as f64;
            let comp = out.component_mut(axis);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        comp[(i * n + j) * n + k] = buf[(i * m + j) * m + k].re * scale;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// All-pairs reference convolution, same kernel as [`SpectralPoisson`].
/// O(N^6); refuses more than 32 points per axis.
pub fn direct_convolution(f: &ScalarField3) -> Result<ScalarField3> {
    let grid = f.grid();
    let n = grid.points_per_axis();
    if n > 32 {
        return Err(VpilError::DirectSumTooLarge { points: n, max: 32 });
    }
    f.ensure_finite("direct convolution source")?;
    let h = grid.spacing();
    let avg = unit_cube_kernel_average();
    let vals = f.values();
    let mut out = ScalarField3::zeros(grid);
    let o = out.values_mut();
    let vol = grid.cell_volume();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                let mut src = 0usize;
                for a in 0..n {
                    let dx = (a as i64 - i as i64) as f64;
                    for b in 0..n {
                        let dy = (b as i64 - j as i64) as f64;
                        for c in 0..n {
                            let dz = (c as i64 - k as i64) as f64;
                            let r2 = dx * dx + dy * dy + dz * dz;
                            let kern = if r2 == 0.0 {
                                avg / (FOUR_PI * h)
                            } else {
                                1.0 / (FOUR_PI * h * r2.sqrt())
                            };
                            acc += vals[src] * kern;
                            src += 1;
                        }
                    }
                }
                o[(i * n + j) * n + k] = acc * vol;
            }
        }
    }
    Ok(out)
}

/// Which discrete route computes a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialMethod {
    Spectral,
    Direct,
}

/// One-shot potential solve; builds and discards the spectral plan.
/// For repeated solves on one grid hold a [`SpectralPoisson`] instead.
pub fn inverse_laplacian_3d(f: &ScalarField3, method: PotentialMethod) -> Result<ScalarField3> {
    match method {
        PotentialMethod::Spectral => SpectralPoisson::new(f.grid()).potential(f),
        PotentialMethod::Direct => direct_convolution(f),
    }
}

/// Direct diagonalization of the 7-point Dirichlet Laplacian by the sine
/// transform, with monopole far-field values folded into the right-hand side.
///
/// Solving `A_h u = -f - b` (with `b` the ghost data divided by `h^2`) makes
/// `u` exactly consistent with [`laplacian_7pt`], which is what conservation
/// sums need: `sum u A_h w` telescopes with no interior remainder.
pub struct ConservativePoisson {
    grid: Grid3,
    /// Sine matrix, symmetric and orthonormal: S[j][k] = sqrt(2/(n+1)) sin(pi (j+1)(k+1)/(n+1)).
    sine: Vec<f64>,
    /// Eigenvalues of the 1D Dirichlet second difference divided by h^2.
    eigen: Vec<f64>,
}

impl ConservativePoisson {
    pub fn new(grid: Grid3) -> Self {
        let n = grid.points_per_axis();
        let h = grid.spacing();
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let mut sine = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                sine[j * n + k] = norm
                    * (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n as f64 + 1.0)).sin();
            }
        }
        let eigen = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * (k + 1) as f64 / (2.0 * (n as f64 + 1.0))).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        Self { grid, sine, eigen }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    /// Apply the sine matrix along all three axes in place.
    fn sine_transform(&self, data: &mut [f64]) {
        let n = self.grid.points_per_axis();
        let mut line = vec![0.0; n];
        // Axis 2.
        for chunk in data.chunks_exact_mut(n) {
            for (j, l) in line.iter_mut().enumerate() {
                let row = &self.sine[j * n..(j + 1) * n];
                *l = row.iter().zip(chunk.iter()).map(|(a, b)| a * b).sum();
            }
            chunk.copy_from_slice(&line);
        }
        // Axis 1.
        for i in 0..n {
            for k in 0..n {
                let base = i * n * n + k;
                for (j, l) in line.iter_mut().enumerate() {
                    let row = &self.sine[j * n..(j + 1) * n];
                    *l = (0..n).map(|q| row[q] * data[base + q * n]).sum();
                }
                for j in 0..n {
                    data[base + j * n] = line[j];
                }
            }
        }
        // Axis 0.
        for j in 0..n {
            for k in 0..n {
                let base = j * n + k;
                for (i, l) in line.iter_mut().enumerate() {
                    let row = &self.sine[i * n..(i + 1) * n];
                    *l = (0..n).map(|q| row[q] * data[base + q * n * n]).sum();
                }
                for i in 0..n {
                    data[base + i * n * n] = line[i];
                }
            }
        }
    }

    /// Ghost contribution `b`: for each node adjacent to the boundary, the
    /// monopole potential at its ghost positions divided by `h^2`.
    fn ghost_fold(&self, mass: f64) -> ScalarField3 {
        let grid = self.grid;
        let n = grid.points_per_axis();
        let h = grid.spacing();
        let mut b = ScalarField3::zeros(grid);
        let vals = b.values_mut();
        let ghost_coord = grid.extent_half() + 0.5 * h;
        let monopole = |x: f64, y: f64, z: f64| -> f64 {
            mass / (FOUR_PI * (x * x + y * y + z * z).sqrt())
        };
        for i in 0..n {
            let x = grid.coord(i);
            for j in 0..n {
                let y = grid.coord(j);
                for k in 0..n {
                    let z = grid.coord(k);
                    let lin = (i * n + j) * n + k;
                    let mut acc = 0.0;
                    if i == 0 {
                        acc += monopole(-ghost_coord, y, z);
                    }
                    if i + 1 == n {
                        acc += monopole(ghost_coord, y, z);
                    }
                    if j == 0 {
                        acc += monopole(x, -ghost_coord, z);
                    }
                    if j + 1 == n {
                        acc += monopole(x, ghost_coord, z);
                    }
                    if k == 0 {
                        acc += monopole(x, y, -ghost_coord);
                    }
                    if k + 1 == n {
                        acc += monopole(x, y, ghost_coord);
                    }
                    vals[lin] = acc / (h * h);
                }
            }
        }
        b
    }

    /// Solve `A_h u = -f - b` and verify the residual.
    pub fn solve(&self, f: &ScalarField3) -> Result<ScalarField3> {
        if f.grid() != self.grid {
            return Err(VpilError::InvalidParameter(
                "conservative solve input grid does not match solver grid".into(),
            ));
        }
        f.ensure_finite("conservative potential source")?;
        let mass = f.integral();
        let b = self.ghost_fold(mass);
        let mut rhs: Vec<f64> = f
            .values()
            .iter()
            .zip(b.values().iter())
            .map(|(fv, bv)| -fv - bv)
            .collect();
        let rhs_max = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        self.sine_transform(&mut rhs);
        let n = self.grid.points_per_axis();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lam = self.eigen[i] + self.eigen[j] + self.eigen[k];
                    rhs[(i * n + j) * n + k] /= lam;
                }
            }
        }
        self.sine_transform(&mut rhs);
        let u = ScalarField3::from_values(self.grid, rhs)?;

        // Residual against the homogeneous operator and the folded data.
        let au = laplacian_7pt(&u);
        let mut res: f64 = 0.0;
        for lin in 0..self.grid.len() {
            let r = au.values()[lin] + f.values()[lin] + b.values()[lin];
            res = res.max(r.abs());
        }
        let tol = RESIDUAL_RTOL * (rhs_max + f64::MIN_POSITIVE);
        if res > tol {
            return Err(VpilError::ResidualTooLarge {
                residual: res,
                tolerance: tol,
            });
        }
        Ok(u)
    }
}
