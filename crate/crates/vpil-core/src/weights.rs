//! Polynomial weights, the C^2 radial cutoff, mollified time indicators, and
//! the weighted norms they induce.
//!
//! Throughout, `<z> = (1 + |z|^2)^{1/2}`. The localized transport field
//! `chi(eps v) v` is bounded, and the weight `<x - chi(eps v) v t>^m <v>^m`
//! travels with it; the pointwise comparison
//!
//! ```text
//!   <x>^{-m} <v>^{-m}  <=  (2<T>)^m  <x - chi(eps v) v t>^{-m}
//! ```
//!
//! for `0 <= t <= T` is what lets static-weight bounds control the moving
//! norm, and is exposed here as a checkable predicate.

use crate::error::{Result, VpilError};
use crate::fields::PhaseField;
use crate::grid::WeightParams;

/// `<z> = (1 + |z|^2)^{1/2}` for a 3-vector.
pub fn bracket(z: [f64; 3]) -> f64 {
    (1.0 + z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt()
}

/// `<t> = (1 + t^2)^{1/2}` for a scalar.
pub fn bracket_scalar(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// Radial profile of the cutoff: 1 on [0, 1/2], 0 on [1, inf), quintic
/// blend between. The blend has vanishing first and second derivatives at
/// both ends, so the profile is C^2.
pub fn cutoff_profile(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let w = 2.0 * (s - 0.5);
        1.0 - w * w * w * (10.0 - 15.0 * w + 6.0 * w * w)
    }
}

/// C^2 cutoff `chi(z)`: identically 1 on the ball |z| <= 1/2, supported in
/// |z| <= 1, radially symmetric.
pub fn cutoff_chi(z: [f64; 3]) -> f64 {
    cutoff_profile((z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt())
}

/// Compactly supported C^2 bump `rho_eps` on [-eps/2, eps/2]:
/// `rho_eps(t) = (35 / (16 eps)) (1 - (2t/eps)^2)^3`, unit mass.
pub fn bump(t: f64, eps: f64) -> f64 {
    let s = 2.0 * t / eps;
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        35.0 / (16.0 * eps) * q * q * q
    }
}

/// Antiderivative of the bump: `int_{-inf}^{u} rho_eps`.
fn bump_cdf(u: f64, eps: f64) -> f64 {
    let s = (2.0 * u / eps).clamp(-1.0, 1.0);
    let s3 = s * s * s;
    let s5 = s3 * s * s;
    let s7 = s5 * s * s;
    0.5 + 35.0 / 32.0 * (s - s3 + 0.6 * s5 - s7 / 7.0)
}

/// Mollified indicator of `[a, b]` at width `w`: the convolution
/// `1_{[a,b]} * rho_w`, identically 1 on `[a + w/2, b - w/2]` and supported
/// in `[a - w/2, b + w/2]`.
fn mollified_indicator(t: f64, a: f64, b: f64, w: f64) -> f64 {
    bump_cdf(t - a, w) - bump_cdf(t - b, w)
}

/// Time cutoff `J^eps`: identically 1 on [0, T - eps], supported in
/// [-eps, T], C^2, non-increasing past T - eps.
pub fn time_cutoff_j(t: f64, eps: f64, t_horizon: f64) -> f64 {
    mollified_indicator(t, -0.5 * eps, t_horizon - 0.5 * eps, eps)
}

/// Startup indicator `I^eps`: identically 1 on [0, eps^kappa], supported in
/// [-eps^kappa, 2 eps^kappa], C^2, non-increasing on [eps^kappa, inf).
pub fn startup_indicator(t: f64, eps: f64, kappa: f64) -> f64 {
    let w = eps.powf(kappa);
    mollified_indicator(t, -0.5 * w, 1.5 * w, w)
}

/// Evaluate both sides of the moving-weight comparison at one phase point.
///
/// Returns `(lhs, rhs, holds)` with `lhs = <x>^{-m} <v>^{-m}`,
/// `rhs = (2<T>)^m <x - chi(eps v) v t>^{-m}`, and `holds = lhs <= rhs` up to
/// a relative rounding slack. Errors if `t` lies outside `[0, T]`.
pub fn transport_weight_bound(
    x: [f64; 3],
    v: [f64; 3],
    t: f64,
    params: &WeightParams,
) -> Result<(f64, f64, bool)> {
    if !(0.0..=params.t_horizon).contains(&t) {
        return Err(VpilError::InvalidParameter(format!(
            "time {t} outside [0, {}]",
            params.t_horizon
        )));
    }
    let m = params.m;
    let lhs = (bracket(x) * bracket(v)).powf(-m);
    let chi = cutoff_chi([v[0] * params.epsilon, v[1] * params.epsilon, v[2] * params.epsilon]);
    let shifted = [
        x[0] - chi * v[0] * t,
        x[1] - chi * v[1] * t,
        x[2] - chi * v[2] * t,
    ];
    let rhs = (2.0 * bracket_scalar(params.t_horizon)).powf(m) * bracket(shifted).powf(-m);
    let holds = lhs <= rhs * (1.0 + 1e-12);
    Ok((lhs, rhs, holds))
}

/// Weighted C^2-type norm of phase-space data:
///
/// ```text
///   sup <x>^m <v>^{2m} ( |f| + |v . grad_x f| + |grad_v f| + |Lap_x f| + |Lap_v f| )
/// ```
///
/// Derivatives are centered second-order differences where both neighbors
/// exist and one-sided at the boundary layer: `(f_{i+1} - f_i)/h` for first
/// derivatives, `(f_i - 2 f_{i+1} + f_{i+2})/h^2` for second (mirrored on the
/// far side). Errors if any sample is non-finite.
pub fn weighted_c2_norm(f: &PhaseField, params: &WeightParams) -> Result<f64> {
    f.ensure_finite("weighted norm input")?;
    let grid = f.grid();
    let nx = grid.space.points_per_axis();
    let nv = grid.velocity.points_per_axis();
    let hx = grid.space.spacing();
    let hv = grid.velocity.spacing();
    let nv3 = grid.velocity.len();
    let vals = f.values();

    //Lattice strides: spatial axes then velocity axes.
    let strides = [
        nx * nx * nv3,
        nx * nv3,
        nv3,
        nv * nv,
        nv,
        1,
    ];
    let dims = [nx, nx, nx, nv, nv, nv];
    let m = params.m;

    let mut sup: f64 = 0.0;
    let mut idx6 = [0usize; 6];
    for lin in 0..vals.len() {
        // Decode the 6D index incrementally.
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

        let x = [
            grid.space.coord(idx6[0]),
            grid.space.coord(idx6[1]),
            grid.space.coord(idx6[2]),
        ];
        let v = [
            grid.velocity.coord(idx6[3]),
            grid.velocity.coord(idx6[4]),
            grid.velocity.coord(idx6[5]),
        ];

        let center = vals[lin];
        let mut vdgx = 0.0;
        let mut gradv2 = 0.0;
        let mut lapx = 0.0;
        let mut lapv = 0.0;
        for axis in 0..6 {
            let h = if axis < 3 { hx } else { hv };
            let stride = strides[axis];
            let i = idx6[axis];
            let n = dims[axis];
            let (d1, d2);
            if i > 0 && i + 1 < n {
                let prev = vals[lin - stride];
                let next = vals[lin + stride];
                d1 = (next - prev) / (2.0 * h);
                d2 = (next - 2.0 * center + prev) / (h * h);
            } else if i == 0 {
                let next = vals[lin + stride];
                let next2 = vals[lin + 2 * stride];
                d1 = (next - center) / h;
                d2 = (center - 2.0 * next + next2) / (h * h);
            } else {
                let prev = vals[lin - stride];
                let prev2 = vals[lin - 2 * stride];
                d1 = (center - prev) / h;
                d2 = (center - 2.0 * prev + prev2) / (h * h);
            }
            if axis < 3 {
                vdgx += v[axis] * d1;
                lapx += d2;
            } else {
                gradv2 += d1 * d1;
                lapv += d2;
            }
        }

        let local = center.abs() + vdgx.abs() + gradv2.sqrt() + lapx.abs() + lapv.abs();
        let weight = bracket(x).powf(m) * bracket(v).powf(2.0 * m);
        sup = sup.max(weight * local);
    }
    if !sup.is_finite() {
        return Err(VpilError::NonFinite {
            context: "weighted norm",
        });
    }
    Ok(sup)
}

/// Moving iterate weight `<x - chi(eps v) v t>^m <v>^m` at one phase point.
pub fn iterate_weight(x: [f64; 3], v: [f64; 3], t: f64, m: f64, eps: f64) -> f64 {
    let chi = cutoff_chi([v[0] * eps, v[1] * eps, v[2] * eps]);
    let shifted = [
        x[0] - chi * v[0] * t,
        x[1] - chi * v[1] * t,
        x[2] - chi * v[2] * t,
    ];
    bracket(shifted).powf(m) * bracket(v).powf(m)
}

/// Sup of `iterate_weight * |f|` over a phase field at time `t`.
pub fn weighted_sup(f: &PhaseField, t: f64, m: f64, eps: f64) -> f64 {
    let grid = f.grid();
    let nx = grid.space.points_per_axis();
    let nv = grid.velocity.points_per_axis();
    let vals = f.values();
    let mut sup: f64 = 0.0;
    let mut lin = 0;
    for ix in 0..nx {
        for iy in 0..nx {
            for iz in 0..nx {
                let x = grid.space.position(ix, iy, iz);
                for jx in 0..nv {
                    for jy in 0..nv {
                        for jz in 0..nv {
                            let v = grid.velocity.position(jx, jy, jz);
                            let w = iterate_weight(x, v, t, m, eps);
                            sup = sup.max(w * vals[lin].abs());
                            lin += 1;
                        }
                    }
                }
            }
        }
    }
    sup
}
