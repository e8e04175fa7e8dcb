//! Scalar functionals of the distribution and the moment identities that
//! connect them.
//!
//! The record tracks mass, momentum, kinetic energy KE = (1/2)||v|^2 f|,
//! field energy E_E = (1/2)|E|^2 summed over space, entropy H = |f log f|,
//! the spatial moment of inertia I = (1/2)||x|^2 f|, and the chain of its
//! time derivatives:
//!
//!   I'   = |(x.v) f|
//!   I''  = 2 KE + (1/2)|(K*rho) rho|   (gravitational: 2 KE - E_E,
//!                                       plasma: 2 KE + E_E)
//!   d/dt(2 KE -+ 2 E_E) = 4 ||(-Lap_v)^{-1} f . f|   when collisions act,
//!                          0 when they do not.
//!
//! `inertia_ddd` stores the right-hand side of that last identity for the
//! model actually being run, so a collisionless series carries exact zeros
//! there and the pair check reduces to conservation of 2 KE -+ 2 E_E.

use crate::collision::{radial_variant_potential, PotentialVariant, VelocitySolvers};
use crate::error::{Result, VpilError};
use crate::fields::{
    mass_density, self_consistent_field, InteractionSign, PhaseField, RadialField,
};
use crate::grid::PhaseGrid;
use crate::poisson::SpectralPoisson;

/// Values below this are treated as exact zeros inside f log f.
pub const ENTROPY_FLOOR: f64 = 1e-30;

/// Largest radial grid the O(N^2) entropy dissipation quadrature accepts.
pub const DISSIPATION_MAX_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub ke: f64,
    pub field_energy: f64,
    pub entropy: f64,
    pub inertia: f64,
    pub mixed_moment: f64,
    pub inertia_dd: f64,
    pub inertia_ddd: f64,
    pub clipped_mass: f64,
    pub min_f: f64,
}

fn entropy_term(f: f64) -> f64 {
    if f < ENTROPY_FLOOR {
        0.0
    } else {
        f * f.ln()
    }
}

/// Sign of the (1/2)|(K*rho) rho| term in I'': -1 gravitational, +1 plasma.
fn interaction_energy_sign(sign: InteractionSign) -> f64 {
    match sign {
        InteractionSign::Gravitational => -1.0,
        InteractionSign::Plasma => 1.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeasureSettings {
    pub sign: InteractionSign,
    pub collisions_enabled: bool,
    pub field_enabled: bool,
    pub variant: PotentialVariant,
}

/// Holds the solver caches a phase-space measurement needs.
pub struct DiagnosticsEngine {
    grid: PhaseGrid,
    space_solver: SpectralPoisson,
    velocity_solvers: VelocitySolvers,
    v_coord: Vec<[f64; 3]>,
    v_sq: Vec<f64>,
}

impl DiagnosticsEngine {
    pub fn new(grid: PhaseGrid) -> Self {
        let vg = grid.velocity;
        let mut v_coord = Vec::with_capacity(vg.len());
        let mut v_sq = Vec::with_capacity(vg.len());
        for iv in 0..vg.len() {
            let (a, b, c) = vg.unindex(iv);
            let v = [vg.coord(a), vg.coord(b), vg.coord(c)];
            v_coord.push(v);
            v_sq.push(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        Self {
            grid,
            space_solver: SpectralPoisson::new(grid.space),
            velocity_solvers: VelocitySolvers::new(grid.velocity),
            v_coord,
            v_sq,
        }
    }

    pub fn measure(
        &mut self,
        f: &PhaseField,
        t: f64,
        clipped_mass: f64,
        settings: &MeasureSettings,
    ) -> Result<DiagnosticsRecord> {
        f.ensure_finite("diagnostics input")?;
        let xg = self.grid.space;
        let cell = self.grid.cell_volume();

        let mut mass = 0.0;
        let mut momentum = [0.0; 3];
        let mut v2_total = 0.0;
        let mut entropy = 0.0;
        let mut inertia2 = 0.0;
        let mut mixed = 0.0;
        let mut min_f = f64::INFINITY;
        for ix in 0..xg.len() {
            let (i, j, k) = xg.unindex(ix);
            let x = xg.position(i, j, k);
            let x_sq = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let fiber = f.fiber(ix);
            let (mut s0, mut s2, mut slog) = (0.0, 0.0, 0.0);
            let mut sv = [0.0; 3];
            for (iv, &fv) in fiber.iter().enumerate() {
                s0 += fv;
                s2 += self.v_sq[iv] * fv;
                slog += entropy_term(fv);
                let v = self.v_coord[iv];
                sv[0] += v[0] * fv;
                sv[1] += v[1] * fv;
                sv[2] += v[2] * fv;
                if fv < min_f {
                    min_f = fv;
                }
            }
            mass += s0;
            v2_total += s2;
            entropy += slog;
            inertia2 += x_sq * s0;
            mixed += x[0] * sv[0] + x[1] * sv[1] + x[2] * sv[2];
            momentum[0] += sv[0];
            momentum[1] += sv[1];
            momentum[2] += sv[2];
        }
        mass *= cell;
        v2_total *= cell;
        entropy *= cell;
        inertia2 *= cell;
        mixed *= cell;
        for p in momentum.iter_mut() {
            *p *= cell;
        }
        let ke = 0.5 * v2_total;
        let inertia = 0.5 * inertia2;

        let field_energy = if settings.field_enabled {
            let rho = mass_density(f);
            let field = self_consistent_field(&rho, settings.sign, &mut self.space_solver)?;
            field.energy()
        } else {
            0.0
        };

        let inertia_ddd = if settings.collisions_enabled {
            let mut total = 0.0;
            let nv3 = self.grid.velocity.len();
            let mut buf = crate::fields::ScalarField3::zeros(self.grid.velocity);
            for ix in 0..xg.len() {
                let fiber = f.fiber(ix);
                if fiber.iter().all(|&v| v == 0.0) {
                    continue;
                }
                buf.values_mut()[..nv3].copy_from_slice(fiber);
                let u = self.velocity_solvers.potential(&buf, settings.variant)?;
                let mut s = 0.0;
                for (uv, fv) in u.values().iter().zip(fiber) {
                    s += uv * fv;
                }
                total += s;
            }
            4.0 * total * cell * self.grid.velocity.cell_volume()
        } else {
            0.0
        };

        let inertia_dd = 2.0 * ke + interaction_energy_sign(settings.sign) * field_energy;
        Ok(DiagnosticsRecord {
            t,
            mass,
            momentum,
            ke,
            field_energy,
            entropy,
            inertia,
            mixed_moment: mixed,
            inertia_dd,
            inertia_ddd,
            clipped_mass,
            min_f,
        })
    }
}

/// Record of a space-free (radial velocity) state. Spatial moments are zero
/// by convention; `inertia_dd` reduces to 2 KE and `inertia_ddd` to
/// 4 |(-Lap)^{-1} f . f|.
pub fn measure_radial(
    f: &RadialField,
    t: f64,
    clipped_mass: f64,
    variant: PotentialVariant,
) -> Result<DiagnosticsRecord> {
    f.ensure_finite("diagnostics input")?;
    let grid = f.grid();
    let mut mass = 0.0;
    let mut v2_total = 0.0;
    let mut entropy = 0.0;
    let mut min_f = f64::INFINITY;
    for (i, &fv) in f.values().iter().enumerate() {
        let w = grid.shell_volume(i);
        let r = grid.node(i);
        mass += fv * w;
        v2_total += r * r * fv * w;
        entropy += entropy_term(fv) * w;
        if fv < min_f {
            min_f = fv;
        }
    }
    let u = radial_variant_potential(f, variant)?;
    let mut uf = 0.0;
    for (i, (&uv, &fv)) in u.values().iter().zip(f.values()).enumerate() {
        uf += uv * fv * grid.shell_volume(i);
    }
    let ke = 0.5 * v2_total;
    Ok(DiagnosticsRecord {
        t,
        mass,
        momentum: [0.0; 3],
        ke,
        field_energy: 0.0,
        entropy,
        inertia: 0.0,
        mixed_moment: 0.0,
        inertia_dd: 2.0 * ke,
        inertia_ddd: 4.0 * uf,
        clipped_mass,
        min_f,
    })
}

/// One compared identity over a uniformly sampled series: the largest
/// centered difference, the largest absolute disagreement with the identity's
/// right-hand side, and that disagreement relative to the pair's scale.
#[derive(Debug, Clone, Copy)]
pub struct VirialPair {
    pub max_rate: f64,
    pub max_difference: f64,
    pub mismatch: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct VirialReport {
    /// dI/dt vs the mixed moment.
    pub inertia_rate: VirialPair,
    /// d(mixed moment)/dt vs I''.
    pub mixed_rate: VirialPair,
    /// d/dt of (2 KE -+ 2 E_E) vs the collision production term.
    pub energy_rate: VirialPair,
    pub interior_samples: usize,
}

fn pair_report(lhs: &[f64], rhs: &[f64]) -> VirialPair {
    let mut max_rate = 0.0_f64;
    let mut max_difference = 0.0_f64;
    let mut scale = 0.0_f64;
    for (&l, &r) in lhs.iter().zip(rhs) {
        max_rate = max_rate.max(l.abs());
        max_difference = max_difference.max((l - r).abs());
        scale = scale.max(l.abs()).max(r.abs());
    }
    let mismatch = if scale > 0.0 {
        max_difference / scale
    } else {
        0.0
    };
    VirialPair {
        max_rate,
        max_difference,
        mismatch,
    }
}

/// Centered-difference check of the three moment identities over a series
/// sampled at uniform spacing. Needs at least 3 samples.
pub fn virial_consistency(
    series: &[DiagnosticsRecord],
    sign: InteractionSign,
) -> Result<VirialReport> {
    if series.len() < 3 {
        return Err(VpilError::Diagnostics(format!(
            "virial consistency needs at least 3 samples, got {}",
            series.len()
        )));
    }
    let dt = series[1].t - series[0].t;
    if !(dt > 0.0) {
        return Err(VpilError::Diagnostics(format!(
            "sample spacing must be positive, got {dt}"
        )));
    }
    for w in series.windows(2) {
        let step = w[1].t - w[0].t;
        if (step - dt).abs() > 1e-9 * dt {
            return Err(VpilError::Diagnostics(format!(
                "sample spacing not uniform: {step} vs {dt}"
            )));
        }
    }
    let n = series.len();
    let s = interaction_energy_sign(sign);
    let energy_form =
        |r: &DiagnosticsRecord| -> f64 { r.inertia_dd + s * r.field_energy };

    let mut d_inertia = Vec::with_capacity(n - 2);
    let mut mixed = Vec::with_capacity(n - 2);
    let mut d_mixed = Vec::with_capacity(n - 2);
    let mut dd = Vec::with_capacity(n - 2);
    let mut d_energy = Vec::with_capacity(n - 2);
    let mut ddd = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let two_dt = 2.0 * dt;
        d_inertia.push((series[i + 1].inertia - series[i - 1].inertia) / two_dt);
        mixed.push(series[i].mixed_moment);
        d_mixed.push((series[i + 1].mixed_moment - series[i - 1].mixed_moment) / two_dt);
        dd.push(series[i].inertia_dd);
        d_energy.push((energy_form(&series[i + 1]) - energy_form(&series[i - 1])) / two_dt);
        ddd.push(series[i].inertia_ddd);
    }
    Ok(VirialReport {
        inertia_rate: pair_report(&d_inertia, &mixed),
        mixed_rate: pair_report(&d_mixed, &dd),
        energy_rate: pair_report(&d_energy, &ddd),
        interior_samples: n - 2,
    })
}

/// Entropy production D >= 0 of a radial distribution, so dH/dt ~ -D.
///
/// The angular integrals of the 1/|u-v| kernel against 1 and cos(gamma)
/// reduce the six-fold integral to a double radial quadrature:
///
///   D = pi || f(r) f(s) [ 2 r s min(r,s) (a^2 + b^2)
///                          - (4/3) min(r,s)^3 a b ] dr ds,
///
/// with a = (log f)'(r), b = (log f)'(s); the bracket is nonnegative for
/// every pair, so positivity survives quadrature. Values below the entropy
/// floor are clamped before taking logs; if that touches more than 10% of
/// the nodes the data is too close to zero for log-gradients to mean much
/// and the call fails instead.
pub fn entropy_dissipation_radial(f: &RadialField) -> Result<f64> {
    f.ensure_finite("entropy dissipation input")?;
    let grid = f.grid();
    let n = grid.len();
    if n > DISSIPATION_MAX_POINTS {
        return Err(VpilError::InvalidParameter(format!(
            "entropy dissipation quadrature is O(N^2); {n} nodes exceeds the cap of {DISSIPATION_MAX_POINTS}"
        )));
    }
    if f.min() < 0.0 {
        return Err(VpilError::Diagnostics(
            "entropy dissipation needs a nonnegative distribution".into(),
        ));
    }
    let mut floored = 0usize;
    let clamped: Vec<f64> = f
        .values()
        .iter()
        .map(|&v| {
            if v < ENTROPY_FLOOR {
                floored += 1;
                ENTROPY_FLOOR
            } else {
                v
            }
        })
        .collect();
    if 10 * floored > n {
        return Err(VpilError::Diagnostics(format!(
            "positivity floor touched {floored} of {n} nodes; log-gradients unreliable"
        )));
    }
    let h = grid.spacing();
    let log_f: Vec<f64> = clamped.iter().map(|&v| v.ln()).collect();
    let mut slope = vec![0.0; n];
    for i in 0..n {
        slope[i] = if i == 0 {
            (log_f[1] - log_f[0]) / h
        } else if i == n - 1 {
            (log_f[n - 1] - log_f[n - 2]) / h
        } else {
            (log_f[i + 1] - log_f[i - 1]) / (2.0 * h)
        };
    }
    let mut total = 0.0;
    for i in 0..n {
        let r = grid.node(i);
        let fi = clamped[i];
        if fi <= ENTROPY_FLOOR {
            continue;
        }
        let a = slope[i];
        for j in 0..n {
            let s = grid.node(j);
            let fj = clamped[j];
            if fj <= ENTROPY_FLOOR {
                continue;
            }
            let b = slope[j];
            let min = r.min(s);
            let bracket = 2.0 * r * s * min * (a * a + b * b)
                - (4.0 / 3.0) * min * min * min * a * b;
            total += fi * fj * bracket;
        }
    }
    Ok(std::f64::consts::PI * total * h * h)
}

/// I'(t)^2 <= 2 I(t) * 2 KE(t), with I'' replaced by its field-free
/// collisionless value; holds for every nonnegative f by Cauchy-Schwarz.
pub fn cauchy_schwarz_check(record: &DiagnosticsRecord) -> bool {
    let bound = 2.0 * record.inertia * 2.0 * record.ke;
    record.mixed_moment * record.mixed_moment <= bound + 1e-12 * bound.max(1.0)
}

pub const CSV_HEADER: &str = "t,mass,px,py,pz,ke,field_energy,entropy,inertia,mixed_moment,inertia_dd,inertia_ddd,clipped_mass,min_f";

/// One CSV row, 17 significant digits per value, matching `CSV_HEADER`.
pub fn csv_row(r: &DiagnosticsRecord) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.t,
        r.mass,
        r.momentum[0],
        r.momentum[1],
        r.momentum[2],
        r.ke,
        r.field_energy,
        r.entropy,
        r.inertia,
        r.mixed_moment,
        r.inertia_dd,
        r.inertia_ddd,
        r.clipped_mass,
        r.min_f
    )
}
