//! Flat `key = value` run configuration: parsing, validation with defaults,
//! and normalized re-emission.
//!
//! Lines hold one `key = value` pair; `#` starts a comment; keys use dotted
//! namespaces (`collision.stepper`). Every key must be consumed by the
//! selected command's schema, so typos surface as errors instead of silently
//! using defaults. Normalized emission sorts keys and prints one pair per
//! line, which round-trips byte-identically.

use std::collections::{BTreeMap, BTreeSet};

use crate::collision::{CollisionSettings, CollisionStepper, PotentialVariant};
use crate::criterion::{k_of_m, ConditionParams, CriterionInput, PhiParams};
use crate::error::{Result, VpilError};
use crate::fields::{InteractionSign, PhaseField, RadialField};
use crate::grid::{Grid3, PhaseGrid, RadialGrid};
use crate::linear::LinearConfig;
use crate::sim::KineticParams;
use crate::transport::Reconstruction;

/// A parsed configuration file: raw key/value pairs in sorted order.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let eq = line.find('=').ok_or_else(|| {
                VpilError::Config(format!(
                    "line {}: expected `key = value`, got {:?}",
                    lineno + 1,
                    line
                ))
            })?;
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-')
            {
                return Err(VpilError::Config(format!(
                    "line {}: invalid key {:?}",
                    lineno + 1,
                    key
                )));
            }
            if value.is_empty() {
                return Err(VpilError::Config(format!(
                    "line {}: key {:?} has an empty value",
                    lineno + 1,
                    key
                )));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(VpilError::Config(format!(
                    "line {}: duplicate key {:?}",
                    lineno + 1,
                    key
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Sorted `key = value` lines; parsing the output and emitting again
    /// reproduces it byte for byte.
    pub fn normalized(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn reader(&self) -> ConfigReader<'_> {
        ConfigReader {
            file: self,
            seen: BTreeSet::new(),
        }
    }
}

/// Typed access that records which keys were read, so leftovers can be
/// rejected.
pub struct ConfigReader<'a> {
    file: &'a ConfigFile,
    seen: BTreeSet<&'a str>,
}

impl<'a> ConfigReader<'a> {
    pub fn get_str(&mut self, key: &str) -> Option<&'a str> {
        if let Some((k, v)) = self.file.entries.get_key_value(key) {
            self.seen.insert(k.as_str());
            Some(v.as_str())
        } else {
            None
        }
    }

    pub fn require_str(&mut self, key: &str) -> Result<&'a str> {
        self.get_str(key)
            .ok_or_else(|| VpilError::Config(format!("missing required key {key:?}")))
    }

    pub fn get_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(s) => s.parse::<f64>().map(Some).map_err(|_| {
                VpilError::Config(format!("key {key:?}: expected a number, got {s:?}"))
            }),
        }
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| VpilError::Config(format!("missing required key {key:?}")))
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn get_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(s) => s.parse::<usize>().map(Some).map_err(|_| {
                VpilError::Config(format!(
                    "key {key:?}: expected a nonnegative integer, got {s:?}"
                ))
            }),
        }
    }

    pub fn require_usize(&mut self, key: &str) -> Result<usize> {
        self.get_usize(key)?
            .ok_or_else(|| VpilError::Config(format!("missing required key {key:?}")))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_usize(key)?.unwrap_or(default))
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.get_str(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(VpilError::Config(format!(
                "key {key:?}: expected true or false, got {other:?}"
            ))),
        }
    }

    /// Errors if any key in the file was never read by the schema.
    pub fn finish(self) -> Result<()> {
        let unknown: Vec<&str> = self
            .file
            .entries
            .keys()
            .map(String::as_str)
            .filter(|k| !self.seen.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(VpilError::Config(format!(
                "unknown key(s): {}",
                unknown.join(", ")
            )))
        }
    }
}

fn collision_settings(r: &mut ConfigReader<'_>) -> Result<CollisionSettings> {
    let defaults = CollisionSettings::default();
    let variant = match r.get_str("collision.variant") {
        Some(s) => PotentialVariant::parse(s)?,
        None => defaults.variant,
    };
    let stepper = match r.get_str("collision.stepper") {
        Some(s) => CollisionStepper::parse(s)?,
        None => defaults.stepper,
    };
    let positivity_floor = r.f64_or("collision.positivity_floor", defaults.positivity_floor)?;
    Ok(CollisionSettings {
        variant,
        stepper,
        positivity_floor,
    })
}

/// Gaussian phase-space initial data
/// `amplitude * exp(-|x|^2/x_width^2 - |v - (vx_shift,0,0) + inflow x|^2/v_width^2)`.
/// A positive `inflow` centers the velocity distribution on the radial
/// infall profile `v = -inflow * x`, so the initial mixed moment
/// `int (x.v) f` is strictly negative: the configuration the breakdown
/// criterion starts from.
#[derive(Debug, Clone, Copy)]
pub struct PhaseGaussianInit {
    pub amplitude: f64,
    pub x_width: f64,
    pub v_width: f64,
    pub vx_shift: f64,
    pub inflow: f64,
}

impl PhaseGaussianInit {
    pub fn build(&self, grid: PhaseGrid) -> PhaseField {
        let (a, xw, vw, shift) = (self.amplitude, self.x_width, self.v_width, self.vx_shift);
        let lambda = self.inflow;
        PhaseField::from_fn(grid, |x, v| {
            let x2: f64 = x.iter().map(|c| c * c).sum();
            let dv = [
                v[0] - shift + lambda * x[0],
                v[1] + lambda * x[1],
                v[2] + lambda * x[2],
            ];
            let v2: f64 = dv.iter().map(|c| c * c).sum();
            a * (-x2 / (xw * xw) - v2 / (vw * vw)).exp()
        })
    }
}

/// Radial Gaussian `amplitude * exp(-r^2/width^2)`.
#[derive(Debug, Clone, Copy)]
pub struct RadialGaussianInit {
    pub amplitude: f64,
    pub width: f64,
}

impl RadialGaussianInit {
    pub fn build(&self, grid: RadialGrid) -> RadialField {
        let (a, w) = (self.amplitude, self.width);
        RadialField::from_fn(grid, |r| a * (-r * r / (w * w)).exp())
    }
}

fn phase_gaussian(r: &mut ConfigReader<'_>) -> Result<PhaseGaussianInit> {
    let init = PhaseGaussianInit {
        amplitude: r.f64_or("init.amplitude", 1.0)?,
        x_width: r.f64_or("init.x_width", 1.0)?,
        v_width: r.f64_or("init.v_width", 1.0)?,
        vx_shift: r.f64_or("init.vx_shift", 0.0)?,
        inflow: r.f64_or("init.inflow", 0.0)?,
    };
    for (name, v) in [
        ("init.amplitude", init.amplitude),
        ("init.x_width", init.x_width),
        ("init.v_width", init.v_width),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(VpilError::Config(format!(
                "key {name:?}: must be positive and finite, got {v}"
            )));
        }
    }
    if !init.inflow.is_finite() {
        return Err(VpilError::Config(format!(
            "key \"init.inflow\": must be finite, got {}",
            init.inflow
        )));
    }
    Ok(init)
}

/// Full phase-space simulation configuration.
#[derive(Debug, Clone)]
pub struct VpilRunConfig {
    pub sign: InteractionSign,
    pub space_extent: f64,
    pub space_points: usize,
    pub velocity_extent: f64,
    pub velocity_points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub reconstruction: Reconstruction,
    pub collisions_enabled: bool,
    pub field_enabled: bool,
    pub collision: CollisionSettings,
    pub init: PhaseGaussianInit,
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
}

impl VpilRunConfig {
    pub fn grid(&self) -> Result<PhaseGrid> {
        Ok(PhaseGrid::new(
            Grid3::new(self.space_extent, self.space_points)?,
            Grid3::new(self.velocity_extent, self.velocity_points)?,
        ))
    }

    pub fn kinetic_params(&self) -> KineticParams {
        KineticParams {
            sign: self.sign,
            reconstruction: self.reconstruction,
            collision: self.collision,
            collisions_enabled: self.collisions_enabled,
            field_enabled: self.field_enabled,
            dt: self.dt,
        }
    }

    pub fn initial_state(&self) -> Result<PhaseField> {
        Ok(self.init.build(self.grid()?))
    }
}

/// Space-homogeneous (radial velocity profile) simulation configuration.
#[derive(Debug, Clone)]
pub struct HomogeneousRunConfig {
    pub r_max: f64,
    pub points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub collision: CollisionSettings,
    pub init: RadialGaussianInit,
    pub snapshot_every: usize,
    pub diagnostics_every: usize,
}

impl HomogeneousRunConfig {
    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.r_max, self.points)
    }

    pub fn initial_profile(&self) -> Result<RadialField> {
        Ok(self.init.build(self.grid()?))
    }
}

#[derive(Debug, Clone)]
pub enum SimConfig {
    Vpil(VpilRunConfig),
    Homogeneous(HomogeneousRunConfig),
}

fn diagnostics_cadence(r: &mut ConfigReader<'_>) -> Result<usize> {
    let every = r.usize_or("diagnostics.every", 1)?;
    if every == 0 {
        return Err(VpilError::Config(
            "key \"diagnostics.every\": must be at least 1".into(),
        ));
    }
    Ok(every)
}

fn time_keys(r: &mut ConfigReader<'_>) -> Result<(f64, f64)> {
    let dt = r.require_f64("dt")?;
    let t_end = r.require_f64("t_end")?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(VpilError::Config(format!(
            "key \"dt\": must be positive and finite, got {dt}"
        )));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(VpilError::Config(format!(
            "key \"t_end\": must be nonnegative and finite, got {t_end}"
        )));
    }
    Ok((dt, t_end))
}

pub fn parse_sim_config(file: &ConfigFile) -> Result<SimConfig> {
    let mut r = file.reader();
    let mode = r.require_str("mode")?;
    let parsed = match mode {
        "vpil" => {
            let sign = InteractionSign::parse(r.require_str("sign")?)?;
            let (dt, t_end) = time_keys(&mut r)?;
            let reconstruction = match r.get_str("reconstruction") {
                Some(s) => Reconstruction::parse(s)?,
                None => Reconstruction::Minmod,
            };
            let cfg = VpilRunConfig {
                sign,
                space_extent: r.require_f64("space.extent")?,
                space_points: r.require_usize("space.points")?,
                velocity_extent: r.require_f64("velocity.extent")?,
                velocity_points: r.require_usize("velocity.points")?,
                dt,
                t_end,
                reconstruction,
                collisions_enabled: r.bool_or("collisions.enabled", true)?,
                field_enabled: r.bool_or("field.enabled", true)?,
                collision: collision_settings(&mut r)?,
                init: phase_gaussian(&mut r)?,
                snapshot_every: r.usize_or("snapshots.every", 0)?,
                diagnostics_every: diagnostics_cadence(&mut r)?,
            };
            cfg.grid()?;
            SimConfig::Vpil(cfg)
        }
        "homogeneous" => {
            let (dt, t_end) = time_keys(&mut r)?;
            let init = RadialGaussianInit {
                amplitude: r.f64_or("init.amplitude", 1.0)?,
                width: r.f64_or("init.width", 1.0)?,
            };
            for (name, v) in [("init.amplitude", init.amplitude), ("init.width", init.width)] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(VpilError::Config(format!(
                        "key {name:?}: must be positive and finite, got {v}"
                    )));
                }
            }
            let cfg = HomogeneousRunConfig {
                r_max: r.require_f64("radial.extent")?,
                points: r.require_usize("radial.points")?,
                dt,
                t_end,
                collision: collision_settings(&mut r)?,
                init,
                snapshot_every: r.usize_or("snapshots.every", 0)?,
                diagnostics_every: diagnostics_cadence(&mut r)?,
            };
            cfg.grid()?;
            SimConfig::Homogeneous(cfg)
        }
        other => {
            return Err(VpilError::Config(format!(
                "key \"mode\": expected \"vpil\" or \"homogeneous\", got {other:?}"
            )))
        }
    };
    r.finish()?;
    Ok(parsed)
}

/// How the iteration's initial amplitude is fixed: directly, or as a
/// fraction of the smallness threshold for the configured (M, m, T).
#[derive(Debug, Clone, Copy)]
pub enum IterateAmplitude {
    Fixed(f64),
    ThresholdFraction(f64),
}

#[derive(Debug, Clone)]
pub struct IterateConfig {
    pub sign: InteractionSign,
    pub space_extent: f64,
    pub space_points: usize,
    pub velocity_extent: f64,
    pub velocity_points: usize,
    pub count: usize,
    pub m: f64,
    pub t_horizon: f64,
    pub kappa: f64,
    pub big_m: f64,
    pub variant: PotentialVariant,
    pub dt_max: f64,
    pub store_every: usize,
    pub amplitude: IterateAmplitude,
    pub x_width: f64,
    pub v_width: f64,
}

impl IterateConfig {
    pub fn grid(&self) -> Result<PhaseGrid> {
        Ok(PhaseGrid::new(
            Grid3::new(self.space_extent, self.space_points)?,
            Grid3::new(self.velocity_extent, self.velocity_points)?,
        ))
    }

    pub fn linear_config(&self) -> Result<LinearConfig> {
        let mut cfg = LinearConfig::new(self.sign, self.m, self.t_horizon)?;
        cfg.kappa = self.kappa;
        cfg.big_m = self.big_m;
        cfg.variant = self.variant;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The unscaled Gaussian profile; the amplitude policy is applied by the
    /// caller once the profile's weighted norm is known.
    pub fn unit_profile(&self) -> Result<PhaseField> {
        let init = PhaseGaussianInit {
            amplitude: 1.0,
            x_width: self.x_width,
            v_width: self.v_width,
            vx_shift: 0.0,
            inflow: 0.0,
        };
        Ok(init.build(self.grid()?))
    }
}

pub fn parse_iterate_config(file: &ConfigFile) -> Result<IterateConfig> {
    let mut r = file.reader();
    let sign = InteractionSign::parse(r.require_str("sign")?)?;
    let amplitude = match (
        r.get_f64("init.amplitude")?,
        r.get_f64("init.threshold_fraction")?,
    ) {
        (Some(_), Some(_)) => {
            return Err(VpilError::Config(
                "keys \"init.amplitude\" and \"init.threshold_fraction\" are mutually exclusive"
                    .into(),
            ))
        }
        (Some(a), None) => IterateAmplitude::Fixed(a),
        (None, Some(f)) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(VpilError::Config(format!(
                    "key \"init.threshold_fraction\": must lie in (0, 1], got {f}"
                )));
            }
            IterateAmplitude::ThresholdFraction(f)
        }
        (None, None) => {
            return Err(VpilError::Config(
                "one of \"init.amplitude\" or \"init.threshold_fraction\" is required".into(),
            ))
        }
    };
    let variant = match r.get_str("collision.variant") {
        Some(s) => PotentialVariant::parse(s)?,
        None => PotentialVariant::Conservative,
    };
    let cfg = IterateConfig {
        sign,
        space_extent: r.require_f64("space.extent")?,
        space_points: r.require_usize("space.points")?,
        velocity_extent: r.require_f64("velocity.extent")?,
        velocity_points: r.require_usize("velocity.points")?,
        count: r.require_usize("iterate.count")?,
        m: r.f64_or("iterate.m", 4.0)?,
        t_horizon: r.require_f64("iterate.t_horizon")?,
        kappa: r.f64_or("iterate.kappa", 1.0)?,
        big_m: r.f64_or("iterate.big_m", 1.0)?,
        variant,
        dt_max: r.f64_or("iterate.dt_max", 0.05)?,
        store_every: r.usize_or("iterate.store_every", 0)?,
        amplitude,
        x_width: r.f64_or("init.x_width", 1.0)?,
        v_width: r.f64_or("init.v_width", 1.0)?,
    };
    if cfg.count == 0 {
        return Err(VpilError::Config(
            "key \"iterate.count\": must be at least 1".into(),
        ));
    }
    cfg.grid()?;
    cfg.linear_config()?;
    r.finish()?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct CubicSection {
    pub input: CriterionInput,
    pub condition: Option<ConditionParams>,
}

#[derive(Debug, Clone, Copy)]
pub struct PhiSection {
    pub params: PhiParams,
    pub s0: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ExistenceSection {
    pub norm: f64,
    pub big_m: f64,
    pub m: f64,
}

/// Analytic-criterion configuration: at least one section must be present.
#[derive(Debug, Clone)]
pub struct CriterionConfig {
    pub cubic: Option<CubicSection>,
    pub phi: Option<PhiSection>,
    pub existence: Option<ExistenceSection>,
}

pub fn parse_criterion_config(file: &ConfigFile) -> Result<CriterionConfig> {
    let mut r = file.reader();
    let cubic = if r.get_f64("cubic.i0")?.is_some() {
        let i0 = r
            .get_f64("cubic.i0")?
            .expect("probed above");
        let m = r.f64_or("cubic.m", 7.0)?;
        let k = match r.get_f64("cubic.k")? {
            Some(k) => k,
            None => k_of_m(m),
        };
        let input = CriterionInput {
            i0,
            ip0: r.require_f64("cubic.ip0")?,
            ke0: r.require_f64("cubic.ke0")?,
            ee0: r.require_f64("cubic.ee0")?,
            c1: r.require_f64("cubic.c1")?,
            k,
            m,
        };
        input.validate()?;
        let condition = match (r.get_f64("condition.c")?, r.get_f64("condition.norm_ratio")?) {
            (Some(c), Some(norm_ratio)) => Some(ConditionParams { c, norm_ratio }),
            (None, None) => None,
            _ => {
                return Err(VpilError::Config(
                    "keys \"condition.c\" and \"condition.norm_ratio\" must appear together"
                        .into(),
                ))
            }
        };
        Some(CubicSection { input, condition })
    } else {
        None
    };
    let phi = match (r.get_f64("phi.c")?, r.get_f64("phi.a")?) {
        (Some(c), Some(a)) => Some(PhiSection {
            params: PhiParams::new(c, a)?,
            s0: r.f64_or("phi.s0", 0.0)?,
            iterations: r.usize_or("phi.iterations", 64)?,
        }),
        (None, None) => None,
        _ => {
            return Err(VpilError::Config(
                "keys \"phi.c\" and \"phi.a\" must appear together".into(),
            ))
        }
    };
    let existence = match r.get_f64("existence.norm")? {
        Some(norm) => Some(ExistenceSection {
            norm,
            big_m: r.f64_or("existence.big_m", 1.0)?,
            m: r.f64_or("existence.m", 4.0)?,
        }),
        None => None,
    };
    r.finish()?;
    if cubic.is_none() && phi.is_none() && existence.is_none() {
        return Err(VpilError::Config(
            "criterion config needs at least one of the cubic.*, phi.*, or existence.* sections"
                .into(),
        ));
    }
    Ok(CriterionConfig {
        cubic,
        phi,
        existence,
    })
}

/// Resolutions for the potential verification command.
#[derive(Debug, Clone, Copy)]
pub struct PotentialVerifyConfig {
    pub radial_points: usize,
    pub cube_points: usize,
}

pub fn parse_potential_config(file: &ConfigFile) -> Result<PotentialVerifyConfig> {
    let mut r = file.reader();
    let cfg = PotentialVerifyConfig {
        radial_points: r.usize_or("potential.radial_points", 512)?,
        cube_points: r.usize_or("potential.cube_points", 64)?,
    };
    if cfg.radial_points < 8 {
        return Err(VpilError::Config(format!(
            "key \"potential.radial_points\": must be at least 8, got {}",
            cfg.radial_points
        )));
    }
    if cfg.cube_points < 8 || cfg.cube_points % 2 != 0 {
        return Err(VpilError::Config(format!(
            "key \"potential.cube_points\": must be even and at least 8, got {}",
            cfg.cube_points
        )));
    }
    r.finish()?;
    Ok(cfg)
}
