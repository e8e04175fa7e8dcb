use std::time::Instant;

use vpil_core::collision::{CollisionSettings, CollisionStepper, PotentialVariant};
use vpil_core::config::PhaseGaussianInit;
use vpil_core::criterion::collapse_monitor;
use vpil_core::diagnostics::{virial_consistency, DiagnosticsEngine, MeasureSettings};
use vpil_core::fields::InteractionSign;
use vpil_core::grid::{Grid3, PhaseGrid};
use vpil_core::sim::{KineticParams, KineticRun, KineticState};
use vpil_core::transport::Reconstruction;

struct Cand {
    name: &'static str,
    lx: f64,
    wx: f64,
    lv: f64,
    wv: f64,
    amp: f64,
    inflow: f64,
    dt: f64,
    collisions: bool,
    measure_collisions: bool,
    stride: usize,
    nx: usize,
    nv: usize,
    field: bool,
    verbose: bool,
}

fn run_candidate(c: &Cand) {
    let space = Grid3::new(c.lx, c.nx).unwrap();
    let velocity = Grid3::new(c.lv, c.nv).unwrap();
    let grid = PhaseGrid::new(space, velocity);
    let init = PhaseGaussianInit {
        amplitude: c.amp,
        x_width: c.wx,
        v_width: c.wv,
        vx_shift: 0.0,
        inflow: c.inflow,
    };
    let f = init.build(grid);
    let collision = CollisionSettings {
        stepper: CollisionStepper::SemiImplicit,
        ..CollisionSettings::default()
    };
    let params = KineticParams {
        sign: InteractionSign::Gravitational,
        reconstruction: Reconstruction::Minmod,
        collision,
        collisions_enabled: c.collisions,
        field_enabled: c.field,
        dt: c.dt,
    };
    let mut run = KineticRun::new(grid, params).unwrap();
    let mut engine = DiagnosticsEngine::new(grid);
    let settings = MeasureSettings {
        sign: InteractionSign::Gravitational,
        collisions_enabled: c.measure_collisions,
        field_enabled: c.field,
        variant: PotentialVariant::Conservative,
    };
    let mut state = KineticState::new(f);
    let mut series = Vec::new();
    let start = Instant::now();
    let stride = c.stride as u64;
    let result = run.run(&mut state, 50, |s| {
        if s.step_index % stride == 0 {
            series.push(engine.measure(&s.f, s.t, s.clipped_mass_total, &settings)?);
        }
        Ok(())
    });
    let elapsed = start.elapsed().as_secs_f64();
    if let Err(e) = result {
        println!("{}: ABORT step {} ({e})", c.name, state.step_index);
        if series.len() < 3 {
            return;
        }
    }
    let r0 = &series[0];
    let rn = series.last().unwrap();
    let inertia: Vec<f64> = series.iter().map(|r| r.inertia).collect();
    let increases = inertia.windows(2).filter(|w| w[1] >= w[0]).count();
    let rep = virial_consistency(&series, InteractionSign::Gravitational).unwrap();
    let trend = collapse_monitor(&series, 1.0).map(|r| r.trend_decreasing);
    println!(
        "{}: {:.1}s EE0={:.3} 2KE0={:.3} KEend={:.3} I0={:.4} Iend={:.4} mix0={:.3} ups={} m1={:.3e} m2={:.3e} m3={:.3e} mass {:.6}->{:.6} clip={:.3e} trend={:?}",
        c.name,
        elapsed,
        r0.field_energy,
        2.0 * r0.ke,
        rn.ke,
        inertia[0],
        inertia[inertia.len() - 1],
        r0.mixed_moment,
        increases,
        rep.inertia_rate.mismatch,
        rep.mixed_rate.mismatch,
        rep.energy_rate.mismatch,
        r0.mass,
        rn.mass,
        rn.clipped_mass,
        trend,
    );
    if c.verbose {
        for k in 1..series.len() - 1 {
            let (a, b, m) = (&series[k - 1], &series[k + 1], &series[k]);
            let h2 = b.t - a.t;
            let di = (b.inertia - a.inertia) / h2;
            let dmix = (b.mixed_moment - a.mixed_moment) / h2;
            let e = |r: &vpil_core::diagnostics::DiagnosticsRecord| {
                2.0 * r.ke - 2.0 * r.field_energy
            };
            let de = (e(b) - e(a)) / h2;
            println!(
                "  t={:.3} dI/dt={:+.4} mix={:+.4} | dmix/dt={:+.4} idd={:+.4} | dE/dt={:+.4} iddd={:+.4}",
                m.t, di, m.mixed_moment, dmix, m.inertia_dd, de, m.inertia_ddd,
            );
        }
    }
}

#[test]
fn part_b() {
    let cands = [
        Cand {
            name: "c5g-a2",
            lx: 2.0,
            wx: 0.75,
            lv: 3.0,
            wv: 1.125,
            amp: 2.0,
            inflow: 0.5,
            dt: 0.005,
            collisions: true,
            measure_collisions: true,
            stride: 5,
            nx: 16,
            nv: 16,
            field: true,
            verbose: true,
        },
        Cand {
            name: "c10t-a40-coll",
            lx: 2.0,
            wx: 0.75,
            lv: 2.0,
            wv: 0.625,
            amp: 40.0,
            inflow: 0.5,
            dt: 0.002,
            collisions: true,
            measure_collisions: false,
            stride: 1,
            nx: 16,
            nv: 16,
            field: true,
            verbose: false,
        },
        Cand {
            name: "c10t-a40-20-coll",
            lx: 2.0,
            wx: 0.75,
            lv: 2.0,
            wv: 0.625,
            amp: 40.0,
            inflow: 0.5,
            dt: 0.002,
            collisions: true,
            measure_collisions: false,
            stride: 1,
            nx: 20,
            nv: 16,
            field: true,
            verbose: false,
        },
    ];
    for c in &cands {
        run_candidate(c);
    }
}
