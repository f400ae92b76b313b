mod common;

use std::f64::consts::PI;

use common::{config, random_pair};
use mhdflat::dynamics::initial_state;
use mhdflat::{simulate, Dynamics, Error, Field, FieldParity, Field32, ModeIndex, Truncation};

#[test]
fn shear_flow_decays_exactly() {
    let cfg = config(4, 4, 1e-3, 1.0, 0.05, 0.05, 0);
    let traj = simulate::<f64>(&cfg, cfg.initial_fields()).unwrap();
    let u = &traj.final_state.u;
    let got = u.get(0, ModeIndex::new(0, 0, 1)).re;
    let exact = (-0.05 * PI * PI).exp();
    assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    let rest = (u - &Field::shear_velocity(cfg.trunc).scaled(got)).max_abs_coeff();
    assert!(rest < 1e-14);
    for r in &traj.records {
        let e = 0.5 * 4.0 * PI * PI * (-2.0 * 0.05 * PI * PI * r.t).exp();
        assert!((r.energy_u - e).abs() < 1e-12 * e);
    }
}

#[test]
fn magnetic_mode_decays_exactly() {
    let cfg = config(4, 4, 1e-3, 1.0, 0.0, 0.1, 5);
    let init = (
        Field::zero(FieldParity::Velocity, cfg.trunc),
        Field::magnetic_sine(cfg.trunc, 2.0),
    );
    let traj = simulate::<f64>(&cfg, init).unwrap();
    let got = traj.final_state.b.get(0, ModeIndex::new(0, 0, 1)).re;
    let exact = 2.0 * (-0.1 * PI * PI).exp();
    assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    // the Lorentz force of this mode is a pure gradient
    assert!(traj.final_state.u.max_abs_coeff() < 1e-14);
}

#[test]
fn uniform_vertical_field_with_rest_is_stationary() {
    let cfg = config(3, 3, 1e-2, 0.5, 0.0, 0.0, 5);
    let init = (
        Field::zero(FieldParity::Velocity, cfg.trunc),
        Field::uniform_vertical(cfg.trunc, 1.0),
    );
    let traj = simulate::<f64>(&cfg, init.clone()).unwrap();
    assert_eq!(traj.final_state.u.max_abs_coeff(), 0.0);
    assert!((&traj.final_state.b - &init.1).max_abs_coeff() < 1e-15);
}

fn final_fields(dt: f64) -> (Field, Field) {
    let cfg = config(4, 4, dt, 0.2, 0.02, 0.03, 8);
    let traj = simulate::<f64>(&cfg, cfg.initial_fields()).unwrap();
    (traj.final_state.u, traj.final_state.b)
}

#[test]
fn time_stepping_is_third_order() {
    let (ur, br) = final_fields(0.2 / 256.0);
    let err = |dt: f64| {
        let (u, b) = final_fields(dt);
        ((&u - &ur).energy() + (&b - &br).energy()).sqrt()
    };
    let e: Vec<f64> = [0.2 / 8.0, 0.2 / 16.0, 0.2 / 32.0].iter().map(|&dt| err(dt)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((6.0..10.0).contains(&ratio), "errors {e:?}");
    }
}

#[test]
fn viscous_energy_is_nonincreasing_and_obeys_the_energy_law() {
    let mut cfg = config(5, 5, 2e-3, 0.2, 0.02, 0.01, 13);
    cfg.sample_every = 1;
    let traj = simulate::<f64>(&cfg, cfg.initial_fields()).unwrap();
    let e0 = traj.records[0].total_energy();
    for w in traj.records.windows(2) {
        assert!(w[1].total_energy() <= w[0].total_energy() + 1e-10 * e0);
    }
    for r in &traj.records[1..] {
        assert!(r.res_energy < 1e-6, "t={} residual {:e}", r.t, r.res_energy);
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = config(4, 4, 5e-3, 0.1, 0.01, 0.01, 3);
    let a = simulate::<f64>(&cfg, cfg.initial_fields()).unwrap();
    let b = simulate::<f64>(&cfg, cfg.initial_fields()).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.records, b.records);
}

#[test]
fn single_precision_tracks_double_precision() {
    let cfg = config(4, 4, 5e-3, 0.1, 0.01, 0.01, 3);
    let d = simulate::<f64>(&cfg, cfg.initial_fields()).unwrap().final_state;
    let s = simulate::<f32>(&cfg, cfg.initial_fields()).unwrap().final_state;
    let su: Field = s.u.cast();
    let diff = (&su - &d.u).l2_norm() / d.u.l2_norm();
    assert!(diff < 1e-4, "{diff:e}");
    let _: &Field32 = &s.b;
}

#[test]
fn blow_up_is_reported_with_partial_records() {
    let mut cfg = config(3, 3, 0.5, 50.0, 0.0, 0.0, 4);
    cfg.sample_every = 1;
    let (u, b) = random_pair(4, cfg.trunc);
    let init = (u.scaled(1e4), b.scaled(1e4));
    let failure = simulate::<f64>(&cfg, init).unwrap_err();
    assert!(matches!(failure.error, Error::BlowUp { .. }), "{}", failure.error);
    assert!(!failure.records.is_empty());
    assert!(failure.records.iter().all(|r| r.is_valid()));
}

#[test]
fn initial_data_preconditions_are_enforced() {
    let cfg = config(3, 3, 1e-2, 0.1, 0.0, 0.0, 1);
    let raw = Field::random_raw(1, FieldParity::Velocity, cfg.trunc, 2.0);
    let b = Field::zero(FieldParity::Magnetic, cfg.trunc);
    let err = initial_state(&cfg, (raw, b.clone())).unwrap_err();
    assert!(err.to_string().contains("divergence"), "{err}");

    let wrong = Field::zero(FieldParity::Velocity, Truncation::new(2, 3));
    assert!(initial_state(&cfg, (wrong, b)).is_err());
}

#[test]
fn step_rejects_swapped_parities() {
    let trunc = Truncation::new(3, 3);
    let d = Dynamics::<f64>::new(trunc, mhdflat::GridSpec::min_dealiased(trunc)).unwrap();
    let (u, b) = random_pair(1, trunc);
    assert!(d.nonlinear(&b, &u).is_err());
}
