use super::*;
use crate::components::{
    compressor_eval, condenser_eval, evaporator_eval, valve_opening, Disturbances, PlantParams,
};
use crate::fluid::CorrelationFluid;
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup() -> (CorrelationFluid, PlantParams, Disturbances) {
    (
        CorrelationFluid::default(),
        PlantParams::default(),
        Disturbances::default(),
    )
}

/// Decision triple in the calibrated facility's regime (superheat 9.3 K at
/// 1.132 bar, outlet 248.1 kJ/kg, 5.93 g/s).
fn reference_chi(f: &CorrelationFluid) -> DecisionTriple {
    let sat_e = f.sat_props(1.132e5).unwrap();
    DecisionTriple {
        h_e_out: sat_e.h_g + sat_e.cp_g * 9.3,
        h_c_out: 248.1e3,
        mdot: 5.93e-3,
    }
}

#[test]
fn closure_residuals_below_contract() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let pt = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    let (_, r) = evaluate_cycle(&chi, pt.p_e, pt.p_c, &d, &f, &p).unwrap();
    assert!(r[0].abs() <= CLOSURE_TOL);
    assert!(r[1].abs() <= CLOSURE_TOL);
}

#[test]
fn perturbed_pressure_breaks_closure() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let pt = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    let (_, r) = evaluate_cycle(&chi, pt.p_e, pt.p_c + 0.1e5, &d, &f, &p).unwrap();
    assert!(r[1].abs() > CLOSURE_TOL, "residual stayed {:.3e}", r[1]);
}

/// Residuals assembled by chaining the component models directly, outside
/// evaluate_cycle.
#[test]
fn residuals_match_component_chain() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let (p_e, p_c) = (1.15e5, 15.4e5);
    let (_, r) = evaluate_cycle(&chi, p_e, p_c, &d, &f, &p).unwrap();

    let comp = compressor_eval(p_e, p_c, chi.mdot, chi.h_e_out, d.t_surr, &f, &p).unwrap();
    let evap = evaporator_eval(p_e, chi.mdot, chi.h_e_out, &d, &f, &p).unwrap();
    let cond = condenser_eval(p_c, chi.mdot, chi.h_c_out, &d, &f, &p).unwrap();
    let _ = valve_opening(p_e, p_c, chi.mdot, chi.h_c_out, &f, &p).unwrap();
    assert_relative_eq!(r[0], evap.h_e_in - chi.h_c_out, max_relative = 1e-12);
    assert_relative_eq!(r[1], cond.h_c_in_prime - comp.h_c_in, max_relative = 1e-12);
}

#[test]
fn operating_point_identities() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let pt = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    assert_relative_eq!(
        pt.q_e,
        chi.mdot * (chi.h_e_out - chi.h_c_out),
        max_relative = 1e-9
    );
    assert_relative_eq!(pt.cop, pt.q_e / pt.w_comp, max_relative = 1e-9);
}

#[test]
fn reclosing_is_a_fixed_point() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let pt = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    let pt2 = close_cycle(&chi, &d, &f, &p, (pt.p_e, pt.p_c)).unwrap();
    assert!((pt2.p_e - pt.p_e).abs() < 1.0); // Pa
    assert!((pt2.p_c - pt.p_c).abs() < 10.0);
}

/// The pressure pair for a decision triple is unique: randomized initial
/// guesses converge to the same solution within 1e-4 bar.
#[test]
fn closure_unique_from_random_initializations() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let nominal = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let p_e0 = nominal.p_e * rng.gen_range(0.7..1.4);
        let p_c0 = nominal.p_c * rng.gen_range(0.85..1.15);
        let pt = close_cycle(&chi, &d, &f, &p, (p_e0, p_c0)).unwrap();
        assert!(
            (pt.p_e - nominal.p_e).abs() < 1e-4 * 1e5,
            "P_e scattered by {:.3e} bar",
            (pt.p_e - nominal.p_e).abs() / 1e5
        );
        assert!((pt.p_c - nominal.p_c).abs() < 1e-4 * 1e5);
    }
}

/// The closure's 2x2 residual Jacobian is nonsingular at the solution.
#[test]
fn closure_jacobian_nonsingular() {
    let (f, p, d) = setup();
    let chi = reference_chi(&f);
    let pt = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    let h = 1e-2 * 1e5; // 0.01 bar steps
    let r = |pe: f64, pc: f64| {
        let (_, r) = evaluate_cycle(&chi, pe, pc, &d, &f, &p).unwrap();
        r
    };
    let r0 = r(pt.p_e, pt.p_c);
    let rpe = r(pt.p_e + h, pt.p_c);
    let rpc = r(pt.p_e, pt.p_c + h);
    let j = nalgebra::Matrix2::new(
        (rpe[0] - r0[0]) / h,
        (rpc[0] - r0[0]) / h,
        (rpe[1] - r0[1]) / h,
        (rpc[1] - r0[1]) / h,
    );
    let svd = j.svd(false, false);
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[1];
    assert!(smin > 0.0);
    let cond = smax / smin;
    assert!(cond.is_finite() && cond < 1e6, "condition number {cond:.3e}");
}

#[test]
fn optimizer_beats_coarse_grid_and_reports_active_set() {
    let (f, p, d) = setup();
    let cons = OptConstraints::default();
    let q = 600.0;
    let oc = optimize_cycle(q, &d, &f, &p, &cons, &OptimizeOptions::default()).unwrap();
    assert!(oc.active_constraints.contains(&"N >= N_min"));

    // coarse independent grid over the reduced decision space
    let mut best_grid = f64::NEG_INFINITY;
    let mut guess = (oc.point.p_e, oc.point.p_c);
    for i in 0..12 {
        let h_e_out = oc.point.chi.h_e_out - 8.0e3 + 16.0e3 * i as f64 / 11.0;
        for j in 0..12 {
            let h_c_out = oc.point.chi.h_c_out - 6.0e3 + 12.0e3 * j as f64 / 11.0;
            let chi = DecisionTriple {
                h_e_out,
                h_c_out,
                mdot: q / (h_e_out - h_c_out),
            };
            if let Ok(pt) = close_cycle(&chi, &d, &f, &p, guess) {
                guess = (pt.p_e, pt.p_c);
                if cons.slacks(&pt).iter().all(|(_, s)| *s >= 0.0) && pt.cop > best_grid {
                    best_grid = pt.cop;
                }
            }
        }
    }
    assert!(best_grid.is_finite());
    assert!(
        oc.point.cop >= best_grid * 0.995,
        "optimizer {:.4} vs grid {:.4}",
        oc.point.cop,
        best_grid
    );
}

#[test]
fn multistarts_agree_within_two_tenths_percent() {
    let (f, p, d) = setup();
    let oc = optimize_cycle(
        600.0,
        &d,
        &f,
        &p,
        &OptConstraints::default(),
        &OptimizeOptions::default(),
    )
    .unwrap();
    assert_eq!(oc.multistart_cops.len(), 5);
    let max = oc.multistart_cops.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = oc.multistart_cops.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(
        (max - min) / max < 0.002,
        "multistart spread {:.4} vs {:.4}",
        min,
        max
    );
}

#[test]
fn infeasible_demand_reported() {
    let (f, p, d) = setup();
    let r = optimize_cycle(
        5000.0,
        &d,
        &f,
        &p,
        &OptConstraints::default(),
        &OptimizeOptions {
            multistarts: 2,
            ..Default::default()
        },
    );
    assert!(matches!(r, Err(CycleError::InfeasibleDemand(_))));
}

#[test]
fn short_sweep_shows_low_demand_structure() {
    let (f, p, d) = setup();
    let cons = OptConstraints::default();
    let grid = [500.0, 540.0, 580.0, 620.0, 660.0, 700.0];
    let pts = sweep_demand(&grid, &d, &f, &p, &cons, &OptimizeOptions::default());
    let ok: Vec<_> = pts
        .iter()
        .map(|sp| sp.result.as_ref().expect("sweep point failed"))
        .collect();
    // compressor floor active early, mass flow monotone, superheat well
    // above its minimum on the low half
    assert!(ok[0].point.n < cons.n_min + 0.1);
    assert!(ok[1].point.n < cons.n_min + 0.1);
    for w in ok.windows(2) {
        assert!(w[1].point.chi.mdot > w[0].point.chi.mdot);
    }
    for oc in &ok[..3] {
        assert!(oc.point.t_sh > cons.t_sh_min + 1.0);
    }
}

#[test]
fn implied_performance_arithmetic() {
    // reported optimal point: 349.01 / 248.10 kJ/kg at 5.93 g/s, COP 1.2453
    let (q_e, h_c_in) = implied_performance(349.01e3, 248.10e3, 5.93e-3, 1.2453);
    assert!((q_e - 598.4).abs() < 0.5);
    // direct arithmetic: 349.01 + 100.91/1.2453 = 430.04 kJ/kg
    assert!((h_c_in - 430.04e3).abs() < 0.1e3);
}

#[test]
fn saturation_pressure_inversion_round_trip() {
    let f = CorrelationFluid::default();
    for t in [230.0, 255.0, 280.0, 305.0] {
        let p = p_sat_for_t(&f, t).unwrap();
        let t_back = f.sat_props(p).unwrap().t_sat;
        assert!((t_back - t).abs() < 1e-4);
    }
}
