use super::*;
use crate::components::PlantParams;
use crate::cycle::{close_cycle, DecisionTriple};
use crate::dynmodel::state_from_cycle;
use crate::fluid::{CorrelationFluid, PropertyProvider};
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

fn reference(
    f: &CorrelationFluid,
    p: &PlantParams,
    d: &Disturbances,
) -> (CondenserState, CondenserInflow) {
    let sat_e = f.sat_props(1.132e5).unwrap();
    let chi = DecisionTriple {
        h_e_out: sat_e.h_g + sat_e.cp_g * 9.3,
        h_c_out: 248.1e3,
        mdot: 5.93e-3,
    };
    let pt = close_cycle(&chi, d, f, p, (1.13e5, 15.3e5)).unwrap();
    let (x, _) = state_from_cycle(&pt);
    (
        x,
        CondenserInflow {
            mdot: pt.chi.mdot,
            h_c_in: pt.h_c_in,
        },
    )
}

#[test]
fn rank_is_two_at_sampled_states() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x0, w0) = reference(&f, &p, &d);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 20 {
        let x = CondenserState {
            p_c: x0.p_c * rng.gen_range(0.93..1.07),
            zeta_c_sc: (x0.zeta_c_sc * rng.gen_range(0.5..3.5)).clamp(0.004, 0.3),
            h_c_sc: x0.h_c_sc + rng.gen_range(-4.0e3..2.0e3),
        };
        let w = CondenserInflow {
            mdot: w0.mdot * rng.gen_range(0.85..1.15),
            h_c_in: w0.h_c_in + rng.gen_range(-5.0e3..5.0e3),
        };
        let Ok(lc) = linear_controllability(&model, &x, &w, &d) else {
            continue;
        };
        assert_eq!(lc.rank, 2, "rank at sample {checked}");
        assert_eq!(lc.controllability_rank, lc.rank);
        assert!(lc.rank <= 2);
        checked += 1;
    }
}

#[test]
fn reduction_satisfies_held_state_constraint() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x, w0) = reference(&f, &p, &d);
    // move the inflow off equilibrium so the virtual inputs are nonzero
    let w = CondenserInflow {
        mdot: w0.mdot * 1.05,
        h_c_in: w0.h_c_in + 2.0e3,
    };
    let rd = reduce_holding(&model, &x, &w, &d, HeldState::SubcooledEnthalpy).unwrap();
    // with f1 set by the constraint, the held component of psi-dot is zero
    let f2 = 0.37; // arbitrary virtual input level
    let f1 = rd.f1_per_f2 * f2;
    let psi_dot_held = rd.n[(2, 0)] * f1 + rd.n[(2, 1)] * f2;
    let scale = (rd.n[(2, 0)] * f1).abs().max((rd.n[(2, 1)] * f2).abs());
    assert!(psi_dot_held.abs() <= 1e-9 * scale.max(1e-12));
}

#[test]
fn synthetic_direction_matrix_reduces_by_hand() {
    // hand-computed reduction of a constant n matrix
    let n = Matrix3x2::new(2.0, 1.0, -1.0, 3.0, 0.5, 0.25);
    let ratio = n[(2, 1)] / n[(2, 0)]; // n32/n31 = 0.5
    let d1 = n[(0, 1)] - ratio * n[(0, 0)]; // 1 - 0.5*2 = 0
    let d2 = n[(1, 1)] - ratio * n[(1, 0)]; // 3 - 0.5*(-1) = 3.5
    assert_relative_eq!(d1, 0.0, epsilon = 1e-15);
    assert_relative_eq!(d2, 3.5, epsilon = 1e-15);
}

#[test]
fn degenerate_direction_detected() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x, w) = reference(&f, &p, &d);
    // holding the subcooled-length row: n21 can be small but nonzero; force
    // the check by the pressure row instead on a synthetic basis is not
    // possible through the public API, so verify the error type is reachable
    // through an absurd inflow that breaks the matrices instead
    let bad = CondenserInflow {
        mdot: 1e-9,
        h_c_in: w.h_c_in,
    };
    assert!(reduce_holding(&model, &x, &bad, &d, HeldState::SubcooledEnthalpy).is_err());
}

#[test]
fn equilibrium_inflow_zeroes_virtual_inputs() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x, w0) = reference(&f, &p, &d);
    let weq = equilibrium_inflow(&model, &x, &d, &w0).unwrap();
    // the reference state came from a closed cycle, so its equilibrium
    // inflow reproduces the cycle's own flow and discharge enthalpy
    assert_relative_eq!(weq.mdot, w0.mdot, max_relative = 1e-4);
    assert_relative_eq!(weq.h_c_in, w0.h_c_in, max_relative = 1e-4);
    let m = model.condenser_matrices(&x, &weq, &d).unwrap();
    assert!(m.f[0].abs() < 1e-7);
    assert!(m.f[1].abs() < 1e-7);
}

#[test]
fn slope_dispersion_small_at_start_points() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x0, _) = reference(&f, &p, &d);
    let offsets = [(0.0, 0.0), (0.3, 0.004), (-0.3, -0.004), (0.5, 0.008)];
    let starts = equilibrium_start_points(&model, &x0, &offsets, &d);
    assert!(starts.len() >= 3, "only {} start points", starts.len());
    let cfg = SlopeStudyConfig {
        grid_n: 9,
        ..Default::default()
    };
    for r in subspace_slope_study(&model, &x0, &starts, &d, &cfg) {
        let s = r.unwrap();
        assert!(s.samples > 20);
        let rel = s.std_slope.abs() / s.mean_slope.abs();
        assert!(
            rel < 0.005,
            "slope dispersion {rel:.4} at start ({:.3} bar, {:.4})",
            (s.x.p_c - x0.p_c) / 1e5,
            s.x.zeta_c_sc - x0.zeta_c_sc
        );
    }
}

#[test]
fn quasi_parallel_lines_across_starts() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x0, _) = reference(&f, &p, &d);
    let offsets = [
        (0.0, 0.0),
        (0.4, 0.0),
        (-0.4, 0.0),
        (0.0, 0.006),
        (0.0, -0.006),
        (0.4, 0.006),
    ];
    let starts = equilibrium_start_points(&model, &x0, &offsets, &d);
    let cfg = SlopeStudyConfig {
        grid_n: 7,
        ..Default::default()
    };
    let slopes: Vec<f64> = subspace_slope_study(&model, &x0, &starts, &d, &cfg)
        .into_iter()
        .map(|r| r.unwrap().mean_slope)
        .collect();
    for i in 0..slopes.len() {
        for j in i + 1..slopes.len() {
            let rel = (slopes[i] - slopes[j]).abs() / slopes[i].abs();
            assert!(rel < 0.01, "slopes {} vs {} differ by {rel:.4}", slopes[i], slopes[j]);
        }
    }
}

/// For constant directions the distance determinant is exactly conserved.
#[test]
fn constant_direction_system_conserves_determinant() {
    let d = Vector2::new(0.8, -0.45);
    let mut psi = Vector2::new(0.3, 0.7);
    let u0 = psi[0] * d[1] - psi[1] * d[0];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dt = 0.01;
    for _ in 0..10_000 {
        let f2: f64 = rng.gen_range(-2.0..2.0);
        // psi-dot = d * f2 integrates exactly for piecewise-constant f2
        psi += d * (f2 * dt);
        let u = psi[0] * d[1] - psi[1] * d[0];
        assert!((u - u0).abs() <= 1e-12 * u0.abs().max(1.0));
    }
}

/// Local motion directions of the nonlinear model stay inside the column
/// space of B_c.
#[test]
fn motion_directions_live_in_the_input_subspace() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x, w0) = reference(&f, &p, &d);
    let lc = linear_controllability(&model, &x, &w0, &d).unwrap();
    // orthonormal basis of col(B) via QR
    let qr = nalgebra::Matrix3x2::from(lc.b_c).qr();
    let q = qr.q();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let w = CondenserInflow {
            mdot: w0.mdot * rng.gen_range(0.9..1.1),
            h_c_in: w0.h_c_in + rng.gen_range(-3.0e3..3.0e3),
        };
        let m = model.condenser_matrices(&x, &w, &d).unwrap();
        let (z_hat, f_hat) = transform_underactuated(&m.z, &m.f, m.rho_tp / m.rho_sc);
        let mut xdot = z_hat.full_piv_lu().solve(&f_hat).unwrap();
        for i in 0..3 {
            xdot[i] *= PSI_SCALE[i];
        }
        if xdot.norm() < 1e-12 {
            continue;
        }
        let proj = &q * (q.transpose() * xdot);
        let angle = (xdot - proj).norm() / xdot.norm();
        assert!(angle < 1e-3, "motion leaves col(B) by {angle:.2e} rad");
    }
}

/// Steering along the controllable line works; leaving it does not: the
/// distance determinant keeps its sign under random admissible inputs.
#[test]
fn line_membership_decides_reachability() {
    let (f, p, d) = setup();
    let model = CycleModel::new(&f, &p);
    let (x0, _) = reference(&f, &p, &d);
    let guess = equilibrium_inflow(
        &model,
        &x0,
        &d,
        &CondenserInflow {
            mdot: 5.9e-3,
            h_c_in: 4.0e5,
        },
    )
    .unwrap();
    let rd0 = reduce_holding(&model, &x0, &guess, &d, HeldState::SubcooledEnthalpy).unwrap();
    let slope = rd0.slope; // psi2 per psi1 (bar-based)

    // steer from a point ON the line toward the origin
    let psi1_start = 0.30; // bar
    let mut x = CondenserState {
        p_c: x0.p_c + psi1_start / PSI_SCALE[0],
        zeta_c_sc: x0.zeta_c_sc + slope * psi1_start,
        h_c_sc: x0.h_c_sc,
    };
    let dt = 4.0;
    let mut w_guess = guess;
    for _ in 0..3000 {
        let psi1 = (x.p_c - x0.p_c) * PSI_SCALE[0];
        if psi1.abs() < 0.01 {
            break;
        }
        let rd = match reduce_holding(&model, &x, &w_guess, &d, HeldState::SubcooledEnthalpy) {
            Ok(r) => r,
            Err(_) => break,
        };
        // proportional command on the line coordinate
        let f2 = (-psi1 / rd.d[0]).clamp(-3e-4, 3e-4) * 0.5;
        let Ok((w, rd2)) =
            inflow_for_virtual_input(&model, &x, &d, f2, HeldState::SubcooledEnthalpy, &w_guess)
        else {
            break;
        };
        w_guess = w;
        // advance the reduced dynamics
        x.p_c += rd2.d[0] * f2 / PSI_SCALE[0] * dt;
        x.zeta_c_sc += rd2.d[1] * f2 * dt;
    }
    let psi1_end = (x.p_c - x0.p_c) * PSI_SCALE[0];
    assert!(
        psi1_end.abs() < 0.05 * psi1_start,
        "on-line start not steered home (psi1 left: {psi1_end:.3})"
    );

    // a point OFF the line keeps a nonzero distance under random inputs
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let psi_off = Vector2::new(0.15, -0.15 * slope); // deliberately off-line
    let mut x = CondenserState {
        p_c: x0.p_c + psi_off[0] / PSI_SCALE[0],
        zeta_c_sc: x0.zeta_c_sc + psi_off[1],
        h_c_sc: x0.h_c_sc,
    };
    let u0 = psi_off[0] * slope - psi_off[1];
    let mut w_guess = guess;
    for _ in 0..100 {
        let f2 = rng.gen_range(-2.0e-4..2.0e-4);
        let Ok((w, rd)) =
            inflow_for_virtual_input(&model, &x, &d, f2, HeldState::SubcooledEnthalpy, &w_guess)
        else {
            continue;
        };
        w_guess = w;
        x.p_c += rd.d[0] * f2 / PSI_SCALE[0] * dt;
        x.zeta_c_sc += rd.d[1] * f2 * dt;
        let psi1 = (x.p_c - x0.p_c) * PSI_SCALE[0];
        let psi2 = x.zeta_c_sc - x0.zeta_c_sc;
        let u = psi1 * slope - psi2;
        assert!(u * u0 > 0.0, "distance determinant crossed zero");
        assert!(u.abs() > 0.3 * u0.abs(), "distance collapsed: {u:.3e} vs {u0:.3e}");
    }
}
