use super::*;
use crate::fluid::{CorrelationFluid, PropertyProvider};
use crate::numerics::roots::bisect;
use approx::assert_relative_eq;

fn setup() -> (CorrelationFluid, PlantParams, Disturbances) {
    (
        CorrelationFluid::default(),
        PlantParams::default(),
        Disturbances::default(),
    )
}

/// A per-component test point in the calibrated facility's regime.
const P_E: f64 = 1.132e5;
const P_C: f64 = 15.25e5;
const MDOT: f64 = 5.93e-3;

mod effectiveness_kernel {
    use super::*;

    #[test]
    fn zero_ntu_means_zero_transfer() {
        for c in [0.0, 0.3, 1.0] {
            assert_eq!(effectiveness(0.0, c).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_forms() {
        assert_relative_eq!(
            effectiveness(1.0, 0.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(effectiveness(2.0, 1.0).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn saturates_at_large_ntu() {
        assert!(effectiveness(50.0, 0.0).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn continuous_near_balanced_ratio() {
        let a = effectiveness(2.0, 1.0 - 2e-9).unwrap();
        let b = effectiveness(2.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(effectiveness(-0.1, 0.5).is_err());
        assert!(effectiveness(1.0, 1.1).is_err());
        assert!(effectiveness(1.0, -0.1).is_err());
    }
}

mod valve {
    use super::*;

    #[test]
    fn zero_flow_zero_opening() {
        let (f, p, _) = setup();
        let a_v = valve_opening(P_E, P_C, 0.0, 248.1e3, &f, &p).unwrap();
        assert_eq!(a_v, 0.0);
    }

    #[test]
    fn quadrupled_head_halves_opening() {
        let (f, p, _) = setup();
        // same condenser state (same rho), pressure difference scaled 4x
        let dp = 2.0e5;
        let a1 = valve_opening(P_C - dp, P_C, MDOT, 248.1e3, &f, &p).unwrap();
        let a2 = valve_opening(P_C - 4.0 * dp, P_C, MDOT, 248.1e3, &f, &p).unwrap();
        assert_relative_eq!(a2, a1 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn matches_direct_arithmetic() {
        let (f, p, _) = setup();
        let rho = f.state_from_ph(P_C, 248.1e3).unwrap().rho;
        let expected = MDOT / (p.c_eev * (2.0 * rho * (P_C - P_E)).sqrt());
        let a_v = valve_opening(P_E, P_C, MDOT, 248.1e3, &f, &p).unwrap();
        assert_relative_eq!(a_v, expected, max_relative = 1e-14);
    }

    #[test]
    fn forward_inverse_identity() {
        let (f, p, _) = setup();
        let a_v = valve_opening(P_E, P_C, MDOT, 248.1e3, &f, &p).unwrap();
        let m_back = valve_flow(a_v, P_E, P_C, 248.1e3, &f, &p).unwrap();
        assert_relative_eq!(m_back, MDOT, max_relative = 1e-10);
    }

    #[test]
    fn rejects_reversed_pressures() {
        let (f, p, _) = setup();
        assert!(matches!(
            valve_opening(P_C, P_E, MDOT, 248.1e3, &f, &p),
            Err(ComponentError::Domain(_))
        ));
    }
}

mod compressor {
    use super::*;

    fn suction_enthalpy(f: &CorrelationFluid) -> f64 {
        let sat = f.sat_props(P_E).unwrap();
        sat.h_g + sat.cp_g * 9.3
    }

    #[test]
    fn unit_pressure_ratio_drops_reexpansion_term() {
        let (f, p, d) = setup();
        let h = suction_enthalpy(&f);
        let out = compressor_eval(P_E, P_E, MDOT, h, d.t_surr, &f, &p).unwrap();
        let v = f.state_from_ph(P_E, h).unwrap().v;
        assert_relative_eq!(out.n, MDOT * v / p.s_t, max_relative = 1e-12);
    }

    #[test]
    fn zero_flow_gives_idle_power() {
        let (f, p, d) = setup();
        let h = suction_enthalpy(&f);
        let out = compressor_eval(P_E, P_C, 0.0, h, d.t_surr, &f, &p).unwrap();
        assert_eq!(out.w_comp, p.a);
        assert_eq!(out.n, 0.0);
    }

    #[test]
    fn matches_line_by_line_recomputation() {
        let (f, p, d) = setup();
        let h_e_out = suction_enthalpy(&f);
        let out = compressor_eval(P_E, P_C, MDOT, h_e_out, d.t_surr, &f, &p).unwrap();

        // independent re-evaluation, one equation line at a time
        let suction = f.state_from_ph(P_E, h_e_out).unwrap();
        let sat_e = f.sat_props(P_E).unwrap();
        let k = sat_e.cv_g / sat_e.cp_g;
        let n = MDOT * suction.v / (p.s_t - p.c * ((P_C / P_E).powf(k) - 1.0));
        let h_is = f.state_from_ps(P_C, suction.s).unwrap().h;
        let w = p.a + p.b * MDOT * (h_is - h_e_out);
        let sat_c = f.sat_props(P_C).unwrap();
        let t_is = sat_c.t_sat + (h_is - sat_c.h_g) / sat_c.cp_g;
        let h_c_in = h_e_out + (w - p.ua_comp * (t_is - d.t_surr)) / MDOT;

        assert_relative_eq!(out.n, n, max_relative = 1e-9);
        assert_relative_eq!(out.w_comp, w, max_relative = 1e-9);
        assert_relative_eq!(out.t_c_in_is, t_is, max_relative = 1e-9);
        assert_relative_eq!(out.h_c_in, h_c_in, max_relative = 1e-9);
    }

    #[test]
    fn speed_flow_inverse_identity() {
        let (f, p, _) = setup();
        let h = suction_enthalpy(&f);
        let out = compressor_eval(P_E, P_C, MDOT, h, 298.15, &f, &p).unwrap();
        let m_back = compressor_flow(out.n, P_E, P_C, h, &f, &p).unwrap();
        assert_relative_eq!(m_back, MDOT, max_relative = 1e-9);
    }

    #[test]
    fn rejects_vanishing_displacement_margin() {
        let (f, mut p, d) = setup();
        p.c = 1e-3; // pushes the denominator negative at this CR
        let h = suction_enthalpy(&f);
        assert!(matches!(
            compressor_eval(P_E, P_C, MDOT, h, d.t_surr, &f, &p),
            Err(ComponentError::Domain(_))
        ));
    }

    #[test]
    fn rejects_two_phase_suction() {
        let (f, p, d) = setup();
        let sat = f.sat_props(P_E).unwrap();
        let h_wet = sat.h_f + 0.8 * sat.latent();
        assert!(compressor_eval(P_E, P_C, MDOT, h_wet, d.t_surr, &f, &p).is_err());
    }
}

mod evaporator {
    use super::*;

    fn outlet_enthalpy(f: &CorrelationFluid, t_sh: f64) -> f64 {
        let sat = f.sat_props(P_E).unwrap();
        sat.h_g + sat.cp_g * t_sh
    }

    #[test]
    fn saturated_outlet_means_full_two_phase() {
        let (f, p, d) = setup();
        let sat = f.sat_props(P_E).unwrap();
        let sol = evaporator_eval(P_E, MDOT, sat.h_g, &d, &f, &p).unwrap();
        assert_eq!(sol.zeta_e_tp, 1.0);
        assert!(sol.t_sh.abs() < 1e-9);
        assert_eq!(sol.q_sh, 0.0);
    }

    #[test]
    fn residual_satisfied_at_solution() {
        let (f, p, d) = setup();
        let h_out = outlet_enthalpy(&f, 9.3);
        let sol = evaporator_eval(P_E, MDOT, h_out, &d, &f, &p).unwrap();
        let sat = f.sat_props(P_E).unwrap();
        // recompute the superheat-section transfer at the returned length
        let c_ref = MDOT * sat.cp_g;
        let c_sec = d.mdot_e_sec * p.cp_e_sec;
        let (c_min, c_max) = (c_ref.min(c_sec), c_ref.max(c_sec));
        let ua = p.alpha_e_sh * (1.0 - sol.zeta_e_tp) * p.a_e_trnsf * p.l_e;
        let eps = effectiveness(ua / c_min, c_min / c_max).unwrap();
        let q_ntu = eps * c_min * (d.t_e_sec_in - sat.t_sat);
        assert!((q_ntu - sol.q_sh).abs() <= 1e-8 * sol.q_sh.max(1.0));
    }

    #[test]
    fn bisection_oracle_agrees() {
        let (f, p, d) = setup();
        let h_out = outlet_enthalpy(&f, 9.3);
        let sol = evaporator_eval(P_E, MDOT, h_out, &d, &f, &p).unwrap();
        let sat = f.sat_props(P_E).unwrap();
        let q_sh = MDOT * (h_out - sat.h_g);
        let c_ref = MDOT * sat.cp_g;
        let c_sec = d.mdot_e_sec * p.cp_e_sec;
        let mut resid = |z: f64| {
            let (c_min, c_max) = (c_ref.min(c_sec), c_ref.max(c_sec));
            let ua = p.alpha_e_sh * (1.0 - z) * p.a_e_trnsf * p.l_e;
            let eps = effectiveness(ua / c_min, c_min / c_max).unwrap();
            Ok(eps * c_min * (d.t_e_sec_in - sat.t_sat) - q_sh)
        };
        let oracle = bisect(&mut resid, 0.0, 1.0, 60).unwrap();
        assert!((oracle - sol.zeta_e_tp).abs() < 1e-8);
    }

    #[test]
    fn energy_balance_closes() {
        let (f, p, d) = setup();
        let h_out = outlet_enthalpy(&f, 12.0);
        let sol = evaporator_eval(P_E, MDOT, h_out, &d, &f, &p).unwrap();
        let lhs = MDOT * (h_out - sol.h_e_in);
        let rhs = d.mdot_e_sec * p.cp_e_sec * (d.t_e_sec_in - sol.t_e_sec_out);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
        assert!((0.0..=1.0).contains(&sol.zeta_e_tp));
        assert!(sol.t_sh >= 0.0);
    }

    #[test]
    fn heat_weakly_increases_with_flow() {
        let (f, p, d) = setup();
        let h_out = outlet_enthalpy(&f, 8.0);
        let mut prev = 0.0;
        for i in 1..=8 {
            let mdot = 2.0e-3 + 1.0e-3 * i as f64;
            let sol = evaporator_eval(P_E, mdot, h_out, &d, &f, &p).unwrap();
            let q = sol.q_sh + sol.q_tp;
            assert!(q >= prev - 1e-9, "total duty decreased at mdot = {mdot}");
            prev = q;
        }
    }

    #[test]
    fn rejects_wet_outlet() {
        let (f, p, d) = setup();
        let sat = f.sat_props(P_E).unwrap();
        assert!(matches!(
            evaporator_eval(P_E, MDOT, sat.h_g - 5.0e3, &d, &f, &p),
            Err(ComponentError::Domain(_))
        ));
    }

    #[test]
    fn infeasible_when_superheat_exceeds_area() {
        let (f, mut p, d) = setup();
        p.alpha_e_sh = 0.05; // starve the superheat section
        let h_out = outlet_enthalpy(&f, 25.0);
        assert!(matches!(
            evaporator_eval(P_E, MDOT, h_out, &d, &f, &p),
            Err(ComponentError::Infeasible(_))
        ));
    }
}

mod condenser {
    use super::*;

    #[test]
    fn saturated_outlet_means_no_subcooled_section() {
        let (f, p, d) = setup();
        let sat = f.sat_props(P_C).unwrap();
        let sol = condenser_eval(P_C, MDOT, sat.h_f, &d, &f, &p).unwrap();
        assert_eq!(sol.zeta_c_sc, 0.0);
        assert!(sol.t_sc.abs() < 1e-9);
        assert_eq!(sol.q_sc, 0.0);
    }

    #[test]
    fn lengths_partition_the_exchanger() {
        let (f, p, d) = setup();
        let sol = condenser_eval(P_C, MDOT, 248.1e3, &d, &f, &p).unwrap();
        assert_relative_eq!(
            sol.zeta_c_sh + sol.zeta_c_tp + sol.zeta_c_sc,
            1.0,
            epsilon = 1e-9
        );
        for z in [sol.zeta_c_sh, sol.zeta_c_tp, sol.zeta_c_sc] {
            assert!((0.0..=1.0).contains(&z));
        }
    }

    #[test]
    fn residuals_satisfied_at_solution() {
        let (f, p, d) = setup();
        let sol = condenser_eval(P_C, MDOT, 248.1e3, &d, &f, &p).unwrap();
        let sat = f.sat_props(P_C).unwrap();
        let tol = |q: f64| 1e-8 * q.abs().max(1.0);
        let q_sc_ntu =
            condenser_sc_heat(sol.zeta_c_sc, MDOT, sat.cp_f, sat.t_sat, &d, &p).unwrap();
        assert!((q_sc_ntu - sol.q_sc).abs() <= tol(sol.q_sc));
        let q_tp_ntu = condenser_tp_heat(sol.zeta_c_tp, sat.t_sat, &d, &p).unwrap();
        assert!((q_tp_ntu - sol.q_tp).abs() <= tol(sol.q_tp));
        // superheated balance at the returned inlet enthalpy
        let q_sh_def = MDOT * (sol.h_c_in_prime - sat.h_g);
        assert!((q_sh_def - sol.q_sh).abs() <= tol(sol.q_sh));
    }

    #[test]
    fn bisection_oracles_agree_on_all_three_loops() {
        let (f, p, d) = setup();
        let h_c_out = 248.1e3;
        let sol = condenser_eval(P_C, MDOT, h_c_out, &d, &f, &p).unwrap();
        let sat = f.sat_props(P_C).unwrap();

        let q_sc = MDOT * (sat.h_f - h_c_out);
        let mut r_sc = |z: f64| {
            Ok(condenser_sc_heat(z, MDOT, sat.cp_f, sat.t_sat, &d, &p).unwrap() - q_sc)
        };
        let z_sc = bisect(&mut r_sc, 0.0, 1.0, 60).unwrap();
        assert!((z_sc - sol.zeta_c_sc).abs() < 1e-8);

        let q_tp = MDOT * (sat.h_g - sat.h_f);
        let mut r_tp = |z: f64| Ok(condenser_tp_heat(z, sat.t_sat, &d, &p).unwrap() - q_tp);
        let z_tp = bisect(&mut r_tp, 0.0, 1.0, 60).unwrap();
        assert!((z_tp - sol.zeta_c_tp).abs() < 1e-8);

        let zeta_sh = 1.0 - sol.zeta_c_sc - sol.zeta_c_tp;
        let c_ref = MDOT * sat.cp_g;
        let c_sec = zeta_sh * d.mdot_c_sec * p.cp_c_sec;
        let (c_min, c_max) = (c_ref.min(c_sec), c_ref.max(c_sec));
        let ua = p.alpha_c_sh * zeta_sh * p.a_c_trnsf * p.l_c;
        let eps = effectiveness(ua / c_min, c_min / c_max).unwrap();
        let mut r_sh = |h: f64| {
            let t_in = sat.t_sat + (h - sat.h_g) / sat.cp_g;
            Ok(MDOT * (h - sat.h_g) - eps * c_min * (t_in - d.t_c_sec_in))
        };
        let h_in = bisect(&mut r_sh, sat.h_g, sat.h_g + 3.0e5, 60).unwrap();
        assert!((h_in - sol.h_c_in_prime).abs() / sol.h_c_in_prime < 1e-8);
    }

    #[test]
    fn overall_energy_balance_closes() {
        let (f, p, d) = setup();
        let sol = condenser_eval(P_C, MDOT, 248.1e3, &d, &f, &p).unwrap();
        let lhs = MDOT * (sol.h_c_in_prime - 248.1e3);
        let rhs = d.mdot_c_sec * p.cp_c_sec * (sol.t_c_sec_out - d.t_c_sec_in);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-6);
    }

    #[test]
    fn rejects_superheated_outlet() {
        let (f, p, d) = setup();
        let sat = f.sat_props(P_C).unwrap();
        assert!(matches!(
            condenser_eval(P_C, MDOT, sat.h_f + 5.0e3, &d, &f, &p),
            Err(ComponentError::Domain(_))
        ));
    }

    #[test]
    fn infeasible_when_sections_exceed_length() {
        let (f, mut p, d) = setup();
        // starve the two-phase section so its required length leaves [0, 1]
        p.alpha_c_tp = 2.0;
        assert!(matches!(
            condenser_eval(P_C, MDOT, 248.1e3, &d, &f, &p),
            Err(ComponentError::Infeasible(_))
        ));
    }

    #[test]
    fn sh_length_solve_matches_inlet_enthalpy_loop() {
        let (f, p, d) = setup();
        let sol = condenser_eval(P_C, MDOT, 248.1e3, &d, &f, &p).unwrap();
        // feeding the solved inlet enthalpy back must reproduce the length
        let z = condenser_sh_length(
            P_C,
            MDOT,
            sol.h_c_in_prime,
            1.0 - sol.zeta_c_sc,
            &d,
            &f,
            &p,
        )
        .unwrap();
        assert!((z - sol.zeta_c_sh).abs() < 1e-7, "z = {z}, want {}", sol.zeta_c_sh);
    }
}

mod params {
    use super::*;

    #[test]
    fn validate_rejects_nonpositive() {
        let mut p = PlantParams::default();
        p.v_r = 0.0;
        assert!(p.validate(18.0, 0.8).is_err());
    }

    #[test]
    fn validate_checks_displacement_margin() {
        let p = PlantParams::default();
        assert!(p.validate(18.0, 0.82).is_ok());
        assert!(p.validate(500.0, 0.95).is_err());
    }

    #[test]
    fn loads_from_kv_text() {
        let kv = crate::io::KvMap::from_text("[plant]\nc_eev = 3.0e-9\nS_t = 6.0e-5\n", "t").unwrap();
        let p = PlantParams::from_kv(&kv).unwrap();
        assert_eq!(p.c_eev, 3.0e-9);
        assert_eq!(p.s_t, 6.0e-5);
        assert_eq!(p.b, PlantParams::default().b);
    }
}
