//! Dev probe: per-start failure modes at 640 W and 470 W.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();
    let cons = OptConstraints::default();

    for q in [470.0f64, 640.0] {
        println!("== {q} W");
        for (off, tsh, tsc) in [(23.0, 6.0, 2.0), (20.0, 3.5, 1.2), (26.0, 10.0, 3.0)] {
            // replicate heuristic_start manually
            let approach = 3.5 + q / 300.0;
            let p_c = p_sat_for_t(&f, d.t_c_sec_in + approach).unwrap().max(cons.p_c_min * 1.005);
            let sat_c = f.sat_props(p_c).unwrap();
            let h_c_out = sat_c.h_f - sat_c.cp_f * tsc;
            let speed_at = |p_e: f64| -> Result<f64, String> {
                let sat_e = f.sat_props(p_e).map_err(|e| e.to_string())?;
                let h_e_out = sat_e.h_g + sat_e.cp_g * tsh;
                let mdot = q / (h_e_out - h_c_out);
                let m = compressor_flow(1.0, p_e, p_c, h_e_out, &f, &p).map_err(|e| e.to_string())?;
                Ok(mdot / m)
            };
            let mut p_e = p_sat_for_t(&f, d.t_e_sec_in - off).unwrap().min(cons.p_e_max * 0.97);
            let n0 = speed_at(p_e).unwrap();
            let t = if n0 < 30.0 { Some(30.6) } else if n0 > 50.0 { Some(49.0) } else { None };
            if let Some(nt) = t {
                let (mut lo, mut hi) = (0.66e5, (1.94e5f64).min(p_c / 3.0));
                for _ in 0..60 { let m = 0.5*(lo+hi); if speed_at(m).unwrap_or(1e9) > nt { lo = m } else { hi = m } }
                p_e = 0.5 * (lo + hi);
            }
            let sat_e = f.sat_props(p_e).unwrap();
            let h_e_out = sat_e.h_g + sat_e.cp_g * tsh;
            let chi = DecisionTriple { h_e_out, h_c_out, mdot: q / (h_e_out - h_c_out) };
            match close_cycle(&chi, &d, &f, &p, (p_e, p_c)) {
                Ok(pt) => println!("  start({off},{tsh},{tsc}): closed N={:.2} T_SH={:.2} P_e={:.3} COP={:.4} A_v={:.1}", pt.n, pt.t_sh, pt.p_e/1e5, pt.cop, pt.a_v),
                Err(e) => println!("  start({off},{tsh},{tsc}): CLOSURE FAIL {e}"),
            }
        }
    }
}
