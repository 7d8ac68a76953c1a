//! Dev probe: multistart diagnostics at several demands.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();

    for q in [350.0, 400.0, 600.0, 800.0, 900.0] {
        println!("== demand {q} W");
        for (off, tsh, tsc) in [(23.0, 6.0, 2.0), (20.0, 4.0, 1.5), (25.0, 9.0, 3.0)] {
            let t_e = d.t_e_sec_in - off;
            let p_e = p_sat_for_t(&f, t_e).unwrap().min(2.0e5 * 0.97);
            let sat_e = f.sat_props(p_e).unwrap();
            let h_e_out = sat_e.h_g + sat_e.cp_g * tsh;
            let p_c = p_sat_for_t(&f, d.t_c_sec_in + 5.0).unwrap().max(14.0e5 * 1.005);
            let sat_c = f.sat_props(p_c).unwrap();
            let h_c_out = sat_c.h_f - sat_c.cp_f * tsc;
            let mdot = q / (h_e_out - h_c_out);
            let chi = DecisionTriple { h_e_out, h_c_out, mdot };
            match close_cycle(&chi, &d, &f, &p, (p_e, p_c)) {
                Ok(pt) => println!("  start(off={off},tsh={tsh},tsc={tsc}): closed P_e={:.3} P_c={:.3} N={:.2} A_v={:.1} T_SH={:.2} COP={:.4}",
                    pt.p_e/1e5, pt.p_c/1e5, pt.n, pt.a_v, pt.t_sh, pt.cop),
                Err(e) => println!("  start(off={off},tsh={tsh},tsc={tsc}): closure FAILED: {e}"),
            }
        }
    }
}
