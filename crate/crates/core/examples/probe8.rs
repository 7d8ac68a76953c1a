//! Dev probe: superheat-ladder COP profiles at 600 W.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();
    let q = 600.0;

    for (off, tsc) in [(23.0, 2.0), (19.0, 1.0), (26.0, 3.5)] {
        println!("== off={off} tsc={tsc}");
        let approach = 3.5 + q / 300.0;
        let p_c0 = p_sat_for_t(&f, d.t_c_sec_in + approach).unwrap().max(14.8e5 * 1.005);
        let sat_c = f.sat_props(p_c0).unwrap();
        let h_c_out = sat_c.h_f - sat_c.cp_f * tsc;
        let mut guess = (p_sat_for_t(&f, d.t_e_sec_in - off).unwrap(), p_c0);
        let mut t_sh = 2.0;
        while t_sh < 31.0 {
            let sat_e = f.sat_props(guess.0).unwrap();
            let h_e_out = sat_e.h_g + sat_e.cp_g * t_sh;
            let chi = DecisionTriple { h_e_out, h_c_out, mdot: q / (h_e_out - h_c_out) };
            match close_cycle(&chi, &d, &f, &p, guess) {
                Ok(pt) => {
                    println!("  T_SH={t_sh:5.1} -> N={:6.2} COP={:.4} P_e={:.3} P_c={:.3} T_SH_out={:5.2} t_sc={:.2}", pt.n, pt.cop, pt.p_e/1e5, pt.p_c/1e5, pt.t_sh, pt.t_sc);
                    guess = (pt.p_e, pt.p_c);
                }
                Err(e) => println!("  T_SH={t_sh:5.1} -> FAIL {e}"),
            }
            t_sh += 2.5;
        }
    }
}
