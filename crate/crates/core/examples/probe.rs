//! Dev probe: cycle closure and optimization on the default plant.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();

    // Table-1-like decision triple on our fluid: T_SH = 9.3 K at 1.132 bar,
    // T_SC ~ 1.9 K at 15.25 bar, mdot 5.93 g/s
    let sat_e = f.sat_props(1.132e5).unwrap();
    let sat_c = f.sat_props(15.25e5).unwrap();
    let chi = DecisionTriple {
        h_e_out: sat_e.h_g + sat_e.cp_g * 9.3,
        h_c_out: 248.1e3,
        mdot: 5.93e-3,
    };
    println!("h_e_out = {:.2} kJ/kg  h_c_out = 248.10  (h_f(15.25) = {:.2})", chi.h_e_out/1e3, sat_c.h_f/1e3);
    match close_cycle(&chi, &d, &f, &p, (1.132e5, 15.25e5)) {
        Ok(pt) => {
            println!("closure: P_e = {:.4} bar  P_c = {:.4} bar", pt.p_e/1e5, pt.p_c/1e5);
            println!(" N = {:.2} Hz  A_v = {:.2} %  Q_e = {:.1} W  W = {:.1} W  COP = {:.4}", pt.n, pt.a_v, pt.q_e, pt.w_comp, pt.cop);
            println!(" T_SH = {:.2} K  T_SC = {:.2} K  T_e_sec_out = {:.2} C", pt.t_sh, pt.t_sc, pt.t_e_sec_out - 273.15);
            println!(" zeta_c = [sh {:.3} tp {:.3} sc {:.3}]  zeta_e_tp = {:.3}", pt.cond.zeta_c_sh, pt.cond.zeta_c_tp, pt.cond.zeta_c_sc, pt.evap.zeta_e_tp);
        }
        Err(e) => println!("closure failed: {e}"),
    }

    for q in [400.0, 600.0, 800.0] {
        match optimize_cycle(q, &d, &f, &p, &OptConstraints::default(), &OptimizeOptions::default()) {
            Ok(oc) => {
                let pt = &oc.point;
                println!("opt {q} W: COP = {:.4} N = {:.2} A_v = {:.1} P_e = {:.3} P_c = {:.3} T_SH = {:.2} mdot = {:.2} g/s active = {:?} (cops: {:?})",
                    pt.cop, pt.n, pt.a_v, pt.p_e/1e5, pt.p_c/1e5, pt.t_sh, pt.chi.mdot*1e3, oc.active_constraints, oc.multistart_cops);
            }
            Err(e) => println!("opt {q} W failed: {e}"),
        }
    }
}
