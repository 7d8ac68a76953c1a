//! Dev probe: optimizer across the feasible demand envelope.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();

    for q in [430.0, 470.0, 510.0, 550.0, 600.0, 640.0, 680.0] {
        match optimize_cycle(q, &d, &f, &p, &OptConstraints::default(), &OptimizeOptions::default()) {
            Ok(oc) => {
                let pt = &oc.point;
                let spread = oc.multistart_cops.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - oc.multistart_cops.iter().cloned().fold(f64::INFINITY, f64::min);
                println!("q={q:5.0} COP={:.4} N={:6.2} A_v={:5.1} P_e={:.3} P_c={:.3} T_SH={:5.2} mdot={:.2} active={:?} nstarts={} spread={:.4}",
                    pt.cop, pt.n, pt.a_v, pt.p_e/1e5, pt.p_c/1e5, pt.t_sh, pt.chi.mdot*1e3, oc.active_constraints, oc.multistart_cops.len(), spread);
            }
            Err(e) => println!("q={q:5.0} FAILED: {e}"),
        }
    }
}
