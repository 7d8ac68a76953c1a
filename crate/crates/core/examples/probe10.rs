//! Dev probe: 20-point demand sweep, trend inspection.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;
use std::time::Instant;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();
    let cons = OptConstraints::default();
    let grid: Vec<f64> = (0..20).map(|i| 480.0 + (700.0 - 480.0) * i as f64 / 19.0).collect();
    let t0 = Instant::now();
    let pts = sweep_demand(&grid, &d, &f, &p, &cons, &OptimizeOptions::default());
    println!("sweep took {:.1} s", t0.elapsed().as_secs_f64());
    for sp in &pts {
        match &sp.result {
            Ok(oc) => {
                let pt = &oc.point;
                println!("q={:6.1} COP={:.4} T_SH={:5.2} N={:6.2} A_v={:5.1} P_e={:.4} P_c={:.4} mdot={:.3} active={:?}",
                    sp.q_demand, pt.cop, pt.t_sh, pt.n, pt.a_v, pt.p_e/1e5, pt.p_c/1e5, pt.chi.mdot*1e3, oc.active_constraints);
            }
            Err(e) => println!("q={:6.1} FAILED {e}", sp.q_demand),
        }
    }
}
