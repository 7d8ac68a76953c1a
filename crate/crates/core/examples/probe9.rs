//! Dev probe: 40x40 reduced-space grid oracle vs the optimizer.
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();
    let cons = OptConstraints::default();

    for q in [470.0, 600.0, 640.0] {
        // brute force over (h_e_out, h_c_out); mdot from the demand; cycle
        // closed at every grid node; constraint-infeasible nodes discarded
        let mut best: Option<CycleOperatingPoint> = None;
        let mut guess = (1.1e5, 15.3e5);
        let mut n_closed = 0;
        let mut n_feas = 0;
        for i in 0..40 {
            let h_e_out = 330.0e3 + (368.0e3 - 330.0e3) * i as f64 / 39.0;
            let mut row_guess = guess;
            for j in 0..40 {
                let h_c_out = 238.0e3 + (262.0e3 - 238.0e3) * j as f64 / 39.0;
                let chi = DecisionTriple { h_e_out, h_c_out, mdot: q / (h_e_out - h_c_out) };
                if let Ok(pt) = close_cycle(&chi, &d, &f, &p, row_guess) {
                    n_closed += 1;
                    row_guess = (pt.p_e, pt.p_c);
                    if j == 0 { guess = row_guess; }
                    if cons.slacks(&pt).iter().all(|(_, s)| *s >= 0.0) {
                        n_feas += 1;
                        if best.as_ref().map_or(true, |b| pt.cop > b.cop) {
                            best = Some(pt);
                        }
                    }
                }
            }
        }
        let opt = optimize_cycle(q, &d, &f, &p, &cons, &OptimizeOptions::default());
        match (best, opt) {
            (Some(b), Ok(o)) => println!(
                "q={q}: grid best COP={:.4} (T_SH={:.1}, N={:.2}, P_c={:.3}) | sqp COP={:.4} | sqp >= grid*0.995: {} [{} closed, {} feasible]",
                b.cop, b.t_sh, b.n, b.p_c / 1e5, o.point.cop, o.point.cop >= b.cop * 0.995, n_closed, n_feas
            ),
            (g, o) => println!("q={q}: grid={:?} opt_ok={}", g.map(|b| b.cop), o.is_ok()),
        }
    }
}
