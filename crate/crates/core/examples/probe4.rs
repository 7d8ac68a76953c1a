//! Dev probe: why individual SQP starts fail at 400 / 800 W.
use nalgebra::DVector;
use refcycle::components::*;
use refcycle::cycle::*;
use refcycle::fluid::*;
use refcycle::numerics::sqp::*;
use refcycle::numerics::NumError;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();
    let cons = OptConstraints::default();

    for q in [400.0f64, 800.0] {
        println!("== demand {q}");
        // mimic the heuristic: approach, then N-targeted P_e
        let approach = 3.5 + q / 300.0;
        let p_c = p_sat_for_t(&f, d.t_c_sec_in + approach).unwrap().max(14.0e5 * 1.005);
        let sat_c = f.sat_props(p_c).unwrap();
        let t_sh = 6.0;
        let h_c_out = sat_c.h_f - sat_c.cp_f * 2.0;
        let speed_at = |p_e: f64| -> f64 {
            let sat_e = f.sat_props(p_e).unwrap();
            let h_e_out = sat_e.h_g + sat_e.cp_g * t_sh;
            let mdot = q / (h_e_out - h_c_out);
            let m_per_hz = compressor_flow(1.0, p_e, p_c, h_e_out, &f, &p).unwrap();
            mdot / m_per_hz
        };
        let mut p_e = p_sat_for_t(&f, d.t_e_sec_in - 23.0).unwrap().min(2.0e5 * 0.97);
        println!("  N at offset-based P_e {:.3} bar: {:.2} Hz", p_e/1e5, speed_at(p_e));
        let n0 = speed_at(p_e);
        let target = if n0 < 30.0 { 30.0*1.02 } else if n0 > 50.0 { 50.0*0.98 } else { n0 };
        // manual bisection for probe
        let (mut lo, mut hi) = (0.55e5*1.2, 1.94e5f64.min(p_c/3.0));
        println!("  N(lo={:.3})={:.1}  N(hi={:.3})={:.1} target {target:.1}", lo/1e5, speed_at(lo), hi/1e5, speed_at(hi));
        for _ in 0..60 { let m = 0.5*(lo+hi); if speed_at(m) > target { lo = m } else { hi = m } }
        p_e = 0.5*(lo+hi);
        println!("  N-targeted P_e = {:.3} bar (N = {:.2})", p_e/1e5, speed_at(p_e));
        let sat_e = f.sat_props(p_e).unwrap();
        let chi = DecisionTriple { h_e_out: sat_e.h_g + sat_e.cp_g*t_sh, h_c_out, mdot: q/(sat_e.h_g + sat_e.cp_g*t_sh - h_c_out) };
        match close_cycle(&chi, &d, &f, &p, (p_e, p_c)) {
            Ok(pt) => {
                println!("  closed: P_e={:.3} P_c={:.3} N={:.2} A_v={:.1} T_SH={:.2} COP={:.4}", pt.p_e/1e5, pt.p_c/1e5, pt.n, pt.a_v, pt.t_sh, pt.cop);
                // now run SQP from here and report
                let x0 = DVector::from_vec(vec![chi.h_e_out/1e3, chi.h_c_out/1e3, chi.mdot*1e3, pt.p_e/1e5, pt.p_c/1e5]);
                let eval = |x: &DVector<f64>| -> Result<(CycleOperatingPoint, [f64;2]), NumError> {
                    let chi = DecisionTriple { h_e_out: x[0]*1e3, h_c_out: x[1]*1e3, mdot: x[2]/1e3 };
                    evaluate_cycle(&chi, x[3]*1e5, x[4]*1e5, &d, &f, &p).map_err(|e| NumError::Eval(e.to_string()))
                };
                let objective = |x: &DVector<f64>| -> Result<f64, NumError> { Ok(-eval(x)?.0.cop) };
                let eq = |x: &DVector<f64>| -> Result<DVector<f64>, NumError> {
                    let (pt, r) = eval(x)?;
                    Ok(DVector::from_vec(vec![r[0]/1e3, r[1]/1e3, (pt.q_e/q - 1.0)*100.0]))
                };
                let ineq = |x: &DVector<f64>| -> Result<DVector<f64>, NumError> {
                    let (pt, _) = eval(x)?;
                    let cr = pt.p_c/pt.p_e;
                    Ok(DVector::from_vec(vec![
                        pt.n - cons.n_min, cons.n_max - pt.n,
                        pt.a_v - cons.a_v_min, cons.a_v_max - pt.a_v,
                        pt.t_sh - cons.t_sh_min, cons.t_sh_max - pt.t_sh,
                        (cons.p_e_max - pt.p_e)/1e5, (pt.p_c - cons.p_c_min)/1e5,
                        cr - cons.cr_min, cons.cr_max - cr, pt.t_sc - 0.05,
                    ]))
                };
                let funcs = NlpFuncs { objective: &objective, eq: &eq, ineq: &ineq };
                let lb = DVector::from_vec(vec![255.0, 145.0, 0.3, 0.55, 1.0]);
                let ub = DVector::from_vec(vec![420.0, 330.0, 40.0, 10.5, 29.1]);
                let opts = SqpOptions { max_iter: 200, tol_kkt: 2e-3, tol_feas: 1e-3, fd_step: 1e-6 };
                match solve_sqp(&funcs, x0, &lb, &ub, &opts) {
                    Ok(r) => {
                        let (pt2, _) = eval(&r.x).unwrap();
                        println!("  sqp: conv={} it={} kkt={:.2e} feas={:.2e} COP={:.4} N={:.2} T_SH={:.2} P_e={:.3} ineq_min={:.3}",
                            r.converged, r.iterations, r.kkt_residual, r.feasibility, pt2.cop, pt2.n, pt2.t_sh, pt2.p_e/1e5,
                            r.ineq.as_slice().iter().cloned().fold(f64::INFINITY, f64::min));
                    }
                    Err(e) => println!("  sqp error: {e}"),
                }
            }
            Err(e) => println!("  closure failed: {e}"),
        }
    }
}
