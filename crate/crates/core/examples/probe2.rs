//! Dev probe: raw SQP diagnostics on the cycle NLP.
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
    let q_demand = 600.0;
    let cons = OptConstraints::default();

    let sat_e = f.sat_props(1.132e5).unwrap();
    let chi = DecisionTriple { h_e_out: sat_e.h_g + sat_e.cp_g * 9.3, h_c_out: 248.1e3, mdot: 5.93e-3 };
    let pt0 = close_cycle(&chi, &d, &f, &p, (1.132e5, 15.25e5)).unwrap();
    let x0 = DVector::from_vec(vec![chi.h_e_out/1e3, chi.h_c_out/1e3, chi.mdot*1e3, pt0.p_e/1e5, pt0.p_c/1e5]);

    let eval = |x: &DVector<f64>| -> Result<(CycleOperatingPoint, [f64;2]), NumError> {
        let chi = DecisionTriple { h_e_out: x[0]*1e3, h_c_out: x[1]*1e3, mdot: x[2]/1e3 };
        evaluate_cycle(&chi, x[3]*1e5, x[4]*1e5, &d, &f, &p).map_err(|e| NumError::Eval(e.to_string()))
    };
    let objective = |x: &DVector<f64>| -> Result<f64, NumError> { Ok(-eval(x)?.0.cop) };
    let eq = |x: &DVector<f64>| -> Result<DVector<f64>, NumError> {
        let (pt, r) = eval(x)?;
        Ok(DVector::from_vec(vec![r[0]/1e3, r[1]/1e3, (pt.q_e/q_demand - 1.0)*100.0]))
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
    println!("ineq at x0: {:?}", ineq(&x0).unwrap().as_slice().iter().map(|v| (v*100.0).round()/100.0).collect::<Vec<_>>());
    let funcs = NlpFuncs { objective: &objective, eq: &eq, ineq: &ineq };
    let lb = DVector::from_vec(vec![255.0, 145.0, 0.3, 0.55, 1.0]);
    let ub = DVector::from_vec(vec![420.0, 330.0, 40.0, 10.5, 29.1]);
    let opts = SqpOptions { max_iter: 120, tol_kkt: 1e-5, tol_feas: 1e-6, fd_step: 1e-6 };
    match solve_sqp(&funcs, x0, &lb, &ub, &opts) {
        Ok(r) => {
            println!("converged = {} iters = {} kkt = {:.2e} feas = {:.2e}", r.converged, r.iterations, r.kkt_residual, r.feasibility);
            println!("x = {:?}", r.x.as_slice());
            println!("f = {:.5} eq = {:?}", r.f, r.eq.as_slice());
            let (pt, _) = eval(&r.x).unwrap();
            println!("COP = {:.4} N = {:.2} T_SH = {:.2} P_e = {:.3} P_c = {:.3} A_v = {:.2}", pt.cop, pt.n, pt.t_sh, pt.p_e/1e5, pt.p_c/1e5, pt.a_v);
        }
        Err(e) => println!("sqp error: {e}"),
    }
}
