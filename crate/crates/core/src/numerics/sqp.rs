//! Sequential quadratic programming with a damped BFGS Hessian approximation
//! and an l1 merit line search. Gradients and constraint Jacobians come from
//! forward differences; callers are expected to pass a normalized variable
//! vector so one relative step fits all components. Equality constraints are
//! handled directly in the QP subproblem; an inconsistent subproblem falls
//! back to an elastic (slack-penalized) relaxation.

use nalgebra::{DMatrix, DVector};

use super::qp::{solve_qp, solve_qp_elastic, QpProblem, QpStatus};
use super::NumError;

pub struct NlpFuncs<'a> {
    /// Objective to minimize.
    pub objective: &'a dyn Fn(&DVector<f64>) -> Result<f64, NumError>,
    /// Equality constraints, driven to zero.
    pub eq: &'a dyn Fn(&DVector<f64>) -> Result<DVector<f64>, NumError>,
    /// Inequality constraints, kept >= 0.
    pub ineq: &'a dyn Fn(&DVector<f64>) -> Result<DVector<f64>, NumError>,
}

#[derive(Debug, Clone)]
pub struct SqpOptions {
    pub max_iter: usize,
    pub tol_kkt: f64,
    pub tol_feas: f64,
    pub fd_step: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        SqpOptions {
            max_iter: 150,
            tol_kkt: 1e-6,
            tol_feas: 1e-8,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SqpResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub eq: DVector<f64>,
    pub ineq: DVector<f64>,
    pub lam_eq: DVector<f64>,
    pub lam_in: DVector<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub feasibility: f64,
    pub converged: bool,
}

struct Eval {
    f: f64,
    ceq: DVector<f64>,
    cin: DVector<f64>,
}

fn eval_all(funcs: &NlpFuncs, x: &DVector<f64>) -> Result<Eval, NumError> {
    Ok(Eval {
        f: (funcs.objective)(x)?,
        ceq: (funcs.eq)(x)?,
        cin: (funcs.ineq)(x)?,
    })
}

fn feas_measure(e: &Eval) -> f64 {
    let mut m = 0.0;
    for v in e.ceq.iter() {
        m += v.abs();
    }
    for v in e.cin.iter() {
        m += (-v).max(0.0);
    }
    m
}

fn merit(e: &Eval, mu: f64) -> f64 {
    e.f + mu * feas_measure(e)
}

/// Minimize over `lb <= x <= ub`. `x0` must evaluate successfully.
pub fn solve_sqp(
    funcs: &NlpFuncs,
    x0: DVector<f64>,
    lb: &DVector<f64>,
    ub: &DVector<f64>,
    opts: &SqpOptions,
) -> Result<SqpResult, NumError> {
    let n = x0.len();
    let clip = |x: &DVector<f64>| {
        DVector::from_fn(n, |i, _| x[i].clamp(lb[i], ub[i]))
    };
    let mut x = clip(&x0);
    let mut e = eval_all(funcs, &x)?;
    let me = e.ceq.len();
    let mi = e.cin.len();

    let mut b = DMatrix::<f64>::identity(n, n);
    let mut mu = 1.0f64;
    let mut lam_eq = DVector::zeros(me);
    let mut lam_in = DVector::zeros(mi);
    let mut kkt_res = f64::INFINITY;
    let mut grad_l_prev: Option<DVector<f64>> = None;
    let mut s_prev: Option<DVector<f64>> = None;
    let mut stalls = 0usize;

    for it in 1..=opts.max_iter {
        // forward-difference gradient and Jacobians in one sweep
        let mut grad = DVector::zeros(n);
        let mut jeq = DMatrix::zeros(me, n);
        let mut jin = DMatrix::zeros(mi, n);
        for i in 0..n {
            let h = opts.fd_step * x[i].abs().max(1.0);
            let mut xp = x.clone();
            xp[i] += h;
            let ep = match eval_all(funcs, &xp) {
                Ok(v) => v,
                Err(_) => {
                    // step into an invalid region: difference backwards
                    let mut xm = x.clone();
                    xm[i] -= h;
                    let em = eval_all(funcs, &xm)?;
                    grad[i] = (e.f - em.f) / h;
                    for r in 0..me {
                        jeq[(r, i)] = (e.ceq[r] - em.ceq[r]) / h;
                    }
                    for r in 0..mi {
                        jin[(r, i)] = (e.cin[r] - em.cin[r]) / h;
                    }
                    continue;
                }
            };
            grad[i] = (ep.f - e.f) / h;
            for r in 0..me {
                jeq[(r, i)] = (ep.ceq[r] - e.ceq[r]) / h;
            }
            for r in 0..mi {
                jin[(r, i)] = (ep.cin[r] - e.cin[r]) / h;
            }
        }

        // BFGS update: y pairs ∇L at the old and new point under the SAME
        // (most recent) multipliers; gl_prev was rebuilt after the last QP
        let grad_l = &grad - jeq.transpose() * &lam_eq - jin.transpose() * &lam_in;
        if let (Some(gl_prev), Some(s)) = (grad_l_prev.take(), s_prev.take()) {
            let y = &grad_l - gl_prev;
            let sbs = (s.transpose() * &b * &s)[0];
            let sy = s.dot(&y);
            if sbs > 1e-16 {
                // Powell damping keeps B positive definite
                let theta = if sy < 0.2 * sbs {
                    0.8 * sbs / (sbs - sy)
                } else {
                    1.0
                };
                let bs = &b * &s;
                let r = &y * theta + &bs * (1.0 - theta);
                let sr = s.dot(&r);
                if sr > 1e-14 {
                    b = b - (&bs * bs.transpose()) / sbs + (&r * r.transpose()) / sr;
                }
            }
        }

        // QP subproblem over the step d, bounds folded into inequalities
        let mut a_in = DMatrix::zeros(mi + 2 * n, n);
        let mut b_in = DVector::zeros(mi + 2 * n);
        a_in.view_mut((0, 0), (mi, n)).copy_from(&jin);
        b_in.rows_mut(0, mi).copy_from(&(-&e.cin));
        for i in 0..n {
            a_in[(mi + i, i)] = 1.0;
            b_in[mi + i] = lb[i] - x[i];
            a_in[(mi + n + i, i)] = -1.0;
            b_in[mi + n + i] = x[i] - ub[i];
        }
        let qp = QpProblem {
            h: b.clone(),
            g: grad.clone(),
            a_eq: jeq.clone(),
            b_eq: -&e.ceq,
            a_in,
            b_in,
        };
        let sol = match solve_qp(&qp, 200 + 20 * (n + mi)) {
            Ok(s) if s.status == QpStatus::Optimal => s,
            _ => solve_qp_elastic(&qp, 1e4 * grad.amax().max(1.0), 400 + 40 * (n + mi))?,
        };
        let d = sol.x;
        lam_eq = sol.lam_eq;
        lam_in = sol.lam_in.rows(0, mi).into_owned();

        // KKT residual with the fresh multipliers, relative to gradient scale
        let stat = &grad - jeq.transpose() * &lam_eq - jin.transpose() * &lam_in;
        // bound multipliers absorb the remaining stationarity at active bounds
        let mut stat_proj = stat.clone();
        for i in 0..n {
            let at_lb = x[i] - lb[i] < 1e-10 && stat[i] > 0.0;
            let at_ub = ub[i] - x[i] < 1e-10 && stat[i] < 0.0;
            if at_lb || at_ub {
                stat_proj[i] = 0.0;
            }
        }
        kkt_res = stat_proj.amax() / grad.amax().max(1.0);
        let feas = feas_measure(&e);
        if (kkt_res < opts.tol_kkt && feas < opts.tol_feas) || d.amax() < 1e-12 {
            return Ok(SqpResult {
                f: e.f,
                eq: e.ceq,
                ineq: e.cin,
                x,
                lam_eq,
                lam_in,
                iterations: it,
                kkt_residual: kkt_res,
                feasibility: feas,
                converged: feas < opts.tol_feas.max(1e-6),
            });
        }

        // rebuild the previous-point Lagrangian gradient with the fresh
        // multipliers so the BFGS pair is consistent
        let grad_l_new_lams = &grad - jeq.transpose() * &lam_eq - jin.transpose() * &lam_in;

        // l1 merit line search keeping the best-merit trial
        let lam_max = lam_eq.amax().max(lam_in.amax());
        mu = mu.max(1.5 * lam_max + 1e-3);
        let m0 = merit(&e, mu);
        let ddir = grad.dot(&d) - mu * feas;
        let mut alpha = 1.0f64;
        let mut best: Option<(f64, DVector<f64>, Eval)> = None;
        let mut armijo_hit = false;
        for _ in 0..30 {
            let xt = clip(&(&x + &d * alpha));
            if let Ok(et) = eval_all(funcs, &xt) {
                let mt = merit(&et, mu);
                if mt <= m0 + 1e-4 * alpha * ddir.min(0.0) {
                    best = Some((mt, xt, et));
                    armijo_hit = true;
                    break;
                }
                if best.as_ref().map_or(true, |(bm, _, _)| mt < *bm) {
                    best = Some((mt, xt, et));
                }
            }
            alpha *= 0.5;
        }
        let Some((mt, xt, et)) = best else {
            return Err(NumError::Eval("line search found no evaluable point".into()));
        };
        if !armijo_hit && mt >= m0 {
            stalls += 1;
            if stalls == 2 {
                b = DMatrix::identity(n, n); // discard suspect curvature
            } else if stalls >= 4 {
                return Ok(SqpResult {
                    f: e.f,
                    eq: e.ceq,
                    ineq: e.cin,
                    x,
                    lam_eq,
                    lam_in,
                    iterations: it,
                    kkt_residual: kkt_res,
                    feasibility: feas,
                    converged: feas < opts.tol_feas.max(1e-6),
                });
            }
        } else {
            stalls = 0;
        }
        let s = &xt - &x;
        x = xt;
        e = et;
        grad_l_prev = Some(grad_l_new_lams);
        s_prev = Some(s);
    }

    let feas = feas_measure(&e);
    Ok(SqpResult {
        f: e.f,
        eq: e.ceq,
        ineq: e.cin,
        x,
        lam_eq,
        lam_in,
        iterations: opts.max_iter,
        kkt_residual: kkt_res,
        feasibility: feas,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rosenbrock_bounded() {
        let f = |x: &DVector<f64>| {
            Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        };
        let eq = |_: &DVector<f64>| Ok(DVector::zeros(0));
        let ineq = |_: &DVector<f64>| Ok(DVector::zeros(0));
        let funcs = NlpFuncs {
            objective: &f,
            eq: &eq,
            ineq: &ineq,
        };
        let r = solve_sqp(
            &funcs,
            DVector::from_vec(vec![-0.5, 0.5]),
            &DVector::from_vec(vec![-2.0, -2.0]),
            &DVector::from_vec(vec![2.0, 2.0]),
            &SqpOptions {
                max_iter: 300,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn equality_constrained_quadratic() {
        // min (x-2)² + (y-2)² s.t. x + y = 2 -> (1, 1)
        let f = |x: &DVector<f64>| Ok((x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2));
        let eq = |x: &DVector<f64>| Ok(DVector::from_vec(vec![x[0] + x[1] - 2.0]));
        let ineq = |_: &DVector<f64>| Ok(DVector::zeros(0));
        let funcs = NlpFuncs {
            objective: &f,
            eq: &eq,
            ineq: &ineq,
        };
        let r = solve_sqp(
            &funcs,
            DVector::from_vec(vec![3.0, -1.0]),
            &DVector::from_vec(vec![-10.0, -10.0]),
            &DVector::from_vec(vec![10.0, 10.0]),
            &SqpOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.x[0], 1.0, epsilon = 1e-5);
        assert_relative_eq!(r.x[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn inequality_becomes_active() {
        // min x² + y² s.t. x + y >= 1 -> (0.5, 0.5)
        let f = |x: &DVector<f64>| Ok(x[0] * x[0] + x[1] * x[1]);
        let eq = |_: &DVector<f64>| Ok(DVector::zeros(0));
        let ineq = |x: &DVector<f64>| Ok(DVector::from_vec(vec![x[0] + x[1] - 1.0]));
        let funcs = NlpFuncs {
            objective: &f,
            eq: &eq,
            ineq: &ineq,
        };
        let r = solve_sqp(
            &funcs,
            DVector::from_vec(vec![2.0, 2.0]),
            &DVector::from_vec(vec![-5.0, -5.0]),
            &DVector::from_vec(vec![5.0, 5.0]),
            &SqpOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.x[0], 0.5, epsilon = 1e-5);
        assert_relative_eq!(r.x[1], 0.5, epsilon = 1e-5);
        assert!(r.ineq[0].abs() < 1e-6);
    }
}
