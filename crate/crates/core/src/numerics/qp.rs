//! Dense convex QP via a dual active-set method.
//!
//! ```text
//! minimize    0.5 xᵀ H x + gᵀ x
//! subject to  A_eq x  = b_eq
//!             A_in x >= b_in
//! ```
//!
//! H must be positive definite. The solver starts from the equality-
//! constrained minimizer (dual feasible) and adds violated inequalities one
//! at a time, taking partial steps and dropping blocking constraints so the
//! working-set multipliers stay nonnegative. Each step solves the working-set
//! KKT system directly; on these problem sizes (tens of variables) a fresh
//! factorization per step is cheaper than maintaining updated factors.

use nalgebra::{DMatrix, DVector};

use super::NumError;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

impl QpProblem {
    pub fn unconstrained(h: DMatrix<f64>, g: DVector<f64>) -> Self {
        let n = g.len();
        QpProblem {
            h,
            g,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub lam_eq: DVector<f64>,
    pub lam_in: DVector<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
    pub status: QpStatus,
}

const FEAS_TOL: f64 = 1e-9;

fn solve_kkt(
    h: &DMatrix<f64>,
    rows: &DMatrix<f64>,
    rhs_top: &DVector<f64>,
    rhs_bot: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), NumError> {
    let n = h.nrows();
    let m = rows.nrows();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(h);
    if m > 0 {
        kkt.view_mut((0, n), (n, m)).copy_from(&rows.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(rows);
    }
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(rhs_top);
    if m > 0 {
        rhs.rows_mut(n, m).copy_from(rhs_bot);
    }
    let lu = kkt.full_piv_lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| NumError::Singular("working-set KKT system".into()))?;
    Ok((sol.rows(0, n).into_owned(), sol.rows(n, m).into_owned()))
}

/// Solve the QP. Returns `NumError::Infeasible` when the constraint set is
/// inconsistent and `QpStatus::MaxIter` when the active-set loop fails to
/// terminate (cycling); callers treat the latter as a solver failure.
pub fn solve_qp(p: &QpProblem, max_iter: usize) -> Result<QpSolution, NumError> {
    let n = p.g.len();
    let me = p.b_eq.len();
    let mi = p.b_in.len();
    assert_eq!(p.h.nrows(), n);
    assert_eq!(p.a_in.nrows(), mi);
    assert_eq!(p.a_eq.nrows(), me);

    let stack = |active: &[usize]| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(me + active.len(), n);
        if me > 0 {
            m.view_mut((0, 0), (me, n)).copy_from(&p.a_eq);
        }
        for (k, &i) in active.iter().enumerate() {
            m.row_mut(me + k).copy_from(&p.a_in.row(i));
        }
        m
    };

    // start at the equality-constrained minimizer
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new(); // multipliers of active inequalities
    let rows = stack(&active);
    let (mut x, l0) = solve_kkt(&p.h, &rows, &(-&p.g), &p.b_eq.clone())?;
    // solve_kkt returns l with Hx + Aᵀl = -g; the multiplier in the
    // convention Hx + g = Aᵀλ is its negative
    let mut lam_eq = -l0;

    let scale = (p.h.norm() + p.g.norm()).max(1.0);
    let mut iters = 0usize;
    'outer: loop {
        iters += 1;
        if iters > max_iter {
            return Ok(QpSolution {
                x,
                lam_eq,
                lam_in: scatter(mi, &active, &u),
                active,
                iterations: iters,
                status: QpStatus::MaxIter,
            });
        }
        // most violated inactive inequality
        let mut p_idx = None;
        let mut worst = -FEAS_TOL * scale.max(1.0);
        for i in 0..mi {
            if active.contains(&i) {
                continue;
            }
            let v = (p.a_in.row(i) * &x)[0] - p.b_in[i];
            if v < worst {
                worst = v;
                p_idx = Some(i);
            }
        }
        let Some(pi) = p_idx else {
            return Ok(QpSolution {
                x,
                lam_eq,
                lam_in: scatter(mi, &active, &u),
                active,
                iterations: iters,
                status: QpStatus::Optimal,
            });
        };

        let a_p = p.a_in.row(pi).transpose().into_owned();
        let mut u_p = 0.0f64;
        // inner loop: take partial steps toward constraint pi, dropping
        // blocking constraints until it can be added with a full step
        loop {
            iters += 1;
            if iters > max_iter {
                continue 'outer; // will hit the MaxIter return
            }
            let rows = stack(&active);
            let zeros = DVector::zeros(rows.nrows());
            let (z, mu_rate) = solve_kkt(&p.h, &rows, &a_p, &zeros)?;
            let zt_ap = z.dot(&a_p);
            let v = (p.a_in.row(pi) * &x)[0] - p.b_in[pi];

            // dual blocking step among active inequalities (rates taken with
            // the sign such that u(t) = u - t * rate stays >= 0)
            let mut t_block = f64::INFINITY;
            let mut block_k = None;
            for (k, &uk) in u.iter().enumerate() {
                let rate = mu_rate[me + k];
                if rate > 1e-14 {
                    let t = uk / rate;
                    if t < t_block {
                        t_block = t;
                        block_k = Some(k);
                    }
                }
            }
            let t_full = if zt_ap > 1e-14 * scale {
                -v / zt_ap
            } else {
                f64::INFINITY
            };
            let t = t_full.min(t_block);
            if !t.is_finite() {
                return Err(NumError::Infeasible);
            }
            x += &z * t;
            lam_eq -= mu_rate.rows(0, me) * t;
            for (k, uk) in u.iter_mut().enumerate() {
                *uk -= t * mu_rate[me + k];
            }
            u_p += t;
            if t_full <= t_block {
                active.push(pi);
                u.push(u_p);
                continue 'outer;
            }
            let k = block_k.unwrap();
            active.remove(k);
            u.remove(k);
        }
    }
}

fn scatter(mi: usize, active: &[usize], u: &[f64]) -> DVector<f64> {
    let mut lam = DVector::zeros(mi);
    for (k, &i) in active.iter().enumerate() {
        lam[i] = u[k];
    }
    lam
}

/// Elastic relaxation: solve with l1-penalized slacks on every constraint so
/// an inconsistent subproblem still returns the least-violating step.
/// Equalities get signed slack pairs, inequalities a single slack.
pub fn solve_qp_elastic(p: &QpProblem, penalty: f64, max_iter: usize) -> Result<QpSolution, NumError> {
    let n = p.g.len();
    let me = p.b_eq.len();
    let mi = p.b_in.len();
    let ns = 2 * me + mi;
    if ns == 0 {
        return solve_qp(p, max_iter);
    }
    let nn = n + ns;
    let mut h = DMatrix::zeros(nn, nn);
    h.view_mut((0, 0), (n, n)).copy_from(&p.h);
    for i in n..nn {
        h[(i, i)] = 1e-6 * penalty; // keep H positive definite
    }
    let mut g = DVector::zeros(nn);
    g.rows_mut(0, n).copy_from(&p.g);
    for i in n..nn {
        g[i] = penalty;
    }
    // equalities: a_eq x - s+ + s- = b_eq
    let mut a_eq = DMatrix::zeros(me, nn);
    a_eq.view_mut((0, 0), (me, n)).copy_from(&p.a_eq);
    for i in 0..me {
        a_eq[(i, n + 2 * i)] = -1.0;
        a_eq[(i, n + 2 * i + 1)] = 1.0;
    }
    // inequalities: a_in x + s >= b_in, plus s >= 0 for all slacks
    let mut a_in = DMatrix::zeros(mi + ns, nn);
    let mut b_in = DVector::zeros(mi + ns);
    a_in.view_mut((0, 0), (mi, n)).copy_from(&p.a_in);
    for i in 0..mi {
        a_in[(i, n + 2 * me + i)] = 1.0;
        b_in[i] = p.b_in[i];
    }
    for s in 0..ns {
        a_in[(mi + s, n + s)] = 1.0;
    }
    let relaxed = QpProblem {
        h,
        g,
        a_eq,
        b_eq: p.b_eq.clone(),
        a_in,
        b_in,
    };
    let sol = solve_qp(&relaxed, max_iter)?;
    Ok(QpSolution {
        x: sol.x.rows(0, n).into_owned(),
        lam_eq: sol.lam_eq,
        lam_in: sol.lam_in.rows(0, mi).into_owned(),
        active: sol.active.into_iter().filter(|&i| i < mi).collect(),
        iterations: sol.iterations,
        status: sol.status,
    })
}
