//! Discrete-time Riccati recursions: LQR state feedback and the steady
//! Kalman filter gain, iterated to a fixed point.

use nalgebra::DMatrix;

use super::NumError;

/// Iterate the discrete Riccati recursion for x(k+1) = A x + B u with cost
/// sum xᵀQx + uᵀRu. Returns (K, P) with u = -K x.
pub fn dlqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), NumError> {
    let mut p = q.clone();
    for _ in 0..max_iter {
        let btp = b.transpose() * &p;
        let s = r + &btp * b;
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| NumError::Singular("R + BᵀPB".into()))?;
        let k = &s_inv * &btp * a;
        let acl = a - b * &k;
        let p_next = q + k.transpose() * r * &k + acl.transpose() * &p * &acl;
        let diff = (&p_next - &p).amax();
        let scale = p.amax().max(1.0);
        p = p_next;
        if diff < tol * scale {
            let btp = b.transpose() * &p;
            let s = r + &btp * b;
            let k = s
                .try_inverse()
                .ok_or_else(|| NumError::Singular("R + BᵀPB".into()))?
                * &btp
                * a;
            return Ok((k, p));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(NumError::Eval("Riccati recursion diverged".into()));
        }
    }
    Err(NumError::MaxIter(max_iter))
}

/// Steady Kalman gain (current-estimator form) for x(k+1) = A x + w,
/// y = C x + v with covariances Qn, Rn:
/// xhat = xpred + L (y - C xpred).
pub fn dkalman(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    qn: &DMatrix<f64>,
    rn: &DMatrix<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<DMatrix<f64>, NumError> {
    let mut p = qn.clone();
    for _ in 0..max_iter {
        let s = rn + c * &p * c.transpose();
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| NumError::Singular("C P Cᵀ + Rn".into()))?;
        let k = &p * c.transpose() * &s_inv;
        let p_upd = (&p - &k * c * &p).clone();
        let p_next = a * p_upd * a.transpose() + qn;
        let diff = (&p_next - &p).amax();
        let scale = p.amax().max(1.0);
        p = p_next;
        if diff < tol * scale {
            let s = rn + c * &p * c.transpose();
            let s_inv = s
                .try_inverse()
                .ok_or_else(|| NumError::Singular("C P Cᵀ + Rn".into()))?;
            return Ok(&p * c.transpose() * &s_inv);
        }
    }
    Err(NumError::MaxIter(max_iter))
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max)
}
