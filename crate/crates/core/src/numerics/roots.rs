//! Scalar bracketed root solving and a damped two-variable Newton.

use super::NumError;

#[derive(Debug, Clone, Copy)]
pub struct ScalarRoot {
    pub x: f64,
    pub f: f64,
    pub iterations: usize,
}

/// Safeguarded scalar solve on a bracket: Illinois-modified regula falsi with
/// a bisection fallback whenever the bracket fails to shrink. Converges on
/// |f| <= ftol or bracket width <= xtol.
pub fn solve_bracketed(
    f: &mut dyn FnMut(f64) -> Result<f64, NumError>,
    lo: f64,
    hi: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<ScalarRoot, NumError> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    if fa.abs() <= ftol {
        return Ok(ScalarRoot { x: a, f: fa, iterations: 0 });
    }
    let mut fb = f(b)?;
    if fb.abs() <= ftol {
        return Ok(ScalarRoot { x: b, f: fb, iterations: 0 });
    }
    if fa * fb > 0.0 {
        return Err(NumError::NoBracket(lo, hi));
    }
    let mut side = 0i8;
    for it in 1..=max_iter {
        // regula falsi candidate, bisection if degenerate
        let mut x = if (fb - fa).abs() > 0.0 {
            (a * fb - b * fa) / (fb - fa)
        } else {
            0.5 * (a + b)
        };
        if !x.is_finite() || x <= a.min(b) || x >= a.max(b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok(ScalarRoot { x, f: fx, iterations: it });
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5; // Illinois scaling against endpoint stagnation
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        // bisection fallback every few stalled iterations
        if it % 8 == 0 {
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if fm.abs() <= ftol {
                return Ok(ScalarRoot { x: m, f: fm, iterations: it });
            }
            if fa * fm < 0.0 {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
        }
    }
    Err(NumError::MaxIter(max_iter))
}

/// Plain bisection; used by the test-side oracles so the production solver
/// and the oracle stay independent code paths.
pub fn bisect(
    f: &mut dyn FnMut(f64) -> Result<f64, NumError>,
    lo: f64,
    hi: f64,
    iters: usize,
) -> Result<f64, NumError> {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(NumError::NoBracket(lo, hi));
    }
    let mut sa = fa.signum();
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sa {
            a = m;
            sa = fm.signum();
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Damped two-variable Newton with forward-difference Jacobian, backtracking
/// on the residual norm, and box clipping.
pub fn newton2(
    f: &mut dyn FnMut(&[f64; 2]) -> Result<[f64; 2], NumError>,
    x0: [f64; 2],
    scale: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    ftol: f64,
    max_iter: usize,
) -> Result<([f64; 2], usize), NumError> {
    let clip = |x: [f64; 2]| {
        [
            x[0].clamp(lo[0], hi[0].max(lo[0])),
            x[1].clamp(lo[1], hi[1].max(lo[1])),
        ]
    };
    let norm = |r: &[f64; 2]| (r[0] * r[0] + r[1] * r[1]).sqrt();
    let mut x = clip(x0);
    let mut r = f(&x)?;
    let mut rn = norm(&r);
    for it in 1..=max_iter {
        if rn <= ftol {
            return Ok((x, it - 1));
        }
        // forward-difference Jacobian
        let mut j = [[0.0f64; 2]; 2];
        for col in 0..2 {
            let dh = 1e-7 * scale[col].max(1e-12);
            let mut xp = x;
            xp[col] += dh;
            let xp = clip(xp);
            let step = xp[col] - x[col];
            let rp = if step.abs() > 0.0 {
                f(&xp)?
            } else {
                let mut xm = x;
                xm[col] -= dh;
                f(&clip(xm))?
            };
            let denom = if step.abs() > 0.0 { step } else { -dh };
            j[0][col] = (rp[0] - r[0]) / denom;
            j[1][col] = (rp[1] - r[1]) / denom;
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return Err(NumError::Singular("2x2 Jacobian".into()));
        }
        let dx = [
            -(j[1][1] * r[0] - j[0][1] * r[1]) / det,
            -(-j[1][0] * r[0] + j[0][0] * r[1]) / det,
        ];
        // backtracking line search with eval-failure rejection
        let mut t = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let xt = clip([x[0] + t * dx[0], x[1] + t * dx[1]]);
            match f(&xt) {
                Ok(rt) => {
                    let rtn = norm(&rt);
                    if rtn < rn * (1.0 - 1e-4 * t) || rtn <= ftol {
                        x = xt;
                        r = rt;
                        rn = rtn;
                        accepted = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(NumError::MaxIter(it));
        }
    }
    if rn <= ftol {
        return Ok((x, max_iter));
    }
    Err(NumError::MaxIter(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bracketed_finds_cos_root() {
        let mut f = |x: f64| Ok(x.cos());
        let r = solve_bracketed(&mut f, 1.0, 2.0, 1e-14, 1e-14, 100).unwrap();
        assert_relative_eq!(r.x, std::f64::consts::FRAC_PI_2, max_relative = 1e-10);
    }

    #[test]
    fn bracketed_rejects_no_sign_change() {
        let mut f = |x: f64| Ok(x * x + 1.0);
        assert!(matches!(
            solve_bracketed(&mut f, -1.0, 1.0, 1e-12, 1e-12, 50),
            Err(NumError::NoBracket(_, _))
        ));
    }

    #[test]
    fn newton2_solves_coupled_system() {
        // x^2 + y^2 = 4, x*y = 1
        let mut f = |x: &[f64; 2]| Ok([x[0] * x[0] + x[1] * x[1] - 4.0, x[0] * x[1] - 1.0]);
        let (x, _) = newton2(&mut f, [2.0, 0.4], [1.0, 1.0], [0.0, 0.0], [5.0, 5.0], 1e-12, 50).unwrap();
        assert_relative_eq!(x[0] * x[0] + x[1] * x[1], 4.0, epsilon = 1e-10);
        assert_relative_eq!(x[0] * x[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bisect_matches_bracketed() {
        let mut f1 = |x: f64| Ok(x.exp() - 3.0);
        let mut f2 = |x: f64| Ok(x.exp() - 3.0);
        let a = solve_bracketed(&mut f1, 0.0, 2.0, 1e-13, 1e-13, 200).unwrap().x;
        let b = bisect(&mut f2, 0.0, 2.0, 60).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-10);
    }
}
