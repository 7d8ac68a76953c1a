//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4) pair) with
//! cubic-Hermite dense output and PI step-size control. Derivative
//! evaluations may fail (the cycle model's inner solves can lose validity at
//! an overlong step); a failed evaluation rejects the step and retries with a
//! smaller one.

use nalgebra::SVector;

use super::NumError;

/// One accepted step with endpoint derivatives, enough for cubic Hermite
/// interpolation anywhere inside [t0, t1].
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub x0: SVector<f64, N>,
    pub x1: SVector<f64, N>,
    pub f0: SVector<f64, N>,
    pub f1: SVector<f64, N>,
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> SVector<f64, N> {
        let h = self.t1 - self.t0;
        let s = ((t - self.t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.x0 * h00 + self.f0 * (h10 * h) + self.x1 * h01 + self.f1 * (h11 * h)
    }
}

#[derive(Debug, Clone)]
pub struct RkOptions<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl<const N: usize> RkOptions<N> {
    pub fn with_scales(rtol: f64, scales: [f64; N]) -> Self {
        let mut atol = [0.0; N];
        for i in 0..N {
            atol[i] = rtol * scales[i];
        }
        RkOptions {
            rtol,
            atol,
            h_init: 1.0,
            h_min: 1e-9,
            h_max: 60.0,
            max_steps: 200_000,
        }
    }
}

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub type DerivFn<'a, const N: usize> =
    &'a mut dyn FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, NumError>;

/// Integrate from t0 to t1, invoking `on_step` for every accepted step.
pub fn integrate<const N: usize>(
    f: DerivFn<'_, N>,
    t0: f64,
    t1: f64,
    x0: SVector<f64, N>,
    opts: &RkOptions<N>,
    mut on_step: impl FnMut(&DenseStep<N>),
) -> Result<SVector<f64, N>, NumError> {
    let mut t = t0;
    let mut x = x0;
    let mut k0 = f(t, &x)?;
    let mut h = opts.h_init.min(t1 - t0).max(opts.h_min);
    let mut err_prev: f64 = 1.0;
    let mut steps = 0usize;
    while t < t1 - 1e-12 * (t1 - t0).max(1.0) {
        if steps > opts.max_steps {
            return Err(NumError::MaxIter(steps));
        }
        steps += 1;
        h = h.min(t1 - t);
        let mut k = [SVector::<f64, N>::zeros(); 7];
        k[0] = k0;
        let mut failed = false;
        for s in 0..6 {
            let mut xs = x;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                xs += kj * (A[s][j] * h);
            }
            match f(t + C[s] * h, &xs) {
                Ok(v) => k[s + 1] = v,
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= 0.5;
            if h < opts.h_min {
                return Err(NumError::Eval(format!(
                    "derivative evaluation keeps failing near t = {t:.6e}"
                )));
            }
            continue;
        }
        // 5th-order solution is stage 6's argument (FSAL): x1 = x + h Σ b_j k_j
        let mut x1 = x;
        for (j, kj) in k.iter().enumerate().take(6) {
            x1 += kj * (A[5][j] * h);
        }
        // x1 computed with the b-row (A[5] holds b); error via E row over all 7 stages
        let mut err_vec = SVector::<f64, N>::zeros();
        for (j, kj) in k.iter().enumerate() {
            err_vec += kj * (E[j] * h);
        }
        let mut err: f64 = 0.0;
        for i in 0..N {
            let sc = opts.atol[i] + opts.rtol * x[i].abs().max(x1[i].abs());
            err += (err_vec[i] / sc).powi(2);
        }
        err = (err / N as f64).sqrt();
        if err <= 1.0 {
            let step = DenseStep {
                t0: t,
                t1: t + h,
                x0: x,
                x1,
                f0: k[0],
                f1: k[6],
            };
            on_step(&step);
            t += h;
            x = x1;
            k0 = k[6]; // FSAL
            let fac = 0.9 * err.max(1e-10).powf(-0.2) * err_prev.powf(0.04);
            h = (h * fac.clamp(0.2, 5.0)).clamp(opts.h_min, opts.h_max);
            err_prev = err.max(1e-10);
        } else {
            let fac = 0.9 * err.powf(-0.2);
            h = (h * fac.clamp(0.1, 0.9)).max(opts.h_min);
            if h <= opts.h_min && err > 1.0 {
                return Err(NumError::Eval(format!(
                    "step size underflow at t = {t:.6e} (err = {err:.3e})"
                )));
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    #[test]
    fn integrates_harmonic_oscillator() {
        let mut f = |_t: f64, x: &Vector2<f64>| Ok(Vector2::new(x[1], -x[0]));
        let opts = RkOptions::with_scales(1e-9, [1.0, 1.0]);
        let tf = 2.0 * std::f64::consts::PI;
        let x = integrate(&mut f, 0.0, tf, Vector2::new(1.0, 0.0), &opts, |_| {}).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-7);
    }

    #[test]
    fn dense_output_interpolates() {
        let mut f = |t: f64, _x: &SVector<f64, 1>| Ok(SVector::<f64, 1>::new(t.cos()));
        let mut opts = RkOptions::with_scales(1e-10, [1.0]);
        opts.h_max = 0.1; // keep steps short so the cubic interpolant is tight
        let mut samples = Vec::new();
        integrate(&mut f, 0.0, 3.0, SVector::<f64, 1>::new(0.0), &opts, |s| {
            samples.push(*s);
        })
        .unwrap();
        for s in &samples {
            let tm = 0.5 * (s.t0 + s.t1);
            assert_relative_eq!(s.eval(tm)[0], tm.sin(), epsilon = 1e-6);
        }
    }

    #[test]
    fn halving_tolerance_tightens_error() {
        let mut f1 = |_t: f64, x: &SVector<f64, 1>| Ok(*x);
        let mut f2 = |_t: f64, x: &SVector<f64, 1>| Ok(*x);
        let loose = RkOptions::with_scales(1e-4, [1.0]);
        let tight = RkOptions::with_scales(1e-8, [1.0]);
        let x0 = SVector::<f64, 1>::new(1.0);
        let a = integrate(&mut f1, 0.0, 1.0, x0, &loose, |_| {}).unwrap();
        let b = integrate(&mut f2, 0.0, 1.0, x0, &tight, |_| {}).unwrap();
        let e = std::f64::consts::E;
        assert!((b[0] - e).abs() < (a[0] - e).abs().max(1e-12));
    }
}
