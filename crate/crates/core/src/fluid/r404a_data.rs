//! Built-in correlation coefficients for the default R404a-class refrigerant.
//!
//! Polynomials are in `x = ln(P / 1e5 Pa)` and were fitted over
//! P ∈ [0.5, 30] bar to a saturation dataset anchored to published R404A
//! table values (IIR reference state: h_f = 200 kJ/kg, s_f = 1 kJ/(kg·K)
//! at 0 °C) with the saturated-vapor density constructed from the
//! Clausius–Clapeyron relation so that pressure, densities and latent heat
//! are mutually consistent.

pub(crate) const TSAT: [f64; 7] = [
    2.262863641296e+02,
    2.119481990850e+01,
    2.078298771738e+00,
    2.857726799601e-01,
    -8.607056011310e-02,
    6.879736379539e-02,
    -1.166291923438e-02,
];
pub(crate) const H_F: [f64; 7] = [
    1.388017715075e+05,
    2.604829351429e+04,
    3.464290066054e+03,
    3.937165514610e+02,
    -4.218020557001e+01,
    4.231253642257e+01,
    7.637718505455e+00,
];
pub(crate) const H_G: [f64; 7] = [
    3.412243266238e+05,
    1.022476172759e+04,
    1.935448045126e+03,
    -3.507532754604e+02,
    -8.700991231326e+02,
    5.460998465448e+02,
    -1.009323010199e+02,
];
pub(crate) const RHO_F: [f64; 7] = [
    1.284733988633e+03,
    -5.230925251431e+01,
    -3.380064853925e+00,
    2.483853609395e+00,
    -1.033437788074e+01,
    5.006470885270e+00,
    -8.375646285474e-01,
];
pub(crate) const LN_RHO_G: [f64; 7] = [
    1.658133845586e+00,
    9.802115391624e-01,
    -1.062458961736e-02,
    -7.248926183972e-04,
    1.662741554265e-02,
    -9.351785585244e-03,
    1.807967945060e-03,
];
pub(crate) const CP_G: [f64; 8] = [
    7.740816966913e+02,
    5.791715789068e+01,
    1.424656281295e+01,
    2.404498540889e+00,
    2.988139398551e-01,
    2.961736596261e+00,
    -1.428791673342e+00,
    3.244244210159e-01,
];
pub(crate) const CV_G: [f64; 6] = [
    6.632847702844e+02,
    3.719927137850e+01,
    5.353983957545e+00,
    5.159494746596e+00,
    -3.383553370744e+00,
    9.186472247476e-01,
];
pub(crate) const S_F: [f64; 7] = [
    7.552872806107e+02,
    1.147658778692e+02,
    9.826621522586e+00,
    6.942535838894e-01,
    -4.273518414811e-01,
    2.908470059604e-01,
    -1.050078169312e-02,
];
pub(crate) const CP_F_A: f64 = 1.134832234883e+03;
pub(crate) const CP_F_B: f64 = 4.957871566805e+01;
pub(crate) const T_CRIT: f64 = 3.452700e+02;

pub(crate) const P_MIN: f64 = 0.5e5;
pub(crate) const P_MAX: f64 = 30.0e5;
pub(crate) const GAMMA_VOID: f64 = 0.8;
