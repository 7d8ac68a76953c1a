//! Refrigerant thermodynamic properties.
//!
//! All component and cycle models consume fluid data through the
//! [`PropertyProvider`] trait so the built-in correlation set can be swapped
//! for a higher-fidelity backend without touching the models. The built-in
//! fluid is [`CorrelationFluid`]: saturation-curve polynomials in `ln P` for
//! an R404a-class refrigerant, a linear-in-temperature superheat/subcool
//! extension with pressure-dependent heat capacities, and analytic partial
//! derivatives for every quantity the moving-boundary condenser model needs.
//!
//! Single-phase extensions:
//!   superheated:  h = h_g(P) + c_p,g(P)·(T − T_sat(P)),  ρ = ρ_g(P)·T_sat/T
//!   subcooled:    h = h_f(P) + c_p,f(P)·(T − T_sat(P)),  ρ linear in h
//! Entropy is built from the saturation-line liquid integral s_f(P) with
//! s_g(P) = s_f(P) + (h_g − h_f)/T_sat, which keeps ds = dh/T exact inside
//! the dome and continuous across its boundaries.

mod r404a_data;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Hard temperature window of the single-phase extensions.
const T_MAX_MODEL: f64 = 430.0;
const SUBCOOL_FLOOR: f64 = 45.0; // max K below saturation before NonPhysical

#[derive(Debug, Error)]
pub enum FluidError {
    #[error("{what} = {value:.6e} outside supported range [{min:.6e}, {max:.6e}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("non-physical state: {0}")]
    NonPhysical(String),
    #[error("property inversion failed to converge: {0}")]
    NoConvergence(String),
    #[error("fluid coefficient file: {0}")]
    BadCoefficientFile(String),
}

/// Phase region of a single thermodynamic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Subcooled,
    TwoPhase,
    Superheated,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Subcooled => write!(f, "subcooled"),
            Phase::TwoPhase => write!(f, "two-phase"),
            Phase::Superheated => write!(f, "superheated"),
        }
    }
}

/// A refrigerant state determined by pressure and specific enthalpy.
#[derive(Debug, Clone, Copy)]
pub struct ThermoState {
    /// Pressure [Pa].
    pub p: f64,
    /// Specific enthalpy [J/kg].
    pub h: f64,
    /// Temperature [K].
    pub t: f64,
    /// Density [kg/m³].
    pub rho: f64,
    /// Specific entropy [J/(kg·K)].
    pub s: f64,
    /// Specific volume [m³/kg].
    pub v: f64,
    pub phase: Phase,
    /// Vapor quality; `Some` only inside the two-phase dome.
    pub quality: Option<f64>,
}

/// Everything the models need on the saturation curve at one pressure.
#[derive(Debug, Clone, Copy)]
pub struct SaturationPoint {
    pub p: f64,
    pub t_sat: f64,
    pub h_f: f64,
    pub h_g: f64,
    pub rho_f: f64,
    pub rho_g: f64,
    pub cp_f: f64,
    pub cp_g: f64,
    pub cv_g: f64,
    pub s_f: f64,
    pub s_g: f64,
    pub dtsat_dp: f64,
    pub dhf_dp: f64,
    pub dhg_dp: f64,
    pub drhof_dp: f64,
    pub drhog_dp: f64,
}

impl SaturationPoint {
    pub fn latent(&self) -> f64 {
        self.h_g - self.h_f
    }
}

/// Void-fraction-weighted two-phase mean quantities with their partials.
#[derive(Debug, Clone, Copy)]
pub struct TwoPhaseMean {
    pub gamma: f64,
    pub rho_tp: f64,
    pub h_tp: f64,
    pub drho_tp_dp: f64,
    pub dh_tp_dp: f64,
    pub drho_tp_dgamma: f64,
    pub dh_tp_dgamma: f64,
    /// Pressure dependence of the mean void fraction (zero for the
    /// constant-γ̄ default).
    pub dgamma_dp: f64,
}

/// Density and its partials at a single-phase state.
#[derive(Debug, Clone, Copy)]
pub struct RhoPartials {
    pub rho: f64,
    pub drho_dp: f64,
    pub drho_dh: f64,
}

/// Property interface every model consumes. Implementations must be pure and
/// immutable after construction; they are shared read-only across parallel
/// workers.
pub trait PropertyProvider: Send + Sync {
    /// Supported pressure range [Pa].
    fn p_range(&self) -> (f64, f64);

    fn sat_props(&self, p: f64) -> Result<SaturationPoint, FluidError>;

    fn state_from_ph(&self, p: f64, h: f64) -> Result<ThermoState, FluidError>;

    fn state_from_ps(&self, p: f64, s: f64) -> Result<ThermoState, FluidError>;

    /// Mean two-phase density/enthalpy used by the moving-boundary model.
    fn two_phase_mean(&self, p: f64) -> Result<TwoPhaseMean, FluidError>;

    /// Superheated density with analytic partials at (p, h).
    fn rho_superheated(&self, p: f64, h: f64) -> Result<RhoPartials, FluidError>;

    /// Subcooled density with analytic partials at (p, h).
    fn rho_subcooled(&self, p: f64, h: f64) -> Result<RhoPartials, FluidError>;
}

/// Coefficient set of the built-in correlation fluid. Polynomials are in
/// `x = ln(P / 1e5)`.
#[derive(Debug, Clone)]
pub struct CorrelationCoeffs {
    pub tsat: Vec<f64>,
    pub h_f: Vec<f64>,
    pub h_g: Vec<f64>,
    pub rho_f: Vec<f64>,
    pub ln_rho_g: Vec<f64>,
    pub cp_g: Vec<f64>,
    pub cv_g: Vec<f64>,
    pub s_f: Vec<f64>,
    pub cp_f_a: f64,
    pub cp_f_b: f64,
    pub t_crit: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub gamma_void: f64,
}

impl Default for CorrelationCoeffs {
    fn default() -> Self {
        use r404a_data::*;
        CorrelationCoeffs {
            tsat: TSAT.to_vec(),
            h_f: H_F.to_vec(),
            h_g: H_G.to_vec(),
            rho_f: RHO_F.to_vec(),
            ln_rho_g: LN_RHO_G.to_vec(),
            cp_g: CP_G.to_vec(),
            cv_g: CV_G.to_vec(),
            s_f: S_F.to_vec(),
            cp_f_a: CP_F_A,
            cp_f_b: CP_F_B,
            t_crit: T_CRIT,
            p_min: P_MIN,
            p_max: P_MAX,
            gamma_void: GAMMA_VOID,
        }
    }
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn poly_dx(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &ci)| acc * x + i as f64 * ci)
}

fn poly_dxx(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (i, &ci)| acc * x + (i * (i - 1)) as f64 * ci)
}

impl CorrelationCoeffs {
    /// Parse a key-value coefficient override file. Any key present replaces
    /// the built-in value; the rest keep their defaults. Keys: `tsat_c0..`,
    /// `h_f_c0..`, `h_g_c0..`, `rho_f_c0..`, `ln_rho_g_c0..`, `cp_g_c0..`,
    /// `cv_g_c0..`, `s_f_c0..`, `cp_f_a`, `cp_f_b`, `t_crit`, `p_min`,
    /// `p_max`, `gamma_void`.
    pub fn from_file(path: &Path) -> Result<Self, FluidError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FluidError::BadCoefficientFile(format!("{}: {e}", path.display())))?;
        Self::from_kv_text(&text)
    }

    pub fn from_kv_text(text: &str) -> Result<Self, FluidError> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('[') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                FluidError::BadCoefficientFile(format!("line {}: missing '='", lineno + 1))
            })?;
            let val: f64 = v.trim().parse().map_err(|_| {
                FluidError::BadCoefficientFile(format!("line {}: bad number '{}'", lineno + 1, v.trim()))
            })?;
            kv.insert(k.trim().to_string(), val);
        }
        let mut c = CorrelationCoeffs::default();
        let mut take_vec = |name: &str, dst: &mut Vec<f64>| {
            for i in 0..dst.len() + 8 {
                if let Some(v) = kv.remove(&format!("{name}_c{i}")) {
                    if i >= dst.len() {
                        dst.resize(i + 1, 0.0);
                    }
                    dst[i] = v;
                }
            }
        };
        take_vec("tsat", &mut c.tsat);
        take_vec("h_f", &mut c.h_f);
        take_vec("h_g", &mut c.h_g);
        take_vec("rho_f", &mut c.rho_f);
        take_vec("ln_rho_g", &mut c.ln_rho_g);
        take_vec("cp_g", &mut c.cp_g);
        take_vec("cv_g", &mut c.cv_g);
        take_vec("s_f", &mut c.s_f);
        for (key, dst) in [
            ("cp_f_a", &mut c.cp_f_a),
            ("cp_f_b", &mut c.cp_f_b),
            ("t_crit", &mut c.t_crit),
            ("p_min", &mut c.p_min),
            ("p_max", &mut c.p_max),
            ("gamma_void", &mut c.gamma_void),
        ] {
            if let Some(v) = kv.remove(key) {
                *dst = v;
            }
        }
        if let Some(k) = kv.keys().next() {
            return Err(FluidError::BadCoefficientFile(format!("unknown key '{k}'")));
        }
        Ok(c)
    }
}

/// The built-in correlation fluid.
#[derive(Debug, Clone, Default)]
pub struct CorrelationFluid {
    c: CorrelationCoeffs,
}

impl CorrelationFluid {
    pub fn new(c: CorrelationCoeffs) -> Self {
        CorrelationFluid { c }
    }

    pub fn from_file(path: &Path) -> Result<Self, FluidError> {
        Ok(CorrelationFluid::new(CorrelationCoeffs::from_file(path)?))
    }

    fn check_p(&self, p: f64) -> Result<f64, FluidError> {
        if !(p >= self.c.p_min && p <= self.c.p_max) {
            return Err(FluidError::OutOfRange {
                what: "pressure",
                value: p,
                min: self.c.p_min,
                max: self.c.p_max,
            });
        }
        Ok((p / 1.0e5).ln())
    }

    fn cp_f(&self, t_sat: f64) -> f64 {
        self.c.cp_f_a + self.c.cp_f_b / (1.0 - t_sat / self.c.t_crit)
    }

    fn dcpf_dp(&self, t_sat: f64, dtsat_dp: f64) -> f64 {
        let d = 1.0 - t_sat / self.c.t_crit;
        self.c.cp_f_b * dtsat_dp / (self.c.t_crit * d * d)
    }

    fn state_at(&self, p: f64, h: f64, sat: &SaturationPoint) -> Result<ThermoState, FluidError> {
        if h < sat.h_f {
            let t = sat.t_sat + (h - sat.h_f) / sat.cp_f;
            if t < sat.t_sat - SUBCOOL_FLOOR {
                return Err(FluidError::NonPhysical(format!(
                    "enthalpy {h:.3e} below subcooled floor at P = {p:.3e}"
                )));
            }
            let rho = self.rho_subcooled(p, h)?.rho;
            let s = sat.s_f + sat.cp_f * (t / sat.t_sat).ln();
            Ok(ThermoState {
                p,
                h,
                t,
                rho,
                s,
                v: 1.0 / rho,
                phase: Phase::Subcooled,
                quality: None,
            })
        } else if h <= sat.h_g {
            let q = (h - sat.h_f) / (sat.h_g - sat.h_f);
            let v = (1.0 - q) / sat.rho_f + q / sat.rho_g;
            let s = sat.s_f + q * (sat.s_g - sat.s_f);
            Ok(ThermoState {
                p,
                h,
                t: sat.t_sat,
                rho: 1.0 / v,
                s,
                v,
                phase: Phase::TwoPhase,
                quality: Some(q),
            })
        } else {
            let t = sat.t_sat + (h - sat.h_g) / sat.cp_g;
            if t > T_MAX_MODEL {
                return Err(FluidError::OutOfRange {
                    what: "superheated temperature",
                    value: t,
                    min: 0.0,
                    max: T_MAX_MODEL,
                });
            }
            let rho = sat.rho_g * sat.t_sat / t;
            let s = sat.s_g + sat.cp_g * (t / sat.t_sat).ln();
            Ok(ThermoState {
                p,
                h,
                t,
                rho,
                s,
                v: 1.0 / rho,
                phase: Phase::Superheated,
                quality: None,
            })
        }
    }
}

impl PropertyProvider for CorrelationFluid {
    fn p_range(&self) -> (f64, f64) {
        (self.c.p_min, self.c.p_max)
    }

    fn sat_props(&self, p: f64) -> Result<SaturationPoint, FluidError> {
        let x = self.check_p(p)?;
        let t_sat = poly(&self.c.tsat, x);
        let h_f = poly(&self.c.h_f, x);
        let h_g = poly(&self.c.h_g, x);
        let rho_f = poly(&self.c.rho_f, x);
        let rho_g = poly(&self.c.ln_rho_g, x).exp();
        let s_f = poly(&self.c.s_f, x);
        let s_g = s_f + (h_g - h_f) / t_sat;
        Ok(SaturationPoint {
            p,
            t_sat,
            h_f,
            h_g,
            rho_f,
            rho_g,
            cp_f: self.cp_f(t_sat),
            cp_g: poly(&self.c.cp_g, x),
            cv_g: poly(&self.c.cv_g, x),
            s_f,
            s_g,
            dtsat_dp: poly_dx(&self.c.tsat, x) / p,
            dhf_dp: poly_dx(&self.c.h_f, x) / p,
            dhg_dp: poly_dx(&self.c.h_g, x) / p,
            drhof_dp: poly_dx(&self.c.rho_f, x) / p,
            drhog_dp: rho_g * poly_dx(&self.c.ln_rho_g, x) / p,
        })
    }

    fn state_from_ph(&self, p: f64, h: f64) -> Result<ThermoState, FluidError> {
        let sat = self.sat_props(p)?;
        self.state_at(p, h, &sat)
    }

    fn state_from_ps(&self, p: f64, s: f64) -> Result<ThermoState, FluidError> {
        let sat = self.sat_props(p)?;
        let h = if s < sat.s_f {
            let t = sat.t_sat * ((s - sat.s_f) / sat.cp_f).exp();
            sat.h_f + sat.cp_f * (t - sat.t_sat)
        } else if s <= sat.s_g {
            let q = (s - sat.s_f) / (sat.s_g - sat.s_f);
            sat.h_f + q * (sat.h_g - sat.h_f)
        } else {
            let t = sat.t_sat * ((s - sat.s_g) / sat.cp_g).exp();
            sat.h_g + sat.cp_g * (t - sat.t_sat)
        };
        self.state_at(p, h, &sat)
    }

    fn two_phase_mean(&self, p: f64) -> Result<TwoPhaseMean, FluidError> {
        let sat = self.sat_props(p)?;
        let g = self.c.gamma_void;
        let rho_tp = g * sat.rho_g + (1.0 - g) * sat.rho_f;
        let h_tp = (g * sat.rho_g * sat.h_g + (1.0 - g) * sat.rho_f * sat.h_f) / rho_tp;
        let drho_tp_dp = g * sat.drhog_dp + (1.0 - g) * sat.drhof_dp;
        let num_dp = g * (sat.drhog_dp * sat.h_g + sat.rho_g * sat.dhg_dp)
            + (1.0 - g) * (sat.drhof_dp * sat.h_f + sat.rho_f * sat.dhf_dp);
        let dh_tp_dp = (num_dp - h_tp * drho_tp_dp) / rho_tp;
        let drho_tp_dgamma = sat.rho_g - sat.rho_f;
        let dh_tp_dgamma =
            (sat.rho_g * sat.h_g - sat.rho_f * sat.h_f - h_tp * drho_tp_dgamma) / rho_tp;
        Ok(TwoPhaseMean {
            gamma: g,
            rho_tp,
            h_tp,
            drho_tp_dp,
            dh_tp_dp,
            drho_tp_dgamma,
            dh_tp_dgamma,
            dgamma_dp: 0.0,
        })
    }

    fn rho_superheated(&self, p: f64, h: f64) -> Result<RhoPartials, FluidError> {
        let sat = self.sat_props(p)?;
        if h < sat.h_g {
            return Err(FluidError::NonPhysical(format!(
                "rho_superheated called below the dew line (h = {h:.3e})"
            )));
        }
        let x = (p / 1.0e5).ln();
        let t = sat.t_sat + (h - sat.h_g) / sat.cp_g;
        let rho = sat.rho_g * sat.t_sat / t;
        let dcpg_dp = poly_dx(&self.c.cp_g, x) / p;
        let dt_dp = sat.dtsat_dp - sat.dhg_dp / sat.cp_g - (h - sat.h_g) * dcpg_dp / (sat.cp_g * sat.cp_g);
        let drho_dp = sat.drhog_dp * sat.t_sat / t + sat.rho_g * sat.dtsat_dp / t
            - sat.rho_g * sat.t_sat / (t * t) * dt_dp;
        let drho_dh = -sat.rho_g * sat.t_sat / (t * t * sat.cp_g);
        Ok(RhoPartials { rho, drho_dp, drho_dh })
    }

    fn rho_subcooled(&self, p: f64, h: f64) -> Result<RhoPartials, FluidError> {
        let sat = self.sat_props(p)?;
        if h > sat.h_f {
            return Err(FluidError::NonPhysical(format!(
                "rho_subcooled called above the bubble line (h = {h:.3e})"
            )));
        }
        let x = (p / 1.0e5).ln();
        // drho/dh at constant P = (drho_f/dT) / cp_f along the liquid branch
        let drhof_dt = sat.drhof_dp / sat.dtsat_dp;
        let slope = drhof_dt / sat.cp_f;
        let rho = sat.rho_f + slope * (h - sat.h_f);
        // exact dP-derivative of the linear-in-h construction
        let d2rhof = (poly_dxx(&self.c.rho_f, x) - poly_dx(&self.c.rho_f, x)) / (p * p);
        let d2tsat = (poly_dxx(&self.c.tsat, x) - poly_dx(&self.c.tsat, x)) / (p * p);
        let ddrhof_dt_dp = (d2rhof * sat.dtsat_dp - sat.drhof_dp * d2tsat) / (sat.dtsat_dp * sat.dtsat_dp);
        let dslope_dp = (ddrhof_dt_dp * sat.cp_f - drhof_dt * self.dcpf_dp(sat.t_sat, sat.dtsat_dp))
            / (sat.cp_f * sat.cp_f);
        let drho_dp = sat.drhof_dp + dslope_dp * (h - sat.h_f) - slope * sat.dhf_dp;
        Ok(RhoPartials {
            rho,
            drho_dp,
            drho_dh: slope,
        })
    }
}
