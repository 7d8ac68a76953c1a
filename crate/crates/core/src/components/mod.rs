//! Static component models: expansion valve, compressor, evaporator and
//! condenser, plus the effectiveness-NTU kernel they share.
//!
//! Conventions: SI units throughout (Pa, J/kg, kg/s, K, W); valve opening in
//! percent and compressor speed in Hz. Heat rates are positive in each
//! exchanger's transfer direction (absorbed at the evaporator, rejected at
//! the condenser). The evaporator's secondary stream passes its sections in
//! series (counter-flow plate exchanger); the condenser's secondary stream is
//! split across sections in proportion to section length (cross-flow air
//! coil), which is why its per-section temperature rises divide by
//! ζ·ṁ_sec·c_p.

mod compressor;
mod condenser;
mod evaporator;
mod valve;

pub use compressor::{compressor_eval, compressor_flow, CompressorOutput};
pub use condenser::{condenser_eval, condenser_sc_heat, condenser_sh_length, condenser_tp_heat, CondSolution};
pub use evaporator::{evaporator_eval, EvapSolution};
pub use valve::{valve_flow, valve_opening};

use std::path::Path;

use thiserror::Error;

use crate::fluid::FluidError;
use crate::io::{IoError, KvMap};
use crate::numerics::NumError;

#[derive(Debug, Error)]
pub enum ComponentError {
    #[error("domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl ComponentError {
    pub(crate) fn from_num(e: NumError, what: &str) -> Self {
        match e {
            NumError::NoBracket(_, _) | NumError::Infeasible => {
                ComponentError::Infeasible(format!("{what}: {e}"))
            }
            other => ComponentError::NoConvergence(format!("{what}: {other}")),
        }
    }
}

/// Heat-rate residual tolerance of the inner fixed-point loops (relative)
/// and their iteration cap.
pub(crate) const LOOP_FTOL_REL: f64 = 1e-8;
pub(crate) const LOOP_MAX_ITER: usize = 200;

/// Counter-flow effectiveness-NTU relation with the phase-change limit
/// ε = 1 − e^(−NTU) at C = 0 and the balanced limit NTU/(1+NTU) at C = 1.
pub fn effectiveness(ntu: f64, c: f64) -> Result<f64, ComponentError> {
    if !(ntu >= 0.0) {
        return Err(ComponentError::Domain(format!("NTU = {ntu} must be >= 0")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(ComponentError::Domain(format!(
            "capacity ratio C = {c} must be in [0, 1]"
        )));
    }
    if ntu == 0.0 {
        return Ok(0.0);
    }
    let eps = if c < 1e-12 {
        1.0 - (-ntu).exp()
    } else if 1.0 - c < 1e-9 {
        ntu / (1.0 + ntu)
    } else {
        let e = (-ntu * (1.0 - c)).exp();
        (1.0 - e) / (1.0 - c * e)
    };
    Ok(eps.clamp(0.0, 1.0))
}

/// Facility constants of every static component model.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    /// Expansion valve coefficient [m²] (valve opening measured in %).
    pub c_eev: f64,
    /// Compressor power offset [W].
    pub a: f64,
    /// Compressor power slope [-].
    pub b: f64,
    /// Compressor re-expansion constant [m³].
    pub c: f64,
    /// Compressor displacement parameter [m³].
    pub s_t: f64,
    /// Compressor shell heat conductance [W/K].
    pub ua_comp: f64,
    /// Evaporator heat-transfer perimeter [m] and length [m].
    pub a_e_trnsf: f64,
    pub l_e: f64,
    /// Condenser heat-transfer perimeter [m] and length [m].
    pub a_c_trnsf: f64,
    pub l_c: f64,
    /// Section heat-transfer coefficients [W/(m²·K)].
    pub alpha_e_sh: f64,
    pub alpha_e_tp: f64,
    pub alpha_c_sh: f64,
    pub alpha_c_tp: f64,
    pub alpha_c_sc: f64,
    /// Condenser internal volume [m³].
    pub v_r: f64,
    /// Secondary-fluid specific heats [J/(kg·K)].
    pub cp_e_sec: f64,
    pub cp_c_sec: f64,
}

impl Default for PlantParams {
    /// Calibrated default facility: a small-capacity cycle with a feasible
    /// operating point near Q̇_e = 600 W, P_e ≈ 1.1 bar, P_c ≈ 15 bar,
    /// N ∈ [30, 50] Hz. See `params/default.ini` for the same values in
    /// file form.
    fn default() -> Self {
        PlantParams {
            c_eev: 2.34e-9,
            a: 143.0,
            b: 1.0,
            c: 2.0e-6,
            s_t: 4.93e-5,
            ua_comp: 5.0,
            a_e_trnsf: 0.25,
            l_e: 0.5,
            a_c_trnsf: 1.2,
            l_c: 1.0,
            alpha_e_sh: 450.0,
            alpha_e_tp: 210.0,
            alpha_c_sh: 40.0,
            alpha_c_tp: 180.0,
            alpha_c_sc: 150.0,
            v_r: 1.5e-3,
            cp_e_sec: 3300.0,
            cp_c_sec: 1006.0,
        }
    }
}

impl PlantParams {
    /// Load from a key-value file; every key is named after the model symbol
    /// (`c_eev`, `a`, `b`, `c`, `S_t`, `UA_comp`, `A_e_trnsf`, `L_e`,
    /// `A_c_trnsf`, `L_c`, `alpha_e_sh`, `alpha_e_tp`, `alpha_c_sh`,
    /// `alpha_c_tp`, `alpha_c_sc`, `V_R`, `cp_e_sec`, `cp_c_sec`). Missing
    /// keys keep the calibrated defaults; a `plant.` section prefix is
    /// accepted.
    pub fn from_file(path: &Path) -> Result<Self, IoError> {
        let kv = KvMap::from_file(path)?;
        Self::from_kv(&kv)
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self, IoError> {
        let mut p = PlantParams::default();
        let read = |key: &str, dst: &mut f64| -> Result<(), IoError> {
            let prefixed = format!("plant.{key}");
            if let Some(v) = kv.get_f64(&prefixed)? {
                *dst = v;
            } else if let Some(v) = kv.get_f64(key)? {
                *dst = v;
            }
            Ok(())
        };
        read("c_eev", &mut p.c_eev)?;
        read("a", &mut p.a)?;
        read("b", &mut p.b)?;
        read("c", &mut p.c)?;
        read("S_t", &mut p.s_t)?;
        read("UA_comp", &mut p.ua_comp)?;
        read("A_e_trnsf", &mut p.a_e_trnsf)?;
        read("L_e", &mut p.l_e)?;
        read("A_c_trnsf", &mut p.a_c_trnsf)?;
        read("L_c", &mut p.l_c)?;
        read("alpha_e_sh", &mut p.alpha_e_sh)?;
        read("alpha_e_tp", &mut p.alpha_e_tp)?;
        read("alpha_c_sh", &mut p.alpha_c_sh)?;
        read("alpha_c_tp", &mut p.alpha_c_tp)?;
        read("alpha_c_sc", &mut p.alpha_c_sc)?;
        read("V_R", &mut p.v_r)?;
        read("cp_e_sec", &mut p.cp_e_sec)?;
        read("cp_c_sec", &mut p.cp_c_sec)?;
        Ok(p)
    }

    /// All parameters strictly positive; the compressor denominator must
    /// stay positive up to `cr_max` at the least favorable heat-capacity
    /// exponent `k_min`.
    pub fn validate(&self, cr_max: f64, k_min: f64) -> Result<(), ComponentError> {
        let fields = [
            ("c_eev", self.c_eev),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("S_t", self.s_t),
            ("UA_comp", self.ua_comp),
            ("A_e_trnsf", self.a_e_trnsf),
            ("L_e", self.l_e),
            ("A_c_trnsf", self.a_c_trnsf),
            ("L_c", self.l_c),
            ("alpha_e_sh", self.alpha_e_sh),
            ("alpha_e_tp", self.alpha_e_tp),
            ("alpha_c_sh", self.alpha_c_sh),
            ("alpha_c_tp", self.alpha_c_tp),
            ("alpha_c_sc", self.alpha_c_sc),
            ("V_R", self.v_r),
            ("cp_e_sec", self.cp_e_sec),
            ("cp_c_sec", self.cp_c_sec),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(ComponentError::Domain(format!(
                    "parameter {name} = {v} must be strictly positive"
                )));
            }
        }
        let margin = self.s_t - self.c * (cr_max.powf(k_min) - 1.0);
        if margin <= 0.0 {
            return Err(ComponentError::Domain(format!(
                "S_t - c(CR_max^k - 1) = {margin:.3e} must stay positive over the admissible CR range"
            )));
        }
        Ok(())
    }
}

/// Secondary-fluid conditions and the compressor surroundings temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbances {
    /// Evaporator secondary mass flow [kg/s] and inlet temperature [K].
    pub mdot_e_sec: f64,
    pub t_e_sec_in: f64,
    /// Condenser secondary mass flow [kg/s] and inlet temperature [K].
    pub mdot_c_sec: f64,
    pub t_c_sec_in: f64,
    /// Compressor surroundings temperature [K].
    pub t_surr: f64,
}

impl Default for Disturbances {
    fn default() -> Self {
        Disturbances {
            mdot_e_sec: 0.06,
            t_e_sec_in: 253.75,
            mdot_c_sec: 0.35,
            t_c_sec_in: 300.15,
            t_surr: 298.15,
        }
    }
}

impl Disturbances {
    pub fn from_kv(kv: &KvMap) -> Result<Self, IoError> {
        let mut d = Disturbances::default();
        let read = |key: &str, dst: &mut f64| -> Result<(), IoError> {
            let prefixed = format!("disturbances.{key}");
            if let Some(v) = kv.get_f64(&prefixed)? {
                *dst = v;
            } else if let Some(v) = kv.get_f64(key)? {
                *dst = v;
            }
            Ok(())
        };
        read("mdot_e_sec", &mut d.mdot_e_sec)?;
        read("T_e_sec_in", &mut d.t_e_sec_in)?;
        read("mdot_c_sec", &mut d.mdot_c_sec)?;
        read("T_c_sec_in", &mut d.t_c_sec_in)?;
        read("T_surr", &mut d.t_surr)?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ComponentError> {
        if !(self.mdot_e_sec > 0.0 && self.mdot_c_sec > 0.0) {
            return Err(ComponentError::Domain(
                "secondary mass flows must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
