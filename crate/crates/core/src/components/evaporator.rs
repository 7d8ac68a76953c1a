//! Evaporator: counter-flow plate exchanger with a two-phase section and a
//! superheated section. The secondary stream passes the superheated section
//! first, then the two-phase section; the superheated length fraction is the
//! section's one fixed point.

use super::{effectiveness, ComponentError, Disturbances, PlantParams, LOOP_FTOL_REL, LOOP_MAX_ITER};
use crate::fluid::PropertyProvider;
use crate::numerics::roots::solve_bracketed;

#[derive(Debug, Clone, Copy)]
pub struct EvapSolution {
    /// Refrigerant inlet enthalpy implied by the heat balance [J/kg].
    pub h_e_in: f64,
    /// Degree of superheating at the outlet [K].
    pub t_sh: f64,
    /// Secondary-fluid outlet temperature [K].
    pub t_e_sec_out: f64,
    /// Two-phase section length fraction.
    pub zeta_e_tp: f64,
    /// Section heat rates [W], positive into the refrigerant.
    pub q_sh: f64,
    pub q_tp: f64,
}

/// Superheat-section transfer rate at a candidate two-phase length.
fn q_sh_ntu(
    zeta_e_tp: f64,
    mdot: f64,
    cp_ref: f64,
    t_e: f64,
    dist: &Disturbances,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    let c_ref = mdot * cp_ref;
    let c_sec = dist.mdot_e_sec * params.cp_e_sec;
    let c_min = c_ref.min(c_sec);
    let c_max = c_ref.max(c_sec);
    let ua = params.alpha_e_sh * (1.0 - zeta_e_tp) * params.a_e_trnsf * params.l_e;
    if c_min <= 0.0 {
        return Ok(0.0);
    }
    let eps = effectiveness(ua / c_min, c_min / c_max)?;
    Ok(eps * c_min * (dist.t_e_sec_in - t_e))
}

pub fn evaporator_eval(
    p_e: f64,
    mdot: f64,
    h_e_out: f64,
    dist: &Disturbances,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<EvapSolution, ComponentError> {
    if mdot <= 0.0 {
        return Err(ComponentError::Domain("mass flow must be positive".into()));
    }
    dist.validate()?;
    let sat = fluid.sat_props(p_e)?;
    let t_e = sat.t_sat;
    if h_e_out < sat.h_g - 1e-9 * sat.h_g.abs() {
        return Err(ComponentError::Domain(format!(
            "evaporator outlet must be saturated or superheated (h = {h_e_out:.4e} < h_g = {:.4e})",
            sat.h_g
        )));
    }
    let q_sh = mdot * (h_e_out - sat.h_g);
    let cp_ref = sat.cp_g;

    let zeta_e_tp = if q_sh <= 0.0 {
        1.0
    } else {
        let ftol = LOOP_FTOL_REL * q_sh.abs().max(1.0);
        let mut resid =
            |z: f64| Ok(q_sh_ntu(z, mdot, cp_ref, t_e, dist, params).map_err(eval_num)? - q_sh);
        if resid(0.0).map_err(num_back)? < 0.0 {
            return Err(ComponentError::Infeasible(format!(
                "required superheat duty {q_sh:.2} W exceeds the whole-exchanger capability"
            )));
        }
        solve_bracketed(&mut resid, 0.0, 1.0, 1e-13, ftol, LOOP_MAX_ITER)
            .map_err(|e| ComponentError::from_num(e, "evaporator superheat-length loop"))?
            .x
    };

    let c_sec = dist.mdot_e_sec * params.cp_e_sec;
    let t_sec_mid = dist.t_e_sec_in - q_sh / c_sec;
    // two-phase section: refrigerant capacity infinite, C = 0
    let ua_tp = params.alpha_e_tp * zeta_e_tp * params.a_e_trnsf * params.l_e;
    let eps_tp = effectiveness(ua_tp / c_sec, 0.0)?;
    let q_tp = eps_tp * c_sec * (t_sec_mid - t_e);
    let h_e_in = sat.h_g - q_tp / mdot;
    let t_e_sec_out = t_sec_mid - q_tp / c_sec;
    let t_e_out = fluid.state_from_ph(p_e, h_e_out)?.t;
    Ok(EvapSolution {
        h_e_in,
        t_sh: t_e_out - t_e,
        t_e_sec_out,
        zeta_e_tp,
        q_sh,
        q_tp,
    })
}

// adapters between ComponentError and the scalar solver's error type
fn eval_num(e: ComponentError) -> crate::numerics::NumError {
    crate::numerics::NumError::Eval(e.to_string())
}

fn num_back(e: crate::numerics::NumError) -> ComponentError {
    ComponentError::NoConvergence(e.to_string())
}
