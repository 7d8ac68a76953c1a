//! Condenser: cross-flow air coil with superheated, two-phase and subcooled
//! sections. The secondary stream splits across the sections in proportion
//! to their length fractions, each share entering at the common inlet
//! temperature; the mixed outlet is the length-weighted average. Three inner
//! fixed points: the subcooled length, the two-phase length, and the inlet
//! enthalpy implied by the superheated remainder.

use super::{effectiveness, ComponentError, Disturbances, PlantParams, LOOP_FTOL_REL, LOOP_MAX_ITER};
use crate::fluid::PropertyProvider;
use crate::numerics::roots::solve_bracketed;
use crate::numerics::NumError;

#[derive(Debug, Clone, Copy)]
pub struct CondSolution {
    /// Condenser inlet enthalpy implied by the superheated-section balance [J/kg].
    pub h_c_in_prime: f64,
    /// Degree of subcooling at the outlet [K].
    pub t_sc: f64,
    /// Mixed secondary outlet temperature [K].
    pub t_c_sec_out: f64,
    pub zeta_c_sh: f64,
    pub zeta_c_tp: f64,
    pub zeta_c_sc: f64,
    /// Section heat rates [W], positive out of the refrigerant.
    pub q_sh: f64,
    pub q_tp: f64,
    pub q_sc: f64,
}

/// ε·C_min·ΔT_inlet of the subcooled section at length fraction `zeta`,
/// with the secondary share ζ·ṁ_sec·c_p.
pub fn condenser_sc_heat(
    zeta: f64,
    mdot: f64,
    cp_ref: f64,
    t_c: f64,
    dist: &Disturbances,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    if zeta <= 0.0 {
        return Ok(0.0);
    }
    let c_ref = mdot * cp_ref;
    let c_sec = zeta * dist.mdot_c_sec * params.cp_c_sec;
    let c_min = c_ref.min(c_sec);
    let c_max = c_ref.max(c_sec);
    let ua = params.alpha_c_sc * zeta * params.a_c_trnsf * params.l_c;
    let eps = effectiveness(ua / c_min, c_min / c_max)?;
    Ok(eps * c_min * (t_c - dist.t_c_sec_in))
}

/// Two-phase analogue of [`condenser_sc_heat`] (refrigerant side C = 0).
pub fn condenser_tp_heat(
    zeta: f64,
    t_c: f64,
    dist: &Disturbances,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    if zeta <= 0.0 {
        return Ok(0.0);
    }
    let c_sec = zeta * dist.mdot_c_sec * params.cp_c_sec;
    let ua = params.alpha_c_tp * zeta * params.a_c_trnsf * params.l_c;
    let eps = effectiveness(ua / c_sec, 0.0)?;
    Ok(eps * c_sec * (t_c - dist.t_c_sec_in))
}

/// Superheated-section transfer rate at inlet temperature `t_in` for a given
/// length fraction.
fn sh_heat(
    zeta: f64,
    t_in: f64,
    mdot: f64,
    cp_ref: f64,
    dist: &Disturbances,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    if zeta <= 0.0 {
        return Ok(0.0);
    }
    let c_ref = mdot * cp_ref;
    let c_sec = zeta * dist.mdot_c_sec * params.cp_c_sec;
    let c_min = c_ref.min(c_sec);
    let c_max = c_ref.max(c_sec);
    let ua = params.alpha_c_sh * zeta * params.a_c_trnsf * params.l_c;
    let eps = effectiveness(ua / c_min, c_min / c_max)?;
    Ok(eps * c_min * (t_in - dist.t_c_sec_in))
}

pub fn condenser_eval(
    p_c: f64,
    mdot: f64,
    h_c_out: f64,
    dist: &Disturbances,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<CondSolution, ComponentError> {
    if mdot <= 0.0 {
        return Err(ComponentError::Domain("mass flow must be positive".into()));
    }
    dist.validate()?;
    let sat = fluid.sat_props(p_c)?;
    let t_c = sat.t_sat;
    if h_c_out > sat.h_f + 1e-9 * sat.h_f.abs() {
        return Err(ComponentError::Domain(format!(
            "condenser outlet must be saturated or subcooled (h = {h_c_out:.4e} > h_f = {:.4e})",
            sat.h_f
        )));
    }
    if t_c <= dist.t_c_sec_in {
        return Err(ComponentError::Infeasible(format!(
            "condensing temperature {t_c:.2} K not above the secondary inlet {:.2} K",
            dist.t_c_sec_in
        )));
    }

    // subcooled length
    let q_sc = mdot * (sat.h_f - h_c_out);
    let zeta_c_sc = if q_sc <= 0.0 {
        0.0
    } else {
        let ftol = LOOP_FTOL_REL * q_sc.abs().max(1.0);
        let mut resid = |z: f64| -> Result<f64, NumError> {
            Ok(condenser_sc_heat(z, mdot, sat.cp_f, t_c, dist, params).map_err(to_num)? - q_sc)
        };
        solve_bracketed(&mut resid, 0.0, 1.0, 1e-13, ftol, LOOP_MAX_ITER)
            .map_err(|e| ComponentError::from_num(e, "condenser subcooled-length loop"))?
            .x
    };

    // two-phase length
    let q_tp = mdot * (sat.h_g - sat.h_f);
    let zeta_c_tp = {
        let ftol = LOOP_FTOL_REL * q_tp.abs().max(1.0);
        let mut resid =
            |z: f64| -> Result<f64, NumError> { Ok(condenser_tp_heat(z, t_c, dist, params).map_err(to_num)? - q_tp) };
        solve_bracketed(&mut resid, 0.0, 1.0, 1e-13, ftol, LOOP_MAX_ITER)
            .map_err(|e| ComponentError::from_num(e, "condenser two-phase-length loop"))?
            .x
    };

    if zeta_c_sc + zeta_c_tp > 1.0 {
        return Err(ComponentError::Infeasible(format!(
            "subcooled ({zeta_c_sc:.3}) and two-phase ({zeta_c_tp:.3}) sections exceed the condenser length"
        )));
    }
    let zeta_c_sh = 1.0 - zeta_c_sc - zeta_c_tp;

    // inlet enthalpy from the superheated remainder
    let cp_g = sat.cp_g;
    let ftol = LOOP_FTOL_REL * q_tp.abs().max(1.0);
    let t_of_h = |h: f64| t_c + (h - sat.h_g) / cp_g;
    let mut resid = |h: f64| -> Result<f64, NumError> {
        let q_ntu = sh_heat(zeta_c_sh, t_of_h(h), mdot, cp_g, dist, params).map_err(to_num)?;
        Ok(mdot * (h - sat.h_g) - q_ntu)
    };
    // the transfer side grows slower than ṁ(h' − h_g), so double the upper
    // bracket until the residual turns positive
    let mut h_hi = sat.h_g + 2.0e4;
    let h_cap = sat.h_g + cp_g * (425.0 - t_c);
    while resid(h_hi).map_err(from_num_inline)? < 0.0 {
        h_hi = sat.h_g + 2.0 * (h_hi - sat.h_g);
        if h_hi > h_cap {
            return Err(ComponentError::Infeasible(
                "superheated-section balance has no root inside the property window".into(),
            ));
        }
    }
    let h_c_in_prime = solve_bracketed(&mut resid, sat.h_g, h_hi, 1e-10, ftol, LOOP_MAX_ITER)
        .map_err(|e| ComponentError::from_num(e, "condenser inlet-enthalpy loop"))?
        .x;
    let q_sh = mdot * (h_c_in_prime - sat.h_g);

    // per-section secondary outlet temperatures (each section takes its
    // length share of the secondary flow) and the mixed outlet
    let c_sec_full = dist.mdot_c_sec * params.cp_c_sec;
    let t_out_sc = if zeta_c_sc > 0.0 {
        dist.t_c_sec_in + q_sc / (zeta_c_sc * c_sec_full)
    } else {
        dist.t_c_sec_in
    };
    let t_out_tp = if zeta_c_tp > 0.0 {
        dist.t_c_sec_in + q_tp / (zeta_c_tp * c_sec_full)
    } else {
        dist.t_c_sec_in
    };
    let t_out_sh = if zeta_c_sh > 0.0 {
        dist.t_c_sec_in + q_sh / (zeta_c_sh * c_sec_full)
    } else {
        dist.t_c_sec_in
    };
    let t_c_sec_out = zeta_c_sh * t_out_sh + zeta_c_tp * t_out_tp + zeta_c_sc * t_out_sc;

    let t_c_out = fluid.state_from_ph(p_c, h_c_out)?.t;
    Ok(CondSolution {
        h_c_in_prime,
        t_sc: t_c - t_c_out,
        t_c_sec_out,
        zeta_c_sh,
        zeta_c_tp,
        zeta_c_sc,
        q_sh,
        q_tp,
        q_sc,
    })
}

/// Superheated length fraction that transfers `mdot·(h_c_in − h_g)` given the
/// actual inlet enthalpy; used by the dynamic model where the inlet is known
/// and the superheated section adapts quasi-statically. The root is searched
/// in (0, zeta_budget].
pub fn condenser_sh_length(
    p_c: f64,
    mdot: f64,
    h_c_in: f64,
    zeta_budget: f64,
    dist: &Disturbances,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    let sat = fluid.sat_props(p_c)?;
    if h_c_in <= sat.h_g {
        return Err(ComponentError::Domain(format!(
            "condenser inlet must be superheated (h = {h_c_in:.4e} <= h_g = {:.4e})",
            sat.h_g
        )));
    }
    if zeta_budget <= 0.0 {
        return Err(ComponentError::Infeasible(
            "no condenser length available for the superheated section".into(),
        ));
    }
    let q_sh = mdot * (h_c_in - sat.h_g);
    let t_in = fluid.state_from_ph(p_c, h_c_in)?.t;
    let ftol = LOOP_FTOL_REL * q_sh.abs().max(1.0);
    let mut resid = |z: f64| -> Result<f64, NumError> {
        Ok(sh_heat(z, t_in, mdot, sat.cp_g, dist, params).map_err(to_num)? - q_sh)
    };
    if resid(zeta_budget).map_err(from_num_inline)? < 0.0 {
        return Err(ComponentError::Infeasible(format!(
            "superheated duty {q_sh:.2} W exceeds the available condenser length {zeta_budget:.3}"
        )));
    }
    solve_bracketed(&mut resid, 0.0, zeta_budget, 1e-13, ftol, LOOP_MAX_ITER)
        .map_err(|e| ComponentError::from_num(e, "condenser superheated-length solve"))
        .map(|r| r.x)
}

fn to_num(e: ComponentError) -> NumError {
    NumError::Eval(e.to_string())
}

fn from_num_inline(e: NumError) -> ComponentError {
    ComponentError::NoConvergence(e.to_string())
}
