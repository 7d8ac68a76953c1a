//! Electronic expansion valve: an orifice law on the condenser-outlet
//! density and the pressure difference across the valve.

use super::{ComponentError, PlantParams};
use crate::fluid::PropertyProvider;

/// Opening [%] that passes `mdot` for the given pressures and condenser
/// outlet enthalpy.
pub fn valve_opening(
    p_e: f64,
    p_c: f64,
    mdot: f64,
    h_c_out: f64,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    if p_c <= p_e {
        return Err(ComponentError::Domain(format!(
            "valve requires P_c > P_e (got {p_c:.4e} <= {p_e:.4e})"
        )));
    }
    if mdot < 0.0 {
        return Err(ComponentError::Domain("mass flow must be nonnegative".into()));
    }
    let rho = fluid.state_from_ph(p_c, h_c_out)?.rho;
    Ok(mdot / (params.c_eev * (2.0 * rho * (p_c - p_e)).sqrt()))
}

/// Mass flow [kg/s] through the valve at opening `a_v` [%]; the inverse of
/// [`valve_opening`].
pub fn valve_flow(
    a_v: f64,
    p_e: f64,
    p_c: f64,
    h_c_out: f64,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    if p_c <= p_e {
        return Err(ComponentError::Domain(format!(
            "valve requires P_c > P_e (got {p_c:.4e} <= {p_e:.4e})"
        )));
    }
    if a_v < 0.0 {
        return Err(ComponentError::Domain("valve opening must be nonnegative".into()));
    }
    let rho = fluid.state_from_ph(p_c, h_c_out)?.rho;
    Ok(a_v * params.c_eev * (2.0 * rho * (p_c - p_e)).sqrt())
}
