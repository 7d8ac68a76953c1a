//! Variable-speed compressor: volumetric law with re-expansion term,
//! affine power law on the isentropic enthalpy rise, and a shell heat-loss
//! correction on the discharge enthalpy.

use super::{ComponentError, PlantParams};
use crate::fluid::PropertyProvider;

#[derive(Debug, Clone, Copy)]
pub struct CompressorOutput {
    /// Discharge enthalpy after the shell heat-loss correction [J/kg].
    pub h_c_in: f64,
    /// Speed [Hz] required to pass the given flow.
    pub n: f64,
    /// Electrical power [W].
    pub w_comp: f64,
    /// Isentropic discharge enthalpy [J/kg].
    pub h_c_in_is: f64,
    /// Isentropic discharge temperature [K].
    pub t_c_in_is: f64,
    /// Suction specific volume [m³/kg].
    pub v_e_out: f64,
}

fn denominator(
    p_e: f64,
    p_c: f64,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    let cr = p_c / p_e;
    if cr < 1.0 {
        return Err(ComponentError::Domain(format!(
            "compression ratio {cr:.4} below 1"
        )));
    }
    let sat_e = fluid.sat_props(p_e)?;
    let k = sat_e.cv_g / sat_e.cp_g;
    let denom = params.s_t - params.c * (cr.powf(k) - 1.0);
    if denom <= 0.0 {
        return Err(ComponentError::Domain(format!(
            "compressor displacement margin S_t - c(CR^k - 1) = {denom:.4e} non-positive at CR = {cr:.3}"
        )));
    }
    Ok(denom)
}

pub fn compressor_eval(
    p_e: f64,
    p_c: f64,
    mdot: f64,
    h_e_out: f64,
    t_surr: f64,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<CompressorOutput, ComponentError> {
    let suction = fluid.state_from_ph(p_e, h_e_out)?;
    let sat_e = fluid.sat_props(p_e)?;
    if h_e_out < sat_e.h_g - 1e-9 * sat_e.h_g.abs() {
        return Err(ComponentError::Domain(format!(
            "suction state must be superheated (h = {h_e_out:.4e} < h_g = {:.4e})",
            sat_e.h_g
        )));
    }
    let denom = denominator(p_e, p_c, fluid, params)?;
    let v_e_out = suction.v;
    let n = mdot * v_e_out / denom;

    let h_c_in_is = fluid.state_from_ps(p_c, suction.s)?.h;
    let sat_c = fluid.sat_props(p_c)?;
    let w_comp = params.a + params.b * mdot * (h_c_in_is - h_e_out);
    let t_c_in_is = sat_c.t_sat + (h_c_in_is - sat_c.h_g) / sat_c.cp_g;
    let h_c_in = if mdot > 0.0 {
        h_e_out + (w_comp - params.ua_comp * (t_c_in_is - t_surr)) / mdot
    } else {
        h_e_out
    };
    Ok(CompressorOutput {
        h_c_in,
        n,
        w_comp,
        h_c_in_is,
        t_c_in_is,
        v_e_out,
    })
}

/// Mass flow delivered at speed `n` [Hz]; inverse of the volumetric law in
/// [`compressor_eval`].
pub fn compressor_flow(
    n: f64,
    p_e: f64,
    p_c: f64,
    h_e_out: f64,
    fluid: &dyn PropertyProvider,
    params: &PlantParams,
) -> Result<f64, ComponentError> {
    let suction = fluid.state_from_ph(p_e, h_e_out)?;
    let denom = denominator(p_e, p_c, fluid, params)?;
    Ok(n * denom / suction.v)
}
