//! Controllability analysis of the reduced condenser dynamics.
//!
//! Linear route: with the virtual inputs (f_1, f_2), the model is
//! ẋ = B_c [f_1, f_2]ᵀ with a zero dynamic matrix, so the controllability
//! matrix collapses to [B_c, 0, 0] and its rank — at most two — is the
//! degree of controllability.
//!
//! Nonlinear route: express the dynamics in deviations ψ = x − x_ref.
//! Holding one state (by default the subcooled enthalpy, ψ̇₃ = 0) ties the
//! virtual inputs together, f_1 = −(n₃₂/n₃₁) f_2, and the remaining motion
//! is one-dimensional: ψ̇ = [d_1, d_2]ᵀ f_2 with d_i = n_i2 − (n₃₂/n₃₁) n_i1.
//! The controllable subspace through a point is then the line
//! ψ₂ = (d₂/d₁) ψ₁, and the slope statistics over the feasible input image
//! quantify how nearly state-independent that line is. The determinant
//! u = ψ₁ d₂ − ψ₂ d₁ measures the distance to the subspace; for constant d
//! it is exactly conserved under any input profile.

use nalgebra::{Matrix3x2, Vector2};
use thiserror::Error;

use crate::components::Disturbances;
use crate::dynmodel::{
    transform_underactuated, CondenserInflow, CondenserState, CycleModel, DynError,
};
use crate::numerics::roots::newton2;
use crate::numerics::NumError;

#[derive(Debug, Error)]
pub enum CtrlError {
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),
    #[error("equilibrium-input solve failed: {0}")]
    NoEquilibrium(String),
}

/// Which deviation coordinate the constrained input channel holds constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeldState {
    Pressure,
    SubcooledLength,
    SubcooledEnthalpy,
}

impl HeldState {
    fn row(self) -> usize {
        match self {
            HeldState::Pressure => 0,
            HeldState::SubcooledLength => 1,
            HeldState::SubcooledEnthalpy => 2,
        }
    }
}

/// Deviation-state scaling used for slopes: pressures in bar, lengths
/// dimensionless, enthalpies in kJ/kg.
pub const PSI_SCALE: [f64; 3] = [1e-5, 1.0, 1e-3];

#[derive(Debug, Clone)]
pub struct LinearControllability {
    /// Input matrix of the virtual-input form, rows scaled by [`PSI_SCALE`].
    pub b_c: Matrix3x2<f64>,
    pub singular_values: [f64; 2],
    pub rank: usize,
    /// Rank of [B, AB, A²B] with A = 0.
    pub controllability_rank: usize,
}

/// SVD rank of the scaled input matrix with the relative threshold
/// 1e-10 · σ_max; the controllability matrix of the zero-A form shares it.
pub fn linear_controllability(
    model: &CycleModel,
    x: &CondenserState,
    w_c: &CondenserInflow,
    dist: &Disturbances,
) -> Result<LinearControllability, CtrlError> {
    let n = normalized_directions(model, x, w_c, dist)?;
    let svd = n.svd(false, false);
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[1];
    let rank = [smax, smin]
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    // A = 0: the controllability matrix is [B, 0, 0]
    let mut ctrb = nalgebra::DMatrix::zeros(3, 6);
    ctrb.view_mut((0, 0), (3, 2)).copy_from(&n);
    let csvd = ctrb.svd(false, false);
    let cmax = csvd.singular_values.iter().cloned().fold(0.0, f64::max);
    let controllability_rank = csvd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * cmax)
        .count();
    Ok(LinearControllability {
        b_c: n,
        singular_values: [smax, smin],
        rank,
        controllability_rank,
    })
}

/// B_c with rows scaled into ψ units.
fn normalized_directions(
    model: &CycleModel,
    x: &CondenserState,
    w_c: &CondenserInflow,
    dist: &Disturbances,
) -> Result<Matrix3x2<f64>, CtrlError> {
    let m = model.condenser_matrices(x, w_c, dist)?;
    let (z_hat, _) = transform_underactuated(&m.z, &m.f, m.rho_tp / m.rho_sc);
    let inv = z_hat
        .try_inverse()
        .ok_or(DynError::SingularMatrix(f64::INFINITY))?;
    let mut n = Matrix3x2::zeros();
    for i in 0..3 {
        for j in 0..2 {
            n[(i, j)] = inv[(i, j)] * PSI_SCALE[i];
        }
    }
    Ok(n)
}

/// Dimension-reduced directions when one state is held.
#[derive(Debug, Clone)]
pub struct ReducedDirections {
    /// Scaled input matrix (n_ij of the deviation model).
    pub n: Matrix3x2<f64>,
    /// Free-motion direction of the remaining two states.
    pub d: Vector2<f64>,
    /// Virtual inputs at the candidate condenser inflow.
    pub f_virtual: Vector2<f64>,
    /// f_1 required to hold the chosen state for a unit f_2.
    pub f1_per_f2: f64,
    /// d₂/d₁ in ψ units.
    pub slope: f64,
}

/// Reduce the problem dimension by holding one deviation coordinate.
pub fn reduce_holding(
    model: &CycleModel,
    x: &CondenserState,
    w_c: &CondenserInflow,
    dist: &Disturbances,
    held: HeldState,
) -> Result<ReducedDirections, CtrlError> {
    let n = normalized_directions(model, x, w_c, dist)?;
    let m = model.condenser_matrices(x, w_c, dist)?;
    let (_, f_hat) = transform_underactuated(&m.z, &m.f, m.rho_tp / m.rho_sc);
    let k = held.row();
    let (nk1, nk2) = (n[(k, 0)], n[(k, 1)]);
    if nk1.abs() < 1e-14 {
        return Err(CtrlError::DegenerateDirection(format!(
            "n[{k}][0] = {nk1:.3e} too small to solve the held-state constraint"
        )));
    }
    let ratio = nk2 / nk1;
    let rows: [usize; 2] = match held {
        HeldState::Pressure => [1, 2],
        HeldState::SubcooledLength => [0, 2],
        HeldState::SubcooledEnthalpy => [0, 1],
    };
    let d = Vector2::new(
        n[(rows[0], 1)] - ratio * n[(rows[0], 0)],
        n[(rows[1], 1)] - ratio * n[(rows[1], 0)],
    );
    if d[0].abs() < 1e-300 {
        return Err(CtrlError::DegenerateDirection("d1 vanished".into()));
    }
    Ok(ReducedDirections {
        n,
        d,
        f_virtual: Vector2::new(f_hat[0], f_hat[1]),
        f1_per_f2: -ratio,
        slope: d[1] / d[0],
    })
}

/// Condenser inflow (ṁ, h_c_in) that makes `x` an equilibrium (both virtual
/// inputs zero).
pub fn equilibrium_inflow(
    model: &CycleModel,
    x: &CondenserState,
    dist: &Disturbances,
    guess: &CondenserInflow,
) -> Result<CondenserInflow, CtrlError> {
    let mut resid = |z: &[f64; 2]| -> Result<[f64; 2], NumError> {
        let w = CondenserInflow {
            mdot: z[0] / 1e3,
            h_c_in: z[1] * 1e3,
        };
        let m = model
            .condenser_matrices(x, &w, dist)
            .map_err(|e| NumError::Eval(e.to_string()))?;
        Ok([m.f[0] * 1e3, m.f[1] * 1e3])
    };
    let x0 = [guess.mdot * 1e3, guess.h_c_in / 1e3];
    let sat = model
        .fluid
        .sat_props(x.p_c)
        .map_err(DynError::from)?;
    let lo = [0.3, (sat.h_g + 2.0e3) / 1e3];
    let hi = [40.0, (sat.h_g + 80.0e3) / 1e3];
    let (z, _) = newton2(&mut resid, x0, [1.0, 1.0], lo, hi, 1e-8, 80)
        .map_err(|e| CtrlError::NoEquilibrium(e.to_string()))?;
    Ok(CondenserInflow {
        mdot: z[0] / 1e3,
        h_c_in: z[1] * 1e3,
    })
}

/// Feasible inflow box derived from the actuator limits by resolving the
/// full coupling at the four (N, A_v) corners around a state; falls back to
/// a proportional box around the equilibrium inflow when a corner fails.
pub fn inflow_box_from_actuators(
    model: &CycleModel,
    x: &CondenserState,
    dist: &Disturbances,
    n_limits: (f64, f64),
    a_v_limits: (f64, f64),
    fallback: &CondenserInflow,
) -> ((f64, f64), (f64, f64)) {
    let mut mdots = Vec::new();
    let mut h_ins = Vec::new();
    for n in [n_limits.0, n_limits.1] {
        for a_v in [a_v_limits.0, a_v_limits.1] {
            if let Ok(der) = model.resolve_coupling(x, &crate::dynmodel::Inputs { n, a_v }, dist) {
                mdots.push(der.mdot);
                h_ins.push(der.h_c_in);
            }
        }
    }
    if mdots.len() >= 2 {
        let lo = mdots.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mdots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hlo = h_ins.iter().cloned().fold(f64::INFINITY, f64::min);
        let hhi = h_ins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ((lo, hi), (hlo, hhi))
    } else {
        (
            (fallback.mdot * 0.8, fallback.mdot * 1.2),
            (fallback.h_c_in - 8.0e3, fallback.h_c_in + 8.0e3),
        )
    }
}

/// One exported phase-portrait segment.
#[derive(Debug, Clone, Copy)]
pub struct SegmentRow {
    pub start_id: usize,
    pub psi1: f64,
    pub psi2: f64,
    pub slope: f64,
    pub direction: i32,
}

#[derive(Debug, Clone)]
pub struct StartPointStudy {
    pub x: CondenserState,
    pub inflow_eq: CondenserInflow,
    pub mean_slope: f64,
    pub std_slope: f64,
    pub samples: usize,
    pub rejected: usize,
    pub segments: Vec<SegmentRow>,
}

#[derive(Debug, Clone)]
pub struct SlopeStudyConfig {
    pub grid_n: usize,
    pub held: HeldState,
    /// Half-extent of the exported segments along ψ₁ [bar].
    pub psi1_extent: f64,
    pub n_limits: (f64, f64),
    pub a_v_limits: (f64, f64),
}

impl Default for SlopeStudyConfig {
    fn default() -> Self {
        SlopeStudyConfig {
            grid_n: 15,
            held: HeldState::SubcooledEnthalpy,
            psi1_extent: 0.25,
            n_limits: (30.0, 50.0),
            a_v_limits: (10.0, 100.0),
        }
    }
}

/// Slope dispersion of the controllable subspace over the feasible inflow
/// grid, per start point. `reference` defines ψ = 0.
pub fn subspace_slope_study(
    model: &CycleModel,
    reference: &CondenserState,
    starts: &[CondenserState],
    dist: &Disturbances,
    cfg: &SlopeStudyConfig,
) -> Vec<Result<StartPointStudy, CtrlError>> {
    starts
        .iter()
        .enumerate()
        .map(|(id, x)| study_one(model, reference, id, x, dist, cfg))
        .collect()
}

fn study_one(
    model: &CycleModel,
    reference: &CondenserState,
    id: usize,
    x: &CondenserState,
    dist: &Disturbances,
    cfg: &SlopeStudyConfig,
) -> Result<StartPointStudy, CtrlError> {
    let guess = CondenserInflow {
        mdot: 5.0e-3,
        h_c_in: model
            .fluid
            .sat_props(x.p_c)
            .map_err(DynError::from)?
            .h_g
            + 25.0e3,
    };
    let inflow_eq = equilibrium_inflow(model, x, dist, &guess)?;
    let ((m_lo, m_hi), (h_lo, h_hi)) = inflow_box_from_actuators(
        model,
        x,
        dist,
        cfg.n_limits,
        cfg.a_v_limits,
        &inflow_eq,
    );
    let mut slopes = Vec::new();
    let mut rejected = 0usize;
    for i in 0..cfg.grid_n {
        let mdot = m_lo + (m_hi - m_lo) * i as f64 / (cfg.grid_n - 1) as f64;
        for j in 0..cfg.grid_n {
            let h_c_in = h_lo + (h_hi - h_lo) * j as f64 / (cfg.grid_n - 1) as f64;
            let w = CondenserInflow { mdot, h_c_in };
            match reduce_holding(model, x, &w, dist, cfg.held) {
                Ok(rd) => slopes.push(rd.slope),
                Err(_) => rejected += 1,
            }
        }
    }
    if slopes.len() < 2 {
        return Err(CtrlError::DegenerateDirection(format!(
            "start {id}: only {} feasible grid points",
            slopes.len()
        )));
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / slopes.len() as f64;
    let std = var.sqrt();
    let psi1 = (x.p_c - reference.p_c) * PSI_SCALE[0];
    let psi2 = (x.zeta_c_sc - reference.zeta_c_sc) * PSI_SCALE[1];
    let segments = vec![
        SegmentRow {
            start_id: id,
            psi1: psi1 - cfg.psi1_extent,
            psi2: psi2 - cfg.psi1_extent * mean,
            slope: mean,
            direction: -1,
        },
        SegmentRow {
            start_id: id,
            psi1: psi1 + cfg.psi1_extent,
            psi2: psi2 + cfg.psi1_extent * mean,
            slope: mean,
            direction: 1,
        },
    ];
    Ok(StartPointStudy {
        x: *x,
        inflow_eq,
        mean_slope: mean,
        std_slope: std,
        samples: slopes.len(),
        rejected,
        segments,
    })
}

/// Build equilibrium start points on the ψ₃ = 0 plane around a reference
/// state: offsets are (ψ₁ [bar], ψ₂ [-]) pairs; points without a feasible
/// equilibrium inflow are dropped.
pub fn equilibrium_start_points(
    model: &CycleModel,
    reference: &CondenserState,
    offsets: &[(f64, f64)],
    dist: &Disturbances,
) -> Vec<CondenserState> {
    let mut out = Vec::new();
    for &(dp_bar, dz) in offsets {
        let x = CondenserState {
            p_c: reference.p_c + dp_bar * 1e5,
            zeta_c_sc: reference.zeta_c_sc + dz,
            h_c_sc: reference.h_c_sc,
        };
        if x.zeta_c_sc <= 0.003 || x.zeta_c_sc >= 0.6 {
            continue;
        }
        let guess = CondenserInflow {
            mdot: 5.0e-3,
            h_c_in: match model.fluid.sat_props(x.p_c) {
                Ok(s) => s.h_g + 25.0e3,
                Err(_) => continue,
            },
        };
        if equilibrium_inflow(model, &x, dist, &guess).is_ok() {
            out.push(x);
        }
    }
    out
}

/// Inflow pair that realizes a commanded f_2 while holding the chosen state
/// (f_1 follows the constraint through the direction ratio).
pub fn inflow_for_virtual_input(
    model: &CycleModel,
    x: &CondenserState,
    dist: &Disturbances,
    f2_cmd: f64,
    held: HeldState,
    guess: &CondenserInflow,
) -> Result<(CondenserInflow, ReducedDirections), CtrlError> {
    let mut resid = |z: &[f64; 2]| -> Result<[f64; 2], NumError> {
        let w = CondenserInflow {
            mdot: z[0] / 1e3,
            h_c_in: z[1] * 1e3,
        };
        let rd = reduce_holding(model, x, &w, dist, held)
            .map_err(|e| NumError::Eval(e.to_string()))?;
        let f1_req = rd.f1_per_f2 * f2_cmd;
        Ok([
            (rd.f_virtual[0] - f1_req) * 1e3,
            (rd.f_virtual[1] - f2_cmd) * 1e3,
        ])
    };
    let sat = model
        .fluid
        .sat_props(x.p_c)
        .map_err(DynError::from)?;
    let lo = [0.3, (sat.h_g + 2.0e3) / 1e3];
    let hi = [40.0, (sat.h_g + 80.0e3) / 1e3];
    let x0 = [guess.mdot * 1e3, guess.h_c_in / 1e3];
    let (z, _) = newton2(&mut resid, x0, [1.0, 1.0], lo, hi, 1e-8, 80)
        .map_err(|e| CtrlError::NoEquilibrium(format!("virtual-input inversion: {e}")))?;
    let w = CondenserInflow {
        mdot: z[0] / 1e3,
        h_c_in: z[1] * 1e3,
    };
    let rd = reduce_holding(model, x, &w, dist, held)?;
    Ok((w, rd))
}

#[cfg(test)]
mod tests;
