//! Dev probe: reduced-direction field across the psi-plane.
use refcycle::components::*;
use refcycle::controllability::*;
use refcycle::cycle::{close_cycle, DecisionTriple};
use refcycle::dynmodel::*;
use refcycle::fluid::*;

fn main() {
    let f = CorrelationFluid::default();
    let p = PlantParams::default();
    let d = Disturbances::default();
    let sat_e = f.sat_props(1.132e5).unwrap();
    let chi = DecisionTriple { h_e_out: sat_e.h_g + sat_e.cp_g * 9.3, h_c_out: 248.1e3, mdot: 5.93e-3 };
    let pt = close_cycle(&chi, &d, &f, &p, (1.13e5, 15.3e5)).unwrap();
    let (x0, _) = state_from_cycle(&pt);
    let model = CycleModel::new(&f, &p);
    let w0 = CondenserInflow { mdot: pt.chi.mdot, h_c_in: pt.h_c_in };
    println!("x0: P_c={:.4} bar zeta={:.4} h_sc={:.2} kJ", x0.p_c/1e5, x0.zeta_c_sc, x0.h_c_sc/1e3);

    for (dp, dz) in [(0.0, 0.0), (0.3, 0.0), (-0.3, 0.0), (0.0, 0.004), (0.0, -0.004), (0.3, 0.004), (0.5, 0.008)] {
        let x = CondenserState { p_c: x0.p_c + dp*1e5, zeta_c_sc: x0.zeta_c_sc + dz, h_c_sc: x0.h_c_sc };
        print!("offset ({dp:+.2} bar, {dz:+.4}): ");
        match equilibrium_inflow(&model, &x, &d, &w0) {
            Ok(weq) => {
                match reduce_holding(&model, &x, &weq, &d, HeldState::SubcooledEnthalpy) {
                    Ok(rd) => println!("weq=({:.3} g/s, {:.1} kJ) n=[{:.3e} {:.3e}; {:.3e} {:.3e}; {:.3e} {:.3e}] d=({:.3e},{:.3e}) slope={:.4}",
                        weq.mdot*1e3, weq.h_c_in/1e3,
                        rd.n[(0,0)], rd.n[(0,1)], rd.n[(1,0)], rd.n[(1,1)], rd.n[(2,0)], rd.n[(2,1)],
                        rd.d[0], rd.d[1], rd.slope),
                    Err(e) => println!("reduce failed: {e}"),
                }
            }
            Err(e) => println!("eq-inflow failed: {e}"),
        }
    }
}
