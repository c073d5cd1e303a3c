use beamsdr_core::formulations::{build_psi, build_wsp_sdr};
use beamsdr_core::harness::generate_instance;
use beamsdr_core::solver::SolveOptions;

#[test]
fn diag_raw_design() {
    let opts = SolveOptions::default();
    for seed in [1083u64, 1085, 1093, 1080] {
        let inst = generate_instance(4, 4, 0.1, 0.1, 8.0, seed);
        let wsp = build_wsp_sdr(&inst);
        let sol = wsp.solve(&opts);
        let design = wsp.design_from(&sol);
        println!("seed {seed}: status {:?} gap {:.2e} pres {:.2e}", sol.status, sol.rel_gap, sol.primal_residual);
        for i in 0..4 {
            let psi = build_psi(&inst, &design.w, i, design.lambda[i]);
            println!(
                "  user {i}: lambda {:14.8e}  psi_mineig {:12.5e}  w_mineig {:12.5e}",
                design.lambda[i],
                psi.min_eig(),
                design.w[i].min_eig()
            );
        }
        match design.validate(&inst) {
            Ok(()) => println!("  raw design validates"),
            Err(e) => println!("  raw design INVALID: {e}"),
        }
    }
}
