//! Steady-state optima of the three shipped settings, and the three oracles
//! agreeing on an M/M/1 queue.

use samcmc::experiments::{ExperimentConfig, Setting, Study};
use samcmc::oracles::{self, gim1_mean_wait, mg1_mean_queue, mm1_summary};
use samcmc::ControlParams;

fn main() -> samcmc::Result<()> {
    for setting in Setting::ALL {
        let model = ExperimentConfig::preset(setting, Study::Convergence).model()?;
        let opt = oracles::optimum(&model)?;
        let ss = oracles::steady_state(&model, &opt.params)?;
        println!(
            "{setting:<5} mu* = {:.5}  p* = {:.5}  f* = {:.5}  rho = {:.4}",
            opt.params.mu, opt.params.p, opt.value, ss.rho
        );
    }

    // exponential service is both M/GI/1 with cs = 1 and GI/M/1 with k = 1
    let model = ExperimentConfig::preset(Setting::Mm1, Study::Convergence).model()?;
    let theta = ControlParams::new(9.0, 4.5);
    let a = mm1_summary(&model, &theta)?.mean_queue;
    let b = mg1_mean_queue(&model, &theta, 1.0)?.mean_queue;
    let c = gim1_mean_wait(&model, &theta)?.mean_queue;
    println!("\nE[Q] at (9, 4.5): closed form {a:.12}, PK {b:.12}, GI/M/1 root {c:.12}");
    Ok(())
}
