//! Simulates the embedded chain at a fixed control and compares the mean
//! sojourn cost with the analytic steady state.

use samcmc::experiments::{ExperimentConfig, Setting, Study};
use samcmc::queue::{per_customer_cost, QueueKernel};
use samcmc::stats::batch_means_stderr;
use samcmc::{oracles, ControlParams, QueueState, QueueStreams};

fn main() -> samcmc::Result<()> {
    let n = 1_000_000;
    for setting in [Setting::Mm1, Setting::E2m1] {
        let model = ExperimentConfig::preset(setting, Study::Convergence).model()?;
        let theta = ControlParams::new(8.0, 4.0);
        let kernel = QueueKernel::new(&model);
        let mut streams = QueueStreams::from_seed(7);
        let mut x = QueueState::EMPTY;
        let (mut waits, mut cost, mut time) = (Vec::with_capacity(n), 0.0, 0.0);
        for _ in 0..n {
            let rec = kernel.step(&model, &theta, x, &mut streams);
            waits.push(x.w);
            cost += per_customer_cost(&model, &theta, x.w, rec.service_time, rec.interval);
            time += rec.interval;
            x = rec.next;
        }
        let mean_w = waits.iter().sum::<f64>() / n as f64;
        let se = batch_means_stderr(&waits, 50);
        let ss = oracles::steady_state(&model, &theta)?;
        println!("{setting}: E[W] simulated {mean_w:.4} +/- {se:.4}, analytic {:.4}", ss.mean_wait);
        println!("      cost rate simulated {:.4}, analytic {:.4}", cost / time, oracles::objective(&model, &theta)?);
    }
    Ok(())
}
