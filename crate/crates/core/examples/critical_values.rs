//! Re-simulates the quantiles of the Brownian pivot and prints them next
//! to the built-in table.

use samcmc::inference::simulate_critical_values;
use samcmc::CriticalValueTable;

fn main() -> samcmc::Result<()> {
    let reference = CriticalValueTable::default();
    let levels: Vec<f64> = reference.entries().iter().map(|e| e.0).collect();
    let table = simulate_critical_values(1000, 50_000, &levels, 2024)?;
    println!("{:>6} {:>9} {:>9}", "level", "table", "simulated");
    for (&(l, q), &(_, s)) in reference.entries().iter().zip(table.entries()) {
        println!("{:>6.3} {q:>9.3} {s:>9.3}", l);
    }
    Ok(())
}
