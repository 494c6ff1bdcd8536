// A second-order plant `y_{k+1} = a_1 y_k + a_2 y_{k-1} + u_k` with
// `a_1 in [0.9, 1.1]` and `a_2 in [2.65, 3.35]`: the sufficient test through
// the companion matrix of maximal rates, then a seeded batch of runs.

use quantstab::closed_loop::run_batch;
use quantstab::rates::{h_matrix, min_sufficient_n, spectral_radius_detailed, DEFAULT_TOLERANCE};
use quantstab::{Family, QuantizerPlan, Schedule, UncertainPlant};

pub fn run_example() -> quantstab::Result<()> {
    let plant = UncertainPlant::new(vec![1.0, 3.0], vec![0.10, 0.35], vec![1.0, 1.0])?;
    for family in [Family::Optimal, Family::Uniform] {
        let n = min_sufficient_n(&plant, family, 256, 0.0)?.unwrap();
        let h = h_matrix(&plant, &family.quantizer(&plant, n)?)?;
        let est = spectral_radius_detailed(&h, DEFAULT_TOLERANCE)?;
        println!(
            "{:<8} N = {n:<3} w_bar = {:.4?} rho = {:.6} ({:?}, {} iterations)",
            family.name(),
            h.w_bar(),
            est.rho,
            est.method,
            est.iterations
        );
    }

    let n = min_sufficient_n(&plant, Family::Optimal, 256, 0.0)?.unwrap();
    let plan = QuantizerPlan::from_family(&plant, Family::Optimal, &Schedule::constant(n, 1)?)?;
    let batch = run_batch(&plant, &plan, 500, 50, 2024, 1e-6)?;
    println!("{batch:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
