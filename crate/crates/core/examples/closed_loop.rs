// One closed-loop run of the scalar plant `|a*| = 3, eps = 0.5` with `q*_8`.
// The true coefficient is drawn from the parameter box; the controller only
// knows the box.

use quantstab::closed_loop::sigma_envelope;
use quantstab::rates::h_matrix;
use quantstab::{
    optimal_boundaries, run_closed_loop, InitMode, QuantizerPlan, SampleMode, UncertainPlant,
};

pub fn run_example() -> quantstab::Result<()> {
    let plant = UncertainPlant::scalar(3.0, 0.5)?;
    let inst = plant.sample_instance(SampleMode::Uniform(7))?;
    let q = optimal_boundaries(3.0, 0.5, 8)?;
    let h = h_matrix(&plant, &q)?;
    let traj = run_closed_loop(
        &plant,
        &inst,
        &QuantizerPlan::fixed(q),
        200,
        InitMode::Uniform(1),
    )?;

    println!("true a = {:.4}", inst.coefficients()[0]);
    println!("   k  y              sigma          symbol");
    for s in traj.steps.iter().step_by(10) {
        let symbol = s.symbol.map_or("-".into(), |v| v.to_string());
        println!("{:>4}  {:<14.6e} {:<14.6e} {symbol}", s.k, s.y, s.sigma);
    }
    println!("verdict: {}", traj.verdict.as_str());
    println!("invariant failures: {}", traj.invariants.failures());

    // σ_{k+1} is dominated by the envelope that starts from σ_1
    let env = sigma_envelope(&h, &[traj.steps[1].sigma], 5)?;
    let actual: Vec<f64> = traj.steps[2..7].iter().map(|s| s.sigma).collect();
    for (e, a) in env.iter().zip(&actual) {
        println!("envelope {e:.4e} >= sigma {a:.4e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
