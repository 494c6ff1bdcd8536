// Brute-force checks of the closed forms: grid search over quantizer
// boundaries, random probes around the relaxed minimizer, and exhaustive
// encode/decode.

use quantstab::oracle::{
    exhaustive_encode_decode, grid_optimal_boundaries, verify_equalization, verify_relaxation_kkt,
};
use quantstab::report::{canonical_cases, cmd_verify};
use quantstab::{optimal_boundaries, v_rate, QuantizerSpec, UncertainPlant};

pub fn run_example() -> quantstab::Result<()> {
    let grid = grid_optimal_boundaries(3.0, 0.5, 4, 1e-3)?;
    let closed = optimal_boundaries(3.0, 0.5, 4)?;
    println!(
        "N = 4: grid {:.6} at {:.5?}, closed form {:.6} at {:.5?}",
        grid.value,
        grid.h,
        v_rate(3.0, 0.5, 4)?,
        closed.boundaries()
    );

    let plant = UncertainPlant::scalar(3.0, 0.5)?;
    println!(
        "equalized: q*_8 {}, uniform {}",
        verify_equalization(&optimal_boundaries(3.0, 0.5, 8)?, &plant, 1e-12),
        verify_equalization(&QuantizerSpec::uniform(8)?, &plant, 1e-12)
    );

    let kkt = verify_relaxation_kkt(3.0, 0.35, 3, 1000, 1)?;
    println!("relaxation probes: {kkt:?}");
    println!(
        "encode/decode: {}",
        exhaustive_encode_decode(&closed, 10_000)?
    );

    let report = cmd_verify(&canonical_cases(0))?;
    println!(
        "suite: {} checks, {} failed",
        report.rows.len(),
        report.failures()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
