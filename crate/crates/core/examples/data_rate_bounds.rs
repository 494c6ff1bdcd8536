// Necessary rate against the known-plant rate, and the smallest sufficient
// cell count for both quantizer families, for a scalar plant with
// `eps = 0.35`.

use quantstab::rates::{conservative_known_plant_rate, min_sufficient_n, necessary_rate};
use quantstab::{Family, UncertainPlant};

pub fn run_example() -> quantstab::Result<()> {
    let eps = 0.35;
    println!("lambda  R_nec   log2(l+e)  N_opt  N_uni");
    for lambda in [1.5, 2.0, 2.5, 3.0, 4.0, 5.0] {
        let plant = UncertainPlant::scalar(lambda, eps)?;
        let r_nec = necessary_rate(lambda, eps)?;
        let n_opt = min_sufficient_n(&plant, Family::Optimal, 256, 0.0)?;
        let n_uni = min_sufficient_n(&plant, Family::Uniform, 256, 0.0)?;
        println!(
            "{lambda:<7} {:<7.4} {:<10.4} {:<6} {}",
            r_nec.bits().unwrap_or(f64::INFINITY),
            conservative_known_plant_rate(lambda, eps),
            n_opt.map_or("-".into(), |n| n.to_string()),
            n_uni.map_or("-".into(), |n| n.to_string()),
        );
    }

    // without uncertainty the bound collapses to log2 lambda
    let exact = necessary_rate(3.0, 0.0)?.bits().unwrap();
    println!("eps = 0: R_nec(3) = {exact} = log2 3");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
