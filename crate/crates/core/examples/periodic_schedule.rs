// Time-varying cell counts: alternating quantizers of different sizes can
// reach a lower average rate than the best fixed quantizer.

use quantstab::rates::{
    min_sufficient_n, necessary_rate, periodic_sufficient_test, relaxed_min_rate,
    search_periodic_schedule,
};
use quantstab::{Family, Schedule, UncertainPlant};

pub fn run_example() -> quantstab::Result<()> {
    let plant = UncertainPlant::scalar(3.0, 0.35)?;
    let r_nec = necessary_rate(3.0, 0.35)?.bits().unwrap();
    let n_static = min_sufficient_n(&plant, Family::Optimal, 64, 0.0)?.unwrap();
    println!(
        "R_nec = {r_nec:.6}, static N = {n_static} ({:.4} bits)",
        (n_static as f64).log2()
    );

    let two_eight = Schedule::new(vec![2, 8])?;
    let verdict = periodic_sufficient_test(&plant, &two_eight, Family::Optimal, 0.0)?;
    println!(
        "schedule (2, 8): rho = {:.5}, stable = {}, average {:.4} bits",
        verdict.rho,
        verdict.stable,
        two_eight.average_rate()
    );

    for m_max in [1, 2, 4, 8, 16] {
        if let Some(best) = search_periodic_schedule(&plant, m_max, 64, Family::Optimal, 0.0)? {
            println!(
                "m_max = {m_max:>2}: best {:?} at {:.4} bits",
                best.schedule.sizes(),
                best.avg_rate
            );
        }
    }

    let relaxed = relaxed_min_rate(3.0, 0.35, 4)?;
    println!("relaxed optimum per step: N = {:.6}", relaxed.point[0]);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
