// The necessary rate next to two sufficient rates from earlier work on
// scalar plants with uncertain pole, at `eps = 0.1`.

use quantstab::rates::{comparison_bounds, necessary_rate};

pub fn run_example() -> quantstab::Result<()> {
    let eps = 0.1;
    println!("lambda  R_nec    R_suf'   R_suf");
    for i in 0..=5 {
        let lambda = 1.5 + 0.5 * i as f64;
        let nec = necessary_rate(lambda, eps)?.bits().unwrap();
        let c = comparison_bounds(lambda, eps);
        let show = |v: Option<f64>| v.map_or("undefined".into(), |v| format!("{v:.5}"));
        println!(
            "{lambda:<7} {nec:<8.5} {:<8} {}",
            show(c.r_suf_prime),
            show(c.r_suf)
        );
    }
    // the norm-bounded formula breaks down once eps (2 lambda + 2 eps + 1) >= 1
    println!("lambda = 5: R_suf {:?}", comparison_bounds(5.0, eps).r_suf);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
