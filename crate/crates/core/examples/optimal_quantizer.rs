// Builds `q*_8` for `|a*| = 3, eps = 0.5` and compares its cell expansion
// rates with the uniform quantizer of the same size.

use quantstab::{expansion_profile, optimal_boundaries, v_rate, QuantizerSpec, UncertainPlant};

pub fn run_example() -> quantstab::Result<()> {
    let (lambda, eps, levels) = (3.0, 0.5, 8);
    let plant = UncertainPlant::scalar(lambda, eps)?;
    let q = optimal_boundaries(lambda, eps, levels)?;
    let u = QuantizerSpec::uniform(levels)?;

    println!("boundaries of q*_{levels}: {:?}", q.boundaries());
    let rates = |spec: &QuantizerSpec| expansion_profile(spec, &plant).last_row().to_vec();
    println!("rates, optimal: {:.4?}", rates(&q));
    println!("rates, uniform: {:.4?}", rates(&u));
    println!("v_rate = {:.6}", v_rate(lambda, eps, levels)?);

    // a few round trips through the encoder and decoder
    for x in [-0.5, -0.2, 0.0, 0.3309, 0.5] {
        let s = q.encode(x)?;
        let cell = q.decode(s, 1.0)?;
        println!("x = {x:>7}: symbol {s}, cell {cell}");
    }
    print!("{}", q.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
