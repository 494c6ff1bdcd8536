// Every walkthrough in examples/ must keep running.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(data_rate_bounds, "data_rate_bounds.rs");
example!(optimal_quantizer, "optimal_quantizer.rs");
example!(closed_loop, "closed_loop.rs");
example!(periodic_schedule, "periodic_schedule.rs");
example!(oracle_checks, "oracle_checks.rs");
example!(comparison_bounds, "comparison_bounds.rs");
example!(second_order_plant, "second_order_plant.rs");

#[test]
fn examples_run() {
    data_rate_bounds::run_example().unwrap();
    optimal_quantizer::run_example().unwrap();
    closed_loop::run_example().unwrap();
    periodic_schedule::run_example().unwrap();
    oracle_checks::run_example().unwrap();
    comparison_bounds::run_example().unwrap();
    second_order_plant::run_example().unwrap();
}
