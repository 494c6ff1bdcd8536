use proptest::prelude::*;

use quantstab::closed_loop::{run_closed_loop, sigma_envelope, QuantizerPlan};
use quantstab::oracle::perron_root_bisection;
use quantstab::rates::{
    h_matrix, necessary_rate, periodic_sufficient_test, search_periodic_schedule, spectral_radius,
    sufficient_test, DEFAULT_TOLERANCE,
};
use quantstab::{
    expansion_profile, minkowski_sum, optimal_boundaries, v_rate, Family, HMatrix, InitMode,
    Interval, QuantizerSpec, SampleMode, Schedule, UncertainPlant,
};

fn interval() -> impl Strategy<Value = Interval> {
    (-10.0f64..10.0, 0.0f64..10.0).prop_map(|(lo, w)| Interval::new(lo, lo + w).unwrap())
}

/// Scalar `(lambda, eps)` satisfying `lambda - eps > 1`.
fn scalar_params() -> impl Strategy<Value = (f64, f64)> {
    (1.3f64..6.0, 0.0f64..0.95).prop_map(|(lambda, frac)| (lambda, frac * (lambda - 1.05)))
}

/// Second-order plants with a stabilizable pole product.
fn second_order() -> impl Strategy<Value = UncertainPlant> {
    (
        -1.5f64..1.5,
        0.0f64..0.3,
        1.6f64..4.0,
        0.0f64..0.5,
        0.1f64..2.0,
        0.1f64..2.0,
    )
        .prop_map(|(a1, e1, a2, frac, y1, y0)| {
            let e2 = frac * (a2 - 1.1);
            UncertainPlant::new(vec![a1, a2], vec![e1, e2], vec![y1, y0]).unwrap()
        })
}

fn hull(a: &Interval, y: &Interval) -> (f64, f64) {
    let p = [
        a.lo() * y.lo(),
        a.lo() * y.hi(),
        a.hi() * y.lo(),
        a.hi() * y.hi(),
    ];
    (
        p.iter().copied().fold(f64::INFINITY, f64::min),
        p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_is_the_endpoint_hull(a in interval(), y in interval()) {
        let p = a.product(&y);
        prop_assert_eq!((p.lo(), p.hi()), hull(&a, &y));
    }

    #[test]
    fn product_commutes(a in interval(), y in interval()) {
        prop_assert_eq!(a.product(&y), y.product(&a));
    }

    #[test]
    fn product_is_inclusion_monotone(
        a in interval(), y in interval(),
        grow in (0.0f64..3.0, 0.0f64..3.0, 0.0f64..3.0, 0.0f64..3.0),
    ) {
        let a2 = Interval::new(a.lo() - grow.0, a.hi() + grow.1).unwrap();
        let y2 = Interval::new(y.lo() - grow.2, y.hi() + grow.3).unwrap();
        prop_assert!(a.product(&y).is_subset_of(&a2.product(&y2)));
    }

    #[test]
    fn minkowski_width_is_additive(items in prop::collection::vec(interval(), 1..8)) {
        let sum = minkowski_sum(&items).unwrap();
        let total: f64 = items.iter().map(Interval::width).sum();
        prop_assert!((sum.width() - total).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn optimal_is_strictly_better_than_any_perturbation(
        (lambda, eps) in scalar_params(),
        levels in 3usize..12,
        which in 0usize..64,
        shift in -0.5f64..0.5,
    ) {
        prop_assume!(eps > 1e-3);
        let q = optimal_boundaries(lambda, eps, levels).unwrap();
        let mut h = q.boundaries().to_vec();
        let interior = h.len() - 2;
        prop_assume!(interior > 0);
        let l = 1 + which % interior;
        let room = if shift > 0.0 { h[l + 1] - h[l] } else { h[l] - h[l - 1] };
        h[l] += shift * room;
        prop_assume!(shift.abs() > 1e-6);
        let g = QuantizerSpec::new(levels, h).unwrap();
        let p = UncertainPlant::scalar(lambda, eps).unwrap();
        let best = expansion_profile(&q, &p).last_max();
        prop_assert!(expansion_profile(&g, &p).last_max() > best);
    }

    #[test]
    fn zero_uncertainty_gives_uniform_cells(lambda in 1.01f64..8.0, levels in 2usize..40) {
        prop_assert_eq!(
            optimal_boundaries(lambda, 0.0, levels).unwrap(),
            QuantizerSpec::uniform(levels).unwrap()
        );
    }

    #[test]
    fn v_rate_increases_with_uncertainty(lambda in 1.6f64..6.0, a in 0.01f64..0.5, b in 0.01f64..0.5, half in 1usize..6) {
        let (e1, e2) = (a.min(b) * (lambda - 1.05), a.max(b) * (lambda - 1.05));
        prop_assume!(e2 - e1 > 1e-6);
        prop_assert!(v_rate(lambda, e2, 2 * half).unwrap() > v_rate(lambda, e1, 2 * half).unwrap());
        prop_assert!(v_rate(lambda, e2, 2 * half).unwrap() >= e2);
    }

    #[test]
    fn necessary_rate_is_right_continuous(lambda in 1.2f64..10.0) {
        let r = necessary_rate(lambda, 1e-9).unwrap().bits().unwrap();
        prop_assert!((r - lambda.log2()).abs() < 1e-6);
    }

    #[test]
    fn spectral_radius_is_the_characteristic_root(w in prop::collection::vec(0.0f64..3.0, 1..7)) {
        let rho = spectral_radius(&HMatrix::new(w.clone()).unwrap(), DEFAULT_TOLERANCE).unwrap();
        let root = perron_root_bisection(&w).unwrap();
        prop_assert!((rho - root).abs() <= 1e-9 * root.max(1e-12));
        let h = HMatrix::new(w).unwrap();
        prop_assert!(h.characteristic(rho).abs() <= 1e-8 * (1.0 + rho.powi(h.order() as i32)));
    }

    #[test]
    fn constant_schedule_matches_static_test(plant in second_order(), levels in 2usize..12, m in 1usize..5) {
        let q = Family::Optimal.quantizer(&plant, levels).unwrap();
        let single = sufficient_test(&plant, &q, 0.0).unwrap().rho;
        let sched = Schedule::constant(levels, m).unwrap();
        let periodic = periodic_sufficient_test(&plant, &sched, Family::Optimal, 0.0).unwrap().rho;
        prop_assert!((periodic - single.powi(m as i32)).abs() <= 1e-8 * single.powi(m as i32).max(1e-12));
    }

    #[test]
    fn schedule_search_is_bounded_and_monotone(lambda in 1.4f64..4.0, frac in 0.05f64..0.9) {
        let eps = frac * (lambda - 1.05).min(0.95);
        let plant = UncertainPlant::scalar(lambda, eps).unwrap();
        let nec = necessary_rate(lambda, eps).unwrap().bits().unwrap();
        let mut last = f64::INFINITY;
        for m_max in [1, 2, 4, 8] {
            if let Some(found) = search_periodic_schedule(&plant, m_max, 48, Family::Optimal, 0.0).unwrap() {
                prop_assert!(found.avg_rate > nec);
                prop_assert!(found.avg_rate <= last + 1e-12);
                last = found.avg_rate;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_loop_invariants_hold_on_scalar_plants(
        (lambda, eps) in scalar_params(),
        seed in any::<u64>(),
        extra in 0usize..4,
    ) {
        let plant = UncertainPlant::scalar(lambda, eps).unwrap();
        let n = quantstab::rates::min_sufficient_n(&plant, Family::Optimal, 512, 0.0).unwrap();
        prop_assume!(n.is_some());
        let plan = QuantizerPlan::fixed(optimal_boundaries(lambda, eps, n.unwrap() + extra).unwrap());
        let inst = plant.sample_instance(SampleMode::Uniform(seed)).unwrap();
        let traj = run_closed_loop(&plant, &inst, &plan, 300, InitMode::Uniform(seed ^ 1)).unwrap();
        prop_assert!(traj.invariants.all_hold(), "{:?}", traj.invariants);
        for s in &traj.steps {
            prop_assert!(s.y.abs() <= 0.5 * s.sigma * (1.0 + 1e-9));
        }
        // the static envelope from σ_1 dominates every later σ
        let h = h_matrix(&plant, &plan.slots()[0]).unwrap();
        let env = sigma_envelope(&h, &[traj.steps[1].sigma], traj.steps.len() - 2).unwrap();
        for (s, e) in traj.steps[2..].iter().zip(&env) {
            prop_assert!(s.sigma <= e * (1.0 + 1e-9));
        }
    }

    #[test]
    fn closed_loop_invariants_hold_on_second_order_plants(
        plant in second_order(),
        seed in any::<u64>(),
        vertex in 0usize..4,
        use_vertex in any::<bool>(),
    ) {
        let n = quantstab::rates::min_sufficient_n(&plant, Family::Optimal, 256, 0.0).unwrap();
        prop_assume!(n.is_some());
        let sched = Schedule::constant(n.unwrap(), 1).unwrap();
        let plan = QuantizerPlan::from_family(&plant, Family::Optimal, &sched).unwrap();
        let mode = if use_vertex { SampleMode::Vertex(vertex) } else { SampleMode::Uniform(seed) };
        let inst = plant.sample_instance(mode).unwrap();
        let traj = run_closed_loop(&plant, &inst, &plan, 300, InitMode::Uniform(seed)).unwrap();
        prop_assert!(traj.invariants.all_hold(), "{:?}", traj.invariants);
    }

    #[test]
    fn closed_loop_invariants_hold_under_periodic_schedules(
        (lambda, eps) in scalar_params(),
        sizes in prop::collection::vec(2usize..16, 1..5),
        seed in any::<u64>(),
    ) {
        let plant = UncertainPlant::scalar(lambda, eps).unwrap();
        let plan = QuantizerPlan::from_family(&plant, Family::Optimal, &Schedule::new(sizes).unwrap()).unwrap();
        let inst = plant.sample_instance(SampleMode::Uniform(seed)).unwrap();
        // stable or not, the enclosure invariants must hold
        let traj = run_closed_loop(&plant, &inst, &plan, 150, InitMode::Uniform(seed)).unwrap();
        prop_assert!(traj.invariants.all_hold(), "{:?}", traj.invariants);
    }

    #[test]
    fn runs_are_bit_identical(plant in second_order(), seed in any::<u64>()) {
        let plan = QuantizerPlan::from_family(&plant, Family::Uniform, &Schedule::new(vec![5, 9]).unwrap()).unwrap();
        let inst = plant.sample_instance(SampleMode::Uniform(seed)).unwrap();
        let a = run_closed_loop(&plant, &inst, &plan, 80, InitMode::Uniform(seed)).unwrap();
        let b = run_closed_loop(&plant, &inst, &plan, 80, InitMode::Uniform(seed)).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}
