use mpsched::queue_abstract::{
    simulate_facilities, ArrivalProcess, DispatchPolicy, FacilitySimulation, FacilitySpec,
    ServiceDistribution,
};
use mpsched::sim::SimTime;
use proptest::prelude::*;

fn policy() -> impl Strategy<Value = DispatchPolicy> {
    prop::sample::select(vec![
        DispatchPolicy::MinConditionalWait,
        DispatchPolicy::Jsq,
        DispatchPolicy::UniformRandom,
        DispatchPolicy::RoundRobin,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn packets_are_conserved(
        lambda in 0.0f64..40.0,
        mus in prop::collection::vec(1.0f64..20.0, 1..4),
        cap in prop::option::of(0usize..20),
        policy in policy(),
        seed in any::<u64>(),
    ) {
        let facs: Vec<FacilitySpec> = mus
            .iter()
            .map(|&m| match cap {
                Some(c) => FacilitySpec::exponential(m).with_capacity(c),
                None => FacilitySpec::exponential(m),
            })
            .collect();
        let st = simulate_facilities(ArrivalProcess::poisson(lambda), &facs, policy, SimTime::from_secs(50), seed).unwrap();
        let served: u64 = st.facilities.iter().map(|f| f.served).sum();
        let dropped: u64 = st.facilities.iter().map(|f| f.dropped).sum();
        let waiting: u64 = st.facilities.iter().map(|f| f.waiting).sum();
        let busy = st.facilities.iter().filter(|f| f.in_service).count() as u64;
        prop_assert_eq!(st.arrived, served + dropped + waiting + busy);
        if cap.is_none() {
            prop_assert_eq!(dropped, 0);
        }
        if let Some(c) = cap {
            prop_assert!(st.facilities.iter().all(|f| f.waiting <= c as u64));
        }
    }

    #[test]
    fn each_facility_serves_in_arrival_order(
        lambda in 1.0f64..30.0,
        mus in prop::collection::vec(1.0f64..20.0, 1..4),
        policy in policy(),
        seed in any::<u64>(),
    ) {
        let facs: Vec<FacilitySpec> = mus.iter().map(|&m| FacilitySpec::exponential(m)).collect();
        let st = FacilitySimulation::new(ArrivalProcess::poisson(lambda), facs, policy, SimTime::from_secs(30), seed)
            .record_trace(true)
            .run()
            .unwrap();
        let mut last = vec![None; mus.len()];
        for &(k, id) in &st.completions {
            let prev = last[k as usize].replace(id);
            prop_assert!(prev.is_none_or(|p| p < id), "facility {} served {} after {:?}", k, id, prev);
        }
    }
}

#[test]
fn mm1_mean_wait_matches_closed_form() {
    let (lambda, mu) = (0.5, 1.0);
    let st = simulate_facilities(
        ArrivalProcess::poisson(lambda),
        &[FacilitySpec::exponential(mu)],
        DispatchPolicy::Jsq,
        SimTime::from_secs(400_000),
        11,
    )
    .unwrap();
    let rho: f64 = lambda / mu;
    let wq = rho / (mu - lambda);
    let w = 1.0 / (mu - lambda);
    assert!((st.mean_wait() - wq).abs() / wq < 0.05, "Wq {}", st.mean_wait());
    assert!((st.mean_delay() - w).abs() / w < 0.05, "W {}", st.mean_delay());
}

#[test]
fn md1_mean_wait_matches_pollaczek_khinchine() {
    // M/D/1: Wq = rho / (2 mu (1 - rho))
    let (lambda, d) = (0.7, 1.0);
    let st = simulate_facilities(
        ArrivalProcess::poisson(lambda),
        &[FacilitySpec {
            service: ServiceDistribution::deterministic(d),
            capacity: None,
        }],
        DispatchPolicy::Jsq,
        SimTime::from_secs(300_000),
        4,
    )
    .unwrap();
    let rho = lambda * d;
    let want = rho * d / (2.0 * (1.0 - rho));
    assert!((st.mean_wait() - want).abs() / want < 0.05, "Wq {} vs {want}", st.mean_wait());
}

#[test]
fn jsq_beats_random_split_on_identical_servers() {
    let facs = [FacilitySpec::exponential(1.0), FacilitySpec::exponential(1.0)];
    let run = |p, seed| {
        simulate_facilities(ArrivalProcess::poisson(1.6), &facs, p, SimTime::from_secs(50_000), seed)
            .unwrap()
            .mean_delay()
    };
    for seed in 1..=3 {
        let jsq = run(DispatchPolicy::Jsq, seed);
        let rnd = run(DispatchPolicy::UniformRandom, seed);
        // Random split is two independent M/M/1 at rho = 0.8: W = 5.
        assert!((rnd - 5.0).abs() < 0.5, "random {rnd}");
        assert!(jsq < rnd, "seed {seed}: jsq {jsq} random {rnd}");
    }
}

#[test]
fn same_seed_same_policy_same_result() {
    let facs = [FacilitySpec::exponential(3.0), FacilitySpec::exponential(1.0)];
    let sim = FacilitySimulation::new(
        ArrivalProcess::poisson(3.0),
        facs.to_vec(),
        DispatchPolicy::MinConditionalWait,
        SimTime::from_secs(1000),
        9,
    )
    .record_trace(true);
    assert_eq!(sim.run().unwrap(), sim.run().unwrap());
}
