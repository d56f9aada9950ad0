use mpsched::queue_abstract::{policy_jsq, policy_min_conditional_wait};
use mpsched::schedulers::{
    choose_jsq, choose_minsrtt, choose_queueaware, cold_start_estimate, update_service_estimate,
    update_srtt, SchedulerKind, SubflowView,
};
use mpsched::sim::SimTime;
use proptest::prelude::*;

/// Lowest index attaining the minimum of `scores`, by exhaustive scan with
/// exact rational comparison `a/b < c/d  <=>  a*d < c*b` on integers.
fn brute_min_ratio(num: &[u64], den: &[u64]) -> usize {
    let mut best = 0;
    for k in 1..num.len() {
        if u128::from(num[k]) * u128::from(den[best]) < u128::from(num[best]) * u128::from(den[k]) {
            best = k;
        }
    }
    best
}

fn view(index: usize, queue_len: usize, service: Option<f64>, srtt: Option<f64>) -> SubflowView {
    SubflowView {
        index,
        queue_len,
        srtt,
        service_estimate: service,
        cwnd_available: true,
        usable: true,
    }
}

#[test]
fn min_conditional_wait_exhaustive_against_integer_oracle() {
    // Service times in microseconds (500, 1000, 2000, 4000); mu = 1e6 / s.
    // n/mu = n*s/1e6, so comparing n*s on integers is exact.
    let svc_us = [500u64, 1000, 2000, 4000];
    for a in 0..=100u64 {
        for b in 0..=100u64 {
            for &s0 in &svc_us {
                for &s1 in &svc_us {
                    let want = brute_min_ratio(&[a * s0, b * s1], &[1, 1]);
                    let mu = [1e6 / s0 as f64, 1e6 / s1 as f64];
                    let got = policy_min_conditional_wait(&[a as usize, b as usize], &mu).unwrap();
                    assert_eq!(got, want, "n=({a},{b}) s=({s0},{s1})us");
                    let views = [
                        view(0, a as usize, Some(s0 as f64 * 1e-6), Some(0.01)),
                        view(1, b as usize, Some(s1 as f64 * 1e-6), Some(0.01)),
                    ];
                    assert_eq!(choose_queueaware(&views), Some(want), "n=({a},{b}) s=({s0},{s1})us");
                }
            }
        }
    }
}

#[test]
fn cold_start_rules() {
    let unsampled = [view(0, 3, None, None), view(1, 2, None, None)];
    assert_eq!(cold_start_estimate(&unsampled), 1.0);
    // subflow 1 unsampled -> uses subflow 0's estimate 2 ms: 3*2 vs 2*2
    let half = [view(0, 3, Some(0.002), None), view(1, 2, None, None)];
    assert_eq!(choose_queueaware(&half), Some(1));
    assert_eq!(cold_start_estimate(&half), 0.002);
}

fn rate_strategy() -> impl Strategy<Value = Vec<(usize, u64)>> {
    prop::collection::vec((0usize..200, 1u64..10_000), 1..6)
}

proptest! {
    #[test]
    fn min_conditional_wait_matches_oracle(fac in rate_strategy()) {
        // mu_k = 1 / s_k with s_k in integer microseconds.
        let n: Vec<usize> = fac.iter().map(|f| f.0).collect();
        let s: Vec<u64> = fac.iter().map(|f| f.1).collect();
        let mu: Vec<f64> = s.iter().map(|&x| 1e6 / x as f64).collect();
        let num: Vec<u64> = n.iter().zip(&s).map(|(&a, &b)| a as u64 * b).collect();
        let want = brute_min_ratio(&num, &vec![1; n.len()]);
        let got = policy_min_conditional_wait(&n, &mu).unwrap();
        // Rounding in 1e6/s can split an exact tie; near-ties differ by at
        // least 1 part in 2e6, far above float error.
        prop_assert_eq!(num[got], num[want]);
    }

    #[test]
    fn queueaware_matches_oracle(fac in rate_strategy()) {
        let num: Vec<u64> = fac.iter().map(|&(n, s)| n as u64 * s).collect();
        let views: Vec<SubflowView> = fac
            .iter()
            .enumerate()
            .map(|(k, &(n, s))| view(k, n, Some(s as f64 * 1e-6), Some(0.01)))
            .collect();
        let got = choose_queueaware(&views).unwrap();
        let want = brute_min_ratio(&num, &vec![1; num.len()]);
        prop_assert_eq!(num[got], num[want]);
    }

    #[test]
    fn scaling_all_rates_keeps_the_choice(fac in rate_strategy(), c in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 8.0])) {
        let n: Vec<usize> = fac.iter().map(|f| f.0).collect();
        let mu: Vec<f64> = fac.iter().map(|f| 1e6 / f.1 as f64).collect();
        let scaled: Vec<f64> = mu.iter().map(|m| m * c).collect();
        prop_assert_eq!(
            policy_min_conditional_wait(&n, &mu).unwrap(),
            policy_min_conditional_wait(&n, &scaled).unwrap()
        );
    }

    #[test]
    fn identical_rates_reduce_to_jsq(n in prop::collection::vec(0usize..500, 1..8), mu in 0.1f64..1e6) {
        let rates = vec![mu; n.len()];
        prop_assert_eq!(policy_min_conditional_wait(&n, &rates).unwrap(), policy_jsq(&n).unwrap());
    }

    #[test]
    fn policies_only_pick_eligible(
        state in prop::collection::vec((0usize..50, prop::option::of(1e-4f64..1e-1), any::<bool>(), any::<bool>()), 1..6),
        seed in any::<u64>(),
    ) {
        let views: Vec<SubflowView> = state
            .iter()
            .enumerate()
            .map(|(k, &(q, s, cwnd, usable))| SubflowView {
                index: k,
                queue_len: q,
                srtt: s,
                service_estimate: s,
                cwnd_available: cwnd,
                usable,
            })
            .collect();
        let any_eligible = views.iter().any(SubflowView::is_eligible);
        for kind in SchedulerKind::ALL {
            let mut sched = kind.build(seed);
            match sched.choose(&views, SimTime::ZERO) {
                Some(k) => prop_assert!(views[k].is_eligible(), "{} picked {}", kind, k),
                None => prop_assert!(!any_eligible, "{} declined with eligible views", kind),
            }
        }
    }

    #[test]
    fn ewma_stays_between_estimate_and_sample(prev in 1e-6f64..10.0, x in 1e-6f64..10.0, alpha in 0.01f64..0.99) {
        let s = update_service_estimate(Some(prev), x, alpha).unwrap();
        prop_assert!(s >= prev.min(x) && s <= prev.max(x));
    }

    #[test]
    fn srtt_stays_between_estimate_and_sample(prev in 1e-6f64..10.0, x in 1e-6f64..10.0) {
        let s = update_srtt(Some(prev), x, 0.125).unwrap();
        prop_assert!(s >= prev.min(x) && s <= prev.max(x));
    }
}

#[test]
fn ewma_exact_step() {
    assert_eq!(update_service_estimate(Some(1.0), 2.0, 0.8), Ok(1.2));
    assert_eq!(update_service_estimate(None, 2.0, 0.8), Ok(2.0));
}

#[test]
fn ewma_geometric_convergence() {
    let (s0, c, alpha) = (3.0f64, 0.5f64, 0.8f64);
    let mut s = s0;
    for n in 1..=300 {
        s = update_service_estimate(Some(s), c, alpha).unwrap();
        let closed = c + alpha.powi(n) * (s0 - c);
        assert!((s - closed).abs() <= 1e-12 * closed.abs(), "n={n}: {s} vs {closed}");
    }
}

#[test]
fn minsrtt_and_jsq_tie_to_lowest_index() {
    let v = [view(0, 5, None, Some(0.02)), view(1, 5, None, Some(0.02))];
    assert_eq!(choose_minsrtt(&v), Some(0));
    assert_eq!(choose_jsq(&v), Some(0));
}
