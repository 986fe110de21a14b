mod common;

use bpo_core::fw::{solve_fw, SolverConfig};
use bpo_core::ingest::{
    build_instance, build_star_graph, classify_influencers, derive_rates, read_trace, CostScale,
};
use bpo_core::io::{read_instance, write_instance};
use bpo_core::model::{metrics, validate_instance, CampaignInstance};
use bpo_core::netgen::{direct_impressions, estimate_impressions, gen_ab, gen_er, FeedSimConfig};
use bpo_core::UtilitySpec;
use common::*;
use proptest::prelude::*;

const TRACE: &str = "\
# tweet ts user retweet
1 0 100 -1
2 10 100 -1
3 20 200 -1
4 30 300 1
5 40 400 1
6 50 400 3
7 60 500 2
8 70 300 -1
9 80 500 8
10 90 200 -1
";

#[test]
fn trace_to_solved_campaign() {
    let trace = read_trace(TRACE.as_bytes()).unwrap();
    assert!(trace.rejects.is_empty());
    let rates = derive_rates(&trace.records, 100.0).unwrap();
    assert_eq!(rates.users.ids, vec![100, 200, 300, 400, 500]);
    assert_eq!(rates.lambda, vec![2.0, 2.0, 1.0, 0.0, 0.0]);
    assert_eq!(rates.mu, vec![0.0, 0.0, 1.0, 2.0, 2.0]);

    let star = build_star_graph(&trace.records).unwrap();
    let edges: Vec<_> = star.graph.edges().collect();
    assert_eq!(edges, vec![(0, 2), (0, 3), (0, 4), (1, 3), (2, 4)]);
    let mut g = star.graph;
    g.set_rates(rates.lambda.clone(), rates.mu.clone()).unwrap();

    let tiers = classify_influencers(&g, &rates.lambda).unwrap();
    // candidate follower counts [1, 1, 3]: both deciles land on rank <= 2
    assert_eq!((tiers.nano_max, tiers.micro_max), (1, 1));
    use bpo_core::Tier::*;
    assert_eq!(
        tiers.tiers,
        vec![Macro, Nano, Nano, NonInfluencer, NonInfluencer]
    );

    let cfg = FeedSimConfig {
        snapshots: 300,
        seed: 9,
        ..FeedSimConfig::default()
    };
    let imp = estimate_impressions(&g, &cfg).unwrap();
    let inst = build_instance(&g, imp, 0, CostScale::Unit, 3.0).unwrap();
    assert!(validate_instance(&inst).is_valid());
    let rep = solve_fw(
        &inst,
        &UtilitySpec::Log { delta: 10.0 },
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(rep.spend <= 3.0 + 1e-9 && rep.objective > 0.0);
    let m = metrics(&inst, &rep.participation, 1.0, 1e-3, Some(&tiers.tiers)).unwrap();
    assert!(m.total_impressions > 0.0);
}

#[test]
fn synthetic_instances_are_valid() {
    for (g, name) in [
        (gen_ab(300, 4, 1).unwrap(), "ab"),
        (gen_er(300, 4, 1).unwrap(), "er"),
    ] {
        for imp in [
            direct_impressions(&g).unwrap(),
            estimate_impressions(
                &g,
                &FeedSimConfig {
                    snapshots: 20,
                    seed: 3,
                    ..Default::default()
                },
            )
            .unwrap(),
        ] {
            let inst = build_instance(&g, imp, 0, CostScale::Unit, 3.0).unwrap();
            let v = validate_instance(&inst);
            assert!(v.is_valid(), "{name}: {:?}", v.violations.first());
        }
    }
}

#[test]
fn feed_estimates_are_deterministic() {
    let g = gen_ab(150, 3, 5).unwrap();
    let cfg = FeedSimConfig {
        snapshots: 30,
        seed: 4,
        ..Default::default()
    };
    assert_eq!(
        estimate_impressions(&g, &cfg).unwrap(),
        estimate_impressions(&g, &cfg).unwrap()
    );
}

fn round_trip(inst: &CampaignInstance<f64>) -> CampaignInstance<f64> {
    let mut buf = Vec::new();
    write_instance(inst, &mut buf).unwrap();
    read_instance(buf.as_slice()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_round_trip(seed in any::<u64>(), n in 1usize..15) {
        let inst = random_instance(&mut rng(seed), n, 0.4);
        prop_assert_eq!(round_trip(&inst), inst);
    }
}
