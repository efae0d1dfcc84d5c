mod oracle;

use madsm_core::distance::{BaseDistance, DistanceMode};
use madsm_core::mining::{epsilon_for_mean_support, mine, rebuild_node, MinerConfig, MiningResult};
use madsm_core::model::{Dataset, SubMatrixRef};
use madsm_core::synth::{gen_null, gen_planted, SynthConfig};

fn small(seed: u64, plant_rate: f64) -> Dataset {
    let cfg = SynthConfig {
        n_matrices: 10,
        n_pos: 5,
        min_len: 8,
        max_len: 11,
        agents: 3,
        width: 30.0,
        height: 20.0,
        motif_length: 6,
        motif_jitter: 0.2,
        plant_rate,
        seed,
        ..SynthConfig::default()
    };
    gen_planted(&cfg).unwrap().0
}

fn assert_matches_oracle(ds: &Dataset, r: &MiningResult, o: &oracle::OracleResult) {
    assert_eq!(r.delta_star, o.delta_star);
    assert_eq!(r.threshold, o.threshold);
    assert_eq!(r.discoveries.len(), o.discoveries.len());
    for (d, e) in r.discoveries.iter().zip(&o.discoveries) {
        assert_eq!((d.matrix, d.start, d.end), (e.matrix, e.start, e.end));
        assert_eq!(d.attack_id, ds.matrix(e.matrix).attack_id());
        assert!((d.p_value - e.p_value).abs() <= 1e-12);
        assert_eq!(
            (d.positives_supporting, d.support, d.neighborhood_size),
            (e.positives, e.support, e.neighborhood)
        );
    }
}

#[test]
fn engine_matches_exhaustive_oracle() {
    let mut with_discoveries = 0;
    for seed in 0..8 {
        let ds = small(seed, if seed % 2 == 0 { 1.0 } else { 0.0 });
        let mut eps = epsilon_for_mean_support(&ds, 4, DistanceMode::TimestepPointSet, BaseDistance::Euclidean, 5.0);
        if seed >= 4 {
            // tighter neighbourhoods leave room for discoveries on planted data
            eps /= 2.0;
        }
        let cfg = MinerConfig {
            min_length: 4,
            epsilon: eps,
            permutations: 100,
            seed,
            ..MinerConfig::default()
        };
        let pruned = mine(&ds, &cfg).unwrap();
        let full = mine(&ds, &MinerConfig { prune: false, ..cfg }).unwrap();
        let o = oracle::brute_force(&ds, 4, eps, 100, 0.05, seed);
        assert_matches_oracle(&ds, &pruned, &o);
        assert_matches_oracle(&ds, &full, &o);
        assert_eq!(full.counters.nodes_visited, o.nodes as u64);
        assert!(pruned.counters.nodes_visited <= full.counters.nodes_visited);
        with_discoveries += usize::from(!o.discoveries.is_empty());
    }
    assert!(with_discoveries > 0, "oracle comparison never exercised a discovery");
}

#[test]
fn exact_plants_share_a_positive_only_node() {
    for seed in 0..5 {
        let cfg = SynthConfig {
            plant_rate: 1.0,
            motif_jitter: 0.0,
            seed,
            ..SynthConfig::default()
        };
        let (ds, truth) = gen_planted(&cfg).unwrap();
        let mcfg = MinerConfig {
            epsilon: 0.0,
            min_length: cfg.motif_length,
            ..MinerConfig::default()
        };
        let w = &truth[0];
        let node = rebuild_node(&ds, &mcfg, SubMatrixRef::new(w.matrix, w.start, w.end)).unwrap();
        let positives: Vec<usize> = (0..ds.len()).filter(|&i| ds.matrix(i).label().is_positive()).collect();
        assert_eq!(node.support, positives);
    }
}

#[test]
fn null_generator_passes_validation_and_mines() {
    let ds = gen_null(&SynthConfig {
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let r = mine(
        &ds,
        &MinerConfig {
            permutations: 50,
            ..MinerConfig::default()
        },
    )
    .unwrap();
    assert!(r.delta_star < 0.05);
}
