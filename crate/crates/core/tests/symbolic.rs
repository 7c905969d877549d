use orbitmatch_core::symbolic::{
    bernoulli_renyi, cylinder_counts, empirical_renyi, perron_eigenvalue, renyi_entropy_markov, sample_markov,
};
use orbitmatch_core::{MarkovModel, SymbolSequence};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stochastic_row(a: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, a).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn positive_chain() -> impl Strategy<Value = MarkovModel> {
    (2usize..=4)
        .prop_flat_map(|a| prop::collection::vec(stochastic_row(a), a))
        .prop_map(|rows| MarkovModel::new(rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn renyi_is_nonincreasing_in_k(model in positive_chain()) {
        let a = model.alphabet() as f64;
        let mut prev = f64::INFINITY;
        for k in 2..=6 {
            let h = renyi_entropy_markov(&model, k).unwrap();
            prop_assert!(h >= -1e-12 && h <= a.ln() + 1e-12);
            prop_assert!(h <= prev + 1e-10);
            prev = h;
        }
    }

    #[test]
    fn identical_rows_reduce_to_bernoulli(p in stochastic_row(3), k in 2usize..=5) {
        let model = MarkovModel::new(vec![p.clone(); 3]).unwrap();
        let h = renyi_entropy_markov(&model, k).unwrap();
        prop_assert!((h - bernoulli_renyi(&p, k).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn perron_root_scales(model in positive_chain(), c in 0.1f64..10.0) {
        let m = model.entrywise_power(2);
        let scaled: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let l = perron_eigenvalue(&m).unwrap();
        prop_assert!((perron_eigenvalue(&scaled).unwrap() - c * l).abs() < 1e-9 * c.max(1.0));
    }

    #[test]
    fn cylinder_table_matches_counting(raw in prop::collection::vec(0u8..3, 1..200), len in 1usize..8) {
        let seq = SymbolSequence::new(raw.clone(), 3).unwrap();
        prop_assume!(len <= raw.len());
        let table = cylinder_counts(&seq, len).unwrap();
        prop_assert_eq!(table.total(), (raw.len() - len + 1) as u64);
        let mut naive = std::collections::BTreeMap::new();
        for w in raw.windows(len) {
            *naive.entry(w.to_vec()).or_insert(0u64) += 1;
        }
        prop_assert_eq!(table.entries(), naive.into_iter().collect::<Vec<_>>());
    }
}

#[test]
fn stochastic_rows_are_checked() {
    assert!(MarkovModel::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
    assert!(MarkovModel::new(vec![vec![1.0]]).is_err());
    assert!(MarkovModel::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]])
        .unwrap()
        .require_ergodic()
        .is_err());
    assert!(MarkovModel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]])
        .unwrap()
        .require_ergodic()
        .is_err());
}

#[test]
fn empirical_entropy_converges() {
    let p = [0.7, 0.3];
    let model = MarkovModel::bernoulli(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let seq = sample_markov(&model, 1 << 20, &mut rng).unwrap();
    let h = empirical_renyi(&cylinder_counts(&seq, 8).unwrap(), 2).unwrap();
    let exact = bernoulli_renyi(&p, 2).unwrap();
    assert!((h - exact).abs() / exact < 0.02, "{h} vs {exact}");
}

#[test]
fn markov_samples_follow_the_chain() {
    let model = MarkovModel::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seq = sample_markov(&model, 200_000, &mut rng).unwrap();
    let pairs = cylinder_counts(&seq, 2).unwrap();
    let pi = model.stationary().unwrap();
    assert!((pi[0] - 4.0 / 7.0).abs() < 1e-12);
    let from0 = (pairs.get(&[0, 0]) + pairs.get(&[0, 1])) as f64;
    assert!((pairs.get(&[0, 0]) as f64 / from0 - 0.7).abs() < 0.01);
    assert!((from0 / pairs.total() as f64 - 4.0 / 7.0).abs() < 0.01);
}
