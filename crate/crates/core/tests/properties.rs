use proptest::prelude::*;

use ranklab::decomposition::{dyadic_blocks, reconstruct_from_blocks};
use ranklab::entropy::{relative_entropy, SubsetDistribution};
use ranklab::tournament::{extract_relative_positions, fit, ArcSet, BipartitePair, Permutation, Tournament};

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|images| Permutation::new(images).unwrap())
}

fn probability_vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    })
}

proptest! {
    #[test]
    fn reversing_arcs_negates_fit(sigma in permutation(7), mask in any::<u64>()) {
        let arcs: Vec<_> = Tournament::transitive(7)
            .arcs()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, a)| a)
            .collect();
        let d = ArcSet::new((1..=7).collect(), arcs).unwrap();
        prop_assert_eq!(fit(&sigma, &d).unwrap(), -fit(&sigma, &d.reversed()).unwrap());
    }

    #[test]
    fn tournament_fit_matches_agreement(sigma in permutation(6), seed in any::<u64>()) {
        let t = Tournament::random(6, seed);
        let f = fit(&sigma, &t.to_arc_set()).unwrap();
        let agree = t.agreement(&sigma) as i64;
        prop_assert_eq!(f, 2 * agree - 15);
    }

    #[test]
    fn dyadic_blocks_determine_the_order(sigma in permutation(8)) {
        let blocks = dyadic_blocks(&sigma).unwrap();
        prop_assert_eq!(reconstruct_from_blocks(8, &blocks).unwrap(), sigma);
    }

    #[test]
    fn relative_positions_have_right_size(sigma in permutation(8)) {
        let pair = BipartitePair::from_slices(&[1, 4, 6], &[2, 7]).unwrap();
        let y = extract_relative_positions(&sigma, &pair).unwrap();
        prop_assert_eq!(y.len(), 2);
        prop_assert!(y.iter().all(|&s| (1..=5).contains(&s)));
    }

    #[test]
    fn relative_entropy_is_nonpositive(p in probability_vector(6), q in probability_vector(6)) {
        prop_assert!(relative_entropy(&p, &q).unwrap() <= 1e-12);
        prop_assert!(relative_entropy(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn subset_distribution_text_round_trips(weights in probability_vector(6)) {
        let subsets = ranklab::entropy::all_m_subsets(2);
        let dist = SubsetDistribution::new(2, subsets.into_iter().zip(weights)).unwrap();
        let back = SubsetDistribution::parse(&dist.to_text()).unwrap();
        prop_assert_eq!(back, dist);
    }
}
