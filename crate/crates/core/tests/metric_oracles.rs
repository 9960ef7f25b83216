//! Metrics checked against deliberately naive reimplementations.

use approx::assert_abs_diff_eq;
use kanbun_core::metrics::{
    bleu_char, fleiss_kappa, kendall_tau, pearson, ribes_char, rouge_l_char, spearman, BleuConfig,
    OrderPair, Smoothing,
};
use kanbun_core::ReadingOrder;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;

use support::*;

const TOL: f64 = 1e-9;

#[test]
fn tau_matches_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let mut g: Vec<usize> = (1..=n).collect();
        let mut p = g.clone();
        g.shuffle(&mut rng);
        p.shuffle(&mut rng);
        let pair = OrderPair::new(
            ReadingOrder::from_permutation(g.clone()).unwrap(),
            ReadingOrder::from_permutation(p.clone()).unwrap(),
        )
        .unwrap();
        assert_eq!(kendall_tau(&pair), brute_tau(&g, &p), "{g:?} {p:?}");
    }
    let pair = OrderPair::new("12543".parse().unwrap(), "12345".parse().unwrap()).unwrap();
    assert_eq!(kendall_tau(&pair), 0.4);
}

fn small_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!['春', '眠', '暁', 'を', 'ず', '覚', 'え']),
        1..9,
    )
    .prop_map(|v| v.into_iter().collect())
}

fn nonconstant(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0i32..6, len)
        .prop_filter("needs variance", |v| v.iter().any(|x| *x != v[0]))
        .prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bleu_matches_brute_force(
        pairs in prop::collection::vec((small_text(), small_text()), 1..4),
        strict in any::<bool>(),
    ) {
        let smoothing = if strict { Smoothing::None } else { Smoothing::Exponential };
        let (c, r): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
        let cr: Vec<&str> = c.iter().map(String::as_str).collect();
        let rr: Vec<&str> = r.iter().map(String::as_str).collect();
        let got = bleu_char(&cr, &rr, BleuConfig { max_n: 4, smoothing }).unwrap();
        prop_assert!((got - brute_bleu(&c, &r, smoothing)).abs() <= TOL);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn rouge_matches_brute_force(c in small_text(), r in small_text()) {
        let got = rouge_l_char(&c, &r).unwrap();
        prop_assert!((got - brute_rouge(&c, &r)).abs() <= TOL);
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert_eq!(got, rouge_l_char(&r, &c).unwrap());
        prop_assert_eq!(got == 1.0, c == r);
    }

    #[test]
    fn ribes_is_bounded(c in small_text(), r in small_text()) {
        let got = ribes_char(&c, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn bleu_is_one_only_for_identical_short_texts(c in small_text(), r in small_text()) {
        let got = bleu_char(&[&c], &[&r], BleuConfig::default()).unwrap();
        if c == r {
            prop_assert_eq!(got, 1.0);
        } else if c.chars().count() <= 4 {
            prop_assert!(got < 1.0);
        }
    }

    #[test]
    fn pearson_matches_brute_force((x, y) in (2usize..12).prop_flat_map(|n| (nonconstant(n), nonconstant(n)))) {
        let got = pearson(&x, &y).unwrap();
        prop_assert!((got - brute_pearson(&x, &y)).abs() <= TOL);
        prop_assert!((-1.0..=1.0).contains(&got));
    }

    #[test]
    fn spearman_matches_ranked_pearson((x, y) in (2usize..12).prop_flat_map(|n| (nonconstant(n), nonconstant(n)))) {
        let got = spearman(&x, &y).unwrap();
        prop_assert_eq!(got, pearson(&brute_ranks(&x), &brute_ranks(&y)).unwrap());
        prop_assert!((got - brute_pearson(&brute_ranks(&x), &brute_ranks(&y))).abs() <= TOL);
    }

    #[test]
    fn fleiss_matches_brute_force(
        (raters, table) in (2usize..7, 1usize..10, 2usize..5).prop_flat_map(|(raters, items, cats)| {
            let row = prop::collection::vec(0..cats, raters).prop_map(move |votes| {
                let mut counts = vec![0usize; cats];
                for v in votes {
                    counts[v] += 1;
                }
                counts
            });
            (Just(raters), prop::collection::vec(row, items))
        })
    ) {
        prop_assert!(table.iter().all(|r| r.iter().sum::<usize>() == raters));
        match fleiss_kappa(&table) {
            Ok(k) => prop_assert!((k - brute_fleiss(&table)).abs() <= TOL),
            Err(_) => {
                let cats = table[0].len();
                let used = (0..cats).filter(|&j| table.iter().any(|r| r[j] > 0)).count();
                prop_assert_eq!(used, 1);
            }
        }
    }

    #[test]
    fn tau_of_self_and_reverse(perm in (2usize..12).prop_flat_map(|n| Just((1..=n).collect::<Vec<_>>()).prop_shuffle())) {
        let rev: Vec<usize> = perm.iter().rev().copied().collect();
        let p = ReadingOrder::from_permutation(perm.clone()).unwrap();
        let r = ReadingOrder::from_permutation(rev).unwrap();
        prop_assert_eq!(kendall_tau(&OrderPair::new(p.clone(), p.clone()).unwrap()), 1.0);
        prop_assert_eq!(kendall_tau(&OrderPair::new(p, r).unwrap()), -1.0);
    }
}

/// The 10-item, 14-rater table from the usual worked example of the
/// statistic; the value was computed with exact rationals (4211/20059).
#[test]
fn fleiss_worked_table() {
    let table = vec![
        vec![0, 0, 0, 0, 14],
        vec![0, 2, 6, 4, 2],
        vec![0, 0, 3, 5, 6],
        vec![0, 3, 9, 2, 0],
        vec![2, 2, 8, 1, 1],
        vec![7, 7, 0, 0, 0],
        vec![3, 2, 6, 3, 0],
        vec![2, 5, 3, 2, 2],
        vec![6, 5, 2, 1, 0],
        vec![0, 2, 2, 3, 7],
    ];
    assert_abs_diff_eq!(
        fleiss_kappa(&table).unwrap(),
        4211.0 / 20059.0,
        epsilon = 1e-12
    );
}
