mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use textattr::attribution::{exact_shapley, integrated_gradients, kernel_shap, Attribution};
use textattr::corpus::{
    make_partition, split_pieces, Document, Granularity, Partition, Sentencizer, TokenizerConfig, Vocab,
};
use textattr::evaluation::{infidelity, jaccard_at_k, top_k_percent};
use textattr::model::{init_model, randomize_head, Architecture, Checkpoint, Classifier, TextClassifier};
use textattr::util::median;

use common::*;

fn arch(seed: u64) -> Architecture {
    Architecture {
        vocab_size: 30,
        embed_dim: 2 + (seed % 5) as usize,
        hidden: 3 + (seed % 7) as usize,
        classes: 2 + (seed % 3) as usize,
    }
}

fn rescaled(a: &Attribution, scale: f64, shift: f64) -> Attribution {
    let mut b = a.clone();
    b.values = a.values.iter().map(|v| v * scale + shift).collect();
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_matches_hand_written_oracle(seed in 0u64..10_000, tokens in prop::collection::vec(0u32..30, 1..40)) {
        let model = scaled_model(arch(seed), seed, 2.0);
        let got = model.scores(&tokens).unwrap();
        let want = oracle_scores(&model, &tokens);
        prop_assert!(max_abs_diff(&got, &want) <= 1e-12);
    }

    #[test]
    fn kernel_shap_is_complete(seed in 0u64..10_000, t in 6usize..30, m in 2usize..10, extra in 0usize..600) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = m.min(t);
        let groups = random_groups(&mut rng, t, m);
        let document = doc("p", random_tokens(&mut rng, t, 30), groups);
        let partition = make_partition(&document, Granularity::Sentence).unwrap();
        let model = scaled_model(arch(seed), seed, 3.0);
        let budget = (m + 2 + extra).min(1 << m);
        let a = kernel_shap(&model, &document, &partition, budget, seed).unwrap();
        let scores = model.scores(&document.tokens).unwrap();
        prop_assert!((a.total() - scores[a.target_class]).abs() <= 1e-9);
        let empty = model.scores(&vec![textattr::corpus::UNK_ID; t]).unwrap();
        prop_assert!((a.phi0 - empty[a.target_class]).abs() <= 1e-12);
    }

    #[test]
    fn full_enumeration_is_seed_free(seed in 0u64..10_000, t in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let document = doc("e", random_tokens(&mut rng, t, 30), vec![0..t]);
        let partition = Partition::tokens(t).unwrap();
        let model = scaled_model(arch(seed), seed, 3.0);
        let a = kernel_shap(&model, &document, &partition, 1 << t, seed).unwrap();
        let b = kernel_shap(&model, &document, &partition, 1 << t, seed.wrapping_add(99)).unwrap();
        let exact = exact_shapley(&model, &document, &partition).unwrap();
        prop_assert!(max_abs_diff(&a.values, &exact.values) <= 1e-9);
        prop_assert_eq!(jaccard_at_k(&a, &b, 25.0).unwrap(), 1.0);
    }

    #[test]
    fn jaccard_is_symmetric_bounded_and_rank_based(
        a in prop::collection::vec(-5.0f64..5.0, 1..30),
        noise in prop::collection::vec(-1.0f64..1.0, 30),
        k in 1.0f64..100.0,
        scale in 0.1f64..10.0,
        shift in -3.0f64..3.0,
    ) {
        let m = a.len();
        let mk = |values: Vec<f64>| Attribution {
            doc_id: "j".into(),
            partition: Partition::tokens(m).unwrap(),
            values,
            phi0: 0.0,
            target_class: 0,
            method: textattr::attribution::Method::ShapDirect,
            seed: 0,
            budget_or_steps: 0,
        };
        let x = mk(a.clone());
        let y = mk(a.iter().zip(&noise).map(|(v, n)| v + n).collect());
        let j = jaccard_at_k(&x, &y, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard_at_k(&y, &x, k).unwrap());
        prop_assert_eq!(jaccard_at_k(&x, &x, k).unwrap(), 1.0);
        let j2 = jaccard_at_k(&rescaled(&x, scale, shift), &rescaled(&y, scale, shift), k).unwrap();
        prop_assert_eq!(j, j2);
        let set = top_k_percent(&x, k).unwrap();
        prop_assert_eq!(set.indices.len(), ((k * m as f64) / 100.0).ceil() as usize);
        prop_assert!(set.indices.iter().all(|&i| i < m));
    }

    #[test]
    fn infidelity_ignores_positive_rescaling(seed in 0u64..10_000, scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = 8 + (seed % 12) as usize;
        let document = doc("i", random_tokens(&mut rng, t, 30), vec![0..t]);
        let model = scaled_model(arch(seed), seed, 3.0);
        let ig = integrated_gradients(&model, &document, 30).unwrap();
        let a = infidelity(&model, &document, &ig).unwrap();
        let b = infidelity(&model, &document, &rescaled(&ig, scale, 0.0)).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.percent > 0.0 && a.percent <= 100.0);
    }

    #[test]
    fn partitions_cover_every_token(seed in 0u64..10_000, t in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 1 + (seed as usize % t);
        let groups = random_groups_or_whole(&mut rng, t, m);
        let document = doc("c", random_tokens(&mut rng, t, 30), groups);
        for g in [Granularity::Token, Granularity::Word, Granularity::Sentence] {
            let p = make_partition(&document, g).unwrap();
            let mut next = 0;
            for r in p.groups() {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start);
                next = r.end;
            }
            prop_assert_eq!(next, t);
            prop_assert_eq!(p.group_sizes().sum::<usize>(), t);
        }
    }

    #[test]
    fn sentencizer_is_deterministic_and_covering(words in prop::collection::vec("[A-Za-z]{1,8}[.!?,]?", 1..60)) {
        let text = words.join(" ");
        let pieces = split_pieces(&text, TokenizerConfig::default()).unwrap();
        let s = Sentencizer::default();
        let a = s.sentencize(&text, &pieces);
        prop_assert_eq!(&a, &s.sentencize(&text, &pieces));
        let mut next = 0;
        for r in &a {
            prop_assert_eq!(r.start, next);
            prop_assert!(r.end > r.start);
            next = r.end;
        }
        prop_assert_eq!(next, pieces.len());
        let vocab = Vocab::from_tokens(pieces.pieces.iter());
        let document = Document::new("s", &text, 0, &vocab, TokenizerConfig::default(), &s).unwrap();
        prop_assert_eq!(document.sentence_boundaries, a);
        for (span, piece) in document.token_spans.iter().zip(&document.pieces) {
            prop_assert_eq!(text[span.clone()].to_lowercase(), piece.as_str());
        }
    }
}

fn random_groups_or_whole(rng: &mut ChaCha8Rng, t: usize, m: usize) -> Vec<std::ops::Range<usize>> {
    if m <= 1 || t < 2 {
        vec![0..t]
    } else {
        random_groups(rng, t, m.min(t))
    }
}

#[test]
fn shap_error_shrinks_with_budget() {
    let arch = Architecture {
        vocab_size: 50,
        embed_dim: 6,
        hidden: 12,
        classes: 2,
    };
    let model = scaled_model(arch, 31, 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let document = doc("b", random_tokens(&mut rng, 28, 50), (0..14).map(|j| 2 * j..2 * j + 2).collect());
    let partition = make_partition(&document, Granularity::Sentence).unwrap();
    let exact = exact_shapley(&model, &document, &partition).unwrap();
    let medians: Vec<f64> = [32, 256, 2048, 8192]
        .iter()
        .map(|&budget| {
            let errs: Vec<f64> = (0..15)
                .map(|seed| {
                    let a = kernel_shap(&model, &document, &partition, budget, seed).unwrap();
                    max_abs_diff(&a.values, &exact.values)
                })
                .collect();
            median(&errs).unwrap()
        })
        .collect();
    for w in medians.windows(2) {
        assert!(w[1] < w[0], "{medians:?}");
    }
}

#[test]
fn ig_completeness_improves_with_steps() {
    let mut coarse = Vec::new();
    let mut fine = Vec::new();
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = scaled_model(arch(seed), 40 + seed, 3.0);
        let document = doc("g", random_tokens(&mut rng, 10, 30), vec![0..10]);
        let f = |a: &Attribution| (a.total() - model.scores(&document.tokens).unwrap()[a.target_class]).abs();
        coarse.push(f(&integrated_gradients(&model, &document, 4).unwrap()));
        fine.push(f(&integrated_gradients(&model, &document, 300).unwrap()));
    }
    assert!(median(&fine).unwrap() <= median(&coarse).unwrap());
    assert!(fine.iter().all(|e| *e <= 1e-3 * 10.0));
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let model = init_model(arch(3), 3).unwrap();
    let r = randomize_head(&model, 9);
    for m in [&model, &r] {
        let back = TextClassifier::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(&back, m);
        assert_eq!(Checkpoint::from(m).into_model().unwrap(), back);
    }
    assert_eq!(r.embedding(), model.embedding());
    assert_ne!(r.head()[0], model.head()[0]);
    assert_eq!(r, randomize_head(&model, 9));
    assert_eq!(r.head_seed(), Some(9));
}
