use std::collections::HashSet;

use abbrex::alignment::{
    alignment_features, enumerate_alignments, surface_score, AlignmentConfig, AlignmentModel,
};
use abbrex::candidates::{aggregate, CandidateOccurrence, CandidateSource, ScoredCandidate};
use abbrex::corpus::{split_sentences, tokenize, LanguageProfile, Span};
use abbrex::embeddings::{semantic_features, EmbeddingKind, EmbeddingModel};
use abbrex::eval::{pr_curve, split_folds, true_error_rate};
use abbrex::ground_truth::{check_pair, filter_pair, GroundTruth, PairRecord, PairSource};
use abbrex::scorer::{score, CombinerModel, FeatureMask, FeatureVector, ScoredPair, SemanticBlock};
use proptest::prelude::*;

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            "[A-Za-z]{1,8}",
            "[0-9]{1,3}",
            Just("(".to_string()),
            Just(")".to_string()),
            Just(".".to_string()),
            Just(",".to_string()),
            Just("-".to_string()),
            Just("?!".to_string()),
            Just("é".to_string()),
        ],
        0..30,
    )
    .prop_flat_map(|parts| {
        let n = parts.len();
        (Just(parts), prop::collection::vec(prop::bool::ANY, n))
    })
    .prop_map(|(parts, spaces)| {
        parts
            .iter()
            .zip(spaces)
            .map(|(p, sp)| if sp { format!("{p} ") } else { p.clone() })
            .collect()
    })
}

proptest! {
    #[test]
    fn token_offsets_and_retokenization(text in text_strategy()) {
        let en = LanguageProfile::english();
        let toks = tokenize(&text, &en);
        let mut last_end = 0;
        for t in toks.iter() {
            prop_assert_eq!(&text[t.char_start..t.char_end], t.surface.as_str());
            prop_assert!(t.char_start >= last_end);
            prop_assert!(!t.surface.is_empty());
            last_end = t.char_end;
        }
        let joined = toks.surfaces().join(" ");
        let again = tokenize(&joined, &en);
        prop_assert_eq!(again.surfaces(), toks.surfaces());
    }

    #[test]
    fn sentences_partition_tokens(text in text_strategy()) {
        let toks = tokenize(&text, &LanguageProfile::english());
        let spans = split_sentences(&toks);
        let mut next = 0;
        for Span { start, end } in spans {
            prop_assert_eq!(start, next);
            prop_assert!(end > start);
            next = end;
        }
        prop_assert_eq!(next, toks.len());
    }

    #[test]
    fn aggregation_ignores_order(
        occ in prop::collection::vec((0usize..3, 0usize..3), 0..20),
        window in prop::collection::vec((0usize..3, 0usize..3, 0.0f64..5.0), 0..10),
        seed in any::<u64>(),
    ) {
        let en = LanguageProfile::english();
        let sfs = ["ABC", "XY", "QRS"];
        let lfs = ["alpha beta", "Alpha Beta", "gamma delta"];
        let make_occ = |&(s, l): &(usize, usize)| CandidateOccurrence {
            doc_id: "d".into(),
            short_form: sfs[s].into(),
            long_form: lfs[l].split(' ').map(String::from).collect(),
            source: CandidateSource::SchwartzHearst,
            sentence: Span { start: 0, end: 1 },
        };
        let make_win = |&(s, l, v): &(usize, usize, f64)| ScoredCandidate {
            short_form: sfs[s].into(),
            long_form: en.normalize_long_form(lfs[l]),
            sh_score: 0,
            cs2_score: Some(v),
        };
        let a = aggregate(occ.iter().map(make_occ), window.iter().map(make_win).collect(), &en);
        let mut occ2 = occ.clone();
        let mut win2 = window.clone();
        let r = seed as usize;
        let (n_occ, n_win) = (occ2.len(), win2.len());
        if n_occ > 0 { occ2.rotate_left(r % n_occ); occ2.reverse(); }
        if n_win > 0 { win2.rotate_left(r % n_win); }
        let b = aggregate(occ2.iter().map(make_occ), win2.iter().map(make_win).collect(), &en);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cosine_symmetry_and_scale(
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 4),
        c in 0.01f64..100.0,
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
        let vectors: Vec<f64> = a.iter().chain(&b).copied().collect();
        let m = EmbeddingModel::new(EmbeddingKind::Cbow, 4, vec!["p".into(), "q".into()], vectors);
        let scaled: Vec<f64> = a.iter().map(|x| x * c).chain(b.iter().copied()).collect();
        let ms = EmbeddingModel::new(EmbeddingKind::Cbow, 4, vec!["p".into(), "q".into()], scaled);
        let pq = semantic_features(&m, "p", &["q"]).sim.unwrap();
        let qp = semantic_features(&m, "q", &["p"]).sim.unwrap();
        prop_assert!((pq - qp).abs() < 1e-12);
        prop_assert!((pq - semantic_features(&ms, "p", &["q"]).sim.unwrap()).abs() < 1e-12);
        // A one-token long-form is that token's own vector.
        prop_assert!((pq - m.cosine("p", "q").unwrap()).abs() < 1e-12);
    }

    #[test]
    fn alignments_are_valid_and_scored_by_their_maximum(
        sf in "[A-Ca-c]{1,4}",
        lf in prop::collection::vec("[a-d]{1,4}", 1..4),
        theta in prop::collection::vec(-2.0f64..2.0, 5),
    ) {
        let cfg = AlignmentConfig::default();
        let en = enumerate_alignments(&sf, &lf, &cfg);
        prop_assert!(!en.truncated);
        let sf_chars: Vec<char> = sf.chars().collect();
        let lf_chars: Vec<Vec<char>> = lf.iter().map(|t| t.chars().collect()).collect();
        let mut distinct = HashSet::new();
        for a in &en.alignments {
            prop_assert_eq!(a.mapping.len(), sf_chars.len());
            let used: Vec<_> = a.mapping.iter().flatten().collect();
            let unique: HashSet<_> = used.iter().collect();
            prop_assert_eq!(unique.len(), used.len());
            for (c, p) in sf_chars.iter().zip(&a.mapping) {
                if let Some(p) = p {
                    prop_assert!(lf_chars[p.token][p.ch].eq_ignore_ascii_case(c));
                }
            }
            prop_assert!(distinct.insert(a.mapping.clone()));
        }
        let model = AlignmentModel { theta: theta.clone().try_into().unwrap(), bias: 0.0 };
        let best = en
            .alignments
            .iter()
            .map(|a| model.dot(&alignment_features(a, &sf, &lf).to_array()))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(surface_score(&model, &sf, &lf, &cfg).score, best);
    }

    #[test]
    fn filtering_is_idempotent_under_normalization(
        sf in "[A-Z]{2,4}",
        lf in prop::collection::vec("[A-Za-z]{2,7}", 1..4),
    ) {
        let en = LanguageProfile::english();
        let raw = lf.join(" ");
        let once = en.normalize_long_form(&raw);
        prop_assert_eq!(en.normalize_long_form(&once), once.clone());
        let raw_verdict = filter_pair(&PairRecord::new(&sf, &raw, PairSource::Redirect), &en);
        let normalized_verdict = filter_pair(&PairRecord::new(&sf, &once, PairSource::Redirect), &en);
        prop_assert_eq!(&raw_verdict, &normalized_verdict);
        prop_assert_eq!(raw_verdict, check_pair(&sf, &once, &en));
    }

    #[test]
    fn precision_by_rank_matches_prefix_counts(
        labels in prop::collection::vec((0usize..4, prop::bool::ANY), 1..200),
        extra_gt in 0usize..3,
    ) {
        let mut gt = GroundTruth::default();
        let mut ranked = Vec::new();
        for (i, &(s, good)) in labels.iter().enumerate() {
            let sf = format!("S{s}");
            let lf = format!("l{i}");
            if good {
                gt.insert(sf.clone(), lf.clone(), PairSource::Redirect);
            }
            ranked.push(ScoredPair { short_form: sf, long_form: lf, score: -(i as f64) });
        }
        for j in 0..extra_gt {
            gt.insert("S0".into(), format!("missing{j}"), PairSource::Redirect);
        }
        prop_assume!(!gt.is_empty());
        let curve = pr_curve(&ranked, &gt).unwrap();
        let in_scope: Vec<&ScoredPair> = ranked.iter().filter(|p| gt.contains_short_form(&p.short_form)).collect();
        prop_assert_eq!(curve.precision_by_rank.len(), in_scope.len());
        for r in 0..in_scope.len() {
            let tp = in_scope[..=r].iter().filter(|p| gt.contains(&p.short_form, &p.long_form)).count();
            prop_assert!((curve.precision_by_rank[r] - tp as f64 / (r + 1) as f64).abs() < 1e-15);
        }
        prop_assert!((0.0..=1.0).contains(&curve.auc));
        for w in curve.points.windows(2) {
            prop_assert!(w[0].recall <= w[1].recall);
        }
    }

    #[test]
    fn ter_bounds(pp in 0.0f64..=1.0, c in 0usize..50, i in 0usize..50) {
        prop_assume!(c + i > 0);
        let ter = true_error_rate(pp, c, i).unwrap();
        prop_assert!(ter >= 0.0 && ter <= 1.0 - pp + 1e-15);
    }

    #[test]
    fn folds_cover_and_balance(n in 3usize..60, k in 2usize..5, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let sfs: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
        let a = split_folds(sfs.clone(), k, seed).unwrap();
        prop_assert_eq!(a.len(), n);
        let sizes: Vec<usize> = (0..k).map(|f| a.members(f).count()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert!(sfs.iter().all(|s| a.fold_of(s).is_some()));
        prop_assert_eq!(a, split_folds(sfs, k, seed).unwrap());
    }

    #[test]
    fn score_is_monotone_in_alignment(w in 0.0f64..5.0, lo in -10.0f64..10.0, delta in 0.0f64..10.0) {
        let mut m = CombinerModel::zero(FeatureMask::Alignment);
        m.weights[14] = w;
        let fv = |ss: f64| FeatureVector {
            sh_score: 1.0,
            cs2_score: 0.5,
            cs2_present: 1.0,
            cbow: SemanticBlock::default(),
            lsa: SemanticBlock::default(),
            log_cooc: 1.0,
            log_freq_sf: 1.0,
            log_freq_lf: 1.0,
            alignment_ss: ss,
        };
        prop_assert!(score(&m, &fv(lo + delta)) >= score(&m, &fv(lo)));
    }
}
