//! Weighting-model values on a three-document corpus, computed by
//! `tests/oracles/scorers_oracle.py`.

use argrank::corpus::Document;
use argrank::index::{build_index, InvertedIndex, Tokenizer};
use argrank::scorers::{score, score_all, ScorerKind, ScorerParams};
use argrank::Error;

use ScorerKind::*;

const ORDER: [ScorerKind; 7] = [Bm25, TfIdf, Pl2, Dph, HiemstraLm, DirichletLm, Dfic];

const GOLDEN: [(&str, &str, [f64; 7]); 7] = [
    ("apple", "d1", [0.646254990213, 0.572681707421, 0.794351007949, 0.112343215347, 0.302280871873, 0.001197844024, 1.0]),
    ("apple", "d2", [0.0, 0.0, 0.0, 0.0, 0.0, -0.000799680171, 0.0]),
    ("apple", "d3", [0.413603193736, 0.366516292750, 0.663988531151, 0.197772698199, 0.124297716678, -0.000399440788, 0.0]),
    ("banana", "d1", [0.470003629246, 0.416495787216, 0.714906109247, 0.359606514466, 0.234839591077, 0.000599101366, 0.493901720226]),
    ("cherry fig", "d3", [1.276732936387, 0.921034037198, 1.499058340112, 1.005836803053, 0.515464501495, 0.002194474724, 1.035197188006]),
    ("apple apple durian", "d3", [1.690336130123, 1.287550329947, 2.167819587834, 1.039088797924, 0.582964619780, 0.001195932570, 0.874469117916]),
    ("zzz", "d1", [0.0, 0.0, 0.0, 0.0, 0.0, -0.001199280575, 0.0]),
];

fn toy() -> InvertedIndex {
    let tk = Tokenizer::default();
    build_index(&[
        Document::new("d1", "apple banana apple", &tk),
        Document::new("d2", "banana cherry", &tk),
        Document::new("d3", "apple cherry durian fig", &tk),
    ])
    .unwrap()
}

fn query(q: &str) -> Vec<String> {
    Tokenizer::default().tokenize(q)
}

#[test]
fn golden_values() {
    let index = toy();
    let params = ScorerParams::default();
    for (q, doc, expected) in GOLDEN {
        for (kind, want) in ORDER.iter().zip(expected) {
            let got = score(*kind, &query(q), doc, &index, &params).unwrap();
            assert!((got - want).abs() < 1e-9, "{kind} {q:?} {doc}: {got} vs {want}");
        }
    }
}

#[test]
fn score_all_matches_single_scores_bitwise() {
    let index = toy();
    let params = ScorerParams::default();
    for (q, doc, _) in GOLDEN {
        let all = score_all(&query(q), doc, &index, &params).unwrap();
        for kind in ORDER {
            assert_eq!(all[&kind].to_bits(), score(kind, &query(q), doc, &index, &params).unwrap().to_bits());
        }
    }
}

#[test]
fn bm25_hand_value() {
    let got = score(Bm25, &query("apple"), "d1", &toy(), &ScorerParams::default()).unwrap();
    assert!((got - 0.6463).abs() < 1e-4);
}

#[test]
fn empty_document_scores_zero() {
    let tk = Tokenizer::default();
    let index = build_index(&[Document::new("full", "apple pie", &tk), Document::new("empty", "", &tk)]).unwrap();
    for kind in ORDER {
        assert_eq!(score(kind, &query("apple"), "empty", &index, &ScorerParams::default()).unwrap(), 0.0, "{kind}");
    }
}

#[test]
fn unknown_document_and_empty_collection() {
    let params = ScorerParams::default();
    assert!(matches!(score(Bm25, &query("apple"), "d9", &toy(), &params), Err(Error::NotFound(_))));
    let tk = Tokenizer::default();
    let blank = build_index(&[Document::new("e", "", &tk)]).unwrap();
    assert!(score(Bm25, &query("apple"), "e", &blank, &params).is_err());
}
