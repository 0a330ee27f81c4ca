#![allow(dead_code)]

use std::path::{Path, PathBuf};

use argrank::features::{FeatureVector, LabeledInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random queries of `docs` documents with features uniform in [0, 1) and a
/// grade computed from the features.
pub fn synthetic(
    first_topic: u32,
    queries: u32,
    docs: usize,
    seed: u64,
    grade: impl Fn(&[f64; 8]) -> u8,
) -> Vec<LabeledInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for t in first_topic..first_topic + queries {
        for d in 0..docs {
            let mut v = [0.0; 8];
            for x in v.iter_mut() {
                *x = rng.gen::<f64>();
            }
            out.push(LabeledInstance {
                topic_id: t,
                doc_id: format!("q{t}-d{d:02}"),
                features: FeatureVector(v),
                grade: Some(grade(&v)),
            });
        }
    }
    out
}

/// Grade 0..=2 from the sum of features 0, 2 and 6.
pub fn sum_of_three(v: &[f64; 8]) -> u8 {
    let s = v[0] + v[2] + v[6];
    if s < 1.2 {
        0
    } else if s < 1.9 {
        1
    } else {
        2
    }
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

/// Copies the toy fixture (without outputs) into a fresh directory.
pub fn copy_fixture(to: &Path) {
    copy_dir(&fixture_dir(), to);
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name == "out" {
            continue;
        }
        let target = to.join(&name);
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Grade 0..=2: how many of features 0, 2 and 6 exceed one half, capped at
/// two. Axis-aligned, so trees can separate it exactly.
pub fn threshold_count(v: &[f64; 8]) -> u8 {
    let n = [v[0], v[2], v[6]].iter().filter(|x| **x > 0.5).count();
    n.min(2) as u8
}
