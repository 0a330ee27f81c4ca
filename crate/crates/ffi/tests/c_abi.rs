use std::ffi::{CStr, CString};
use std::io::Write;
use std::process::Command;
use std::ptr;

use argrank::features::FeatureVector;
use argrank::ltr::{Ensemble, Node, RegressionTree, TrainConfig};
use argrank_ffi::*;

fn last_error() -> String {
    let p = argrank_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn sample_model(dir: &std::path::Path) -> std::path::PathBuf {
    let mut e = Ensemble::new(TrainConfig::gbrt(), 1.0);
    e.trees.push(
        RegressionTree::from_nodes(vec![
            Node::Split {
                feature: 4,
                threshold: 10.0,
                gain: 3.5,
                left: 1,
                right: 2,
            },
            Node::Leaf { value: -1.0 },
            Node::Leaf { value: 2.0 },
        ])
        .unwrap(),
    );
    let path = dir.join("model.json");
    e.save(&path).unwrap();
    path
}

#[test]
fn model_handle_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(sample_model(dir.path()).to_str().unwrap());
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { argrank_model_load(path.as_ptr(), &mut model) }, ArgrankStatus::Ok);
    assert_eq!(unsafe { argrank_model_num_trees(model) }, 1);

    let mut x = FeatureVector([0.0; 8]);
    x.0[4] = 20.0;
    let mut out = 0.0;
    let st = unsafe { argrank_model_predict(model, x.0.as_ptr(), 8, &mut out) };
    assert_eq!(st, ArgrankStatus::Ok);
    assert_eq!(out, 1.0 + 0.01 * 2.0);

    let st = unsafe { argrank_model_predict(model, x.0.as_ptr(), 7, &mut out) };
    assert_eq!(st, ArgrankStatus::InvalidArgument);
    assert!(last_error().contains("expected 8 features"));

    let mut imp = [f64::NAN; 8];
    assert_eq!(unsafe { argrank_model_feature_importance(model, imp.as_mut_ptr(), 8) }, ArgrankStatus::Ok);
    assert_eq!(imp, [0.0, 0.0, 0.0, 0.0, 3.5, 0.0, 0.0, 0.0]);
    let st = unsafe { argrank_model_feature_importance(model, imp.as_mut_ptr(), 3) };
    assert_eq!(st, ArgrankStatus::InvalidArgument);

    unsafe { argrank_model_free(model) };
    unsafe { argrank_model_free(ptr::null_mut()) };
}

#[test]
fn load_errors_map_to_status() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = ptr::null_mut();
    let missing = cstr(dir.path().join("nope.json").to_str().unwrap());
    assert_eq!(unsafe { argrank_model_load(missing.as_ptr(), &mut model) }, ArgrankStatus::Io);
    assert!(model.is_null());

    let truncated = dir.path().join("bad.json");
    let text = std::fs::read_to_string(sample_model(dir.path())).unwrap();
    std::fs::write(&truncated, &text[..text.len() / 3]).unwrap();
    let truncated = cstr(truncated.to_str().unwrap());
    assert_eq!(unsafe { argrank_model_load(truncated.as_ptr(), &mut model) }, ArgrankStatus::Model);
    assert!(model.is_null());

    assert_eq!(unsafe { argrank_model_load(ptr::null(), &mut model) }, ArgrankStatus::NullPointer);
    assert_eq!(unsafe { argrank_model_load(missing.as_ptr(), ptr::null_mut()) }, ArgrankStatus::NullPointer);
}

#[test]
fn index_scoring() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, r#"{{"doc_id":"d1","body":"apple banana apple"}}"#).unwrap();
    writeln!(f, r#"{{"doc_id":"d2","body":"banana cherry"}}"#).unwrap();
    writeln!(f, r#"{{"doc_id":"d3","body":"apple cherry durian fig"}}"#).unwrap();
    let path = cstr(f.path().to_str().unwrap());
    let mut index = ptr::null_mut();
    assert_eq!(unsafe { argrank_index_build_jsonl(path.as_ptr(), &mut index) }, ArgrankStatus::Ok);
    assert_eq!(unsafe { argrank_index_num_docs(index) }, 3);

    let mut out = 0.0;
    let (bm25, apple, d1) = (cstr("bm25"), cstr("Apple"), cstr("d1"));
    let st = unsafe { argrank_index_score(index, bm25.as_ptr(), apple.as_ptr(), d1.as_ptr(), &mut out) };
    assert_eq!(st, ArgrankStatus::Ok);
    assert!((out - 0.646254990213).abs() < 1e-9);

    let unknown = cstr("d9");
    let st = unsafe { argrank_index_score(index, bm25.as_ptr(), apple.as_ptr(), unknown.as_ptr(), &mut out) };
    assert_eq!(st, ArgrankStatus::NotFound);
    let bogus = cstr("okapi");
    let st = unsafe { argrank_index_score(index, bogus.as_ptr(), apple.as_ptr(), d1.as_ptr(), &mut out) };
    assert_eq!(st, ArgrankStatus::InvalidArgument);
    unsafe { argrank_index_free(index) };

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, r#"{{"doc_id":"d1","body":"x"}}"#).unwrap();
    writeln!(bad, "not json").unwrap();
    let bad_path = cstr(bad.path().to_str().unwrap());
    let mut index = ptr::null_mut();
    assert_eq!(unsafe { argrank_index_build_jsonl(bad_path.as_ptr(), &mut index) }, ArgrankStatus::Parse);
    assert!(last_error().contains(":2:"), "{}", last_error());
}

#[test]
fn metrics_and_lambdas() {
    let mut out = 0.0;
    let grades = [0u32, 1, 2];
    assert_eq!(unsafe { argrank_ndcg_at_k(grades.as_ptr(), 3, 3, &mut out) }, ArgrankStatus::Ok);
    assert!((out - 0.5869).abs() < 1e-4);
    assert_eq!(unsafe { argrank_ndcg_at_k(grades.as_ptr(), 3, 0, &mut out) }, ArgrankStatus::InvalidArgument);

    let mut g = 9u8;
    for (raw, mapped) in [(1, 0), (2, 1), (3, 1), (4, 2)] {
        assert_eq!(unsafe { argrank_map_antique_grade(raw, &mut g) }, ArgrankStatus::Ok);
        assert_eq!(g, mapped);
    }
    assert_eq!(unsafe { argrank_map_antique_grade(5, &mut g) }, ArgrankStatus::InvalidArgument);

    let scores = [0.0, 0.0];
    let grades = [2u32, 0];
    let (mut l, mut h) = ([0.0; 2], [0.0; 2]);
    let st = unsafe { argrank_compute_lambdas(scores.as_ptr(), grades.as_ptr(), 2, 2, 1.0, l.as_mut_ptr(), h.as_mut_ptr()) };
    assert_eq!(st, ArgrankStatus::Ok);
    assert!((l[0] - 0.1845).abs() < 1e-4);
    assert_eq!(l[0], -l[1]);
    assert!(h[0] > 0.0);
    assert_eq!(argrank_num_features(), 8);
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/argrank.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ ArgrankModel *m = 0; double x[8] = {{0}}; double y;\n\
             return argrank_model_predict(m, x, 8, &y) == ARGRANK_STATUS_OK; }}\n"
        ),
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
        .expect("run the C compiler");
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    assert!(lib_dir.join("libargrank_ffi.so").exists(), "shared library missing in {}", lib_dir.display());
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/argrank.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("ndcg.c");
    std::fs::write(
        &src,
        format!(
            r#"#include <stdio.h>
#include "{header}"
int main(void) {{
    uint32_t grades[3] = {{0, 1, 2}};
    double v = 0.0;
    if (argrank_ndcg_at_k(grades, 3, 3, &v) != ARGRANK_STATUS_OK) return 1;
    if (argrank_ndcg_at_k(grades, 3, 0, &v) != ARGRANK_STATUS_INVALID_ARGUMENT) return 2;
    if (argrank_last_error() == NULL) return 3;
    printf("%.4f\n", v);
    return 0;
}}
"#
        ),
    )
    .unwrap();
    let bin = dir.path().join("ndcg");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg(format!("-L{}", lib_dir.display()))
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-largrank_ffi")
        .status()
        .expect("run the C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.5869");
}
