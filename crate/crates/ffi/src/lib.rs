//! C ABI for the argrank ranking toolkit.
//!
//! Every fallible function returns an [`ArgrankStatus`] and writes its
//! result through an out-pointer. On failure the message is available from
//! [`argrank_last_error`] on the same thread until the next failing call.
//! Handles ([`ArgrankModel`], [`ArgrankIndex`]) are opaque; release them
//! with their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use argrank::corpus::{load_corpus, map_antique_grade};
use argrank::eval::ndcg_at_k;
use argrank::features::NUM_FEATURES;
use argrank::index::{build_index, InvertedIndex, Tokenizer};
use argrank::ltr::{compute_lambdas, Ensemble};
use argrank::scorers::{self, ScorerKind, ScorerParams};
use argrank::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgrankStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFound = 3,
    Parse = 4,
    Io = 5,
    Model = 6,
    Duplicate = 7,
    Transport = 8,
    Panic = 9,
}

/// A trained ranking model.
pub struct ArgrankModel(Ensemble);

/// An inverted index with default tokenization and scorer parameters.
pub struct ArgrankIndex(InvertedIndex);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ArgrankStatus, String);

fn status_of(e: &Error) -> ArgrankStatus {
    match e {
        Error::Domain(_) => ArgrankStatus::InvalidArgument,
        Error::NotFound(_) => ArgrankStatus::NotFound,
        Error::Duplicate(_) => ArgrankStatus::Duplicate,
        Error::Parse { .. } | Error::Json(_) => ArgrankStatus::Parse,
        Error::Transport { .. } => ArgrankStatus::Transport,
        Error::Model(_) => ArgrankStatus::Model,
        Error::Io { .. } => ArgrankStatus::Io,
        Error::Topic { source, .. } => status_of(source),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl Failure {
    fn null(what: &str) -> Self {
        Failure(ArgrankStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure(ArgrankStatus::InvalidArgument, message.into())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ArgrankStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ArgrankStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {message}"));
            ArgrankStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn argrank_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Length of every feature vector.
#[no_mangle]
pub extern "C" fn argrank_num_features() -> usize {
    NUM_FEATURES
}

/// Loads a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn argrank_model_load(path: *const c_char, out: *mut *mut ArgrankModel) -> ArgrankStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let model = Ensemble::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(ArgrankModel(model)));
        Ok(())
    })
}

/// Scores one feature vector of `len` values.
///
/// # Safety
/// `model` must come from [`argrank_model_load`], `features` must point to
/// `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn argrank_model_predict(
    model: *const ArgrankModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> ArgrankStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        let x = slice_arg(features, len, "features")?;
        *out_arg(out, "out")? = model.0.predict(x)?;
        Ok(())
    })
}

/// Writes the per-feature split gain into `out`, which must hold
/// `len >= argrank_num_features()` doubles.
///
/// # Safety
/// `model` must come from [`argrank_model_load`] and `out` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn argrank_model_feature_importance(
    model: *const ArgrankModel,
    out: *mut f64,
    len: usize,
) -> ArgrankStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        if len < NUM_FEATURES {
            return Err(Failure::invalid(format!("need room for {NUM_FEATURES} values, got {len}")));
        }
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let importance = model.0.feature_importance()?;
        std::slice::from_raw_parts_mut(out, NUM_FEATURES).copy_from_slice(&importance);
        Ok(())
    })
}

/// Number of trees, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or come from [`argrank_model_load`].
#[no_mangle]
pub unsafe extern "C" fn argrank_model_num_trees(model: *const ArgrankModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.trees.len())
}

/// # Safety
/// `model` must be NULL or come from [`argrank_model_load`], and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn argrank_model_free(model: *mut ArgrankModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Builds an index from a JSON-lines corpus (`doc_id`, `body`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn argrank_index_build_jsonl(path: *const c_char, out: *mut *mut ArgrankIndex) -> ArgrankStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let corpus = load_corpus(Path::new(path), &Tokenizer::default())?;
        let index = build_index(corpus.docs())?;
        *out = Box::into_raw(Box::new(ArgrankIndex(index)));
        Ok(())
    })
}

/// Loads an index written by `argrank index`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn argrank_index_load(path: *const c_char, out: *mut *mut ArgrankIndex) -> ArgrankStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        *out = Box::into_raw(Box::new(ArgrankIndex(InvertedIndex::load(Path::new(path))?)));
        Ok(())
    })
}

/// Number of indexed documents, or 0 for a NULL handle.
///
/// # Safety
/// `index` must be NULL or a live index handle.
#[no_mangle]
pub unsafe extern "C" fn argrank_index_num_docs(index: *const ArgrankIndex) -> u64 {
    index.as_ref().map_or(0, |i| i.0.stats().num_docs)
}

/// Scores `query` against one document with the named weighting model
/// (`bm25`, `tfidf`, `pl2`, `dph`, `hiemstra_lm`, `dirichlet_lm`, `dfic`).
///
/// # Safety
/// `index` must be a live index handle, the strings NUL-terminated and `out`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn argrank_index_score(
    index: *const ArgrankIndex,
    scorer: *const c_char,
    query: *const c_char,
    doc_id: *const c_char,
    out: *mut f64,
) -> ArgrankStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| Failure::null("index"))?;
        let kind: ScorerKind = str_arg(scorer, "scorer")?.parse()?;
        let query = Tokenizer::default().tokenize(str_arg(query, "query")?);
        let doc_id = str_arg(doc_id, "doc_id")?;
        *out_arg(out, "out")? = scorers::score(kind, &query, doc_id, &index.0, &ScorerParams::default())?;
        Ok(())
    })
}

/// # Safety
/// `index` must be NULL or a live index handle, and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn argrank_index_free(index: *mut ArgrankIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// NDCG@k of grades listed in ranked order.
///
/// # Safety
/// `grades` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn argrank_ndcg_at_k(grades: *const u32, len: usize, k: usize, out: *mut f64) -> ArgrankStatus {
    guard(|| {
        let grades = slice_arg(grades, len, "grades")?;
        *out_arg(out, "out")? = ndcg_at_k(grades, k)?;
        Ok(())
    })
}

/// Maps an Antique grade (1..=4) onto 0..=2.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn argrank_map_antique_grade(grade: i64, out: *mut u8) -> ArgrankStatus {
    guard(|| {
        *out_arg(out, "out")? = map_antique_grade(grade)?;
        Ok(())
    })
}

/// LambdaRank gradients and hessians for one query group.
///
/// # Safety
/// `scores` and `grades` must point to `len` values; `lambdas` and
/// `hessians` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn argrank_compute_lambdas(
    scores: *const f64,
    grades: *const u32,
    len: usize,
    k: usize,
    sigma: f64,
    lambdas: *mut f64,
    hessians: *mut f64,
) -> ArgrankStatus {
    guard(|| {
        let scores = slice_arg(scores, len, "scores")?;
        let grades = slice_arg(grades, len, "grades")?;
        if lambdas.is_null() || hessians.is_null() {
            return Err(Failure::null("lambdas or hessians"));
        }
        let pairs = compute_lambdas(scores, grades, k, sigma)?;
        let lambdas = std::slice::from_raw_parts_mut(lambdas, len);
        let hessians = std::slice::from_raw_parts_mut(hessians, len);
        for (i, p) in pairs.iter().enumerate() {
            lambdas[i] = p.lambda;
            hessians[i] = p.hessian;
        }
        Ok(())
    })
}
