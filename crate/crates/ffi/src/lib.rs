//! C ABI over `textattr`.
//!
//! Models and vocabularies are opaque handles created by `ta_*_load` /
//! `ta_model_init` and released with the matching `*_free`. Every fallible
//! function returns a [`TaStatus`]; on failure a message is available from
//! [`ta_last_error`] on the same thread. Output buffers are caller-owned and
//! sized by the caller; a buffer that is too small yields
//! `TA_STATUS_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use textattr::attribution::{exact_shapley, integrated_gradients, kernel_shap, Attribution, Method};
use textattr::corpus::{tokenize, Document, Granularity, Partition, TokenizerConfig, Vocab};
use textattr::evaluation::{itr, jaccard_at_k, mutual_information, AnnotationRecord, LogBase};
use textattr::model::{init_model, randomize_head, Architecture, Classifier, TextClassifier};
use textattr::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    OutOfRange = 4,
    Singular = 5,
    CostGuard = 6,
    Mismatch = 7,
    Numerical = 8,
    Io = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Opaque trained or initialized classifier.
pub struct TaModel(TextClassifier);

/// Opaque vocabulary.
pub struct TaVocab(Vocab);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TaStatus {
    match e {
        Error::InvalidInput(_) => TaStatus::InvalidInput,
        Error::Config(_) => TaStatus::Config,
        Error::OutOfRange { .. } => TaStatus::OutOfRange,
        Error::Singular(_) => TaStatus::Singular,
        Error::CostGuard { .. } => TaStatus::CostGuard,
        Error::Mismatch(_) => TaStatus::Mismatch,
        Error::Numerical(_) => TaStatus::Numerical,
        Error::Io { .. } => TaStatus::Io,
        Error::Schema { .. } | Error::Json(_) | Error::Csv(_) | Error::Toml(_) => TaStatus::Parse,
        Error::Stage { source, .. } => status_of(source),
    }
}

enum Failure {
    Status(TaStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(TaStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, converting errors and panics into a status code and the
/// thread's last-error message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TaStatus::Ok,
        Ok(Err(Failure::Status(status, message))) => {
            set_error(message);
            status
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            TaStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out_slice<'a, T>(ptr: *mut T, cap: usize, need: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if cap < need {
        return Err(Failure::Status(
            TaStatus::BufferTooSmall,
            format!("{what} holds {cap} values but {need} are needed"),
        ));
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, need))
}

unsafe fn write<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::Status(TaStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn model_ref<'a>(model: *const TaModel) -> Result<&'a TextClassifier, Failure> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ta_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ta_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Freshly initialized model with parameters drawn from `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ta_model_init(
    vocab_size: usize,
    embed_dim: usize,
    hidden: usize,
    classes: usize,
    seed: u64,
    out: *mut *mut TaModel,
) -> TaStatus {
    guard(|| {
        let arch = Architecture {
            vocab_size,
            embed_dim,
            hidden,
            classes,
        };
        let model = init_model(arch, seed)?;
        write(out, Box::into_raw(Box::new(TaModel(model))), "out")
    })
}

/// Loads a JSON checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ta_model_load(path: *const c_char, out: *mut *mut TaModel) -> TaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let model = TextClassifier::load(Path::new(path))?;
        write(out, Box::into_raw(Box::new(TaModel(model))), "out")
    })
}

/// Writes a JSON checkpoint.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ta_model_save(model: *const TaModel, path: *const c_char) -> TaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let path = str_arg(path, "path")?;
        model.save(Path::new(path))?;
        Ok(())
    })
}

/// Copy of `model` with the classification head re-drawn from `seed`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ta_model_randomize_head(model: *const TaModel, seed: u64, out: *mut *mut TaModel) -> TaStatus {
    guard(|| {
        let model = model_ref(model)?;
        write(out, Box::into_raw(Box::new(TaModel(randomize_head(model, seed)))), "out")
    })
}

/// Releases a model handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ta_model_free(model: *mut TaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ta_model_num_classes(model: *const TaModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_classes())
}

/// Class scores for a token sequence; writes K scores and the predicted class.
///
/// # Safety
/// `tokens` must hold `len` ids, `scores` must hold `scores_cap` doubles and
/// `predicted` must be writable (or NULL to skip it).
#[no_mangle]
pub unsafe extern "C" fn ta_model_scores(
    model: *const TaModel,
    tokens: *const u32,
    len: usize,
    scores: *mut f64,
    scores_cap: usize,
    predicted: *mut usize,
) -> TaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let tokens = slice(tokens, len, "tokens")?;
        let prediction = model.predict(tokens)?;
        out_slice(scores, scores_cap, prediction.scores.len(), "scores")?.copy_from_slice(&prediction.scores);
        if !predicted.is_null() {
            predicted.write(prediction.class);
        }
        Ok(())
    })
}

/// Loads a vocabulary file written by the pipeline.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ta_vocab_load(path: *const c_char, out: *mut *mut TaVocab) -> TaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let vocab = Vocab::load(Path::new(path))?;
        write(out, Box::into_raw(Box::new(TaVocab(vocab))), "out")
    })
}

/// Releases a vocabulary handle. NULL is ignored.
///
/// # Safety
/// `vocab` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ta_vocab_free(vocab: *mut TaVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// Tokenizes UTF-8 text; `*out_len` receives the token count even when the
/// buffer is too small.
///
/// # Safety
/// `vocab` must be a live handle, `text` NUL-terminated, `tokens` writable
/// for `cap` ids and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn ta_tokenize(
    vocab: *const TaVocab,
    text: *const c_char,
    tokens: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> TaStatus {
    guard(|| {
        let vocab = vocab.as_ref().map(|v| &v.0).ok_or_else(|| null("vocab"))?;
        let text = str_arg(text, "text")?;
        let t = tokenize(text, vocab, TokenizerConfig::default())?;
        write(out_len, t.tokens.len(), "out_len")?;
        out_slice(tokens, cap, t.tokens.len(), "tokens")?.copy_from_slice(&t.tokens);
        Ok(())
    })
}

/// Attribution result header written next to the value buffer.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaAttribution {
    /// Score with every feature masked.
    pub phi0: f64,
    pub target_class: usize,
    pub num_features: usize,
}

/// Builds the partition from `group_ends` (exclusive end of each contiguous
/// group, last equal to `len`); NULL means one feature per token.
unsafe fn partition_arg(group_ends: *const usize, n_groups: usize, len: usize) -> Result<Partition, Failure> {
    if group_ends.is_null() {
        return Ok(Partition::tokens(len)?);
    }
    let ends = slice(group_ends, n_groups, "group_ends")?;
    let mut groups = Vec::with_capacity(ends.len());
    let mut start = 0;
    for &end in ends {
        if end <= start {
            return Err(Failure::Status(
                TaStatus::InvalidInput,
                "group_ends must be strictly increasing".into(),
            ));
        }
        groups.push(start..end);
        start = end;
    }
    Ok(Partition::new(Granularity::Sentence, groups, len)?)
}

unsafe fn attribution_inputs(
    tokens: *const u32,
    len: usize,
    group_ends: *const usize,
    n_groups: usize,
) -> Result<(Document, Partition), Failure> {
    let tokens = slice(tokens, len, "tokens")?.to_vec();
    if tokens.is_empty() {
        return Err(Failure::Status(TaStatus::InvalidInput, "empty token sequence".into()));
    }
    let partition = partition_arg(group_ends, n_groups, len)?;
    let doc = Document::from_token_ids("ffi", tokens, partition.groups().to_vec(), 0)?;
    Ok((doc, partition))
}

unsafe fn emit(a: &Attribution, values: *mut f64, cap: usize, header: *mut TaAttribution) -> Result<(), Failure> {
    write(
        header,
        TaAttribution {
            phi0: a.phi0,
            target_class: a.target_class,
            num_features: a.len(),
        },
        "header",
    )?;
    out_slice(values, cap, a.len(), "values")?.copy_from_slice(&a.values);
    Ok(())
}

/// KernelSHAP for the predicted class over the given groups (or tokens when
/// `group_ends` is NULL). `budget` 0 selects 2M + 2048.
///
/// # Safety
/// Pointers must be valid for the given lengths; `values` holds `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ta_kernel_shap(
    model: *const TaModel,
    tokens: *const u32,
    len: usize,
    group_ends: *const usize,
    n_groups: usize,
    budget: usize,
    seed: u64,
    values: *mut f64,
    cap: usize,
    header: *mut TaAttribution,
) -> TaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let (doc, partition) = attribution_inputs(tokens, len, group_ends, n_groups)?;
        let budget = if budget == 0 {
            textattr::attribution::default_budget(partition.len())
        } else {
            budget
        };
        let a = kernel_shap(model, &doc, &partition, budget, seed)?;
        emit(&a, values, cap, header)
    })
}

/// Exact Shapley values (at most 20 features).
///
/// # Safety
/// Pointers must be valid for the given lengths; `values` holds `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ta_exact_shapley(
    model: *const TaModel,
    tokens: *const u32,
    len: usize,
    group_ends: *const usize,
    n_groups: usize,
    values: *mut f64,
    cap: usize,
    header: *mut TaAttribution,
) -> TaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let (doc, partition) = attribution_inputs(tokens, len, group_ends, n_groups)?;
        let a = exact_shapley(model, &doc, &partition)?;
        emit(&a, values, cap, header)
    })
}

/// Token-level integrated gradients from the all-UNK baseline.
///
/// # Safety
/// `tokens` holds `len` ids; `values` holds `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ta_integrated_gradients(
    model: *const TaModel,
    tokens: *const u32,
    len: usize,
    steps: usize,
    values: *mut f64,
    cap: usize,
    header: *mut TaAttribution,
) -> TaStatus {
    guard(|| {
        let model = model_ref(model)?;
        let (doc, _) = attribution_inputs(tokens, len, std::ptr::null(), 0)?;
        let a = integrated_gradients(model, &doc, steps)?;
        emit(&a, values, cap, header)
    })
}

fn raw_attribution(values: &[f64]) -> Result<Attribution, Failure> {
    Ok(Attribution {
        doc_id: String::new(),
        partition: Partition::tokens(values.len())?,
        values: values.to_vec(),
        phi0: 0.0,
        target_class: 0,
        method: Method::ShapDirect,
        seed: 0,
        budget_or_steps: 0,
    })
}

/// Jaccard@K% between two attribution vectors of equal length `m`.
///
/// # Safety
/// `a` and `b` hold `m` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ta_jaccard_at_k(
    a: *const f64,
    b: *const f64,
    m: usize,
    k_percent: f64,
    out: *mut f64,
) -> TaStatus {
    guard(|| {
        let a = raw_attribution(slice(a, m, "a")?)?;
        let b = raw_attribution(slice(b, m, "b")?)?;
        write(out, jaccard_at_k(&a, &b, k_percent)?, "out")
    })
}

unsafe fn records(y: *const usize, y_h: *const usize, times: *const f64, n: usize) -> Result<Vec<AnnotationRecord>, Failure> {
    let y = slice(y, n, "y")?;
    let y_h = slice(y_h, n, "y_h")?;
    let times = if times.is_null() {
        vec![1.0; n]
    } else {
        slice(times, n, "times")?.to_vec()
    };
    Ok((0..n)
        .map(|i| AnnotationRecord {
            label: y[i],
            annotated: y_h[i],
            time_seconds: times[i],
        })
        .collect())
}

/// Mutual information between true and annotated labels, in bits.
///
/// # Safety
/// `y` and `y_h` hold `n` labels; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ta_mutual_information(y: *const usize, y_h: *const usize, n: usize, out: *mut f64) -> TaStatus {
    guard(|| {
        let r = records(y, y_h, std::ptr::null(), n)?;
        write(out, mutual_information(&r, LogBase::Bits)?, "out")
    })
}

/// Information transfer rate in bits per second.
///
/// # Safety
/// `y`, `y_h` and `times` hold `n` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ta_itr(
    y: *const usize,
    y_h: *const usize,
    times: *const f64,
    n: usize,
    out: *mut f64,
) -> TaStatus {
    guard(|| {
        if times.is_null() {
            return Err(null("times"));
        }
        let r = records(y, y_h, times, n)?;
        write(out, itr(&r, LogBase::Bits)?, "out")
    })
}
