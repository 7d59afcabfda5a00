use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use textattr_ffi::*;

fn last_error() -> String {
    let p = ta_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model(seed: u64) -> *mut TaModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ta_model_init(20, 4, 6, 3, seed, &mut m) }, TaStatus::Ok);
    assert!(!m.is_null());
    m
}

const TOKENS: [u32; 9] = [2, 5, 7, 3, 9, 11, 4, 4, 19];
const ENDS: [usize; 3] = [3, 6, 9];

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ta_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn scores_and_save_load_round_trip() {
    let m = model(1);
    assert_eq!(unsafe { ta_model_num_classes(m) }, 3);
    let mut scores = [0.0; 3];
    let mut predicted = usize::MAX;
    let s = unsafe { ta_model_scores(m, TOKENS.as_ptr(), TOKENS.len(), scores.as_mut_ptr(), 3, &mut predicted) };
    assert_eq!(s, TaStatus::Ok);
    assert!(predicted < 3);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ta_model_save(m, path.as_ptr()) }, TaStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { ta_model_load(path.as_ptr(), &mut loaded) }, TaStatus::Ok);
    let mut again = [0.0; 3];
    let mut p2 = 0;
    unsafe { ta_model_scores(loaded, TOKENS.as_ptr(), TOKENS.len(), again.as_mut_ptr(), 3, &mut p2) };
    assert_eq!(scores, again);
    assert_eq!(predicted, p2);

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ta_model_randomize_head(m, 7, &mut r) }, TaStatus::Ok);
    unsafe { ta_model_scores(r, TOKENS.as_ptr(), TOKENS.len(), again.as_mut_ptr(), 3, &mut p2) };
    assert_ne!(scores, again);
    unsafe {
        ta_model_free(m);
        ta_model_free(loaded);
        ta_model_free(r);
        ta_model_free(ptr::null_mut());
    }
}

#[test]
fn null_and_small_buffers_are_reported() {
    let m = model(2);
    let mut scores = [0.0; 3];
    let mut predicted = 0;
    let s = unsafe { ta_model_scores(ptr::null(), TOKENS.as_ptr(), 9, scores.as_mut_ptr(), 3, &mut predicted) };
    assert_eq!(s, TaStatus::NullPointer);
    assert!(last_error().contains("model"));

    let s = unsafe { ta_model_scores(m, TOKENS.as_ptr(), 9, scores.as_mut_ptr(), 2, &mut predicted) };
    assert_eq!(s, TaStatus::BufferTooSmall);
    assert!(last_error().contains("2"));

    let bad = [2u32, 500];
    let s = unsafe { ta_model_scores(m, bad.as_ptr(), 2, scores.as_mut_ptr(), 3, &mut predicted) };
    assert_ne!(s, TaStatus::Ok);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ta_model_init(1, 4, 6, 3, 0, &mut out) }, TaStatus::Config);
    assert!(out.is_null());

    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { ta_model_load(missing.as_ptr(), &mut out) }, TaStatus::Io);
    unsafe { ta_model_free(m) };
}

#[test]
fn kernel_shap_with_full_budget_matches_exact() {
    let m = model(3);
    let mut shap = [0.0; 3];
    let mut exact = [0.0; 3];
    let mut hs = TaAttribution::default();
    let mut he = TaAttribution::default();
    let s = unsafe {
        ta_kernel_shap(m, TOKENS.as_ptr(), 9, ENDS.as_ptr(), 3, 8, 5, shap.as_mut_ptr(), 3, &mut hs)
    };
    assert_eq!(s, TaStatus::Ok);
    let s = unsafe { ta_exact_shapley(m, TOKENS.as_ptr(), 9, ENDS.as_ptr(), 3, exact.as_mut_ptr(), 3, &mut he) };
    assert_eq!(s, TaStatus::Ok);
    assert_eq!(hs.num_features, 3);
    assert_eq!(hs.target_class, he.target_class);
    for (a, b) in shap.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-9);
    }

    let mut scores = [0.0; 3];
    let mut predicted = 0;
    unsafe { ta_model_scores(m, TOKENS.as_ptr(), 9, scores.as_mut_ptr(), 3, &mut predicted) };
    let total = hs.phi0 + shap.iter().sum::<f64>();
    assert!((total - scores[predicted]).abs() < 1e-9);

    let mut tokens_phi = [0.0; 9];
    let s = unsafe {
        ta_kernel_shap(m, TOKENS.as_ptr(), 9, ptr::null(), 0, 0, 5, tokens_phi.as_mut_ptr(), 9, &mut hs)
    };
    assert_eq!(s, TaStatus::Ok);
    assert_eq!(hs.num_features, 9);

    let s = unsafe {
        ta_kernel_shap(m, TOKENS.as_ptr(), 9, ENDS.as_ptr(), 3, 0, 5, shap.as_mut_ptr(), 2, &mut hs)
    };
    assert_eq!(s, TaStatus::BufferTooSmall);

    let bad_ends = [3usize, 3, 9];
    let s = unsafe {
        ta_kernel_shap(m, TOKENS.as_ptr(), 9, bad_ends.as_ptr(), 3, 0, 5, shap.as_mut_ptr(), 3, &mut hs)
    };
    assert_eq!(s, TaStatus::InvalidInput);
    unsafe { ta_model_free(m) };
}

#[test]
fn exact_shapley_guards_cost() {
    let m = model(4);
    let tokens = [2u32; 21];
    let mut values = [0.0; 21];
    let mut h = TaAttribution::default();
    let s = unsafe { ta_exact_shapley(m, tokens.as_ptr(), 21, ptr::null(), 0, values.as_mut_ptr(), 21, &mut h) };
    assert_eq!(s, TaStatus::CostGuard);
    assert!(last_error().contains("20"));
    unsafe { ta_model_free(m) };
}

#[test]
fn integrated_gradients_is_complete() {
    let m = model(5);
    let mut values = [0.0; 9];
    let mut h = TaAttribution::default();
    let s = unsafe { ta_integrated_gradients(m, TOKENS.as_ptr(), 9, 300, values.as_mut_ptr(), 9, &mut h) };
    assert_eq!(s, TaStatus::Ok);
    let mut scores = [0.0; 3];
    let mut predicted = 0;
    unsafe { ta_model_scores(m, TOKENS.as_ptr(), 9, scores.as_mut_ptr(), 3, &mut predicted) };
    assert_eq!(h.target_class, predicted);
    let total = h.phi0 + values.iter().sum::<f64>();
    assert!((total - scores[predicted]).abs() <= 1e-3 * scores[predicted].abs().max(1.0));
    let s = unsafe { ta_integrated_gradients(m, TOKENS.as_ptr(), 9, 0, values.as_mut_ptr(), 9, &mut h) };
    assert_eq!(s, TaStatus::Config);
    unsafe { ta_model_free(m) };
}

#[test]
fn metrics_match_reference_values() {
    let a = [0.9, 0.5, 0.1, 0.05];
    let b = [0.1, 0.9, 0.5, 0.05];
    let mut out = -1.0;
    assert_eq!(unsafe { ta_jaccard_at_k(a.as_ptr(), b.as_ptr(), 4, 25.0, &mut out) }, TaStatus::Ok);
    assert_eq!(out, 0.0);
    assert_eq!(unsafe { ta_jaccard_at_k(a.as_ptr(), a.as_ptr(), 4, 25.0, &mut out) }, TaStatus::Ok);
    assert_eq!(out, 1.0);
    assert_eq!(unsafe { ta_jaccard_at_k(a.as_ptr(), b.as_ptr(), 4, 0.0, &mut out) }, TaStatus::Config);

    let y = [0usize, 0, 1, 1];
    let y_h = [0usize, 0, 1, 0];
    assert_eq!(unsafe { ta_mutual_information(y.as_ptr(), y_h.as_ptr(), 4, &mut out) }, TaStatus::Ok);
    assert!((out - 0.3113).abs() < 1e-4);
    let times = [2.0; 4];
    assert_eq!(unsafe { ta_itr(y.as_ptr(), y_h.as_ptr(), times.as_ptr(), 4, &mut out) }, TaStatus::Ok);
    assert!((out - 0.1557).abs() < 1e-4);
    let bad = [2.0, -1.0, 2.0, 2.0];
    assert_eq!(unsafe { ta_itr(y.as_ptr(), y_h.as_ptr(), bad.as_ptr(), 4, &mut out) }, TaStatus::InvalidInput);
    assert!(last_error().contains('1'));
    assert_eq!(unsafe { ta_mutual_information(y.as_ptr(), y_h.as_ptr(), 0, &mut out) }, TaStatus::InvalidInput);
}

#[test]
fn tokenize_through_a_saved_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vocab.json");
    textattr::corpus::Vocab::from_tokens(["the", "film", "was", "great", "."])
        .save(&path)
        .unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut vocab = ptr::null_mut();
    assert_eq!(unsafe { ta_vocab_load(cpath.as_ptr(), &mut vocab) }, TaStatus::Ok);
    let text = CString::new("The film was dull.").unwrap();
    let mut tokens = [0u32; 8];
    let mut len = 0;
    assert_eq!(unsafe { ta_tokenize(vocab, text.as_ptr(), tokens.as_mut_ptr(), 8, &mut len) }, TaStatus::Ok);
    assert_eq!(len, 5);
    assert_eq!(tokens[3], 1);
    assert_ne!(tokens[0], 1);
    let s = unsafe { ta_tokenize(vocab, text.as_ptr(), tokens.as_mut_ptr(), 2, &mut len) };
    assert_eq!(s, TaStatus::BufferTooSmall);
    assert_eq!(len, 5);
    unsafe { ta_vocab_free(vocab) };
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/textattr.h")).unwrap();
    for name in [
        "TEXTATTR_H",
        "typedef struct TaModel TaModel",
        "TA_STATUS_BUFFER_TOO_SMALL",
        "ta_kernel_shap",
        "ta_exact_shapley",
        "ta_integrated_gradients",
        "ta_jaccard_at_k",
        "ta_itr",
        "ta_last_error",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
    else {
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"textattr.h\"\nint main(void) { TaModel *m = 0; TaStatus s = ta_model_init(10, 2, 2, 2, 1, &m); ta_model_free(m); return s == TA_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
