//! C ABI over the sentigan pipeline: opaque handles, integer status
//! codes, and a thread-local last-error message. Constructors return
//! null on failure; all other calls return a [`SentiganStatus`].
//!
//! The generated header lives at `include/sentigan.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use sentigan::corpus::{load_corpus, load_labels, synth_corpus, Corpus, SynthProfile, WindowSpec};
use sentigan::emotion::{load_lexicon, synth_lexicon, Lexicon};
use sentigan::gan::{self, GanModel, TrainConfig};
use sentigan::imaging::{build_all_images, default_reference_time, SentimentImage};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentiganStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A numeric or flag argument was out of range.
    InvalidArgument = 3,
    /// Reading, parsing, or writing data failed.
    DataError = 4,
    /// An internal invariant failed (a bug; see the last error message).
    InternalError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into().replace('\0', "?");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

fn fail(status: SentiganStatus, message: impl Into<String>) -> SentiganStatus {
    set_last_error(message);
    status
}

/// Copy the last error message for the calling thread into `buffer`
/// (NUL-terminated, truncated to `capacity`). Returns the full message
/// length in bytes, excluding the NUL. Safe to call with a null buffer
/// to query the length.
#[no_mangle]
pub extern "C" fn sentigan_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
                *buffer.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Opaque corpus handle.
pub struct SentiganCorpus {
    inner: Corpus,
}

/// Opaque lexicon handle.
pub struct SentiganLexicon {
    inner: Lexicon,
}

/// Opaque set of per-user sentiment images.
pub struct SentiganImages {
    inner: Vec<SentimentImage>,
}

/// Opaque trained model handle.
pub struct SentiganModel {
    inner: GanModel,
}

fn path_arg(raw: *const c_char) -> Result<PathBuf, SentiganStatus> {
    if raw.is_null() {
        set_last_error("path argument is null");
        return Err(SentiganStatus::NullArgument);
    }
    let s = unsafe { CStr::from_ptr(raw) };
    match s.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_last_error("path argument is not valid UTF-8");
            Err(SentiganStatus::InvalidUtf8)
        }
    }
}

/// Run a constructor body, mapping panics to a null return.
fn constructor<T>(f: impl FnOnce() -> Result<T, ()>) -> *mut T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(value)) => Box::into_raw(Box::new(value)),
        Ok(Err(())) => std::ptr::null_mut(),
        Err(_) => {
            set_last_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

fn call(f: impl FnOnce() -> SentiganStatus) -> SentiganStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SentiganStatus::InternalError, "internal panic"),
    }
}

// --- corpus --------------------------------------------------------------

/// Load a line-delimited comment corpus. Returns null on failure.
#[no_mangle]
pub extern "C" fn sentigan_corpus_load(path: *const c_char) -> *mut SentiganCorpus {
    constructor(|| {
        let path = path_arg(path).map_err(|_| ())?;
        match load_corpus(&path) {
            Ok(inner) => Ok(SentiganCorpus { inner }),
            Err(e) => {
                set_last_error(e.to_string());
                Err(())
            }
        }
    })
}

/// Generate a deterministic synthetic corpus. `margin` in [0,1] controls
/// how separable the two classes are. Returns null on failure.
#[no_mangle]
pub extern "C" fn sentigan_corpus_synth(
    seed: u64,
    n_users: usize,
    relapse_fraction: f64,
    margin: f64,
) -> *mut SentiganCorpus {
    constructor(|| {
        let profile = SynthProfile { margin, ..SynthProfile::default() };
        match synth_corpus(seed, n_users, relapse_fraction, &profile) {
            Ok(inner) => Ok(SentiganCorpus { inner }),
            Err(e) => {
                set_last_error(e.to_string());
                Err(())
            }
        }
    })
}

/// Apply a user-label TSV (user_id<TAB>label) to a loaded corpus.
#[no_mangle]
pub extern "C" fn sentigan_corpus_apply_labels(
    corpus: *mut SentiganCorpus,
    path: *const c_char,
) -> SentiganStatus {
    call(|| {
        if corpus.is_null() {
            return fail(SentiganStatus::NullArgument, "corpus handle is null");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let corpus = unsafe { &mut *corpus };
        match load_labels(&mut corpus.inner, &path) {
            Ok(_) => SentiganStatus::Ok,
            Err(e) => fail(SentiganStatus::DataError, e.to_string()),
        }
    })
}

/// Number of users in the corpus; 0 when the handle is null.
#[no_mangle]
pub extern "C" fn sentigan_corpus_user_count(corpus: *const SentiganCorpus) -> usize {
    if corpus.is_null() {
        return 0;
    }
    unsafe { &*corpus }.inner.users.len()
}

/// Release a corpus handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn sentigan_corpus_free(corpus: *mut SentiganCorpus) {
    if !corpus.is_null() {
        drop(unsafe { Box::from_raw(corpus) });
    }
}

// --- lexicon -------------------------------------------------------------

/// Load a word-emotion association lexicon TSV. Returns null on failure.
#[no_mangle]
pub extern "C" fn sentigan_lexicon_load(path: *const c_char) -> *mut SentiganLexicon {
    constructor(|| {
        let path = path_arg(path).map_err(|_| ())?;
        match load_lexicon(&path) {
            Ok(inner) => Ok(SentiganLexicon { inner }),
            Err(e) => {
                set_last_error(e.to_string());
                Err(())
            }
        }
    })
}

/// The built-in lexicon matching the synthetic corpus vocabulary.
#[no_mangle]
pub extern "C" fn sentigan_lexicon_synth() -> *mut SentiganLexicon {
    constructor(|| Ok(SentiganLexicon { inner: synth_lexicon() }))
}

/// Number of words in the lexicon; 0 when the handle is null.
#[no_mangle]
pub extern "C" fn sentigan_lexicon_word_count(lexicon: *const SentiganLexicon) -> usize {
    if lexicon.is_null() {
        return 0;
    }
    unsafe { &*lexicon }.inner.len()
}

/// Release a lexicon handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn sentigan_lexicon_free(lexicon: *mut SentiganLexicon) {
    if !lexicon.is_null() {
        drop(unsafe { Box::from_raw(lexicon) });
    }
}

// --- images --------------------------------------------------------------

/// Build one 2-channel 10x10 sentiment image per user over the trailing
/// `observation_days` window. Returns null on failure.
#[no_mangle]
pub extern "C" fn sentigan_images_build(
    corpus: *const SentiganCorpus,
    lexicon: *const SentiganLexicon,
    observation_days: u32,
) -> *mut SentiganImages {
    constructor(|| {
        if corpus.is_null() || lexicon.is_null() {
            set_last_error("corpus/lexicon handle is null");
            return Err(());
        }
        if observation_days == 0 {
            set_last_error("observation_days must be >= 1");
            return Err(());
        }
        let corpus = unsafe { &*corpus };
        let lexicon = unsafe { &*lexicon };
        let window = WindowSpec { observation_days, ..WindowSpec::default() };
        let reference = default_reference_time(&corpus.inner);
        let inner = build_all_images(&corpus.inner, &lexicon.inner, &window, reference);
        Ok(SentiganImages { inner })
    })
}

/// Number of images in the set; 0 when the handle is null.
#[no_mangle]
pub extern "C" fn sentigan_images_count(images: *const SentiganImages) -> usize {
    if images.is_null() {
        return 0;
    }
    unsafe { &*images }.inner.len()
}

/// Copy image `index` into `out` as 200 doubles (emotion channel first,
/// row-major, then the influence channel).
#[no_mangle]
pub extern "C" fn sentigan_images_pixels(
    images: *const SentiganImages,
    index: usize,
    out: *mut f64,
) -> SentiganStatus {
    call(|| {
        if images.is_null() || out.is_null() {
            return fail(SentiganStatus::NullArgument, "images/out is null");
        }
        let images = unsafe { &*images };
        let Some(image) = images.inner.get(index) else {
            return fail(
                SentiganStatus::InvalidArgument,
                format!("index {index} out of range ({} images)", images.inner.len()),
            );
        };
        let flat = sentigan::imaging::flatten_image(image);
        unsafe { std::ptr::copy_nonoverlapping(flat.as_ptr(), out, flat.len()) };
        SentiganStatus::Ok
    })
}

/// Release an image-set handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn sentigan_images_free(images: *mut SentiganImages) {
    if !images.is_null() {
        drop(unsafe { Box::from_raw(images) });
    }
}

// --- model ---------------------------------------------------------------

/// Train the semi-supervised GAN on all labeled images in the set
/// (unlabeled images join the unsupervised pool). Returns null on
/// failure.
#[no_mangle]
pub extern "C" fn sentigan_model_train(
    images: *const SentiganImages,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
) -> *mut SentiganModel {
    constructor(|| {
        if images.is_null() {
            set_last_error("images handle is null");
            return Err(());
        }
        if epochs == 0 || batch_size == 0 {
            set_last_error("epochs and batch_size must be >= 1");
            return Err(());
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            set_last_error("learning_rate must be positive");
            return Err(());
        }
        let images = unsafe { &*images };
        let mut labeled = Vec::new();
        let mut unlabeled = Vec::new();
        for image in &images.inner {
            let tensor = gan::image_tensor(image);
            match gan::class_index(image.label) {
                Some(class) => labeled.push((tensor, class)),
                None => unlabeled.push(tensor),
            }
        }
        let config = TrainConfig {
            epochs,
            batch_size: batch_size.min(labeled.len().max(1)),
            learning_rate,
            seed,
            ..TrainConfig::default()
        };
        match gan::train(&labeled, &unlabeled, &config) {
            Ok((model, _)) => Ok(SentiganModel { inner: model }),
            Err(e) => {
                set_last_error(e.to_string());
                Err(())
            }
        }
    })
}

/// Load a model checkpoint. Returns null on failure.
#[no_mangle]
pub extern "C" fn sentigan_model_load(path: *const c_char) -> *mut SentiganModel {
    constructor(|| {
        let path = path_arg(path).map_err(|_| ())?;
        match gan::load_gan_model(&path) {
            Ok(inner) => Ok(SentiganModel { inner }),
            Err(e) => {
                set_last_error(e.to_string());
                Err(())
            }
        }
    })
}

/// Write a model checkpoint (bit-exact round-trip).
#[no_mangle]
pub extern "C" fn sentigan_model_save(
    model: *const SentiganModel,
    path: *const c_char,
) -> SentiganStatus {
    call(|| {
        if model.is_null() {
            return fail(SentiganStatus::NullArgument, "model handle is null");
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let model = unsafe { &*model };
        match gan::store_gan_model(&model.inner, &path) {
            Ok(()) => SentiganStatus::Ok,
            Err(e) => fail(SentiganStatus::DataError, e.to_string()),
        }
    })
}

/// Relapse probability for image `index`, written to `out_probability`.
#[no_mangle]
pub extern "C" fn sentigan_model_predict(
    model: *const SentiganModel,
    images: *const SentiganImages,
    index: usize,
    out_probability: *mut f64,
) -> SentiganStatus {
    call(|| {
        if model.is_null() || images.is_null() || out_probability.is_null() {
            return fail(SentiganStatus::NullArgument, "model/images/out is null");
        }
        let model = unsafe { &*model };
        let images = unsafe { &*images };
        let Some(image) = images.inner.get(index) else {
            return fail(
                SentiganStatus::InvalidArgument,
                format!("index {index} out of range ({} images)", images.inner.len()),
            );
        };
        match gan::predict_relapse(&model.inner, image) {
            Ok(p) => {
                unsafe { *out_probability = p };
                SentiganStatus::Ok
            }
            Err(e) => fail(SentiganStatus::DataError, e.to_string()),
        }
    })
}

/// Release a model handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn sentigan_model_free(model: *mut SentiganModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}
