//! C interface to repralign.
//!
//! Every function returns an [`RaStatus`]. On failure the message is kept
//! per thread and can be read with [`ra_last_error_message`]. Objects are
//! passed as opaque handles created by `*_load`/`*_new`/`ra_fit_orthogonal`
//! and released with the matching `*_free`. Matrices are dense row-major
//! buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ndarray::{Array2, ArrayView2};
use repralign::anchors::{code_switch, CodeSwitchConfig, WeightMode};
use repralign::io::{
    read_corpus, write_corpus, BilingualLexicon, EmbeddingTable, LayerDump, LoadOptions,
    OrthogonalMap,
};
use repralign::preprocess::{iterative_normalize, NormalizationConfig};
use repralign::retrieval::{csls_topk, RetrievalConfig};
use repralign::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// Malformed or inconsistent file contents.
    Format = 4,
    Shape = 5,
    /// Zero norms, degenerate inputs, non-orthogonal maps, SVD failure.
    Numerical = 6,
    InvalidArgument = 7,
    /// The output buffer is too small; the required size was reported.
    BufferTooSmall = 8,
    Panic = 9,
}

/// Word embedding table.
pub struct RaEmbedding(EmbeddingTable);

/// Multi-layer representation dump.
pub struct RaDump(LayerDump);

/// Orthogonal map between two spaces.
pub struct RaMap(OrthogonalMap);

/// Bilingual lexicon.
pub struct RaLexicon(BilingualLexicon);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Core(Error),
    Argument(String),
    TooSmall(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> RaStatus {
    use Error::*;
    match e {
        Io { .. } => RaStatus::Io,
        MalformedHeader { .. }
        | BadArity { .. }
        | DuplicateToken { .. }
        | DuplicateEntry { .. }
        | BadValue { .. }
        | NonFinite { .. }
        | NegativeWeight { .. }
        | BadMagic { .. }
        | Truncated { .. }
        | IdCountMismatch { .. }
        | MalformedPair { .. }
        | IndexRange { .. }
        | MalformedParallel { .. }
        | AlignmentCount { .. }
        | Manifest { .. } => RaStatus::Format,
        Shape(_) | TooFewRows { .. } | LayerOutOfRange { .. } | NeighbourhoodTooLarge { .. } => {
            RaStatus::Shape
        }
        ZeroNorm { .. }
        | SvdNoConvergence { .. }
        | NotOrthogonal { .. }
        | DegenerateInput(_)
        | ZeroVariance => RaStatus::Numerical,
        _ => RaStatus::InvalidArgument,
    }
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RaStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return RaStatus::Ok,
        Ok(Err(Failure::Null(name))) => (RaStatus::NullArgument, format!("{name} is null")),
        Ok(Err(Failure::Utf8(name))) => (RaStatus::InvalidUtf8, format!("{name} is not valid UTF-8")),
        Ok(Err(Failure::Core(e))) => (status_of(&e), e.to_string()),
        Ok(Err(Failure::Argument(m))) => (RaStatus::InvalidArgument, m),
        Ok(Err(Failure::TooSmall(m))) => (RaStatus::BufferTooSmall, m),
        Err(panic) => {
            let text = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            (RaStatus::Panic, format!("internal error: {text}"))
        }
    };
    set_error(message);
    status
}

unsafe fn c_str<'a>(ptr: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure::Utf8(name))
}

unsafe fn c_path(ptr: *const c_char, name: &'static str) -> Result<PathBuf, Failure> {
    c_str(ptr, name).map(PathBuf::from)
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(name))
}

unsafe fn outref<'a, T>(ptr: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(name))
}

fn product(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure::Argument(format!("size {a} x {b} overflows")))
}

unsafe fn matrix<'a>(ptr: *const f64, rows: usize, cols: usize, name: &'static str) -> Result<ArrayView2<'a, f64>, Failure> {
    let data = slice(ptr, product(rows, cols)?, name)?;
    Ok(ArrayView2::from_shape((rows, cols), data).expect("length checked"))
}

fn copy_into<T: Copy>(src: &[T], dst: *mut T, capacity: usize, name: &'static str) -> Result<(), Failure> {
    if capacity < src.len() {
        return Err(Failure::TooSmall(format!(
            "{name} holds {capacity} elements, {} needed",
            src.len()
        )));
    }
    let dst = unsafe { slice_mut(dst, src.len(), name)? };
    dst.copy_from_slice(src);
    Ok(())
}

/// Copies `value` as a NUL-terminated string into `buffer`; `needed`
/// receives the size including the terminator.
unsafe fn copy_string(value: &str, buffer: *mut c_char, capacity: usize, needed: *mut usize) -> Result<(), Failure> {
    let bytes = value.as_bytes();
    if let Some(needed) = needed.as_mut() {
        *needed = bytes.len() + 1;
    }
    if capacity < bytes.len() + 1 {
        return Err(Failure::TooSmall(format!(
            "string needs {} bytes, buffer holds {capacity}",
            bytes.len() + 1
        )));
    }
    let dst = slice_mut(buffer as *mut u8, bytes.len() + 1, "buffer")?;
    dst[..bytes.len()].copy_from_slice(bytes);
    dst[bytes.len()] = 0;
    Ok(())
}

fn io_error(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn boxed<T>(value: T, slot: &mut *mut T) {
    *slot = Box::into_raw(Box::new(value));
}

unsafe fn free<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |m| m.as_ptr()))
}

// ---------------------------------------------------------------- embeddings

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_load(path: *const c_char, lowercase: bool, out: *mut *mut RaEmbedding) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        let table = EmbeddingTable::load_text(c_path(path, "path")?, LoadOptions { lowercase })?;
        boxed(RaEmbedding(table), slot);
        Ok(())
    })
}

/// Builds a table from `rows` tokens and a `rows x dim` row-major matrix.
///
/// # Safety
/// `tokens` must hold `rows` NUL-terminated strings and `data` `rows * dim`
/// floats.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_new(
    tokens: *const *const c_char,
    data: *const f32,
    rows: usize,
    dim: usize,
    out: *mut *mut RaEmbedding,
) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        let names = slice(tokens, rows, "tokens")?
            .iter()
            .map(|&t| c_str(t, "token").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let values = slice(data, product(rows, dim)?, "data")?.to_vec();
        let matrix = Array2::from_shape_vec((rows, dim), values).expect("length checked");
        boxed(RaEmbedding(EmbeddingTable::new(names, matrix)?), slot);
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_save(table: *const RaEmbedding, path: *const c_char) -> RaStatus {
    guard(|| {
        handle(table, "table")?.0.save_text(c_path(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library; `rows` and `dim` may be null.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_shape(table: *const RaEmbedding, rows: *mut usize, dim: *mut usize) -> RaStatus {
    guard(|| {
        let t = &handle(table, "table")?.0;
        if let Some(r) = rows.as_mut() {
            *r = t.len();
        }
        if let Some(d) = dim.as_mut() {
            *d = t.dim();
        }
        Ok(())
    })
}

/// Copies token `index` into `buffer`. `needed` (optional) receives the
/// required size including the terminator.
///
/// # Safety
/// `buffer` must hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_token(
    table: *const RaEmbedding,
    index: usize,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> RaStatus {
    guard(|| {
        let t = &handle(table, "table")?.0;
        let token = t
            .tokens()
            .get(index)
            .ok_or_else(|| Failure::Argument(format!("token {index} out of range for {} rows", t.len())))?;
        copy_string(token, buffer, capacity, needed)
    })
}

/// Copies the `rows x dim` matrix into `buffer`.
///
/// # Safety
/// `buffer` must hold `capacity` floats.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_copy_vectors(table: *const RaEmbedding, buffer: *mut f32, capacity: usize) -> RaStatus {
    guard(|| {
        let t = &handle(table, "table")?.0;
        let data: Vec<f32> = t.matrix().iter().copied().collect();
        copy_into(&data, buffer, capacity, "buffer")
    })
}

/// # Safety
/// `table` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ra_embedding_free(table: *mut RaEmbedding) {
    free(table);
}

// --------------------------------------------------------------------- dumps

/// # Safety
/// `path` must be NUL-terminated; the `.ids` sidecar must sit next to it.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_load(path: *const c_char, out: *mut *mut RaDump) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        boxed(RaDump(LayerDump::load(c_path(path, "path")?)?), slot);
        Ok(())
    })
}

/// Builds a dump from `rows` ids and `layers` consecutive `rows x dim`
/// row-major matrices.
///
/// # Safety
/// `ids` must hold `rows` NUL-terminated strings and `data`
/// `layers * rows * dim` floats.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_new(
    ids: *const *const c_char,
    data: *const f32,
    layers: usize,
    rows: usize,
    dim: usize,
    out: *mut *mut RaDump,
) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        let names = slice(ids, rows, "ids")?
            .iter()
            .map(|&t| c_str(t, "id").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let per_layer = product(rows, dim)?;
        let values = slice(data, product(layers, per_layer)?, "data")?;
        let mats = (0..layers)
            .map(|l| {
                let chunk = values[l * per_layer..(l + 1) * per_layer].to_vec();
                Array2::from_shape_vec((rows, dim), chunk).expect("length checked")
            })
            .collect();
        boxed(RaDump(LayerDump::new(names, mats)?), slot);
        Ok(())
    })
}

/// # Safety
/// `dump` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_save(dump: *const RaDump, path: *const c_char) -> RaStatus {
    guard(|| {
        handle(dump, "dump")?.0.save(c_path(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `dump` must come from this library; the outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_shape(dump: *const RaDump, layers: *mut usize, rows: *mut usize, dim: *mut usize) -> RaStatus {
    guard(|| {
        let d = &handle(dump, "dump")?.0;
        for (ptr, value) in [(layers, d.layer_count()), (rows, d.row_count()), (dim, d.dim())] {
            if let Some(slot) = ptr.as_mut() {
                *slot = value;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `buffer` must hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_id(
    dump: *const RaDump,
    index: usize,
    buffer: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> RaStatus {
    guard(|| {
        let d = &handle(dump, "dump")?.0;
        let id = d
            .item_ids()
            .get(index)
            .ok_or_else(|| Failure::Argument(format!("id {index} out of range for {} rows", d.row_count())))?;
        copy_string(id, buffer, capacity, needed)
    })
}

/// Copies one `rows x dim` layer into `buffer`.
///
/// # Safety
/// `buffer` must hold `capacity` floats.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_copy_layer(dump: *const RaDump, layer: usize, buffer: *mut f32, capacity: usize) -> RaStatus {
    guard(|| {
        let data: Vec<f32> = handle(dump, "dump")?.0.layer(layer)?.iter().copied().collect();
        copy_into(&data, buffer, capacity, "buffer")
    })
}

/// # Safety
/// `dump` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ra_dump_free(dump: *mut RaDump) {
    free(dump);
}

// ---------------------------------------------------------------------- maps

/// Fits the orthogonal `W` minimising `|W X - Y|_F` for `d x n` matrices
/// `X` and `Y`. `residual` (optional) receives the residual.
///
/// # Safety
/// `x` and `y` must hold `d * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ra_fit_orthogonal(
    x: *const f64,
    y: *const f64,
    d: usize,
    n: usize,
    out: *mut *mut RaMap,
    residual: *mut f64,
) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        let fit = repralign::procrustes::fit_orthogonal(matrix(x, d, n, "x")?, matrix(y, d, n, "y")?)?;
        if let Some(r) = residual.as_mut() {
            *r = fit.residual;
        }
        boxed(RaMap(fit.map), slot);
        Ok(())
    })
}

/// Wraps a row-major `d x d` matrix, which must be orthogonal.
///
/// # Safety
/// `data` must hold `d * d` doubles.
#[no_mangle]
pub unsafe extern "C" fn ra_map_new(data: *const f64, d: usize, out: *mut *mut RaMap) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        let map = OrthogonalMap::new(matrix(data, d, d, "data")?.to_owned())?;
        boxed(RaMap(map), slot);
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ra_map_load(path: *const c_char, out: *mut *mut RaMap) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        boxed(RaMap(OrthogonalMap::load(c_path(path, "path")?)?), slot);
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ra_map_save(map: *const RaMap, path: *const c_char) -> RaStatus {
    guard(|| {
        handle(map, "map")?.0.save(c_path(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library and `dim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ra_map_dim(map: *const RaMap, dim: *mut usize) -> RaStatus {
    guard(|| {
        *outref(dim, "dim")? = handle(map, "map")?.0.dim();
        Ok(())
    })
}

/// # Safety
/// `buffer` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ra_map_copy_matrix(map: *const RaMap, buffer: *mut f64, capacity: usize) -> RaStatus {
    guard(|| {
        let data: Vec<f64> = handle(map, "map")?.0.matrix().iter().copied().collect();
        copy_into(&data, buffer, capacity, "buffer")
    })
}

/// Maps `rows` row vectors: `out = rows · Wᵀ`.
///
/// # Safety
/// `input` and `output` must each hold `rows * d` doubles, `d` being the
/// map dimension.
#[no_mangle]
pub unsafe extern "C" fn ra_map_apply_rows(map: *const RaMap, input: *const f64, rows: usize, output: *mut f64) -> RaStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        let mapped = repralign::procrustes::apply_map_rows(m, matrix(input, rows, m.dim(), "input")?)?;
        let data: Vec<f64> = mapped.iter().copied().collect();
        copy_into(&data, output, data.len(), "output")
    })
}

/// # Safety
/// `map` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ra_map_free(map: *mut RaMap) {
    free(map);
}

// ----------------------------------------------------------------- numerics

/// Linear CKA of `n x dx` matrix `x` and `n x dy` matrix `y`.
///
/// # Safety
/// Buffers must hold `n * dx` and `n * dy` doubles.
#[no_mangle]
pub unsafe extern "C" fn ra_linear_cka(x: *const f64, dx: usize, y: *const f64, dy: usize, n: usize, value: *mut f64) -> RaStatus {
    guard(|| {
        let slot = outref(value, "value")?;
        *slot = repralign::cka::linear_cka(matrix(x, n, dx, "x")?, matrix(y, n, dy, "y")?)?;
        Ok(())
    })
}

/// Iterative normalization of an `n x d` matrix, in place. `iterations`
/// rounds of unit scaling and centering, then a final unit scaling.
///
/// # Safety
/// `data` must hold `n * d` doubles.
#[no_mangle]
pub unsafe extern "C" fn ra_iterative_normalize(data: *mut f64, n: usize, d: usize, iterations: usize) -> RaStatus {
    guard(|| {
        let config = NormalizationConfig {
            iterations,
            ..Default::default()
        };
        let result = iterative_normalize(matrix(data, n, d, "data")?, &config)?;
        let buffer = slice_mut(data, n * d, "data")?;
        for (dst, src) in buffer.iter_mut().zip(result.iter()) {
            *dst = *src;
        }
        Ok(())
    })
}

/// CSLS retrieval of `m` queries against `n` candidates (both `d`
/// columns). Writes `m * top_k` candidate indices and scores, best first;
/// `top_k` must not exceed `n`.
///
/// # Safety
/// Input buffers must hold `m * d` and `n * d` doubles, outputs
/// `m * top_k` elements each.
#[no_mangle]
pub unsafe extern "C" fn ra_csls_topk(
    queries: *const f64,
    m: usize,
    candidates: *const f64,
    n: usize,
    d: usize,
    csls_k: usize,
    top_k: usize,
    indices: *mut u64,
    scores: *mut f64,
) -> RaStatus {
    guard(|| {
        if top_k > n {
            return Err(Failure::Argument(format!("top_k {top_k} exceeds {n} candidates")));
        }
        let config = RetrievalConfig {
            csls_k,
            top_k,
            ..Default::default()
        };
        let lists = csls_topk(matrix(queries, m, d, "queries")?, matrix(candidates, n, d, "candidates")?, &config)?;
        let total = product(m, top_k)?;
        let indices = slice_mut(indices, total, "indices")?;
        let scores = slice_mut(scores, total, "scores")?;
        for (i, list) in lists.iter().enumerate() {
            for (r, (&j, &s)) in list.indices.iter().zip(&list.scores).enumerate() {
                indices[i * top_k + r] = j as u64;
                scores[i * top_k + r] = s;
            }
        }
        Ok(())
    })
}

// ------------------------------------------------------------------ lexicons

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ra_lexicon_load(path: *const c_char, lowercase: bool, out: *mut *mut RaLexicon) -> RaStatus {
    guard(|| {
        let slot = outref(out, "out")?;
        let lexicon = BilingualLexicon::load(c_path(path, "path")?, LoadOptions { lowercase })?;
        boxed(RaLexicon(lexicon), slot);
        Ok(())
    })
}

/// # Safety
/// `lexicon` must come from this library and `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ra_lexicon_len(lexicon: *const RaLexicon, len: *mut usize) -> RaStatus {
    guard(|| {
        *outref(len, "len")? = handle(lexicon, "lexicon")?.0.len();
        Ok(())
    })
}

/// # Safety
/// `lexicon` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ra_lexicon_free(lexicon: *mut RaLexicon) {
    free(lexicon);
}

/// Code-switches a whitespace-tokenized corpus file with a lexicon.
/// `replaced` (optional) receives the number of replaced tokens.
///
/// # Safety
/// Paths must be NUL-terminated and `lexicon` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ra_code_switch_file(
    input: *const c_char,
    lexicon: *const RaLexicon,
    output: *const c_char,
    replace_probability: f64,
    max_changed_fraction: f64,
    batch_tokens: usize,
    seed: u64,
    uniform_weights: bool,
    replaced: *mut u64,
) -> RaStatus {
    guard(|| {
        let lexicon = &handle(lexicon, "lexicon")?.0;
        let input = c_path(input, "input")?;
        let output = c_path(output, "output")?;
        let file = std::fs::File::open(&input).map_err(|e| io_error(&input, e))?;
        let corpus = read_corpus(std::io::BufReader::new(file))?;
        let config = CodeSwitchConfig {
            replace_probability,
            max_changed_fraction,
            batch_tokens,
            seed,
            weight_mode: if uniform_weights {
                WeightMode::Uniform
            } else {
                WeightMode::Quality
            },
        };
        let (switched, report) = code_switch(&corpus, lexicon, &config)?;
        let mut writer = std::io::BufWriter::new(std::fs::File::create(&output).map_err(|e| io_error(&output, e))?);
        write_corpus(&mut writer, &switched)
            .and_then(|_| std::io::Write::flush(&mut writer))
            .map_err(|e| io_error(&output, e))?;
        if let Some(r) = replaced.as_mut() {
            *r = report.tokens_replaced as u64;
        }
        Ok(())
    })
}
