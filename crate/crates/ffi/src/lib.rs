//! C ABI over the `stlc` crate.
//!
//! Every fallible function returns a [`StlcStatus`]. On failure a message is
//! kept per thread and can be read with [`stlc_last_error`]. Strings handed
//! out by this library must be released with [`stlc_string_free`]; handles
//! with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stlc::generator::{gen_dataset, GenConfig};
use stlc::grammar::{decode_greedy, decode_rule_ids, encode_type_rules, RuleId, RuleTable};
use stlc::optim::{Adafactor, AdafactorHyper, Adam, AdamHyper, Defaults, ParamShape, RAdam, ScheduleSpec};
use stlc::tokenizer::{encode_example, Vocab, PATH_LEN};
use stlc::{bfs_rename, build_rule_table, infer_type, parse_term, parse_type, TypingContext};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    /// The term is ill-typed.
    TypeError = 4,
    InvalidArgument = 5,
    /// An output buffer is too small; the required length is still reported.
    BufferTooSmall = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlcOptimizerKind {
    Adam = 0,
    Radam = 1,
    Adafactor = 2,
}

/// Opaque rule table for the global typing context.
pub struct StlcRuleTable {
    table: RuleTable,
    vocab: Vocab,
}

enum Inner {
    Adam(Adam),
    RAdam(RAdam),
    Adafactor(Adafactor),
}

/// Opaque optimizer state.
pub struct StlcOptimizer {
    inner: Inner,
    len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(StlcStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: StlcStatus, msg: impl ToString) -> FfiResult<T> {
    Err(Failure(status, msg.to_string()))
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> StlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StlcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            StlcStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(StlcStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(StlcStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return fail(StlcStatus::NullPointer, "null output pointer");
    }
    let c = CString::new(s).or_else(|_| fail(StlcStatus::Internal, "output contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T) -> FfiResult<&'a T> {
    p.as_ref()
        .map_or_else(|| fail(StlcStatus::NullPointer, "null handle"), Ok)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(StlcStatus::NullPointer, "null array argument");
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stlc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn stlc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Infers the type of `term` and writes it, printed, to `*out`.
///
/// # Safety
/// `term` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_infer(term: *const c_char, out: *mut *mut c_char) -> StlcStatus {
    guard(|| {
        let ctx = TypingContext::global();
        let t = parse_term(read_str(term)?, &ctx).or_else(|e| fail(StlcStatus::Parse, e))?;
        let ty = infer_type(&t, &ctx).or_else(|e| fail(StlcStatus::TypeError, e))?;
        write_string(out, ty.to_string())
    })
}

/// Rule table over the global context (base type `T`, 32 bound names).
#[no_mangle]
pub extern "C" fn stlc_rule_table_new() -> *mut StlcRuleTable {
    let made = catch_unwind(|| {
        let table = build_rule_table(&TypingContext::global(), 32);
        Vocab::from_rule_table(&table).map(|vocab| StlcRuleTable { table, vocab })
    });
    match made {
        Ok(Ok(t)) => Box::into_raw(Box::new(t)),
        Ok(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `table` must come from [`stlc_rule_table_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn stlc_rule_table_free(table: *mut StlcRuleTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of rule IDs, specials included. 0 for a NULL handle.
///
/// # Safety
/// `table` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn stlc_rule_table_num_ids(table: *const StlcRuleTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.num_ids())
}

/// The rules file text.
///
/// # Safety
/// `table` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_rule_table_rules_text(
    table: *const StlcRuleTable,
    out: *mut *mut c_char,
) -> StlcStatus {
    guard(|| write_string(out, handle(table)?.table.to_rules_text()))
}

/// The vocabulary as a JSON object.
///
/// # Safety
/// `table` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_rule_table_vocab_json(
    table: *const StlcRuleTable,
    out: *mut *mut c_char,
) -> StlcStatus {
    guard(|| write_string(out, handle(table)?.vocab.to_json()))
}

/// Encodes a printed type as its rule IDs (no framing). `*len` receives the
/// sequence length; when it exceeds `cap`, nothing is written and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `ids` must hold `cap` elements (or be NULL with `cap == 0`); `len` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn stlc_encode_type(
    table: *const StlcRuleTable,
    ty: *const c_char,
    ids: *mut u32,
    cap: usize,
    len: *mut usize,
) -> StlcStatus {
    guard(|| {
        let t = handle(table)?;
        let ty = parse_type(read_str(ty)?, &TypingContext::global()).or_else(|e| fail(StlcStatus::Parse, e))?;
        let rules = encode_type_rules(&ty, &t.table).or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        if len.is_null() {
            return fail(StlcStatus::NullPointer, "null length pointer");
        }
        *len = rules.len();
        if rules.len() > cap {
            return fail(StlcStatus::BufferTooSmall, format!("need {} slots", rules.len()));
        }
        if rules.len() > 0 && ids.is_null() {
            return fail(StlcStatus::NullPointer, "null id buffer");
        }
        for (i, id) in rules.ids().iter().enumerate() {
            *ids.add(i) = id.0;
        }
        Ok(())
    })
}

/// Decodes rule IDs into a printed type. Sequences that do not form a type
/// decode to `<error>` with status `Ok`.
///
/// # Safety
/// `ids` must hold `len` elements and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_decode_rule_ids(
    table: *const StlcRuleTable,
    ids: *const u32,
    len: usize,
    out: *mut *mut c_char,
) -> StlcStatus {
    guard(|| {
        let t = handle(table)?;
        let ids: Vec<RuleId> = slice(ids, len)?.iter().map(|&i| RuleId(i)).collect();
        write_string(out, decode_rule_ids(&ids, &t.table).to_string())
    })
}

/// Greedy decoding of a row-major `rows x cols` score matrix; `cols` must
/// equal the number of rule IDs.
///
/// # Safety
/// `scores` must hold `rows * cols` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_decode_greedy(
    table: *const StlcRuleTable,
    scores: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut c_char,
) -> StlcStatus {
    guard(|| {
        let t = handle(table)?;
        let total = rows
            .checked_mul(cols)
            .map_or_else(|| fail(StlcStatus::InvalidArgument, "matrix too large"), Ok)?;
        let scores = slice(scores, total)?;
        let rows: Vec<&[f64]> = if cols == 0 { vec![&[][..]; rows] } else { scores.chunks(cols).collect() };
        let ty = decode_greedy(&rows, &t.table).or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        write_string(out, ty.to_string())
    })
}

/// Type-checks and encodes one term as a JSON object with the model input
/// and decoder target fields.
///
/// # Safety
/// `term` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_encode_example(
    table: *const StlcRuleTable,
    id: u64,
    term: *const c_char,
    out: *mut *mut c_char,
) -> StlcStatus {
    guard(|| {
        let t = handle(table)?;
        let ctx = TypingContext::global();
        let term = parse_term(read_str(term)?, &ctx).or_else(|e| fail(StlcStatus::Parse, e))?;
        let term = bfs_rename(&term).or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        let ty = infer_type(&term, &ctx).or_else(|e| fail(StlcStatus::TypeError, e))?;
        let enc = encode_example(id, &term, &ty, &t.table, &t.vocab, PATH_LEN)
            .or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        let json = serde_json::to_string(&enc).or_else(|e| fail(StlcStatus::Internal, e))?;
        write_string(out, json)
    })
}

/// Generates `n` well-typed examples as dataset JSONL.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_gen_dataset(
    seed: u64,
    n: usize,
    max_type_depth: usize,
    max_term_depth: usize,
    p_branch: f64,
    out: *mut *mut c_char,
) -> StlcStatus {
    guard(|| {
        let cfg = GenConfig {
            seed,
            n_examples: n,
            max_type_depth,
            max_term_depth,
            p_branch,
            ..GenConfig::default()
        };
        let examples = gen_dataset(&cfg).or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        write_string(out, stlc::io::dataset_jsonl(&examples))
    })
}

/// Optimizer with built-in default hyperparameters. Adam and RAdam treat
/// the parameters as a flat vector of `rows * cols`; Adafactor factors its
/// second moment when both are above 1. Returns NULL on bad arguments.
#[no_mangle]
pub extern "C" fn stlc_optimizer_new(kind: StlcOptimizerKind, rows: usize, cols: usize) -> *mut StlcOptimizer {
    let made = catch_unwind(|| -> Result<StlcOptimizer, String> {
        let len = rows.checked_mul(cols).ok_or("shape too large")?;
        if len == 0 {
            return Err("empty parameter shape".into());
        }
        let d = Defaults::builtin();
        let inner = match kind {
            StlcOptimizerKind::Adam => {
                let h = AdamHyper::from_defaults(d, "adam").map_err(|e| e.to_string())?;
                Inner::Adam(Adam::new(h, len).map_err(|e| e.to_string())?)
            }
            StlcOptimizerKind::Radam => {
                let h = AdamHyper::from_defaults(d, "radam").map_err(|e| e.to_string())?;
                Inner::RAdam(RAdam::new(h, len).map_err(|e| e.to_string())?)
            }
            StlcOptimizerKind::Adafactor => {
                let h = AdafactorHyper::from_defaults(d).map_err(|e| e.to_string())?;
                let shape = if rows > 1 && cols > 1 {
                    ParamShape::Matrix { rows, cols }
                } else {
                    ParamShape::Vector(len)
                };
                Inner::Adafactor(Adafactor::new(h, shape).map_err(|e| e.to_string())?)
            }
        };
        Ok(StlcOptimizer { inner, len })
    });
    match made {
        Ok(Ok(o)) => Box::into_raw(Box::new(o)),
        Ok(Err(e)) => {
            set_error(e);
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `opt` must come from [`stlc_optimizer_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn stlc_optimizer_free(opt: *mut StlcOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

/// One optimizer step, applied to `params` in place. For Adafactor an `lr`
/// that is not positive selects its internal relative step size; otherwise
/// `lr` replaces it. On error the parameters and state are unchanged.
///
/// # Safety
/// `params` and `grads` must each hold `len` values; `opt` must be live.
#[no_mangle]
pub unsafe extern "C" fn stlc_optimizer_step(
    opt: *mut StlcOptimizer,
    params: *mut f64,
    grads: *const f64,
    len: usize,
    lr: f64,
) -> StlcStatus {
    guard(|| {
        let opt = opt
            .as_mut()
            .map_or_else(|| fail(StlcStatus::NullPointer, "null handle"), Ok)?;
        if len != opt.len {
            return fail(
                StlcStatus::InvalidArgument,
                format!("expected {} parameters, got {len}", opt.len),
            );
        }
        if params.is_null() {
            return fail(StlcStatus::NullPointer, "null parameter buffer");
        }
        let p = std::slice::from_raw_parts_mut(params, len);
        let g = slice(grads, len)?;
        let delta = match &mut opt.inner {
            Inner::Adam(o) => o.step(p, g, lr),
            Inner::RAdam(o) => o.step(p, g, lr),
            Inner::Adafactor(o) => o.step(p, g, (lr > 0.0).then_some(lr)),
        }
        .or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        for (x, d) in p.iter_mut().zip(delta) {
            *x += d;
        }
        Ok(())
    })
}

/// Learning rate of a schedule (`const`, `warmup:K`, `noam`, `anneal[:K]`)
/// at step `step` (1-based); `lr` is the target rate where one is used.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stlc_schedule_value(
    spec: *const c_char,
    lr: f64,
    step: u64,
    out: *mut f64,
) -> StlcStatus {
    guard(|| {
        let spec: ScheduleSpec = read_str(spec)?
            .parse()
            .or_else(|e| fail(StlcStatus::Parse, e))?;
        let schedule = spec
            .build(lr, Defaults::builtin())
            .or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        let v = schedule.value(step).or_else(|e| fail(StlcStatus::InvalidArgument, e))?;
        if out.is_null() {
            return fail(StlcStatus::NullPointer, "null output pointer");
        }
        *out = v;
        Ok(())
    })
}
