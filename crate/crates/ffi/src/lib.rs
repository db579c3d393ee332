//! C interface to the topic map engine.
//!
//! Conventions, in force for every function here:
//!
//! * A map travels as an opaque [`TmMap`] handle. Handles are produced
//!   by the load/parse/merge functions, are not thread-safe, and must be
//!   released exactly once with [`tm_map_free`].
//! * Fallible functions return a [`TmStatus`] and deliver results
//!   through out-pointers, which are left untouched on failure.
//! * Every `char*` delivered through an out-pointer is NUL-terminated,
//!   owned by the caller, and must be released with [`tm_string_free`].
//! * After a non-`TM_OK` return, [`tm_last_error`] describes the
//!   failure; the message stays valid until the next failing call on the
//!   same thread.

#![allow(non_camel_case_types)]

use std::cell::{OnceCell, RefCell};
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use topicmap::index::{search, Index};
use topicmap::merge::merge_maps;
use topicmap::query::{eval, parse_query};
use topicmap::validate::{render, validate};
use topicmap::xtm::{load_file, parse_xtm, serialize_xtm};
use topicmap::{export, Error, Iri, TopicMap};

/// Result of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    /// The call succeeded.
    TM_OK = 0,
    /// A required pointer argument was null.
    TM_NULL_ARGUMENT = 1,
    /// A string argument was not valid UTF-8.
    TM_INVALID_UTF8 = 2,
    /// A file could not be read.
    TM_IO_ERROR = 3,
    /// The document is not well-formed or breaks an interchange rule.
    TM_PARSE_ERROR = 4,
    /// The query text has a syntax error.
    TM_QUERY_ERROR = 5,
    /// A model rule was violated.
    TM_MODEL_ERROR = 6,
}

/// An in-memory topic map. Opaque: create it with `tm_map_load`,
/// `tm_map_parse`, or `tm_map_merge`, release it with `tm_map_free`.
pub struct TmMap {
    map: TopicMap,
    /// Notes from the operation that produced the handle: parse warnings
    /// for loads, the merged-pair report for merges.
    notes: String,
    index: OnceCell<Index>,
}

impl TmMap {
    fn index(&self) -> &Index {
        self.index.get_or_init(|| Index::build(&self.map))
    }

    fn with_notes(map: TopicMap, notes: String) -> TmMap {
        TmMap {
            map,
            notes,
            index: OnceCell::new(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: TmStatus, message: impl std::fmt::Display) -> TmStatus {
    let text = message.to_string().replace('\0', "?");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).expect("NUL bytes replaced");
    });
    status
}

fn status_of(e: &Error) -> TmStatus {
    match e {
        Error::Io(_) => TmStatus::TM_IO_ERROR,
        Error::Parse { .. } => TmStatus::TM_PARSE_ERROR,
        Error::QuerySyntax { .. } => TmStatus::TM_QUERY_ERROR,
        _ => TmStatus::TM_MODEL_ERROR,
    }
}

/// Borrow a required C string argument.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string that outlives
/// the borrow.
unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, TmStatus> {
    if ptr.is_null() {
        return Err(fail(TmStatus::TM_NULL_ARGUMENT, format!("{what} is null")));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| fail(TmStatus::TM_INVALID_UTF8, format!("{what} is not valid UTF-8")))
}

/// Borrow a required map handle argument.
///
/// # Safety
/// `ptr` must be null or a handle produced by this library that has not
/// been freed.
unsafe fn map_arg<'a>(ptr: *const TmMap, what: &str) -> Result<&'a TmMap, TmStatus> {
    if ptr.is_null() {
        Err(fail(TmStatus::TM_NULL_ARGUMENT, format!("{what} is null")))
    } else {
        Ok(unsafe { &*ptr })
    }
}

/// # Safety
/// `out` must be null or a valid, writable pointer.
unsafe fn write_handle(handle: TmMap, out: *mut *mut TmMap) -> TmStatus {
    if out.is_null() {
        return fail(TmStatus::TM_NULL_ARGUMENT, "out_map is null");
    }
    unsafe { *out = Box::into_raw(Box::new(handle)) };
    TmStatus::TM_OK
}

/// # Safety
/// `out` must be null or a valid, writable pointer.
unsafe fn write_string(text: String, out: *mut *mut c_char, what: &str) -> TmStatus {
    if out.is_null() {
        return fail(TmStatus::TM_NULL_ARGUMENT, format!("{what} is null"));
    }
    let c = CString::new(text.replace('\0', "?")).expect("NUL bytes replaced");
    unsafe { *out = c.into_raw() };
    TmStatus::TM_OK
}

fn parse_notes(diagnostics: &[topicmap::xtm::ParseDiagnostic]) -> String {
    diagnostics.iter().map(|d| format!("{d}\n")).collect()
}

/// The message for the most recent failing call on this thread. Never
/// null; empty before any failure. Valid until the next failing call on
/// the same thread — copy it if it must outlive that.
#[no_mangle]
pub extern "C" fn tm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse the XTM file at `path` into a new handle. Non-fatal parse
/// warnings are kept on the handle; read them with `tm_map_notes`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_map` must be a valid,
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_load(
    path: *const c_char,
    out_map: *mut *mut TmMap,
) -> TmStatus {
    let path = match unsafe { str_arg(path, "path") } {
        Ok(p) => p,
        Err(status) => return status,
    };
    match load_file(Path::new(path)) {
        Ok(doc) => unsafe {
            write_handle(
                TmMap::with_notes(doc.map, parse_notes(&doc.diagnostics)),
                out_map,
            )
        },
        Err(e) => fail(status_of(&e), format!("{path}: {e}")),
    }
}

/// Parse an XTM document held in memory. `base_locator` is the IRI
/// relative references resolve against.
///
/// # Safety
/// `xml` and `base_locator` must be NUL-terminated strings; `out_map`
/// must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_parse(
    xml: *const c_char,
    base_locator: *const c_char,
    out_map: *mut *mut TmMap,
) -> TmStatus {
    let xml = match unsafe { str_arg(xml, "xml") } {
        Ok(x) => x,
        Err(status) => return status,
    };
    let base = match unsafe { str_arg(base_locator, "base_locator") } {
        Ok(b) => b,
        Err(status) => return status,
    };
    let base = match Iri::new(base) {
        Ok(iri) => iri,
        Err(e) => return fail(status_of(&e), e),
    };
    match parse_xtm(xml.as_bytes(), base) {
        Ok(doc) => unsafe {
            write_handle(
                TmMap::with_notes(doc.map, parse_notes(&doc.diagnostics)),
                out_map,
            )
        },
        Err(e) => fail(status_of(&e), e),
    }
}

/// Merge two maps into a new handle; the inputs stay usable and
/// unchanged. The handle's notes hold one `survivor <= absorbed
/// [reason]` line per merged pair.
///
/// # Safety
/// `a` and `b` must be live handles; `out_map` must be a valid,
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_merge(
    a: *const TmMap,
    b: *const TmMap,
    out_map: *mut *mut TmMap,
) -> TmStatus {
    let a = match unsafe { map_arg(a, "a") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    let b = match unsafe { map_arg(b, "b") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    let (merged, report) = merge_maps(&a.map, &b.map);
    unsafe { write_handle(TmMap::with_notes(merged, report.render()), out_map) }
}

/// Release a handle. Null is a no-op.
///
/// # Safety
/// `map` must be null or a handle produced by this library that has not
/// already been freed.
#[no_mangle]
pub unsafe extern "C" fn tm_map_free(map: *mut TmMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

/// Number of topics in the map; 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_map_topic_count(map: *const TmMap) -> usize {
    match unsafe { map.as_ref() } {
        Some(handle) => handle.map.topic_count(),
        None => 0,
    }
}

/// Number of associations in the map; 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_map_association_count(map: *const TmMap) -> usize {
    match unsafe { map.as_ref() } {
        Some(handle) => handle.map.association_count(),
        None => 0,
    }
}

/// Notes attached to the handle by the operation that produced it
/// (parse warnings, merge report). Possibly empty, one note per line.
///
/// # Safety
/// `map` must be a live handle; `out_text` must be a valid, writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_notes(
    map: *const TmMap,
    out_text: *mut *mut c_char,
) -> TmStatus {
    let handle = match unsafe { map_arg(map, "map") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    unsafe { write_string(handle.notes.clone(), out_text, "out_text") }
}

/// Run the structural validator. The text holds one `SEVERITY CODE
/// subject: message` line per finding, empty when the map is clean.
///
/// # Safety
/// `map` must be a live handle; `out_text` must be a valid, writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_validate(
    map: *const TmMap,
    out_text: *mut *mut c_char,
) -> TmStatus {
    let handle = match unsafe { map_arg(map, "map") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    unsafe { write_string(render(&validate(&handle.map)), out_text, "out_text") }
}

/// Evaluate a query. `out_ids` receives one topic id per line (empty
/// when nothing matched). `out_notes`, when non-null, receives the
/// informational notes (unknown ids, skipped dangling references), one
/// per line.
///
/// # Safety
/// `map` must be a live handle; `query` must be NUL-terminated;
/// `out_ids` must be valid and writable; `out_notes` may be null.
#[no_mangle]
pub unsafe extern "C" fn tm_map_query(
    map: *const TmMap,
    query: *const c_char,
    out_ids: *mut *mut c_char,
    out_notes: *mut *mut c_char,
) -> TmStatus {
    let handle = match unsafe { map_arg(map, "map") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    let text = match unsafe { str_arg(query, "query") } {
        Ok(q) => q,
        Err(status) => return status,
    };
    let parsed = match parse_query(text) {
        Ok(q) => q,
        Err(e) => return fail(status_of(&e), e),
    };
    let result = eval(&handle.map, &parsed);
    let ids: String = result
        .topics
        .iter()
        .map(|t| format!("{}\n", t.as_str()))
        .collect();
    if !out_notes.is_null() {
        let notes: String = result.notes.iter().map(|n| format!("{n}\n")).collect();
        let status = unsafe { write_string(notes, out_notes, "out_notes") };
        if status != TmStatus::TM_OK {
            return status;
        }
    }
    unsafe { write_string(ids, out_ids, "out_ids") }
}

/// Search the name index. Output is one hit per line, best first:
/// `topic-id<TAB>score<TAB>occurrence-count`, at most `limit` lines.
///
/// # Safety
/// `map` must be a live handle; `text` must be NUL-terminated;
/// `out_text` must be a valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_search(
    map: *const TmMap,
    text: *const c_char,
    limit: usize,
    out_text: *mut *mut c_char,
) -> TmStatus {
    let handle = match unsafe { map_arg(map, "map") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    let text = match unsafe { str_arg(text, "text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    let hits = search(handle.index(), &handle.map, text, None, None, limit);
    let lines: String = hits
        .iter()
        .map(|h| format!("{}\t{}\t{}\n", h.topic, h.score, h.occurrences.len()))
        .collect();
    unsafe { write_string(lines, out_text, "out_text") }
}

/// Serialize the map as canonical XTM.
///
/// # Safety
/// `map` must be a live handle; `out_text` must be a valid, writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_to_xtm(
    map: *const TmMap,
    out_text: *mut *mut c_char,
) -> TmStatus {
    let handle = match unsafe { map_arg(map, "map") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    let xml = String::from_utf8(serialize_xtm(&handle.map)).expect("serializer emits UTF-8");
    unsafe { write_string(xml, out_text, "out_text") }
}

/// Serialize the map as the canonical JSON dump.
///
/// # Safety
/// `map` must be a live handle; `out_text` must be a valid, writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_map_to_json(
    map: *const TmMap,
    out_text: *mut *mut c_char,
) -> TmStatus {
    let handle = match unsafe { map_arg(map, "map") } {
        Ok(m) => m,
        Err(status) => return status,
    };
    unsafe { write_string(export::to_json(&handle.map), out_text, "out_text") }
}

/// Release a string produced by this library. Null is a no-op.
///
/// # Safety
/// `text` must be null or a string delivered through one of this
/// library's out-pointers, not already freed.
#[no_mangle]
pub unsafe extern "C" fn tm_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(unsafe { CString::from_raw(text) });
    }
}
