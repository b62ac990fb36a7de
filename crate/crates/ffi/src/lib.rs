//! C ABI over the treemem engine.
//!
//! Every function returns a [`TmStatus`]; on failure the message is kept in
//! a thread-local slot readable with [`tm_last_error`]. Masks cross the
//! boundary as row-major `width * height` byte arrays, non-zero meaning set.
//! The tracker calls back into C for every decode.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use treemem::backend::{DecodeRequest, DecodeResponse, DecoderBackend, FrameRef, CANDIDATES_PER_CALL};
use treemem::error::BackendError;
use treemem::memory::{compute_modulation_weights, MemoryPolicy};
use treemem::metrics::{contour_f, region_j};
use treemem::search::{finalize, step, SearchOptions};
use treemem::types::{BeamState, FrameRecord};
use treemem::{Hyperparams, Mask};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// A predicted IoU outside [0, 1].
    Domain = 4,
    /// The decode callback failed or broke the response contract.
    Backend = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(TmStatus, String);

impl Fail {
    fn new(status: TmStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TmStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail::new(TmStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `bits` must point to `width * height` readable bytes.
unsafe fn read_mask(bits: *const u8, width: u32, height: u32, name: &str) -> Result<Mask, Fail> {
    non_null(bits, name)?;
    let n = width as usize * height as usize;
    let bytes = std::slice::from_raw_parts(bits, n);
    let flags: Vec<bool> = bytes.iter().map(|&b| b != 0).collect();
    Mask::from_bits(width, height, &flags).map_err(|e| Fail::new(TmStatus::InvalidArgument, format!("{name}: {e}")))
}

fn write_mask(mask: &Mask, out: &mut [u8]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from(mask.bit(i));
    }
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf`, and returns the buffer size needed (0 when there is no error).
/// Truncates when `cap` is too small. `buf` may be null to query the size.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tm_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Search and memory hyperparameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmHyperparams {
    pub pathways: usize,
    pub memory_frames: usize,
    pub epsilon: f64,
    pub delta_conf: f64,
    pub delta_iou: f64,
    pub w_low: f64,
    pub w_high: f64,
    /// Decimal places for the distinct-IoU test; negative disables rounding.
    pub iou_rounding_decimals: i32,
}

impl From<Hyperparams> for TmHyperparams {
    fn from(h: Hyperparams) -> Self {
        Self {
            pathways: h.pathways,
            memory_frames: h.memory_frames,
            epsilon: h.epsilon,
            delta_conf: h.delta_conf,
            delta_iou: h.delta_iou,
            w_low: h.w_low,
            w_high: h.w_high,
            iou_rounding_decimals: h.iou_rounding_decimals.map_or(-1, |d| d as i32),
        }
    }
}

impl From<TmHyperparams> for Hyperparams {
    fn from(h: TmHyperparams) -> Self {
        Self {
            pathways: h.pathways,
            memory_frames: h.memory_frames,
            epsilon: h.epsilon,
            delta_conf: h.delta_conf,
            delta_iou: h.delta_iou,
            w_low: h.w_low,
            w_high: h.w_high,
            iou_rounding_decimals: u32::try_from(h.iou_rounding_decimals).ok(),
        }
    }
}

/// # Safety
/// `out` must be null or point to a writable `TmHyperparams`.
#[no_mangle]
pub unsafe extern "C" fn tm_hyperparams_default(out: *mut TmHyperparams) -> TmStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Hyperparams::default().into();
        Ok(())
    })
}

/// `TM_STATUS_CONFIG` with the violated constraint as the error message.
///
/// # Safety
/// `h` must be null or point to a valid `TmHyperparams`.
#[no_mangle]
pub unsafe extern "C" fn tm_hyperparams_validate(h: *const TmHyperparams) -> TmStatus {
    guard(|| {
        non_null(h, "h")?;
        Hyperparams::from(*h).validate().map_err(|e| Fail::new(TmStatus::Config, e.to_string()))
    })
}

/// Modulation weights by ascending-occlusion rank, written to `out[0..n]`.
///
/// # Safety
/// `occlusion_scores` and `out` must point to `n` readable / writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tm_modulation_weights(
    occlusion_scores: *const f64,
    n: usize,
    w_low: f64,
    w_high: f64,
    out: *mut f64,
) -> TmStatus {
    guard(|| {
        if n == 0 {
            return Ok(());
        }
        non_null(occlusion_scores, "occlusion_scores")?;
        non_null(out, "out")?;
        if !(w_low <= w_high) {
            return Err(Fail::new(TmStatus::InvalidArgument, "w_low must not exceed w_high"));
        }
        let w = compute_modulation_weights(std::slice::from_raw_parts(occlusion_scores, n), w_low, w_high);
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&w);
        Ok(())
    })
}

/// Region similarity J (IoU; 1 when both masks are empty).
///
/// # Safety
/// `pred` and `gt` must point to `width * height` bytes; `out` to a double.
#[no_mangle]
pub unsafe extern "C" fn tm_region_j(pred: *const u8, gt: *const u8, width: u32, height: u32, out: *mut f64) -> TmStatus {
    guard(|| {
        non_null(out, "out")?;
        let (p, g) = (read_mask(pred, width, height, "pred")?, read_mask(gt, width, height, "gt")?);
        *out = region_j(&p, &g).map_err(|e| Fail::new(TmStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Contour accuracy F with a boundary tolerance of `tolerance` pixels.
///
/// # Safety
/// As for [`tm_region_j`].
#[no_mangle]
pub unsafe extern "C" fn tm_contour_f(
    pred: *const u8,
    gt: *const u8,
    width: u32,
    height: u32,
    tolerance: u32,
    out: *mut f64,
) -> TmStatus {
    guard(|| {
        non_null(out, "out")?;
        let (p, g) = (read_mask(pred, width, height, "pred")?, read_mask(gt, width, height, "gt")?);
        *out = contour_f(&p, &g, tolerance).map_err(|e| Fail::new(TmStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Run-length encodes a mask into `buf` (NUL-terminated). `*needed` gets the
/// required size including the NUL; `TM_STATUS_BUFFER_TOO_SMALL` if `cap`
/// is less.
///
/// # Safety
/// `bits` must point to `width * height` bytes, `buf` to `cap` writable bytes
/// (or be null with `cap == 0`), `needed` to a `size_t`.
#[no_mangle]
pub unsafe extern "C" fn tm_mask_encode_rle(
    bits: *const u8,
    width: u32,
    height: u32,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> TmStatus {
    guard(|| {
        non_null(needed, "needed")?;
        let rle = read_mask(bits, width, height, "bits")?.to_rle();
        *needed = rle.len() + 1;
        if cap < rle.len() + 1 {
            return Err(Fail::new(TmStatus::BufferTooSmall, format!("need {} bytes", rle.len() + 1)));
        }
        non_null(buf, "buf")?;
        ptr::copy_nonoverlapping(rle.as_ptr().cast::<c_char>(), buf, rle.len());
        *buf.add(rle.len()) = 0;
        Ok(())
    })
}

/// Decodes a run-length string into `out[0 .. width * height]`.
///
/// # Safety
/// `rle` must be a NUL-terminated string; `out` must point to
/// `width * height` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tm_mask_decode_rle(rle: *const c_char, width: u32, height: u32, out: *mut u8) -> TmStatus {
    guard(|| {
        non_null(rle, "rle")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(rle)
            .to_str()
            .map_err(|_| Fail::new(TmStatus::InvalidArgument, "rle is not UTF-8"))?;
        let mask = Mask::from_rle(width, height, text).map_err(|e| Fail::new(TmStatus::InvalidArgument, e.to_string()))?;
        write_mask(&mask, std::slice::from_raw_parts_mut(out, width as usize * height as usize));
        Ok(())
    })
}

/// One decode call handed to the C callback. All pointers are valid only
/// for the duration of the call.
#[repr(C)]
pub struct TmDecodeRequest {
    pub object_id: u32,
    pub time: u32,
    pub width: u32,
    pub height: u32,
    /// Number of memory entries, prompt first, ascending frame index.
    pub bank_len: usize,
    pub bank_frames: *const u32,
    pub bank_weights: *const f64,
    /// `bank_len` masks back to back, each `width * height` bytes.
    pub bank_masks: *const u8,
}

/// Filled in by the callback.
#[repr(C)]
pub struct TmDecodeResponse {
    /// Shared by all three candidates.
    pub occlusion_score: f64,
    pub ious: [f64; 3],
    /// Three masks back to back, each `width * height` bytes; zeroed on entry.
    pub masks: *mut u8,
}

/// Decode callback; returns 0 on success.
pub type TmDecodeFn =
    Option<unsafe extern "C" fn(user: *mut c_void, request: *const TmDecodeRequest, response: *mut TmDecodeResponse) -> i32>;

struct CallbackBackend {
    decode: unsafe extern "C" fn(*mut c_void, *const TmDecodeRequest, *mut TmDecodeResponse) -> i32,
    user: *mut c_void,
}

// The engine decodes from one thread at a time (concurrent decode is off),
// and the caller owns `user` for the tracker's lifetime.
unsafe impl Send for CallbackBackend {}
unsafe impl Sync for CallbackBackend {}

impl DecoderBackend for CallbackBackend {
    fn decode(&self, request: &DecodeRequest) -> Result<DecodeResponse, BackendError> {
        let (w, h) = request
            .canvas()
            .ok_or_else(|| BackendError::Decode("empty memory bank".into()))?;
        let n = w as usize * h as usize;
        let entries = &request.bank.entries;
        let frames: Vec<u32> = entries.iter().map(|e| e.record.frame_index).collect();
        let weights: Vec<f64> = entries.iter().map(|e| e.weight).collect();
        let mut masks = vec![0u8; n * entries.len()];
        for (e, chunk) in entries.iter().zip(masks.chunks_mut(n.max(1))) {
            write_mask(&e.record.mask, chunk);
        }
        let req = TmDecodeRequest {
            object_id: request.object_id,
            time: request.time,
            width: w,
            height: h,
            bank_len: entries.len(),
            bank_frames: frames.as_ptr(),
            bank_weights: weights.as_ptr(),
            bank_masks: masks.as_ptr(),
        };
        let mut out_masks = vec![0u8; n * CANDIDATES_PER_CALL];
        let mut resp = TmDecodeResponse { occlusion_score: 0.0, ious: [0.0; 3], masks: out_masks.as_mut_ptr() };
        let rc = unsafe { (self.decode)(self.user, &req, &mut resp) };
        if rc != 0 {
            return Err(BackendError::Decode(format!("decode callback returned {rc}")));
        }
        let bits = |k: usize| -> Result<Mask, BackendError> {
            let flags: Vec<bool> = out_masks[k * n..(k + 1) * n].iter().map(|&b| b != 0).collect();
            Ok(Mask::from_bits(w, h, &flags)?)
        };
        let items = [
            (bits(0)?, resp.ious[0], Vec::new()),
            (bits(1)?, resp.ious[1], Vec::new()),
            (bits(2)?, resp.ious[2], Vec::new()),
        ];
        let response = DecodeResponse::new(resp.occlusion_score, items);
        response.validate(Some((w, h)))?;
        Ok(response)
    }
}

/// Opaque single-object tracker.
pub struct TmTracker {
    state: BeamState,
    backend: CallbackBackend,
    memory: MemoryPolicy,
    hyper: Hyperparams,
    width: u32,
    height: u32,
}

/// Creates a tracker from a prompt mask at frame 0. Free with [`tm_tracker_free`].
///
/// # Safety
/// `h` must point to valid hyperparameters, `prompt` to `width * height`
/// bytes, `out` to a writable pointer. `user` must stay valid for the
/// tracker's lifetime.
#[no_mangle]
pub unsafe extern "C" fn tm_tracker_new(
    h: *const TmHyperparams,
    object_id: u32,
    prompt: *const u8,
    width: u32,
    height: u32,
    decode: TmDecodeFn,
    user: *mut c_void,
    out: *mut *mut TmTracker,
) -> TmStatus {
    guard(|| {
        non_null(h, "h")?;
        non_null(out, "out")?;
        let decode = decode.ok_or_else(|| Fail::new(TmStatus::NullPointer, "decode is null"))?;
        if width == 0 || height == 0 {
            return Err(Fail::new(TmStatus::InvalidArgument, "canvas must be non-empty"));
        }
        let hyper = Hyperparams::from(*h);
        hyper.validate().map_err(|e| Fail::new(TmStatus::Config, e.to_string()))?;
        let mask = read_mask(prompt, width, height, "prompt")?;
        let tracker = TmTracker {
            state: BeamState::from_prompt(object_id, FrameRecord::prompt(0, mask, Vec::new())),
            backend: CallbackBackend { decode, user },
            memory: MemoryPolicy::object_aware(&hyper),
            hyper,
            width,
            height,
        };
        *out = Box::into_raw(Box::new(tracker));
        Ok(())
    })
}

/// Advances the tracker by one frame. On failure the tracker is unchanged.
///
/// # Safety
/// `tracker` must come from [`tm_tracker_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn tm_tracker_step(tracker: *mut TmTracker) -> TmStatus {
    guard(|| {
        non_null(tracker, "tracker")?;
        let t = &mut *tracker;
        let frame = FrameRef::index(t.state.time + 1);
        let (next, _) = step(&t.state, &frame, &t.backend, &t.memory, &t.hyper, SearchOptions::default()).map_err(
            |e| {
                let status = match e {
                    treemem::error::SearchError::Domain(_) => TmStatus::Domain,
                    treemem::error::SearchError::Backend { .. } => TmStatus::Backend,
                    _ => TmStatus::InvalidArgument,
                };
                Fail::new(status, e.to_string())
            },
        )?;
        t.state = next;
        Ok(())
    })
}

/// Current time (0 right after creation) and best cumulative score.
///
/// # Safety
/// `tracker` as for [`tm_tracker_step`]; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn tm_tracker_status(tracker: *const TmTracker, time: *mut u32, best_score: *mut f64) -> TmStatus {
    guard(|| {
        non_null(tracker, "tracker")?;
        let t = &*tracker;
        if !time.is_null() {
            *time = t.state.time;
        }
        if !best_score.is_null() {
            *best_score = t.state.leaves.first().map_or(f64::NEG_INFINITY, |l| l.cumulative_score);
        }
        Ok(())
    })
}

/// Writes the best pathway's masks, frame 0 first, into `masks` and their
/// predicted IoUs into `ious` (may be null). Both hold `time + 1` entries.
///
/// # Safety
/// `masks` must point to `cap_frames * width * height` writable bytes and
/// `ious`, if not null, to `cap_frames` doubles.
#[no_mangle]
pub unsafe extern "C" fn tm_tracker_masklet(
    tracker: *const TmTracker,
    masks: *mut u8,
    ious: *mut f64,
    cap_frames: usize,
) -> TmStatus {
    guard(|| {
        non_null(tracker, "tracker")?;
        let t = &*tracker;
        let masklet = finalize(&t.state).map_err(|e| Fail::new(TmStatus::InvalidArgument, e.to_string()))?;
        let frames = masklet.records.len();
        if cap_frames < frames {
            return Err(Fail::new(TmStatus::BufferTooSmall, format!("need {frames} frames")));
        }
        non_null(masks, "masks")?;
        let n = t.width as usize * t.height as usize;
        let out = std::slice::from_raw_parts_mut(masks, frames * n);
        for (i, r) in masklet.records.iter().enumerate() {
            write_mask(&r.mask, &mut out[i * n..(i + 1) * n]);
            if !ious.is_null() {
                *ious.add(i) = r.predicted_iou;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `tracker` must be null or come from [`tm_tracker_new`]; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tm_tracker_free(tracker: *mut TmTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}
