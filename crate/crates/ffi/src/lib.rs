//! C interface to photonlab.
//!
//! Objects are opaque handles created by `phl_*` constructors and released
//! with the matching `*_free`. Every fallible call returns a [`PhlStatus`];
//! on failure [`phl_last_error`] describes the problem. Results are written
//! through out-pointers, which are left untouched on failure.
//!
//! Handles are not thread-safe; use one per thread or synchronize.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use photonlab::correlator::{
    analytic_g2, build_histogram, normalize_g2, pulse_integrated_g2, CoincidenceHistogram, G2Estimate, G2Model,
    HistogramMode, HistogramSettings,
};
use photonlab::detection::{detect, DetectorConfig};
use photonlab::emitters::{gen_coherent, CoherentSourceConfig, EmitterConfig};
use photonlab::experiment::{run_combined, ExperimentConfig};
use photonlab::optics::{beamsplitter_route, SpectralLine};
use photonlab::{export, io, Error, EventStream, Tag};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A value violates its documented range.
    InvalidArgument = 3,
    /// Malformed JSON or timestamp file.
    ParseError = 4,
    Io = 5,
    /// Not enough events or coincidences for the requested estimate.
    InsufficientData = 6,
    /// Index past the end of a handle's data.
    OutOfBounds = 7,
    /// Internal error; the library state is unaffected but the call failed.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhlHistogramMode {
    StartStop = 0,
    AllPairs = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhlDetector {
    pub efficiency: f64,
    pub jitter_fwhm_ps: f64,
    pub dead_time_ps: f64,
    /// 1/s.
    pub dark_rate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhlG2Bin {
    pub tau_ps: i64,
    pub g2: f64,
    /// Standard error of `g2`.
    pub sigma: f64,
    pub counts: u64,
}

/// Photon or click timestamps, ps, sorted.
pub struct PhlStream(EventStream);

pub struct PhlHistogram(CoincidenceHistogram);

pub struct PhlG2(G2Estimate);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PhlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Json(_) | Error::Format(_) | Error::Unsorted { .. } | Error::OutOfRange { .. } => {
                PhlStatus::ParseError
            }
            Error::Io(_) => PhlStatus::Io,
            Error::InsufficientData(_) | Error::UndefinedNormalization(_) => PhlStatus::InsufficientData,
            _ => PhlStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(PhlStatus::Io, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PhlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PhlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            PhlStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(PhlStatus::NullPointer, format!("{name} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn as_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PhlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or "" after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn phl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn phl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- streams ----

/// Build a stream from `len` sorted timestamps within `[0, duration_ps]`.
///
/// # Safety
/// `times` must point to `len` readable values (may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn phl_stream_from_times(
    times: *const u64,
    len: usize,
    duration_ps: u64,
    out: *mut *mut PhlStream,
) -> PhlStatus {
    guard(|| {
        let times = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(as_ref(times, "times")?, len).to_vec()
        };
        let s = EventStream::from_times(times, Tag::Signal, duration_ps)?;
        put(out, boxed(PhlStream(s)), "out")
    })
}

/// Read a binary or CSV timestamp file. The duration is the last timestamp.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn phl_stream_read(path: *const c_char, out: *mut *mut PhlStream) -> PhlStatus {
    guard(|| {
        let file = io::read_timestamp_file(Path::new(as_str(path, "path")?))?;
        let duration = file.last_time().unwrap_or(0);
        let s = EventStream::from_times(file.times, Tag::Signal, duration)?;
        put(out, boxed(PhlStream(s)), "out")
    })
}

/// Write a stream in the binary timestamp format.
///
/// # Safety
/// `stream` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn phl_stream_write_binary(
    stream: *const PhlStream,
    path: *const c_char,
    channel: u16,
) -> PhlStatus {
    guard(|| {
        let s = as_ref(stream, "stream")?;
        let mut w = BufWriter::new(File::create(as_str(path, "path")?)?);
        io::write_binary(&mut w, &s.0, channel)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    })
}

/// Number of events; 0 for a null handle.
///
/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phl_stream_len(stream: *const PhlStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phl_stream_duration_ps(stream: *const PhlStream) -> u64 {
    stream.as_ref().map_or(0, |s| s.0.duration_ps())
}

/// Copy up to `cap` timestamps into `buf`; the number copied goes to
/// `written`.
///
/// # Safety
/// `stream` must be a live handle and `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn phl_stream_copy_times(
    stream: *const PhlStream,
    buf: *mut u64,
    cap: usize,
    written: *mut usize,
) -> PhlStatus {
    guard(|| {
        let times = as_ref(stream, "stream")?.0.times();
        let n = times.len().min(cap);
        if n > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(times.as_ptr(), buf, n);
        }
        put(written, n, "written")
    })
}

/// # Safety
/// `stream` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phl_stream_free(stream: *mut PhlStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

// ---- generators and optics ----

/// Poisson photon stream of `rate` per second.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn phl_gen_coherent(
    rate: f64,
    duration_s: f64,
    seed: u64,
    out: *mut *mut PhlStream,
) -> PhlStatus {
    guard(|| {
        let s = gen_coherent(&CoherentSourceConfig { rate }, duration_s, seed)?;
        put(out, boxed(PhlStream(s)), "out")
    })
}

/// Any emitter, described by the same JSON object as the `emitter` field of
/// an experiment configuration, e.g. `{"kind": "fock", "n": 2}`.
///
/// # Safety
/// `emitter_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_generate(
    emitter_json: *const c_char,
    duration_s: f64,
    seed: u64,
    out: *mut *mut PhlStream,
) -> PhlStatus {
    guard(|| {
        let cfg: EmitterConfig = serde_json::from_str(as_str(emitter_json, "emitter_json")?).map_err(Error::from)?;
        let s = cfg.generate(duration_s, seed)?;
        put(out, boxed(PhlStream(s)), "out")
    })
}

/// Route each event to `out_a` with probability `reflectance`, else `out_b`.
///
/// # Safety
/// `stream` must be a live handle; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn phl_beamsplitter(
    stream: *const PhlStream,
    reflectance: f64,
    seed: u64,
    out_a: *mut *mut PhlStream,
    out_b: *mut *mut PhlStream,
) -> PhlStatus {
    guard(|| {
        let s = as_ref(stream, "stream")?;
        if out_a.is_null() || out_b.is_null() {
            return Err(null("out_a/out_b"));
        }
        let (a, b) = beamsplitter_route(&s.0, reflectance, seed)?;
        put(out_a, boxed(PhlStream(a)), "out_a")?;
        put(out_b, boxed(PhlStream(b)), "out_b")
    })
}

/// Detector clicks from incident photons.
///
/// # Safety
/// `stream` must be a live handle, `detector` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_detect(
    stream: *const PhlStream,
    detector: *const PhlDetector,
    seed: u64,
    out: *mut *mut PhlStream,
) -> PhlStatus {
    guard(|| {
        let s = as_ref(stream, "stream")?;
        let d = as_ref(detector, "detector")?;
        let cfg = DetectorConfig {
            efficiency: d.efficiency,
            jitter_fwhm_ps: d.jitter_fwhm_ps,
            dead_time_ps: d.dead_time_ps,
            dark_rate: d.dark_rate,
        };
        let clicks = detect(&s.0, &cfg, seed)?;
        put(out, boxed(PhlStream(clicks)), "out")
    })
}

// ---- correlation ----

/// Coincidence histogram of delays `t_b − t_a` over `[−range, +range]`.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_histogram(
    a: *const PhlStream,
    b: *const PhlStream,
    bin_width_ps: u64,
    range_ps: u64,
    mode: PhlHistogramMode,
    out: *mut *mut PhlHistogram,
) -> PhlStatus {
    guard(|| {
        let (a, b) = (as_ref(a, "a")?, as_ref(b, "b")?);
        let mode = match mode {
            PhlHistogramMode::StartStop => HistogramMode::StartStop,
            PhlHistogramMode::AllPairs => HistogramMode::AllPairs,
        };
        let h = build_histogram(&a.0, &b.0, &HistogramSettings::new(bin_width_ps, range_ps, mode))?;
        put(out, boxed(PhlHistogram(h)), "out")
    })
}

/// Number of bins; 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phl_histogram_len(h: *const PhlHistogram) -> usize {
    h.as_ref().map_or(0, |h| h.0.n_bins())
}

/// Delay at the center of bin `index` and its count.
///
/// # Safety
/// `h` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn phl_histogram_bin(
    h: *const PhlHistogram,
    index: usize,
    tau_ps: *mut i64,
    count: *mut u64,
) -> PhlStatus {
    guard(|| {
        let h = &as_ref(h, "histogram")?.0;
        let c = *h
            .counts
            .get(index)
            .ok_or_else(|| Failure(PhlStatus::OutOfBounds, format!("bin {index} of {}", h.n_bins())))?;
        put(tau_ps, h.tau_ps(index), "tau_ps")?;
        put(count, c, "count")
    })
}

/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phl_histogram_free(h: *mut PhlHistogram) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Normalize by the accidental coincidences of independent channels.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_normalize_g2(h: *const PhlHistogram, out: *mut *mut PhlG2) -> PhlStatus {
    guard(|| {
        let g = normalize_g2(&as_ref(h, "histogram")?.0)?;
        put(out, boxed(PhlG2(g)), "out")
    })
}

/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phl_g2_len(g: *const PhlG2) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_g2_bin(g: *const PhlG2, index: usize, out: *mut PhlG2Bin) -> PhlStatus {
    guard(|| {
        let g = &as_ref(g, "g2")?.0;
        let b = g
            .bins
            .get(index)
            .ok_or_else(|| Failure(PhlStatus::OutOfBounds, format!("bin {index} of {}", g.len())))?;
        put(
            out,
            PhlG2Bin {
                tau_ps: b.tau_ps,
                g2: b.g2,
                sigma: b.stderr,
                counts: b.counts,
            },
            "out",
        )
    })
}

/// Pooled g² over bins with `|τ| <= half_width_ps`.
///
/// # Safety
/// `g` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn phl_g2_window(
    g: *const PhlG2,
    half_width_ps: u64,
    value: *mut f64,
    sigma: *mut f64,
) -> PhlStatus {
    guard(|| {
        let (v, e) = as_ref(g, "g2")?.0.window(half_width_ps);
        if v.is_nan() {
            return Err(Failure(PhlStatus::InsufficientData, "no bins within the window".into()));
        }
        put(value, v, "value")?;
        put(sigma, e, "sigma")
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phl_g2_free(g: *mut PhlG2) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// ---- closed forms ----

/// g²(τ) of a model given as JSON, e.g.
/// `{"model": "two_level_cw", "pump_rate": 1e8, "decay_rate": 1e8}`.
///
/// # Safety
/// `model_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_analytic_g2(model_json: *const c_char, tau_s: f64, out: *mut f64) -> PhlStatus {
    guard(|| {
        let m: G2Model = serde_json::from_str(as_str(model_json, "model_json")?).map_err(Error::from)?;
        put(out, analytic_g2(&m, tau_s), "out")
    })
}

/// Central over side peak area for pulsed and Fock models.
///
/// # Safety
/// `model_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_pulse_integrated_g2(model_json: *const c_char, out: *mut f64) -> PhlStatus {
    guard(|| {
        let m: G2Model = serde_json::from_str(as_str(model_json, "model_json")?).map_err(Error::from)?;
        put(out, pulse_integrated_g2(&m)?, "out")
    })
}

/// Fringe visibility at delay τ of a line given as JSON, e.g.
/// `{"center_wavelength_nm": 700, "shape": "lorentzian", "linewidth": 1e9}`.
///
/// # Safety
/// `line_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phl_visibility(line_json: *const c_char, tau_s: f64, out: *mut f64) -> PhlStatus {
    guard(|| {
        let line: SpectralLine = serde_json::from_str(as_str(line_json, "line_json")?).map_err(Error::from)?;
        let v = photonlab::optics::visibility_from_spectrum(&line, tau_s)?;
        put(out, v.visibility, "out")
    })
}

// ---- full runs ----

/// Run a complete experiment from a configuration document. When `out_dir`
/// is non-null the result files are written there. When `summary_json` is
/// non-null it receives the run summary, to be released with
/// [`phl_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_dir` null or a
/// NUL-terminated string; `summary_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn phl_simulate_config_json(
    config_json: *const c_char,
    out_dir: *const c_char,
    summary_json: *mut *mut c_char,
) -> PhlStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(as_str(config_json, "config_json")?)?;
        let dir = if out_dir.is_null() {
            None
        } else {
            Some(as_str(out_dir, "out_dir")?)
        };
        let result = run_combined(&cfg)?;
        if let Some(dir) = dir {
            export::write_bundle(&result, Path::new(dir))?;
        }
        if !summary_json.is_null() {
            let text = serde_json::to_string(&result.summary).map_err(Error::from)?;
            let c = CString::new(text).map_err(|e| Failure(PhlStatus::Panic, e.to_string()))?;
            summary_json.write(c.into_raw());
        }
        Ok(())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
