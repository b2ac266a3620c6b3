//! C ABI over the core library: opaque handles, integer status codes, and
//! caller-owned output buffers. Every entry point catches panics and maps
//! them to `MD_STATUS_INTERNAL`, so unwinding never crosses the boundary.

use std::panic::{catch_unwind, AssertUnwindSafe};

use metric_descent::cut::{self, Cut, CutInstance, RoundConfig};
use metric_descent::embed::{ReweightedProvider, Embedding, PartitionProvider};
use metric_descent::gen;
use metric_descent::glue::{self, PipelineConfig};
use metric_descent::metric::{self, MetricSpace};
use metric_descent::sdp;
use metric_descent::seeds::SeedStream;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdStatus {
    MdStatusOk = 0,
    /// A required pointer argument was null.
    MdStatusNullArg = 1,
    /// The input matrix is not a metric (or sizes are inconsistent).
    MdStatusInvalidMetric = 2,
    /// The operation requires a negative-type metric.
    MdStatusNotNegativeType = 3,
    /// The SDP solver failed or reported infeasibility.
    MdStatusSolver = 4,
    /// An index or buffer length was out of range.
    MdStatusBounds = 5,
    /// An internal invariant failed.
    MdStatusInternal = 6,
}

use MdStatus::*;

/// Opaque metric space handle.
pub struct MdMetric(MetricSpace);
/// Opaque embedding handle.
pub struct MdEmbedding(Embedding);
/// Opaque sparsest-cut instance handle.
pub struct MdCutInstance(CutInstance);

fn guard(f: impl FnOnce() -> MdStatus) -> MdStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MdStatusInternal)
}

unsafe fn slice_matrix(n: usize, data: *const f64) -> Vec<Vec<f64>> {
    let flat = std::slice::from_raw_parts(data, n * n);
    flat.chunks(n).map(<[f64]>::to_vec).collect()
}

/// Builds a metric space from a row-major `n * n` distance matrix.
///
/// # Safety
/// `d` must point to `n * n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_metric_create(
    n: usize,
    d: *const f64,
    out: *mut *mut MdMetric,
) -> MdStatus {
    if d.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        let rows = slice_matrix(n, d);
        match MetricSpace::new(rows, None) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(MdMetric(m)));
                MdStatusOk
            }
            Err(_) => MdStatusInvalidMetric,
        }
    })
}

/// Builds the Hamming cube `{0,1}^dim` metric.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn md_metric_hypercube(dim: u32, out: *mut *mut MdMetric) -> MdStatus {
    if out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| match gen::hypercube(dim) {
        Ok(m) => {
            *out = Box::into_raw(Box::new(MdMetric(m)));
            MdStatusOk
        }
        Err(_) => MdStatusBounds,
    })
}

/// Releases a metric handle; null is a no-op.
///
/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn md_metric_free(m: *mut MdMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of points.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_metric_n(m: *const MdMetric) -> usize {
    if m.is_null() {
        return 0;
    }
    (*m).0.n()
}

/// Distance between two points.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_metric_dist(
    m: *const MdMetric,
    i: usize,
    j: usize,
    out: *mut f64,
) -> MdStatus {
    if m.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    let space = &(*m).0;
    if i >= space.n() || j >= space.n() {
        return MdStatusBounds;
    }
    *out = space.dist(i, j);
    MdStatusOk
}

/// Writes 1 to `out` when the metric is of negative type, 0 otherwise.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_metric_is_negative_type(
    m: *const MdMetric,
    out: *mut i32,
) -> MdStatus {
    if m.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        let space = &(*m).0;
        match metric::is_negative_type(space, metric::negative_type_tol(space)) {
            Ok(v) => {
                *out = i32::from(v.is_negative_type);
                MdStatusOk
            }
            Err(_) => MdStatusInternal,
        }
    })
}

/// Runs the full embedding pipeline; `use_reweighted != 0` selects the reweighted
/// hyperplane ensemble (requires a negative-type metric), 0 the padded
/// partition ensemble.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_embed_full(
    m: *const MdMetric,
    seed: u64,
    samples: usize,
    use_reweighted: i32,
    out: *mut *mut MdEmbedding,
) -> MdStatus {
    if m.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        let space = &(*m).0;
        let cfg = PipelineConfig { t_samples: samples.max(1), ..PipelineConfig::default() };
        let stream = SeedStream::new(seed, "capi/embed");
        let result = if use_reweighted != 0 {
            let p = ReweightedProvider { cfg: Default::default(), t_samples: samples.max(1) };
            glue::full_embedding(space, &p, 1.0, 0.5, &cfg, &stream)
        } else {
            let p = PartitionProvider { t_samples: samples.max(1) };
            glue::full_embedding(space, &p, 1.0, 1.0, &cfg, &stream)
        };
        match result {
            Ok(r) => {
                *out = Box::into_raw(Box::new(MdEmbedding(r.embedding)));
                MdStatusOk
            }
            Err(_) => MdStatusNotNegativeType,
        }
    })
}

/// Least-distortion Euclidean re-embedding; writes the contraction floor
/// `eps` (distortion is `1/sqrt(eps)`).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_min_distortion(
    m: *const MdMetric,
    tol: f64,
    eps_out: *mut f64,
    out: *mut *mut MdEmbedding,
) -> MdStatus {
    if m.is_null() || eps_out.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        let space = &(*m).0;
        let all: Vec<usize> = (0..space.n()).collect();
        match sdp::min_distortion_embedding(space, &all, tol, 50000) {
            Ok((e, eps)) => {
                *eps_out = eps;
                *out = Box::into_raw(Box::new(MdEmbedding(e)));
                MdStatusOk
            }
            Err(_) => MdStatusSolver,
        }
    })
}

/// Releases an embedding handle; null is a no-op.
///
/// # Safety
/// `e` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn md_embedding_free(e: *mut MdEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Ambient dimension of the embedding.
///
/// # Safety
/// `e` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn md_embedding_dim(e: *const MdEmbedding) -> usize {
    if e.is_null() {
        return 0;
    }
    (*e).0.dim
}

/// Copies the image of point `i` into `buf` (`len >= dim` required).
///
/// # Safety
/// `e` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn md_embedding_point(
    e: *const MdEmbedding,
    i: usize,
    buf: *mut f64,
    len: usize,
) -> MdStatus {
    if e.is_null() || buf.is_null() {
        return MdStatusNullArg;
    }
    let emb = &(*e).0;
    if i >= emb.n || len < emb.dim {
        return MdStatusBounds;
    }
    let dst = std::slice::from_raw_parts_mut(buf, emb.dim);
    dst.copy_from_slice(emb.eval(i));
    MdStatusOk
}

/// Bi-Lipschitz distortion of the embedding against the metric.
///
/// # Safety
/// All pointers must be valid handles.
#[no_mangle]
pub unsafe extern "C" fn md_embedding_distortion(
    m: *const MdMetric,
    e: *const MdEmbedding,
    out: *mut f64,
) -> MdStatus {
    if m.is_null() || e.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| match glue::evaluate_distortion(&(*m).0, &(*e).0) {
        Ok(r) => {
            *out = r.distortion;
            MdStatusOk
        }
        Err(_) => MdStatusInternal,
    })
}

/// Builds a sparsest-cut instance from row-major `n * n` capacity and
/// demand matrices.
///
/// # Safety
/// `w_n` and `w_d` must point to `n * n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_cut_instance_create(
    n: usize,
    w_n: *const f64,
    w_d: *const f64,
    out: *mut *mut MdCutInstance,
) -> MdStatus {
    if w_n.is_null() || w_d.is_null() || out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        match CutInstance::new(slice_matrix(n, w_n), slice_matrix(n, w_d)) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(MdCutInstance(inst)));
                MdStatusOk
            }
            Err(_) => MdStatusInvalidMetric,
        }
    })
}

/// Releases a cut instance handle; null is a no-op.
///
/// # Safety
/// `inst` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn md_cut_instance_free(inst: *mut MdCutInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// SDP relaxation plus sweep rounding; writes the cut sides (0/1 per
/// vertex) and its sparsity.
///
/// # Safety
/// `side_out` must hold `n` bytes; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_round_sdp(
    inst: *const MdCutInstance,
    seed: u64,
    tol: f64,
    side_out: *mut u8,
    side_len: usize,
    phi_out: *mut f64,
) -> MdStatus {
    if inst.is_null() || side_out.is_null() || phi_out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        let inst = &(*inst).0;
        if side_len < inst.n {
            return MdStatusBounds;
        }
        let cfg = RoundConfig { tol, ..RoundConfig::default() };
        let stream = SeedStream::new(seed, "capi/round");
        match cut::round_sdp(inst, &cfg, &stream) {
            Ok((cut, phi, _)) => {
                write_cut(&cut, side_out);
                *phi_out = phi;
                MdStatusOk
            }
            Err(_) => MdStatusSolver,
        }
    })
}

/// Exact sparsest cut by enumeration (`n <= 24`).
///
/// # Safety
/// `side_out` must hold `n` bytes; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn md_brute_force_cut(
    inst: *const MdCutInstance,
    side_out: *mut u8,
    side_len: usize,
    phi_out: *mut f64,
) -> MdStatus {
    if inst.is_null() || side_out.is_null() || phi_out.is_null() {
        return MdStatusNullArg;
    }
    guard(|| {
        let inst = &(*inst).0;
        if side_len < inst.n {
            return MdStatusBounds;
        }
        match cut::brute_force_optimum(inst) {
            Ok((cut, phi)) => {
                write_cut(&cut, side_out);
                *phi_out = phi;
                MdStatusOk
            }
            Err(_) => MdStatusBounds,
        }
    })
}

unsafe fn write_cut(cut: &Cut, side_out: *mut u8) {
    let dst = std::slice::from_raw_parts_mut(side_out, cut.side.len());
    for (d, &s) in dst.iter_mut().zip(&cut.side) {
        *d = u8::from(s);
    }
}
