//! Fixed-order reductions.
//!
//! Floating-point addition is not associative, so a parallel sum is only
//! reproducible if the association order is pinned down. Every reduction in
//! this crate uses the same scheme: the index space is split into chunks of
//! [`CHUNK`] elements, each chunk is folded left to right, and the chunk
//! partials are folded left to right in ascending chunk order. Workers may
//! compute the chunk partials in any order and on any thread; the combination
//! step is what fixes the result.

/// Number of elements per reduction chunk.
///
/// Chosen to match a typical hardware execution-unit width; the exact value
/// only matters in that it is fixed forever (changing it changes every
/// floating-point total in the engine).
pub const CHUNK: usize = 64;

/// Number of chunks covering `n` elements.
#[inline]
pub fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

/// Left-to-right sum of one chunk: elements `[chunk*CHUNK, min((chunk+1)*CHUNK, n))`.
#[inline]
pub fn sum_chunk_by(n: usize, chunk: usize, f: impl Fn(usize) -> f64) -> f64 {
    let lo = chunk * CHUNK;
    let hi = n.min(lo + CHUNK);
    let mut acc = 0.0;
    for i in lo..hi {
        acc += f(i);
    }
    acc
}

/// Chunked sum of `f(0), f(1), ..., f(n-1)` in the fixed order. Empty input
/// sums to `0.0`.
pub fn chunked_sum_by(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut total = 0.0;
    for c in 0..chunk_count(n) {
        total += sum_chunk_by(n, c, &f);
    }
    total
}

/// Chunked sum of a slice in the fixed order.
pub fn chunked_sum(values: &[f64]) -> f64 {
    chunked_sum_by(values.len(), |i| values[i])
}

/// Combine chunk partials (ascending chunk order, left to right).
///
/// `partials[c]` must be the fold of chunk `c`; the result is bit-identical
/// to the corresponding `chunked_sum_by` call no matter which workers
/// produced the partials.
pub fn combine_sum_partials(partials: &[f64]) -> f64 {
    let mut total = 0.0;
    for &p in partials {
        total += p;
    }
    total
}

/// Sum of unsigned counters. Integer addition is associative, but the chunked
/// walk is kept so the serial and team paths are literally the same code.
pub fn chunked_sum_u64(values: &[u64]) -> u64 {
    let mut total = 0u64;
    for c in 0..chunk_count(values.len()) {
        total += sum_chunk_u64(values, c);
    }
    total
}

/// Left-to-right sum of one chunk of counters.
#[inline]
pub fn sum_chunk_u64(values: &[u64], chunk: usize) -> u64 {
    let lo = chunk * CHUNK;
    let hi = values.len().min(lo + CHUNK);
    values[lo..hi].iter().sum()
}

/// Minimum with index over one chunk; strict `<` keeps the earliest index on
/// ties. Returns `None` for an empty chunk range.
#[inline]
pub fn min_chunk(values: &[f64], chunk: usize) -> Option<(f64, usize)> {
    let lo = chunk * CHUNK;
    let hi = values.len().min(lo + CHUNK);
    if lo >= hi {
        return None;
    }
    let mut best = (values[lo], lo);
    for i in lo + 1..hi {
        if values[i] < best.0 {
            best = (values[i], i);
        }
    }
    Some(best)
}

/// Minimum value and its index, lowest index winning ties. Returns `None` for
/// an empty slice.
pub fn chunked_argmin(values: &[f64]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for c in 0..chunk_count(values.len()) {
        if let Some(p) = min_chunk(values, c) {
            best = Some(combine_min_partials(best, p));
        }
    }
    best
}

/// Combine two min-with-index partials; the earlier partial wins ties, so the
/// caller must feed partials in ascending chunk order.
#[inline]
pub fn combine_min_partials(acc: Option<(f64, usize)>, next: (f64, usize)) -> (f64, usize) {
    match acc {
        None => next,
        Some(best) => {
            if next.0 < best.0 {
                next
            } else {
                best
            }
        }
    }
}
