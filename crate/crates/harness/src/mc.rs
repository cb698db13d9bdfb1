//! Deterministic parallel fan-out over path indices. Work is cut into
//! fixed 256-index blocks; blocks run on however many workers rayon has,
//! and the per-block states are combined sequentially in block order. The
//! estimates therefore depend only on the seed and the index range, never
//! on scheduling.

use rayon::prelude::*;

use crate::stats::Welford;

pub const BLOCK_SIZE: u64 = 256;

/// Parallel fold over `0..items` with a deterministic reduction: `fold`
/// accumulates indices into a per-block state, `merge` combines block
/// states strictly left to right.
pub fn map_reduce<S: Send>(
    items: u64,
    init: impl Fn() -> S + Sync,
    fold: impl Fn(&mut S, u64) + Sync,
    merge: impl Fn(S, S) -> S,
) -> S {
    let blocks = items.div_ceil(BLOCK_SIZE);
    let states: Vec<S> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut state = init();
            let lo = b * BLOCK_SIZE;
            let hi = ((b + 1) * BLOCK_SIZE).min(items);
            for i in lo..hi {
                fold(&mut state, i);
            }
            state
        })
        .collect();
    states.into_iter().fold(init(), merge)
}

/// Mean/variance of one statistic over an ensemble of path indices.
pub fn ensemble(paths: u64, stat: impl Fn(u64) -> f64 + Sync) -> Welford {
    map_reduce(paths, Welford::default, |w, p| w.push(stat(p)), Welford::merge)
}

/// Mean/variance of several statistics computed from a shared per-path
/// simulation; `stat` fills one slot per component.
pub fn ensemble_vec(
    paths: u64,
    width: usize,
    stat: impl Fn(u64, &mut [f64]) + Sync,
) -> Vec<Welford> {
    map_reduce(
        paths,
        || vec![Welford::default(); width],
        |ws, p| {
            let mut row = vec![0.0; width];
            stat(p, &mut row);
            for (w, x) in ws.iter_mut().zip(&row) {
                w.push(*x);
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| Welford::merge(x, y)).collect(),
    )
}

/// Like `ensemble`, but also tracks the maximum of a second per-path
/// statistic (typical pairing: a mean estimate plus a worst-case guard).
pub fn ensemble_with_max(
    paths: u64,
    stat: impl Fn(u64) -> (f64, f64) + Sync,
) -> (Welford, f64) {
    map_reduce(
        paths,
        || (Welford::default(), f64::NEG_INFINITY),
        |(w, m), p| {
            let (x, y) = stat(p);
            w.push(x);
            *m = m.max(y);
        },
        |(wa, ma), (wb, mb)| (Welford::merge(wa, wb), ma.max(mb)),
    )
}
