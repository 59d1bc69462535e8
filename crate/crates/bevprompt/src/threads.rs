//! Deterministic per-item parallelism: results come back in input order
//! regardless of thread count.

/// Maps `f` over `0..n`, splitting the index range across up to `threads`
/// scoped workers. Output order is by index, so the result is identical for
/// any thread count.
pub fn par_map_indexed<T, F>(threads: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(n.max(1));
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (w, piece) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            let start = w * chunk;
            scope.spawn(move || {
                for (offset, slot) in piece.iter_mut().enumerate() {
                    *slot = Some(f(start + offset));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("worker filled slot")).collect()
}
