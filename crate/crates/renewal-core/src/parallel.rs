//! Minimal deterministic fork-join helper for independent evaluations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `f` to every index in `0..len` on up to `threads` worker threads
/// (zero means the machine's available parallelism) and returns the results
/// in index order. The first error aborts remaining work and is returned.
/// Output order never depends on scheduling.
pub fn map_indexed<U, F, E>(len: usize, threads: usize, f: F) -> Result<Vec<U>, E>
where
    U: Send,
    E: Send,
    F: Fn(usize) -> Result<U, E> + Sync,
{
    let requested = if threads == 0 { default_threads() } else { threads };
    let workers = requested.min(len.max(1));
    if workers <= 1 || len <= 1 {
        return (0..len).map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<U>>> = (0..len).map(|_| Mutex::new(None)).collect();
    let failure: Mutex<Option<E>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= len || failure.lock().unwrap().is_some() {
                    return;
                }
                match f(i) {
                    Ok(v) => *slots[i].lock().unwrap() = Some(v),
                    Err(e) => {
                        let mut slot = failure.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(e);
                        }
                        return;
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("worker filled every slot"))
        .collect())
}

/// Default worker count: the machine's available parallelism.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
