//! Bounded parallel fan-out over a shared backend.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

/// Default number of in-flight requests.
pub const DEFAULT_CONCURRENCY: usize = 4;

/// Apply `f` to every item with at most `concurrency` invocations in
/// flight, returning results in input order. Results correlate to
/// inputs by index, never by completion order. `concurrency` 0 is
/// treated as 1.
pub fn parallel_map<T, U, F>(items: &[T], concurrency: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    let n = items.len();
    let workers = concurrency.max(1).min(n.max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, U)>();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                if tx.send((i, f(i, &items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
    });

    let mut slots: Vec<Option<U>> = Vec::with_capacity(n);
    slots.resize_with(n, || None);
    for (i, value) in rx {
        slots[i] = Some(value);
    }
    slots
        .into_iter()
        .map(|s| s.expect("every index produced exactly once"))
        .collect()
}
