use std::cell::Cell;

/// How replicate loops are scheduled.
///
/// `Auto` means parallel when the `parallel` feature is compiled in and
/// sequential otherwise. Output never depends on the choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Auto,
    Sequential,
    Parallel,
}

thread_local! {
    static OVERRIDE: Cell<Option<Execution>> = const { Cell::new(None) };
}

/// Run `f` with every replicate loop on this thread forced to `mode`.
pub fn with_execution<T>(mode: Execution, f: impl FnOnce() -> T) -> T {
    let prev = OVERRIDE.with(|c| c.replace(Some(mode)));
    struct Restore(Option<Execution>);
    impl Drop for Restore {
        fn drop(&mut self) {
            OVERRIDE.with(|c| c.set(self.0));
        }
    }
    let _restore = Restore(prev);
    f()
}

fn resolved() -> Execution {
    match OVERRIDE.with(|c| c.get()).unwrap_or_default() {
        Execution::Auto if cfg!(feature = "parallel") => Execution::Parallel,
        Execution::Auto => Execution::Sequential,
        m => m,
    }
}

/// `(0..count).map(f)` collected in index order, possibly in parallel.
pub fn map_reps<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match resolved() {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            // nested parallel loops inherit the caller's mode
            let mode = OVERRIDE.with(|c| c.get());
            (0..count)
                .into_par_iter()
                .map(|i| match mode {
                    Some(m) => with_execution(m, || f(i)),
                    None => f(i),
                })
                .collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Deterministic chunked fold over `0..count`.
///
/// Indices are split into fixed chunks of `chunk` consecutive items; each chunk
/// is folded sequentially from `init()`, and chunk results are merged left to
/// right in chunk order. The result is identical for any worker count.
pub fn fold_chunks<A, I, F, M>(count: usize, chunk: usize, init: I, fold: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunk = chunk.max(1);
    let n_chunks = count.div_ceil(chunk);
    let parts = map_reps(n_chunks, |c| {
        let mut acc = init();
        for i in c * chunk..((c + 1) * chunk).min(count) {
            fold(&mut acc, i);
        }
        acc
    });
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}
