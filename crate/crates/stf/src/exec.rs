//! Data-parallel helpers. With the `parallel` feature (default) these run
//! on rayon; otherwise they fall back to sequential loops. Results are
//! identical either way: work items are independent and ordered.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

#[cfg(feature = "parallel")]
pub fn map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, R: Send, F: Fn(&T) -> R + Sync + Send>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Apply `f` to equally sized mutable chunks, passing each chunk's index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, mode: ExecMode, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, chunk)| f(i, chunk));
        }
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => {
            for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
                f(i, chunk);
            }
        }
        ExecMode::Sequential => {
            for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
                f(i, chunk);
            }
        }
    }
}
