//! Order-preserving data-parallel map: rayon when the `parallel` feature is
//! on (the default), a plain sequential loop otherwise. Everything in this
//! crate is pure, so callers need no synchronization either way.

#[cfg(feature = "parallel")]
pub fn par_map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Send + Sync,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<I, O, F>(items: Vec<I>, f: F) -> Vec<O>
where
    F: Fn(I) -> O,
{
    items.into_iter().map(f).collect()
}
