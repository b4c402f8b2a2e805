use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Seeded shuffle followed by contiguous slicing into train/val/test.
///
/// Validation and test sizes are `floor(N·fraction)`; train takes the remainder.
pub fn split<T: Clone>(
    records: &[T],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let (ft, fv, fs) = fractions;
    if ft <= 0.0 || fv <= 0.0 || fs <= 0.0 || ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must be positive and sum to 1, got ({ft}, {fv}, {fs})"
        )));
    }
    let n = records.len();
    let n_val = (n as f64 * fv).floor() as usize;
    let n_test = (n as f64 * fs).floor() as usize;
    let n_train = n - n_val - n_test;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Degenerate(format!(
            "split of {n} records leaves an empty slice ({n_train}/{n_val}/{n_test})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).stream("split").shuffle(&mut order);
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_val]),
        pick(&order[n_train + n_val..]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_floor_rule() {
        let items: Vec<u32> = (0..10).collect();
        let (a, b, c) = split(&items, (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        let (a, b, c) = split(&(0..17).collect::<Vec<u32>>(), (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (15, 1, 1));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let items: Vec<u32> = (0..100).collect();
        let first = split(&items, (0.8, 0.1, 0.1), 5).unwrap();
        assert_eq!(first, split(&items, (0.8, 0.1, 0.1), 5).unwrap());
        assert_ne!(first, split(&items, (0.8, 0.1, 0.1), 6).unwrap());
    }

    #[test]
    fn disjoint_and_exhaustive() {
        let items: Vec<u32> = (0..57).collect();
        let (a, b, c) = split(&items, (0.6, 0.2, 0.2), 3).unwrap();
        let mut all: Vec<u32> = a.into_iter().chain(b).chain(c).collect();
        all.sort();
        assert_eq!(all, items);
    }

    #[test]
    fn errors() {
        let items: Vec<u32> = (0..5).collect();
        assert!(matches!(split(&items, (0.8, 0.1, 0.1), 0), Err(Error::Degenerate(_))));
        assert!(matches!(split(&items, (0.5, 0.1, 0.1), 0), Err(Error::Config(_))));
        assert!(matches!(split(&items, (1.0, 0.0, 0.0), 0), Err(Error::Config(_))));
    }
}
