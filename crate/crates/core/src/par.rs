//! Data-parallel helpers. With the `parallel` feature these dispatch to rayon;
//! without it they run the same closures sequentially. Results never depend on
//! scheduling: maps preserve input order and searches return the lowest index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f` applied to every index in `0..len`, in index order.
pub fn map_range<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// `f` applied to every element, in input order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// The hit with the lowest index in `0..len`, if any.
pub fn find_first<R, F>(len: u64, f: F) -> Option<(u64, R)>
where
    R: Send,
    F: Fn(u64) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len)
            .into_par_iter()
            .find_map_first(|k| f(k).map(|r| (k, r)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).find_map(|k| f(k).map(|r| (k, r)))
    }
}

/// Like [`find_first`] over a slice.
pub fn find_first_in<T, R, F>(items: &[T], f: F) -> Option<(usize, R)>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items
            .par_iter()
            .enumerate()
            .find_map_first(|(k, t)| f(t).map(|r| (k, r)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        items
            .iter()
            .enumerate()
            .find_map(|(k, t)| f(t).map(|r| (k, r)))
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_stable() {
        assert_eq!(map_range(5, |k| k * k), vec![0, 1, 4, 9, 16]);
        assert_eq!(map(&[3, 1, 2], |x| x + 1), vec![4, 2, 3]);
    }

    #[test]
    fn lowest_hit_wins() {
        let hit = find_first(1000, |k| (k % 7 == 3).then_some(k * 2));
        assert_eq!(hit, Some((3, 6)));
        assert_eq!(find_first(10, |_| None::<()>), None);
        let items = [5, 8, 9, 12];
        assert_eq!(find_first_in(&items, |&x| (x % 3 == 0).then_some(x)), Some((2, 9)));
    }
}
