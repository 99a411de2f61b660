//! Sliding-window placement along one image axis.

use crate::error::{validation, Result};

/// Start positions of `k`-wide windows along an axis of length `n`:
/// `0, stride, 2·stride, …`, plus `n − k` if the stride skips it.
pub fn window_starts(n: usize, k: usize, stride: usize) -> Result<Vec<usize>> {
    if k == 0 || stride == 0 {
        return Err(validation("window size and stride must be positive"));
    }
    if n < k {
        return Err(validation(format!("window of size {k} does not fit an axis of length {n}")));
    }
    let last = n - k;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    if starts.last() != Some(&last) {
        starts.push(last);
    }
    Ok(starts)
}

/// Start of the `l`-wide context patch around a window at `start`: centered
/// when possible, shifted inward at the borders. Requires `n >= l > k`.
pub fn outer_start(start: usize, n: usize, k: usize, l: usize) -> usize {
    let margin = (l - k) / 2;
    start.saturating_sub(margin).min(n - l)
}

/// Number of stride-1 windows of size `k` covering position `i` on an
/// axis of length `n`.
pub fn coverage(i: usize, n: usize, k: usize) -> usize {
    (i + 1).min(k).min(n - k + 1).min(n - i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_one_visits_everything() {
        assert_eq!(window_starts(5, 2, 1).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(window_starts(3, 3, 1).unwrap(), vec![0]);
        assert!(window_starts(2, 3, 1).is_err());
    }

    #[test]
    fn last_window_is_always_included() {
        assert_eq!(window_starts(10, 3, 3).unwrap(), vec![0, 3, 6, 7]);
        assert_eq!(window_starts(9, 3, 3).unwrap(), vec![0, 3, 6]);
    }

    #[test]
    fn outer_patch_contains_window() {
        for n in 6..20 {
            for (k, l) in [(1, 3), (2, 5), (3, 4), (4, 8)] {
                if n < l {
                    continue;
                }
                for s in 0..=n - k {
                    let o = outer_start(s, n, k, l);
                    assert!(o <= s && s + k <= o + l && o + l <= n);
                }
            }
        }
        // interior windows are centered
        assert_eq!(outer_start(10, 64, 10, 14), 8);
        assert_eq!(outer_start(0, 64, 10, 14), 0);
        assert_eq!(outer_start(54, 64, 10, 14), 50);
    }
}
