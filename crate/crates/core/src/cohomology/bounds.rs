use serde::{Deserialize, Serialize};

use super::ring::{check_ring, class_mul, cwgt_lower, RingClass};
use crate::error::{Error, Result};

/// `cat(L_p^{2n−1})`, as `1 + cwgt(α·β^{n−1})`, checked against the `2n`
/// critical points of a perfect Morse function.
pub fn cat_lens(p: u32, n: usize) -> Result<usize> {
    check_ring(p, n)?;
    let top = class_mul(&RingClass::alpha(p, n)?, &RingClass::monomial(p, n, 1, 0, n - 1)?)?;
    if top.is_zero() {
        return Err(Error::Contract(format!("α·β^{} vanishes in the lens ring", n - 1)));
    }
    let lower = 1 + cwgt_lower(&top)?;
    let upper = 2 * n;
    if lower != upper {
        return Err(Error::Contract(format!(
            "category bounds disagree: lower {lower}, upper {upper}"
        )));
    }
    Ok(lower)
}

/// Degree window `[a, b]` of the cohomological index, in `H*(L_p^{2N−1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub a: usize,
    pub b: usize,
    pub p: u32,
    pub big_n: usize,
}

impl IndexWindow {
    pub fn new(a: usize, b: usize, p: u32, big_n: usize) -> Result<Self> {
        check_ring(p, big_n)?;
        if a > b || b > 2 * big_n {
            return Err(Error::domain(format!(
                "window [{a}, {b}] is not inside [0, {}]",
                2 * big_n
            )));
        }
        Ok(IndexWindow { a, b, p, big_n })
    }
}

/// Lower bound on the number of critical values between two sublevels whose
/// indices are `a` and `b`: the largest `1 + cwgt(α^ε β^e)` over monomials
/// that fit the window when multiplied onto a class of degree `a`.
pub fn ls_bound(w: &IndexWindow) -> usize {
    if w.b <= w.a {
        return 0;
    }
    let parity = w.a % 2;
    let mut best = 0;
    for epsilon in 0..=1usize {
        if parity + epsilon > 1 {
            continue;
        }
        for e in 0..w.big_n {
            if w.a + epsilon + 2 * e < w.b {
                best = best.max(1 + epsilon + 2 * e);
            }
        }
    }
    best
}

/// `2n`: half the critical-value count over a length-2 window, for either
/// parity of the starting index.
pub fn shift_bound(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let big_n = 2 * n + 1;
    let even = ls_bound(&IndexWindow::new(0, 4 * n, 3, big_n)?);
    let odd = ls_bound(&IndexWindow::new(1, 4 * n + 1, 3, big_n)?);
    let (e, o) = (even.div_ceil(2), odd.div_ceil(2));
    if e != o {
        return Err(Error::Contract(format!("even and odd windows disagree: {e} vs {o}")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(cat_lens(3, 2).unwrap(), 4);
        assert_eq!(cat_lens(5, 3).unwrap(), 6);
        assert_eq!(cat_lens(7, 1).unwrap(), 2);
        assert!(matches!(cat_lens(2, 2), Err(Error::Unsupported(_))));

        assert_eq!(ls_bound(&IndexWindow::new(10, 18, 3, 12).unwrap()), 8);
        assert_eq!(ls_bound(&IndexWindow::new(11, 19, 3, 12).unwrap()), 7);
        assert_eq!(ls_bound(&IndexWindow::new(0, 14, 5, 7).unwrap()), 14);
        assert_eq!(ls_bound(&IndexWindow::new(4, 4, 5, 7).unwrap()), 0);

        assert_eq!(shift_bound(2).unwrap(), 4);
        assert_eq!(shift_bound(1).unwrap(), 2);
    }
}
