//! Positive decreasing series with a bracketed integral tail.

/// Partial sum plus a tail estimate, with a rigorous bound on the error of `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub error_bound: f64,
    pub terms: usize,
}

/// Sums `term(k)` for `k = 1, 2, ...` where `term` is positive and decreasing.
///
/// `tail(K)` must return `(lo, hi)` with `lo <= sum_{k > K} term(k) <= hi`, typically
/// `lo = int_{K+1}^inf` and `hi = int_K^inf`. Summation stops once the half-width of the
/// bracket drops below `tol` or `max_terms` is reached; the midpoint of the bracket is
/// added to the partial sum.
pub fn sum_with_tail<T, B>(term: T, tail: B, tol: f64, max_terms: usize) -> SeriesSum
where
    T: Fn(u64) -> f64,
    B: Fn(u64) -> (f64, f64),
{
    let mut partial = Compensated::default();
    let mut k: u64 = 0;
    let mut check_at: u64 = 16;
    loop {
        while k < check_at && (k as usize) < max_terms {
            k += 1;
            partial.add(term(k));
        }
        let (lo, hi) = tail(k);
        let half = 0.5 * (hi - lo);
        if half < tol || k as usize >= max_terms {
            return SeriesSum {
                value: partial.total() + 0.5 * (lo + hi),
                error_bound: half.max(0.0),
                terms: k as usize,
            };
        }
        check_at = (check_at * 2).min(max_terms as u64);
    }
}

/// Neumaier summation.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

/// Same bracket, fixed number of terms.
pub fn sum_fixed<T, B>(term: T, tail: B, terms: usize) -> SeriesSum
where
    T: Fn(u64) -> f64,
    B: Fn(u64) -> (f64, f64),
{
    let mut partial = Compensated::default();
    for k in 1..=terms as u64 {
        partial.add(term(k));
    }
    let (lo, hi) = tail(terms as u64);
    SeriesSum {
        value: partial.total() + 0.5 * (lo + hi),
        error_bound: 0.5 * (hi - lo),
        terms,
    }
}
