//! Small integer/float helpers that `core` does not provide.

/// Relative slack applied before `ceil` so values that are integral up to
/// rounding error (e.g. `4 * 64^(1/3)`) do not round up an extra step.
const CEIL_SLACK: f64 = 1e-12;

pub(crate) fn ceil_tol(x: f64) -> f64 {
    libm::ceil(x - libm::fabs(x) * CEIL_SLACK)
}

pub(crate) fn is_pow2(x: usize) -> bool {
    x != 0 && x & (x - 1) == 0
}

pub(crate) fn log2_exact(x: usize) -> u32 {
    debug_assert!(is_pow2(x));
    x.trailing_zeros()
}

pub(crate) fn next_pow2(x: usize) -> usize {
    x.next_power_of_two()
}

pub(crate) fn prev_pow2(x: usize) -> usize {
    debug_assert!(x > 0);
    1 << (usize::BITS - 1 - x.leading_zeros())
}
