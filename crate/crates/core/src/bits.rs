//! Small helpers for `u64` bitsets.

pub type Mask = u64;

#[inline]
pub fn has(m: Mask, i: usize) -> bool {
    m >> i & 1 == 1
}

#[inline]
pub fn bit(i: usize) -> Mask {
    1 << i
}

/// Mask with the low `n` bits set.
#[inline]
pub fn full(n: usize) -> Mask {
    if n >= 64 {
        !0
    } else {
        (1 << n) - 1
    }
}

pub fn ones(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(i)
    })
}

pub fn to_vec(m: Mask) -> Vec<usize> {
    ones(m).collect()
}

pub fn from_iter(items: impl IntoIterator<Item = usize>) -> Mask {
    items.into_iter().fold(0, |acc, i| acc | bit(i))
}
