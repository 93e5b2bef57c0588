//! Border handling shared by the convolution and rank filters.

/// Maps a possibly out-of-range coordinate into `0..len` by reflect-101
/// mirroring (`dcb|abcd|cba`): the edge sample itself is never duplicated.
///
/// Offsets larger than the image are folded repeatedly, so a radius-15 kernel
/// on a 2-pixel image still lands on valid samples.
#[inline]
pub fn reflect101(index: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut i = index.rem_euclid(period);
    if i >= len as isize {
        i = period - i;
    }
    i as usize
}

/// Clamps to the nearest valid coordinate (edge replication).
#[inline]
pub fn replicate(index: isize, len: usize) -> usize {
    index.clamp(0, len as isize - 1) as usize
}
