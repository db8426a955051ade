//! Dense inner loops. Slices are walked contiguously so the compiler can
//! vectorize them.

use super::scalar::Scalar;

#[inline]
pub(crate) fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (xa, xb) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + xa[l] * xb[l];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub(crate) fn add_assign<T: Scalar>(y: &mut [T], x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + xi;
    }
}

/// Unfolds a `c x h x w` image into a `(c*9) x (h*w)` patch matrix for a 3x3
/// same-padded convolution. Row `ic*9 + ky*3 + kx` holds the input shifted by
/// `(ky - 1, kx - 1)`, zero outside the image.
pub(crate) fn im2col<T: Scalar>(input: &[T], c: usize, h: usize, w: usize, col: &mut [T]) {
    let hw = h * w;
    for ic in 0..c {
        let plane = &input[ic * hw..(ic + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[(ic * 9 + ky * 3 + kx) * hw..][..hw];
                let (y0, y1) = range(ky, h);
                let (x0, x1) = range(kx, w);
                row.fill(T::zero());
                for y in y0..y1 {
                    let sy = y + ky - 1;
                    let dst = &mut row[y * w + x0..y * w + x1];
                    dst.copy_from_slice(&plane[sy * w + x0 + kx - 1..sy * w + x1 + kx - 1]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the image.
pub(crate) fn col2im<T: Scalar>(col: &[T], c: usize, h: usize, w: usize, out: &mut [T]) {
    let hw = h * w;
    for ic in 0..c {
        let plane = &mut out[ic * hw..(ic + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[(ic * 9 + ky * 3 + kx) * hw..][..hw];
                let (y0, y1) = range(ky, h);
                let (x0, x1) = range(kx, w);
                for y in y0..y1 {
                    let sy = y + ky - 1;
                    let dst = &mut plane[sy * w + x0 + kx - 1..sy * w + x1 + kx - 1];
                    add_assign(dst, &row[y * w + x0..y * w + x1]);
                }
            }
        }
    }
}

/// Output positions whose input tap `pos + k - 1` stays inside `0..n`.
#[inline]
fn range(k: usize, n: usize) -> (usize, usize) {
    let lo = if k == 0 { 1 } else { 0 };
    let hi = if k == 2 { n.saturating_sub(1) } else { n };
    (lo.min(hi), hi)
}
