//! The orthonormal two-dimensional DCT-II basis used by SimBA-DCT.

use crate::linalg::Tensor;

/// The `(u, v)` basis image of the orthonormal 2D DCT-II over an
/// `height x width` grid:
///
/// ```text
/// B[y, x] = a(u, height) cos(pi (2y+1) u / (2 height))
///         * a(v, width)  cos(pi (2x+1) v / (2 width))
/// ```
///
/// with `a(0, N) = sqrt(1/N)` and `a(u, N) = sqrt(2/N)` otherwise. The full
/// family `{B_uv}` is an orthonormal basis of the image space; `(0, 0)` is
/// the constant (DC) image.
pub fn dct_basis_image(height: usize, width: usize, u: usize, v: usize) -> Tensor {
    assert!(
        height > 0 && width > 0 && u < height && v < width,
        "frequency ({u}, {v}) out of range for a {height}x{width} grid"
    );
    let mut data = Vec::with_capacity(height * width);
    for y in 0..height {
        let row = axis_factor(height, u, y);
        for x in 0..width {
            data.push(row * axis_factor(width, v, x));
        }
    }
    Tensor::from_parts(vec![height, width], data)
}

fn axis_factor(n: usize, freq: usize, pos: usize) -> f64 {
    let scale = if freq == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    };
    scale * (std::f64::consts::PI * (2 * pos + 1) as f64 * freq as f64 / (2.0 * n as f64)).cos()
}

/// The low-frequency band kept by SimBA-DCT: frequencies below
/// `ceil(fraction * extent)` on each axis (at least the DC frequency),
/// listed by ascending frequency shell `u + v` and, within a shell, by `u`.
/// The caller is expected to shuffle within shells if it wants random order.
pub fn low_frequency_band(height: usize, width: usize, fraction: f64) -> Vec<(usize, usize)> {
    assert!(
        fraction.is_finite() && 0.0 < fraction && fraction <= 1.0,
        "band fraction must lie in (0, 1], got {fraction}"
    );
    let keep_u = ((height as f64 * fraction).ceil() as usize).clamp(1, height);
    let keep_v = ((width as f64 * fraction).ceil() as usize).clamp(1, width);
    let mut band: Vec<(usize, usize)> = (0..keep_u)
        .flat_map(|u| (0..keep_v).map(move |v| (u, v)))
        .collect();
    band.sort_by_key(|&(u, v)| (u + v, u));
    band
}
