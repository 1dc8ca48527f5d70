//! Orthonormal type-II DCT bases and zigzag scans.

/// Row-major `n x n` matrix `C[k][i] = a_k cos(pi (2i + 1) k / 2n)` with
/// `a_0 = sqrt(1/n)` and `a_k = sqrt(2/n)`. `C` is orthogonal, so the inverse
/// transform is `C^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DctBasis {
    n: usize,
    m: Vec<f64>,
}

impl DctBasis {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "empty DCT basis");
        let nf = n as f64;
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            let a = if k == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            for i in 0..n {
                m[k * n + i] =
                    a * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
            }
        }
        Self { n, m }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn at(&self, k: usize, i: usize) -> f64 {
        self.m[k * self.n + i]
    }
}

/// Separable 2-D transform of an `h x w` plane restricted to frequencies
/// `u < fu`, `v < fv`. `plane` is addressed as `plane[(y0 + y) * stride + x0 + x]`.
/// Returns an `fu x fv` row-major block.
pub fn forward_lowpass(
    plane: &[f64],
    stride: usize,
    origin: (usize, usize),
    rows: &DctBasis,
    cols: &DctBasis,
    fu: usize,
    fv: usize,
) -> Vec<f64> {
    let (h, w) = (rows.len(), cols.len());
    let (y0, x0) = origin;
    // tmp[y][v] = sum_x plane[y][x] * cols[v][x]
    let mut tmp = vec![0.0; h * fv];
    for y in 0..h {
        let row = &plane[(y0 + y) * stride + x0..(y0 + y) * stride + x0 + w];
        for v in 0..fv {
            let basis = &cols.m[v * w..(v + 1) * w];
            tmp[y * fv + v] = row.iter().zip(basis).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; fu * fv];
    for u in 0..fu {
        for y in 0..h {
            let c = rows.at(u, y);
            for v in 0..fv {
                out[u * fv + v] += c * tmp[y * fv + v];
            }
        }
    }
    out
}

/// Adds the inverse transform of an `fu x fv` low-frequency block into the
/// `h x w` region of `plane` at `origin`.
pub fn inverse_lowpass_add(
    coeffs: &[f64],
    fu: usize,
    fv: usize,
    rows: &DctBasis,
    cols: &DctBasis,
    plane: &mut [f64],
    stride: usize,
    origin: (usize, usize),
) {
    let (h, w) = (rows.len(), cols.len());
    let (y0, x0) = origin;
    // tmp[y][v] = sum_u rows[u][y] * coeffs[u][v]
    let mut tmp = vec![0.0; h * fv];
    for u in 0..fu {
        for y in 0..h {
            let c = rows.at(u, y);
            for v in 0..fv {
                tmp[y * fv + v] += c * coeffs[u * fv + v];
            }
        }
    }
    for y in 0..h {
        let row = &mut plane[(y0 + y) * stride + x0..(y0 + y) * stride + x0 + w];
        for v in 0..fv {
            let t = tmp[y * fv + v];
            if t == 0.0 {
                continue;
            }
            let basis = &cols.m[v * w..(v + 1) * w];
            for (p, b) in row.iter_mut().zip(basis) {
                *p += t * b;
            }
        }
    }
}

/// Full forward 2-D DCT of an `h x w` row-major plane.
pub fn forward_2d(plane: &[f64], rows: &DctBasis, cols: &DctBasis) -> Vec<f64> {
    forward_lowpass(
        plane,
        cols.len(),
        (0, 0),
        rows,
        cols,
        rows.len(),
        cols.len(),
    )
}

/// Full inverse 2-D DCT.
pub fn inverse_2d(coeffs: &[f64], rows: &DctBasis, cols: &DctBasis) -> Vec<f64> {
    let mut out = vec![0.0; rows.len() * cols.len()];
    inverse_lowpass_add(
        coeffs,
        rows.len(),
        cols.len(),
        rows,
        cols,
        &mut out,
        cols.len(),
        (0, 0),
    );
    out
}

/// The first `count` positions `(u, v)` of the JPEG-style zigzag scan over an
/// `h x w` grid: anti-diagonals `u + v = s` in increasing `s`, walking up the
/// diagonal (decreasing `u`) when `s` is even and down when odd.
pub fn zigzag(h: usize, w: usize, count: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count.min(h * w));
    let mut s = 0;
    while out.len() < count && s < h + w - 1 {
        let u_max = s.min(h - 1);
        let u_min = s.saturating_sub(w - 1);
        if s % 2 == 0 {
            for u in (u_min..=u_max).rev() {
                out.push((u, s - u));
            }
        } else {
            for u in u_min..=u_max {
                out.push((u, s - u));
            }
        }
        s += 1;
    }
    out.truncate(count);
    out
}
