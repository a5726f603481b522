//! Packed Hermitian kernels for the capacity hot path.
//!
//! Matrices are stored as packed lower-triangular rows (row `i` holds columns
//! `0..=i`), so every inner product below runs over contiguous prefixes.

use num_complex::Complex;

use crate::scalar::{pairwise_sum, Real};

/// Row-major packed lower-triangular square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedLower<T: Real> {
    n: usize,
    data: Vec<Complex<T>>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl<T: Real> PackedLower<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); row_start(n)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[row_start(i)..row_start(i) + i + 1]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex<T>] {
        &mut self.data[row_start(i)..row_start(i) + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        debug_assert!(j <= i);
        self.data[row_start(i) + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        debug_assert!(j <= i);
        self.data[row_start(i) + j] = v;
    }
}

/// `Σ x_k · conj(y_k)`.
pub fn dotc<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    assert_eq!(x.len(), y.len());
    let (xr, xi) = split(x);
    let (yr, yi) = split(y);
    let (re, im) = dot_split(&xr, &xi, &yr, &yi);
    Complex::new(re, im)
}

fn split<T: Real>(x: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
    (
        x.iter().map(|z| z.re).collect(),
        x.iter().map(|z| z.im).collect(),
    )
}

const LANES: usize = 8;

/// `Σ (xr + j·xi)(yr - j·yi)` over split real/imaginary slices. Each of the
/// `LANES` accumulators takes every `LANES`-th term and the lanes are
/// combined in a fixed tree, so the result does not depend on the build.
#[inline(always)]
fn dot_split<T: Real>(xr: &[T], xi: &[T], yr: &[T], yi: &[T]) -> (T, T) {
    let n = xr.len();
    let (xr, xi, yr, yi) = (&xr[..n], &xi[..n], &yr[..n], &yi[..n]);
    let mut re = [T::zero(); LANES];
    let mut im = [T::zero(); LANES];
    let chunks = xr
        .chunks_exact(LANES)
        .zip(xi.chunks_exact(LANES))
        .zip(yr.chunks_exact(LANES))
        .zip(yi.chunks_exact(LANES));
    for (((a, b), c), d) in chunks {
        for l in 0..LANES {
            re[l] = b[l].mul_add(d[l], a[l].mul_add(c[l], re[l]));
            im[l] = (-a[l]).mul_add(d[l], b[l].mul_add(c[l], im[l]));
        }
    }
    let tail = n - n % LANES;
    for k in tail..n {
        let l = k - tail;
        re[l] = xi[k].mul_add(yi[k], xr[k].mul_add(yr[k], re[l]));
        im[l] = (-xr[k]).mul_add(yi[k], xi[k].mul_add(yr[k], im[l]));
    }
    (fold_lanes(re), fold_lanes(im))
}

#[inline(always)]
fn fold_lanes<T: Real>(v: [T; LANES]) -> T {
    ((v[0] + v[4]) + (v[2] + v[6])) + ((v[1] + v[5]) + (v[3] + v[7]))
}

/// Packed lower triangle with real and imaginary parts in separate arrays,
/// the working layout of the kernels.
struct SplitLower<T> {
    n: usize,
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Real> SplitLower<T> {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            re: vec![T::zero(); row_start(n)],
            im: vec![T::zero(); row_start(n)],
        }
    }

    fn from_packed(p: &PackedLower<T>) -> Self {
        let (re, im) = split(&p.data);
        Self { n: p.n, re, im }
    }
}

// The kernels below are compiled twice: once for the baseline target and once
// with AVX2 and FMA enabled, picked at runtime. Fused multiply-adds are
// correctly rounded either way and nothing is reassociated, so both builds
// give bit-identical results.
macro_rules! dispatch {
    ($body:ident, $wide:ident, $($arg:ident),*) => {{
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
                // SAFETY: the required CPU features were just detected.
                return unsafe { $wide($($arg),*) };
            }
        }
        $body($($arg),*)
    }};
}

/// `ln det G` for Hermitian positive-definite `G` given by its lower triangle.
/// `None` if `G` is not positive definite.
pub fn hpd_log_det<T: Real>(g: &PackedLower<T>) -> Option<T> {
    dispatch!(hpd_log_det_body, hpd_log_det_avx2, g)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn hpd_log_det_avx2<T: Real>(g: &PackedLower<T>) -> Option<T> {
    hpd_log_det_body(g)
}

#[inline(always)]
fn hpd_log_det_body<T: Real>(g: &PackedLower<T>) -> Option<T> {
    cholesky_log_det(SplitLower::from_packed(g))
}

/// In-place Cholesky–Banachiewicz on `g`, returning `2 Σ ln L_ii`.
#[inline(always)]
fn cholesky_log_det<T: Real>(mut g: SplitLower<T>) -> Option<T> {
    let mut logs = Vec::with_capacity(g.n);
    for i in 0..g.n {
        let si = row_start(i);
        let (done_re, row_re) = g.re.split_at_mut(si);
        let (done_im, row_im) = g.im.split_at_mut(si);
        for j in 0..i {
            let sj = row_start(j);
            let (lr, li) = (&done_re[sj..sj + j], &done_im[sj..sj + j]);
            let (dr, di) = dot_split(&row_re[..j], &row_im[..j], lr, li);
            let d = done_re[sj + j];
            row_re[j] = (row_re[j] - dr) / d;
            row_im[j] = (row_im[j] - di) / d;
        }
        let (nr, _) = dot_split(&row_re[..i], &row_im[..i], &row_re[..i], &row_im[..i]);
        let pivot = row_re[i] - nr;
        if !(pivot > T::zero()) || !pivot.is_finite() {
            return None;
        }
        let d = pivot.sqrt();
        row_re[i] = d;
        row_im[i] = T::zero();
        logs.push(d.ln());
    }
    Some(T::lit(2.0) * pairwise_sum(&logs))
}

/// `ln det(I + c · A Aᴴ)` for lower-triangular `A`.
pub fn log_det_identity_plus_gram<T: Real>(a: &PackedLower<T>, c: T) -> Option<T> {
    dispatch!(triangular_body, triangular_avx2, a, c)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn triangular_avx2<T: Real>(a: &PackedLower<T>, c: T) -> Option<T> {
    triangular_body(a, c)
}

#[inline(always)]
fn triangular_body<T: Real>(a: &PackedLower<T>, c: T) -> Option<T> {
    let a = SplitLower::from_packed(a);
    let n = a.n;
    let mut g = SplitLower::zeros(n);
    for i in 0..n {
        let si = row_start(i);
        for j in 0..=i {
            let sj = row_start(j);
            // A is lower triangular, so row j has no entries past column j
            let (re, im) = dot_split(
                &a.re[si..=si + j],
                &a.im[si..=si + j],
                &a.re[sj..=sj + j],
                &a.im[sj..=sj + j],
            );
            g.re[si + j] = re * c;
            g.im[si + j] = im * c;
        }
        g.re[si + i] += T::one();
        g.im[si + i] = T::zero();
    }
    cholesky_log_det(g)
}

/// `ln det(I + c · Aᴴ A)` for a column-major `rows × cols` slice `a`.
pub fn log_det_identity_plus_col_gram<T: Real>(
    a: &[Complex<T>],
    rows: usize,
    cols: usize,
    c: T,
) -> Option<T> {
    dispatch!(col_gram_body, col_gram_avx2, a, rows, cols, c)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn col_gram_avx2<T: Real>(a: &[Complex<T>], rows: usize, cols: usize, c: T) -> Option<T> {
    col_gram_body(a, rows, cols, c)
}

#[inline(always)]
fn col_gram_body<T: Real>(a: &[Complex<T>], rows: usize, cols: usize, c: T) -> Option<T> {
    assert_eq!(a.len(), rows * cols);
    let (ar, ai) = split(a);
    let col = |k: usize| k * rows..(k + 1) * rows;
    let mut g = SplitLower::zeros(cols);
    for i in 0..cols {
        let si = row_start(i);
        let ci = col(i);
        for j in 0..=i {
            let cj = col(j);
            // (Aᴴ A)_ij = Σ_k conj(a_ki) a_kj
            let (re, im) = dot_split(&ar[cj.clone()], &ai[cj], &ar[ci.clone()], &ai[ci.clone()]);
            g.re[si + j] = re * c;
            g.im[si + j] = im * c;
        }
        g.re[si + i] += T::one();
        g.im[si + i] = T::zero();
    }
    cholesky_log_det(g)
}
