//! Row-major dense kernels over `matrixmultiply`.

/// `y (+)= x * w` with `x: rows x k`, `w: k x n`.
pub(crate) fn matmul(x: &[f64], w: &[f64], y: &mut [f64], rows: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(x.len(), rows * k);
    debug_assert_eq!(w.len(), k * n);
    debug_assert_eq!(y.len(), rows * n);
    if rows == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            y.iter_mut().for_each(|v| *v = 0.0);
        }
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    unsafe {
        matrixmultiply::dgemm(
            rows,
            k,
            n,
            1.0,
            x.as_ptr(),
            k as isize,
            1,
            w.as_ptr(),
            n as isize,
            1,
            beta,
            y.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `dw += x^T * dy` with `x: rows x k`, `dy: rows x n`.
pub(crate) fn matmul_tn(x: &[f64], dy: &[f64], dw: &mut [f64], rows: usize, k: usize, n: usize) {
    debug_assert_eq!(x.len(), rows * k);
    debug_assert_eq!(dy.len(), rows * n);
    debug_assert_eq!(dw.len(), k * n);
    if rows == 0 || k == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            k,
            rows,
            n,
            1.0,
            x.as_ptr(),
            1,
            k as isize,
            dy.as_ptr(),
            n as isize,
            1,
            1.0,
            dw.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `dx (+)= dy * w^T` with `dy: rows x n`, `w: k x n`.
pub(crate) fn matmul_nt(dy: &[f64], w: &[f64], dx: &mut [f64], rows: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(dy.len(), rows * n);
    debug_assert_eq!(w.len(), k * n);
    debug_assert_eq!(dx.len(), rows * k);
    if rows == 0 || k == 0 {
        return;
    }
    if n == 0 {
        if !accumulate {
            dx.iter_mut().for_each(|v| *v = 0.0);
        }
        return;
    }
    let beta = if accumulate { 1.0 } else { 0.0 };
    unsafe {
        matrixmultiply::dgemm(
            rows,
            n,
            k,
            1.0,
            dy.as_ptr(),
            n as isize,
            1,
            w.as_ptr(),
            1,
            n as isize,
            beta,
            dx.as_mut_ptr(),
            k as isize,
            1,
        );
    }
}

pub(crate) fn add_bias(y: &mut [f64], b: &[f64]) {
    for row in y.chunks_exact_mut(b.len()) {
        for (v, bb) in row.iter_mut().zip(b) {
            *v += bb;
        }
    }
}

pub(crate) fn relu(y: &mut [f64]) {
    for v in y {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `dy` where the stored activation `h` was clipped.
pub(crate) fn relu_backward(dy: &mut [f64], h: &[f64]) {
    for (d, v) in dy.iter_mut().zip(h) {
        if *v <= 0.0 {
            *d = 0.0;
        }
    }
}

pub(crate) fn column_sums(dy: &[f64], db: &mut [f64]) {
    for row in dy.chunks_exact(db.len()) {
        for (a, v) in db.iter_mut().zip(row) {
            *a += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[f64], w: &[f64], rows: usize, k: usize, n: usize) -> Vec<f64> {
        let mut y = vec![0.0; rows * n];
        for r in 0..rows {
            for c in 0..n {
                y[r * n + c] = (0..k).map(|t| x[r * k + t] * w[t * n + c]).sum();
            }
        }
        y
    }

    #[test]
    fn kernels_match_naive_products() {
        let (rows, k, n) = (7, 5, 3);
        let x: Vec<f64> = (0..rows * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let w: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.71).cos()).collect();
        let mut y = vec![1.0; rows * n];
        matmul(&x, &w, &mut y, rows, k, n, false);
        let e = naive(&x, &w, rows, k, n);
        assert!(y.iter().zip(&e).all(|(a, b)| (a - b).abs() < 1e-14));

        let dy: Vec<f64> = (0..rows * n).map(|i| i as f64 * 0.1 - 1.0).collect();
        let mut dw = vec![0.0; k * n];
        matmul_tn(&x, &dy, &mut dw, rows, k, n);
        for t in 0..k {
            for c in 0..n {
                let s: f64 = (0..rows).map(|r| x[r * k + t] * dy[r * n + c]).sum();
                assert!((dw[t * n + c] - s).abs() < 1e-13);
            }
        }
        let mut dx = vec![0.0; rows * k];
        matmul_nt(&dy, &w, &mut dx, rows, k, n, false);
        for r in 0..rows {
            for t in 0..k {
                let s: f64 = (0..n).map(|c| dy[r * n + c] * w[t * n + c]).sum();
                assert!((dx[r * k + t] - s).abs() < 1e-13);
            }
        }
    }
}
