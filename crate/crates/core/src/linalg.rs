//! Fixed-capacity dense linear algebra for simplices of at most `MAX_DIM + 1` vertices.

/// Largest ambient dimension supported by the geometric kernels.
pub const MAX_DIM: usize = 8;

pub(crate) type Square = [[f64; MAX_DIM]; MAX_DIM];

/// Solves `a x = b` (leading `n x n` block) by Gaussian elimination with full
/// pivoting. Returns `None` when a pivot vanishes.
pub(crate) fn solve_full_pivot(mut a: Square, mut b: [f64; MAX_DIM], n: usize) -> Option<[f64; MAX_DIM]> {
    let mut col_perm = [0usize; MAX_DIM];
    for (i, c) in col_perm.iter_mut().enumerate() {
        *c = i;
    }
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().take(n).skip(k) {
            for (j, v) in row.iter().enumerate().take(n).skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = i;
                    pc = j;
                }
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        a.swap(k, pr);
        b.swap(k, pr);
        if pc != k {
            for row in a.iter_mut().take(n) {
                row.swap(k, pc);
            }
            col_perm.swap(k, pc);
        }
        let piv = a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / piv;
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut y = [0.0; MAX_DIM];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * y[j]).sum();
        y[k] = (b[k] - s) / a[k][k];
    }
    let mut x = [0.0; MAX_DIM];
    for k in 0..n {
        x[col_perm[k]] = y[k];
    }
    Some(x)
}

/// Eigenvalues of the leading `n x n` block of a symmetric matrix (cyclic Jacobi),
/// returned as `(min, max)`.
pub(crate) fn sym_eigen_extremes(a: &Square, n: usize) -> (f64, f64) {
    match n {
        0 => (0.0, 0.0),
        1 => (a[0][0], a[0][0]),
        2 => {
            let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            let hi = mean + rad;
            // product form keeps the small eigenvalue accurate
            let det = p * r - q * q;
            let lo = if hi > 0.0 { det / hi } else { mean - rad };
            (lo, hi)
        }
        _ => {
            let mut m = *a;
            for _sweep in 0..64 {
                let off: f64 = (0..n)
                    .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| m[i][j] * m[i][j])
                    .sum();
                let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
                if off <= 1e-30 * diag || off == 0.0 {
                    break;
                }
                for p in 0..n {
                    for q in p + 1..n {
                        if m[p][q] == 0.0 {
                            continue;
                        }
                        let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                        let t = if theta == 0.0 { 1.0 } else { t };
                        let c = 1.0 / (t * t + 1.0).sqrt();
                        let s = t * c;
                        for k in 0..n {
                            let mkp = m[k][p];
                            let mkq = m[k][q];
                            m[k][p] = c * mkp - s * mkq;
                            m[k][q] = s * mkp + c * mkq;
                        }
                        for k in 0..n {
                            let mpk = m[p][k];
                            let mqk = m[q][k];
                            m[p][k] = c * mpk - s * mqk;
                            m[q][k] = s * mpk + c * mqk;
                        }
                    }
                }
            }
            (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                (lo.min(m[i][i]), hi.max(m[i][i]))
            })
        }
    }
}

/// Determinant of the leading `n x n` block (partial pivoting).
pub(crate) fn determinant(mut a: Square, n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap_or(k);
        if a[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    det
}
