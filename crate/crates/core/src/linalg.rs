use crate::error::{Error, Result};

/// `F` with `F·Fᵀ = A`, stored row-major. Full-rank inputs produce a lower
/// triangular `F`; rank-deficient inputs produce a row-permuted triangular
/// factor whose trailing columns are zero.
#[derive(Clone, Debug)]
pub(crate) struct Factorization {
    pub dim: usize,
    pub factor: Vec<f64>,
    pub rank: usize,
}

/// Cholesky factorization with lazy diagonal pivoting.
///
/// Columns are taken in natural order while the residual pivot exceeds
/// `tol`; otherwise the largest remaining diagonal is swapped in. When no
/// residual diagonal exceeds `tol` the remaining Schur complement must be
/// negligible (every entry within `tol` in magnitude) and the factorization
/// stops with reduced rank.
pub(crate) fn pivoted_cholesky(a: &[f64], n: usize, tol: f64) -> Result<Factorization> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    let mut w = a.to_vec();
    let mut lower = vec![0.0; n * n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = n;

    for j in 0..n {
        if w[j * n + j] <= tol {
            let p = (j..n)
                .max_by(|&x, &y| w[x * n + x].total_cmp(&w[y * n + y]))
                .expect("non-empty range");
            if w[p * n + p] <= tol {
                let worst = (j..n)
                    .flat_map(|r| (j..n).map(move |c| (r, c)))
                    .map(|(r, c)| (r, w[r * n + c]))
                    .find(|&(_, v)| v.abs() > tol || !v.is_finite());
                if let Some((index, pivot)) = worst {
                    return Err(Error::NotPositiveSemidefinite {
                        index: perm[index],
                        pivot,
                    });
                }
                rank = j;
                break;
            }
            swap_symmetric(&mut w, n, j, p);
            for k in 0..j {
                lower.swap(j * n + k, p * n + k);
            }
            perm.swap(j, p);
        }

        let d = w[j * n + j].sqrt();
        lower[j * n + j] = d;
        for i in j + 1..n {
            lower[i * n + j] = w[i * n + j] / d;
        }
        for i in j + 1..n {
            let lij = lower[i * n + j];
            if lij == 0.0 {
                continue;
            }
            for k in j + 1..=i {
                let v = w[i * n + k] - lij * lower[k * n + j];
                w[i * n + k] = v;
                w[k * n + i] = v;
            }
        }
    }

    let mut factor = vec![0.0; n * n];
    for (i, &row) in perm.iter().enumerate() {
        factor[row * n..row * n + rank].copy_from_slice(&lower[i * n..i * n + rank]);
    }
    Ok(Factorization {
        dim: n,
        factor,
        rank,
    })
}

fn swap_symmetric(w: &mut [f64], n: usize, i: usize, j: usize) {
    if i == j {
        return;
    }
    for k in 0..n {
        w.swap(i * n + k, j * n + k);
    }
    for k in 0..n {
        w.swap(k * n + i, k * n + j);
    }
}

/// Default pivot tolerance: a few ulps of the largest diagonal entry per
/// dimension.
pub(crate) fn default_tolerance(a: &[f64], n: usize) -> f64 {
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    4.0 * n as f64 * f64::EPSILON * max_diag
}
