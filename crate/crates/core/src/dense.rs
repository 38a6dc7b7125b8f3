// Small dense solver with partial pivoting. Entries are generic so that the same
// code serves Complex<Dd>, Complex<f64> and plain reals.

use num_traits::Num;

use crate::error::{NzError, Result};

/// Solves a·x = b for square a; `mag` orders pivots.
pub(crate) fn lu_solve<F, M>(mut a: Vec<Vec<F>>, mut b: Vec<F>, mag: M) -> Result<Vec<F>>
where
    F: Copy + Num,
    M: Fn(&F) -> f64,
{
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(NzError::Shape(format!("lu_solve: {}x? system with {} right-hand sides", a.len(), n)));
    }
    let scale = a.iter().flatten().map(&mag).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(NzError::Singular);
    }
    for k in 0..n {
        let (piv, best) = (k..n).map(|i| (i, mag(&a[i][k]))).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best > scale * 1e-300) || best <= scale * f64::EPSILON * 1e-3 {
            return Err(NzError::Singular);
        }
        a.swap(k, piv);
        b.swap(k, piv);
        let p = a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / p;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let t = a[k][j];
                a[i][j] = a[i][j] - f * t;
            }
            let t = b[k];
            b[i] = b[i] - f * t;
        }
    }
    let mut x = vec![F::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s = s - a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Ok(x)
}
