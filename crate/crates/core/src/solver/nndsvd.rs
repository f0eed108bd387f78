use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// What to do with exact zeros left by NNDSVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroFill {
    /// Keep them (plain NNDSVD).
    Keep,
    /// Replace them with the mean of the input matrix (NNDSVD-a).
    Mean,
}

fn split_signs(x: ArrayView1<f64>) -> (Array1<f64>, Array1<f64>) {
    (x.mapv(|v| v.max(0.0)), x.mapv(|v| (-v).max(0.0)))
}

fn norm(x: &Array1<f64>) -> f64 {
    x.dot(x).sqrt()
}

/// Non-negative double SVD initialization: rank-`r` factors `A` (n × r) and
/// `B` (r × m) built from the leading singular triplets of `c`, keeping for
/// each triplet the dominant sign pattern.
pub fn nndsvd(c: ArrayView2<f64>, r: usize, fill: ZeroFill) -> Result<(Array2<f64>, Array2<f64>)> {
    let (n, m) = c.dim();
    if r == 0 || r > n.min(m) {
        return Err(Error::argument(format!("rank {r} outside 1..={} for a {n}x{m} matrix", n.min(m))));
    }
    if c.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::argument("NNDSVD input must be non-negative and finite"));
    }
    let mean = c.sum() / (n * m) as f64;
    if mean == 0.0 {
        return Err(Error::argument("NNDSVD input is all zeros"));
    }

    let dm = DMatrix::from_fn(n, m, |i, j| c[[i, j]]);
    let svd = dm.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut a = Array2::zeros((n, r));
    let mut b = Array2::zeros((r, m));
    for (k, &idx) in order.iter().take(r).enumerate() {
        let x = Array1::from_iter(u.column(idx).iter().copied());
        let y = Array1::from_iter(vt.row(idx).iter().copied());
        let sv = s[idx];
        if k == 0 {
            // Perron vectors of a non-negative matrix share one sign.
            let root = sv.sqrt();
            a.column_mut(0).assign(&x.mapv(|v| root * v.abs()));
            b.row_mut(0).assign(&y.mapv(|v| root * v.abs()));
            continue;
        }
        let (xp, xn) = split_signs(x.view());
        let (yp, yn) = split_signs(y.view());
        let (nxp, nyp, nxn, nyn) = (norm(&xp), norm(&yp), norm(&xn), norm(&yn));
        let (mp, mn) = (nxp * nyp, nxn * nyn);
        let (uu, vv, scale) = if mp > mn {
            (xp / nxp, yp / nyp, mp)
        } else if mn > 0.0 {
            (xn / nxn, yn / nyn, mn)
        } else {
            continue;
        };
        let lambda = (sv * scale).sqrt();
        a.column_mut(k).assign(&(uu * lambda));
        b.row_mut(k).assign(&(vv * lambda));
    }

    if fill == ZeroFill::Mean {
        a.mapv_inplace(|v| if v <= 0.0 { mean } else { v });
        b.mapv_inplace(|v| if v <= 0.0 { mean } else { v });
    }
    Ok((a, b))
}
