use alloc::vec::Vec;

use super::{AdmittanceMatrix, Node};
use crate::linalg::{Lu, Matrix};
use crate::{Error, Result};

fn split(y: &AdmittanceMatrix, keep: &[Node]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut kept = Vec::with_capacity(keep.len());
    for &node in keep {
        let i = y
            .index_of(node)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("node {node:?} not in matrix")))?;
        if kept.contains(&i) {
            return Err(Error::InvalidArgument(alloc::format!("node {node:?} listed twice")));
        }
        kept.push(i);
    }
    let eliminated = (0..y.len()).filter(|i| !kept.contains(i)).collect();
    Ok((kept, eliminated))
}

/// Schur complement `Y_gg - Y_gl Y_ll⁻¹ Y_lg` keeping `keep` (in that order).
///
/// A singular `Y_ll` means the eliminated part has a floating island.
pub fn kron_reduce(y: &AdmittanceMatrix, keep: &[Node]) -> Result<AdmittanceMatrix> {
    let (kept, eliminated) = split(y, keep)?;
    let y_gg = y.y.select(&kept, &kept);
    if eliminated.is_empty() {
        return AdmittanceMatrix::new(keep.to_vec(), y_gg);
    }
    let y_gl = y.y.select(&kept, &eliminated);
    let y_lg = y.y.select(&eliminated, &kept);
    let y_ll = y.y.select(&eliminated, &eliminated);
    let lu = Lu::factor(&y_ll).map_err(|_| Error::Singular("eliminated block Y_ll of the Kron reduction"))?;
    let x = lu.solve_matrix(&y_lg);
    let corr = y_gl.matmul(&x);
    let red = Matrix::from_fn(kept.len(), kept.len(), |i, j| y_gg[(i, j)] - corr[(i, j)]);
    AdmittanceMatrix::new(keep.to_vec(), red)
}

/// Kron reduction by eliminating one node at a time in the given order.
pub fn kron_reduce_sequential(y: &AdmittanceMatrix, order: &[Node]) -> Result<AdmittanceMatrix> {
    let mut cur = y.clone();
    for &node in order {
        let k = cur
            .index_of(node)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("node {node:?} not in matrix")))?;
        let pivot = cur.y[(k, k)];
        if pivot.norm() <= 1e-13 * cur.y.max_abs() {
            return Err(Error::Singular("zero pivot in sequential Kron elimination"));
        }
        let rest: Vec<usize> = (0..cur.len()).filter(|&i| i != k).collect();
        let red = Matrix::from_fn(rest.len(), rest.len(), |i, j| {
            let (a, b) = (rest[i], rest[j]);
            cur.y[(a, b)] - cur.y[(a, k)] * cur.y[(k, b)] / pivot
        });
        cur = AdmittanceMatrix::new(rest.iter().map(|&i| cur.nodes[i]).collect(), red)?;
    }
    Ok(cur)
}

/// Currents injected at the kept nodes when they are held at `v` and the
/// eliminated nodes float (zero net injection). Solved on the full matrix.
#[cfg(test)]
pub(crate) fn retained_currents(
    y: &AdmittanceMatrix,
    keep: &[Node],
    v: &[num_complex::Complex64],
) -> Vec<num_complex::Complex64> {
    use num_complex::Complex64;
    let (kept, eliminated) = split(y, keep).unwrap();
    // Y_ll v_l = -Y_lg v_g
    let y_ll = y.y.select(&eliminated, &eliminated);
    let y_lg = y.y.select(&eliminated, &kept);
    let rhs: Vec<Complex64> = y_lg.mul_vec(v).into_iter().map(|c| -c).collect();
    let v_l = Lu::factor(&y_ll).unwrap().solve(&rhs);
    let mut full = alloc::vec![Complex64::new(0.0, 0.0); y.len()];
    for (i, &k) in kept.iter().enumerate() {
        full[k] = v[i];
    }
    for (i, &k) in eliminated.iter().enumerate() {
        full[k] = v_l[i];
    }
    let all = y.y.mul_vec(&full);
    kept.iter().map(|&k| all[k]).collect()
}
