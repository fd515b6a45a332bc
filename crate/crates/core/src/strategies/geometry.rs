// SPDX-License-Identifier: Apache-2.0

use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Pairwise squared Euclidean distances `|a_i|^2 + |b_j|^2 - 2 a_i.b_j`,
/// clamped at zero.
pub fn squared_distances(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let na: Array1<f64> = a.map_axis(Axis(1), |r| r.dot(&r));
    let nb: Array1<f64> = b.map_axis(Axis(1), |r| r.dot(&r));
    let mut d = a.dot(&b.t());
    for ((i, j), v) in d.indexed_iter_mut() {
        *v = (na[i] + nb[j] - 2.0 * *v).max(0.0);
    }
    d
}

pub fn euclidean_distances(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    squared_distances(a, b).mapv(f64::sqrt)
}

/// Squared distance from every row of `a` to the single point `p`.
pub(crate) fn squared_distances_to(a: ArrayView2<'_, f64>, p: ndarray::ArrayView1<'_, f64>) -> Array1<f64> {
    let pn = p.dot(&p);
    let mut d = a.dot(&p);
    for (v, row) in d.iter_mut().zip(a.rows()) {
        *v = (row.dot(&row) + pn - 2.0 * *v).max(0.0);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matches_direct_difference() {
        let a = array![[0.0, 1.0], [3.0, 4.0]];
        let b = array![[0.0, 0.0], [1.0, 1.0], [3.0, 4.0]];
        let d = squared_distances(a.view(), b.view());
        assert_eq!(d, array![[1.0, 1.0, 18.0], [25.0, 13.0, 0.0]]);
        assert_eq!(squared_distances_to(a.view(), b.row(1)), array![1.0, 13.0]);
    }

    #[test]
    fn never_negative() {
        let a = array![[1e8 + 0.1, 1e8], [1e8, 1e8 + 0.1]];
        assert!(squared_distances(a.view(), a.view()).iter().all(|&v| v >= 0.0));
    }
}
