//! Small dense linear-algebra helpers and the row-major matrix wire format.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Square matrix serialized with an explicit dimension and row-major data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let data = (0..dim).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        MatrixJson { dim, data }
    }
}

impl From<&MatrixJson> for DMatrix<f64> {
    fn from(m: &MatrixJson) -> Self {
        DMatrix::from_row_slice(m.dim, m.dim, &m.data)
    }
}

/// serde adapter for `DMatrix<f64>` fields.
pub mod matrix_serde {
    use super::MatrixJson;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let m = MatrixJson::deserialize(d)?;
        if m.data.len() != m.dim * m.dim {
            return Err(serde::de::Error::custom("matrix data length does not match dim"));
        }
        Ok(DMatrix::from(&m))
    }
}

/// serde adapter for `DVector<f64>` fields (plain arrays).
pub mod vector_serde {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order; column `k` of the returned matrix pairs with value `k`.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Orthonormal basis (as columns, `n x (n-1)`) of the tangent space of the
/// sphere at the unit vector `x`.
///
/// Gram-Schmidt runs over the candidates `e_i - (e_i . x) x`, largest norm
/// first.
pub fn tangent_basis(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut candidates: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            &e - x * x[i]
        })
        .collect();
    candidates.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for mut c in candidates {
        for b in &basis {
            let proj = b.dot(&c);
            c -= b * proj;
        }
        // Re-project against x: rounding in the candidates leaks a radial part.
        let radial = x.dot(&c);
        c -= x * radial;
        let norm = c.norm();
        if norm > 1e-8 {
            basis.push(c / norm);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    DMatrix::from_columns(&basis)
}

/// Minimal rotation taking the unit vector `x` to `(0, 0, 1)`.
pub fn rotation_to_pole(x: &Vector3<f64>) -> Matrix3<f64> {
    let pole = Vector3::z();
    let axis = x.cross(&pole);
    let s = axis.norm();
    let c = x.dot(&pole);
    if s < 1e-15 {
        return if c > 0.0 {
            Matrix3::identity()
        } else {
            // Half-turn about the x axis.
            Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0)
        };
    }
    let k = axis / s;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * s + kx * kx * (1.0 - c)
}

/// Ellipticity certificate of a symmetric positive matrix: the largest `l`
/// with `l I <= A <= l^-1 I`.
pub fn ellipticity(a: &DMatrix<f64>) -> f64 {
    let (values, _) = sorted_symmetric_eigen(a);
    let max = values[0];
    let min = values[values.len() - 1];
    if min <= 0.0 {
        return 0.0;
    }
    min.min(1.0 / max)
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_to_pole_maps_direction() {
        for x in [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.3, -0.4, 0.5).normalize(),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(0.0, 0.0, 1.0),
        ] {
            let r = rotation_to_pole(&x);
            assert!((r * x - Vector3::z()).norm() < 1e-14);
            assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-14);
            assert!((r.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let x = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        let q = tangent_basis(&x);
        assert_eq!(q.ncols(), 3);
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((q.transpose() * &x).norm() < 1e-14);
    }

    #[test]
    fn matrix_json_is_row_major() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let j = MatrixJson::from(&m);
        assert_eq!(j.data, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            serde_json::to_string(&j).unwrap(),
            r#"{"dim":2,"data":[1.0,2.0,3.0,4.0]}"#
        );
    }
}
