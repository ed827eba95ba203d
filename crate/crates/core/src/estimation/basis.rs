use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_BLOCK: usize = 9;
pub const DEFAULT_DEGREE: usize = 2;

/// Design matrix `G` (`p^2 x q`) of a 2-D polynomial model on a `p x p`
/// block, together with a thin orthonormal factor `Q` of `G = QR`.
///
/// Block samples are ordered row-major (`dy` outer, `dx` inner). Columns are
/// the monomials `u^a v^b` with `a + b <= degree`, where `u` runs along
/// columns and `v` along rows, both normalized to `[-1, 1]`. Column 0 is the
/// constant.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    p: usize,
    degree: usize,
    q: usize,
    entries: Vec<f64>,
    ortho: Vec<f64>,
}

impl BasisMatrix {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of block samples, `p^2`.
    pub fn samples(&self) -> usize {
        self.p * self.p
    }

    /// Degrees of freedom of the remainder, `p^2 - q`.
    pub fn dof(&self) -> usize {
        self.samples() - self.q
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.q + col]
    }

    /// `G` in row-major order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Writes `block - proj(block)` into `out`.
    pub(crate) fn remainder_into(&self, block: &[f64], out: &mut [f64]) {
        let n = self.samples();
        debug_assert_eq!(block.len(), n);
        let mut coef = [0.0f64; 64];
        let coef = &mut coef[..self.q];
        coef.fill(0.0);
        for (i, &b) in block.iter().enumerate() {
            let row = &self.ortho[i * self.q..(i + 1) * self.q];
            for (c, &qv) in coef.iter_mut().zip(row) {
                *c += qv * b;
            }
        }
        for (i, (o, &b)) in out.iter_mut().zip(block).enumerate() {
            let row = &self.ortho[i * self.q..(i + 1) * self.q];
            let fitted: f64 = row.iter().zip(coef.iter()).map(|(q, c)| q * c).sum();
            *o = b - fitted;
        }
    }
}

/// Builds the polynomial basis for `p x p` blocks (`p` odd) of total degree
/// `degree`, and factors it once by Householder QR.
pub fn build_basis(p: usize, degree: usize) -> Result<BasisMatrix> {
    if p < 3 || p % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "block size {p} must be odd and at least 3"
        )));
    }
    let q = (degree + 1) * (degree + 2) / 2;
    let n = p * p;
    if q >= n || q > 64 {
        return Err(Error::InvalidParameter(format!(
            "degree {degree} gives {q} parameters, too many for a {p}x{p} block"
        )));
    }

    let coord = |k: usize| 2.0 * k as f64 / (p - 1) as f64 - 1.0;
    let mut entries = Vec::with_capacity(n * q);
    for row in 0..p {
        let v = coord(row);
        for col in 0..p {
            let u = coord(col);
            for d in 0..=degree {
                for b in 0..=d {
                    let a = d - b;
                    entries.push(u.powi(a as i32) * v.powi(b as i32));
                }
            }
        }
    }

    let g = DMatrix::from_row_slice(n, q, &entries);
    let qr = g.qr();
    let r = qr.r();
    let scale = (0..q).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if let Some(column) = (0..q).find(|&j| r[(j, j)].abs() <= 1e-10 * scale.max(1.0)) {
        return Err(Error::RankDeficient { column });
    }
    let qm = qr.q();
    let mut ortho = Vec::with_capacity(n * q);
    for i in 0..n {
        for j in 0..q {
            ortho.push(qm[(i, j)]);
        }
    }
    Ok(BasisMatrix {
        p,
        degree,
        q,
        entries,
        ortho,
    })
}

/// Orthogonal projection of `block` onto the column span of `G`.
pub fn fit_block(block: &[f64], basis: &BasisMatrix) -> Result<Vec<f64>> {
    if block.len() != basis.samples() {
        return Err(Error::LengthMismatch("block length must equal p^2"));
    }
    let mut rem = vec![0.0; block.len()];
    basis.remainder_into(block, &mut rem);
    Ok(block.iter().zip(&rem).map(|(b, e)| b - e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_basis_shape() {
        let b = build_basis(9, 2).unwrap();
        assert_eq!(b.q(), 6);
        assert_eq!(b.entries().len(), 81 * 6);
        assert_eq!(b.dof(), 75);
        assert!((0..81).all(|i| b.entry(i, 0) == 1.0));
    }

    #[test]
    fn degree_zero_is_ones() {
        let b = build_basis(3, 0).unwrap();
        assert_eq!(b.q(), 1);
        assert_eq!(b.entries(), &[1.0; 9]);
    }

    #[test]
    fn gram_matrix_is_well_conditioned() {
        let b = build_basis(9, 2).unwrap();
        let g = DMatrix::from_row_slice(81, 6, b.entries());
        let gram = g.transpose() * &g;
        let sv = gram.singular_values();
        let cond = sv.max() / sv.min();
        assert!(cond.is_finite() && cond < 1e3, "cond {cond}");
    }

    #[test]
    fn rejects_invalid_configurations() {
        assert!(build_basis(8, 2).is_err());
        assert!(build_basis(1, 0).is_err());
        // q = 10 >= 9
        assert!(build_basis(3, 3).is_err());
        // q = 21 < 25, but u^4 and u^5 are dependent on a 5-point grid
        assert!(matches!(build_basis(5, 5), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn constant_block_is_fixed() {
        let b = build_basis(9, 2).unwrap();
        let block = vec![3.25; 81];
        let fit = fit_block(&block, &b).unwrap();
        assert!(fit.iter().all(|v| (v - 3.25).abs() <= 1e-10));
        assert!(fit_block(&block[..80], &b).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal() {
        let b = build_basis(9, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let block: Vec<f64> = (0..81).map(|_| rng.random_range(-50.0..50.0)).collect();
            let fit = fit_block(&block, &b).unwrap();
            let refit = fit_block(&fit, &b).unwrap();
            for (a, c) in fit.iter().zip(&refit) {
                assert!((a - c).abs() <= 1e-10);
            }
            // normal equations: G^T (b - r_hat) = 0
            let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
            for col in 0..b.q() {
                let dot: f64 = (0..81).map(|i| b.entry(i, col) * (block[i] - fit[i])).sum();
                assert!(dot.abs() <= 1e-8 * norm, "column {col}: {dot}");
            }
        }
    }
}
