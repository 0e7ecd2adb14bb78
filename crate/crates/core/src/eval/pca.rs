use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::embeddings::Embeddings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// One row of `out_dim` coordinates per input vector.
    pub coords: Vec<Vec<f64>>,
    /// Variance (sample, `n - 1` denominator) along each kept component.
    pub explained_variance: Vec<f64>,
    /// Unit principal axes, largest-magnitude loading positive.
    pub components: Vec<Vec<f64>>,
}

impl PcaProjection {
    /// `node<TAB>x<TAB>y...` lines.
    pub fn to_tsv(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (name, row) in names.iter().zip(&self.coords) {
            out.push_str(name);
            for x in row {
                out.push('\t');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Projects mean-centered vectors onto their top `out_dim` principal components.
pub fn pca_project(reps: &Embeddings, out_dim: usize) -> Result<PcaProjection, EvalError> {
    let (n, d) = (reps.len(), reps.dim());
    if n < 2 {
        return Err(EvalError::Invalid("PCA needs at least two vectors".into()));
    }
    if out_dim == 0 || out_dim > d {
        return Err(EvalError::Invalid(format!(
            "cannot project {d}-dimensional vectors onto {out_dim} components"
        )));
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| reps.row(i)[j] as f64);
    let means: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    for (j, mean) in means.iter().enumerate() {
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (x.transpose() * &x) / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let components: Vec<Vec<f64>> = order[..out_dim]
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eigen.eigenvectors.column(k).iter().copied().collect();
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let explained_variance = order[..out_dim]
        .iter()
        .map(|&k| eigen.eigenvalues[k].max(0.0))
        .collect();
    let coords = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| x.row(i).iter().zip(c).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(PcaProjection {
        coords,
        explained_variance,
        components,
    })
}
