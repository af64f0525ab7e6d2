use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::NUM_FEATURES;

/// Total variance below this counts as all points coinciding.
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `(x, y)` per input row.
    pub coords: Vec<[f64; 2]>,
    /// Whether each point is a vertex of the convex hull of `coords`.
    pub hull: Vec<bool>,
    /// Every covariance eigenvalue, descending.
    pub eigenvalues: Vec<f64>,
    pub components: [[f64; NUM_FEATURES]; 2],
    pub mean: [f64; NUM_FEATURES],
    /// All rows identical; coordinates are zero.
    pub degenerate: bool,
}

impl Projection {
    /// Mean squared distance between each centered row and its 2-D reconstruction.
    pub fn reconstruction_error(&self, rows: &[[f64; NUM_FEATURES]]) -> f64 {
        let n = rows.len() as f64;
        rows.iter()
            .zip(&self.coords)
            .map(|(r, c)| {
                (0..NUM_FEATURES)
                    .map(|k| {
                        let centered = r[k] - self.mean[k];
                        let rec = c[0] * self.components[0][k] + c[1] * self.components[1][k];
                        (centered - rec).powi(2)
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n
    }
}

/// Projects rows onto the top two principal components of their population
/// covariance. Component signs are fixed so that the largest entry is positive.
pub fn pca_2d(rows: &[[f64; NUM_FEATURES]]) -> Result<Projection> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::ShapeMismatch(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    let mut mean = [0.0; NUM_FEATURES];
    for r in rows {
        for k in 0..NUM_FEATURES {
            mean[k] += r[k] / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, NUM_FEATURES, |i, k| rows[i][k] - mean[k]);
    let cov = (x.transpose() * &x) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..NUM_FEATURES).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut components = [[0.0; NUM_FEATURES]; 2];
    for (c, &i) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(i);
        let pivot = (0..NUM_FEATURES)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..NUM_FEATURES {
            components[c][k] = sign * v[k];
        }
    }
    let degenerate = eigenvalues.iter().sum::<f64>() <= DEGENERATE_VARIANCE;
    let coords: Vec<[f64; 2]> = if degenerate {
        vec![[0.0, 0.0]; n]
    } else {
        (0..n)
            .map(|i| {
                let proj =
                    |c: &[f64; NUM_FEATURES]| (0..NUM_FEATURES).map(|k| x[(i, k)] * c[k]).sum();
                [proj(&components[0]), proj(&components[1])]
            })
            .collect()
    };
    let hull = if degenerate {
        vec![false; n]
    } else {
        hull_mask(&coords)
    };
    Ok(Projection {
        coords,
        hull,
        eigenvalues,
        components,
        mean,
        degenerate,
    })
}

/// Vertices of the convex hull (monotone chain); collinear points excluded.
pub fn hull_mask(points: &[[f64; 2]]) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    let mut mask = vec![false; points.len()];
    if idx.len() <= 2 {
        for &i in &idx {
            mask[i] = true;
        }
        return mask;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let chain = |iter: &mut dyn Iterator<Item = usize>| {
        let mut h: Vec<usize> = Vec::new();
        for i in iter {
            while h.len() >= 2
                && cross(points[h[h.len() - 2]], points[h[h.len() - 1]], points[i]) <= 0.0
            {
                h.pop();
            }
            h.push(i);
        }
        h
    };
    let lower = chain(&mut idx.iter().copied());
    let upper = chain(&mut idx.iter().rev().copied());
    for i in lower.into_iter().chain(upper) {
        mask[i] = true;
    }
    mask
}

/// A projected cut tagged with the selector that chose it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub instance: String,
    pub method: String,
    pub cut: u64,
    pub x: f64,
    pub y: f64,
    /// On the convex hull of this method's points for this instance.
    pub hull: bool,
    pub degenerate: bool,
}

pub fn write_points(points: &[PcaPoint], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for p in points {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points_on_first_axis() {
        let mut a = [0.0; NUM_FEATURES];
        let mut b = [0.0; NUM_FEATURES];
        a[0] = 1.0;
        b[3] = 2.0;
        let p = pca_2d(&[a, b]).unwrap();
        assert!(!p.degenerate);
        for c in &p.coords {
            assert!(c[1].abs() < 1e-12);
        }
        assert!((p.coords[0][0] + p.coords[1][0]).abs() < 1e-12);
        assert_eq!(p.hull, vec![true, true]);
    }

    #[test]
    fn duplicates_are_degenerate() {
        let a = [0.5; NUM_FEATURES];
        let p = pca_2d(&[a, a, a]).unwrap();
        assert!(p.degenerate);
        assert!(p.coords.iter().all(|c| *c == [0.0, 0.0]));
    }

    #[test]
    fn reconstruction_error_is_discarded_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let rows: Vec<[f64; NUM_FEATURES]> = (0..10)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            let p = pca_2d(&rows).unwrap();
            let discarded: f64 = p.eigenvalues[2..].iter().sum();
            assert!((p.reconstruction_error(&rows) - discarded).abs() < 1e-9);
        }
    }

    #[test]
    fn hull_of_square_with_center() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.5, 0.0],
        ];
        assert_eq!(hull_mask(&pts), vec![true, true, true, true, false, false]);
    }
}
