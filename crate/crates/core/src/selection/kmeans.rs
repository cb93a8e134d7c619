//! Two-cluster Lloyd iterations with farthest-pair seeding.

use crate::embedding::{sq_dist, Embedding};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cluster {
    One,
    Two,
}

impl Cluster {
    fn index(self) -> usize {
        match self {
            Cluster::One => 0,
            Cluster::Two => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSplit {
    /// Cluster of each input point, in input order.
    pub assignments: Vec<Cluster>,
    pub centers: [Embedding; 2],
    pub iterations: usize,
}

impl ClusterSplit {
    pub fn members(&self, cluster: Cluster) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == cluster)
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// Split `points` (expected unit-norm) into two clusters.
///
/// Seeds the centers at the farthest pair, ties going to the lowest index
/// pair. An emptied cluster takes the point farthest from the other center.
/// Inputs whose points all coincide yield [`Error::DegenerateClustering`].
pub fn kmeans2(points: &[Embedding], params: KMeansParams) -> Result<ClusterSplit> {
    let k = points.len();
    if k < 2 {
        return Err(Error::TooFewResponses(k));
    }
    let dim = points[0].dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.dim(),
        });
    }
    let pts: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();

    let mut seed = (0, 1, f64::NEG_INFINITY);
    for i in 0..k {
        for j in (i + 1)..k {
            let d = sq_dist(pts[i], pts[j]);
            if d > seed.2 {
                seed = (i, j, d);
            }
        }
    }
    if seed.2 <= 0.0 {
        return Err(Error::DegenerateClustering);
    }
    let mut centers = [pts[seed.0].to_vec(), pts[seed.1].to_vec()];
    let mut assignments = vec![Cluster::One; k];
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        for (i, p) in pts.iter().enumerate() {
            let d1 = sq_dist(p, &centers[0]);
            let d2 = sq_dist(p, &centers[1]);
            assignments[i] = if d2 < d1 { Cluster::Two } else { Cluster::One };
        }
        for empty in [Cluster::One, Cluster::Two] {
            if assignments.iter().all(|c| *c != empty) {
                let other = &centers[1 - empty.index()];
                let (far, dist) = pts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, sq_dist(p, other)))
                    .fold((0, f64::NEG_INFINITY), |best, cur| {
                        if cur.1 > best.1 {
                            cur
                        } else {
                            best
                        }
                    });
                if dist <= 0.0 {
                    return Err(Error::DegenerateClustering);
                }
                assignments[far] = empty;
            }
        }
        let mut moved: f64 = 0.0;
        for c in [Cluster::One, Cluster::Two] {
            let members: Vec<&[f64]> = pts
                .iter()
                .zip(&assignments)
                .filter(|(_, a)| **a == c)
                .map(|(p, _)| *p)
                .collect();
            let n = members.len() as f64;
            let new: Vec<f64> = (0..dim)
                .map(|d| members.iter().map(|m| m[d]).sum::<f64>() / n)
                .collect();
            moved = moved.max(sq_dist(&new, &centers[c.index()]).sqrt());
            centers[c.index()] = new;
        }
        if moved < params.tol {
            break;
        }
    }

    let [c1, c2] = centers;
    Ok(ClusterSplit {
        assignments,
        centers: [Embedding::new(c1)?, Embedding::new(c2)?],
        iterations,
    })
}
