use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_boundary_point, BlockedVector, SourceSignature};
use crate::builder::TargetSignature;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};

/// Sampled boundary points `W_i`, grouped to match the target blocks.
///
/// Physical points are stored once. Index `i` in `0..2N_{t+1}` belongs to
/// group `k` when `2N_k ≤ i < 2N_k + 2n_k`, and refers to the physical point
/// `N_k + ((i − 2N_k) mod n_k)`, so the two twins of a group share points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundaryNet<T> {
    pub points: Vec<BlockedVector<T>>,
    pub group_sizes: Vec<usize>,
    pub index_map: Vec<usize>,
    /// Largest distance from a candidate sample to its nearest net point.
    pub covering_radius: T,
    pub seed: u64,
    pub candidates: usize,
}

impl<T: Scalar> BoundaryNet<T> {
    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_indices(&self) -> usize {
        self.index_map.len()
    }

    /// Physical point for a duplicated index.
    pub fn point_of_index(&self, i: usize) -> &BlockedVector<T> {
        &self.points[self.index_map[i]]
    }

    /// Group `k` (0-based) owning physical point `p`.
    pub fn group_of_point(&self, p: usize) -> usize {
        let mut start = 0;
        for (k, &n) in self.group_sizes.iter().enumerate() {
            if p < start + n {
                return k;
            }
            start += n;
        }
        panic!("point {p} out of range");
    }

    /// Physical points belonging to group `k`.
    pub fn group_points(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.group_sizes[..k].iter().sum();
        start..start + self.group_sizes[k]
    }

    /// Distance from `z` to the nearest net point.
    pub fn nearest_distance(&self, z: &BlockedVector<T>) -> T {
        self.points
            .iter()
            .map(|w| w.distance(z))
            .fold(T::infinity(), T::min)
    }
}

/// Duplicated index map over `0..2N_{t+1}`.
pub fn duplication_map(group_sizes: &[usize]) -> Vec<usize> {
    let mut map = Vec::with_capacity(2 * group_sizes.iter().sum::<usize>());
    let mut base = 0;
    for &n in group_sizes {
        for j in 0..2 * n {
            map.push(base + j % n);
        }
        base += n;
    }
    map
}

/// Picks `N_{t+1}` well-spread boundary points by farthest-point selection
/// from `density` seeded samples.
pub fn sample_boundary_net<T: Scalar>(
    sig: &SourceSignature,
    tsig: &TargetSignature,
    seed: u64,
    density: usize,
    tol: &Tolerances<T>,
) -> Result<BoundaryNet<T>> {
    let needed: usize = tsig.n().iter().sum();
    if density < needed {
        return Err(Error::Config(format!(
            "net density {density} is below the {needed} points required"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<BlockedVector<T>> = (0..density)
        .map(|_| random_boundary_point(sig, &mut rng, tol))
        .collect();

    let mut chosen = vec![0usize];
    let mut nearest: Vec<T> = candidates
        .iter()
        .map(|c| c.distance(&candidates[0]))
        .collect();
    while chosen.len() < needed {
        let mut best = 0;
        for (j, &d) in nearest.iter().enumerate() {
            if d > nearest[best] {
                best = j;
            }
        }
        if nearest[best] == T::zero() {
            return Err(Error::Config(
                "net density too small to supply distinct points".into(),
            ));
        }
        chosen.push(best);
        for (j, c) in candidates.iter().enumerate() {
            let d = c.distance(&candidates[best]);
            if d < nearest[j] {
                nearest[j] = d;
            }
        }
    }
    let covering_radius = nearest.iter().copied().fold(T::zero(), T::max);
    Ok(BoundaryNet {
        points: chosen.iter().map(|&j| candidates[j].clone()).collect(),
        group_sizes: tsig.n().to_vec(),
        index_map: duplication_map(tsig.n()),
        covering_radius,
        seed,
        candidates: density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::eval_rho;

    fn setup() -> (SourceSignature, TargetSignature) {
        (
            SourceSignature::new(vec![1, 1], vec![2]).unwrap(),
            TargetSignature::new(vec![2, 2], vec![1], 3).unwrap(),
        )
    }

    #[test]
    fn duplication_ranges() {
        let map = duplication_map(&[2, 2]);
        assert_eq!(map, vec![0, 1, 0, 1, 2, 3, 2, 3]);
        // 1-based index 3 refers to the same point as 1-based index 1.
        assert_eq!(map[2], map[0]);
        let map = duplication_map(&[2, 3, 2]);
        assert_eq!(map.len(), 14);
        for (i, &p) in map.iter().enumerate() {
            let (start, n) = if i < 4 {
                (0, 2)
            } else if i < 10 {
                (4, 3)
            } else {
                (10, 2)
            };
            let base = start / 2;
            assert_eq!(p, base + (i - start) % n);
        }
    }

    #[test]
    fn minimal_net_and_determinism() {
        let (s, t) = setup();
        let tol = Tolerances::default();
        let net = sample_boundary_net::<f64>(&s, &t, 11, 4, &tol).unwrap();
        assert_eq!(net.num_points(), 4);
        assert_eq!(net.num_indices(), 8);
        for w in &net.points {
            assert!(eval_rho(&s, w).unwrap().abs() < 1e-12);
        }
        for i in 0..4 {
            for j in 0..i {
                assert!(net.points[i].distance(&net.points[j]) > 0.0);
            }
        }
        let again = sample_boundary_net::<f64>(&s, &t, 11, 4, &tol).unwrap();
        assert_eq!(net, again);
        assert!(sample_boundary_net::<f64>(&s, &t, 11, 3, &tol).is_err());
    }

    #[test]
    fn covering_radius_bounds_candidates() {
        let (s, t) = setup();
        let tol = Tolerances::default();
        let net = sample_boundary_net::<f64>(&s, &t, 2, 500, &tol).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let z = random_boundary_point::<f64, _>(&s, &mut rng, &tol);
            assert!(net.nearest_distance(&z) <= net.covering_radius);
        }
        assert_eq!(net.group_of_point(3), 1);
        assert_eq!(net.group_points(1), 2..4);
    }
}
