use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExtractionError, StateSample};
use crate::network::HiddenState;

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<HiddenState>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid; ties go to the lowest index.
pub fn nearest(centroids: &[HiddenState], z: &HiddenState) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(&c.0, &z.0);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// k-means with k-means++ seeding on the samples' hidden states; also
/// writes the assignment into each sample's `cluster_id`.
pub fn cluster_states(
    samples: &mut [StateSample],
    k: usize,
    seed: u64,
) -> Result<Clustering, ExtractionError> {
    let points: Vec<HiddenState> = samples.iter().map(|s| s.hidden.clone()).collect();
    let c = run(&points, k, seed, None)?;
    for (s, &a) in samples.iter_mut().zip(&c.assignments) {
        s.cluster_id = Some(a);
    }
    Ok(c)
}

/// Pick an index with probability proportional to `weights`.
fn weighted_pick(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 && r < w {
            return i;
        }
        r -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).expect("positive total weight")
}

pub(super) fn run(
    points: &[HiddenState],
    k: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<Clustering, ExtractionError> {
    if k == 0 {
        return Err(ExtractionError::ZeroK);
    }
    let distinct = count_distinct(points, k);
    if k > distinct {
        return Err(ExtractionError::TooFewStates { k, distinct });
    }
    let late = || deadline.is_some_and(|d| Instant::now() >= d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding; the first pick also goes through the weighted draw
    // so uniformly duplicated data seeds identically
    let mut centroids = vec![points[weighted_pick(&vec![1.0; points.len()], &mut rng)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(&p.0, &centroids[0].0)).collect();
    while centroids.len() < k {
        let next = points[weighted_pick(&d2, &mut rng)].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(&p.0, &next.0));
        }
        centroids.push(next);
    }

    let dim = points[0].len();
    let mut assignments = vec![0; points.len()];
    for _ in 0..MAX_ITERATIONS {
        if late() {
            return Err(ExtractionError::Timeout);
        }
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest(&centroids, p);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(&p.0) {
                *s += v;
            }
        }
        let mut moved: f64 = 0.0;
        for c in 0..k {
            let new = if counts[c] == 0 {
                // re-seed an empty cluster at the worst-served point
                let far = (0..points.len())
                    .max_by(|&i, &j| {
                        let di = dist2(&points[i].0, &centroids[assignments[i]].0);
                        let dj = dist2(&points[j].0, &centroids[assignments[j]].0);
                        di.total_cmp(&dj).then(j.cmp(&i))
                    })
                    .expect("non-empty");
                points[far].clone()
            } else {
                HiddenState(sums[c].iter().map(|s| s / counts[c] as f64).collect())
            };
            moved = moved.max(dist2(&new.0, &centroids[c].0).sqrt());
            centroids[c] = new;
        }
        if moved <= TOLERANCE {
            break;
        }
    }
    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest(&centroids, p);
    }
    let inertia = assignments
        .iter()
        .zip(points)
        .map(|(&a, p)| dist2(&p.0, &centroids[a].0))
        .sum();
    Ok(Clustering {
        centroids,
        assignments,
        inertia,
    })
}

/// Distinct points, counting no further than `cap`.
fn count_distinct(points: &[HiddenState], cap: usize) -> usize {
    let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    for p in points {
        seen.insert(p.0.iter().map(|v| v.to_bits()).collect());
        if seen.len() > cap {
            break;
        }
    }
    seen.len()
}
