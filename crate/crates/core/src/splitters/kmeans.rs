//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub restarts: usize,
    /// Extra restarts allowed when a run ends with an empty cluster.
    pub degenerate_retries: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions { max_iter: 100, restarts: 10, degenerate_retries: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct KMeans {
    pub labels: Vec<usize>,
    /// Row-major `k x dim`.
    pub centers: Vec<f64>,
    /// Within-cluster sum of squares of the final assignment.
    pub wcss: f64,
    /// Objective after every assignment step.
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_rows(points: &[f64], dim: usize) -> usize {
    let mut rows: Vec<&[f64]> = points.chunks(dim).collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    rows.dedup();
    rows.len()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
pub fn kmeans_pp(points: &[f64], dim: usize, k: usize, rng: &mut SimRng) -> Vec<f64> {
    let n = points.len() / dim;
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = points.chunks(dim).map(|p| sq_dist(p, &centers[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    chosen = i;
                    break;
                }
                r -= w;
            }
            // never pick a zero-weight point through rounding
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick * dim..(pick + 1) * dim].to_vec();
        for (i, p) in points.chunks(dim).enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centers.extend(c);
    }
    centers
}

/// Lloyd iterations from the given centers. An empty cluster's center is
/// moved onto the point farthest from its own center.
pub fn lloyd(points: &[f64], dim: usize, mut centers: Vec<f64>, max_iter: usize) -> KMeans {
    let n = points.len() / dim;
    let k = centers.len() / dim;
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut dists = vec![0.0; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut obj = 0.0;
        for (i, p) in points.chunks(dim).enumerate() {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(p, &centers[c * dim..(c + 1) * dim]);
                if d < bd {
                    bd = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            dists[i] = bd;
            obj += bd;
        }
        trace.push(obj);
        if !changed && trace.len() > 1 {
            break;
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, p) in points.chunks(dim).enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i] * dim..(labels[i] + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centers[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                }
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(b.cmp(&a)))
                    .unwrap();
                centers[c * dim..(c + 1) * dim].copy_from_slice(&points[far * dim..(far + 1) * dim]);
                dists[far] = 0.0;
            }
        }
    }
    let wcss = points
        .chunks(dim)
        .zip(&labels)
        .map(|(p, &c)| sq_dist(p, &centers[c * dim..(c + 1) * dim]))
        .sum();
    KMeans { labels, centers, wcss, trace }
}

fn has_empty_cluster(labels: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    seen.iter().any(|s| !s)
}

/// Best of `restarts` seeded runs by WCSS (earliest run wins ties).
pub fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeans> {
    if dim == 0 || !points.len().is_multiple_of(dim) || points.is_empty() {
        return Err(Error::split("k-means input shape mismatch"));
    }
    if k == 0 {
        return Err(Error::split("k-means needs k >= 1"));
    }
    let distinct = distinct_rows(points, dim);
    if distinct < k {
        return Err(Error::split(format!("only {distinct} distinct rows for k = {k} clusters")));
    }
    let mut best: Option<KMeans> = None;
    let mut good = 0;
    let mut attempt = 0u64;
    while good < opts.restarts.max(1) {
        if attempt as usize >= opts.restarts.max(1) + opts.degenerate_retries {
            break;
        }
        let mut rng = rng::child_rng(seed, &[attempt]);
        attempt += 1;
        let init = kmeans_pp(points, dim, k, &mut rng);
        let fit = lloyd(points, dim, init, opts.max_iter);
        if has_empty_cluster(&fit.labels, k) {
            continue;
        }
        good += 1;
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::split("k-means produced an empty cluster on every attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn two_clouds(seed: u64) -> Vec<f64> {
        let mut r = rng::rng(seed);
        let nd = Normal::new(0.0, 0.3).unwrap();
        let mut pts = Vec::new();
        for i in 0..40 {
            let off = if i < 20 { 0.0 } else { 10.0 };
            pts.push(off + nd.sample(&mut r));
            pts.push(off + nd.sample(&mut r));
        }
        pts
    }

    #[test]
    fn separated_clouds_recovered() {
        let pts = two_clouds(1);
        let fit = kmeans(&pts, 2, 2, 7, &KMeansOptions::default()).unwrap();
        let a = fit.labels[0];
        assert!(fit.labels[..20].iter().all(|&l| l == a));
        assert!(fit.labels[20..].iter().all(|&l| l != a));
    }

    #[test]
    fn objective_never_increases() {
        let mut r = rng::rng(3);
        let pts: Vec<f64> = (0..400).map(|_| r.random::<f64>()).collect();
        for s in 0..5 {
            let init = kmeans_pp(&pts, 2, 6, &mut rng::rng(s));
            let fit = lloyd(&pts, 2, init, 100);
            for w in fit.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", fit.trace);
            }
        }
    }

    #[test]
    fn k_equal_distinct_points_gives_singletons() {
        let pts = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0];
        let fit = kmeans(&pts, 2, 4, 0, &KMeansOptions::default()).unwrap();
        let mut l = fit.labels.clone();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
        assert!(kmeans(&pts, 2, 5, 0, &KMeansOptions::default()).is_err());
    }
}
