use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansOptions};
use super::{splits_from_folds, BlockMode, ClusterSource, ResamplingPlan, Scheme, Split};
use crate::error::{Error, Result};
use crate::rng;

/// Planar Euclidean distance; the single distance used by all spatial schemes.
pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Boundary of a single spatial split. Points on the test side (including
/// points exactly on the boundary) form the test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Boundary {
    /// Test side: `a*x + b*y >= c`.
    HalfPlane { a: f64, b: f64, c: f64 },
    /// Test side: inside the polygon.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl FromStr for Boundary {
    type Err = Error;

    /// `vertical:X`, `horizontal:Y`, `halfplane:A,B,C` or `polygon:x,y;x,y;...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| Error::split(format!("bad boundary {s:?}")))?;
        let nums = |t: &str| -> Result<Vec<f64>> {
            t.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::split(format!("bad number {v:?} in boundary"))))
                .collect()
        };
        match kind.trim() {
            "vertical" => Ok(Boundary::HalfPlane { a: 1.0, b: 0.0, c: nums(rest)?[0] }),
            "horizontal" => Ok(Boundary::HalfPlane { a: 0.0, b: 1.0, c: nums(rest)?[0] }),
            "halfplane" => match nums(rest)?[..] {
                [a, b, c] => Ok(Boundary::HalfPlane { a, b, c }),
                _ => Err(Error::split("halfplane needs a,b,c")),
            },
            "polygon" => {
                let vertices = rest
                    .split(';')
                    .map(|p| match nums(p)?[..] {
                        [x, y] => Ok([x, y]),
                        _ => Err(Error::split(format!("bad polygon vertex {p:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Boundary::Polygon { vertices })
            }
            other => Err(Error::split(format!("unknown boundary kind {other:?}"))),
        }
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    distance(p, [a[0] + t * dx, a[1] + t * dy])
}

impl Boundary {
    fn validate(&self) -> Result<()> {
        match self {
            Boundary::HalfPlane { a, b, c } => {
                if !(a.is_finite() && b.is_finite() && c.is_finite()) || a.hypot(*b) == 0.0 {
                    return Err(Error::split("half-plane needs a finite nonzero normal"));
                }
            }
            Boundary::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::split("polygon needs at least three vertices"));
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary: >= 0 on the test side.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Boundary::HalfPlane { a, b, c } => (a * p[0] + b * p[1] - c) / a.hypot(*b),
            Boundary::Polygon { vertices } => {
                let m = vertices.len();
                let mut d = f64::INFINITY;
                let mut inside = false;
                for i in 0..m {
                    let (u, v) = (vertices[i], vertices[(i + 1) % m]);
                    d = d.min(segment_distance(p, u, v));
                    if (u[1] > p[1]) != (v[1] > p[1]) {
                        let x = u[0] + (p[1] - u[1]) / (v[1] - u[1]) * (v[0] - u[0]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                if inside || d == 0.0 {
                    d
                } else {
                    -d
                }
            }
        }
    }
}

/// One split: test = points on the test side of `boundary`; train = points
/// on the other side farther than `buffer` from it.
pub fn single_spatial_split(coords: &[[f64; 2]], boundary: &Boundary, buffer: f64) -> Result<ResamplingPlan> {
    boundary.validate()?;
    if !(buffer >= 0.0) {
        return Err(Error::split("buffer width must be nonnegative"));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &c) in coords.iter().enumerate() {
        let s = boundary.signed_distance(c);
        if s >= 0.0 {
            test.push(i);
        } else if -s > buffer {
            train.push(i);
        }
    }
    if test.is_empty() {
        return Err(Error::split("no points on the test side of the boundary"));
    }
    if train.is_empty() {
        return Err(Error::split("no training points remain outside the buffer"));
    }
    ResamplingPlan::new(
        Scheme::SingleSpatialSplit { boundary: boundary.clone(), buffer },
        0,
        coords.len(),
        vec![Split { train, test, repeat: 0 }],
    )
}

fn bounding_box(coords: &[[f64; 2]]) -> [f64; 4] {
    let mut e = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for c in coords {
        e[0] = e[0].min(c[0]);
        e[1] = e[1].max(c[0]);
        e[2] = e[2].min(c[1]);
        e[3] = e[3].max(c[1]);
    }
    e
}

fn cell(v: f64, lo: f64, hi: f64, cells: usize) -> usize {
    let w = (hi - lo) / cells as f64;
    if w <= 0.0 {
        return 0;
    }
    (((v - lo) / w).floor().max(0.0) as usize).min(cells - 1)
}

/// (row, col) of the tile containing `p`. Points on an interior grid line
/// belong to the tile with the larger index.
pub fn tile_of(p: [f64; 2], extent: [f64; 4], grid: (usize, usize)) -> (usize, usize) {
    (cell(p[1], extent[2], extent[3], grid.0), cell(p[0], extent[0], extent[1], grid.1))
}

/// Uniform rectangular blocks over `extent` (default: bounding box).
pub fn rectangular_tiles(
    coords: &[[f64; 2]],
    grid: (usize, usize),
    mode: BlockMode,
    extent: Option<[f64; 4]>,
    seed: u64,
) -> Result<ResamplingPlan> {
    if grid.0 == 0 || grid.1 == 0 {
        return Err(Error::split("grid dimensions must be positive"));
    }
    if coords.is_empty() {
        return Err(Error::split("no coordinates"));
    }
    let e = match extent {
        Some(e) => {
            if !(e[0] < e[1] && e[2] < e[3]) {
                return Err(Error::split("extent must satisfy xmin < xmax and ymin < ymax"));
            }
            if let Some(i) = coords.iter().position(|c| c[0] < e[0] || c[0] > e[1] || c[1] < e[2] || c[1] > e[3]) {
                return Err(Error::split(format!("point {i} lies outside the grid extent")));
            }
            e
        }
        None => bounding_box(coords),
    };
    let block: Vec<usize> = coords
        .iter()
        .map(|&c| {
            let (r, col) = tile_of(c, e, grid);
            r * grid.1 + col
        })
        .collect();
    let folds = match mode {
        BlockMode::OnePerFold => None,
        BlockMode::ToKFolds(k) => Some(k),
    };
    let scheme = Scheme::RectangularTiles { rows: grid.0, cols: grid.1, folds, extent };
    let splits = blocks_to_splits(&block, mode, seed)?;
    ResamplingPlan::new(scheme, seed, coords.len(), splits)
}

/// Shared by tiles and geographical units: rows labeled by block id.
fn blocks_to_splits<B: Ord + Copy>(block: &[B], mode: BlockMode, seed: u64) -> Result<Vec<Split>> {
    let mut ids: Vec<B> = block.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let index: BTreeMap<B, usize> = ids.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let (k, bfold): (usize, Vec<usize>) = match mode {
        BlockMode::OnePerFold => {
            if ids.len() < 2 {
                return Err(Error::split("all points fall into a single block; no training data would remain"));
            }
            (ids.len(), (0..ids.len()).collect())
        }
        BlockMode::ToKFolds(k) => {
            if k < 2 {
                return Err(Error::split(format!("k = {k} must be at least 2")));
            }
            if ids.len() < k {
                return Err(Error::split(format!("{} nonempty blocks, fewer than k = {k}", ids.len())));
            }
            let mut order: Vec<usize> = (0..ids.len()).collect();
            order.shuffle(&mut rng::rng(seed));
            let mut f = vec![0; ids.len()];
            for (pos, &b) in order.iter().enumerate() {
                f[b] = pos % k;
            }
            (k, f)
        }
    };
    let fold_of: Vec<usize> = block.iter().map(|b| bfold[index[b]]).collect();
    Ok(splits_from_folds(&fold_of, k, 0))
}

/// k-means folds on coordinates or features (`points` row-major, `dim` columns).
pub fn clustered_groups(points: &[f64], dim: usize, k: usize, source: ClusterSource, seed: u64) -> Result<ResamplingPlan> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::split("point matrix shape mismatch"));
    }
    if k < 2 {
        return Err(Error::split(format!("k = {k} must be at least 2")));
    }
    let n = points.len() / dim;
    let fit = kmeans(points, dim, k, seed, &KMeansOptions::default())?;
    // fold order: by smallest member row
    let mut first = vec![usize::MAX; k];
    for (i, &c) in fit.labels.iter().enumerate() {
        first[c] = first[c].min(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| first[c]);
    let mut rank = vec![0; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let fold_of: Vec<usize> = fit.labels.iter().map(|&c| rank[c]).collect();
    ResamplingPlan::new(Scheme::ClusteredGroups { k, source }, seed, n, splits_from_folds(&fold_of, k, 0))
}

/// Leave-one-out with a circular exclusion zone of `radius` around the test point.
pub fn loo_buffer(coords: &[[f64; 2]], radius: f64) -> Result<ResamplingPlan> {
    if !(radius >= 0.0) {
        return Err(Error::split("buffer radius must be nonnegative"));
    }
    let mut splits = Vec::with_capacity(coords.len());
    for (i, &c) in coords.iter().enumerate() {
        let train: Vec<usize> =
            (0..coords.len()).filter(|&j| j != i && distance(c, coords[j]) > radius).collect();
        if train.is_empty() {
            return Err(Error::split(format!("test point {i}: no training points outside radius {radius}")));
        }
        splits.push(Split { train, test: vec![i], repeat: 0 });
    }
    ResamplingPlan::new(Scheme::LooBuffer { radius }, 0, coords.len(), splits)
}

const DISC_RETRIES: usize = 1000;

/// `k` discs with centers uniform over the bounding box. Test: within
/// `disc_radius` of the center; train: beyond `disc_radius + buffer`.
pub fn leave_one_disc_out(
    coords: &[[f64; 2]],
    k: usize,
    disc_radius: f64,
    buffer: f64,
    seed: u64,
) -> Result<ResamplingPlan> {
    if k == 0 {
        return Err(Error::split("need at least one disc"));
    }
    if !(disc_radius > 0.0) {
        return Err(Error::split("disc radius must be positive"));
    }
    if !(buffer >= 0.0) {
        return Err(Error::split("buffer width must be nonnegative"));
    }
    if coords.is_empty() {
        return Err(Error::split("no coordinates"));
    }
    let e = bounding_box(coords);
    let mut rng = rng::rng(seed);
    let mut splits = Vec::with_capacity(k);
    for disc in 0..k {
        let mut tries = 0;
        loop {
            let center = [
                e[0] + rng.random::<f64>() * (e[1] - e[0]),
                e[2] + rng.random::<f64>() * (e[3] - e[2]),
            ];
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, &c) in coords.iter().enumerate() {
                let d = distance(c, center);
                if d <= disc_radius {
                    test.push(i);
                } else if d > disc_radius + buffer {
                    train.push(i);
                }
            }
            if !test.is_empty() && !train.is_empty() {
                splits.push(Split { train, test, repeat: 0 });
                break;
            }
            tries += 1;
            if tries >= DISC_RETRIES {
                return Err(Error::split(format!("could not place disc {disc} with nonempty train and test sets")));
            }
        }
    }
    ResamplingPlan::new(Scheme::LeaveOneDiscOut { k, disc_radius, buffer }, seed, coords.len(), splits)
}

/// Pre-existing spatial units as blocks.
pub fn geo_units(units: &[i64], mode: BlockMode, seed: u64) -> Result<ResamplingPlan> {
    let folds = match mode {
        BlockMode::OnePerFold => None,
        BlockMode::ToKFolds(k) => Some(k),
    };
    let splits = blocks_to_splits(units, mode, seed)?;
    ResamplingPlan::new(Scheme::GeoUnits { folds }, seed, units.len(), splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Vec<[f64; 2]> {
        (0..4).map(|i| [i as f64, 0.0]).collect()
    }

    #[test]
    fn single_split_examples() {
        let b: Boundary = "vertical:1.5".parse().unwrap();
        let p = single_spatial_split(&line(), &b, 0.0).unwrap();
        assert_eq!(p.splits[0].train, vec![0, 1]);
        assert_eq!(p.splits[0].test, vec![2, 3]);
        let p = single_spatial_split(&line(), &b, 0.6).unwrap();
        assert_eq!(p.splits[0].train, vec![0]);
        assert_eq!(p.splits[0].test, vec![2, 3]);
        assert!(single_spatial_split(&line(), &b, 2.0).is_err());
    }

    #[test]
    fn polygon_boundary() {
        let b: Boundary = "polygon:1.5,-1;4,-1;4,1;1.5,1".parse().unwrap();
        assert!(b.signed_distance([2.0, 0.0]) > 0.0);
        assert!((b.signed_distance([1.0, 0.0]) + 0.5).abs() < 1e-12);
        let p = single_spatial_split(&line(), &b, 0.6).unwrap();
        assert_eq!(p.splits[0].train, vec![0]);
        assert_eq!(p.splits[0].test, vec![2, 3]);
    }

    #[test]
    fn tiles_examples() {
        let pts = vec![[0.1, 0.1], [0.9, 0.1], [0.1, 0.9], [0.9, 0.9]];
        let p = rectangular_tiles(&pts, (2, 2), BlockMode::OnePerFold, Some([0.0, 1.0, 0.0, 1.0]), 0).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.splits.iter().all(|s| s.test.len() == 1));
        let p = rectangular_tiles(&pts, (2, 2), BlockMode::ToKFolds(2), Some([0.0, 1.0, 0.0, 1.0]), 5).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.splits.iter().all(|s| s.test.len() == 2));
        assert_eq!(tile_of([0.5, 0.5], [0.0, 1.0, 0.0, 1.0], (2, 2)), (1, 1));
        assert_eq!(tile_of([1.0, 0.0], [0.0, 1.0, 0.0, 1.0], (2, 2)), (0, 1));
        let same = vec![[0.1, 0.1], [0.2, 0.2]];
        assert!(rectangular_tiles(&same, (2, 2), BlockMode::OnePerFold, Some([0.0, 1.0, 0.0, 1.0]), 0).is_err());
        assert!(rectangular_tiles(&pts, (2, 2), BlockMode::OnePerFold, Some([0.0, 0.5, 0.0, 1.0]), 0).is_err());
    }

    #[test]
    fn loo_buffer_examples() {
        let p = loo_buffer(&line(), 1.5).unwrap();
        assert_eq!(p.splits[0].train, vec![2, 3]);
        assert_eq!(p.splits[0].test, vec![0]);
        let p = loo_buffer(&line(), 0.0).unwrap();
        assert_eq!(p.splits[2].train, vec![0, 1, 3]);
        let err = loo_buffer(&line(), 3.0).unwrap_err();
        assert!(err.to_string().contains("test point"), "{err}");
    }

    #[test]
    fn disc_buffer_properties() {
        let pts: Vec<[f64; 2]> = (0..100).map(|i| [(i % 10) as f64, (i / 10) as f64]).collect();
        let p = leave_one_disc_out(&pts, 5, 1.5, 0.0, 3).unwrap();
        for s in &p.splits {
            assert_eq!(s.train.len() + s.test.len(), 100);
        }
        let p = leave_one_disc_out(&pts, 5, 1.5, 1.0, 3).unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.splits.iter().all(|s| s.train.len() + s.test.len() < 100));
        assert!(leave_one_disc_out(&pts, 2, 100.0, 0.0, 3).is_err());
    }

    #[test]
    fn geo_unit_examples() {
        let units: Vec<i64> = (0..21).map(|i| i % 7).collect();
        assert_eq!(geo_units(&units, BlockMode::OnePerFold, 0).unwrap().len(), 7);
        let four: Vec<i64> = vec![1, 1, 2, 2, 3, 3, 4, 4];
        let p = geo_units(&four, BlockMode::ToKFolds(2), 9).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.splits.iter().all(|s| s.test.len() == 4));
        assert!(geo_units(&[5, 5, 5], BlockMode::OnePerFold, 0).is_err());
    }
}
