//! Structural-integrity metrics for positional embedding fields.
//!
//! All three metrics look at the similarity map around each center cell:
//!
//! * undirected monotonicity (`m_u`): Spearman correlation between radius and
//!   the mean similarity on each radial ring, averaged as `1 - rho`;
//! * directed monotonicity (`m_d`): the same correlation restricted to
//!   angular buckets, averaged over the buckets of each center;
//! * undirected asymmetry (`a_su`): mean coefficient of variation of the
//!   similarities on each ring.
//!
//! Rings are keyed by exact integer squared distance, so no floating-point
//! binning is involved.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::pe::SimilarityField;

/// Ring means closer than this are ranked as ties. Mathematically equal means
/// (common for sinusoidal fields on integer orders) otherwise get an order
/// decided by rounding.
pub const RANK_TIE_TOLERANCE: f64 = 1e-12;

/// Rings whose mean similarity is below this magnitude are left out of the
/// coefficient-of-variation average.
pub const CV_MU_EPSILON: f64 = 1e-12;

/// Fractional (average) ranks, 1-based.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    average_ranks_with_tolerance(values, 0.0)
}

/// Average ranks where values within `tol` of the smallest member of a run
/// count as tied.
pub fn average_ranks_with_tolerance(values: &[f64], tol: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let anchor = values[idx[i]];
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] - anchor <= tol {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties (Pearson on ranks).
///
/// Returns `None` when the correlation is undefined: mismatched lengths,
/// fewer than two samples, or a sequence with no rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Similarity statistics on each ring around one center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub center: (usize, usize),
    /// Ascending distinct radii.
    pub levels: Vec<f64>,
    /// Integer squared radii matching `levels`.
    pub squared_levels: Vec<u64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Ring {
    squared: u64,
    mu: f64,
    sigma: f64,
    count: usize,
}

fn squared_distance(shape: GridShape, a: usize, b: usize) -> u64 {
    let (ra, ca) = shape.coords(a);
    let (rb, cb) = shape.coords(b);
    let dr = ra.abs_diff(rb) as u64;
    let dc = ca.abs_diff(cb) as u64;
    dr * dr + dc * dc
}

/// Groups `cells` by squared distance to `center`. Sums run in the order the
/// cells are supplied, which keeps results bit-identical across callers that
/// iterate the same cells.
fn rings(
    shape: GridShape,
    center: usize,
    sims: &[f64],
    cells: impl Iterator<Item = usize>,
) -> Vec<Ring> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for cell in cells {
        if cell == center {
            continue;
        }
        groups
            .entry(squared_distance(shape, center, cell))
            .or_default()
            .push(sims[cell]);
    }
    groups
        .into_iter()
        .map(|(squared, values)| {
            let count = values.len();
            let mu = values.iter().sum::<f64>() / count as f64;
            let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / count as f64;
            Ring {
                squared,
                mu,
                sigma: var.sqrt(),
                count,
            }
        })
        .collect()
}

/// Correlation between radius and ring mean; undefined counts as zero.
fn ring_correlation(rings: &[Ring]) -> f64 {
    let xs: Vec<f64> = rings.iter().map(|r| r.squared as f64).collect();
    let ys: Vec<f64> = rings.iter().map(|r| r.mu).collect();
    if xs.len() < 2 {
        return 0.0;
    }
    pearson(
        &average_ranks(&xs),
        &average_ranks_with_tolerance(&ys, RANK_TIE_TOLERANCE),
    )
    .unwrap_or(0.0)
}

pub fn radial_profile(field: &SimilarityField, center: (usize, usize)) -> Result<RadialProfile> {
    let shape = field.shape();
    let (row, col) = center;
    if !shape.contains(row, col) {
        return Err(Error::CenterOutOfGrid { row, col });
    }
    let c = shape.cell(row, col);
    let rings = rings(shape, c, field.row(c), 0..shape.len());
    Ok(RadialProfile {
        center,
        levels: rings.iter().map(|r| (r.squared as f64).sqrt()).collect(),
        squared_levels: rings.iter().map(|r| r.squared).collect(),
        mu: rings.iter().map(|r| r.mu).collect(),
        sigma: rings.iter().map(|r| r.sigma).collect(),
        counts: rings.iter().map(|r| r.count).collect(),
    })
}

/// `1 - rho` for every center, row-major.
pub fn undirected_scores(field: &SimilarityField) -> Vec<f64> {
    let shape = field.shape();
    (0..shape.len())
        .map(|c| 1.0 - ring_correlation(&rings(shape, c, field.row(c), 0..shape.len())))
        .collect()
}

/// Undirected monotonicity in [0, 2]; 2 means similarity falls with radius
/// around every center. Centers whose ring means have no rank variance
/// contribute `rho = 0`.
pub fn undirected_monotonicity(field: &SimilarityField) -> f64 {
    grid_mean(&undirected_scores(field))
}

fn grid_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-center directed scores plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedDetail {
    pub n_buckets: usize,
    /// `1 - mean_rho` per center, row-major.
    pub scores: Vec<f64>,
    /// Buckets with fewer than two distinct radii, summed over all centers.
    pub skipped_buckets: usize,
    /// Centers where every bucket was skipped (they contribute `rho = 0`).
    pub empty_centers: usize,
}

impl DirectedDetail {
    pub fn value(&self) -> f64 {
        grid_mean(&self.scores)
    }
}

/// Bucket of the direction from `center` to `cell`.
fn bucket_of(shape: GridShape, center: usize, cell: usize, n_buckets: usize) -> usize {
    let (x, y) = shape.coords(center);
    let (i, j) = shape.coords(cell);
    let theta = (j as f64 - y as f64).atan2(i as f64 - x as f64);
    let delta = 2.0 * PI / n_buckets as f64;
    ((theta / delta).floor() as i64).rem_euclid(n_buckets as i64) as usize
}

pub fn directed_detail(field: &SimilarityField, n_buckets: usize) -> Result<DirectedDetail> {
    if n_buckets == 0 {
        return Err(Error::InvalidBucketCount);
    }
    let shape = field.shape();
    let n = shape.len();
    let mut skipped_buckets = 0;
    let mut empty_centers = 0;
    let mut scores = Vec::with_capacity(n);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_buckets];
    for center in 0..n {
        members.iter_mut().for_each(Vec::clear);
        for cell in (0..n).filter(|&c| c != center) {
            members[bucket_of(shape, center, cell, n_buckets)].push(cell);
        }
        let sims = field.row(center);
        let mut sum = 0.0;
        let mut used = 0usize;
        for bucket in &members {
            let rings = rings(shape, center, sims, bucket.iter().copied());
            if rings.len() < 2 {
                skipped_buckets += 1;
                continue;
            }
            sum += ring_correlation(&rings);
            used += 1;
        }
        let mean_rho = if used == 0 {
            empty_centers += 1;
            0.0
        } else {
            sum / used as f64
        };
        scores.push(1.0 - mean_rho);
    }
    Ok(DirectedDetail {
        n_buckets,
        scores,
        skipped_buckets,
        empty_centers,
    })
}

/// Directed monotonicity in [0, 2] over `n_buckets` equal angular sectors.
///
/// Within a sector, cells sharing a radius are merged into their mean
/// similarity before ranking; with a single sector this reduces exactly to
/// [`undirected_monotonicity`].
pub fn directed_monotonicity(field: &SimilarityField, n_buckets: usize) -> Result<f64> {
    directed_detail(field, n_buckets).map(|d| d.value())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryDetail {
    /// Mean CV per center, row-major.
    pub per_center: Vec<f64>,
    pub skipped_levels: usize,
    pub warnings: Vec<String>,
}

impl AsymmetryDetail {
    pub fn value(&self) -> f64 {
        grid_mean(&self.per_center)
    }
}

pub fn asymmetry_detail(field: &SimilarityField) -> AsymmetryDetail {
    let shape = field.shape();
    let mut skipped_levels = 0;
    let mut warnings = Vec::new();
    let per_center = (0..shape.len())
        .map(|c| {
            let rings = rings(shape, c, field.row(c), 0..shape.len());
            let (sum, used) = rings.iter().fold((0.0, 0usize), |(s, u), r| {
                if r.mu.abs() < CV_MU_EPSILON {
                    (s, u)
                } else {
                    (s + r.sigma / r.mu, u + 1)
                }
            });
            skipped_levels += rings.len() - used;
            if used == 0 {
                let (row, col) = shape.coords(c);
                warnings.push(format!(
                    "center ({row}, {col}): no ring with non-zero mean similarity; asymmetry taken as 0"
                ));
                0.0
            } else {
                sum / used as f64
            }
        })
        .collect();
    AsymmetryDetail {
        per_center,
        skipped_levels,
        warnings,
    }
}

/// Undirected asymmetry: grid mean of the per-ring coefficient of variation.
/// Keeps the sign of the ring means, so mostly negative similarities give a
/// negative value.
pub fn undirected_asymmetry(field: &SimilarityField) -> f64 {
    asymmetry_detail(field).value()
}

/// `(n, m_d)` for each requested bucket count.
pub fn md_sweep(field: &SimilarityField, bucket_counts: &[usize]) -> Result<Vec<(usize, f64)>> {
    bucket_counts
        .iter()
        .map(|&n| directed_monotonicity(field, n).map(|v| (n, v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub m_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PesiReport {
    pub m_u: f64,
    pub m_d: f64,
    pub n_buckets: usize,
    pub a_su: f64,
    /// `1 - rho` per center as `height` rows of `width` values.
    pub per_center_rho: Vec<Vec<f64>>,
    pub sweep: Vec<SweepPoint>,
    pub skipped_buckets: usize,
    /// `|m_d(1) - m_u|`, present when the sweep includes a single bucket.
    pub single_bucket_residual: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn pesi_report(
    field: &SimilarityField,
    n_buckets: usize,
    sweep: &[usize],
) -> Result<PesiReport> {
    let shape = field.shape();
    let scores = undirected_scores(field);
    let m_u = grid_mean(&scores);
    let directed = directed_detail(field, n_buckets)?;
    let asym = asymmetry_detail(field);

    let mut warnings = asym.warnings.clone();
    if directed.skipped_buckets > 0 {
        warnings.push(format!(
            "{} of {} (center, bucket) pairs had fewer than two radii and were excluded from the directed mean",
            directed.skipped_buckets,
            n_buckets * shape.len()
        ));
    }
    if directed.empty_centers > 0 {
        warnings.push(format!(
            "{} centers had no usable bucket; their directed correlation was taken as 0",
            directed.empty_centers
        ));
    }
    if asym.skipped_levels > 0 {
        warnings.push(format!(
            "{} rings with |mean similarity| < {CV_MU_EPSILON:e} were excluded from the asymmetry average",
            asym.skipped_levels
        ));
    }

    let sweep: Vec<SweepPoint> = md_sweep(field, sweep)?
        .into_iter()
        .map(|(n, m_d)| SweepPoint { n, m_d })
        .collect();
    let single_bucket_residual = sweep
        .iter()
        .find(|p| p.n == 1)
        .map(|p| (p.m_d - m_u).abs());

    Ok(PesiReport {
        m_u,
        m_d: directed.value(),
        n_buckets,
        a_su: asym.value(),
        per_center_rho: scores.chunks(shape.width()).map(<[f64]>::to_vec).collect(),
        sweep,
        skipped_buckets: directed.skipped_buckets,
        single_bucket_residual,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_from(shape: GridShape, f: impl Fn(usize, usize) -> f64) -> SimilarityField {
        let n = shape.len();
        let mut v = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                v[a * n + b] = if a == b { 1.0 } else { f(a, b) };
            }
        }
        SimilarityField::from_matrix(shape, v).unwrap()
    }

    /// Similarity strictly decreasing in Euclidean distance.
    fn radial_field(shape: GridShape) -> SimilarityField {
        field_from(shape, |a, b| {
            1.0 - (squared_distance(shape, a, b) as f64).sqrt() / 100.0
        })
    }

    #[test]
    fn spearman_basic() {
        assert_eq!(spearman(&[1., 2., 3.], &[10., 20., 30.]), Some(1.0));
        assert_eq!(spearman(&[1., 2., 3.], &[3., 2., 1.]), Some(-1.0));
        assert_eq!(spearman(&[1.], &[1.]), None);
        assert_eq!(spearman(&[1., 2.], &[1.]), None);
        assert_eq!(spearman(&[1., 2., 3.], &[5., 5., 5.]), None);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[1., 2., 2., 4.]), vec![1., 2.5, 2.5, 4.]);
        assert_eq!(average_ranks(&[3., 3., 3.]), vec![2., 2., 2.]);
    }

    #[test]
    fn tolerant_ranks_merge_near_ties() {
        let v = [0.5, 0.5 + 1e-15, 0.7, 0.5 - 1e-16];
        assert_eq!(average_ranks(&v), vec![2., 3., 4., 1.]);
        assert_eq!(average_ranks_with_tolerance(&v, 1e-12), vec![2., 2., 4., 2.]);
    }

    #[test]
    fn spearman_with_ties_matches_hand_computation() {
        // ranks x = [1, 2.5, 2.5, 4], ranks y = [1, 3.5, 3.5, 2]
        // centered: x = [-1.5, 0, 0, 1.5], y = [-1.5, 1, 1, -0.5]
        // sxy = 2.25 - 0.75 = 1.5; sxx = 4.5; syy = 2.25 + 1 + 1 + 0.25 = 4.5
        let r = spearman(&[1., 2., 2., 4.], &[1., 3., 3., 2.]).unwrap();
        assert!((r - 1.5 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn radial_profile_geometry() {
        let g = GridShape::square(14).unwrap();
        let f = radial_field(g);
        let p = radial_profile(&f, (7, 7)).unwrap();
        assert_eq!(p.squared_levels[0], 1);
        assert_eq!(p.counts[0], 4);
        assert_eq!(p.counts.iter().sum::<usize>(), g.len() - 1);
        assert!(p.levels.windows(2).all(|w| w[0] < w[1]));

        let p = radial_profile(&f, (0, 0)).unwrap();
        let i = p.squared_levels.iter().position(|&d| d == 2).unwrap();
        assert_eq!(p.counts[i], 1);

        assert!(matches!(
            radial_profile(&f, (14, 0)),
            Err(Error::CenterOutOfGrid { .. })
        ));
    }

    #[test]
    fn constant_field() {
        let g = GridShape::new(5, 4).unwrap();
        let f = field_from(g, |_, _| 0.5);
        let p = radial_profile(&f, (2, 2)).unwrap();
        assert!(p.sigma.iter().all(|&s| s == 0.0));
        assert_eq!(undirected_monotonicity(&f), 1.0);
        assert_eq!(undirected_asymmetry(&f), 0.0);
    }

    #[test]
    fn radially_decreasing_field_is_ideal() {
        let g = GridShape::new(6, 5).unwrap();
        let f = radial_field(g);
        assert!((undirected_monotonicity(&f) - 2.0).abs() < 1e-12);
        assert!((directed_monotonicity(&f, 60).unwrap() - 2.0).abs() < 1e-12);
        assert!((directed_monotonicity(&f, 8).unwrap() - 2.0).abs() < 1e-12);
        assert!(undirected_asymmetry(&f).abs() < 1e-12);
    }

    #[test]
    fn bucket_count_must_be_positive() {
        let f = radial_field(GridShape::new(3, 3).unwrap());
        assert!(matches!(
            directed_monotonicity(&f, 0),
            Err(Error::InvalidBucketCount)
        ));
    }

    #[test]
    fn bucket_assignment_follows_atan2() {
        let g = GridShape::square(5).unwrap();
        let c = g.cell(2, 2);
        // theta = atan2(dcol, drow)
        assert_eq!(bucket_of(g, c, g.cell(3, 2), 4), 0); // theta = 0
        assert_eq!(bucket_of(g, c, g.cell(2, 3), 4), 1); // pi/2
        assert_eq!(bucket_of(g, c, g.cell(1, 2), 4), 2); // pi
        assert_eq!(bucket_of(g, c, g.cell(2, 1), 4), 3); // -pi/2
        for cell in 0..g.len() {
            if cell != c {
                assert_eq!(bucket_of(g, c, cell, 1), 0);
            }
        }
    }

    #[test]
    fn single_bucket_matches_undirected() {
        let g = GridShape::new(7, 5).unwrap();
        let f = field_from(g, |a, b| ((a * 31 + b * 17) % 13) as f64 / 13.0 - 0.4);
        let f = {
            // symmetrize
            let n = g.len();
            let mut v = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    v[a * n + b] = if a == b { 1.0 } else { f.get(a.min(b), a.max(b)) };
                }
            }
            SimilarityField::from_matrix(g, v).unwrap()
        };
        let mu = undirected_monotonicity(&f);
        let md = directed_monotonicity(&f, 1).unwrap();
        assert_eq!(mu.to_bits(), md.to_bits());
    }

    #[test]
    fn negative_means_give_negative_asymmetry() {
        let g = GridShape::new(4, 4).unwrap();
        let f = field_from(g, |a, b| -0.5 - 0.1 * ((a + b) % 3) as f64);
        assert!(undirected_asymmetry(&f) < 0.0);
    }

    #[test]
    fn degenerate_asymmetry_center_warns() {
        let g = GridShape::new(3, 1).unwrap();
        let f = field_from(g, |_, _| 0.0);
        let d = asymmetry_detail(&f);
        assert_eq!(d.value(), 0.0);
        assert_eq!(d.warnings.len(), 3);
    }

    #[test]
    fn sweep_shapes() {
        let f = radial_field(GridShape::new(4, 3).unwrap());
        assert!(md_sweep(&f, &[]).unwrap().is_empty());
        let s = md_sweep(&f, &[4, 60]).unwrap();
        assert_eq!(s.iter().map(|p| p.0).collect::<Vec<_>>(), vec![4, 60]);
        let s = md_sweep(&f, &[1]).unwrap();
        assert_eq!(s[0].1, undirected_monotonicity(&f));
    }

    #[test]
    fn report_is_deterministic() {
        let g = GridShape::new(5, 5).unwrap();
        let freqs = crate::pe::make_frequencies(32, 10_000.0).unwrap();
        let f = crate::pe::cosine_field(&crate::pe::embed(&crate::order::gilbert_order(g), &freqs))
            .unwrap();
        let a = pesi_report(&f, 60, &[1, 8]).unwrap();
        let b = pesi_report(&f, 60, &[1, 8]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_center_rho.len(), 5);
        assert_eq!(a.single_bucket_residual, Some(0.0));
    }
}
