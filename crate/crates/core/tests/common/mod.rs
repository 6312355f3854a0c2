//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's ranking or geometry code.

#![allow(dead_code)]

/// Rank by counting: `1 + #{less} + (#{equal} - 1) / 2`.
pub fn brute_force_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_force_pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx.sqrt() * vy.sqrt()))
    }
}

pub fn brute_force_spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    brute_force_pearson(&brute_force_ranks(xs), &brute_force_ranks(ys))
}

/// Visit sequence of an integer order, built by scanning for each rank.
pub fn path_of(positions: &[f64]) -> Option<Vec<usize>> {
    let n = positions.len();
    (0..n)
        .map(|rank| {
            let hits: Vec<usize> = (0..n).filter(|&c| positions[c] == rank as f64).collect();
            (hits.len() == 1).then(|| hits[0])
        })
        .collect()
}

/// Largest Chebyshev step along an integer order on a `width`-wide grid.
pub fn max_chebyshev_step(positions: &[f64], width: usize) -> Option<usize> {
    let path = path_of(positions)?;
    Some(
        path.windows(2)
            .map(|w| {
                let (r0, c0) = ((w[0] / width) as i64, (w[0] % width) as i64);
                let (r1, c1) = ((w[1] / width) as i64, (w[1] % width) as i64);
                (r0 - r1).abs().max((c0 - c1).abs()) as usize
            })
            .max()
            .unwrap_or(0),
    )
}

/// Mean |position gap| over 4-adjacent pairs, enumerated directly.
pub fn brute_force_locality(positions: &[f64], width: usize, height: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 0..height {
        for c in 0..width {
            let a = positions[r * width + c];
            if c + 1 < width {
                sum += (a - positions[r * width + c + 1]).abs();
                count += 1;
            }
            if r + 1 < height {
                sum += (a - positions[(r + 1) * width + c]).abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Class of `(r, g, b)` for a geometric task, from the textbook formulas in
/// floating point. Exact for coordinates on a 14x14 grid.
pub fn reference_class(task: &str, r: (f64, f64), g: (f64, f64), b: (f64, f64)) -> Option<usize> {
    let three_way = |a: f64, b: f64| {
        if (a - b).abs() < 1e-9 {
            2
        } else if a > b {
            0
        } else {
            1
        }
    };
    match task {
        "distance" => {
            let drg = ((r.0 - g.0).powi(2) + (r.1 - g.1).powi(2)).sqrt();
            let drb = ((r.0 - b.0).powi(2) + (r.1 - b.1).powi(2)).sqrt();
            Some(three_way(drg, drb))
        }
        "orientation" => {
            // 3x3 determinant expanded along the last column
            let det = r.0 * (g.1 - b.1) - r.1 * (g.0 - b.0) + (g.0 * b.1 - g.1 * b.0);
            if det == 0.0 {
                None
            } else {
                Some(if det > 0.0 { 0 } else { 1 })
            }
        }
        "area" => {
            let arg = 0.5 * ((r.1 + g.1) * (g.0 - r.0)).abs();
            let arb = 0.5 * ((r.1 + b.1) * (b.0 - r.0)).abs();
            Some(three_way(arg, arb))
        }
        "vecsum" => {
            let (xs, ys) = (r.0 + g.0 + b.0, r.1 + g.1 + b.1);
            Some(usize::from(xs > 13.0 && ys > 13.0))
        }
        _ => None,
    }
}
