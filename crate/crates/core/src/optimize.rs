//! Small deterministic optimization helpers: a Fibonacci sphere grid and a
//! two-parameter Nelder-Mead minimizer. Used for Bloch-sphere searches.

use crate::linalg::BlochVector;

/// Near-uniform sphere grid with antipodes removed (z > 0 hemisphere plus a
/// deterministic half of the equator ring). Point order is fixed.
pub fn fibonacci_hemisphere(count: usize) -> Vec<BlochVector> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let mut points = Vec::new();
    for i in 0..count {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
        let (x, y) = (r * phi.cos(), r * phi.sin());
        let keep = z > 1e-12 || (z.abs() <= 1e-12 && (x > 0.0 || (x == 0.0 && y > 0.0)));
        if keep {
            points.push(BlochVector::from_components(x, y, z).expect("grid point is unit"));
        }
    }
    points
}

/// Nelder-Mead minimization on R^2 with deterministic updates.
///
/// Returns the best point and its value. `scale` sets the initial simplex
/// edge length.
pub fn nelder_mead_2d<F: FnMut(&[f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    scale: f64,
    max_iters: usize,
) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + scale, start[1]],
        [start[0], start[1] + scale],
    ];
    let mut values = [f(&simplex[0]), f(&simplex[1]), f(&simplex[2])];

    for _ in 0..max_iters {
        // order: best, middle, worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let (b, m, w) = (idx[0], idx[1], idx[2]);

        let spread = values[w] - values[b];
        let size = simplex_size(&simplex);
        if spread.abs() < 1e-15 && size < 1e-10 {
            break;
        }

        let centroid = [
            (simplex[b][0] + simplex[m][0]) / 2.0,
            (simplex[b][1] + simplex[m][1]) / 2.0,
        ];
        let reflect = [
            centroid[0] + (centroid[0] - simplex[w][0]),
            centroid[1] + (centroid[1] - simplex[w][1]),
        ];
        let fr = f(&reflect);

        if fr < values[b] {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - simplex[w][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[w][1]),
            ];
            let fe = f(&expand);
            if fe < fr {
                simplex[w] = expand;
                values[w] = fe;
            } else {
                simplex[w] = reflect;
                values[w] = fr;
            }
        } else if fr < values[m] {
            simplex[w] = reflect;
            values[w] = fr;
        } else {
            let contract = [
                centroid[0] + 0.5 * (simplex[w][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[w][1] - centroid[1]),
            ];
            let fc = f(&contract);
            if fc < values[w] {
                simplex[w] = contract;
                values[w] = fc;
            } else {
                // shrink toward best
                for i in 0..3 {
                    if i != b {
                        simplex[i] = [
                            simplex[b][0] + 0.5 * (simplex[i][0] - simplex[b][0]),
                            simplex[b][1] + 0.5 * (simplex[i][1] - simplex[b][1]),
                        ];
                        values[i] = f(&simplex[i]);
                    }
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best], values[best])
}

fn simplex_size(simplex: &[[f64; 2]; 3]) -> f64 {
    let mut size = 0.0f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let dx = simplex[i][0] - simplex[j][0];
            let dy = simplex[i][1] - simplex[j][1];
            size = size.max((dx * dx + dy * dy).sqrt());
        }
    }
    size
}

/// Maximizes a smooth function of a Bloch direction: coarse grid scan, then
/// Nelder-Mead refinement on (theta, phi) from the `refine` best grid points.
/// Ties are broken by the smaller grid index.
pub fn maximize_on_sphere<F>(f: F, grid_points: usize, refine: usize) -> (BlochVector, f64)
where
    F: Fn(&BlochVector) -> f64 + Sync,
{
    use rayon::prelude::*;
    let grid = fibonacci_hemisphere(grid_points);
    let scores: Vec<f64> = grid.par_iter().map(&f).collect();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut best_dir = grid[order[0]];
    let mut best_val = scores[order[0]];
    for &i in order.iter().take(refine.min(order.len())) {
        let (theta, phi) = grid[i].angles();
        let (pt, neg_val) = nelder_mead_2d(
            |p| -f(&BlochVector::from_angles(p[0], p[1])),
            [theta, phi],
            0.05,
            400,
        );
        let val = -neg_val;
        if val > best_val {
            best_val = val;
            best_dir = BlochVector::from_angles(pt[0], pt[1]);
        }
    }
    (best_dir, best_val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemisphere_has_no_antipodal_pairs() {
        let pts = fibonacci_hemisphere(512);
        assert!(pts.len() >= 250);
        for (i, p) in pts.iter().enumerate() {
            for q in pts.iter().skip(i + 1) {
                assert!(p.dot(q) > -1.0 + 1e-9, "antipodal pair in grid");
            }
        }
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let (pt, val) = nelder_mead_2d(
            |p| (p[0] - 1.3).powi(2) + 2.0 * (p[1] + 0.7).powi(2),
            [0.0, 0.0],
            0.1,
            500,
        );
        assert!((pt[0] - 1.3).abs() < 1e-6);
        assert!((pt[1] + 0.7).abs() < 1e-6);
        assert!(val < 1e-10);
    }

    #[test]
    fn sphere_maximizer_finds_known_direction() {
        let target = BlochVector::from_components(0.3, -0.5, 0.81).unwrap();
        // f(n) = (n . t)^2 is antipode-symmetric like the search objective
        let (dir, val) = maximize_on_sphere(|n| n.dot(&target).powi(2), 512, 5);
        assert!(val > 1.0 - 1e-10);
        assert!(dir.dot(&target).abs() > 1.0 - 1e-6);
    }
}
