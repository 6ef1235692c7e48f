//! Convex-hull membership by a phase-one simplex.

const EPS: f64 = 1e-11;

/// True when `target` is a convex combination of `points`.
///
/// Solves `min sum(a)` subject to `sum_m l_m (p_m - t) + a_top = 0`,
/// `sum_m l_m + a_last = 1`, `l, a >= 0`; the target is in the hull exactly
/// when the optimum is zero. Coordinates are scaled to unit range first.
pub fn in_convex_hull(points: &[Vec<f64>], target: &[f64]) -> bool {
    if points.is_empty() {
        return false;
    }
    let m = points.len();
    let mut coords: Vec<(usize, f64)> = Vec::new();
    for (q, &t) in target.iter().enumerate() {
        let spread = points.iter().map(|p| (p[q] - t).abs()).fold(0.0, f64::max);
        if spread > 0.0 {
            coords.push((q, spread));
        }
    }
    let r = coords.len() + 1;
    let width = m + r + 1;
    let rhs = width - 1;
    let mut tab = vec![vec![0.0; width]; r + 1];
    for (k, &(q, scale)) in coords.iter().enumerate() {
        for (c, p) in points.iter().enumerate() {
            tab[k][c] = (p[q] - target[q]) / scale;
        }
    }
    for c in 0..m {
        tab[r - 1][c] = 1.0;
    }
    tab[r - 1][rhs] = 1.0;
    for k in 0..r {
        tab[k][m + k] = 1.0;
    }
    // reduced costs: minus the column sums over constraint rows
    for c in (0..m).chain(std::iter::once(rhs)) {
        tab[r][c] = -(0..r).map(|k| tab[k][c]).sum::<f64>();
    }
    let mut basis: Vec<usize> = (m..m + r).collect();
    let max_pivots = 50 * (r + m);
    for _ in 0..max_pivots {
        let mut enter = None;
        let mut best = -EPS;
        for c in 0..m + r {
            if tab[r][c] < best {
                best = tab[r][c];
                enter = Some(c);
            }
        }
        let Some(e) = enter else { break };
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for k in 0..r {
            if tab[k][e] > EPS {
                let v = tab[k][rhs] / tab[k][e];
                if v < ratio - 1e-15 || (v <= ratio + 1e-15 && leave.is_some_and(|l: usize| basis[k] < basis[l])) {
                    ratio = v;
                    leave = Some(k);
                }
            }
        }
        let Some(l) = leave else { break };
        let piv = tab[l][e];
        for v in tab[l].iter_mut() {
            *v /= piv;
        }
        let pivot_row = tab[l].clone();
        for (k, row) in tab.iter_mut().enumerate() {
            if k != l {
                let f = row[e];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        basis[l] = e;
    }
    -tab[r][rhs] < 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]
    }

    #[test]
    fn inside_and_outside_square() {
        assert!(in_convex_hull(&square(), &[0.5, 0.5]));
        assert!(in_convex_hull(&square(), &[1.0, 0.3]));
        assert!(in_convex_hull(&square(), &[0.0, 0.0]));
        assert!(!in_convex_hull(&square(), &[1.1, 0.5]));
        assert!(!in_convex_hull(&square(), &[-0.01, -0.01]));
    }

    #[test]
    fn triangle_excludes_corner_of_bounding_box() {
        let tri = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]];
        assert!(in_convex_hull(&tri, &[0.9, 0.9]));
        assert!(!in_convex_hull(&tri, &[1.1, 1.1]));
    }

    #[test]
    fn degenerate_coordinates() {
        let line = vec![vec![0.0, 3.0], vec![2.0, 3.0]];
        assert!(in_convex_hull(&line, &[1.0, 3.0]));
        assert!(!in_convex_hull(&line, &[1.0, 2.0]));
    }
}
