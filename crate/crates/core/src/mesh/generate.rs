use super::{BoundaryTag, Point, Triangulation};

/// Structured `n × n` grid on `[0, length]²`, each square cut along its
/// lower-left to upper-right diagonal. `tagger` receives the endpoints of
/// each boundary edge.
pub fn square_grid<F>(n: usize, length: f64, tagger: F) -> Triangulation
where
    F: Fn(Point, Point) -> BoundaryTag,
{
    assert!(n >= 1, "grid needs at least one cell per side");
    let h = length / n as f64;
    let points: Vec<Point> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| [i as f64 * h, j as f64 * h]))
        .collect();
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    let tag_points = points.clone();
    Triangulation::build(points, cells, |a, b| Some(tagger(tag_points[a], tag_points[b])))
        .expect("structured grid is conforming")
}

/// Square ocean `[0, length]²` with a square island of `hole × hole` grid
/// cells in the middle. The island coast is tagged Dirichlet, the outer
/// boundary Neumann.
pub fn square_with_hole(n: usize, hole: usize, length: f64) -> Triangulation {
    assert!(hole + 2 <= n && (n - hole).is_multiple_of(2), "island must sit strictly inside the grid");
    let lo = (n - hole) / 2;
    let hi = lo + hole;
    let h = length / n as f64;
    let in_hole = |i: usize, j: usize| (lo..hi).contains(&i) && (lo..hi).contains(&j);
    let used = |i: usize, j: usize| {
        // vertex is used unless all four surrounding squares are island
        !(lo < i && i < hi && lo < j && j < hi)
    };
    let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut points = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if used(i, j) {
                index[j * (n + 1) + i] = points.len();
                points.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let idx = |i: usize, j: usize| index[j * (n + 1) + i];
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if in_hole(i, j) {
                continue;
            }
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    let tag_points = points.clone();
    let on_outer = move |p: Point| {
        let eps = 1e-9 * length;
        p[0].abs() < eps || p[1].abs() < eps || (p[0] - length).abs() < eps || (p[1] - length).abs() < eps
    };
    Triangulation::build(points, cells, |a, b| {
        let (p, q) = (tag_points[a], tag_points[b]);
        let outer = on_outer(p) && on_outer(q) && (p[0] == q[0] || p[1] == q[1]);
        Some(if outer {
            BoundaryTag::Neumann
        } else {
            BoundaryTag::Dirichlet
        })
    })
    .expect("island grid is conforming")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn island_counts() {
        let m = square_with_hole(6, 2, 6.0);
        assert_eq!(m.n_cells(), 2 * (36 - 4));
        assert_eq!(m.n_points(), 49 - 1);
        let neumann = m.boundary_edges().filter(|(_, t)| *t == BoundaryTag::Neumann).count();
        let dirichlet = m.boundary_edges().filter(|(_, t)| *t == BoundaryTag::Dirichlet).count();
        assert_eq!(neumann, 24);
        assert_eq!(dirichlet, 8);
        assert!((m.total_area() - 32.0).abs() < 1e-12);
    }
}
