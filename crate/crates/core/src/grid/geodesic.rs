use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::manifold::DiscreteManifold;
use crate::error::{Error, Result};

/// Neighbour set of the shortest-path graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stencil {
    /// Axis and diagonal moves.
    Eight,
    /// Axis, diagonal and knight moves.
    #[default]
    Sixteen,
}

struct Move {
    di: i64,
    dj: i64,
    len: f64,
    /// Offsets that must be active for the move to be allowed.
    via: &'static [(i64, i64)],
}

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT5: f64 = 2.236_067_977_499_79;

fn moves(stencil: Stencil) -> Vec<Move> {
    let mut out = vec![
        Move {
            di: 1,
            dj: 0,
            len: 1.0,
            via: &[],
        },
        Move {
            di: -1,
            dj: 0,
            len: 1.0,
            via: &[],
        },
        Move {
            di: 0,
            dj: 1,
            len: 1.0,
            via: &[],
        },
        Move {
            di: 0,
            dj: -1,
            len: 1.0,
            via: &[],
        },
        Move {
            di: 1,
            dj: 1,
            len: SQRT2,
            via: &[(1, 0), (0, 1)],
        },
        Move {
            di: 1,
            dj: -1,
            len: SQRT2,
            via: &[(1, 0), (0, -1)],
        },
        Move {
            di: -1,
            dj: 1,
            len: SQRT2,
            via: &[(-1, 0), (0, 1)],
        },
        Move {
            di: -1,
            dj: -1,
            len: SQRT2,
            via: &[(-1, 0), (0, -1)],
        },
    ];
    if stencil == Stencil::Sixteen {
        out.extend([
            Move {
                di: 2,
                dj: 1,
                len: SQRT5,
                via: &[(1, 0), (1, 1)],
            },
            Move {
                di: 2,
                dj: -1,
                len: SQRT5,
                via: &[(1, 0), (1, -1)],
            },
            Move {
                di: -2,
                dj: 1,
                len: SQRT5,
                via: &[(-1, 0), (-1, 1)],
            },
            Move {
                di: -2,
                dj: -1,
                len: SQRT5,
                via: &[(-1, 0), (-1, -1)],
            },
            Move {
                di: 1,
                dj: 2,
                len: SQRT5,
                via: &[(0, 1), (1, 1)],
            },
            Move {
                di: -1,
                dj: 2,
                len: SQRT5,
                via: &[(0, 1), (-1, 1)],
            },
            Move {
                di: 1,
                dj: -2,
                len: SQRT5,
                via: &[(0, -1), (1, -1)],
            },
            Move {
                di: -1,
                dj: -2,
                len: SQRT5,
                via: &[(0, -1), (-1, -1)],
            },
        ]);
    }
    out
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source shortest-path distances, truncated at `bound` (cells beyond it stay at infinity).
///
/// Edge length is the Euclidean step times `h` times the mean of `√φ` at the two endpoints.
pub fn distances_within(
    man: &DiscreteManifold,
    sources: &[(usize, f64)],
    stencil: Stencil,
    bound: f64,
) -> Vec<f64> {
    let moves = moves(stencil);
    let root: Vec<f64> = man.factor().iter().map(|p| p.sqrt()).collect();
    let h = man.h();
    let mut dist = vec![f64::INFINITY; man.len()];
    let mut heap = BinaryHeap::new();
    for &(s, d0) in sources {
        if man.is_active(s) && d0 < dist[s] && d0 <= bound {
            dist[s] = d0;
            heap.push(Entry(d0, s));
        }
    }
    while let Some(Entry(d, c)) = heap.pop() {
        if d > dist[c] {
            continue;
        }
        let (i, j) = man.coords(c);
        let (i, j) = (i as i64, j as i64);
        for mv in &moves {
            let nb = man.index(i + mv.di, j + mv.dj);
            if !man.is_active(nb)
                || !mv
                    .via
                    .iter()
                    .all(|&(a, b)| man.is_active(man.index(i + a, j + b)))
            {
                continue;
            }
            let nd = d + mv.len * h * 0.5 * (root[c] + root[nb]);
            if nd < dist[nb] && nd <= bound {
                dist[nb] = nd;
                heap.push(Entry(nd, nb));
            }
        }
    }
    dist
}

/// Distances from an active cell to every cell (infinity when unreachable or inactive).
pub fn distances_from(man: &DiscreteManifold, x: usize, stencil: Stencil) -> Result<Vec<f64>> {
    if !man.is_active(x) {
        return Err(Error::MaskedDomain(x));
    }
    Ok(distances_within(man, &[(x, 0.0)], stencil, f64::INFINITY))
}

/// Path-metric distance between two active cells with the default stencil.
pub fn geodesic_distance(man: &DiscreteManifold, x: usize, y: usize) -> Result<f64> {
    geodesic_distance_with(man, x, y, Stencil::default())
}

pub fn geodesic_distance_with(
    man: &DiscreteManifold,
    x: usize,
    y: usize,
    stencil: Stencil,
) -> Result<f64> {
    if !man.is_active(y) {
        return Err(Error::MaskedDomain(y));
    }
    let d = distances_from(man, x, stencil)?[y];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Unreachable(x, y))
    }
}

/// Active cells within distance `r` of `x`, in increasing index order.
pub fn metric_ball(man: &DiscreteManifold, x: usize, r: f64) -> Result<Vec<usize>> {
    if !man.is_active(x) {
        return Err(Error::MaskedDomain(x));
    }
    Ok(ball_of(
        &distances_within(man, &[(x, 0.0)], Stencil::default(), r.max(0.0)),
        r,
    ))
}

/// Cells whose entry in a distance field is at most `r`.
pub fn ball_of(dist: &[f64], r: f64) -> Vec<usize> {
    (0..dist.len()).filter(|&c| dist[c] <= r).collect()
}

/// Distance of each active cell to the edge of the mask.
///
/// Cells touching an inactive neighbour start at half a cell width.
pub fn distance_to_boundary(man: &DiscreteManifold, stencil: Stencil) -> Vec<f64> {
    let sources: Vec<(usize, f64)> = man
        .boundary_cells()
        .into_iter()
        .map(|c| (c, 0.5 * man.h() * man.factor()[c].sqrt()))
        .collect();
    distances_within(man, &sources, stencil, f64::INFINITY)
}

/// First-order eikonal solution of `|∇d| = √φ` in the active region, with `d = h√φ/2` on the
/// boundary cells, by fast sweeping. Smoother than the path metric along oblique directions.
pub fn eikonal_distance_to_boundary(man: &DiscreteManifold) -> Vec<f64> {
    let m = man.m() as i64;
    let h = man.h();
    let phi = man.factor();
    let mut d = vec![f64::INFINITY; man.len()];
    let mut fixed = vec![false; man.len()];
    for c in man.boundary_cells() {
        d[c] = 0.5 * h * phi[c].sqrt();
        fixed[c] = true;
    }
    let value = |d: &[f64], i: i64, j: i64| {
        let c = man.index(i, j);
        if man.is_active(c) {
            d[c]
        } else {
            f64::INFINITY
        }
    };
    for _ in 0..1000 {
        let mut changed = false;
        for (ri, rj) in [(false, false), (true, false), (false, true), (true, true)] {
            for jj in 0..m {
                let j = if rj { m - 1 - jj } else { jj };
                for ii in 0..m {
                    let i = if ri { m - 1 - ii } else { ii };
                    let c = man.index(i, j);
                    if fixed[c] || !man.is_active(c) {
                        continue;
                    }
                    let a = value(&d, i - 1, j).min(value(&d, i + 1, j));
                    let b = value(&d, i, j - 1).min(value(&d, i, j + 1));
                    if !a.is_finite() && !b.is_finite() {
                        continue;
                    }
                    let f = h * phi[c].sqrt();
                    let next = if (a - b).abs() >= f {
                        a.min(b) + f
                    } else {
                        0.5 * (a + b + (2.0 * f * f - (a - b) * (a - b)).sqrt())
                    };
                    if next < d[c] {
                        d[c] = next;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_axis_distance_is_exact() {
        let man = DiscreteManifold::flat(20).unwrap();
        let d = geodesic_distance(&man, man.index(0, 0), man.index(5, 0)).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        assert_eq!(geodesic_distance(&man, 7, 7).unwrap(), 0.0);
    }

    #[test]
    fn wraps_periodically() {
        let man = DiscreteManifold::flat(10).unwrap();
        let d = geodesic_distance(&man, man.index(0, 0), man.index(9, 0)).unwrap();
        assert!((d - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unreachable_pair() {
        let mut mask = vec![true; 100];
        for j in 0..10 {
            mask[j * 10 + 3] = false;
            mask[j * 10 + 7] = false;
        }
        let man = DiscreteManifold::flat(10).unwrap().with_mask(mask).unwrap();
        assert_eq!(geodesic_distance(&man, 0, 5), Err(Error::Unreachable(0, 5)));
    }

    #[test]
    fn ball_zero_radius() {
        let man = DiscreteManifold::flat(8).unwrap();
        assert_eq!(metric_ball(&man, 9, 0.0).unwrap(), vec![9]);
    }
}
