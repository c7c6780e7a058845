use crate::grid::{distances_within, DiscreteManifold, Stencil};

/// Greedy maximal `eps`-separated subset of `region` (scanned in increasing cell order).
///
/// Selected points are pairwise at distance `≥ eps`, and every active region cell lies within
/// distance `< eps` of a selected point.
pub fn maximal_separated_set(man: &DiscreteManifold, region: &[usize], eps: f64) -> Vec<usize> {
    let mut order: Vec<usize> = region
        .iter()
        .copied()
        .filter(|&c| man.is_active(c))
        .collect();
    order.sort_unstable();
    order.dedup();
    let mut covered = vec![false; man.len()];
    let mut chosen = Vec::new();
    for c in order {
        if covered[c] {
            continue;
        }
        chosen.push(c);
        let d = distances_within(man, &[(c, 0.0)], Stencil::default(), eps);
        for (k, v) in d.iter().enumerate() {
            if *v < eps {
                covered[k] = true;
            }
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::distances_from;

    #[test]
    fn large_eps_gives_one_point() {
        let man = DiscreteManifold::flat(16).unwrap();
        let region: Vec<usize> = (0..40).collect();
        assert_eq!(maximal_separated_set(&man, &region, 10.0), vec![0]);
    }

    #[test]
    fn separation_and_maximality() {
        let man = DiscreteManifold::flat(32).unwrap();
        let region: Vec<usize> = (0..man.len()).filter(|c| c % 3 != 0).collect();
        let eps = 0.11;
        let pts = maximal_separated_set(&man, &region, eps);
        for &p in &pts {
            let d = distances_from(&man, p, Stencil::default()).unwrap();
            for &q in &pts {
                if q != p {
                    assert!(d[q] >= eps);
                }
            }
        }
        for &c in &region {
            let d = distances_from(&man, c, Stencil::default()).unwrap();
            assert!(pts.iter().any(|&p| d[p] < eps));
        }
    }
}
