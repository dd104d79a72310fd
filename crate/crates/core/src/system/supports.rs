use crate::error::{Error, Result};
use crate::partition::IntervalPartition;

use super::SystemState;

/// Node range where a component dominates all others and is at least
/// `threshold` times its own maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub component: usize,
    pub first: usize,
    pub last: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Dominance ranges of all components, ordered along `(0, pi)`.
/// Fails if a component dominates nowhere or on more than one run of nodes.
pub fn ordered_supports(state: &SystemState, threshold: f64) -> Result<Vec<Support>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("support threshold {threshold} not in (0, 1]")));
    }
    let nodes = state.grid().nodes();
    let comps = state.components();
    let mut levels = Vec::with_capacity(comps.len());
    for (i, w) in comps.iter().enumerate() {
        let max = w.values().iter().fold(0.0f64, |m, v| m.max(*v));
        if !(max > 0.0) {
            return Err(Error::Degenerate(format!("component {i} has no positive values")));
        }
        levels.push(threshold * max);
    }
    let owner = |k: usize| -> Option<usize> {
        let (i, w) = comps
            .iter()
            .enumerate()
            .map(|(i, w)| (i, w.values()[k]))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        let unique = comps.iter().enumerate().all(|(j, c)| j == i || c.values()[k] < w);
        (unique && w >= levels[i]).then_some(i)
    };
    let owners: Vec<Option<usize>> = (0..nodes.len()).map(owner).collect();
    let mut supports = Vec::new();
    for i in 0..comps.len() {
        let owned: Vec<usize> = (0..nodes.len()).filter(|&k| owners[k] == Some(i)).collect();
        let (Some(&first), Some(&last)) = (owned.first(), owned.last()) else {
            return Err(Error::SegregationIncomplete(format!(
                "component {i} dominates no node above {threshold} of its maximum"
            )));
        };
        if last - first + 1 != owned.len() {
            return Err(Error::SegregationIncomplete(format!(
                "component {i} dominates on more than one interval"
            )));
        }
        supports.push(Support {
            component: i,
            first,
            last,
            lo: nodes[first],
            hi: nodes[last],
        });
    }
    supports.sort_by_key(|s| s.first);
    Ok(supports)
}

/// Cuts where consecutive components cross (linear interpolation between
/// nodes), in the order the components appear along `(0, pi)`. Without a
/// crossing the cut is the midpoint of the gap.
pub fn extract_supports(state: &SystemState, threshold: f64) -> Result<IntervalPartition> {
    let supports = ordered_supports(state, threshold)?;
    let nodes = state.grid().nodes();
    let comps = state.components();
    let cuts = supports
        .windows(2)
        .map(|w| {
            let (l, r) = (comps[w[0].component].values(), comps[w[1].component].values());
            let d = |k: usize| l[k] - r[k];
            (w[0].last..w[1].first)
                .find(|&k| d(k) > 0.0 && d(k + 1) <= 0.0)
                .map(|k| nodes[k] + (nodes[k + 1] - nodes[k]) * d(k) / (d(k) - d(k + 1)))
                .unwrap_or(0.5 * (w[0].hi + w[1].lo))
        })
        .collect();
    IntervalPartition::new(*state.grid().cfg(), cuts)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::discretization::{OrbitGrid, ReducedFunction};
    use crate::geometry::SymmetryConfig;
    use crate::system::CouplingMatrix;

    #[test]
    fn ordered_and_disconnected() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 64, 1.0).unwrap();
        let a = ReducedFunction::bump(g.clone(), 2.0, PI);
        let b = ReducedFunction::bump(g.clone(), 0.0, 2.0);
        let s = SystemState::new(vec![a, b], CouplingMatrix::uniform(2, -1.0, 6.0).unwrap()).unwrap();
        let sup = ordered_supports(&s, 0.1).unwrap();
        assert_eq!(sup[0].component, 1);
        let p = extract_supports(&s, 0.1).unwrap();
        assert!((p.cuts()[0] - 2.0).abs() < 0.1);
        // Threshold 1 keeps only the maxima; the cut is still the crossing.
        let p1 = extract_supports(&s, 1.0).unwrap();
        assert_eq!(p1.cuts(), p.cuts());

        let x = ReducedFunction::from_fn(g.clone(), |t| (-(t - 1.0).powi(2)).exp());
        let y = ReducedFunction::from_fn(g.clone(), |t| (-(t - 2.0).powi(2)).exp());
        let s = SystemState::new(vec![y, x], CouplingMatrix::uniform(2, -1.0, 6.0).unwrap()).unwrap();
        let p = extract_supports(&s, 0.1).unwrap();
        assert!((p.cuts()[0] - 1.5).abs() < 1e-3, "{:?}", p.cuts());

        let two_humps = ReducedFunction::from_fn(g.clone(), |t| (2.0 * t).sin().abs());
        let c = ReducedFunction::bump(g, 0.0, 1.0);
        let s = SystemState::new(vec![two_humps, c], CouplingMatrix::uniform(2, -1.0, 6.0).unwrap()).unwrap();
        assert!(matches!(ordered_supports(&s, 0.5), Err(Error::SegregationIncomplete(_))));
    }
}
