//! Choosing low-interference subbands from a radar environment map.
//!
//! Bin `k` of the map covers `[f_k, f_k + Δf)`. A block of `d` bins starting
//! at `s` therefore becomes the subband `[f_s, f_s + dΔf]`. The objective of
//! a placement is the interference energy it collects,
//! `Σ_{k in blocks} interference[k] * Δf`.
//!
//! Two solvers share that objective: an exhaustive search for small maps and
//! a block-scan greedy that places one block at a time.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::spectrum::{RadarEnvironmentMap, Subband};
use crate::{Error, Result};

/// Largest map the exhaustive solver accepts.
pub const ORACLE_MAX_BINS: usize = 256;
/// Largest band count the exhaustive solver accepts.
pub const ORACLE_MAX_BANDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockWidths {
    /// Every block is `d` bins wide.
    Equal(usize),
    /// Block `i` is `d_i` bins wide.
    List(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConstraints {
    pub n_bands: usize,
    pub widths: BlockWidths,
    /// Minimum number of free bins between neighbouring blocks.
    pub min_separation: usize,
    /// Data-fidelity radius of the block-sparse formulation. Stored for
    /// interface completeness; the energy-objective solvers do not use it.
    #[serde(default)]
    pub fidelity_xi: f64,
}

impl SelectionConstraints {
    pub fn equal(n_bands: usize, width: usize, min_separation: usize) -> Self {
        Self { n_bands, widths: BlockWidths::Equal(width), min_separation, fidelity_xi: 0.0 }
    }

    pub fn list(widths: Vec<usize>, min_separation: usize) -> Self {
        Self { n_bands: widths.len(), widths: BlockWidths::List(widths), min_separation, fidelity_xi: 0.0 }
    }

    /// Width of each block, in block order.
    pub fn block_widths(&self) -> Vec<usize> {
        match &self.widths {
            BlockWidths::Equal(d) => vec![*d; self.n_bands],
            BlockWidths::List(ds) => ds.clone(),
        }
    }

    fn validate(&self, rem: &RadarEnvironmentMap) -> Result<Vec<usize>> {
        if self.n_bands == 0 {
            return Err(Error::domain("n_bands must be positive"));
        }
        if let BlockWidths::List(ds) = &self.widths {
            if ds.len() != self.n_bands {
                return Err(Error::domain(format!(
                    "{} widths given for {} bands",
                    ds.len(),
                    self.n_bands
                )));
            }
        }
        let widths = self.block_widths();
        if widths.contains(&0) {
            return Err(Error::domain("block widths must be positive"));
        }
        if !(self.fidelity_xi >= 0.0) {
            return Err(Error::domain("fidelity_xi must be non-negative"));
        }
        let admissible = rem.grid().len() - rem.excluded().len();
        let needed = widths.iter().sum::<usize>() + (self.n_bands - 1) * self.min_separation;
        if needed > admissible {
            return Err(Error::Infeasible(format!(
                "blocks need {needed} bins including separation but only {admissible} are admissible"
            )));
        }
        Ok(widths)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Oracle,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub start_bin: usize,
    pub width_bins: usize,
}

impl Placement {
    pub fn end_bin(&self) -> usize {
        self.start_bin + self.width_bins
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected bands in increasing frequency, `beta = 1`.
    pub bands: Vec<Subband>,
    /// Bin placements matching `bands`.
    pub placements: Vec<Placement>,
    /// Interference energy inside the selected bands (W).
    pub objective: f64,
    pub method: SelectionMethod,
}

/// Prefix sums of interference and of excluded-bin counts.
struct Tables {
    interference: Vec<f64>,
    excluded: Vec<usize>,
    spacing: f64,
}

impl Tables {
    fn new(rem: &RadarEnvironmentMap) -> Self {
        let m = rem.grid().len();
        let mut interference = Vec::with_capacity(m + 1);
        let mut excluded = Vec::with_capacity(m + 1);
        interference.push(0.0);
        excluded.push(0);
        for k in 0..m {
            interference.push(interference[k] + rem.interference()[k]);
            excluded.push(excluded[k] + usize::from(rem.is_excluded(k)));
        }
        Self { interference, excluded, spacing: rem.grid().spacing() }
    }

    fn bins(&self) -> usize {
        self.excluded.len() - 1
    }

    fn block_cost(&self, start: usize, width: usize) -> f64 {
        (self.interference[start + width] - self.interference[start]) * self.spacing
    }

    fn block_clear(&self, start: usize, width: usize) -> bool {
        self.excluded[start + width] == self.excluded[start]
    }
}

fn to_result(
    rem: &RadarEnvironmentMap,
    mut placements: Vec<Placement>,
    objective: f64,
    method: SelectionMethod,
) -> Result<SelectionResult> {
    placements.sort_by_key(|p| p.start_bin);
    let grid = rem.grid();
    let bands = placements
        .iter()
        .map(|p| {
            let lo = grid.freq(p.start_bin);
            Subband::from_edges(lo, lo + p.width_bins as f64 * grid.spacing(), 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionResult { bands, placements, objective, method })
}

/// Distinct orderings of `widths`, in lexicographic order.
fn distinct_orders(widths: &[usize]) -> Vec<Vec<usize>> {
    fn rec(remaining: &mut Vec<usize>, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(current.clone());
            return;
        }
        let mut seen = Vec::new();
        for i in 0..remaining.len() {
            let w = remaining[i];
            if seen.contains(&w) {
                continue;
            }
            seen.push(w);
            remaining.remove(i);
            current.push(w);
            rec(remaining, current, out);
            current.pop();
            remaining.insert(i, w);
        }
    }
    let mut sorted = widths.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    rec(&mut sorted, &mut Vec::new(), &mut out);
    out
}

struct Best {
    cost: f64,
    starts: Vec<usize>,
    widths: Vec<usize>,
}

impl Best {
    fn beaten_by(&self, cost: f64, starts: &[usize], widths: &[usize]) -> bool {
        match cost.partial_cmp(&self.cost) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => (starts, widths) < (self.starts.as_slice(), self.widths.as_slice()),
            _ => false,
        }
    }
}

/// Globally optimal placement by exhaustive enumeration.
///
/// Blocks may appear in any frequency order. Among placements with equal
/// objective the one with the lexicographically smallest tuple of start bins
/// (in frequency order) wins.
pub fn select_bands_oracle(rem: &RadarEnvironmentMap, c: &SelectionConstraints) -> Result<SelectionResult> {
    if rem.grid().len() > ORACLE_MAX_BINS || c.n_bands > ORACLE_MAX_BANDS {
        return Err(Error::TooLarge(format!(
            "{} bins / {} bands exceeds {ORACLE_MAX_BINS} bins / {ORACLE_MAX_BANDS} bands",
            rem.grid().len(),
            c.n_bands
        )));
    }
    let widths = c.validate(rem)?;
    let tables = Tables::new(rem);
    let mut best: Option<Best> = None;

    #[allow(clippy::too_many_arguments)]
    fn place(
        t: &Tables,
        order: &[usize],
        sep: usize,
        j: usize,
        from: usize,
        partial: f64,
        starts: &mut Vec<usize>,
        best: &mut Option<Best>,
    ) {
        if j == order.len() {
            let beaten = best.as_ref().is_none_or(|b| b.beaten_by(partial, starts, order));
            if beaten {
                *best = Some(Best { cost: partial, starts: starts.clone(), widths: order.to_vec() });
            }
            return;
        }
        let tail: usize = order[j + 1..].iter().map(|d| d + sep).sum();
        let d = order[j];
        let Some(last_start) = t.bins().checked_sub(d + tail) else {
            return;
        };
        for s in from..=last_start {
            if !t.block_clear(s, d) {
                continue;
            }
            let cost = partial + t.block_cost(s, d);
            if let Some(b) = best.as_ref() {
                if cost > b.cost {
                    continue;
                }
            }
            starts.push(s);
            place(t, order, sep, j + 1, s + d + sep, cost, starts, best);
            starts.pop();
        }
    }

    for order in distinct_orders(&widths) {
        place(&tables, &order, c.min_separation, 0, 0, 0.0, &mut Vec::new(), &mut best);
    }
    let best = best.ok_or_else(|| Error::Infeasible("no placement satisfies the constraints".into()))?;
    let placements = best
        .starts
        .iter()
        .zip(&best.widths)
        .map(|(&start_bin, &width_bins)| Placement { start_bin, width_bins })
        .collect();
    to_result(rem, placements, best.cost, SelectionMethod::Oracle)
}

/// Greedy block scan: blocks are placed in the given order, each at the
/// admissible position with least interference energy (smallest start bin on
/// ties). A placed block plus `min_separation` bins on each side is then
/// removed from the admissible set.
pub fn select_bands_greedy(rem: &RadarEnvironmentMap, c: &SelectionConstraints) -> Result<SelectionResult> {
    let widths = c.validate(rem)?;
    let tables = Tables::new(rem);
    let m = tables.bins();
    let mut available: Vec<bool> = (0..m).map(|k| !rem.is_excluded(k)).collect();
    let mut placements = Vec::with_capacity(widths.len());
    let mut objective = 0.0;
    for (i, &d) in widths.iter().enumerate() {
        let mut choice: Option<(f64, usize)> = None;
        let mut run = 0usize;
        for k in 0..m {
            run = if available[k] { run + 1 } else { 0 };
            if run < d {
                continue;
            }
            let s = k + 1 - d;
            let cost = tables.block_cost(s, d);
            if choice.is_none_or(|(best, _)| cost < best) {
                choice = Some((cost, s));
            }
        }
        let (cost, s) = choice.ok_or_else(|| {
            Error::Infeasible(format!("no admissible position left for block {i} ({d} bins)"))
        })?;
        let lo = s.saturating_sub(c.min_separation);
        let hi = (s + d + c.min_separation).min(m);
        available[lo..hi].iter_mut().for_each(|a| *a = false);
        objective += cost;
        placements.push(Placement { start_bin: s, width_bins: d });
    }
    to_result(rem, placements, objective, SelectionMethod::Greedy)
}

pub fn select_bands(
    rem: &RadarEnvironmentMap,
    c: &SelectionConstraints,
    method: SelectionMethod,
) -> Result<SelectionResult> {
    match method {
        SelectionMethod::Oracle => select_bands_oracle(rem, c),
        SelectionMethod::Greedy => select_bands_greedy(rem, c),
    }
}

/// Structural check of a selection: widths, disjointness, separation,
/// exclusion and the reported objective.
pub fn check_selection(rem: &RadarEnvironmentMap, c: &SelectionConstraints, r: &SelectionResult) -> Result<()> {
    let fail = |msg: String| Err(Error::Consistency(msg));
    if r.placements.len() != c.n_bands || r.bands.len() != c.n_bands {
        return fail(format!("expected {} bands, got {}", c.n_bands, r.placements.len()));
    }
    let mut got: Vec<usize> = r.placements.iter().map(|p| p.width_bins).collect();
    let mut want = c.block_widths();
    got.sort_unstable();
    want.sort_unstable();
    if got != want {
        return fail(format!("block widths {got:?} do not match {want:?}"));
    }
    let m = rem.grid().len();
    let mut energy = 0.0;
    for (i, p) in r.placements.iter().enumerate() {
        if p.end_bin() > m {
            return fail(format!("block {i} runs past the map"));
        }
        if (p.start_bin..p.end_bin()).any(|k| rem.is_excluded(k)) {
            return fail(format!("block {i} covers an excluded bin"));
        }
        if i > 0 && p.start_bin < r.placements[i - 1].end_bin() + c.min_separation {
            return fail(format!("blocks {} and {i} overlap or are too close", i - 1));
        }
        energy += (p.start_bin..p.end_bin()).map(|k| rem.bin_energy(k)).sum::<f64>();
    }
    if (energy - r.objective).abs() > 1e-9 * energy.max(1e-300) {
        return fail(format!("objective {} disagrees with recomputed {energy}", r.objective));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::spectrum::FrequencyGrid;

    fn rem(values: Vec<f64>, excluded: &[usize]) -> RadarEnvironmentMap {
        let grid = FrequencyGrid::new(0.0, (values.len() - 1) as f64, values.len()).unwrap();
        RadarEnvironmentMap::new(grid, values, excluded.iter().copied().collect::<BTreeSet<_>>()).unwrap()
    }

    #[test]
    fn avoids_the_interferer() {
        let mut v = vec![0.0; 40];
        v[10..20].iter_mut().for_each(|x| *x = 1.0);
        let map = rem(v, &[]);
        let c = SelectionConstraints::equal(1, 10, 0);
        for r in [select_bands_oracle(&map, &c).unwrap(), select_bands_greedy(&map, &c).unwrap()] {
            assert_eq!(r.objective, 0.0);
            let p = r.placements[0];
            assert!(p.end_bin() <= 10 || p.start_bin >= 20);
            check_selection(&map, &c, &r).unwrap();
        }
    }

    #[test]
    fn ties_go_to_lowest_starts() {
        let map = rem(vec![0.0; 32], &[]);
        let c = SelectionConstraints::equal(2, 5, 0);
        let r = select_bands_oracle(&map, &c).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.placements.iter().map(|p| p.start_bin).collect::<Vec<_>>(), vec![0, 5]);
        let g = select_bands_greedy(&map, &c).unwrap();
        assert_eq!(g.placements, r.placements);
    }

    #[test]
    fn bands_map_to_frequencies() {
        let map = rem(vec![0.0; 16], &[]);
        let r = select_bands_oracle(&map, &SelectionConstraints::equal(1, 4, 0)).unwrap();
        let b = r.bands[0];
        assert_eq!((b.lo(), b.hi()), (0.0, 4.0));
        assert_eq!(b.beta, 1.0);
    }

    #[test]
    fn exclusion_and_separation_are_honoured() {
        let map = rem(vec![0.0; 20], &[3, 4]);
        let c = SelectionConstraints::equal(2, 3, 2);
        let r = select_bands_oracle(&map, &c).unwrap();
        check_selection(&map, &c, &r).unwrap();
        assert_eq!(r.placements[0].start_bin, 0);
        assert_eq!(r.placements[1].start_bin, 5);
        let g = select_bands_greedy(&map, &c).unwrap();
        check_selection(&map, &c, &g).unwrap();
    }

    #[test]
    fn list_widths_may_reorder() {
        // cheap region is 2 bins then 4 bins: only the order (2, 4) fits at zero cost
        let mut v = vec![5.0; 12];
        v[0..2].iter_mut().for_each(|x| *x = 0.0);
        v[3..7].iter_mut().for_each(|x| *x = 0.0);
        let map = rem(v, &[]);
        let c = SelectionConstraints::list(vec![4, 2], 1);
        let r = select_bands_oracle(&map, &c).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.placements, vec![Placement { start_bin: 0, width_bins: 2 }, Placement { start_bin: 3, width_bins: 4 }]);
        check_selection(&map, &c, &r).unwrap();
    }

    #[test]
    fn infeasible_and_oversized_instances() {
        let map = rem(vec![0.0; 10], &[0]);
        let c = SelectionConstraints::equal(2, 5, 0);
        assert!(matches!(select_bands_oracle(&map, &c), Err(Error::Infeasible(_))));
        assert!(matches!(select_bands_greedy(&map, &c), Err(Error::Infeasible(_))));
        // admissible count is enough but the excluded bin splits the map
        let split = rem(vec![0.0; 11], &[5]);
        let c = SelectionConstraints::equal(1, 6, 0);
        assert!(matches!(select_bands_oracle(&split, &c), Err(Error::Infeasible(_))));
        assert!(matches!(select_bands_greedy(&split, &c), Err(Error::Infeasible(_))));

        let big = rem(vec![0.0; 300], &[]);
        let c = SelectionConstraints::equal(1, 5, 0);
        assert!(matches!(select_bands_oracle(&big, &c), Err(Error::TooLarge(_))));
        assert!(select_bands_greedy(&big, &c).is_ok());
    }

    #[test]
    fn greedy_can_fragment_where_oracle_succeeds() {
        // the cheapest 2-bin block sits in the middle of a 4-bin gap
        let v = vec![9.0, 1.0, 0.0, 1.0, 9.0, 9.0];
        let map = rem(v, &[4, 5]);
        let c = SelectionConstraints::equal(2, 2, 0);
        let r = select_bands_oracle(&map, &c).unwrap();
        assert_eq!(r.objective, 11.0);
        assert!(matches!(select_bands_greedy(&map, &c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn distinct_orders_dedupes() {
        assert_eq!(distinct_orders(&[2, 2, 2]), vec![vec![2, 2, 2]]);
        assert_eq!(distinct_orders(&[3, 1]), vec![vec![1, 3], vec![3, 1]]);
        assert_eq!(distinct_orders(&[1, 2, 1]).len(), 3);
    }
}
