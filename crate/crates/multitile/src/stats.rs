//! Empirical measurements on generated patches: censuses by type and scale
//! window, tile complexity of stationary towers, discrepancy against the
//! exact asymptotic rates, and dilation-aware patch occurrence counting.

use crate::asymptotics::{DensityModel, ScaleInterval};
use crate::exact::{rational_to_f64, Rational};
use crate::flow::{
    stationary_patch, visit_tiles, FlowError, GenOptions, Patch, PlacedTile, StationaryAnchor,
};
use crate::scheme::Scheme;
use num_traits::One;
use std::collections::{BTreeSet, HashMap, HashSet};

/// One census cell: tiles of a type with scale in a window.
#[derive(Debug, Clone)]
pub struct CensusCell {
    pub ptype: usize,
    pub interval: ScaleInterval,
    pub count: u64,
}

/// Exact census of a patch against a list of (type, scale-window) cells.
#[derive(Debug, Clone)]
pub struct TileCensus {
    pub cells: Vec<CensusCell>,
    /// Total tile count per prototile type (1-based index 0 unused).
    pub per_type_total: Vec<u64>,
    pub total: u64,
    /// u^d, the exact inflated volume of the patch support.
    pub volume: Rational,
}

impl TileCensus {
    /// Empirical rate count/u^d of one cell.
    pub fn rate_f64(&self, cell: usize) -> f64 {
        self.cells[cell].count as f64 / rational_to_f64(&self.volume)
    }

    pub fn total_rate_f64(&self) -> f64 {
        self.total as f64 / rational_to_f64(&self.volume)
    }
}

fn census_core<I>(
    dim: usize,
    time_u: &Rational,
    n_types: usize,
    cells: &[(usize, ScaleInterval)],
    tiles: I,
) -> TileCensus
where
    I: IntoIterator<Item = (usize, Rational)>,
{
    let mut out: Vec<CensusCell> = cells
        .iter()
        .map(|(t, i)| CensusCell {
            ptype: *t,
            interval: i.clone(),
            count: 0,
        })
        .collect();
    let mut per_type_total = vec![0u64; n_types + 1];
    let mut total = 0u64;
    for (ptype, scale) in tiles {
        total += 1;
        per_type_total[ptype] += 1;
        for cell in out.iter_mut() {
            if cell.ptype == ptype && cell.interval.contains(&scale) {
                cell.count += 1;
            }
        }
    }
    TileCensus {
        cells: out,
        per_type_total,
        total,
        volume: time_u.pow(dim as i32),
    }
}

/// Census of a materialized patch.
pub fn census(scheme: &Scheme, patch: &Patch, cells: &[(usize, ScaleInterval)]) -> TileCensus {
    census_core(
        patch.meta.dim,
        &patch.meta.time_u,
        scheme.prototile_count(),
        cells,
        patch.tiles.iter().map(|t| (t.ptype, t.scale.clone())),
    )
}

/// Streaming census of F_t(T_root) without materializing the patch; the only
/// state kept is the counters.
pub fn census_streaming(
    scheme: &Scheme,
    root: usize,
    u: &Rational,
    cells: &[(usize, ScaleInterval)],
    budget: u64,
) -> Result<TileCensus, FlowError> {
    let mut collected: Vec<CensusCell> = cells
        .iter()
        .map(|(t, i)| CensusCell {
            ptype: *t,
            interval: i.clone(),
            count: 0,
        })
        .collect();
    let mut per_type_total = vec![0u64; scheme.prototile_count() + 1];
    let mut total = 0u64;
    visit_tiles(scheme, root, u, budget, |tile| {
        total += 1;
        per_type_total[tile.ptype] += 1;
        for cell in collected.iter_mut() {
            if cell.ptype == tile.ptype && cell.interval.contains(tile.scale) {
                cell.count += 1;
            }
        }
    })?;
    Ok(TileCensus {
        cells: collected,
        per_type_total,
        total,
        volume: u.pow(scheme.dim as i32),
    })
}

/// Distinct (type, scale) pairs of F_ln(u)(T_root), computed by memoizing on
/// the (type, scale) of unfinished tiles; identical ancestors expand to
/// identical scale sets, so geometry never enters.
pub fn distinct_type_scales(
    scheme: &Scheme,
    root: usize,
    u: &Rational,
    budget: u64,
) -> Result<BTreeSet<(usize, Rational)>, FlowError> {
    type Key = (usize, Rational);
    let mut memo: HashMap<Key, BTreeSet<Key>> = HashMap::new();
    let mut states: u64 = 0;

    fn rec(
        scheme: &Scheme,
        ptype: usize,
        scale: Rational,
        memo: &mut HashMap<(usize, Rational), BTreeSet<(usize, Rational)>>,
        states: &mut u64,
        budget: u64,
    ) -> Result<BTreeSet<(usize, Rational)>, FlowError> {
        if scale <= Rational::one() {
            let mut s = BTreeSet::new();
            s.insert((ptype, scale));
            return Ok(s);
        }
        let key = (ptype, scale.clone());
        if let Some(hit) = memo.get(&key) {
            return Ok(hit.clone());
        }
        *states += 1;
        if *states > budget {
            return Err(FlowError::BudgetExceeded(budget));
        }
        let mut acc = BTreeSet::new();
        for child in scheme.rule(ptype) {
            let sub = rec(
                scheme,
                child.child_type,
                &scale * &child.scale,
                memo,
                states,
                budget,
            )?;
            acc.extend(sub);
        }
        memo.insert(key, acc.clone());
        Ok(acc)
    }

    rec(scheme, root, u.clone(), &mut memo, &mut states, budget)
}

/// Tile complexity of a stationary tower: c(k) = number of distinct
/// (type, scale) pairs in the order-k patch, with the per-k scale lists.
#[derive(Debug, Clone)]
pub struct ComplexityProfile {
    pub anchor: StationaryAnchor,
    /// c(k) for k = 0..=k_max.
    pub counts: Vec<u64>,
    /// The distinct (type, scale) pairs at each k.
    pub scales: Vec<Vec<(usize, Rational)>>,
}

pub fn complexity(
    scheme: &Scheme,
    anchor: &StationaryAnchor,
    k_max: usize,
    budget: u64,
) -> Result<ComplexityProfile, FlowError> {
    let mut counts = Vec::with_capacity(k_max + 1);
    let mut scales = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let u = anchor.period_u.pow(k as i32);
        let set = distinct_type_scales(scheme, anchor.root_type, &u, budget)?;
        counts.push(set.len() as u64);
        scales.push(set.into_iter().collect());
    }
    Ok(ComplexityProfile {
        anchor: anchor.clone(),
        counts,
        scales,
    })
}

/// One row of a discrepancy series.
#[derive(Debug, Clone)]
pub struct DiscrepancyPoint {
    pub time_u: Rational,
    pub count: u64,
    /// (Σ_j φ_j,total)·u^d, evaluated at 50 decimal digits.
    pub expected: f64,
    /// |count - expected|.
    pub discrepancy: f64,
    /// Number of distinct (type, scale) pairs: translation classes of tiles.
    pub distinct_tiles: u64,
}

/// Discrepancy of empirical tile counts against the exact asymptotic rate at
/// a list of exact times, plus the distinct-tile growth diagnostic: reports
/// the smallest C with distinct ≤ C·t^E over the sampled times, E being the
/// edge count of the associated graph.
#[derive(Debug, Clone)]
pub struct DiscrepancySeries {
    pub points: Vec<DiscrepancyPoint>,
    pub edge_count: usize,
    /// max over samples of distinct_tiles / t^edge_count.
    pub fitted_ceiling: f64,
}

pub fn discrepancy_series(
    scheme: &Scheme,
    model: &DensityModel,
    root: usize,
    times: &[Rational],
    budget: u64,
) -> Result<DiscrepancySeries, FlowError> {
    let d = scheme.dim as i32;
    let mut rate = None;
    for j in 1..=scheme.prototile_count() {
        // the model refuses reducible schemes, so every type is produced
        let phi = model
            .phi_total_type(j)
            .expect("irreducible scheme produces every type");
        rate = match rate {
            None => Some(phi),
            Some(acc) => Some(acc.add(&phi).expect("shared denominator")),
        };
    }
    let rate = rate.expect("at least one prototile");
    // 50-digit evaluation of the exact rate constant
    let rate_f64: f64 = rate.decimal(50).parse().unwrap_or(rate.to_f64());

    let mut points = Vec::new();
    for u in times {
        let mut count = 0u64;
        let mut distinct: HashSet<(usize, Rational)> = HashSet::new();
        visit_tiles(scheme, root, u, budget, |tile| {
            count += 1;
            distinct.insert((tile.ptype, tile.scale.clone()));
        })?;
        let expected = rate_f64 * rational_to_f64(&u.pow(d));
        points.push(DiscrepancyPoint {
            time_u: u.clone(),
            count,
            expected,
            discrepancy: (count as f64 - expected).abs(),
            distinct_tiles: distinct.len() as u64,
        });
    }
    let edge_count: usize = scheme.rules.iter().map(|r| r.len()).sum();
    let fitted_ceiling = points
        .iter()
        .filter(|p| p.time_u > Rational::one())
        .map(|p| {
            let t = rational_to_f64(&p.time_u).ln();
            p.distinct_tiles as f64 / t.powi(edge_count as i32)
        })
        .fold(0.0f64, f64::max);
    Ok(DiscrepancySeries {
        points,
        edge_count,
        fitted_ceiling,
    })
}

/// L and N occurrence counters for a needle patch: translations g admitting a
/// dilation α in the window with g + α·needle a sub-patch of the haystack,
/// with support inside (L) or meeting (N) the query region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccurrenceCount {
    pub l: u64,
    pub n: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum OccurrenceError {
    #[error("needle patch is empty")]
    EmptyNeedle,
    #[error("needle and haystack dimensions differ")]
    DimensionMismatch,
}

/// Canonical form of a needle: dilated so its largest scale is 1, anchored at
/// the tile with lexicographically least offset.
pub fn canonicalize_needle(tiles: &[PlacedTile]) -> Result<(Vec<PlacedTile>, usize), OccurrenceError> {
    if tiles.is_empty() {
        return Err(OccurrenceError::EmptyNeedle);
    }
    let max_scale = tiles
        .iter()
        .map(|t| t.scale.clone())
        .max()
        .expect("nonempty");
    let normalized: Vec<PlacedTile> = tiles
        .iter()
        .map(|t| PlacedTile {
            ptype: t.ptype,
            scale: &t.scale / &max_scale,
            offset: t.offset.iter().map(|o| o / &max_scale).collect(),
            path: Vec::new(),
        })
        .collect();
    let anchor = (0..normalized.len())
        .min_by(|&a, &b| {
            normalized[a]
                .offset
                .cmp(&normalized[b].offset)
                .then_with(|| normalized[a].ptype.cmp(&normalized[b].ptype))
                .then_with(|| normalized[a].scale.cmp(&normalized[b].scale))
        })
        .unwrap();
    Ok((normalized, anchor))
}

/// Counts dilated-translated occurrences of `needle` in `haystack`.
///
/// For every haystack tile matching the anchor's type, the dilation is forced
/// to λ = scale/anchor_scale; λ outside the window rejects immediately, and
/// the remaining needle tiles are verified by exact hash lookups.
pub fn count_occurrences(
    scheme: &Scheme,
    haystack: &Patch,
    needle: &[PlacedTile],
    dilation: &ScaleInterval,
    region_lo: &[Rational],
    region_hi: &[Rational],
) -> Result<OccurrenceCount, OccurrenceError> {
    let (needle, anchor_idx) = canonicalize_needle(needle)?;
    if needle[0].offset.len() != haystack.meta.dim {
        return Err(OccurrenceError::DimensionMismatch);
    }
    let anchor = &needle[anchor_idx];

    let mut index: HashSet<(usize, Rational, Vec<Rational>)> = HashSet::new();
    for t in &haystack.tiles {
        index.insert((t.ptype, t.scale.clone(), t.offset.clone()));
    }

    let mut l_hits: HashSet<Vec<Rational>> = HashSet::new();
    let mut n_hits: HashSet<Vec<Rational>> = HashSet::new();
    'candidates: for cand in haystack.tiles.iter().filter(|t| t.ptype == anchor.ptype) {
        let lambda = &cand.scale / &anchor.scale;
        if !dilation.contains(&lambda) {
            continue;
        }
        let g: Vec<Rational> = cand
            .offset
            .iter()
            .zip(&anchor.offset)
            .map(|(h, n)| h - &lambda * n)
            .collect();
        for (i, t) in needle.iter().enumerate() {
            if i == anchor_idx {
                continue;
            }
            let scale = &lambda * &t.scale;
            let offset: Vec<Rational> = g
                .iter()
                .zip(&t.offset)
                .map(|(gk, ok)| gk + &lambda * ok)
                .collect();
            if !index.contains(&(t.ptype, scale, offset)) {
                continue 'candidates;
            }
        }
        // support placement against the region
        let mut inside = true;
        let mut meets = false;
        for t in &needle {
            let scale = &lambda * &t.scale;
            let offset: Vec<Rational> = g
                .iter()
                .zip(&t.offset)
                .map(|(gk, ok)| gk + &lambda * ok)
                .collect();
            let geom = scheme
                .prototile(t.ptype)
                .geometry
                .transformed(&scale, &offset);
            if !geom.inside_box(region_lo, region_hi) {
                inside = false;
            }
            if geom.intersects_box(region_lo, region_hi) {
                meets = true;
            }
            if !inside && meets {
                break;
            }
        }
        if inside {
            l_hits.insert(g.clone());
        }
        if meets {
            n_hits.insert(g);
        }
    }
    Ok(OccurrenceCount {
        l: l_hits.len() as u64,
        n: n_hits.len() as u64,
    })
}

/// Extracts the sub-patch of tiles whose support lies inside the closed box.
pub fn extract_box(
    scheme: &Scheme,
    patch: &Patch,
    lo: &[Rational],
    hi: &[Rational],
) -> Vec<PlacedTile> {
    patch
        .tiles
        .iter()
        .filter(|t| {
            patch
                .tile_geometry(scheme, t)
                .inside_box(lo, hi)
        })
        .cloned()
        .collect()
}

/// Median of a slice of rates.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Convenience wrapper: stationary patch census at tower order k.
pub fn stationary_census(
    scheme: &Scheme,
    anchor: &StationaryAnchor,
    k: usize,
    cells: &[(usize, ScaleInterval)],
    opts: &GenOptions,
) -> Result<TileCensus, FlowError> {
    let patch = stationary_patch(scheme, anchor, k, opts)?;
    Ok(census(scheme, &patch, cells))
}

/// Number of tiles of F_ln(u)(T_root): streaming count, used to cross-check
/// the graph-side path counting.
pub fn tile_count(scheme: &Scheme, root: usize, u: &Rational, budget: u64) -> Result<u64, FlowError> {
    visit_tiles(scheme, root, u, budget, |_| {})
}

/// Exact time points log-uniformly spread over (ln u ∈ [T-1, T]): the 8
/// integers round(e^(T-1+(m+0.55)/8)), clamped into the window.
pub fn sample_times_in_window(t_upper: u32) -> Vec<Rational> {
    let t = t_upper as f64;
    let mut out = Vec::new();
    for m in 0..8 {
        let target = (t - 1.0 + (m as f64 + 0.55) / 8.0).exp();
        let mut u = target.round() as i64;
        let lo = (t - 1.0).exp();
        let hi = t.exp();
        if (u as f64) < lo {
            u = lo.ceil() as i64;
        }
        if u as f64 > hi {
            u = hi.floor() as i64;
        }
        out.push(Rational::from_integer(u.into()));
    }
    out
}

/// Generates `count` deterministic pseudo-random axis boxes inside the given
/// bounds, via a fixed linear congruential sequence (no global RNG state).
pub fn deterministic_boxes(
    lo: &[Rational],
    hi: &[Rational],
    count: usize,
) -> Vec<(Vec<Rational>, Vec<Rational>)> {
    let dim = lo.len();
    let mut state: u64 = 0x2545F4914F6CDD1D;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) as i64
    };
    let mut out = Vec::new();
    for _ in 0..count {
        let mut blo = Vec::with_capacity(dim);
        let mut bhi = Vec::with_capacity(dim);
        for k in 0..dim {
            let span = &hi[k] - &lo[k];
            // two cut points on a 64-grid of the span
            let mut a = next().rem_euclid(64);
            let mut b = next().rem_euclid(64);
            if a == b {
                b = (b + 17) % 64;
            }
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let g = |x: i64| &lo[k] + &span * Rational::new(x.into(), 64.into());
            blo.push(g(a));
            bhi.push(g(b));
        }
        out.push((blo, bhi));
    }
    out
}
