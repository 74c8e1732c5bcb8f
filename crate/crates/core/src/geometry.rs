//! Axis-aligned box arithmetic and domain partitioning.
//!
//! The abstraction works over a compact box domain discretized into a uniform
//! grid of cells that respects a set of labeled regions of interest. Transition
//! bound computations need box expansion (inflate every face outward by a
//! nonnegative vector) and reduction (deflate, yielding the open interior or
//! nothing), plus the intersection/containment indicators over the results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box: lower[{axis}] = {lower} > upper[{axis}] = {upper}")]
    InvalidBounds { axis: usize, lower: f64, upper: f64 },
    #[error("grid step must be positive, got {0} on axis {1}")]
    NonPositiveStep(f64, usize),
    #[error("region '{label}' boundary {value} on axis {axis} does not align with the grid")]
    MisalignedRegion {
        label: String,
        axis: usize,
        value: f64,
    },
    #[error("region '{label}' is not contained in the domain")]
    RegionOutsideDomain { label: String },
    #[error("negative expansion/reduction amount {0} on axis {1}")]
    NegativeAmount(f64, usize),
}

/// Closed axis-aligned box in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Result of deflating a box: the open interior of the shrunken box, or
/// nothing when some side collapses. Keeping emptiness explicit makes the
/// downstream indicator tests unambiguous.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduced {
    /// Open box: all comparisons against its faces are strict.
    Interior(Rect),
    Empty,
}

impl Rect {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (axis, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo <= hi) {
                return Err(GeometryError::InvalidBounds {
                    axis,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Rect { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    fn check_amount(&self, c: &[f64]) -> Result<(), GeometryError> {
        if c.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        for (axis, &v) in c.iter().enumerate() {
            if v < 0.0 {
                return Err(GeometryError::NegativeAmount(v, axis));
            }
        }
        Ok(())
    }

    /// Inflates every face outward by the per-axis amounts in `c`.
    pub fn expand(&self, c: &[f64]) -> Result<Rect, GeometryError> {
        self.check_amount(c)?;
        Ok(Rect {
            lower: self.lower.iter().zip(c).map(|(lo, ci)| lo - ci).collect(),
            upper: self.upper.iter().zip(c).map(|(hi, ci)| hi + ci).collect(),
        })
    }

    /// Deflates every face inward by `c`. The points strictly farther than
    /// `c[i]` from every boundary point form the open interior of the shrunken
    /// box; if any side length drops to zero or below, the set is empty.
    pub fn reduce(&self, c: &[f64]) -> Result<Reduced, GeometryError> {
        self.check_amount(c)?;
        let lower: Vec<f64> = self.lower.iter().zip(c).map(|(lo, ci)| lo + ci).collect();
        let upper: Vec<f64> = self.upper.iter().zip(c).map(|(hi, ci)| hi - ci).collect();
        if lower.iter().zip(&upper).any(|(lo, hi)| lo >= hi) {
            return Ok(Reduced::Empty);
        }
        Ok(Reduced::Interior(Rect { lower, upper }))
    }

    /// Closed-closed intersection test; shared faces count.
    pub fn intersects(&self, other: &Rect) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .all(|((alo, ahi), (blo, bhi))| alo <= bhi && blo <= ahi)
    }

    /// Does this closed box share a point with a reduced (open) set?
    /// Tangency against an open face does not count.
    pub fn intersects_reduced(&self, other: &Reduced) -> bool {
        match other {
            Reduced::Empty => false,
            Reduced::Interior(b) => self
                .lower
                .iter()
                .zip(&self.upper)
                .zip(b.lower.iter().zip(&b.upper))
                .all(|((alo, ahi), (blo, bhi))| alo < bhi && blo < ahi),
        }
    }

    /// Is every point of this closed box inside the closed box `other`?
    pub fn contained_in(&self, other: &Rect) -> bool {
        debug_assert_eq!(self.dim(), other.dim());
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .all(|((alo, ahi), (blo, bhi))| blo <= alo && ahi <= bhi)
    }

    /// Is every point of this closed box strictly inside the reduced set?
    pub fn contained_in_reduced(&self, other: &Reduced) -> bool {
        match other {
            Reduced::Empty => false,
            Reduced::Interior(b) => self
                .lower
                .iter()
                .zip(&self.upper)
                .zip(b.lower.iter().zip(&b.upper))
                .all(|((alo, ahi), (blo, bhi))| blo < alo && ahi < bhi),
        }
    }

    /// Componentwise hull of two boxes.
    pub fn hull(&self, other: &Rect) -> Rect {
        Rect {
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a.min(*b))
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    /// Componentwise intersection, or `None` when disjoint.
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        if lower.iter().zip(&upper).any(|(lo, hi)| lo > hi) {
            None
        } else {
            Some(Rect { lower, upper })
        }
    }
}

/// A box tagged with an atomic-proposition name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledRegion {
    pub label: String,
    pub rect: Rect,
}

impl LabeledRegion {
    pub fn new(label: impl Into<String>, rect: Rect) -> Self {
        LabeledRegion {
            label: label.into(),
            rect,
        }
    }
}

/// Uniform grid partition of a box domain that respects labeled regions.
///
/// Cells are closed boxes sharing faces; the distinguished index
/// [`Partition::unsafe_index`] stands for everything outside the domain.
/// Point location breaks ties on shared faces toward the lexicographically
/// smallest cell index so that the cell map is a deterministic function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    domain: Rect,
    edges: Vec<Vec<f64>>,
    counts: Vec<usize>,
    cells: Vec<Rect>,
    labels: Vec<String>,
    cell_labels: Vec<u32>,
}

impl Partition {
    /// Builds a uniform grid over `domain` with the given per-axis step.
    /// Every region must be grid-aligned; each cell is labeled with the set of
    /// regions containing it.
    pub fn build(
        domain: Rect,
        regions: &[LabeledRegion],
        grid_step: &[f64],
    ) -> Result<Self, GeometryError> {
        let n = domain.dim();
        if grid_step.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: grid_step.len(),
            });
        }
        for (axis, &s) in grid_step.iter().enumerate() {
            if !(s > 0.0) {
                return Err(GeometryError::NonPositiveStep(s, axis));
            }
        }

        let mut edges = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for axis in 0..n {
            let width = domain.width(axis);
            let count = ((width / grid_step[axis]) - 1e-9).ceil().max(1.0) as usize;
            let mut e: Vec<f64> = (0..count)
                .map(|j| domain.lower[axis] + j as f64 * grid_step[axis])
                .collect();
            e.push(domain.upper[axis]);
            edges.push(e);
            counts.push(count);
        }

        // A label universe in declaration order; duplicate labels share a bit.
        let mut labels: Vec<String> = Vec::new();
        for r in regions {
            if !labels.contains(&r.label) {
                labels.push(r.label.clone());
            }
        }
        assert!(
            labels.len() <= 32,
            "at most 32 distinct region labels supported"
        );

        for r in regions {
            if r.rect.dim() != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    got: r.rect.dim(),
                });
            }
            if !r.rect.contained_in(&domain) {
                return Err(GeometryError::RegionOutsideDomain {
                    label: r.label.clone(),
                });
            }
            for axis in 0..n {
                let tol = 1e-9 * domain.width(axis).max(1.0);
                for value in [r.rect.lower[axis], r.rect.upper[axis]] {
                    if !edges[axis].iter().any(|e| (e - value).abs() <= tol) {
                        return Err(GeometryError::MisalignedRegion {
                            label: r.label.clone(),
                            axis,
                            value,
                        });
                    }
                }
            }
        }

        let total: usize = counts.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut cell_labels = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let lower: Vec<f64> = (0..n).map(|a| edges[a][idx[a]]).collect();
            let upper: Vec<f64> = (0..n).map(|a| edges[a][idx[a] + 1]).collect();
            let cell = Rect { lower, upper };
            let center = cell.center();
            let mut bits = 0u32;
            for r in regions {
                if r.rect.contains_point(&center) {
                    let bit = labels.iter().position(|l| l == &r.label).unwrap();
                    bits |= 1 << bit;
                }
            }
            cells.push(cell);
            cell_labels.push(bits);
            // row-major increment: last axis fastest
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }

        Ok(Partition {
            domain,
            edges,
            counts,
            cells,
            labels,
            cell_labels,
        })
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Index of the synthetic absorbing state covering everything outside the
    /// domain; appended after the grid cells.
    pub fn unsafe_index(&self) -> usize {
        self.cells.len()
    }

    /// Total number of abstract states: grid cells plus the outside state.
    pub fn num_states(&self) -> usize {
        self.cells.len() + 1
    }

    pub fn cell(&self, idx: usize) -> &Rect {
        &self.cells[idx]
    }

    pub fn cells(&self) -> &[Rect] {
        &self.cells
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cell_label_bits(&self, idx: usize) -> u32 {
        if idx == self.unsafe_index() {
            0
        } else {
            self.cell_labels[idx]
        }
    }

    pub fn cell_label_names(&self, idx: usize) -> Vec<&str> {
        let bits = self.cell_label_bits(idx);
        self.labels
            .iter()
            .enumerate()
            .filter(|(i, _)| bits & (1 << i) != 0)
            .map(|(_, l)| l.as_str())
            .collect()
    }

    /// Maps a point inside the domain to its cell index; faces shared between
    /// cells resolve to the smallest index. Returns `None` outside the domain.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.domain.dim() || !self.domain.contains_point(x) {
            return None;
        }
        let mut linear = 0usize;
        for axis in 0..self.domain.dim() {
            let interior = &self.edges[axis][1..self.counts[axis]];
            let k = interior.partition_point(|e| *e < x[axis]);
            linear = linear * self.counts[axis] + k;
        }
        Some(linear)
    }

    pub fn grid_counts(&self) -> &[usize] {
        &self.counts
    }

    /// Cells whose closed box intersects `rect`, in increasing index order.
    pub fn cells_intersecting(&self, rect: &Rect) -> Vec<usize> {
        let n = self.domain.dim();
        let mut lo_idx = vec![0usize; n];
        let mut hi_idx = vec![0usize; n];
        for axis in 0..n {
            if rect.lower[axis] > self.domain.upper[axis]
                || rect.upper[axis] < self.domain.lower[axis]
            {
                return Vec::new();
            }
            let interior = &self.edges[axis][1..self.counts[axis]];
            // first cell whose upper edge reaches rect.lower
            lo_idx[axis] = interior.partition_point(|e| *e < rect.lower[axis]);
            // last cell whose lower edge does not exceed rect.upper
            hi_idx[axis] = interior.partition_point(|e| *e <= rect.upper[axis]);
        }
        let mut out = Vec::new();
        let mut idx = lo_idx.clone();
        loop {
            let mut linear = 0usize;
            for axis in 0..n {
                linear = linear * self.counts[axis] + idx[axis];
            }
            if self.cells[linear].intersects(rect) {
                out.push(linear);
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    out.sort_unstable();
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] <= hi_idx[axis] {
                    break;
                }
                idx[axis] = lo_idx[axis];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect2(lo: [f64; 2], hi: [f64; 2]) -> Rect {
        Rect::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn expand_widens_componentwise() {
        let q = rect2([0.0, 0.0], [1.0, 1.0]);
        let e = q.expand(&[0.5, 0.5]).unwrap();
        assert_eq!(e, rect2([-0.5, -0.5], [1.5, 1.5]));
        assert_eq!(q.expand(&[0.0, 0.0]).unwrap(), q);
        let x = rect2([-2.0, -2.0], [2.0, 2.0]);
        assert_eq!(
            x.expand(&[0.135, 0.135]).unwrap(),
            rect2([-2.135, -2.135], [2.135, 2.135])
        );
    }

    #[test]
    fn reduce_shrinks_or_empties() {
        let q = rect2([0.0, 0.0], [2.0, 2.0]);
        match q.reduce(&[0.5, 0.5]).unwrap() {
            Reduced::Interior(r) => assert_eq!(r, rect2([0.5, 0.5], [1.5, 1.5])),
            Reduced::Empty => panic!("should not be empty"),
        }
        let unit = rect2([0.0, 0.0], [1.0, 1.0]);
        assert_eq!(unit.reduce(&[0.5, 0.5]).unwrap(), Reduced::Empty);
        // c = 0 leaves the interior: tangent closed boxes no longer intersect
        let interior = unit.reduce(&[0.0, 0.0]).unwrap();
        assert!(!rect2([1.0, 0.0], [2.0, 1.0]).intersects_reduced(&interior));
        assert!(rect2([0.9, 0.0], [2.0, 1.0]).intersects_reduced(&interior));
    }

    #[test]
    fn intersection_indicators() {
        let a = rect2([0.0, 0.0], [1.0, 1.0]);
        let b = rect2([1.0, 1.0], [2.0, 2.0]);
        assert!(a.intersects(&b)); // closed boxes touch at a corner
        let open_b = b.reduce(&[0.0, 0.0]).unwrap();
        assert!(!a.intersects_reduced(&open_b));
        assert!(!a.intersects_reduced(&Reduced::Empty));
    }

    #[test]
    fn containment_indicators() {
        let a = rect2([0.0, 0.0], [1.0, 1.0]);
        assert!(a.contained_in(&rect2([-1.0, -1.0], [2.0, 2.0])));
        let open_a = a.reduce(&[0.0, 0.0]).unwrap();
        assert!(!a.contained_in_reduced(&open_a)); // not strictly inside itself
        assert!(!a.contained_in_reduced(&Reduced::Empty));
        let inner = rect2([0.25, 0.25], [0.75, 0.75]);
        assert!(inner.contained_in_reduced(&open_a));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let q = rect2([0.0, 0.0], [1.0, 1.0]);
        assert!(q.expand(&[0.1]).is_err());
        assert!(q.reduce(&[0.1, 0.1, 0.1]).is_err());
        assert!(q.expand(&[-0.1, 0.0]).is_err());
    }

    #[test]
    fn canonical_grid_has_1024_cells() {
        let x = rect2([-2.0, -2.0], [2.0, 2.0]);
        let p = Partition::build(x, &[], &[0.125, 0.125]).unwrap();
        assert_eq!(p.num_cells(), 1024);
        assert_eq!(p.unsafe_index(), 1024);
        assert_eq!(p.num_states(), 1025);
    }

    #[test]
    fn single_cell_domain() {
        let x = Rect::new(vec![0.0], vec![1.0]).unwrap();
        let p = Partition::build(x, &[], &[1.0]).unwrap();
        assert_eq!(p.num_cells(), 1);
        assert_eq!(p.cell_label_bits(0), 0);
    }

    #[test]
    fn aligned_region_labels_exactly_its_cells() {
        let x = rect2([0.0, 0.0], [1.0, 1.0]);
        let region = LabeledRegion::new("Des", rect2([0.0, 0.0], [0.5, 0.5]));
        let p = Partition::build(x, &[region], &[0.5, 0.5]).unwrap();
        assert_eq!(p.num_cells(), 4);
        let labeled: Vec<usize> = (0..4).filter(|&i| p.cell_label_bits(i) != 0).collect();
        assert_eq!(labeled.len(), 1);
        assert_eq!(p.cell_label_names(labeled[0]), vec!["Des"]);
    }

    #[test]
    fn misaligned_region_is_rejected() {
        let x = rect2([0.0, 0.0], [1.0, 1.0]);
        let region = LabeledRegion::new("Des", rect2([0.0, 0.0], [0.3, 0.5]));
        assert!(matches!(
            Partition::build(x, &[region], &[0.5, 0.5]),
            Err(GeometryError::MisalignedRegion { .. })
        ));
    }

    #[test]
    fn cell_volumes_sum_to_domain_volume() {
        let x = rect2([-2.0, -2.0], [2.0, 2.0]);
        let p = Partition::build(x.clone(), &[], &[0.125, 0.125]).unwrap();
        let sum: f64 = p.cells().iter().map(Rect::volume).sum();
        assert!((sum - x.volume()).abs() / x.volume() < 1e-9);
    }

    #[test]
    fn locate_breaks_face_ties_to_smallest_index() {
        let x = rect2([0.0, 0.0], [1.0, 1.0]);
        let p = Partition::build(x, &[], &[0.5, 0.5]).unwrap();
        // interior point
        assert_eq!(p.locate(&[0.25, 0.25]), Some(0));
        assert_eq!(p.locate(&[0.75, 0.75]), Some(3));
        // point exactly on the shared face belongs to the smaller cell
        assert_eq!(p.locate(&[0.5, 0.25]), Some(0));
        assert_eq!(p.locate(&[0.25, 0.5]), Some(0));
        assert_eq!(p.locate(&[0.5, 0.5]), Some(0));
        // domain boundary maps to the last cell, outside maps to none
        assert_eq!(p.locate(&[1.0, 1.0]), Some(3));
        assert_eq!(p.locate(&[1.1, 0.5]), None);
    }

    #[test]
    fn cells_intersecting_matches_brute_force() {
        let x = rect2([-1.0, -1.0], [1.0, 1.0]);
        let p = Partition::build(x, &[], &[0.25, 0.25]).unwrap();
        let probe = rect2([-0.3, 0.1], [0.2, 0.55]);
        let fast = p.cells_intersecting(&probe);
        let slow: Vec<usize> = (0..p.num_cells())
            .filter(|&i| p.cell(i).intersects(&probe))
            .collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn partition_round_trips_through_serde() {
        let x = rect2([-1.0, -1.0], [1.0, 1.0]);
        let region = LabeledRegion::new("A", rect2([-0.5, -0.5], [0.5, 0.5]));
        let p = Partition::build(x, &[region], &[0.5, 0.5]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let q: Partition = serde_json::from_str(&text).unwrap();
        assert_eq!(p.num_cells(), q.num_cells());
        assert_eq!(p.cell_labels, q.cell_labels);
        assert_eq!(p.cells, q.cells);
    }
}
