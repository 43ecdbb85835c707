//! Scene preparation: nearest-neighbor indexing, voxel-grid downsampling,
//! seeded sampling and workspace cropping.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_squared, Point3, PointCloud, Vec3};

const LEAF_CAPACITY: usize = 16;

const LEAF: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node {
    // tight bounds of the points below this node
    lo: [f64; 3],
    hi: [f64; 3],
    // children, or `LEAF`
    left: usize,
    right: usize,
    start: usize,
    end: usize,
}

/// Squared distance from `q` to the box `[lo, hi]`, evaluated in the same
/// order as `distance_squared`. Rounding is monotone, so it never exceeds the
/// computed distance to any point inside; pruning on it is exact.
#[inline]
fn box_d2(q: &Point3, lo: &[f64; 3], hi: &[f64; 3]) -> f64 {
    // plain comparisons: inputs are finite, and f64::max pays for NaN rules
    let gap = |a: usize| {
        let below = lo[a] - q[a];
        let above = q[a] - hi[a];
        let g = if below > above { below } else { above };
        if g > 0.0 {
            g
        } else {
            0.0
        }
    };
    let (gx, gy, gz) = (gap(0), gap(1), gap(2));
    gx * gx + gy * gy + gz * gz
}

/// Result of a nearest-neighbor query. `id` is the storage position of the
/// point in the indexed cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub point: Point3,
    pub distance: f64,
}

/// Static k-d tree over a cloud snapshot.
///
/// Queries are exact: the returned point minimizes squared Euclidean
/// distance, with ties going to the lowest storage position.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    // points permuted into leaf order, paired with their storage ids
    slots: Vec<(Point3, usize)>,
    nodes: Vec<Node>,
    // per node: parent and the closed region split planes assign to it
    links: Vec<Link>,
    // storage id -> leaf node
    leaf_of: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Link {
    parent: usize,
    cell_lo: [f64; 3],
    cell_hi: [f64; 3],
}

#[derive(Clone, Copy)]
struct Best {
    d2: f64,
    id: usize,
}

impl Best {
    #[inline]
    fn beats(&self, d2: f64, id: usize) -> bool {
        d2 < self.d2 || (d2 == self.d2 && id < self.id)
    }
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        let points = cloud.points().to_vec();
        let mut slots: Vec<(Point3, usize)> = points.iter().copied().zip(0..).collect();
        let mut nodes = Vec::new();
        let mut links = Vec::new();
        if !slots.is_empty() {
            let len = slots.len();
            let root = Link {
                parent: LEAF,
                cell_lo: [f64::NEG_INFINITY; 3],
                cell_hi: [f64::INFINITY; 3],
            };
            build_node(&mut slots, 0, len, root, &mut nodes, &mut links);
        }
        let mut leaf_of = vec![0; points.len()];
        for (i, n) in nodes.iter().enumerate() {
            if n.left == LEAF {
                for (_, id) in &slots[n.start..n.end] {
                    leaf_of[*id] = i;
                }
            }
        }
        Self {
            points,
            slots,
            nodes,
            links,
            leaf_of,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indexed points in storage order.
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn point(&self, id: usize) -> Point3 {
        self.points[id]
    }

    pub fn nearest(&self, query: &Point3) -> Result<Neighbor> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut best = Best {
            d2: f64::INFINITY,
            id: usize::MAX,
        };
        self.search(0, query, &mut best);
        Ok(self.neighbor(best))
    }

    /// Nearest point no farther than `max_distance`, if any.
    pub fn nearest_within(&self, query: &Point3, max_distance: f64) -> Option<Neighbor> {
        self.nearest_within_hinted(query, max_distance, None)
    }

    /// [`Self::nearest_within`] starting from a likely answer, e.g. the
    /// previous neighbor of a slowly moving query. The result does not
    /// depend on the hint.
    pub fn nearest_within_hinted(&self, query: &Point3, max_distance: f64, hint: Option<usize>) -> Option<Neighbor> {
        if self.is_empty() {
            return None;
        }
        // Seed the bound just past the gate so points exactly at the gate
        // are still found; ties are re-checked below.
        let gate2 = max_distance * max_distance;
        let mut best = Best {
            d2: next_up(gate2),
            id: usize::MAX,
        };
        match hint.filter(|&id| id < self.points.len()) {
            Some(id) if best.beats(distance_squared(query, &self.points[id]), id) => {
                self.search_from(self.leaf_of[id], query, &mut best)
            }
            _ => self.search(0, query, &mut best),
        }
        if best.id == usize::MAX || best.d2 > gate2 {
            None
        } else {
            Some(self.neighbor(best))
        }
    }

    /// Ids of all points within `radius` (closed), ascending.
    pub fn within_radius(&self, query: &Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.is_empty() {
            self.collect_radius(0, query, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn neighbor(&self, best: Best) -> Neighbor {
        Neighbor {
            id: best.id,
            point: self.points[best.id],
            distance: best.d2.sqrt(),
        }
    }

    fn search(&self, node: usize, q: &Point3, best: &mut Best) {
        let n = &self.nodes[node];
        if n.left == LEAF {
            for (p, id) in &self.slots[n.start..n.end] {
                let d2 = distance_squared(q, p);
                if best.beats(d2, *id) {
                    *best = Best { d2, id: *id };
                }
            }
            return;
        }
        let (l, r) = (&self.nodes[n.left], &self.nodes[n.right]);
        let dl = box_d2(q, &l.lo, &l.hi);
        let dr = box_d2(q, &r.lo, &r.hi);
        let (first, d_first, second, d_second) = if dr < dl {
            (n.right, dr, n.left, dl)
        } else {
            (n.left, dl, n.right, dr)
        };
        // equality keeps tie candidates reachable
        if d_first <= best.d2 {
            self.search(first, q, best);
        }
        if d_second <= best.d2 {
            self.search(second, q, best);
        }
    }

    /// Bottom-up search starting at a leaf likely to hold the answer. Each
    /// step up adds the sibling subtree; it stops once the best-distance ball
    /// lies strictly inside the current cell, since every point outside is
    /// then strictly farther.
    fn search_from(&self, leaf: usize, q: &Point3, best: &mut Best) {
        self.search(leaf, q, best);
        let mut node = leaf;
        loop {
            let link = &self.links[node];
            let inside = (0..3).all(|a| {
                let below = q[a] - link.cell_lo[a];
                let above = link.cell_hi[a] - q[a];
                below > 0.0 && below * below > best.d2 && above > 0.0 && above * above > best.d2
            });
            if inside || link.parent == LEAF {
                return;
            }
            let parent = &self.nodes[link.parent];
            let sibling = if parent.left == node { parent.right } else { parent.left };
            let s = &self.nodes[sibling];
            if box_d2(q, &s.lo, &s.hi) <= best.d2 {
                self.search(sibling, q, best);
            }
            node = link.parent;
        }
    }

    fn collect_radius(&self, node: usize, q: &Point3, r2: f64, out: &mut Vec<usize>) {
        let n = &self.nodes[node];
        if box_d2(q, &n.lo, &n.hi) > r2 {
            return;
        }
        if n.left == LEAF {
            out.extend(
                self.slots[n.start..n.end]
                    .iter()
                    .filter(|(p, _)| distance_squared(q, p) <= r2)
                    .map(|(_, id)| *id),
            );
        } else {
            self.collect_radius(n.left, q, r2, out);
            self.collect_radius(n.right, q, r2, out);
        }
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_finite() {
        f64::from_bits(x.to_bits() + 1)
    } else {
        x
    }
}

fn build_node(
    slots: &mut [(Point3, usize)],
    start: usize,
    end: usize,
    link: Link,
    nodes: &mut Vec<Node>,
    links: &mut Vec<Link>,
) -> usize {
    let me = nodes.len();
    let span = &mut slots[start..end];
    let mut lo = span[0].0;
    let mut hi = span[0].0;
    for (p, _) in span.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    nodes.push(Node {
        lo: lo.coords.into(),
        hi: hi.coords.into(),
        left: LEAF,
        right: LEAF,
        start,
        end,
    });
    links.push(link.clone());
    let extent = hi - lo;
    let axis = extent.imax();
    // small or all-coincident spans stay leaves
    if end - start <= LEAF_CAPACITY || extent[axis] == 0.0 {
        return me;
    }
    let mid = span.len() / 2;
    span.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]).then(a.1.cmp(&b.1)));
    // points equal to the split value may fall on either side, so both
    // child cells are closed at it
    let value = span[mid].0[axis];
    let mut left_link = Link { parent: me, ..link };
    left_link.cell_hi[axis] = value;
    let mut right_link = Link { parent: me, ..link };
    right_link.cell_lo[axis] = value;
    let left = build_node(slots, start, start + mid, left_link, nodes, links);
    let right = build_node(slots, start + mid, end, right_link, nodes, links);
    nodes[me].left = left;
    nodes[me].right = right;
    me
}

pub fn build_index(cloud: &PointCloud) -> SpatialIndex {
    SpatialIndex::build(cloud)
}

pub fn nearest(index: &SpatialIndex, query: &Point3) -> Result<Neighbor> {
    index.nearest(query)
}

/// Replaces the points in each occupied cube of an origin-anchored grid by
/// their centroid. Output is ordered by ascending voxel coordinate.
pub fn voxel_downsample(cloud: &PointCloud, leaf: f64) -> Result<PointCloud> {
    if !(leaf > 0.0) || !leaf.is_finite() {
        return Err(Error::NonPositiveLeaf);
    }
    struct Cell {
        sum: Vec3,
        count: usize,
        lo: Point3,
        hi: Point3,
    }
    let mut cells: BTreeMap<[i64; 3], Cell> = BTreeMap::new();
    for p in cloud {
        let key = [
            (p.x / leaf).floor() as i64,
            (p.y / leaf).floor() as i64,
            (p.z / leaf).floor() as i64,
        ];
        let cell = cells.entry(key).or_insert(Cell {
            sum: Vec3::zeros(),
            count: 0,
            lo: *p,
            hi: *p,
        });
        cell.sum += p.coords;
        cell.count += 1;
        cell.lo = cell.lo.inf(p);
        cell.hi = cell.hi.sup(p);
    }
    let points = cells
        .into_values()
        .map(|c| {
            // clamp so rounding in the mean cannot leave the members' extent
            let mean = Point3::from(c.sum / c.count as f64);
            mean.sup(&c.lo).inf(&c.hi)
        })
        .collect();
    Ok(PointCloud::from_finite(points))
}

/// Deterministic, platform-independent random source.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for the `ordinal`-th parallel consumer.
    pub fn child(&self, ordinal: u64) -> SeededRng {
        SeededRng::new(self.seed.wrapping_add(ordinal))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Number of points `sample_points` draws from a cloud of `len` points.
pub fn sample_count(len: usize, fraction: f64, max_count: usize) -> usize {
    let wanted = (fraction * len as f64).ceil() as usize;
    wanted.min(max_count).min(len)
}

/// Draws `min(ceil(fraction·n), max_count, n)` distinct points uniformly
/// without replacement, in draw order.
pub fn sample_points(
    cloud: &PointCloud,
    fraction: f64,
    max_count: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Point3>> {
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidSampling("fraction must lie in (0, 1]".into()));
    }
    if max_count == 0 {
        return Err(Error::InvalidSampling("max_count must be positive".into()));
    }
    let k = sample_count(cloud.len(), fraction, max_count);
    let picks = rand::seq::index::sample(rng.rng(), cloud.len(), k);
    Ok(picks.into_iter().map(|i| cloud.points()[i]).collect())
}

/// Closed axis-aligned region of the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct WorkspaceRegion {
    min: Point3,
    max: Point3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionRepr {
    min: [f64; 3],
    max: [f64; 3],
}

impl TryFrom<RegionRepr> for WorkspaceRegion {
    type Error = Error;

    fn try_from(r: RegionRepr) -> Result<Self> {
        WorkspaceRegion::new(Point3::from(r.min), Point3::from(r.max))
    }
}

impl From<WorkspaceRegion> for RegionRepr {
    fn from(r: WorkspaceRegion) -> Self {
        RegionRepr {
            min: [r.min.x, r.min.y, r.min.z],
            max: [r.max.x, r.max.y, r.max.z],
        }
    }
}

impl WorkspaceRegion {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if (0..3).any(|a| min[a].is_nan() || max[a].is_nan() || min[a] > max[a]) {
            return Err(Error::InvertedRegion);
        }
        Ok(Self { min, max })
    }

    pub fn unbounded() -> Self {
        Self {
            min: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            max: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        }
    }

    pub fn min(&self) -> Point3 {
        self.min
    }

    pub fn max(&self) -> Point3 {
        self.max
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

impl Default for WorkspaceRegion {
    /// Roughly the reach of a pair of arms in front of the robot base.
    fn default() -> Self {
        Self {
            min: Point3::new(0.2, -0.8, 0.0),
            max: Point3::new(1.2, 0.8, 1.6),
        }
    }
}

pub fn crop_to_workspace(cloud: &PointCloud, region: &WorkspaceRegion) -> PointCloud {
    PointCloud::from_finite(cloud.iter().filter(|p| region.contains(p)).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(pts.iter().map(|p| Point3::from(*p)).collect()).unwrap()
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
        PointCloud::new(
            (0..n)
                .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    /// Linear-scan oracle: minimal squared distance, lowest id on ties.
    fn brute_nearest(points: &[Point3], q: &Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = distance_squared(q, p);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }

    #[test]
    fn empty_index() {
        let idx = build_index(&PointCloud::empty());
        assert_eq!(idx.len(), 0);
        assert_eq!(
            nearest(&idx, &Point3::origin()).unwrap_err().to_string(),
            "nearest-neighbor query on empty index"
        );
        assert!(idx.within_radius(&Point3::origin(), 10.0).is_empty());
    }

    #[test]
    fn nearest_small_cases() {
        let one = build_index(&cloud(&[[0.0, 0.0, 0.0]]));
        let n = one.nearest(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((n.id, n.point, n.distance), (0, Point3::origin(), 1.0));
        let n = one.nearest(&Point3::new(-7.0, 3.0, 2.0)).unwrap();
        assert_eq!(n.id, 0);

        let two = build_index(&cloud(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]));
        let n = two.nearest(&Point3::new(0.9, 0.0, 0.0)).unwrap();
        assert_eq!(n.id, 0);
        assert_eq!(n.distance, 0.9);
        let tie = two.nearest(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((tie.id, tie.distance), (0, 1.0));

        let reversed = build_index(&cloud(&[[2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]));
        assert_eq!(reversed.nearest(&Point3::new(1.0, 0.0, 0.0)).unwrap().id, 0);
    }

    #[test]
    fn ties_across_split_planes_go_to_lowest_id() {
        // many duplicates force ties on every split
        let mut pts = Vec::new();
        for i in 0..40 {
            pts.push([(i % 4) as f64, 0.0, 0.0]);
        }
        let c = cloud(&pts);
        let idx = build_index(&c);
        for q in [[1.5, 0.0, 0.0], [0.0, 0.0, 0.0], [3.0, 1.0, 0.0], [2.5, 0.0, 0.0]] {
            let q = Point3::from(q);
            let n = idx.nearest(&q).unwrap();
            assert_eq!(n.id, brute_nearest(c.points(), &q).0);
        }
    }

    #[test]
    fn nearest_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_cloud(&mut rng, 1000);
        let idx = build_index(&c);
        for _ in 0..100 {
            let q = Point3::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            let n = idx.nearest(&q).unwrap();
            let (id, d) = brute_nearest(c.points(), &q);
            assert_eq!(n.id, id);
            assert_eq!(n.distance, d);
        }
    }

    #[test]
    fn nearest_matches_linear_scan_up_to_5000_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 7, 9, 64, 500, 5000] {
            // quantized coordinates produce plenty of exact ties
            let pts: Vec<Point3> = (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(0..20) as f64 * 0.05,
                        rng.random_range(0..20) as f64 * 0.05,
                        rng.random_range(0..5) as f64 * 0.05,
                    )
                })
                .collect();
            let c = PointCloud::new(pts).unwrap();
            let idx = build_index(&c);
            for _ in 0..200 {
                let q = Point3::new(
                    rng.random_range(0..40) as f64 * 0.025,
                    rng.random_range(0..40) as f64 * 0.025,
                    rng.random_range(0..10) as f64 * 0.025,
                );
                let got = idx.nearest(&q).unwrap();
                let (id, d) = brute_nearest(c.points(), &q);
                assert_eq!((got.id, got.distance), (id, d));
            }
        }
    }

    #[test]
    fn nearest_within_respects_gate() {
        let idx = build_index(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]));
        assert!(idx.nearest_within(&Point3::new(0.5, 2.0, 0.0), 1.0).is_none());
        let n = idx.nearest_within(&Point3::new(0.0, 0.5, 0.0), 0.5).unwrap();
        assert_eq!((n.id, n.distance), (0, 0.5));
        let tie = idx.nearest_within(&Point3::new(0.5, 0.0, 0.0), 0.5).unwrap();
        assert_eq!(tie.id, 0);
    }

    #[test]
    fn hinted_queries_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 20, 300, 3000] {
            let pts: Vec<Point3> = (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(0..30) as f64 * 0.01,
                        rng.random_range(0..30) as f64 * 0.01,
                        rng.random_range(0..4) as f64 * 0.01,
                    )
                })
                .collect();
            let c = PointCloud::new(pts).unwrap();
            let idx = build_index(&c);
            for _ in 0..300 {
                let q = Point3::new(
                    rng.random_range(-5..35) as f64 * 0.01,
                    rng.random_range(-5..35) as f64 * 0.01,
                    rng.random_range(-2..6) as f64 * 0.01,
                );
                let gate = rng.random_range(1..10) as f64 * 0.01;
                let hint = match rng.random_range(0..3) {
                    0 => None,
                    1 => Some(rng.random_range(0..n)),
                    _ => Some(n + 5),
                };
                let (id, d) = brute_nearest(c.points(), &q);
                let expected = (d <= gate).then_some((id, d));
                let got = idx.nearest_within_hinted(&q, gate, hint).map(|nb| (nb.id, nb.distance));
                assert_eq!(got, expected, "n {n} hint {hint:?}");
            }
        }
    }

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_cloud(&mut rng, 700);
        let idx = build_index(&c);
        for _ in 0..50 {
            let q = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let r = rng.random_range(0.0..0.5);
            let expected: Vec<usize> = c
                .iter()
                .enumerate()
                .filter(|(_, p)| distance_squared(&q, p) <= r * r)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(idx.within_radius(&q, r), expected);
        }
    }

    #[test]
    fn voxel_cases() {
        assert!(voxel_downsample(&PointCloud::empty(), 0.005).unwrap().is_empty());

        let merged = voxel_downsample(&cloud(&[[0.001, 0.0, 0.0], [0.003, 0.0, 0.0]]), 0.005).unwrap();
        assert_eq!(merged.len(), 1);
        assert!((merged.points()[0] - Point3::new(0.002, 0.0, 0.0)).norm() < 1e-15);

        let apart = voxel_downsample(&cloud(&[[0.001, 0.0, 0.0], [0.006, 0.0, 0.0]]), 0.005).unwrap();
        assert_eq!(apart.points(), &[Point3::new(0.001, 0.0, 0.0), Point3::new(0.006, 0.0, 0.0)]);

        for leaf in [0.0, -1.0, f64::NAN] {
            assert_eq!(
                voxel_downsample(&cloud(&[[0.0, 0.0, 0.0]]), leaf).unwrap_err().to_string(),
                "non-positive leaf size"
            );
        }
    }

    #[test]
    fn voxel_output_is_lexicographic() {
        let out = voxel_downsample(
            &cloud(&[[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, -0.5, 0.0]]),
            0.1,
        )
        .unwrap();
        let xs: Vec<[f64; 2]> = out.iter().map(|p| [p.x, p.y]).collect();
        assert_eq!(xs, vec![[-0.5, 0.0], [0.0, -0.5], [0.0, 0.5], [0.5, 0.0]]);
    }

    #[test]
    fn sample_counts_follow_cap_rule() {
        assert_eq!(sample_count(100, 0.05, 1000), 5);
        assert_eq!(sample_count(40_000, 0.05, 1000), 1000);
        assert_eq!(sample_count(10, 1.0, 1000), 10);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_cloud(&mut rng, 100);
        assert_eq!(sample_points(&c, 0.05, 1000, &mut SeededRng::new(4)).unwrap().len(), 5);
        let big = random_cloud(&mut rng, 40_000);
        assert_eq!(sample_points(&big, 0.05, 1000, &mut SeededRng::new(4)).unwrap().len(), 1000);
        let small = random_cloud(&mut rng, 10);
        let all = sample_points(&small, 1.0, 1000, &mut SeededRng::new(4)).unwrap();
        assert_eq!(all.len(), 10);
        for p in small.iter() {
            assert!(all.contains(p));
        }
    }

    #[test]
    fn sampling_errors() {
        let mut rng = SeededRng::new(0);
        assert_eq!(
            sample_points(&PointCloud::empty(), 0.5, 10, &mut rng).unwrap_err().to_string(),
            "cannot sample from empty scene"
        );
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(sample_points(&c, 0.0, 10, &mut rng).is_err());
        assert!(sample_points(&c, 1.5, 10, &mut rng).is_err());
        assert!(sample_points(&c, 0.5, 0, &mut rng).is_err());
    }

    #[test]
    fn workspace_cases() {
        let c = cloud(&[[2.0, 0.0, 0.0], [0.5, 0.1, 0.8], [0.2, -0.8, 0.0]]);
        assert_eq!(crop_to_workspace(&c, &WorkspaceRegion::unbounded()), c);
        assert!(crop_to_workspace(&PointCloud::empty(), &WorkspaceRegion::default()).is_empty());
        let cropped = crop_to_workspace(&c, &WorkspaceRegion::default());
        assert_eq!(cropped.points(), &c.points()[1..]);
        assert_eq!(
            WorkspaceRegion::new(Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 1.0)).unwrap_err(),
            Error::InvertedRegion
        );
    }

    fn arb_cloud(max: usize) -> impl Strategy<Value = PointCloud> {
        proptest::collection::vec((-0.3..0.3f64, -0.3..0.3f64, -0.3..0.3f64), 0..max)
            .prop_map(|v| PointCloud::new(v.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect()).unwrap())
    }

    fn voxel_of(p: &Point3, leaf: f64) -> [i64; 3] {
        [(p.x / leaf).floor() as i64, (p.y / leaf).floor() as i64, (p.z / leaf).floor() as i64]
    }

    proptest! {
        #[test]
        fn voxel_properties(c in arb_cloud(300), leaf in 0.01..0.2f64) {
            let once = voxel_downsample(&c, leaf).unwrap();
            prop_assert!(once.len() <= c.len());
            let occupied: std::collections::BTreeSet<_> = c.iter().map(|p| voxel_of(p, leaf)).collect();
            let emitted: Vec<_> = once.iter().map(|p| voxel_of(p, leaf)).collect();
            // one point per occupied voxel, each inside its source voxel, ascending
            prop_assert_eq!(emitted.clone(), occupied.iter().copied().collect::<Vec<_>>());
            let twice = voxel_downsample(&once, leaf).unwrap();
            let emitted_twice: Vec<_> = twice.iter().map(|p| voxel_of(p, leaf)).collect();
            prop_assert_eq!(emitted_twice, emitted);
        }

        #[test]
        fn sampling_is_reproducible_members(c in arb_cloud(200), seed in any::<u64>(), frac in 0.01..1.0f64) {
            prop_assume!(!c.is_empty());
            let a = sample_points(&c, frac, 1000, &mut SeededRng::new(seed)).unwrap();
            let b = sample_points(&c, frac, 1000, &mut SeededRng::new(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.iter().all(|p| c.points().contains(p)));
            prop_assert_eq!(a.len(), sample_count(c.len(), frac, 1000));
        }

        #[test]
        fn workspace_crop_idempotent(c in arb_cloud(100), lo in -0.3..0.0f64, hi in 0.0..0.3f64) {
            let r = WorkspaceRegion::new(Point3::new(lo, lo, lo), Point3::new(hi, hi, hi)).unwrap();
            let once = crop_to_workspace(&c, &r);
            prop_assert_eq!(crop_to_workspace(&once, &r), once);
        }
    }
}
