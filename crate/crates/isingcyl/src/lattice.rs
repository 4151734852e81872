//! Cylinder geometry `Z_L x [1, M]`, its closure (rows `0` and `M+1`),
//! nearest-neighbour edges, the seam sign factor and tree distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic horizontal, open vertical lattice of `l * m` sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CylinderGeometry {
    pub l: usize,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x1: i64,
    pub x2: i64,
}

impl Site {
    pub const fn new(x1: i64, x2: i64) -> Self {
        Site { x1, x2 }
    }

    pub fn shift(self, d1: i64, d2: i64) -> Self {
        Site::new(self.x1 + d1, self.x2 + d2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Horizontal,
    Vertical,
}

impl Direction {
    /// `j` in `e_j`.
    pub fn index(self) -> usize {
        match self {
            Direction::Horizontal => 1,
            Direction::Vertical => 2,
        }
    }
}

/// Nearest-neighbour edge, identified by its left/bottom endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub base: Site,
    pub dir: Direction,
}

impl Edge {
    pub const fn new(base: Site, dir: Direction) -> Self {
        Edge { base, dir }
    }

    /// Other endpoint (not reduced mod `L`).
    pub fn tip(&self) -> Site {
        match self.dir {
            Direction::Horizontal => self.base.shift(1, 0),
            Direction::Vertical => self.base.shift(0, 1),
        }
    }
}

/// `y - L * floor(y / L + 1/2)`, valued in `(-L/2, L/2]`.
pub fn per_l(y: i64, l: i64) -> i64 {
    let r = y.rem_euclid(l);
    if r > l / 2 {
        r - l
    } else {
        r
    }
}

impl CylinderGeometry {
    pub fn new(l: usize, m: usize) -> Result<Self> {
        if l < 2 || !l.is_multiple_of(2) {
            return Err(Error::Config(format!("L must be even and >= 2, got {l}")));
        }
        if m < 1 {
            return Err(Error::Config("M must be >= 1".into()));
        }
        Ok(CylinderGeometry { l, m })
    }

    pub fn li(&self) -> i64 {
        self.l as i64
    }

    pub fn mi(&self) -> i64 {
        self.m as i64
    }

    pub fn n_sites(&self) -> usize {
        self.l * self.m
    }

    /// Reduce `x1` into `1..=L`, returning the antiperiodic sign picked up.
    pub fn wrap(&self, z: Site) -> (Site, f64) {
        let l = self.li();
        let q = (z.x1 - 1).div_euclid(l);
        let s = if q % 2 == 0 { 1.0 } else { -1.0 };
        (Site::new(z.x1 - q * l, z.x2), s)
    }

    /// Reduce `x1` into `1..=L` ignoring signs.
    pub fn reduce(&self, z: Site) -> Site {
        Site::new((z.x1 - 1).rem_euclid(self.li()) + 1, z.x2)
    }

    pub fn in_bulk(&self, z: Site) -> bool {
        z.x2 >= 1 && z.x2 <= self.mi()
    }

    pub fn in_closure(&self, z: Site) -> bool {
        z.x2 >= 0 && z.x2 <= self.mi() + 1
    }

    /// Sites of `Λ`, row-major.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.n_sites());
        for x2 in 1..=self.mi() {
            for x1 in 1..=self.li() {
                out.push(Site::new(x1, x2));
            }
        }
        out
    }

    /// Sites of the closure `Λ̄`, row-major.
    pub fn closure_sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.l * (self.m + 2));
        for x2 in 0..=self.mi() + 1 {
            for x1 in 1..=self.li() {
                out.push(Site::new(x1, x2));
            }
        }
        out
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for x2 in 1..=self.mi() {
            for x1 in 1..=self.li() {
                out.push(Edge::new(Site::new(x1, x2), Direction::Horizontal));
            }
        }
        for x2 in 1..self.mi() {
            for x1 in 1..=self.li() {
                out.push(Edge::new(Site::new(x1, x2), Direction::Vertical));
            }
        }
        out
    }

    pub fn edge_is_valid(&self, e: &Edge) -> bool {
        let b = e.base;
        if b.x1 < 1 || b.x1 > self.li() {
            return false;
        }
        match e.dir {
            Direction::Horizontal => b.x2 >= 1 && b.x2 <= self.mi(),
            Direction::Vertical => b.x2 >= 1 && b.x2 < self.mi(),
        }
    }

    /// `|per_L(x1 - y1)|`.
    pub fn hdist(&self, a: Site, b: Site) -> i64 {
        per_l(a.x1 - b.x1, self.li()).abs()
    }

    /// Graph distance on the cylinder (closure rows included).
    pub fn dist(&self, a: Site, b: Site) -> i64 {
        self.hdist(a, b) + (a.x2 - b.x2).abs()
    }

    /// Largest pairwise horizontal cylinder distance.
    pub fn diam1(&self, zs: &[Site]) -> i64 {
        let mut d = 0;
        for (i, a) in zs.iter().enumerate() {
            for b in &zs[i + 1..] {
                d = d.max(self.hdist(*a, *b));
            }
        }
        d
    }

    pub fn theta1_site(&self, z: Site) -> Site {
        let r = self.reduce(z);
        Site::new(self.li() + 1 - r.x1, r.x2)
    }

    pub fn theta2_site(&self, z: Site) -> Site {
        Site::new(z.x1, self.mi() + 1 - z.x2)
    }

    pub fn theta1_edge(&self, e: &Edge) -> Edge {
        let b = self.reduce(e.base);
        match e.dir {
            Direction::Horizontal => {
                let x1 = (self.li() - b.x1 - 1).rem_euclid(self.li()) + 1;
                Edge::new(Site::new(x1, b.x2), e.dir)
            }
            Direction::Vertical => Edge::new(Site::new(self.li() + 1 - b.x1, b.x2), e.dir),
        }
    }

    pub fn theta2_edge(&self, e: &Edge) -> Edge {
        match e.dir {
            Direction::Horizontal => Edge::new(Site::new(e.base.x1, self.mi() + 1 - e.base.x2), e.dir),
            Direction::Vertical => Edge::new(Site::new(e.base.x1, self.mi() - e.base.x2), e.dir),
        }
    }

    pub fn translate_edge(&self, e: &Edge, s: i64) -> Edge {
        Edge::new(self.reduce(e.base.shift(s, 0)), e.dir)
    }
}

/// Parity of `α(z)`: the number of sites with `x1 <= L/3`, counted only when
/// the raw horizontal spread reaches `2L/3` (the tuple straddles the seam).
pub fn alpha_sign(zs: &[Site], geom: &CylinderGeometry) -> u8 {
    if zs.is_empty() {
        return 0;
    }
    let l = geom.li();
    let xs: Vec<i64> = zs.iter().map(|z| geom.reduce(*z).x1).collect();
    let lo = *xs.iter().min().unwrap();
    let hi = *xs.iter().max().unwrap();
    if 3 * (hi - lo) < 2 * l {
        return 0;
    }
    (xs.iter().filter(|&&x| 3 * x <= l).count() % 2) as u8
}

/// `(-1)^α` as a float.
pub fn alpha_factor(zs: &[Site], geom: &CylinderGeometry) -> f64 {
    if alpha_sign(zs, geom) == 1 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDistance {
    pub value: usize,
    /// Set when the spanning-tree surrogate was used.
    pub approximate: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SteinerOptions {
    /// Largest number of terminals solved exactly.
    pub exact_cap: usize,
    pub allow_surrogate: bool,
}

impl Default for SteinerOptions {
    fn default() -> Self {
        SteinerOptions { exact_cap: 8, allow_surrogate: true }
    }
}

/// Size of the smallest connected edge set containing `xs` and touching `zs`.
pub fn tree_distance(zs: &[Site], xs: &[Edge], geom: &CylinderGeometry) -> Result<TreeDistance> {
    tree_distance_with(zs, xs, geom, SteinerOptions::default())
}

pub fn tree_distance_with(
    zs: &[Site],
    xs: &[Edge],
    geom: &CylinderGeometry,
    opts: SteinerOptions,
) -> Result<TreeDistance> {
    let prob = SteinerProblem::new(zs, xs, geom, false, &[]);
    prob.solve(opts)
}

/// As [`tree_distance`], with the extra requirement that the set either
/// reaches row `0` / `M+1` or contains two points more than `L/3` apart
/// horizontally.
pub fn edge_tree_distance(zs: &[Site], xs: &[Edge], geom: &CylinderGeometry) -> Result<TreeDistance> {
    edge_tree_distance_with(zs, xs, geom, SteinerOptions::default())
}

pub fn edge_tree_distance_with(
    zs: &[Site],
    xs: &[Edge],
    geom: &CylinderGeometry,
    opts: SteinerOptions,
) -> Result<TreeDistance> {
    if zs.is_empty() && xs.is_empty() {
        return Ok(TreeDistance { value: 0, approximate: false });
    }
    let boundary = SteinerProblem::new(zs, xs, geom, true, &[]).solve(opts)?;

    let mut pts: Vec<Site> = zs.iter().map(|z| geom.reduce(*z)).collect();
    for e in xs {
        pts.push(geom.reduce(e.base));
        pts.push(geom.reduce(e.tip()));
    }
    let third = geom.l as f64 / 3.0;
    if geom.diam1(&pts) as f64 > third {
        let plain = tree_distance_with(zs, xs, geom, opts)?;
        return Ok(if plain.value <= boundary.value { plain } else { boundary });
    }
    // winding alternative: extend to a column more than L/3 away from some terminal
    let need = third.floor() as i64 + 1;
    if 2 * need > geom.li() {
        return Ok(boundary);
    }
    let mut extra = Vec::new();
    for p in &pts {
        extra.push(p.x1 + need);
        extra.push(p.x1 - need);
    }
    let prob = SteinerProblem::new(zs, xs, geom, false, &extra);
    let wind = prob.solve_with_far_point(opts, need)?;
    Ok(match wind {
        Some(w) if w.value < boundary.value => w,
        _ => boundary,
    })
}

/// Terminal groups on a Hanan-type node set with a closed-form metric.
struct SteinerProblem<'a> {
    geom: &'a CylinderGeometry,
    nodes: Vec<Site>,
    dist: Vec<Vec<i64>>,
    /// node indices of each terminal
    terms: Vec<usize>,
    boundary: bool,
    forced: usize,
    trivial_zero: bool,
}

impl<'a> SteinerProblem<'a> {
    fn new(zs: &[Site], xs: &[Edge], geom: &'a CylinderGeometry, boundary: bool, extra_cols: &[i64]) -> Self {
        let mut pts: Vec<Site> = zs.iter().map(|z| geom.reduce(*z)).collect();
        let mut forced_pairs = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for e in xs {
            let b = geom.reduce(e.base);
            let key = (b, e.dir);
            if !seen.insert(key) {
                continue;
            }
            let t = geom.reduce(e.tip());
            pts.push(b);
            pts.push(t);
            forced_pairs.push((b, t));
        }
        let mut cols: Vec<i64> = pts.iter().map(|p| p.x1).collect();
        for c in extra_cols {
            cols.push((c - 1).rem_euclid(geom.li()) + 1);
        }
        let mut rows: Vec<i64> = pts.iter().map(|p| p.x2).collect();
        cols.sort_unstable();
        cols.dedup();
        rows.sort_unstable();
        rows.dedup();
        let mut nodes = Vec::with_capacity(cols.len() * rows.len());
        for &r in &rows {
            for &c in &cols {
                nodes.push(Site::new(c, r));
            }
        }
        let n = nodes.len();
        let mut dist = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..n {
                dist[i][j] = geom.dist(nodes[i], nodes[j]);
            }
        }
        let idx = |p: &Site| nodes.iter().position(|q| q == p).unwrap();
        if !forced_pairs.is_empty() {
            for (a, b) in &forced_pairs {
                let (ia, ib) = (idx(a), idx(b));
                dist[ia][ib] = 0;
                dist[ib][ia] = 0;
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let v = dist[i][k] + dist[k][j];
                        if v < dist[i][j] {
                            dist[i][j] = v;
                        }
                    }
                }
            }
        }
        let mut terms: Vec<usize> = pts.iter().map(idx).collect();
        terms.sort_unstable();
        terms.dedup();
        let trivial_zero = forced_pairs.is_empty() && terms.len() <= 1 && !boundary;
        SteinerProblem {
            geom,
            nodes,
            dist,
            terms,
            boundary,
            forced: forced_pairs.len(),
            trivial_zero,
        }
    }

    fn boundary_cost(&self, v: usize) -> i64 {
        let r = self.nodes[v].x2;
        r.min(self.geom.mi() + 1 - r).max(0)
    }

    fn n_terminals(&self) -> usize {
        self.terms.len() + usize::from(self.boundary)
    }

    /// Dreyfus-Wagner table; the last terminal (if `boundary`) is the boundary group.
    fn dreyfus_wagner(&self) -> Vec<Vec<i64>> {
        let n = self.nodes.len();
        let k = self.n_terminals();
        let full = 1usize << k;
        let inf = i64::MAX / 4;
        let mut s = vec![vec![inf; n]; full];
        for (t, &node) in self.terms.iter().enumerate() {
            for v in 0..n {
                s[1 << t][v] = self.dist[node][v];
            }
        }
        if self.boundary {
            let b = 1 << (k - 1);
            for v in 0..n {
                s[b][v] = (0..n).map(|u| self.boundary_cost(u) + self.dist[u][v]).min().unwrap();
            }
        }
        for mask in 1..full {
            if mask.count_ones() < 2 {
                continue;
            }
            for v in 0..n {
                let mut best = inf;
                let mut sub = (mask - 1) & mask;
                while sub > 0 {
                    if sub < (mask ^ sub) {
                        let c = s[sub][v] + s[mask ^ sub][v];
                        if c < best {
                            best = c;
                        }
                    }
                    sub = (sub - 1) & mask;
                }
                s[mask][v] = best;
            }
            let row = s[mask].clone();
            for v in 0..n {
                let mut best = row[v];
                for u in 0..n {
                    let c = row[u] + self.dist[u][v];
                    if c < best {
                        best = c;
                    }
                }
                s[mask][v] = best;
            }
        }
        s
    }

    fn mst_surrogate(&self) -> i64 {
        let k = self.terms.len();
        let mut tot = 0;
        let mut in_tree = vec![false; k];
        let mut best = vec![i64::MAX; k];
        if k > 0 {
            best[0] = 0;
        }
        for _ in 0..k {
            let (i, _) = (0..k).filter(|&i| !in_tree[i]).map(|i| (i, best[i])).min_by_key(|p| p.1).unwrap();
            in_tree[i] = true;
            tot += best[i];
            for j in 0..k {
                let d = self.dist[self.terms[i]][self.terms[j]];
                if !in_tree[j] && d < best[j] {
                    best[j] = d;
                }
            }
        }
        if self.boundary {
            tot += self.terms.iter().map(|&t| self.boundary_cost(t)).min().unwrap_or(0);
        }
        tot
    }

    fn solve(&self, opts: SteinerOptions) -> Result<TreeDistance> {
        if self.trivial_zero {
            return Ok(TreeDistance { value: 0, approximate: false });
        }
        let k = self.n_terminals();
        if k > opts.exact_cap {
            if !opts.allow_surrogate {
                return Err(Error::TooManyTerminals(k, opts.exact_cap));
            }
            let v = self.mst_surrogate() + self.forced as i64;
            return Ok(TreeDistance { value: v as usize, approximate: true });
        }
        let s = self.dreyfus_wagner();
        let mut v = *s[(1 << k) - 1].iter().min().unwrap();
        v += self.forced as i64;
        // a lone site reaching the boundary still needs its vertical path
        Ok(TreeDistance { value: v as usize, approximate: false })
    }

    /// Cheapest tree spanning the terminals plus one node at horizontal
    /// distance `>= need` from some terminal.
    fn solve_with_far_point(&self, opts: SteinerOptions, need: i64) -> Result<Option<TreeDistance>> {
        let k = self.n_terminals();
        if k + 1 > opts.exact_cap {
            if !opts.allow_surrogate {
                return Err(Error::TooManyTerminals(k + 1, opts.exact_cap));
            }
            let base = self.mst_surrogate() + self.forced as i64;
            let pts: Vec<Site> = self.terms.iter().map(|&t| self.nodes[t]).collect();
            let ext = (need - self.geom.diam1(&pts)).max(0);
            return Ok(Some(TreeDistance { value: (base + ext) as usize, approximate: true }));
        }
        let s = self.dreyfus_wagner();
        let full = (1 << k) - 1;
        let mut best: Option<i64> = None;
        for (v, node) in self.nodes.iter().enumerate() {
            let far = self.terms.iter().any(|&t| self.geom.hdist(self.nodes[t], *node) >= need);
            if far {
                let c = s[full][v];
                best = Some(best.map_or(c, |b: i64| b.min(c)));
            }
        }
        Ok(best.map(|b| TreeDistance { value: (b + self.forced as i64) as usize, approximate: false }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_l_examples() {
        assert_eq!(per_l(7, 8), -1);
        assert_eq!(per_l(0, 8), 0);
        assert_eq!(per_l(4, 8), 4);
        assert_eq!(per_l(-4, 8), 4);
    }

    #[test]
    fn alpha_examples() {
        let g = CylinderGeometry::new(12, 4).unwrap();
        assert_eq!(alpha_sign(&[Site::new(1, 1), Site::new(2, 1)], &g), 0);
        assert_eq!(alpha_sign(&[Site::new(1, 1), Site::new(12, 1)], &g), 1);
        assert_eq!(alpha_sign(&[Site::new(2, 1), Site::new(12, 2), Site::new(11, 3)], &g), 1);
    }

    #[test]
    fn wrap_signs() {
        let g = CylinderGeometry::new(4, 2).unwrap();
        assert_eq!(g.wrap(Site::new(5, 1)), (Site::new(1, 1), -1.0));
        assert_eq!(g.wrap(Site::new(0, 1)), (Site::new(4, 1), -1.0));
        assert_eq!(g.wrap(Site::new(9, 1)), (Site::new(1, 1), 1.0));
    }

    #[test]
    fn tree_distance_examples() {
        let g = CylinderGeometry::new(8, 5).unwrap();
        let e = Edge::new(Site::new(2, 2), Direction::Horizontal);
        assert_eq!(tree_distance(&[], &[e], &g).unwrap().value, 1);
        let z = Site::new(3, 3);
        assert_eq!(tree_distance(&[z, z.shift(1, 0)], &[], &g).unwrap().value, 1);
        assert_eq!(tree_distance(&[Site::new(1, 1), Site::new(3, 1)], &[], &g).unwrap().value, 2);
        assert_eq!(tree_distance(&[z, z], &[], &g).unwrap().value, 0);
        assert_eq!(tree_distance(&[], &[], &g).unwrap().value, 0);
    }

    #[test]
    fn edge_tree_distance_examples() {
        let g = CylinderGeometry::new(8, 5).unwrap();
        assert_eq!(edge_tree_distance(&[Site::new(1, 1)], &[], &g).unwrap().value, 1);
        let g = CylinderGeometry::new(40, 9).unwrap();
        assert_eq!(edge_tree_distance(&[Site::new(1, 5)], &[], &g).unwrap().value, 5);
        assert_eq!(edge_tree_distance(&[], &[], &g).unwrap().value, 0);
    }

    #[test]
    fn reflections_are_involutions() {
        let g = CylinderGeometry::new(6, 4).unwrap();
        for e in g.edges() {
            assert_eq!(g.theta1_edge(&g.theta1_edge(&e)), e);
            assert_eq!(g.theta2_edge(&g.theta2_edge(&e)), e);
            assert!(g.edge_is_valid(&g.theta1_edge(&e)));
            assert!(g.edge_is_valid(&g.theta2_edge(&e)));
        }
    }
}
