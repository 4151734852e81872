//! Weighted kernel norms `sup Σ e^{κδ} sup_D |V|` with tree-distance weights.

use std::collections::HashMap;

use super::*;
use crate::lattice::{edge_tree_distance, tree_distance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormFlavor {
    /// sup over the first site, sum over the rest, weight `δ(z)`
    Bulk,
    /// sup over the column of the first site, weight `δ_E(z)`
    Edge,
    /// sup over the probe tuple, sum over all sites, weight `δ(z, x)`
    SourceBulk,
    /// as `SourceBulk` with `δ_E(z, x)`
    SourceEdge,
}

impl NormFlavor {
    fn is_edge(self) -> bool {
        matches!(self, NormFlavor::Edge | NormFlavor::SourceEdge)
    }
}

/// Steiner distance of a plane configuration, computed on a cylinder wide
/// and tall enough that neither the seam nor the boundary can help.
fn plane_tree_distance(zs: &[Site], xs: &[Edge]) -> Result<usize> {
    let mut pts: Vec<Site> = zs.to_vec();
    for x in xs {
        pts.push(x.base);
        pts.push(x.tip());
    }
    if pts.is_empty() {
        return Ok(0);
    }
    let lo1 = pts.iter().map(|p| p.x1).min().unwrap();
    let hi1 = pts.iter().map(|p| p.x1).max().unwrap();
    let lo2 = pts.iter().map(|p| p.x2).min().unwrap();
    let hi2 = pts.iter().map(|p| p.x2).max().unwrap();
    let w = (hi1 - lo1 + 1) as usize;
    let h = (hi2 - lo2 + 1) as usize;
    let g = CylinderGeometry::new(2 * (2 * w + h + 2), h + 2 * (w + h) + 2)?;
    let off = (1 - lo1, 1 + (w + h) as i64 - lo2);
    let zs: Vec<Site> = zs.iter().map(|z| z.shift(off.0, off.1)).collect();
    let xs: Vec<Edge> = xs.iter().map(|x| Edge::new(x.base.shift(off.0, off.1), x.dir)).collect();
    Ok(tree_distance(&zs, &xs, &g)?.value)
}

struct Weigher {
    domain: Domain,
    edge: bool,
    cache: HashMap<(Vec<Site>, Vec<Edge>), usize>,
}

impl Weigher {
    fn delta(&mut self, zs: Vec<Site>, xs: Vec<Edge>) -> Result<usize> {
        if let Some(v) = self.cache.get(&(zs.clone(), xs.clone())) {
            return Ok(*v);
        }
        let v = match self.domain {
            Domain::Cylinder(g) => {
                if self.edge {
                    edge_tree_distance(&zs, &xs, &g)?.value
                } else {
                    tree_distance(&zs, &xs, &g)?.value
                }
            }
            Domain::Plane => {
                if self.edge {
                    return Err(Error::Kernel("edge norms need a cylinder kernel".into()));
                }
                plane_tree_distance(&zs, &xs)?
            }
        };
        self.cache.insert((zs, xs), v);
        Ok(v)
    }
}

/// `(ω, z, x) -> sup_D |V|` restricted to the sector `(n, p, ·)`.
fn sup_over_d(k: &Kernel, n: usize, p: usize, sourced: bool) -> BTreeMap<(Vec<i8>, Vec<Site>, Vec<Edge>), f64> {
    let mut out: BTreeMap<(Vec<i8>, Vec<Site>, Vec<Edge>), f64> = BTreeMap::new();
    for (l, e, c) in k.iter() {
        let s = sector_of(l, e);
        if s.n != n || s.p != p || (s.m > 0) != sourced {
            continue;
        }
        let key = (l.iter().map(|f| f.omega).collect(), l.iter().map(|f| f.z).collect(), e.to_vec());
        let slot = out.entry(key).or_insert(0.0);
        *slot = slot.max(c.norm());
    }
    out
}

/// Norm of the sector `V_{n,p}` (sourceless flavors) or of `B_{n,p,·}`
/// (source flavors, sup over probe tuples).
pub fn weighted_norm(k: &Kernel, n: usize, p: usize, flavor: NormFlavor, kappa: f64) -> Result<f64> {
    if kappa < 0.0 {
        return Err(Error::Config(format!("kappa must be >= 0, got {kappa}")));
    }
    let sourced = matches!(flavor, NormFlavor::SourceBulk | NormFlavor::SourceEdge);
    let mut w = Weigher { domain: k.domain, edge: flavor.is_edge(), cache: HashMap::new() };
    let mut sums: BTreeMap<(Vec<i8>, i64, i64, Vec<Edge>), f64> = BTreeMap::new();
    for ((om, zs, xs), v) in sup_over_d(k, n, p, sourced) {
        let d = w.delta(zs.clone(), xs.clone())?;
        let key = match flavor {
            NormFlavor::Bulk => (om, zs[0].x1, zs[0].x2, vec![]),
            NormFlavor::Edge => (om, zs[0].x1, 0, vec![]),
            _ => (om, 0, 0, plane_class(k.domain, &xs)),
        };
        *sums.entry(key).or_insert(0.0) += (kappa * d as f64).exp() * v;
    }
    Ok(sums.values().fold(0.0, |a, &b| a.max(b)))
}

/// Plane kernels are stored per translation class; the probe tuple is then
/// compared up to translation.
fn plane_class(domain: Domain, xs: &[Edge]) -> Vec<Edge> {
    match domain {
        Domain::Cylinder(_) => xs.to_vec(),
        Domain::Plane => {
            let o = xs[0].base;
            xs.iter().map(|x| Edge::new(x.base.shift(-o.x1, -o.x2), x.dir)).collect()
        }
    }
}

/// Source norm at a fixed probe tuple `xs`.
pub fn source_norm_at(k: &Kernel, n: usize, p: usize, xs: &[Edge], edge: bool, kappa: f64) -> Result<f64> {
    let target = plane_class(k.domain, &xs.iter().map(|x| k.domain.reduce_edge(*x)).collect::<Vec<_>>());
    let mut w = Weigher { domain: k.domain, edge, cache: HashMap::new() };
    let mut sums: BTreeMap<Vec<i8>, f64> = BTreeMap::new();
    for ((om, zs, es), v) in sup_over_d(k, n, p, true) {
        if plane_class(k.domain, &es) != target {
            continue;
        }
        let d = w.delta(zs, es)?;
        *sums.entry(om).or_insert(0.0) += (kappa * d as f64).exp() * v;
    }
    Ok(sums.values().fold(0.0, |a, &b| a.max(b)))
}

/// Distinct probe tuples carried by a kernel.
pub fn probe_tuples(k: &Kernel) -> Vec<Vec<Edge>> {
    let mut out: Vec<Vec<Edge>> = k.iter().filter(|(_, e, _)| !e.is_empty()).map(|(_, e, _)| plane_class(k.domain, e)).collect();
    out.sort();
    out.dedup();
    out
}
