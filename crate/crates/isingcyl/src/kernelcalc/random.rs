//! Random small-support kernels for property batteries.

use rand::Rng;

use super::*;

#[derive(Clone, Debug)]
pub struct RandomKernelSpec {
    /// `(n, p, m)` sectors to populate
    pub sectors: Vec<Sector>,
    pub entries_per_sector: usize,
    /// largest coordinate offset of a field or probe from the first field
    pub spread: i64,
    /// keep every label and derivative tip inside `Λ` (otherwise the closure)
    pub interior: bool,
}

impl Default for RandomKernelSpec {
    fn default() -> Self {
        RandomKernelSpec {
            sectors: vec![Sector::new(2, 0, 0), Sector::new(2, 1, 0), Sector::new(4, 0, 0)],
            entries_per_sector: 3,
            spread: 2,
            interior: true,
        }
    }
}

fn random_entry<R: Rng>(g: &CylinderGeometry, s: Sector, spec: &RandomKernelSpec, rng: &mut R) -> Option<(Vec<FieldLabel>, Vec<Edge>)> {
    let (lo, hi) = if spec.interior { (1, g.mi()) } else { (0, g.mi() + 1) };
    let ok = |z: Site| z.x2 >= lo && z.x2 <= hi;
    let z1 = Site::new(rng.gen_range(1..=g.li()), rng.gen_range(lo..=hi));
    let mut labels = Vec::with_capacity(s.n);
    for i in 0..s.n {
        let z = if i == 0 {
            z1
        } else {
            z1.shift(rng.gen_range(-spec.spread..=spec.spread), rng.gen_range(-spec.spread..=spec.spread))
        };
        if !ok(z) {
            return None;
        }
        labels.push(FieldLabel::plain(if rng.gen_bool(0.5) { 1 } else { -1 }, z));
    }
    for _ in 0..s.p {
        let i = rng.gen_range(0..s.n);
        let j = rng.gen_range(1..=2);
        labels[i] = labels[i].with_extra(j);
        if labels[i].order() > 2 || !ok(labels[i].tip()) {
            return None;
        }
    }
    let mut edges = Vec::with_capacity(s.m);
    for _ in 0..s.m {
        let b = z1.shift(rng.gen_range(-spec.spread..=spec.spread), rng.gen_range(-spec.spread..=spec.spread));
        let e = Edge::new(g.reduce(b), dir_of(rng.gen_range(1..=2)));
        if !g.edge_is_valid(&e) {
            return None;
        }
        edges.push(e);
    }
    Some((labels, edges))
}

/// Kernel with `entries_per_sector` random entries in each requested sector
/// and coefficients uniform in `[-1, 1]`.
pub fn random_kernel<R: Rng>(g: &CylinderGeometry, spec: &RandomKernelSpec, rng: &mut R) -> Result<Kernel> {
    let mut k = Kernel::new(Domain::Cylinder(*g));
    for &s in &spec.sectors {
        let mut placed = 0;
        let mut tries = 0;
        while placed < spec.entries_per_sector {
            tries += 1;
            if tries > 10_000 {
                return Err(Error::Config(format!("cannot place sector {s:?} on {g:?}")));
            }
            if let Some((l, e)) = random_entry(g, s, spec, rng) {
                k.add_real(&l, &e, rng.gen_range(-1.0..=1.0))?;
                placed += 1;
            }
        }
    }
    Ok(k)
}

/// `𝒜` applied to a random kernel.
pub fn random_symmetric_kernel<R: Rng>(g: &CylinderGeometry, spec: &RandomKernelSpec, rng: &mut R) -> Result<Kernel> {
    random_kernel(g, spec, rng)?.symmetrized()
}

/// Average over horizontal translations followed by `𝒜`.
pub fn random_invariant_kernel<R: Rng>(g: &CylinderGeometry, spec: &RandomKernelSpec, rng: &mut R) -> Result<Kernel> {
    let k = random_kernel(g, spec, rng)?;
    let mut avg = Kernel::new(k.domain);
    for s in 0..g.li() {
        avg = avg.plus(&k.translated(s)?, 1.0 / g.l as f64)?;
    }
    avg.symmetrized()
}

/// Kernel invariant under all translations that keep it inside `Λ`: each
/// random entry is copied to every base point at which its labels and
/// derivative tips stay in the interior, then `𝒜` is applied.
pub fn random_bulk_kernel<R: Rng>(g: &CylinderGeometry, spec: &RandomKernelSpec, rng: &mut R) -> Result<Kernel> {
    let domain = Domain::Cylinder(*g);
    let mut k = Kernel::new(domain);
    for &s in &spec.sectors {
        if s.m != 0 {
            return Err(Error::Config("bulk kernels carry no sources".into()));
        }
        let mut placed = 0;
        let mut tries = 0;
        while placed < spec.entries_per_sector {
            tries += 1;
            if tries > 10_000 {
                return Err(Error::Config(format!("cannot place sector {s:?} on {g:?}")));
            }
            let Some((labels, _)) = random_entry(g, s, &RandomKernelSpec { interior: true, ..spec.clone() }, rng) else {
                continue;
            };
            let base = labels[0].z;
            let c = rng.gen_range(-1.0..=1.0);
            for z in g.sites() {
                let moved: Vec<FieldLabel> =
                    labels.iter().map(|f| f.at(f.z.shift(z.x1 - base.x1, z.x2 - base.x2))).collect();
                if moved.iter().all(|f| f.points().iter().all(|(p, _)| domain.in_interior(*p))) {
                    k.add_real(&moved, &[], c)?;
                }
            }
            placed += 1;
        }
    }
    k.symmetrized()
}
