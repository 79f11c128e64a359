//! Finite `{p,q}` tessellations of the Poincaré disk and their line graphs.
//!
//! A lattice with `rings = ℓ` contains `ℓ` concentric layers of polygons:
//! `ℓ = 1` is the central polygon alone, and each further layer adds every
//! polygon sharing a vertex with the previous layer.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, DiskPoint, KAPPA};

/// Largest number of sites a generated lattice may contain.
pub const MAX_SITES: usize = 100_000;

/// Effective disk-size constant `N0` for the `{7,3}` vertex graph.
pub const N0_HEPTAGONAL: f64 = 28.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    VertexGraph,
    LineGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub p: u32,
    pub q: u32,
    pub rings: u32,
    pub kind: LatticeKind,
}

impl LatticeSpec {
    pub fn new(p: u32, q: u32, rings: u32, kind: LatticeKind) -> Result<Self> {
        let spec = LatticeSpec { p, q, rings, kind };
        spec.validate()?;
        Ok(spec)
    }

    /// The `{7,3}` vertex graph with `rings` layers of heptagons.
    pub fn heptagonal(rings: u32) -> Self {
        LatticeSpec { p: 7, q: 3, rings, kind: LatticeKind::VertexGraph }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 3 || self.q < 3 {
            return Err(Error::InvalidSpec(format!("{{{},{}}}: p and q must be at least 3", self.p, self.q)));
        }
        if !is_hyperbolic(self.p, self.q) {
            return Err(Error::InvalidSpec(format!("{{{},{}}} is not hyperbolic: (p-2)(q-2) = {} must exceed 4", self.p, self.q, (self.p - 2) * (self.q - 2))));
        }
        if self.rings == 0 {
            return Err(Error::InvalidSpec("rings must be at least 1".into()));
        }
        Ok(())
    }

    /// Coordination number of the graph described by this spec.
    pub fn coordination(&self) -> u32 {
        match self.kind {
            LatticeKind::VertexGraph => self.q,
            LatticeKind::LineGraph => 2 * (self.q - 1),
        }
    }
}

pub fn is_hyperbolic(p: u32, q: u32) -> bool {
    p >= 3 && q >= 3 && (p - 2) * (q - 2) > 4
}

/// A finite hyperbolic lattice embedded in the Poincaré disk.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicLattice {
    spec: LatticeSpec,
    sites: Vec<DiskPoint>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    ring_of_site: Vec<u32>,
    n0: f64,
    h: f64,
}

impl HyperbolicLattice {
    fn assemble(spec: LatticeSpec, sites: Vec<DiskPoint>, edges: BTreeSet<(usize, usize)>, ring_of_site: Vec<u32>, n0: f64) -> Result<Self> {
        let n = sites.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidSpec(format!("bad edge ({i}, {j}) for {n} sites")));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        adjacency.iter_mut().for_each(|a| a.sort_unstable());
        let edges: Vec<_> = edges.into_iter().collect();
        let h = if edges.is_empty() {
            side_length(spec.p, spec.q, KAPPA)?
        } else {
            edges.iter().map(|&(i, j)| geometry::standard_distance(sites[i].to_complex(), sites[j].to_complex())).sum::<f64>() * KAPPA / edges.len() as f64
        };
        Ok(HyperbolicLattice { spec, sites, edges, adjacency, ring_of_site, n0, h })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn sites(&self) -> &[DiskPoint] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> DiskPoint {
        self.sites[i]
    }

    /// Edges `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn ring_of_site(&self) -> &[u32] {
        &self.ring_of_site
    }

    /// Number of sites `N`.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    /// True when `N0` comes from the area formula rather than the reference `{7,3}` value.
    pub fn n0_is_experimental(&self) -> bool {
        !(self.spec.p == 7 && self.spec.q == 3 && self.spec.kind == LatticeKind::VertexGraph)
    }

    /// Effective disk radius `L = sqrt(N/(N+N0))`.
    pub fn effective_radius(&self) -> f64 {
        let n = self.len() as f64;
        (n / (n + self.n0)).sqrt()
    }

    /// Mean hyperbolic length of the lattice edges.
    pub fn lattice_constant(&self) -> f64 {
        self.h
    }

    pub fn is_connected(&self) -> bool {
        if self.sites.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.len()
    }

    /// Graph distance (number of hops) from `source` to every site.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = std::collections::VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].unwrap_or(0);
            for &j in &self.adjacency[i] {
                if dist[j].is_none() {
                    dist[j] = Some(d + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// Serialize as `{spec, sites, edges, ring_of_site, N0}` with 17 significant digits.
    pub fn to_json(&self) -> String {
        let spec = serde_json::to_string(&self.spec).expect("spec serializes");
        let mut out = String::with_capacity(64 * self.len());
        let _ = write!(out, "{{\"spec\":{spec},\"sites\":[");
        for (k, s) in self.sites.iter().enumerate() {
            let sep = if k == 0 { "" } else { "," };
            let _ = write!(out, "{sep}[{},{}]", fmt_f64(s.re), fmt_f64(s.im));
        }
        out.push_str("],\"edges\":[");
        for (k, (i, j)) in self.edges.iter().enumerate() {
            let sep = if k == 0 { "" } else { "," };
            let _ = write!(out, "{sep}[{i},{j}]");
        }
        out.push_str("],\"ring_of_site\":[");
        for (k, r) in self.ring_of_site.iter().enumerate() {
            let sep = if k == 0 { "" } else { "," };
            let _ = write!(out, "{sep}{r}");
        }
        let _ = write!(out, "],\"N0\":{}}}", fmt_f64(self.n0));
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LatticeDocument = serde_json::from_str(text)?;
        doc.spec.validate()?;
        if doc.ring_of_site.len() != doc.sites.len() {
            return Err(Error::InvalidSpec("ring_of_site length differs from site count".into()));
        }
        let sites = doc.sites.iter().map(|&[re, im]| DiskPoint::new(re, im)).collect::<Result<Vec<_>>>()?;
        let edges = doc.edges.iter().map(|&[i, j]| (i.min(j), i.max(j))).collect();
        Self::assemble(doc.spec, sites, edges, doc.ring_of_site, doc.n0)
    }
}

#[derive(Deserialize)]
struct LatticeDocument {
    spec: LatticeSpec,
    sites: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    ring_of_site: Vec<u32>,
    #[serde(rename = "N0")]
    n0: f64,
}

/// Format with 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Euclidean radius of the vertices of the central polygon.
pub fn vertex_radius(p: u32, q: u32) -> Result<f64> {
    check_hyperbolic(p, q)?;
    let (a, b) = (PI / p as f64, PI / q as f64);
    Ok(((a + b).cos() / (a - b).cos()).sqrt())
}

/// Geodesic edge length of the `{p,q}` tessellation for curvature radius `kappa`.
pub fn side_length(p: u32, q: u32, kappa: f64) -> Result<f64> {
    check_hyperbolic(p, q)?;
    let half = ((PI / p as f64).cos() / (PI / q as f64).sin()).acosh();
    Ok(2.0 * kappa * half)
}

/// Lattice constant entering the continuum description, `2κ·tanh(h/(2κ))` with `h` the edge length.
pub fn continuum_lattice_constant(p: u32, q: u32, kappa: f64) -> Result<f64> {
    let h = side_length(p, q, kappa)?;
    Ok(2.0 * kappa * (h / (2.0 * kappa)).tanh())
}

/// Effective disk-size constant `N0`: the reference value for `{7,3}` vertex graphs,
/// otherwise `π` divided by the disk area per site.
pub fn n0(spec: &LatticeSpec) -> Result<f64> {
    spec.validate()?;
    if spec.p == 7 && spec.q == 3 && spec.kind == LatticeKind::VertexGraph {
        return Ok(N0_HEPTAGONAL);
    }
    let (p, q) = (spec.p as f64, spec.q as f64);
    let sites_per_face = match spec.kind {
        LatticeKind::VertexGraph => p / q,
        LatticeKind::LineGraph => p / 2.0,
    };
    let face_area = KAPPA * KAPPA * PI * ((p - 2.0) - 2.0 * p / q);
    Ok(PI * sites_per_face / face_area)
}

fn check_hyperbolic(p: u32, q: u32) -> Result<()> {
    if is_hyperbolic(p, q) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{{{p},{q}}} is not a hyperbolic tessellation")))
    }
}

/// Deduplicates points by hyperbolic distance using a fine Euclidean grid.
struct PointIndex {
    cell: f64,
    radius: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Complex64>,
}

impl PointIndex {
    fn new(radius: f64) -> Self {
        PointIndex { cell: 1e-6, radius, grid: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64)
    }

    fn find(&self, z: Complex64) -> Option<usize> {
        let (kx, ky) = self.key(z);
        (-1..=1)
            .flat_map(|dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
            .filter_map(|k| self.grid.get(&k))
            .flatten()
            .copied()
            .find(|&i| KAPPA * geometry::standard_distance(self.points[i], z) < self.radius)
    }

    /// Index of `z`, inserting it if new. The flag reports insertion.
    fn insert(&mut self, z: Complex64) -> (usize, bool) {
        if let Some(i) = self.find(z) {
            return (i, false);
        }
        let i = self.points.len();
        self.points.push(z);
        let k = self.key(z);
        self.grid.entry(k).or_default().push(i);
        (i, true)
    }
}

/// Generate the `{p,q}` lattice described by `spec`.
pub fn generate_lattice(spec: LatticeSpec) -> Result<HyperbolicLattice> {
    spec.validate()?;
    let vertex_spec = LatticeSpec { kind: LatticeKind::VertexGraph, ..spec };
    let vertex = generate_vertex_graph(vertex_spec)?;
    match spec.kind {
        LatticeKind::VertexGraph => Ok(vertex),
        LatticeKind::LineGraph => line_graph(&vertex),
    }
}

fn generate_vertex_graph(spec: LatticeSpec) -> Result<HyperbolicLattice> {
    let p = spec.p as usize;
    let h = side_length(spec.p, spec.q, KAPPA)?;
    let r0 = vertex_radius(spec.p, spec.q)?;
    let mut vertices = PointIndex::new(h / 10.0);
    let mut centers = PointIndex::new(h / 10.0);
    let mut ring_of_site: Vec<u32> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();

    let mut add_face = |corners: &[Complex64], ring: u32, vertices: &mut PointIndex, faces: &mut Vec<Vec<usize>>| -> Result<()> {
        let mut ids = Vec::with_capacity(corners.len());
        for &z in corners {
            if z.norm() > 1.0 - geometry::BOUNDARY_MARGIN {
                return Err(Error::Resource(format!("ring {ring} reaches the numerical boundary of the disk")));
            }
            let (id, fresh) = vertices.insert(z);
            if fresh {
                ring_of_site.push(ring);
                if ring_of_site.len() > MAX_SITES {
                    return Err(Error::Resource(format!("lattice {{{},{}}} with {} rings exceeds {MAX_SITES} sites", spec.p, spec.q, spec.rings)));
                }
            }
            ids.push(id);
        }
        faces.push(ids);
        Ok(())
    };

    let central: Vec<Complex64> = (0..p).map(|k| Complex64::from_polar(r0, 2.0 * PI * k as f64 / p as f64)).collect();
    add_face(&central, 1, &mut vertices, &mut faces)?;
    centers.insert(Complex64::new(0.0, 0.0));
    let mut face_corners = vec![central];
    let mut face_centers = vec![Complex64::new(0.0, 0.0)];
    let mut frontier = vec![0usize];

    for ring in 2..=spec.rings {
        let mut next = Vec::new();
        for &f in &frontier {
            let corners = face_corners[f].clone();
            let center = face_centers[f];
            for &v in &corners {
                for k in 1..spec.q {
                    let angle = 2.0 * PI * k as f64 / spec.q as f64;
                    let c = geometry::rotate_about(center, v, angle);
                    let (_, fresh) = centers.insert(c);
                    if !fresh {
                        continue;
                    }
                    let rotated: Vec<Complex64> = corners.iter().map(|&z| geometry::rotate_about(z, v, angle)).collect();
                    add_face(&rotated, ring, &mut vertices, &mut faces)?;
                    face_corners.push(rotated);
                    face_centers.push(c);
                    next.push(face_corners.len() - 1);
                }
            }
        }
        frontier = next;
    }

    let edges: BTreeSet<(usize, usize)> = faces.iter().flat_map(|f| (0..p).map(move |a| (f[a], f[(a + 1) % p]))).map(|(i, j)| (i.min(j), i.max(j))).collect();
    let sites = vertices.points.iter().map(|&z| DiskPoint::from_complex(z)).collect::<Result<Vec<_>>>()?;
    let n0 = n0(&spec)?;
    HyperbolicLattice::assemble(spec, sites, edges, ring_of_site, n0)
}

/// Line graph: one site per edge at its hyperbolic midpoint, adjacent when the edges share a vertex.
pub fn line_graph(lat: &HyperbolicLattice) -> Result<HyperbolicLattice> {
    if lat.spec.kind != LatticeKind::VertexGraph {
        return Err(Error::InvalidSpec("line graph requires a vertex-graph lattice".into()));
    }
    let spec = LatticeSpec { kind: LatticeKind::LineGraph, ..lat.spec };
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); lat.len()];
    let mut sites = Vec::with_capacity(lat.edges.len());
    let mut rings = Vec::with_capacity(lat.edges.len());
    for (e, &(i, j)) in lat.edges.iter().enumerate() {
        incident[i].push(e);
        incident[j].push(e);
        sites.push(geometry::hyperbolic_midpoint(lat.sites[i], lat.sites[j])?);
        rings.push(lat.ring_of_site[i].max(lat.ring_of_site[j]));
    }
    let edges: BTreeSet<(usize, usize)> =
        incident.iter().flat_map(|es| es.iter().enumerate().flat_map(move |(a, &e1)| es[a + 1..].iter().map(move |&e2| (e1.min(e2), e1.max(e2))))).collect();
    let n0 = n0(&spec)?;
    HyperbolicLattice::assemble(spec, sites, edges, rings, n0)
}
