//! Piecewise-constant scalar diffusion coefficient `A = α I`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::mesh::Mesh;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CoefficientField {
    values: BTreeMap<usize, f64>,
    /// Dense lookup by subdomain id; NaN marks ids without a value.
    lookup: Vec<f64>,
    edge_adjacent: BTreeSet<(usize, usize)>,
    point_adjacent: BTreeSet<(usize, usize)>,
}

/// Outcome of the quasi-monotonicity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QmaCertificate {
    /// One monotone path per pair of subdomains touching at least at a point.
    Satisfied { paths: Vec<Vec<usize>> },
    /// A pair of touching subdomains with no monotone connecting path.
    Violated { pair: (usize, usize) },
}

impl QmaCertificate {
    pub fn holds(&self) -> bool {
        matches!(self, QmaCertificate::Satisfied { .. })
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b { (a, b) } else { (b, a) }
}

impl CoefficientField {
    /// Builds a field from `(subdomain id, α)` pairs and explicit adjacency.
    /// `point_adjacent` lists pairs that touch only at isolated points.
    pub fn new(
        values: impl IntoIterator<Item = (usize, f64)>,
        edge_adjacent: impl IntoIterator<Item = (usize, usize)>,
        point_adjacent: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let values: BTreeMap<usize, f64> = values.into_iter().collect();
        if values.is_empty() {
            return Err(Error::Parameter("coefficient field has no subdomains".into()));
        }
        for (&id, &a) in &values {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Parameter(format!("alpha on subdomain {id} must be positive and finite, got {a}")));
            }
        }
        let max_id = *values.keys().next_back().unwrap();
        let mut lookup = vec![f64::NAN; max_id + 1];
        for (&id, &a) in &values {
            lookup[id] = a;
        }
        let edge_adjacent: BTreeSet<_> = edge_adjacent
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| ordered(a, b))
            .collect();
        let point_adjacent = point_adjacent
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| ordered(a, b))
            .filter(|p| !edge_adjacent.contains(p))
            .collect();
        Ok(Self {
            values,
            lookup,
            edge_adjacent,
            point_adjacent,
        })
    }

    /// α ≡ `value` on subdomains `1..=4`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::quadrants([value; 4])
    }

    /// Four quadrant values, ids 1..=4 counterclockwise from (0,1)².
    pub fn quadrants(v: [f64; 4]) -> Result<Self> {
        Self::new(
            (1..=4).zip(v),
            [(1, 2), (2, 3), (3, 4), (4, 1)],
            [(1, 3), (2, 4)],
        )
    }

    /// The checkerboard: `r` on the first and third quadrants, 1 elsewhere.
    pub fn checkerboard(r: f64) -> Result<Self> {
        Self::quadrants([r, 1.0, r, 1.0])
    }

    /// Values given per subdomain; adjacency read off the mesh.
    pub fn from_mesh(mesh: &Mesh, values: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let values: Vec<(usize, f64)> = values.into_iter().collect();
        let mut edge_adj = BTreeSet::new();
        for e in mesh.edges() {
            if let [Some(a), Some(b)] = e.triangles {
                let (sa, sb) = (mesh.subdomain(a), mesh.subdomain(b));
                if sa != sb {
                    edge_adj.insert(ordered(sa, sb));
                }
            }
        }
        let mut at_vertex: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); mesh.n_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                at_vertex[v].insert(mesh.subdomain(t));
            }
        }
        let mut point_adj = BTreeSet::new();
        for ids in &at_vertex {
            let ids: Vec<usize> = ids.iter().copied().collect();
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    point_adj.insert((a, b));
                }
            }
        }
        let field = Self::new(values, edge_adj, point_adj)?;
        for &s in mesh.subdomains() {
            if field.value(s).is_none() {
                return Err(Error::Parameter(format!("no alpha given for subdomain {s}")));
            }
        }
        Ok(field)
    }

    pub fn value(&self, subdomain: usize) -> Option<f64> {
        self.lookup.get(subdomain).copied().filter(|a| !a.is_nan())
    }

    /// α on a subdomain; panics on an id the field does not know.
    pub fn alpha(&self, subdomain: usize) -> f64 {
        match self.value(subdomain) {
            Some(a) => a,
            None => panic!("no coefficient for subdomain {subdomain}"),
        }
    }

    pub fn alpha_on_element(&self, mesh: &Mesh, element: usize) -> f64 {
        self.alpha(mesh.subdomain(element))
    }

    pub fn values(&self) -> &BTreeMap<usize, f64> {
        &self.values
    }

    pub fn lambda0(&self) -> f64 {
        self.values.values().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda1(&self) -> f64 {
        self.values.values().copied().fold(0.0, f64::max)
    }

    /// Quasi-monotonicity: every pair of subdomains sharing at least a point
    /// must be joined by a path of edge-adjacent subdomains along which α is
    /// monotone.
    pub fn check_qma(&self) -> QmaCertificate {
        let ids: Vec<usize> = self.values.keys().copied().collect();
        let mut neighbours: BTreeMap<usize, Vec<usize>> = ids.iter().map(|&i| (i, Vec::new())).collect();
        for &(a, b) in &self.edge_adjacent {
            if let (Some(_), Some(_)) = (self.value(a), self.value(b)) {
                neighbours.get_mut(&a).unwrap().push(b);
                neighbours.get_mut(&b).unwrap().push(a);
            }
        }
        let mut paths = Vec::new();
        for &(a, b) in self.edge_adjacent.iter().chain(&self.point_adjacent) {
            match self.monotone_path(&neighbours, a, b) {
                Some(p) => paths.push(p),
                None => return QmaCertificate::Violated { pair: (a, b) },
            }
        }
        QmaCertificate::Satisfied { paths }
    }

    fn monotone_path(&self, nb: &BTreeMap<usize, Vec<usize>>, from: usize, to: usize) -> Option<Vec<usize>> {
        for increasing in [true, false] {
            let mut path = vec![from];
            if self.dfs(nb, to, increasing, &mut path) {
                return Some(path);
            }
        }
        None
    }

    fn dfs(&self, nb: &BTreeMap<usize, Vec<usize>>, to: usize, increasing: bool, path: &mut Vec<usize>) -> bool {
        let here = *path.last().unwrap();
        if here == to {
            return true;
        }
        let a_here = self.alpha(here);
        for &next in nb.get(&here).map(Vec::as_slice).unwrap_or(&[]) {
            if path.contains(&next) {
                continue;
            }
            let a_next = self.alpha(next);
            let ok = if increasing { a_next >= a_here } else { a_next <= a_here };
            if ok {
                path.push(next);
                if self.dfs(nb, to, increasing, path) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
}
