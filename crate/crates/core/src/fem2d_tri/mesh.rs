//! Structured triangulations of the unit square with a point-symmetric patch
//! around a chosen vertex and seeded perturbation everywhere else.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rings over which the snapping shift fades out.
const BLEND_RINGS: usize = 2;
/// Retries with halved amplitude after an inverted triangle.
const MAX_RETRIES: usize = 3;

/// Parameters of [`build_symmetric_mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshParams {
    /// Squares per side of the base lattice.
    pub n: usize,
    pub x0: [f64; 2],
    pub x0prime: [f64; 2],
    /// Lattice rings around `x0` kept reflection-symmetric.
    pub rings: usize,
    /// Perturbation amplitude as a fraction of the lattice spacing.
    pub rho: f64,
    pub seed: u64,
}

impl MeshParams {
    pub fn new(n: usize) -> Self {
        Self { n, x0: [0.3, 0.4], x0prime: [0.7, 0.6], rings: 4, rho: 0.25, seed: 7 }
    }

    /// Checks everything [`build_symmetric_mesh`] needs short of building it.
    pub fn validate(&self) -> Result<()> {
        self.lattice_anchors().map(|_| ())
    }

    /// Lattice indices of the vertices snapped onto `x0` and `x0'`.
    fn lattice_anchors(&self) -> Result<([isize; 2], [isize; 2])> {
        let Self { n, x0, x0prime, rings, rho, .. } = *self;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if rings < 2 {
            return bad(format!("rings = {rings} must be at least 2"));
        }
        if !(0.0..0.3).contains(&rho) {
            return bad(format!("rho = {rho} must lie in [0, 0.3)"));
        }
        for (name, p) in [("x0", x0), ("x0prime", x0prime)] {
            if !(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0) {
                return bad(format!("{name} = ({}, {}) is not interior", p[0], p[1]));
            }
        }
        let nf = n as f64;
        let snap = |p: [f64; 2]| [(p[0] * nf).round() as isize, (p[1] * nf).round() as isize];
        let (c, cp) = (snap(x0), snap(x0prime));
        let (ni, r) = (n as isize, rings as isize);
        if c.iter().any(|&i| i - r < 1 || i + r > ni - 1) {
            return bad(format!("n = {n} is too coarse for a {rings}-ring patch around x0"));
        }
        if cp.iter().any(|&i| i < 1 || i > ni - 1) {
            return bad(format!("n = {n} is too coarse to place x0prime"));
        }
        let dist = (cp[0] - c[0]).abs().max((cp[1] - c[1]).abs());
        if dist < r + BLEND_RINGS as isize {
            return bad(format!("n = {n} is too coarse to separate x0 and x0prime"));
        }
        Ok((c, cp))
    }
}

/// The reflection-symmetric neighborhood of `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPatch {
    pub center: [f64; 2],
    pub center_vertex: usize,
    pub rings: usize,
    /// Pairs `(v, w)` with `w` the reflection of `v` through the center.
    pub pairs: Vec<(usize, usize)>,
}

impl SymmetricPatch {
    pub fn contains(&self, v: usize) -> bool {
        self.pairs.iter().any(|&(a, _)| a == v)
    }
}

/// A conforming triangulation of `[0, 1]^2` with counterclockwise triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh2D {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub patch: SymmetricPatch,
    pub x0prime: [f64; 2],
    pub x0prime_vertex: usize,
    pub perturb_seed: u64,
    /// Amplitude actually used, after any retries.
    pub rho: f64,
    pub n: usize,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl TriMesh2D {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn min_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).fold(f64::INFINITY, f64::min)
    }

    /// Every triangle has signed area above `1e-14` (the domain has area 1).
    pub fn is_valid(&self) -> bool {
        self.min_area() > 1e-14
    }

    /// Vertex on the side `x = 0` or `x = 1`.
    pub fn on_vertical_side(&self, v: usize) -> bool {
        let x = self.vertices[v][0];
        self.boundary[v] && (x == 0.0 || x == 1.0)
    }

    /// Vertex on the side `y = 0` or `y = 1`.
    pub fn on_horizontal_side(&self, v: usize) -> bool {
        let y = self.vertices[v][1];
        self.boundary[v] && (y == 0.0 || y == 1.0)
    }

    /// Largest deviation of a patch pair from exact reflection through the
    /// center, relative to the coordinate scale.
    pub fn patch_symmetry_defect(&self) -> f64 {
        let c = self.patch.center;
        self.patch
            .pairs
            .iter()
            .map(|&(a, b)| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                let scale = p[0].abs().max(p[1].abs()).max(q[0].abs()).max(q[1].abs()).max(1.0);
                ((p[0] + q[0] - 2.0 * c[0]).abs()).max((p[1] + q[1] - 2.0 * c[1]).abs()) / scale
            })
            .fold(0.0, f64::max)
    }

    /// Triangles whose three vertices lie in the patch.
    pub fn patch_triangles(&self) -> Vec<usize> {
        let inside: Vec<bool> = (0..self.n_vertices()).map(|v| self.patch.contains(v)).collect();
        (0..self.n_triangles()).filter(|&t| self.triangles[t].iter().all(|&v| inside[v])).collect()
    }

    /// Plain-text form with `vertices`, `triangles` and `meta` sections.
    pub fn to_text(&self) -> String {
        let mut s = String::from("vertices\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let patch = u8::from(self.patch.contains(i));
            let _ = writeln!(s, "{i} {:.16e} {:.16e} {} {patch}", v[0], v[1], u8::from(self.boundary[i]));
        }
        s.push_str("triangles\n");
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s.push_str("meta\n");
        let _ = writeln!(s, "seed {}", self.perturb_seed);
        let _ = writeln!(s, "rho {:.16e}", self.rho);
        let _ = writeln!(s, "rings {}", self.patch.rings);
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "x0 {:.16e} {:.16e}", self.patch.center[0], self.patch.center[1]);
        let _ = writeln!(s, "x0prime {:.16e} {:.16e}", self.x0prime[0], self.x0prime[1]);
        s
    }

    /// Reads the format written by [`to_text`](Self::to_text). Reflection
    /// pairs are rebuilt from the patch flags and vertex positions.
    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse(format!("mesh line {line}: {msg}"));
        let mut section = "";
        let mut vertices = Vec::new();
        let mut boundary = Vec::new();
        let mut patch_flags = Vec::new();
        let mut triangles = Vec::new();
        let mut meta: HashMap<String, Vec<String>> = HashMap::new();
        for (ln, line) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if matches!(line, "vertices" | "triangles" | "meta") {
                section = match line {
                    "vertices" => "vertices",
                    "triangles" => "triangles",
                    _ => "meta",
                };
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match section {
                "vertices" => {
                    if fields.len() != 5 {
                        return Err(perr(ln, "expected `index x y boundary patch`"));
                    }
                    let idx: usize = fields[0].parse().map_err(|_| perr(ln, "bad index"))?;
                    if idx != vertices.len() {
                        return Err(perr(ln, "vertex indices must be consecutive"));
                    }
                    let x: f64 = fields[1].parse().map_err(|_| perr(ln, "bad x"))?;
                    let y: f64 = fields[2].parse().map_err(|_| perr(ln, "bad y"))?;
                    vertices.push([x, y]);
                    boundary.push(fields[3] == "1");
                    patch_flags.push(fields[4] == "1");
                }
                "triangles" => {
                    if fields.len() != 3 {
                        return Err(perr(ln, "expected three vertex indices"));
                    }
                    let mut t = [0usize; 3];
                    for (slot, f) in t.iter_mut().zip(&fields) {
                        *slot = f.parse().map_err(|_| perr(ln, "bad vertex index"))?;
                    }
                    triangles.push(t);
                }
                "meta" => {
                    meta.insert(fields[0].to_string(), fields[1..].iter().map(|s| s.to_string()).collect());
                }
                _ => return Err(perr(ln, "data before the first section header")),
            }
        }
        if triangles.iter().flatten().any(|&v| v >= vertices.len()) {
            return Err(Error::Parse("triangle refers to a missing vertex".into()));
        }
        let get = |key: &str| -> Result<&Vec<String>> {
            meta.get(key).ok_or_else(|| Error::Parse(format!("meta entry `{key}` missing")))
        };
        let num = |key: &str, i: usize| -> Result<f64> {
            get(key)?
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("meta entry `{key}` is malformed")))
        };
        let center = [num("x0", 0)?, num("x0", 1)?];
        let x0prime = [num("x0prime", 0)?, num("x0prime", 1)?];
        let nearest = |p: [f64; 2]| {
            (0..vertices.len())
                .min_by(|&a, &b| dist2(vertices[a], p).total_cmp(&dist2(vertices[b], p)))
                .unwrap_or(0)
        };
        let center_vertex = nearest(center);
        let x0prime_vertex = nearest(x0prime);
        let patch_vertices: Vec<usize> = (0..vertices.len()).filter(|&v| patch_flags[v]).collect();
        let mut pairs = Vec::with_capacity(patch_vertices.len());
        for &v in &patch_vertices {
            let p = vertices[v];
            let target = [2.0 * center[0] - p[0], 2.0 * center[1] - p[1]];
            let w = patch_vertices
                .iter()
                .copied()
                .min_by(|&a, &b| dist2(vertices[a], target).total_cmp(&dist2(vertices[b], target)))
                .unwrap_or(v);
            pairs.push((v, w));
        }
        Ok(Self {
            vertices,
            triangles,
            boundary,
            patch: SymmetricPatch { center, center_vertex, rings: num("rings", 0)? as usize, pairs },
            x0prime,
            x0prime_vertex,
            perturb_seed: num("seed", 0)? as u64,
            rho: num("rho", 0)?,
            n: num("n", 0)? as usize,
        })
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Builds the `n x n` lattice split along the `/` diagonal, which is
/// point-symmetric about every lattice vertex. The lattice vertex nearest to
/// `x0` (and to `x0'`) is moved onto it: vertices within `rings` rings move
/// rigidly, the shift fades out over the next two rings. All other interior
/// vertices except `x0'` are displaced by a seeded offset of length at most
/// `rho / n`.
pub fn build_symmetric_mesh(params: &MeshParams) -> Result<TriMesh2D> {
    let (c, cp) = params.lattice_anchors()?;
    let MeshParams { n, x0, x0prime, rings, rho, seed } = *params;
    let nf = n as f64;
    let cheb = |i: isize, j: isize, q: [isize; 2]| (i - q[0]).abs().max((j - q[1]).abs());

    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut base = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let (x, y) = (if i == n { 1.0 } else { i as f64 / nf }, if j == n { 1.0 } else { j as f64 / nf });
            base.push([x, y]);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }

    // Snapping shifts with their blending weights.
    let shift_c = [x0[0] - c[0] as f64 / nf, x0[1] - c[1] as f64 / nf];
    let shift_p = [x0prime[0] - cp[0] as f64 / nf, x0prime[1] - cp[1] as f64 / nf];
    let weight = |d: isize, core: usize| -> f64 {
        let core = core as isize;
        if d <= core {
            1.0
        } else if d >= core + BLEND_RINGS as isize {
            0.0
        } else {
            1.0 - (d - core) as f64 / BLEND_RINGS as f64
        }
    };
    let mut snapped = base.clone();
    for j in 0..=n {
        for i in 0..=n {
            let v = idx(i, j);
            if boundary[v] {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let wc = weight(cheb(ii, jj, c), rings);
            let wp = weight(cheb(ii, jj, cp), 0);
            snapped[v][0] += wc * shift_c[0] + wp * shift_p[0];
            snapped[v][1] += wc * shift_c[1] + wp * shift_p[1];
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, cc, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, cc]);
            triangles.push([a, cc, d]);
        }
    }

    let center_vertex = idx(c[0] as usize, c[1] as usize);
    let x0prime_vertex = idx(cp[0] as usize, cp[1] as usize);
    let mut pairs = Vec::new();
    for dj in -(rings as isize)..=rings as isize {
        for di in -(rings as isize)..=rings as isize {
            let v = idx((c[0] + di) as usize, (c[1] + dj) as usize);
            let w = idx((c[0] - di) as usize, (c[1] - dj) as usize);
            pairs.push((v, w));
        }
    }
    let patch = SymmetricPatch { center: x0, center_vertex, rings, pairs };
    let in_patch: Vec<bool> = (0..base.len()).map(|v| patch.contains(v)).collect();

    let mut amp = rho;
    for attempt in 0..=MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vertices = snapped.clone();
        for v in 0..vertices.len() {
            if boundary[v] {
                continue;
            }
            // One draw per interior vertex keeps the stream independent of the patch.
            let offset = unit_disk(&mut rng);
            if in_patch[v] || v == x0prime_vertex {
                continue;
            }
            vertices[v][0] += amp / nf * offset[0];
            vertices[v][1] += amp / nf * offset[1];
        }
        let mut mesh = TriMesh2D {
            vertices,
            triangles: triangles.clone(),
            boundary: boundary.clone(),
            patch: patch.clone(),
            x0prime,
            x0prime_vertex,
            perturb_seed: seed,
            rho: amp,
            n,
        };
        if mesh.is_valid() {
            // Pin the probes to the requested coordinates exactly.
            mesh.vertices[center_vertex] = x0;
            mesh.vertices[x0prime_vertex] = x0prime;
            return Ok(mesh);
        }
        log::warn!("mesh n = {n}: inverted triangle with rho = {amp}, attempt {}", attempt + 1);
        amp *= 0.5;
    }
    Err(Error::MeshGeneration(format!(
        "perturbation keeps inverting triangles after {MAX_RETRIES} retries"
    )))
}

fn unit_disk(rng: &mut ChaCha8Rng) -> [f64; 2] {
    loop {
        let p = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        if p[0] * p[0] + p[1] * p[1] <= 1.0 {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_lattice() {
        let mut p = MeshParams::new(20);
        p.rho = 0.0;
        let m = build_symmetric_mesh(&p).unwrap();
        assert_eq!(m.n_vertices(), 441);
        assert_eq!(m.n_triangles(), 800);
        assert!((m.min_area() - 0.5 / 400.0).abs() < 1e-15);
        assert_eq!(m.vertices[m.patch.center_vertex], [0.3, 0.4]);
        assert_eq!(m.vertices[m.x0prime_vertex], [0.7, 0.6]);
    }

    #[test]
    fn perturbed_mesh_properties() {
        let p = MeshParams { n: 32, rings: 2, rho: 0.25, seed: 7, ..MeshParams::new(32) };
        let m = build_symmetric_mesh(&p).unwrap();
        assert!(m.is_valid());
        assert!(m.patch_symmetry_defect() < 1e-13);
        assert_eq!(m.vertices[m.patch.center_vertex], [0.3, 0.4]);
        assert_eq!(m.vertices[m.x0prime_vertex], [0.7, 0.6]);
        let h = 1.0 / 32.0;
        let mut moved = 0;
        let mut total = 0;
        for j in 1..32 {
            for i in 1..32 {
                let v = j * 33 + i;
                if m.patch.contains(v) || v == m.x0prime_vertex {
                    continue;
                }
                total += 1;
                let base = [i as f64 * h, j as f64 * h];
                let d = dist2(m.vertices[v], base).sqrt();
                if d >= 0.05 * h {
                    moved += 1;
                }
            }
        }
        assert!(moved * 2 >= total, "{moved} of {total}");
    }

    #[test]
    fn patch_triangles_map_onto_themselves() {
        let m = build_symmetric_mesh(&MeshParams::new(40)).unwrap();
        let partner: HashMap<usize, usize> = m.patch.pairs.iter().copied().collect();
        let tris = m.patch_triangles();
        assert!(!tris.is_empty());
        let mut set: Vec<[usize; 3]> = tris
            .iter()
            .map(|&t| {
                let mut s = m.triangles[t];
                s.sort_unstable();
                s
            })
            .collect();
        set.sort_unstable();
        let mut image: Vec<[usize; 3]> = tris
            .iter()
            .map(|&t| {
                let mut s = m.triangles[t].map(|v| partner[&v]);
                s.sort_unstable();
                s
            })
            .collect();
        image.sort_unstable();
        assert_eq!(set, image);
        // Every triangle touching x0 and its edge neighbors lie in the patch.
        let touching: Vec<usize> =
            (0..m.n_triangles()).filter(|&t| m.triangles[t].contains(&m.patch.center_vertex)).collect();
        assert_eq!(touching.len(), 6);
        assert!(touching.iter().all(|t| tris.contains(t)));
    }

    #[test]
    fn snapping_for_non_aligned_lattices() {
        let m = build_symmetric_mesh(&MeshParams::new(16)).unwrap();
        assert!(m.is_valid());
        assert_eq!(m.vertices[m.patch.center_vertex], [0.3, 0.4]);
        assert!(m.patch_symmetry_defect() < 1e-13);
    }

    #[test]
    fn halving_the_lattice_spacing_halves_the_patch() {
        let a = build_symmetric_mesh(&MeshParams::new(20)).unwrap();
        let b = build_symmetric_mesh(&MeshParams::new(40)).unwrap();
        let diam = |m: &TriMesh2D| {
            m.patch.pairs.iter().map(|&(v, w)| dist2(m.vertices[v], m.vertices[w]).sqrt()).fold(0.0, f64::max)
        };
        assert!((diam(&a) / diam(&b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_round_trips() {
        let p = MeshParams::new(24);
        let a = build_symmetric_mesh(&p).unwrap();
        let b = build_symmetric_mesh(&p).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = TriMesh2D::from_text(&a.to_text()).unwrap();
        assert_eq!(c.vertices, a.vertices);
        assert_eq!(c.triangles, a.triangles);
        assert_eq!(c.patch.center_vertex, a.patch.center_vertex);
        let mut pa = a.patch.pairs.clone();
        let mut pc = c.patch.pairs.clone();
        pa.sort_unstable();
        pc.sort_unstable();
        assert_eq!(pa, pc);
        let other = build_symmetric_mesh(&MeshParams { seed: 8, ..p }).unwrap();
        assert_ne!(other.vertices, a.vertices);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_symmetric_mesh(&MeshParams { rings: 1, ..MeshParams::new(20) }).is_err());
        assert!(build_symmetric_mesh(&MeshParams { rho: 0.3, ..MeshParams::new(20) }).is_err());
        assert!(build_symmetric_mesh(&MeshParams { x0: [1.0, 0.5], ..MeshParams::new(20) }).is_err());
        assert!(build_symmetric_mesh(&MeshParams::new(4)).is_err());
    }
}
