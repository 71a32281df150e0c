//! Conforming triangulations of the unit square and the L-shaped domain,
//! with red refinement of marked zones and longest-edge bisection to close
//! hanging nodes.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Positively oriented vertex index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Dirichlet boundary flag per vertex.
    pub boundary: Vec<bool>,
    /// Refinement generation per triangle (0 = base mesh).
    pub level: Vec<u32>,
    /// Fast-set membership per triangle.
    pub fast: Vec<bool>,
}

impl Mesh {
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        d(pa, pb).max(d(pb, pc)).max(d(pc, pa))
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Plain-text export: vertex coordinates, then triangles with their
    /// fast-set flag, for external plotting.
    pub fn export(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("vertices {}\n", self.vertices.len()));
        for v in &self.vertices {
            out.push_str(&format!("{:.16e} {:.16e}\n", v[0], v[1]));
        }
        out.push_str(&format!("triangles {}\n", self.triangles.len()));
        for (i, t) in self.triangles.iter().enumerate() {
            out.push_str(&format!(
                "{} {} {} {}\n",
                t[0],
                t[1],
                t[2],
                if self.fast[i] { 1 } else { 0 }
            ));
        }
        out
    }
}

/// Incremental triangulation builder with vertex dedup by exact coordinate
/// bits (all refinement points are dyadic, so re-derived midpoints agree
/// bit for bit).
struct Builder {
    vertices: Vec<[f64; 2]>,
    vmap: HashMap<(u64, u64), usize>,
    triangles: Vec<[usize; 3]>,
    level: Vec<u32>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vertices: Vec::new(),
            vmap: HashMap::new(),
            triangles: Vec::new(),
            level: Vec::new(),
        }
    }

    fn vertex(&mut self, p: [f64; 2]) -> usize {
        let key = (p[0].to_bits(), p[1].to_bits());
        *self.vmap.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    fn existing_vertex(&self, p: [f64; 2]) -> Option<usize> {
        self.vmap.get(&(p[0].to_bits(), p[1].to_bits())).copied()
    }

    fn push_tri(&mut self, t: [usize; 3], level: u32) {
        self.triangles.push(t);
        self.level.push(level);
    }

    fn midpoint(&self, a: usize, b: usize) -> [f64; 2] {
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Splits triangle `t` into four by connecting the edge midpoints.
    fn red_refine(&mut self, idx: usize) {
        let [a, b, c] = self.triangles[idx];
        let lvl = self.level[idx] + 1;
        let mab = self.vertex(self.midpoint(a, b));
        let mbc = self.vertex(self.midpoint(b, c));
        let mca = self.vertex(self.midpoint(c, a));
        self.triangles[idx] = [a, mab, mca];
        self.level[idx] = lvl;
        self.push_tri([mab, b, mbc], lvl);
        self.push_tri([mca, mbc, c], lvl);
        self.push_tri([mab, mbc, mca], lvl);
    }

    /// Bisects triangle `t` at the midpoint of its longest edge.
    fn bisect_longest(&mut self, idx: usize) {
        let tri = self.triangles[idx];
        let mut best = 0;
        let mut best_len = -1.0;
        for e in 0..3 {
            let (u, v) = (tri[e], tri[(e + 1) % 3]);
            let (pu, pv) = (self.vertices[u], self.vertices[v]);
            let len = (pu[0] - pv[0]).powi(2) + (pu[1] - pv[1]).powi(2);
            if len > best_len {
                best_len = len;
                best = e;
            }
        }
        let (u, v, w) = (tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]);
        let mid = self.vertex(self.midpoint(u, v));
        let lvl = self.level[idx] + 1;
        self.triangles[idx] = [u, mid, w];
        self.level[idx] = lvl;
        self.push_tri([mid, v, w], lvl);
    }

    /// Repeatedly bisects triangles carrying a hanging node (an existing
    /// vertex at the midpoint of one of their edges) until none remain.
    fn close_hanging_nodes(&mut self) {
        loop {
            let mut to_split = Vec::new();
            for (i, tri) in self.triangles.iter().enumerate() {
                'edges: for e in 0..3 {
                    let (u, v) = (tri[e], tri[(e + 1) % 3]);
                    let mid = self.midpoint(u, v);
                    if let Some(m) = self.existing_vertex(mid) {
                        if m != tri[0] && m != tri[1] && m != tri[2] {
                            to_split.push(i);
                            break 'edges;
                        }
                    }
                }
            }
            if to_split.is_empty() {
                return;
            }
            for &i in &to_split {
                self.bisect_longest(i);
            }
        }
    }

    fn finish(self, domain: Domain, fast_rule: FastRule) -> Mesh {
        let boundary: Vec<bool> =
            self.vertices.iter().map(|&p| domain.on_boundary(p)).collect();
        let n_tri = self.triangles.len();
        let mut mesh = Mesh {
            vertices: self.vertices,
            triangles: self.triangles,
            boundary,
            level: self.level,
            fast: vec![false; n_tri],
        };
        mesh.fast = fast_rule.apply(&mesh);
        mesh
    }
}

#[derive(Clone, Copy)]
enum Domain {
    UnitSquare,
    LShape,
}

impl Domain {
    fn on_boundary(self, p: [f64; 2]) -> bool {
        let on = |a: f64, b: f64| (a - b).abs() < 1e-12;
        let outer = on(p[0], 0.0) || on(p[0], 1.0) || on(p[1], 0.0) || on(p[1], 1.0);
        match self {
            Domain::UnitSquare => outer,
            Domain::LShape => {
                outer
                    || (on(p[0], 0.5) && p[1] <= 0.5 + 1e-12)
                    || (on(p[1], 0.5) && p[0] >= 0.5 - 1e-12)
            }
        }
    }
}

/// Diameter below the threshold, optionally grown by one layer of edge
/// neighbors.  The fine elements and the smallest transition slivers make
/// up the fast set; the remaining transition elements stay slow and set
/// the slow spectral radius.
struct FastRule {
    threshold: f64,
    grow_neighbors: bool,
}

impl FastRule {
    fn apply(&self, mesh: &Mesh) -> Vec<bool> {
        let mut fast: Vec<bool> =
            (0..mesh.triangles.len()).map(|i| mesh.diameter(i) < self.threshold).collect();
        if self.grow_neighbors {
            let mut edge_map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (i, t) in mesh.triangles.iter().enumerate() {
                for e in 0..3 {
                    let (u, v) = (t[e], t[(e + 1) % 3]);
                    edge_map.entry((u.min(v), u.max(v))).or_default().push(i);
                }
            }
            let seed = fast.clone();
            for tris in edge_map.values() {
                if tris.iter().any(|&i| seed[i]) {
                    for &i in tris {
                        fast[i] = true;
                    }
                }
            }
        }
        fast
    }
}

#[cfg(test)]
fn tri_points(mesh: &Mesh, i: usize) -> [[f64; 2]; 3] {
    let [a, b, c] = mesh.triangles[i];
    [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]]
}

/// Closed triangle versus closed axis-aligned box, by separating axes.
fn tri_box_intersect(p: [[f64; 2]; 3], lo: [f64; 2], hi: [f64; 2]) -> bool {
    for d in 0..2 {
        let tmin = p.iter().map(|q| q[d]).fold(f64::INFINITY, f64::min);
        let tmax = p.iter().map(|q| q[d]).fold(f64::NEG_INFINITY, f64::max);
        if tmax < lo[d] || tmin > hi[d] {
            return false;
        }
    }
    let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    for e in 0..3 {
        let a = p[e];
        let b = p[(e + 1) % 3];
        let n = [a[1] - b[1], b[0] - a[0]];
        let proj = |q: [f64; 2]| n[0] * q[0] + n[1] * q[1];
        let (mut t0, mut t1) = (f64::INFINITY, f64::NEG_INFINITY);
        for q in p {
            t0 = t0.min(proj(q));
            t1 = t1.max(proj(q));
        }
        let (mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY);
        for q in corners {
            b0 = b0.min(proj(q));
            b1 = b1.max(proj(q));
        }
        if t1 < b0 || b1 < t0 {
            return false;
        }
    }
    true
}

fn dist_to_triangle(p: [[f64; 2]; 3], c: [f64; 2]) -> f64 {
    // inside test via signed areas (positively oriented triangles)
    let sign = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if sign(p[0], p[1]) >= 0.0 && sign(p[1], p[2]) >= 0.0 && sign(p[2], p[0]) >= 0.0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for e in 0..3 {
        let a = p[e];
        let b = p[(e + 1) % 3];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = (((c[0] - a[0]) * ab[0] + (c[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
        let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
        best = best.min(((c[0] - q[0]).powi(2) + (c[1] - q[1]).powi(2)).sqrt());
    }
    best
}

fn base_grid(builder: &mut Builder, n: usize, keep: impl Fn(f64, f64) -> bool) {
    // derive each corner from its grid index so shared vertices agree bit
    // for bit even when 1/n is not exactly representable
    let coord = |i: usize| i as f64 / n as f64;
    for i in 0..n {
        for k in 0..n {
            let (x0, y0) = (coord(i), coord(k));
            let (x1, y1) = (coord(i + 1), coord(k + 1));
            if !keep(0.5 * (x0 + x1), 0.5 * (y0 + y1)) {
                continue;
            }
            let v00 = builder.vertex([x0, y0]);
            let v10 = builder.vertex([x1, y0]);
            let v01 = builder.vertex([x0, y1]);
            let v11 = builder.vertex([x1, y1]);
            builder.push_tri([v00, v10, v11], 0);
            builder.push_tri([v00, v11, v01], 0);
        }
    }
}

/// Uniform `2^j x 2^j` cell triangulation of the unit square (two triangles
/// per cell), locally refined `local_levels` times in the zone
/// `(1/4, 3/4)^2`: triangles meeting the closed zone are split into four,
/// and conformity is restored by longest-edge (hypotenuse) bisection.
pub fn unit_square_mesh(j: u32, local_levels: u32) -> Mesh {
    assert!(j >= 1);
    assert!(local_levels <= 2);
    let mut b = Builder::new();
    base_grid(&mut b, 1usize << j, |_, _| true);
    let (lo, hi) = ([0.25, 0.25], [0.75, 0.75]);
    // refinement marks triangles overlapping the *open* zone (positive-area
    // intersection, tested against a slightly shrunk box); triangles that
    // only touch the zone boundary stay coarse and are handled by the
    // conformity closure.  The fast set below uses the closed zone.
    let shrink = 1e-9;
    let (mlo, mhi) = ([lo[0] + shrink, lo[1] + shrink], [hi[0] - shrink, hi[1] - shrink]);
    for _ in 0..local_levels {
        let marked: Vec<usize> = (0..b.triangles.len())
            .filter(|&i| {
                let [u, v, w] = b.triangles[i];
                tri_box_intersect([b.vertices[u], b.vertices[v], b.vertices[w]], mlo, mhi)
            })
            .collect();
        for i in marked {
            b.red_refine(i);
        }
        b.close_hanging_nodes();
    }
    // fast set: elements at (or just below) the fine diameter h = H / 2^levels
    let fine_diam = std::f64::consts::SQRT_2 / (1u64 << (j + local_levels)) as f64;
    b.finish(
        Domain::UnitSquare,
        FastRule { threshold: 1.1 * fine_diam, grow_neighbors: false },
    )
}

/// L-shaped domain (unit square minus `[1/2, 1] x [0, 1/2]`) meshed at
/// coarse diameter about `H`, graded down to about `h` near the reentrant
/// corner `(1/2, 1/2)` by repeated red refinement inside shrinking disks.
/// Fast set: triangles of diameter below `(H + h)/2` plus their edge
/// neighbors.
pub fn lshape_mesh(big_h: f64, small_h: f64) -> Mesh {
    assert!(small_h <= big_h && small_h > 0.0);
    let n = (1.0 / big_h).round().max(2.0) as usize;
    let mut b = Builder::new();
    base_grid(&mut b, n, |cx, cy| !(cx > 0.5 && cy < 0.5));
    let levels = (big_h / small_h).log2().ceil().max(0.0) as u32;
    let corner = [0.5, 0.5];
    for k in 0..levels {
        // marking disk halves each pass, grading diameters geometrically
        let radius = 2.0 * big_h / (1u64 << k) as f64;
        let marked: Vec<usize> = (0..b.triangles.len())
            .filter(|&i| {
                let [u, v, w] = b.triangles[i];
                dist_to_triangle([b.vertices[u], b.vertices[v], b.vertices[w]], corner)
                    <= radius
            })
            .collect();
        for i in marked {
            b.red_refine(i);
        }
        b.close_hanging_nodes();
    }
    b.finish(
        Domain::LShape,
        FastRule { threshold: 0.5 * (big_h + small_h), grow_neighbors: true },
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Every edge is either shared by exactly two triangles or lies on the
    /// domain boundary, and no existing vertex sits at the midpoint of an
    /// unsplit edge.
    pub(crate) fn assert_conforming(mesh: &Mesh) {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &mesh.triangles {
            for e in 0..3 {
                let (u, v) = (t[e], t[(e + 1) % 3]);
                *count.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        let vset: HashMap<(u64, u64), usize> = mesh
            .vertices
            .iter()
            .enumerate()
            .map(|(i, p)| ((p[0].to_bits(), p[1].to_bits()), i))
            .collect();
        for (&(u, v), &c) in &count {
            assert!(c <= 2, "edge ({u},{v}) shared by {c} triangles");
            if c == 1 {
                assert!(
                    mesh.boundary[u] && mesh.boundary[v],
                    "interior edge ({u},{v}) used once"
                );
            }
            let (pu, pv) = (mesh.vertices[u], mesh.vertices[v]);
            let mid = [0.5 * (pu[0] + pv[0]), 0.5 * (pu[1] + pv[1])];
            assert!(
                !vset.contains_key(&(mid[0].to_bits(), mid[1].to_bits())),
                "hanging node on edge ({u},{v})"
            );
        }
        for i in 0..mesh.triangles.len() {
            assert!(mesh.area(i) > 0.0, "triangle {i} degenerate or misoriented");
        }
    }

    #[test]
    fn base_counts() {
        let mesh = unit_square_mesh(2, 0);
        assert_eq!(mesh.triangles.len(), 32);
        assert_eq!(mesh.vertices.len(), 25);
        assert_conforming(&mesh);
        // 16 boundary vertices on a 5x5 grid
        assert_eq!(mesh.boundary.iter().filter(|b| **b).count(), 16);
    }

    #[test]
    fn refined_meshes_conform() {
        for j in [2, 3] {
            for levels in [1, 2] {
                let mesh = unit_square_mesh(j, levels);
                assert_conforming(&mesh);
            }
        }
    }

    #[test]
    fn two_levels_quarter_diameters() {
        let mesh = unit_square_mesh(3, 2);
        let dmax = (0..mesh.triangles.len()).map(|i| mesh.diameter(i)).fold(0.0, f64::max);
        let dmin =
            (0..mesh.triangles.len()).map(|i| mesh.diameter(i)).fold(f64::INFINITY, f64::min);
        assert!((dmax / dmin - 4.0).abs() < 1e-12, "ratio {}", dmax / dmin);
        // refined-zone triangles are uniformly fine
        for i in 0..mesh.triangles.len() {
            if mesh.fast[i] {
                assert!(mesh.diameter(i) <= dmin * (1.0 + 1e-12) * 2.0);
            }
        }
    }

    #[test]
    fn fast_zone_marked() {
        let mesh = unit_square_mesh(3, 1);
        assert!(mesh.fast.iter().any(|f| *f));
        assert!(mesh.fast.iter().any(|f| !*f));
        // fast triangles all touch the zone
        for i in 0..mesh.triangles.len() {
            if mesh.fast[i] {
                assert!(tri_box_intersect(tri_points(&mesh, i), [0.25, 0.25], [0.75, 0.75]));
            }
        }
    }

    #[test]
    fn lshape_basic_geometry() {
        let mesh = lshape_mesh(0.1, 0.1);
        assert_conforming(&mesh);
        // no vertex strictly inside the removed quadrant
        for v in &mesh.vertices {
            assert!(!(v[0] > 0.5 + 1e-12 && v[1] < 0.5 - 1e-12), "vertex {v:?}");
        }
        // area sums to 3/4
        let total: f64 = (0..mesh.triangles.len()).map(|i| mesh.area(i)).sum();
        assert!((total - 0.75).abs() < 1e-12);
    }

    #[test]
    fn lshape_graded_refinement() {
        let mesh = lshape_mesh(0.1, 0.01);
        assert_conforming(&mesh);
        let dmin =
            (0..mesh.triangles.len()).map(|i| mesh.diameter(i)).fold(f64::INFINITY, f64::min);
        // smallest diameter comparable to the requested h
        assert!(dmin < 0.015, "dmin = {dmin}");
        assert!(mesh.fast.iter().any(|f| *f));
        let total: f64 = (0..mesh.triangles.len()).map(|i| mesh.area(i)).sum();
        assert!((total - 0.75).abs() < 1e-12);
    }

    #[test]
    fn export_round_figures() {
        let mesh = unit_square_mesh(1, 0);
        let text = mesh.export();
        assert!(text.starts_with("vertices 9\n"));
        assert!(text.contains("triangles 8\n"));
    }
}
