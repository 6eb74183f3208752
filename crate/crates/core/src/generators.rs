//! Canned well-formed test assemblies: weighted graph Laplacians, 2D
//! linear-elasticity bar unions with mixed materials, and a 3D Poisson
//! ball-in-box model.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Mat, SymmetricDense};
use crate::error::Error;
use crate::model::{Assembly, ElementMatrix};
use crate::rng::Xoshiro256StarStar;
use crate::Result;

/// A weighted undirected graph.
#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub n: usize,
    /// (u, v, w) with u != v and w > 0; parallel edges are distinct elements.
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(u, v, w) in &edges {
            if u == v {
                return Err(Error::Domain("self-loops are not allowed"));
            }
            if u >= n || v >= n {
                return Err(Error::Domain("edge endpoint out of range"));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Domain("edge weights must be positive"));
            }
        }
        Ok(GraphSpec { n, edges })
    }

    pub fn path(n: usize) -> Self {
        GraphSpec { n, edges: (0..n - 1).map(|i| (i, i + 1, 1.0)).collect() }
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        edges.push((n - 1, 0, 1.0));
        GraphSpec { n, edges }
    }

    pub fn star(n: usize) -> Self {
        GraphSpec { n, edges: (1..n).map(|i| (0, i, 1.0)).collect() }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v, 1.0));
            }
        }
        GraphSpec { n, edges }
    }

    /// rows x cols grid with 4-neighbor edges; node (i, j) = i * cols + j.
    pub fn grid2d(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let id = i * cols + j;
                if j + 1 < cols {
                    edges.push((id, id + 1, 1.0));
                }
                if i + 1 < rows {
                    edges.push((id, id + cols, 1.0));
                }
            }
        }
        GraphSpec { n: rows * cols, edges }
    }

    /// Random connected graph: a random spanning tree plus `extra_edges`
    /// uniform pairs, weights uniform in [w_min, w_max]. Deterministic in
    /// the seed.
    pub fn random_connected(
        n: usize,
        extra_edges: usize,
        w_min: f64,
        w_max: f64,
        seed: u64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("random graph needs at least 2 nodes"));
        }
        if !(w_min > 0.0 && w_max >= w_min) {
            return Err(Error::Domain("weight range must be positive"));
        }
        let mut rng = Xoshiro256StarStar::from_seed(seed);
        let mut edges = Vec::with_capacity(n - 1 + extra_edges);
        for v in 1..n {
            let u = rng.next_index(v);
            let w = rng.next_range(w_min, w_max);
            edges.push((u, v, w));
        }
        let mut added = 0;
        while added < extra_edges {
            let u = rng.next_index(n);
            let v = rng.next_index(n);
            if u == v {
                continue;
            }
            let w = rng.next_range(w_min, w_max);
            edges.push((u.min(v), u.max(v), w));
            added += 1;
        }
        GraphSpec::new(n, edges)
    }
}

/// Laplacian assembly: one rank-1 element `w (e_u - e_v)(e_u - e_v)^T` per
/// edge, all-ones null basis, `r = 1`, `d = 1`.
pub fn laplacian_assembly(g: &GraphSpec) -> Result<Assembly> {
    let mut elements = Vec::with_capacity(g.edges.len());
    for (id, &(u, v, w)) in g.edges.iter().enumerate() {
        let k = SymmetricDense::from_lower_of(2, &[w, -w, -w, w]);
        elements.push(ElementMatrix::new(id, vec![u.min(v), u.max(v)], k));
    }
    let mut ones = Mat::zeros(g.n, 1);
    for i in 0..g.n {
        ones.set(i, 0, 1.0);
    }
    Assembly::new(g.n, elements, ones, 1, 1)
}

/// Union of horizontal bars stacked vertically, each a structured grid of
/// constant-strain triangles, with per-bar Young's modulus alternating
/// between 1 and `stiff_ratio`¹.
#[derive(Debug, Clone)]
pub struct ElasticityBarSpec {
    pub bars: usize,
    /// Cells along the bar.
    pub nx: usize,
    /// Cells across one bar.
    pub ny: usize,
    pub bar_length: f64,
    pub bar_height: f64,
    /// Stiffness contrast between adjacent bars.
    pub stiff_ratio: f64,
    pub poisson: f64,
    pub thickness: f64,
    /// Node jitter as a fraction of the smaller cell dimension. Axis-aligned
    /// grids have collinear points, a special geometry that admits
    /// infinitesimal mechanisms under arbitrary support removal; jittering
    /// puts the points in general position. Zero disables it.
    pub jitter: f64,
    pub jitter_seed: u64,
}

impl Default for ElasticityBarSpec {
    fn default() -> Self {
        ElasticityBarSpec {
            bars: 2,
            nx: 8,
            ny: 2,
            bar_length: 4.0,
            bar_height: 1.0,
            stiff_ratio: 1.0e3,
            poisson: 0.3,
            thickness: 1.0,
            jitter: 0.15,
            jitter_seed: 0x9E3779B9,
        }
    }
}

/// 2D plane-stress elasticity on the bar union: two coordinate indices per
/// node, 6x6 rank-3 elements, rigid-body null basis rows
/// `(1, 0, -y_i)` and `(0, 1, x_i)`, so `r = 3`, `d = 3`. Also returns node
/// coordinates.
pub fn elasticity2d_assembly(spec: &ElasticityBarSpec) -> Result<(Assembly, Vec<[f64; 2]>)> {
    if spec.bars == 0 || spec.nx == 0 || spec.ny == 0 {
        return Err(Error::Domain("bar mesh resolutions must be positive"));
    }
    if !(spec.bar_length > 0.0 && spec.bar_height > 0.0) {
        return Err(Error::Domain("bar dimensions must be positive"));
    }
    if !(spec.stiff_ratio > 0.0) {
        return Err(Error::Domain("stiffness ratio must be positive"));
    }
    if !(spec.poisson > -1.0 && spec.poisson < 0.5) {
        return Err(Error::Domain("Poisson ratio must lie in (-1, 0.5)"));
    }

    let rows = spec.bars * spec.ny; // cell rows
    let hx = spec.bar_length / spec.nx as f64;
    let hy = spec.bar_height / spec.ny as f64;
    let nodes_x = spec.nx + 1;
    let nodes_y = rows + 1;
    let node_count = nodes_x * nodes_y;
    let node_id = |i: usize, j: usize| j * nodes_x + i;

    let mut coords = Vec::with_capacity(node_count);
    // Jitter stream: two doubles per node in node-id order.
    let mut jrng = Xoshiro256StarStar::from_seed(spec.jitter_seed);
    let amp = spec.jitter * hx.min(hy);
    for j in 0..nodes_y {
        for i in 0..nodes_x {
            let dx = amp * (2.0 * jrng.next_f64() - 1.0);
            let dy = amp * (2.0 * jrng.next_f64() - 1.0);
            coords.push([i as f64 * hx + dx, j as f64 * hy + dy]);
        }
    }

    let mut elements = Vec::with_capacity(2 * spec.nx * rows);
    for j in 0..rows {
        let bar = j / spec.ny;
        let young = if bar % 2 == 0 { 1.0 } else { spec.stiff_ratio };
        for i in 0..spec.nx {
            let n00 = node_id(i, j);
            let n10 = node_id(i + 1, j);
            let n01 = node_id(i, j + 1);
            let n11 = node_id(i + 1, j + 1);
            for tri in [[n00, n10, n11], [n00, n11, n01]] {
                let id = elements.len();
                elements.push(cst_element(id, tri, &coords, young, spec)?);
            }
        }
    }

    let n = 2 * node_count;
    let mut null_basis = Mat::zeros(n, 3);
    for (node, c) in coords.iter().enumerate() {
        null_basis.set(2 * node, 0, 1.0);
        null_basis.set(2 * node, 2, -c[1]);
        null_basis.set(2 * node + 1, 1, 1.0);
        null_basis.set(2 * node + 1, 2, c[0]);
    }

    let assembly = Assembly::new(n, elements, null_basis, 3, 3)?;
    Ok((assembly, coords))
}

// Constant-strain triangle, plane stress.
fn cst_element(
    id: usize,
    tri: [usize; 3],
    coords: &[[f64; 2]],
    young: f64,
    spec: &ElasticityBarSpec,
) -> Result<ElementMatrix> {
    let mut verts = tri;
    verts.sort_unstable();
    let [p1, p2, p3] = [coords[verts[0]], coords[verts[1]], coords[verts[2]]];
    let area2 = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
    let area = 0.5 * area2.abs();
    if area <= 1e-14 * (spec.bar_length * spec.bar_height) {
        return Err(Error::Model { element: Some(id), reason: "degenerate triangle".into() });
    }

    let b = [p2[1] - p3[1], p3[1] - p1[1], p1[1] - p2[1]];
    let c = [p3[0] - p2[0], p1[0] - p3[0], p2[0] - p1[0]];
    // Strain-displacement matrix, 3 x 6 over dofs (u1, v1, u2, v2, u3, v3).
    let mut bm = Mat::zeros(3, 6);
    for k in 0..3 {
        bm.set(0, 2 * k, b[k]);
        bm.set(1, 2 * k + 1, c[k]);
        bm.set(2, 2 * k, c[k]);
        bm.set(2, 2 * k + 1, b[k]);
    }
    let scale = 1.0 / area2; // signed 1/(2A); sign cancels in B^T D B
    for i in 0..3 {
        for j in 0..6 {
            bm.set(i, j, bm.get(i, j) * scale);
        }
    }

    let nu = spec.poisson;
    let d_fac = young / (1.0 - nu * nu);
    let mut d = Mat::zeros(3, 3);
    d.set(0, 0, d_fac);
    d.set(1, 1, d_fac);
    d.set(0, 1, d_fac * nu);
    d.set(1, 0, d_fac * nu);
    d.set(2, 2, d_fac * (1.0 - nu) / 2.0);

    let db = d.matmul(&bm);
    let k_full = bm.transpose_matmul(&db);
    let mut k = SymmetricDense::symmetrized(&k_full);
    k.scale(spec.thickness * area);

    let nodes = vec![
        2 * verts[0],
        2 * verts[0] + 1,
        2 * verts[1],
        2 * verts[1] + 1,
        2 * verts[2],
        2 * verts[2] + 1,
    ];
    Ok(ElementMatrix::new(id, nodes, k))
}

/// Structured tetrahedral box with a contrasting ball inside.
#[derive(Debug, Clone)]
pub struct PoissonBoxSpec {
    /// Cells per axis (at least 4); the box is the unit cube.
    pub resolution: usize,
    /// Ball radius in unit-cube coordinates; 0 disables the ball. Must
    /// leave the ball strictly inside.
    pub ball_radius: f64,
    pub ball_conductivity: f64,
    pub box_conductivity: f64,
}

impl Default for PoissonBoxSpec {
    fn default() -> Self {
        PoissonBoxSpec {
            resolution: 8,
            ball_radius: 0.3,
            ball_conductivity: 1.0e3,
            box_conductivity: 1.0,
        }
    }
}

/// 3D Poisson on the unit cube: each grid cell split into six tetrahedra
/// (Kuhn subdivision, face-consistent), linear elements `sigma V G^T G`,
/// 4x4 rank-3 blocks, all-ones null basis, `r = 3`, `d = 1`. Also returns
/// node coordinates.
pub fn poisson3d_assembly(spec: &PoissonBoxSpec) -> Result<(Assembly, Vec<[f64; 3]>)> {
    let res = spec.resolution;
    if res < 4 {
        return Err(Error::Domain("box resolution must be at least 4 per axis"));
    }
    if !(spec.ball_radius >= 0.0 && spec.ball_radius < 0.5) {
        return Err(Error::Domain("ball must sit strictly inside the unit box"));
    }
    if !(spec.ball_conductivity > 0.0 && spec.box_conductivity > 0.0) {
        return Err(Error::Domain("conductivities must be positive"));
    }

    let h = 1.0 / res as f64;
    let nodes_per_axis = res + 1;
    let node_id =
        |i: usize, j: usize, k: usize| (k * nodes_per_axis + j) * nodes_per_axis + i;
    let mut coords = Vec::with_capacity(nodes_per_axis.pow(3));
    for k in 0..nodes_per_axis {
        for j in 0..nodes_per_axis {
            for i in 0..nodes_per_axis {
                coords.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }

    // Kuhn subdivision: six tets around the main diagonal of each cell.
    const TETS: [[[usize; 3]; 4]; 6] = [
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1]],
        [[0, 0, 0], [1, 0, 0], [1, 0, 1], [1, 1, 1]],
        [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 1, 1]],
        [[0, 0, 0], [0, 1, 0], [0, 1, 1], [1, 1, 1]],
        [[0, 0, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1]],
    ];

    let center = [0.5, 0.5, 0.5];
    let mut elements = Vec::with_capacity(6 * res * res * res);
    for k in 0..res {
        for j in 0..res {
            for i in 0..res {
                for tet in &TETS {
                    let verts: Vec<usize> = tet
                        .iter()
                        .map(|off| node_id(i + off[0], j + off[1], k + off[2]))
                        .collect();
                    let id = elements.len();
                    let centroid = {
                        let mut c = [0.0; 3];
                        for &v in &verts {
                            for a in 0..3 {
                                c[a] += coords[v][a] / 4.0;
                            }
                        }
                        c
                    };
                    let dist2: f64 = (0..3)
                        .map(|a| (centroid[a] - center[a]) * (centroid[a] - center[a]))
                        .sum();
                    let sigma = if spec.ball_radius > 0.0
                        && dist2 < spec.ball_radius * spec.ball_radius
                    {
                        spec.ball_conductivity
                    } else {
                        spec.box_conductivity
                    };
                    elements.push(tet_element(id, &verts, &coords, sigma)?);
                }
            }
        }
    }

    let n = coords.len();
    let mut ones = Mat::zeros(n, 1);
    for i in 0..n {
        ones.set(i, 0, 1.0);
    }
    let assembly = Assembly::new(n, elements, ones, 3, 1)?;
    Ok((assembly, coords))
}

/// Stiffness of a single linear tetrahedron; exposed for unit tests.
pub fn tet_element(
    id: usize,
    verts: &[usize],
    coords: &[[f64; 3]],
    sigma: f64,
) -> Result<ElementMatrix> {
    let mut vs = verts.to_vec();
    vs.sort_unstable();
    let p: Vec<[f64; 3]> = vs.iter().map(|&v| coords[v]).collect();

    // Edge matrix from vertex 0 and its inverse give the hat-function
    // gradients.
    let mut m = Mat::zeros(3, 3);
    for col in 0..3 {
        for row in 0..3 {
            m.set(row, col, p[col + 1][row] - p[0][row]);
        }
    }
    let det = m.get(0, 0) * (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1))
        - m.get(0, 1) * (m.get(1, 0) * m.get(2, 2) - m.get(1, 2) * m.get(2, 0))
        + m.get(0, 2) * (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0));
    let volume = det.abs() / 6.0;
    if volume <= 1e-16 {
        return Err(Error::Model { element: Some(id), reason: "degenerate tetrahedron".into() });
    }
    // inv(M)^T rows: gradients of hats 1..3; hat 0 closes the partition of
    // unity.
    let inv_det = 1.0 / det;
    let cof = |r: usize, c: usize| -> f64 {
        let idx = |a: usize, b: usize| m.get(a, b);
        let (r1, r2) = match r {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (c1, c2) = match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let minor = idx(r1, c1) * idx(r2, c2) - idx(r1, c2) * idx(r2, c1);
        if (r + c) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    let mut grads = Mat::zeros(3, 4); // columns: gradient per vertex
    for g in 0..3 {
        // column g+1 of inv(M) transposed: inv(M)[g][row] = cof(row, g)/det
        for row in 0..3 {
            grads.set(row, g + 1, cof(g, row) * inv_det);
        }
    }
    for row in 0..3 {
        let s = grads.get(row, 1) + grads.get(row, 2) + grads.get(row, 3);
        grads.set(row, 0, -s);
    }

    let mut k = SymmetricDense::zeros(4);
    for a in 0..4 {
        for b in 0..=a {
            let mut s = 0.0;
            for row in 0..3 {
                s += grads.get(row, a) * grads.get(row, b);
            }
            k.set(a, b, sigma * volume * s);
        }
    }
    Ok(ElementMatrix::new(id, vs, k))
}

/// Default pinned index sets making `K` nonsingular: one node for scalar
/// problems; for 2D elasticity, both coordinates of two nodes that do not
/// share an element (the first row's two ends).
pub fn default_pin_set(r: usize, d: usize, n: usize, nx_hint: Option<usize>) -> Vec<usize> {
    if r == 3 && d == 3 {
        let nx = nx_hint.unwrap_or(2).max(2);
        let far_node = nx.min(n / 2 - 1);
        vec![0, 1, 2 * far_node, 2 * far_node + 1]
    } else {
        vec![0]
    }
}
