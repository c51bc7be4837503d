//! Structured axis-aligned rectangular meshes of `[0, Lx] x [0, Ly]`.
//!
//! Vertices, cells and edges are numbered lexicographically with `x` running
//! fastest. Horizontal edges come first, then vertical edges. Every edge
//! carries a fixed global unit normal: `+y` for horizontal edges and `+x` for
//! vertical ones. The edge tangent (and the direction in which edge
//! parameters increase) is `+x` for horizontal and `+y` for vertical edges.
//!
//! Local cell numbering is counterclockwise starting at the lower-left
//! vertex; local edges are bottom, right, top, left.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Local edge slots of a cell, counterclockwise from the bottom.
pub const BOTTOM: usize = 0;
pub const RIGHT: usize = 1;
pub const TOP: usize = 2;
pub const LEFT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOrientation {
    /// Parallel to the x axis, normal `+y`.
    Horizontal,
    /// Parallel to the y axis, normal `+x`.
    Vertical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Start and end vertex; the edge runs in the `+x` or `+y` direction.
    pub vertices: [usize; 2],
    pub orientation: EdgeOrientation,
    pub boundary: bool,
}

impl Edge {
    pub fn normal(&self) -> Point {
        match self.orientation {
            EdgeOrientation::Horizontal => [0.0, 1.0],
            EdgeOrientation::Vertical => [1.0, 0.0],
        }
    }

    pub fn tangent(&self) -> Point {
        match self.orientation {
            EdgeOrientation::Horizontal => [1.0, 0.0],
            EdgeOrientation::Vertical => [0.0, 1.0],
        }
    }
}

/// One local edge of a cell: the global edge and whether its global normal
/// coincides with the cell's outward normal (`+1`) or not (`-1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEdge {
    pub edge: usize,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    edges: Vec<Edge>,
    cell_edges: Vec<[CellEdge; 4]>,
    boundary_edges: Vec<usize>,
}

impl Mesh {
    /// Builds the `nx x ny` uniform mesh of `[0, lx] x [0, ly]`.
    pub fn rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "cell counts must be positive, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "side lengths must be positive and finite, got {lx} x {ly}"
            )));
        }

        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let vid = |i: usize, j: usize| j * (nx + 1) + i;

        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // Snap the far sides so that boundary coordinates are exact.
                let x = if i == nx { lx } else { i as f64 * hx };
                let y = if j == ny { ly } else { j as f64 * hy };
                vertices.push([x, y]);
            }
        }

        let n_horizontal = nx * (ny + 1);
        let hid = |i: usize, j: usize| j * nx + i;
        let vert_id = |i: usize, j: usize| n_horizontal + j * (nx + 1) + i;

        let mut edges = Vec::with_capacity(n_horizontal + (nx + 1) * ny);
        for j in 0..=ny {
            for i in 0..nx {
                edges.push(Edge {
                    vertices: [vid(i, j), vid(i + 1, j)],
                    orientation: EdgeOrientation::Horizontal,
                    boundary: j == 0 || j == ny,
                });
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                edges.push(Edge {
                    vertices: [vid(i, j), vid(i, j + 1)],
                    orientation: EdgeOrientation::Vertical,
                    boundary: i == 0 || i == nx,
                });
            }
        }

        let mut cells = Vec::with_capacity(nx * ny);
        let mut cell_edges = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
                cell_edges.push([
                    CellEdge { edge: hid(i, j), sign: -1.0 },
                    CellEdge { edge: vert_id(i + 1, j), sign: 1.0 },
                    CellEdge { edge: hid(i, j + 1), sign: 1.0 },
                    CellEdge { edge: vert_id(i, j), sign: -1.0 },
                ]);
            }
        }

        let boundary_edges = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.boundary)
            .map(|(i, _)| i)
            .collect();

        Ok(Mesh {
            nx,
            ny,
            lx,
            ly,
            vertices,
            cells,
            edges,
            cell_edges,
            boundary_edges,
        })
    }

    /// Unit square with `n x n` cells, i.e. `h = sqrt(2) / n`.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        Mesh::rectangle(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn cell_edges(&self, cell: usize) -> &[CellEdge; 4] {
        &self.cell_edges[cell]
    }

    /// Cell side lengths `(Lx/nx, Ly/ny)`, the diagonal of every cell map.
    pub fn cell_size(&self) -> (f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64)
    }

    /// Cell diameter; all cells are congruent so this is also `max h_T`.
    pub fn h(&self) -> f64 {
        let (hx, hy) = self.cell_size();
        hx.hypot(hy)
    }

    pub fn cell_area(&self) -> f64 {
        let (hx, hy) = self.cell_size();
        hx * hy
    }

    /// Lattice position `(i, j)` of a cell.
    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn cell_origin(&self, cell: usize) -> Point {
        self.vertices[self.cells[cell][0]]
    }

    pub fn cell_centroid(&self, cell: usize) -> Point {
        let o = self.cell_origin(cell);
        let (hx, hy) = self.cell_size();
        [o[0] + 0.5 * hx, o[1] + 0.5 * hy]
    }

    fn check_cell(&self, cell: usize) -> Result<()> {
        if cell < self.cells.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "cell",
                index: cell,
                len: self.cells.len(),
            })
        }
    }

    /// Affine map from the reference square `[0,1]^2` onto `cell`.
    pub fn ref_to_phys(&self, cell: usize, ref_pt: Point) -> Result<Point> {
        self.check_cell(cell)?;
        Ok(self.map_unchecked(cell, ref_pt))
    }

    /// Inverse of [`Mesh::ref_to_phys`].
    pub fn phys_to_ref(&self, cell: usize, pt: Point) -> Result<Point> {
        self.check_cell(cell)?;
        let o = self.cell_origin(cell);
        let (hx, hy) = self.cell_size();
        Ok([(pt[0] - o[0]) / hx, (pt[1] - o[1]) / hy])
    }

    pub(crate) fn map_unchecked(&self, cell: usize, ref_pt: Point) -> Point {
        let o = self.cell_origin(cell);
        let (hx, hy) = self.cell_size();
        [o[0] + ref_pt[0] * hx, o[1] + ref_pt[1] * hy]
    }

    /// Finds the cell containing `pt` and the reference coordinates of `pt`
    /// in it. Points on interior cell boundaries go to the upper/right cell.
    pub fn locate(&self, pt: Point) -> Result<(usize, Point)> {
        let tol = 1e-12 * self.lx.max(self.ly);
        let [x, y] = pt;
        if !(x >= -tol && x <= self.lx + tol && y >= -tol && y <= self.ly + tol) {
            return Err(Error::OutsideDomain { x, y });
        }
        let (hx, hy) = self.cell_size();
        let i = ((x / hx).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((y / hy).floor().max(0.0) as usize).min(self.ny - 1);
        let cell = j * self.nx + i;
        let o = self.cell_origin(cell);
        Ok((cell, [(x - o[0]) / hx, (y - o[1]) / hy]))
    }

    pub fn on_boundary(&self, pt: Point, tol: f64) -> bool {
        pt[0].abs() <= tol
            || pt[1].abs() <= tol
            || (pt[0] - self.lx).abs() <= tol
            || (pt[1] - self.ly).abs() <= tol
    }

    /// Physical endpoints of local edge `slot` of `cell`, ordered along the
    /// global edge direction.
    pub fn cell_edge_endpoints(&self, cell: usize, slot: usize) -> [Point; 2] {
        let e = &self.edges[self.cell_edges[cell][slot].edge];
        [self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]]
    }

    /// Outward unit normal of local edge `slot`.
    pub fn outward_normal(slot: usize) -> Point {
        match slot {
            BOTTOM => [0.0, -1.0],
            RIGHT => [1.0, 0.0],
            TOP => [0.0, 1.0],
            LEFT => [-1.0, 0.0],
            _ => panic!("cell edge slot {slot} out of range"),
        }
    }

    /// Reference-square point of local edge `slot` at edge parameter
    /// `s in [0,1]` measured along the global edge direction.
    pub fn edge_ref_point(slot: usize, s: f64) -> Point {
        match slot {
            BOTTOM => [s, 0.0],
            RIGHT => [1.0, s],
            TOP => [s, 1.0],
            LEFT => [0.0, s],
            _ => panic!("cell edge slot {slot} out of range"),
        }
    }

    /// Length of local edge `slot`.
    pub fn edge_length(&self, slot: usize) -> f64 {
        let (hx, hy) = self.cell_size();
        match slot {
            BOTTOM | TOP => hx,
            _ => hy,
        }
    }
}
