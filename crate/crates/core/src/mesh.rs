//! Uniform square meshes over masked lattices.
//!
//! A mesh is an `nx × ny` lattice of cells of side `h` together with an
//! occupancy mask. Cell `(i, j)` covers `[x0 + i h, x0 + (i+1) h] × [y0 + j h, y0 + (j+1) h]`.
//! Present entities are densely re-indexed row-major, bottom to top and left
//! to right. Horizontal edges are numbered before vertical ones.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const ABSENT: usize = usize::MAX;

/// Lattice position of a cell (square) or vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

impl Cell {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("grid dimensions {nx}x{ny} too small (need at least 1x1)")]
    DimensionTooSmall { nx: usize, ny: usize },
    #[error("mesh spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("mask is empty")]
    EmptyMask,
    #[error("mask row {row} has length {found}, expected {expected}")]
    RaggedMask { row: usize, expected: usize, found: usize },
    #[error("mask row {row}, column {col}: unexpected character {ch:?}")]
    InvalidMaskChar { row: usize, col: usize, ch: char },
    #[error("domain is disconnected: square {unreachable} cannot be reached from square {start}")]
    Disconnected { start: Cell, unreachable: Cell },
    #[error("domain has a hole: absent cell {cell} is enclosed by the domain")]
    Hole { cell: Cell },
    #[error("domain is pinched at vertex {vertex}: only two diagonally opposite squares meet there")]
    PinchedVertex { vertex: Cell },
    #[error("assumption clause 1 violated: square {square} has 4 boundary vertices")]
    FourBoundaryVertices { square: Cell },
    #[error("assumption clause 2 violated: interior edge {from}-{to} meets 2 boundary vertices")]
    InteriorEdgeBoundaryEndpoints { from: Cell, to: Cell },
    #[error("assumption clause 3 violated: square {square} has exactly 2 boundary vertices that are not endpoints of one edge")]
    DiagonalBoundaryVertices { square: Cell },
    #[error("square {0} is not present in the mesh")]
    NoSuchSquare(Cell),
    #[error("internal consistency error: {0}")]
    Inconsistent(String),
}

/// Occupancy grid, `cells[j * nx + i]` with `j = 0` the bottom row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    nx: usize,
    ny: usize,
    cells: Vec<bool>,
}

impl Mask {
    pub fn full(nx: usize, ny: usize) -> Self {
        Self { nx, ny, cells: vec![true; nx * ny] }
    }

    /// Builds a mask from rows listed top row first.
    pub fn from_rows_top_first<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self, MeshError> {
        let ny = rows.len();
        if ny == 0 || rows[0].as_ref().is_empty() {
            return Err(MeshError::EmptyMask);
        }
        let nx = rows[0].as_ref().len();
        let mut cells = vec![false; nx * ny];
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != nx {
                return Err(MeshError::RaggedMask { row, expected: nx, found: r.len() });
            }
            let j = ny - 1 - row;
            cells[j * nx..(j + 1) * nx].copy_from_slice(r);
        }
        Ok(Self { nx, ny, cells })
    }

    pub fn from_fn(nx: usize, ny: usize, mut present: impl FnMut(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(present(i, j));
            }
        }
        Self { nx, ny, cells }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && self.cells[j * self.nx + i]
    }

    /// Signed lookup; anything outside the grid is absent.
    fn get_signed(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && self.get(i as usize, j as usize)
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Plain-text mask: one line per row, top row first, `1` present, `0` absent.
impl FromStr for Mask {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut rows = Vec::new();
        for (row, line) in s.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() && row > 0 {
                continue;
            }
            let parsed = line
                .chars()
                .enumerate()
                .map(|(col, ch)| match ch {
                    '1' => Ok(true),
                    '0' => Ok(false),
                    _ => Err(MeshError::InvalidMaskChar { row, col, ch }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(parsed);
        }
        Self::from_rows_top_first(&rows)
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SquareColor {
    Red,
    Black,
}

impl SquareColor {
    pub fn of(cell: Cell) -> Self {
        if (cell.i + cell.j).is_multiple_of(2) {
            SquareColor::Red
        } else {
            SquareColor::Black
        }
    }

    pub fn other(self) -> Self {
        match self {
            SquareColor::Red => SquareColor::Black,
            SquareColor::Black => SquareColor::Red,
        }
    }

    pub const BOTH: [SquareColor; 2] = [SquareColor::Red, SquareColor::Black];
}

/// Corner of a square, named by position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Corner {
    RightTop,
    LeftTop,
    LeftBottom,
    RightBottom,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::RightTop, Corner::LeftTop, Corner::LeftBottom, Corner::RightBottom];

    /// Lattice offset of this corner vertex relative to the cell index.
    pub fn vertex_offset(self) -> (usize, usize) {
        match self {
            Corner::RightTop => (1, 1),
            Corner::LeftTop => (0, 1),
            Corner::LeftBottom => (0, 0),
            Corner::RightBottom => (1, 0),
        }
    }

    /// Offset of the diagonal neighbor across this corner.
    pub fn diagonal_offset(self) -> (isize, isize) {
        match self {
            Corner::RightTop => (1, 1),
            Corner::LeftTop => (-1, 1),
            Corner::LeftBottom => (-1, -1),
            Corner::RightBottom => (1, -1),
        }
    }

    /// Sign of `x̂` and `ŷ` at this corner in center-relative coordinates.
    pub fn signs(self) -> (f64, f64) {
        match self {
            Corner::RightTop => (1.0, 1.0),
            Corner::LeftTop => (-1.0, 1.0),
            Corner::LeftBottom => (-1.0, -1.0),
            Corner::RightBottom => (1.0, -1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub interior: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct EntityCounts {
    pub n_interior_vertices: usize,
    pub n_boundary_vertices: usize,
    pub n_squares: usize,
    pub n_interior_squares: usize,
    pub n_interior_edges: usize,
    pub n_boundary_edges: usize,
}

impl EntityCounts {
    /// `#interior squares = 2 N(interior vertices) − N(squares) + 2`.
    pub fn euler_identity_holds(&self) -> bool {
        self.n_interior_squares as i64 == 2 * self.n_interior_vertices as i64 - self.n_squares as i64 + 2
    }

    /// `4 N(squares) = 2 N(interior edges) + N(boundary edges)`.
    pub fn edge_identity_holds(&self) -> bool {
        4 * self.n_squares == 2 * self.n_interior_edges + self.n_boundary_edges
    }

    /// Dimension of the mixed velocity/pressure space `[NC₀]² × M′`.
    pub fn mixed_dimension(&self) -> usize {
        (2 * self.n_interior_vertices + self.n_squares).saturating_sub(2)
    }
}

/// The up to four squares touching a square at exactly one corner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DiagonalNeighbors {
    pub right_top: Option<usize>,
    pub left_top: Option<usize>,
    pub left_bottom: Option<usize>,
    pub right_bottom: Option<usize>,
}

impl DiagonalNeighbors {
    pub fn get(&self, corner: Corner) -> Option<usize> {
        match corner {
            Corner::RightTop => self.right_top,
            Corner::LeftTop => self.left_top,
            Corner::LeftBottom => self.left_bottom,
            Corner::RightBottom => self.right_bottom,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Corner, usize)> + '_ {
        Corner::ALL.into_iter().filter_map(|c| self.get(c).map(|q| (c, q)))
    }

    pub fn count(&self) -> usize {
        self.iter().count()
    }
}

/// Same-color squares linked through shared interior vertices.
#[derive(Clone, Debug)]
pub struct ColorGraph {
    pub color: SquareColor,
    /// Square ids of the nodes, ascending.
    pub nodes: Vec<usize>,
    /// Per node: `(neighbor node index, shared interior vertex id)`.
    pub adjacency: Vec<Vec<(usize, usize)>>,
}

impl ColorGraph {
    pub fn node_of(&self, square: usize) -> Option<usize> {
        self.nodes.binary_search(&square).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Number of nodes reachable from node 0.
    pub fn reachable_from_first(&self) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut n = 1;
        while let Some(k) = queue.pop_front() {
            for &(m, _) in &self.adjacency[k] {
                if !seen[m] {
                    seen[m] = true;
                    n += 1;
                    queue.push_back(m);
                }
            }
        }
        n
    }
}

#[derive(Clone, Debug)]
pub struct SquareMesh {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    mask: Mask,
    degenerate: bool,

    square_ids: Vec<usize>,
    squares: Vec<Cell>,
    square_interior: Vec<bool>,

    vertex_ids: Vec<usize>,
    vertices: Vec<Cell>,
    /// Dense interior-vertex index per vertex id, `ABSENT` for boundary vertices.
    vertex_dof: Vec<usize>,
    interior_vertices: Vec<usize>,

    edge_ids: Vec<usize>,
    edges: Vec<Edge>,

    interior_squares: Vec<usize>,
    /// Position of each square inside its color's interior block.
    color_index: Vec<usize>,
    red_interior: Vec<usize>,
    black_interior: Vec<usize>,
}

impl SquareMesh {
    /// Full `nx × ny` rectangle with lower-left corner at the origin.
    ///
    /// Strips one cell thick have no interior vertex and violate the mesh
    /// assumption; they are still accepted here as degenerate meshes with a
    /// trivial velocity space.
    pub fn build_rectangular(nx: usize, ny: usize, h: f64) -> Result<Self, MeshError> {
        if nx < 1 || ny < 1 {
            return Err(MeshError::DimensionTooSmall { nx, ny });
        }
        if nx < 2 || ny < 2 {
            check_spacing(h)?;
            let mut mesh = Self::index(Mask::full(nx, ny), h, [0.0, 0.0]);
            mesh.degenerate = true;
            return Ok(mesh);
        }
        Self::build_masked(&Mask::full(nx, ny), h)
    }

    pub fn build_masked(mask: &Mask, h: f64) -> Result<Self, MeshError> {
        Self::build_masked_at(mask, h, [0.0, 0.0])
    }

    /// Validates the mask and indexes the mesh with its lower-left lattice
    /// corner at `origin`.
    pub fn build_masked_at(mask: &Mask, h: f64, origin: [f64; 2]) -> Result<Self, MeshError> {
        check_spacing(h)?;
        if mask.count() == 0 {
            return Err(MeshError::EmptyMask);
        }
        check_connected(mask)?;
        check_pinches(mask)?;
        check_holes(mask)?;
        check_assumption(mask)?;
        Ok(Self::index(mask.clone(), h, origin))
    }

    fn index(mask: Mask, h: f64, origin: [f64; 2]) -> Self {
        let (nx, ny) = (mask.nx, mask.ny);

        let mut square_ids = vec![ABSENT; nx * ny];
        let mut squares = Vec::with_capacity(mask.count());
        for j in 0..ny {
            for i in 0..nx {
                if mask.get(i, j) {
                    square_ids[j * nx + i] = squares.len();
                    squares.push(Cell::new(i, j));
                }
            }
        }

        let nvx = nx + 1;
        let incidence = incidence_grid(&mask);
        let mut vertex_ids = vec![ABSENT; nvx * (ny + 1)];
        let mut vertices = Vec::with_capacity(incidence.len());
        let mut vertex_dof = Vec::with_capacity(incidence.len());
        let mut interior_vertices = Vec::with_capacity(incidence.len());
        for j in 0..=ny {
            for i in 0..=nx {
                let present = incidence[j * nvx + i];
                if present == 0 {
                    continue;
                }
                let id = vertices.len();
                vertex_ids[j * nvx + i] = id;
                vertices.push(Cell::new(i, j));
                if present == 4 {
                    vertex_dof.push(interior_vertices.len());
                    interior_vertices.push(id);
                } else {
                    vertex_dof.push(ABSENT);
                }
            }
        }
        let n_horizontal = nx * (ny + 1);
        let mut edge_ids = vec![ABSENT; n_horizontal + (nx + 1) * ny];
        let mut edges = Vec::with_capacity(edge_ids.len());
        for j in 0..=ny {
            for i in 0..nx {
                let below = j > 0 && mask.get(i, j - 1);
                let above = mask.get(i, j);
                if below || above {
                    edge_ids[j * nx + i] = edges.len();
                    edges.push(Edge {
                        a: vertex_ids[j * nvx + i],
                        b: vertex_ids[j * nvx + i + 1],
                        interior: below && above,
                    });
                }
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                let left = i > 0 && mask.get(i - 1, j);
                let right = mask.get(i, j);
                if left || right {
                    edge_ids[n_horizontal + j * (nx + 1) + i] = edges.len();
                    edges.push(Edge {
                        a: vertex_ids[j * nvx + i],
                        b: vertex_ids[(j + 1) * nvx + i],
                        interior: left && right,
                    });
                }
            }
        }
        let mut square_interior = vec![false; squares.len()];
        let mut interior_squares = Vec::with_capacity(squares.len());
        let mut color_index = vec![ABSENT; squares.len()];
        let mut red_interior = Vec::new();
        let mut black_interior = Vec::new();
        for (q, &c) in squares.iter().enumerate() {
            let interior = Corner::ALL.iter().all(|corner| {
                let (di, dj) = corner.vertex_offset();
                incidence[(c.j + dj) * nvx + c.i + di] == 4
            });
            square_interior[q] = interior;
            if interior {
                interior_squares.push(q);
                let block = match SquareColor::of(c) {
                    SquareColor::Red => &mut red_interior,
                    SquareColor::Black => &mut black_interior,
                };
                color_index[q] = block.len();
                block.push(q);
            }
        }

        Self {
            nx,
            ny,
            h,
            origin,
            mask,
            degenerate: false,
            square_ids,
            squares,
            square_interior,
            vertex_ids,
            vertices,
            vertex_dof,
            interior_vertices,
            edge_ids,
            edges,
            interior_squares,
            color_index,
            red_interior,
            black_interior,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// True for strip meshes accepted without the assumption check.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn is_full_rectangle(&self) -> bool {
        self.squares.len() == self.nx * self.ny
    }

    pub fn n_squares(&self) -> usize {
        self.squares.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_squares(&self) -> usize {
        self.interior_squares.len()
    }

    pub fn square_cell(&self, q: usize) -> Cell {
        self.squares[q]
    }

    pub fn squares(&self) -> &[Cell] {
        &self.squares
    }

    pub fn square_at(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nx || j >= self.ny {
            return None;
        }
        let q = self.square_ids[j * self.nx + i];
        (q != ABSENT).then_some(q)
    }

    fn square_at_signed(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 {
            return None;
        }
        self.square_at(i as usize, j as usize)
    }

    pub fn vertex_cell(&self, v: usize) -> Cell {
        self.vertices[v]
    }

    pub fn vertex_at(&self, i: usize, j: usize) -> Option<usize> {
        if i > self.nx || j > self.ny {
            return None;
        }
        let v = self.vertex_ids[j * (self.nx + 1) + i];
        (v != ABSENT).then_some(v)
    }

    pub fn vertex_position(&self, v: usize) -> [f64; 2] {
        let c = self.vertices[v];
        [self.origin[0] + self.h * c.i as f64, self.origin[1] + self.h * c.j as f64]
    }

    pub fn is_interior_vertex(&self, v: usize) -> bool {
        self.vertex_dof[v] != ABSENT
    }

    /// Dense interior index of a vertex (its coefficient slot in a field).
    pub fn interior_vertex_index(&self, v: usize) -> Option<usize> {
        let d = self.vertex_dof[v];
        (d != ABSENT).then_some(d)
    }

    /// Vertex ids of the interior vertices, in coefficient order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn horizontal_edge(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nx || j > self.ny {
            return None;
        }
        let e = self.edge_ids[j * self.nx + i];
        (e != ABSENT).then_some(e)
    }

    pub fn vertical_edge(&self, i: usize, j: usize) -> Option<usize> {
        if i > self.nx || j >= self.ny {
            return None;
        }
        let e = self.edge_ids[self.nx * (self.ny + 1) + j * (self.nx + 1) + i];
        (e != ABSENT).then_some(e)
    }

    /// Edges of a square in the order (left, right, bottom, top).
    pub fn square_edges(&self, q: usize) -> [usize; 4] {
        let c = self.squares[q];
        let get = |e: Option<usize>| e.expect("edges of a present square are present");
        [
            get(self.vertical_edge(c.i, c.j)),
            get(self.vertical_edge(c.i + 1, c.j)),
            get(self.horizontal_edge(c.i, c.j)),
            get(self.horizontal_edge(c.i, c.j + 1)),
        ]
    }

    pub fn corner_vertex(&self, q: usize, corner: Corner) -> usize {
        let c = self.squares[q];
        let (di, dj) = corner.vertex_offset();
        self.vertex_ids[(c.j + dj) * (self.nx + 1) + c.i + di]
    }

    pub fn square_center(&self, q: usize) -> [f64; 2] {
        let c = self.squares[q];
        [
            self.origin[0] + self.h * (c.i as f64 + 0.5),
            self.origin[1] + self.h * (c.j as f64 + 0.5),
        ]
    }

    pub fn is_interior_square(&self, q: usize) -> bool {
        self.square_interior[q]
    }

    pub fn interior_squares(&self) -> &[usize] {
        &self.interior_squares
    }

    pub fn color(&self, q: usize) -> SquareColor {
        SquareColor::of(self.squares[q])
    }

    /// Interior squares of one color, ascending by square id.
    pub fn interior_squares_of(&self, color: SquareColor) -> &[usize] {
        match color {
            SquareColor::Red => &self.red_interior,
            SquareColor::Black => &self.black_interior,
        }
    }

    /// Position of an interior square inside its color block.
    pub fn color_block_index(&self, q: usize) -> Option<usize> {
        let k = self.color_index[q];
        (k != ABSENT).then_some(k)
    }

    /// The (up to four) squares around vertex `v` in counterclockwise order
    /// starting from the square whose left-bottom corner is `v`.
    pub fn squares_around(&self, v: usize) -> [Option<usize>; 4] {
        let c = self.vertices[v];
        let (i, j) = (c.i as isize, c.j as isize);
        [
            self.square_at_signed(i, j),
            self.square_at_signed(i - 1, j),
            self.square_at_signed(i - 1, j - 1),
            self.square_at_signed(i, j - 1),
        ]
    }

    pub fn counts(&self) -> EntityCounts {
        let n_interior_edges = self.edges.iter().filter(|e| e.interior).count();
        EntityCounts {
            n_interior_vertices: self.interior_vertices.len(),
            n_boundary_vertices: self.vertices.len() - self.interior_vertices.len(),
            n_squares: self.squares.len(),
            n_interior_squares: self.interior_squares.len(),
            n_interior_edges,
            n_boundary_edges: self.edges.len() - n_interior_edges,
        }
    }

    pub fn diagonal_neighbors(&self, q: usize) -> DiagonalNeighbors {
        let c = self.squares[q];
        let at = |corner: Corner| {
            let (di, dj) = corner.diagonal_offset();
            self.square_at_signed(c.i as isize + di, c.j as isize + dj)
        };
        DiagonalNeighbors {
            right_top: at(Corner::RightTop),
            left_top: at(Corner::LeftTop),
            left_bottom: at(Corner::LeftBottom),
            right_bottom: at(Corner::RightBottom),
        }
    }

    /// Graph over all squares of `color`, linking squares whose closures share
    /// an interior vertex. Errors if the graph is disconnected.
    pub fn same_color_adjacency(&self, color: SquareColor) -> Result<ColorGraph, MeshError> {
        let nodes: Vec<usize> = (0..self.squares.len()).filter(|&q| self.color(q) == color).collect();
        let mut node_of = vec![ABSENT; self.squares.len()];
        for (k, &q) in nodes.iter().enumerate() {
            node_of[q] = k;
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &v in &self.interior_vertices {
            let around = self.squares_around(v);
            for (a, b) in [(0, 2), (1, 3)] {
                let (Some(qa), Some(qb)) = (around[a], around[b]) else {
                    return Err(MeshError::Inconsistent(format!(
                        "interior vertex {} is missing an incident square",
                        self.vertices[v]
                    )));
                };
                if self.color(qa) == color {
                    adjacency[node_of[qa]].push((node_of[qb], v));
                    adjacency[node_of[qb]].push((node_of[qa], v));
                }
            }
        }
        let graph = ColorGraph { color, nodes, adjacency };
        if graph.reachable_from_first() != graph.nodes.len() {
            return Err(MeshError::Inconsistent(format!(
                "{color:?} squares are not connected through interior vertices"
            )));
        }
        Ok(graph)
    }
}

fn check_spacing(h: f64) -> Result<(), MeshError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(MeshError::InvalidSpacing(h))
    }
}

/// Number of present cells around every lattice vertex, `(nx + 1) × (ny + 1)`
/// row-major.
fn incidence_grid(mask: &Mask) -> Vec<u8> {
    let nvx = mask.nx + 1;
    let mut grid = vec![0u8; nvx * (mask.ny + 1)];
    for j in 0..mask.ny {
        for i in 0..mask.nx {
            if mask.get(i, j) {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    grid[(j + dj) * nvx + i + di] += 1;
                }
            }
        }
    }
    grid
}

fn check_connected(mask: &Mask) -> Result<(), MeshError> {
    let (nx, ny) = (mask.nx, mask.ny);
    let start = (0..nx * ny).find(|&k| mask.cells[k]).ok_or(MeshError::EmptyMask)?;
    let mut seen = vec![false; nx * ny];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(k) = queue.pop_front() {
        let (i, j) = (k % nx, k / nx);
        let neighbors = [
            (i > 0).then(|| k - 1),
            (i + 1 < nx).then(|| k + 1),
            (j > 0).then(|| k - nx),
            (j + 1 < ny).then(|| k + nx),
        ];
        for n in neighbors.into_iter().flatten() {
            if mask.cells[n] && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    match (0..nx * ny).find(|&k| mask.cells[k] && !seen[k]) {
        Some(k) => Err(MeshError::Disconnected {
            start: Cell::new(start % nx, start / nx),
            unreachable: Cell::new(k % nx, k / nx),
        }),
        None => Ok(()),
    }
}

fn check_pinches(mask: &Mask) -> Result<(), MeshError> {
    for j in 0..=mask.ny as isize {
        for i in 0..=mask.nx as isize {
            let ur = mask.get_signed(i, j);
            let ul = mask.get_signed(i - 1, j);
            let ll = mask.get_signed(i - 1, j - 1);
            let lr = mask.get_signed(i, j - 1);
            if (ur && ll && !ul && !lr) || (ul && lr && !ur && !ll) {
                return Err(MeshError::PinchedVertex { vertex: Cell::new(i as usize, j as usize) });
            }
        }
    }
    Ok(())
}

/// Flood-fills the complement inside a one-cell padded bounding box; any
/// absent cell not reached from the pad is enclosed.
fn check_holes(mask: &Mask) -> Result<(), MeshError> {
    let (px, py) = (mask.nx + 2, mask.ny + 2);
    let free = |i: usize, j: usize| !mask.get_signed(i as isize - 1, j as isize - 1);
    let mut seen = vec![false; px * py];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(k) = queue.pop_front() {
        let (i, j) = (k % px, k / px);
        let neighbors = [
            (i > 0).then(|| (i - 1, j)),
            (i + 1 < px).then(|| (i + 1, j)),
            (j > 0).then(|| (i, j - 1)),
            (j + 1 < py).then(|| (i, j + 1)),
        ];
        for (a, b) in neighbors.into_iter().flatten() {
            let n = b * px + a;
            if !seen[n] && free(a, b) {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    for j in 1..=mask.ny {
        for i in 1..=mask.nx {
            if free(i, j) && !seen[j * px + i] {
                return Err(MeshError::Hole { cell: Cell::new(i - 1, j - 1) });
            }
        }
    }
    Ok(())
}

fn check_assumption(mask: &Mask) -> Result<(), MeshError> {
    let incidence = incidence_grid(mask);
    let nvx = mask.nx + 1;
    let boundary = |i: usize, j: usize| incidence[j * nvx + i] < 4;

    for j in 0..mask.ny {
        for i in 0..mask.nx {
            if !mask.get(i, j) {
                continue;
            }
            let corners = Corner::ALL.map(|c| {
                let (di, dj) = c.vertex_offset();
                boundary(i + di, j + dj)
            });
            if corners.iter().all(|&b| b) {
                return Err(MeshError::FourBoundaryVertices { square: Cell::new(i, j) });
            }
        }
    }

    for j in 0..=mask.ny {
        for i in 0..mask.nx {
            let interior = j > 0 && mask.get(i, j - 1) && mask.get(i, j);
            if interior && boundary(i, j) && boundary(i + 1, j) {
                return Err(MeshError::InteriorEdgeBoundaryEndpoints {
                    from: Cell::new(i, j),
                    to: Cell::new(i + 1, j),
                });
            }
        }
    }
    for j in 0..mask.ny {
        for i in 0..=mask.nx {
            let interior = i > 0 && mask.get(i - 1, j) && mask.get(i, j);
            if interior && boundary(i, j) && boundary(i, j + 1) {
                return Err(MeshError::InteriorEdgeBoundaryEndpoints {
                    from: Cell::new(i, j),
                    to: Cell::new(i, j + 1),
                });
            }
        }
    }

    for j in 0..mask.ny {
        for i in 0..mask.nx {
            if !mask.get(i, j) {
                continue;
            }
            // Corners in order RightTop, LeftTop, LeftBottom, RightBottom;
            // diagonal pairs are (0, 2) and (1, 3).
            let corners = Corner::ALL.map(|c| {
                let (di, dj) = c.vertex_offset();
                boundary(i + di, j + dj)
            });
            let n = corners.iter().filter(|&&b| b).count();
            if n == 2 && ((corners[0] && corners[2]) || (corners[1] && corners[3])) {
                return Err(MeshError::DiagonalBoundaryVertices { square: Cell::new(i, j) });
            }
        }
    }
    Ok(())
}
