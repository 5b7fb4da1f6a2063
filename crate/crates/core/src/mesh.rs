//! Nested uniform-refinement hierarchies of structured meshes on boxes.
//!
//! Vertices of a level are indexed lexicographically, `id = i + (nx + 1) * k`
//! for grid indices `(i, k)`.  Refinement doubles the cell count per axis, so
//! coarse vertex `(i, k)` is fine vertex `(2i, 2k)`.  Coordinates are always
//! computed from integer indices, which makes nested vertices agree bitwise.

use crate::error::{Error, Result};

/// Axis-aligned box `(lo, hi)` in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidMesh(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self {
            dim: 1,
            lo: [lo, 0.0],
            hi: [hi, 0.0],
        })
    }

    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::InvalidMesh(format!(
                "empty rectangle {lo:?} x {hi:?}"
            )));
        }
        Ok(Self { dim: 2, lo, hi })
    }

    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::rectangle([lo, lo], [hi, hi])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }
}

/// Finite element family.  In 1D both kinds reduce to linear intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Linear triangles: every quad is split along its lower-left to
    /// upper-right diagonal.
    P1,
    /// Bilinear quadrilaterals.
    Q1,
}

/// Which sides of the box carry Dirichlet conditions; the rest is Neumann.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirichletSides {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl DirichletSides {
    pub const ALL: Self = Self {
        left: true,
        right: true,
        bottom: true,
        top: true,
    };
    pub const NONE: Self = Self {
        left: false,
        right: false,
        bottom: false,
        top: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// A single cell: vertex ids in local (reference) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// `[left, right]`
    Interval([usize; 2]),
    /// Counter-clockwise triangle.
    Triangle([usize; 3]),
    /// `[(0,0), (1,0), (1,1), (0,1)]` corners of the reference square.
    Quad([usize; 4]),
}

impl Cell {
    pub fn vertices(&self) -> &[usize] {
        match self {
            Cell::Interval(v) => v,
            Cell::Triangle(v) => v,
            Cell::Quad(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeshLevel {
    index: usize,
    dim: usize,
    /// Cells per axis; `cells[1] == 0` in 1D.
    cells: [usize; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    element: ElementKind,
    boundary: Vec<BoundaryKind>,
}

impl MeshLevel {
    fn new(
        index: usize,
        domain: &Domain,
        cells: [usize; 2],
        element: ElementKind,
        sides: DirichletSides,
    ) -> Self {
        let mut level = Self {
            index,
            dim: domain.dim,
            cells,
            lo: domain.lo,
            hi: domain.hi,
            element,
            boundary: Vec::new(),
        };
        let n = level.num_vertices();
        let mut boundary = Vec::with_capacity(n);
        for id in 0..n {
            let (i, k) = level.grid_index(id);
            let on_left = i == 0;
            let on_right = i == cells[0];
            let (on_bottom, on_top) = if level.dim == 2 {
                (k == 0, k == cells[1])
            } else {
                (false, false)
            };
            let kind = if (on_left && sides.left)
                || (on_right && sides.right)
                || (on_bottom && sides.bottom)
                || (on_top && sides.top)
            {
                BoundaryKind::Dirichlet
            } else if on_left || on_right || on_bottom || on_top {
                BoundaryKind::Neumann
            } else {
                BoundaryKind::Interior
            };
            boundary.push(kind);
        }
        level.boundary = boundary;
        level
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self) -> ElementKind {
        self.element
    }

    /// Cells per axis.
    pub fn cells_per_axis(&self) -> [usize; 2] {
        self.cells
    }

    /// Vertices per axis (`1` on the unused axis in 1D).
    pub fn vertices_per_axis(&self) -> [usize; 2] {
        if self.dim == 1 {
            [self.cells[0] + 1, 1]
        } else {
            [self.cells[0] + 1, self.cells[1] + 1]
        }
    }

    pub fn num_vertices(&self) -> usize {
        let [nx, ny] = self.vertices_per_axis();
        nx * ny
    }

    pub fn num_cells(&self) -> usize {
        match (self.dim, self.element) {
            (1, _) => self.cells[0],
            (_, ElementKind::P1) => 2 * self.cells[0] * self.cells[1],
            (_, ElementKind::Q1) => self.cells[0] * self.cells[1],
        }
    }

    /// Mesh spacing per axis.
    pub fn spacing(&self) -> [f64; 2] {
        let hx = (self.hi[0] - self.lo[0]) / self.cells[0] as f64;
        let hy = if self.dim == 2 {
            (self.hi[1] - self.lo[1]) / self.cells[1] as f64
        } else {
            0.0
        };
        [hx, hy]
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    #[inline]
    pub fn vertex_id(&self, i: usize, k: usize) -> usize {
        i + (self.cells[0] + 1) * k
    }

    #[inline]
    pub fn grid_index(&self, id: usize) -> (usize, usize) {
        let nx = self.cells[0] + 1;
        (id % nx, id / nx)
    }

    #[inline]
    fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let t = i as f64 / self.cells[axis] as f64;
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * t
    }

    /// Coordinates of vertex `id`; the second entry is 0 in 1D.
    #[inline]
    pub fn coords(&self, id: usize) -> [f64; 2] {
        let (i, k) = self.grid_index(id);
        let y = if self.dim == 2 { self.axis_coord(1, k) } else { 0.0 };
        [self.axis_coord(0, i), y]
    }

    pub fn boundary_kind(&self, id: usize) -> BoundaryKind {
        self.boundary[id]
    }

    pub fn is_dirichlet(&self, id: usize) -> bool {
        self.boundary[id] == BoundaryKind::Dirichlet
    }

    pub fn dirichlet_mask(&self) -> Vec<bool> {
        self.boundary
            .iter()
            .map(|&b| b == BoundaryKind::Dirichlet)
            .collect()
    }

    /// Visits every cell in a fixed order.
    pub fn for_each_cell(&self, mut f: impl FnMut(Cell)) {
        if self.dim == 1 {
            for i in 0..self.cells[0] {
                f(Cell::Interval([i, i + 1]));
            }
            return;
        }
        for k in 0..self.cells[1] {
            for i in 0..self.cells[0] {
                let v00 = self.vertex_id(i, k);
                let v10 = self.vertex_id(i + 1, k);
                let v11 = self.vertex_id(i + 1, k + 1);
                let v01 = self.vertex_id(i, k + 1);
                match self.element {
                    ElementKind::P1 => {
                        f(Cell::Triangle([v00, v10, v11]));
                        f(Cell::Triangle([v00, v11, v01]));
                    }
                    ElementKind::Q1 => f(Cell::Quad([v00, v10, v11, v01])),
                }
            }
        }
    }

    /// Vertex ids adjacent to `id` (sharing a cell), including `id`, sorted.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let (i, k) = self.grid_index(id);
        if self.dim == 1 {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(self.cells[0]);
            return (lo..=hi).collect();
        }
        let mut out = Vec::with_capacity(9);
        for dk in -1i64..=1 {
            for di in -1i64..=1 {
                let ii = i as i64 + di;
                let kk = k as i64 + dk;
                if ii < 0 || kk < 0 || ii > self.cells[0] as i64 || kk > self.cells[1] as i64 {
                    continue;
                }
                // the split diagonal couples only (+1,+1) and (-1,-1)
                if self.element == ElementKind::P1 && di * dk == -1 {
                    continue;
                }
                out.push(self.vertex_id(ii as usize, kk as usize));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    domain: Domain,
    element: ElementKind,
    sides: DirichletSides,
    levels: Vec<MeshLevel>,
}

impl MeshHierarchy {
    /// Builds levels `0..=finest` by uniform refinement of a
    /// `coarse_cells`-per-axis grid.  In 1D `coarse_cells[1]` is ignored and
    /// `element` only tags the hierarchy (both kinds are intervals).
    pub fn build(
        domain: Domain,
        coarse_cells: [usize; 2],
        finest: usize,
        element: ElementKind,
        sides: DirichletSides,
    ) -> Result<Self> {
        if coarse_cells[0] == 0 || (domain.dim == 2 && coarse_cells[1] == 0) {
            return Err(Error::InvalidMesh(format!(
                "coarse mesh needs at least one cell per axis, got {coarse_cells:?}"
            )));
        }
        if finest > 24 {
            return Err(Error::InvalidMesh(format!("{finest} refinements is too many")));
        }
        let mut levels = Vec::with_capacity(finest + 1);
        for j in 0..=finest {
            let scale = 1usize << j;
            let cells = if domain.dim == 1 {
                [coarse_cells[0] * scale, 0]
            } else {
                [coarse_cells[0] * scale, coarse_cells[1] * scale]
            };
            levels.push(MeshLevel::new(j, &domain, cells, element, sides));
        }
        Ok(Self {
            domain,
            element,
            sides,
            levels,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn element(&self) -> ElementKind {
        self.element
    }

    pub fn dirichlet_sides(&self) -> DirichletSides {
        self.sides
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    /// Index `J` of the finest level.
    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> &MeshLevel {
        &self.levels[j]
    }

    pub fn try_level(&self, j: usize) -> Result<&MeshLevel> {
        self.levels.get(j).ok_or(Error::LevelOutOfRange {
            level: j,
            levels: self.levels.len(),
        })
    }

    pub fn levels(&self) -> &[MeshLevel] {
        &self.levels
    }

    /// Degrees of freedom `m_j` per level.
    pub fn dofs(&self) -> Vec<usize> {
        self.levels.iter().map(MeshLevel::num_vertices).collect()
    }

    /// Fine-level id (on level `j + 1`) of coarse vertex `k` on level `j`.
    pub fn coarse_to_fine_vertex(&self, j: usize, k: usize) -> Result<usize> {
        if j + 1 >= self.levels.len() {
            return Err(Error::LevelOutOfRange {
                level: j,
                levels: self.levels.len(),
            });
        }
        let coarse = &self.levels[j];
        if k >= coarse.num_vertices() {
            return Err(Error::VertexOutOfRange {
                level: j,
                id: k,
                count: coarse.num_vertices(),
            });
        }
        let (i, kk) = coarse.grid_index(k);
        Ok(self.levels[j + 1].vertex_id(2 * i, 2 * kk))
    }
}
