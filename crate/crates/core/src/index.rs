//! Integer index space: cells, boxes and box-shaped arrays.

use std::ops::{Index, IndexMut};

/// Coordinate direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const ALL: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }

    /// Unit step along this axis.
    pub fn unit(self) -> Cell {
        match self {
            Axis::X => Cell::new(1, 0),
            Axis::Y => Cell::new(0, 1),
        }
    }
}

/// A cell index `(i, j)` on some level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub i: i32,
    pub j: i32,
}

impl Cell {
    pub const fn new(i: i32, j: i32) -> Self {
        Cell { i, j }
    }

    pub fn shift(self, di: i32, dj: i32) -> Cell {
        Cell::new(self.i + di, self.j + dj)
    }

    pub fn step(self, axis: Axis, n: i32) -> Cell {
        match axis {
            Axis::X => self.shift(n, 0),
            Axis::Y => self.shift(0, n),
        }
    }

    pub fn get(self, axis: Axis) -> i32 {
        match axis {
            Axis::X => self.i,
            Axis::Y => self.j,
        }
    }

    /// Parent cell on the next coarser level.
    pub fn coarsen(self, r: i32) -> Cell {
        Cell::new(self.i.div_euclid(r), self.j.div_euclid(r))
    }

    /// Row-major ordering key (j first), used for deterministic traversal.
    pub fn row_major(self) -> (i32, i32) {
        (self.j, self.i)
    }
}

/// Inclusive cell-index rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IndexBox {
    pub lo: Cell,
    pub hi: Cell,
}

impl IndexBox {
    pub fn new(lo: Cell, hi: Cell) -> Self {
        IndexBox { lo, hi }
    }

    pub fn from_size(nx: i32, ny: i32) -> Self {
        IndexBox::new(Cell::new(0, 0), Cell::new(nx - 1, ny - 1))
    }

    pub fn is_empty(&self) -> bool {
        self.hi.i < self.lo.i || self.hi.j < self.lo.j
    }

    pub fn nx(&self) -> i32 {
        (self.hi.i - self.lo.i + 1).max(0)
    }

    pub fn ny(&self) -> i32 {
        (self.hi.j - self.lo.j + 1).max(0)
    }

    pub fn len(&self) -> usize {
        (self.nx() as usize) * (self.ny() as usize)
    }

    pub fn size(&self, axis: Axis) -> i32 {
        match axis {
            Axis::X => self.nx(),
            Axis::Y => self.ny(),
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.i >= self.lo.i && c.i <= self.hi.i && c.j >= self.lo.j && c.j <= self.hi.j
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        other.is_empty() || (self.contains(other.lo) && self.contains(other.hi))
    }

    pub fn grow(&self, n: i32) -> IndexBox {
        IndexBox::new(self.lo.shift(-n, -n), self.hi.shift(n, n))
    }

    pub fn intersect(&self, other: &IndexBox) -> IndexBox {
        IndexBox::new(
            Cell::new(self.lo.i.max(other.lo.i), self.lo.j.max(other.lo.j)),
            Cell::new(self.hi.i.min(other.hi.i), self.hi.j.min(other.hi.j)),
        )
    }

    pub fn refine(&self, r: i32) -> IndexBox {
        IndexBox::new(
            Cell::new(self.lo.i * r, self.lo.j * r),
            Cell::new(self.hi.i * r + r - 1, self.hi.j * r + r - 1),
        )
    }

    pub fn coarsen(&self, r: i32) -> IndexBox {
        IndexBox::new(self.lo.coarsen(r), self.hi.coarsen(r))
    }

    /// True when the box is aligned to a coarsening by `r`.
    pub fn is_coarsenable(&self, r: i32) -> bool {
        self.coarsen(r).refine(r) == *self
    }

    /// Cells in row-major order (i fastest).
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let b = *self;
        (b.lo.j..=b.hi.j).flat_map(move |j| (b.lo.i..=b.hi.i).map(move |i| Cell::new(i, j)))
    }

    /// Box of faces normal to `axis` bounding the cells of this box.
    pub fn faces(&self, axis: Axis) -> IndexBox {
        match axis {
            Axis::X => IndexBox::new(self.lo, self.hi.shift(1, 0)),
            Axis::Y => IndexBox::new(self.lo, self.hi.shift(0, 1)),
        }
    }

    /// Shrink by one cell on both ends of `axis`.
    pub fn shrink_axis(&self, axis: Axis) -> IndexBox {
        let u = axis.unit();
        IndexBox::new(self.lo.shift(u.i, u.j), self.hi.shift(-u.i, -u.j))
    }

    fn offset(&self, c: Cell) -> usize {
        debug_assert!(self.contains(c), "{c:?} outside {self:?}");
        ((c.j - self.lo.j) as usize) * (self.nx() as usize) + (c.i - self.lo.i) as usize
    }
}

/// Dense array over an index box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxArray<T> {
    bx: IndexBox,
    data: Vec<T>,
}

impl<T: Clone> BoxArray<T> {
    pub fn new(bx: IndexBox, fill: T) -> Self {
        BoxArray {
            bx,
            data: vec![fill; bx.len()],
        }
    }

    pub fn from_fn(bx: IndexBox, mut f: impl FnMut(Cell) -> T) -> Self {
        BoxArray {
            bx,
            data: bx.cells().map(&mut f).collect(),
        }
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v.clone());
    }
}

impl<T> BoxArray<T> {
    pub fn domain(&self) -> &IndexBox {
        &self.bx
    }

    pub fn get(&self, c: Cell) -> Option<&T> {
        if self.bx.contains(c) {
            Some(&self.data[self.bx.offset(c)])
        } else {
            None
        }
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &T)> {
        self.bx.cells().zip(self.data.iter())
    }

    pub fn linear_index(&self, c: Cell) -> usize {
        self.bx.offset(c)
    }

    pub fn cell_at(&self, k: usize) -> Cell {
        let nx = self.bx.nx() as usize;
        Cell::new(self.bx.lo.i + (k % nx) as i32, self.bx.lo.j + (k / nx) as i32)
    }
}

impl<T> Index<Cell> for BoxArray<T> {
    type Output = T;
    fn index(&self, c: Cell) -> &T {
        &self.data[self.bx.offset(c)]
    }
}

impl<T> IndexMut<Cell> for BoxArray<T> {
    fn index_mut(&mut self, c: Cell) -> &mut T {
        let k = self.bx.offset(c);
        &mut self.data[k]
    }
}

/// Face-centered data in both directions for a box of cells. The x-face
/// `(i, j)` is the lower x face of cell `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceArrays<T> {
    pub x: BoxArray<T>,
    pub y: BoxArray<T>,
}

impl<T: Clone> FaceArrays<T> {
    pub fn new(cells: IndexBox, fill: T) -> Self {
        FaceArrays {
            x: BoxArray::new(cells.faces(Axis::X), fill.clone()),
            y: BoxArray::new(cells.faces(Axis::Y), fill),
        }
    }
}

impl<T> FaceArrays<T> {
    pub fn dir(&self, axis: Axis) -> &BoxArray<T> {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }

    pub fn dir_mut(&mut self, axis: Axis) -> &mut BoxArray<T> {
        match axis {
            Axis::X => &mut self.x,
            Axis::Y => &mut self.y,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_coarsen_roundtrip() {
        let b = IndexBox::new(Cell::new(-3, 2), Cell::new(4, 7));
        assert_eq!(b.refine(2).coarsen(2), b);
        assert!(b.refine(2).is_coarsenable(2));
        assert!(!IndexBox::new(Cell::new(1, 0), Cell::new(4, 3)).is_coarsenable(2));
        assert_eq!(Cell::new(-1, -3).coarsen(2), Cell::new(-1, -2));
    }

    #[test]
    fn array_layout_is_row_major() {
        let b = IndexBox::new(Cell::new(-1, -1), Cell::new(1, 0));
        let a = BoxArray::from_fn(b, |c| (c.i, c.j));
        assert_eq!(a.values()[1], (0, -1));
        assert_eq!(a.cell_at(4), Cell::new(0, 0));
        assert_eq!(a[Cell::new(1, 0)], (1, 0));
        assert!(a.get(Cell::new(2, 0)).is_none());
    }
}
