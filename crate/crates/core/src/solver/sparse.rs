use std::io::Write;

use crate::block::{self, Block, Vec4, ZERO4, ZERO_BLOCK};
use crate::mesh::LeafMesh;

/// Block-sparse matrix with 4×4 blocks in compressed-row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    blocks: Vec<Block>,
    diag: Vec<usize>,
}

impl BlockCsr {
    /// Zero matrix with the cell-adjacency pattern of `mesh` (self plus face neighbors).
    pub fn with_mesh_pattern(mesh: &LeafMesh) -> Self {
        let rows = (0..mesh.num_cells()).map(|i| {
            let mut cols: Vec<usize> = std::iter::once(i).chain(mesh.neighbors(i)).collect();
            cols.sort_unstable();
            cols.dedup();
            cols
        });
        Self::from_pattern(mesh.num_cells(), rows)
    }

    /// Zero matrix from per-row sorted column lists; every row must contain its diagonal.
    pub fn from_pattern<I>(n: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(n);
        for (i, r) in rows.into_iter().enumerate() {
            let d = r.binary_search(&i).expect("pattern row lacks its diagonal");
            diag.push(cols.len() + d);
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        assert_eq!(row_ptr.len(), n + 1);
        let nnz = cols.len();
        Self {
            n,
            row_ptr,
            cols,
            blocks: vec![ZERO_BLOCK; nnz],
            diag,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_blocks(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[Block]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.blocks[r])
    }

    pub fn diag_block(&self, i: usize) -> &Block {
        &self.blocks[self.diag[i]]
    }

    pub fn diag_block_mut(&mut self, i: usize) -> &mut Block {
        &mut self.blocks[self.diag[i]]
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&Block> {
        self.position(i, j).map(|p| &self.blocks[p])
    }

    /// Panics if `(i, j)` is outside the pattern.
    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut Block {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("block ({i}, {j}) outside sparsity pattern"));
        &mut self.blocks[p]
    }

    pub fn add_to(&mut self, i: usize, j: usize, b: &Block, s: f64) {
        block::add_scaled(self.block_mut(i, j), s, b);
    }

    pub fn matvec(&self, x: &[Vec4]) -> Vec<Vec4> {
        let mut y = vec![ZERO4; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Vec4], y: &mut [Vec4]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO4;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                block::matvec_add(&mut acc, &self.blocks[p], &x[self.cols[p]]);
            }
            *yi = acc;
        }
    }

    /// `Aᵀ x` without forming the transpose.
    pub fn matvec_transpose(&self, x: &[Vec4]) -> Vec<Vec4> {
        let mut y = vec![ZERO4; self.n];
        for (i, xi) in x.iter().enumerate() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let bt = block::transpose(&self.blocks[p]);
                block::matvec_add(&mut y[self.cols[p]], &bt, xi);
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, Block)>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                rows[self.cols[p]].push((i, block::transpose(&self.blocks[p])));
            }
        }
        let mut out = Self::from_pattern(
            self.n,
            rows.iter().map(|r| r.iter().map(|(j, _)| *j).collect::<Vec<_>>()),
        );
        for (i, r) in rows.into_iter().enumerate() {
            for (j, b) in r {
                *out.block_mut(i, j) = b;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = 4 * self.n;
        let mut d = vec![vec![0.0; m]; m];
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                for a in 0..4 {
                    for b in 0..4 {
                        d[4 * i + a][4 * j + b] = self.blocks[p][a][b];
                    }
                }
            }
        }
        d
    }

    /// Coordinate-format dump: one `row col value` line per stored scalar entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% rows cols entries")?;
        writeln!(w, "{} {} {}", 4 * self.n, 4 * self.n, 16 * self.nnz_blocks())?;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                for a in 0..4 {
                    for b in 0..4 {
                        writeln!(w, "{} {} {:.17e}", 4 * i + a, 4 * j + b, self.blocks[p][a][b])?;
                    }
                }
            }
        }
        Ok(())
    }
}
