//! Small fixed-size helpers for 4-vectors and 4×4 blocks.

use nalgebra::Matrix4;

pub type Vec4 = [f64; 4];
pub type Block = [[f64; 4]; 4];

pub const ZERO4: Vec4 = [0.0; 4];
pub const ZERO_BLOCK: Block = [[0.0; 4]; 4];

#[inline]
pub fn identity() -> Block {
    let mut b = ZERO_BLOCK;
    for (i, row) in b.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    b
}

#[inline]
pub fn scaled_identity(s: f64) -> Block {
    let mut b = ZERO_BLOCK;
    for (i, row) in b.iter_mut().enumerate() {
        row[i] = s;
    }
    b
}

#[inline]
pub fn matvec(a: &Block, x: &Vec4) -> Vec4 {
    let mut y = ZERO4;
    for i in 0..4 {
        y[i] = a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] + a[i][3] * x[3];
    }
    y
}

/// `y -= a * x`
#[inline]
pub fn matvec_sub(y: &mut Vec4, a: &Block, x: &Vec4) {
    for i in 0..4 {
        y[i] -= a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] + a[i][3] * x[3];
    }
}

/// `y += a * x`
#[inline]
pub fn matvec_add(y: &mut Vec4, a: &Block, x: &Vec4) {
    for i in 0..4 {
        y[i] += a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2] + a[i][3] * x[3];
    }
}

#[inline]
pub fn matmul(a: &Block, b: &Block) -> Block {
    let mut c = ZERO_BLOCK;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j] + a[i][3] * b[3][j];
        }
    }
    c
}

#[inline]
pub fn transpose(a: &Block) -> Block {
    let mut t = ZERO_BLOCK;
    for i in 0..4 {
        for j in 0..4 {
            t[j][i] = a[i][j];
        }
    }
    t
}

#[inline]
pub fn add_assign(a: &mut Block, b: &Block) {
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] += b[i][j];
        }
    }
}

#[inline]
pub fn add_scaled(a: &mut Block, s: f64, b: &Block) {
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] += s * b[i][j];
        }
    }
}

#[inline]
pub fn scale(a: &Block, s: f64) -> Block {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    c
}

/// Outer product `x yᵀ`.
#[inline]
pub fn outer(x: &Vec4, y: &Vec4) -> Block {
    let mut c = ZERO_BLOCK;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = x[i] * y[j];
        }
    }
    c
}

pub fn inverse(a: &Block) -> Option<Block> {
    let m = Matrix4::from_fn(|i, j| a[i][j]);
    let inv = m.try_inverse()?;
    let mut out = ZERO_BLOCK;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = inv[(i, j)];
        }
    }
    Some(out)
}

#[inline]
pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn axpy(y: &mut Vec4, s: f64, x: &Vec4) {
    for i in 0..4 {
        y[i] += s * x[i];
    }
}

pub fn frobenius(a: &Block) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn trace(a: &Block) -> f64 {
    (0..4).map(|i| a[i][i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a: Block = [
            [4.0, 1.0, 0.0, 0.5],
            [0.0, 3.0, 1.0, 0.0],
            [1.0, 0.0, 5.0, 1.0],
            [0.0, 2.0, 0.0, 6.0],
        ];
        let inv = inverse(&a).unwrap();
        let id = matmul(&a, &inv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_block_has_no_inverse() {
        assert!(inverse(&ZERO_BLOCK).is_none());
    }
}
