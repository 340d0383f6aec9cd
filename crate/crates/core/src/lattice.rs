//! Exact integer linear systems `A x = b` over ℤ, solved through the Smith
//! normal form `U A V = D`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dense integer matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        IntMatrix { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul_vec(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| (0..self.cols).map(|j| &self[(i, j)] * &x[j]).sum()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -std::mem::take(&mut self[(i, j)]);
            self[(i, j)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// `U A V = D` with `D` diagonal and positive on its first `rank`
/// entries. `U` is not stored; row operations are replayed onto right-hand
/// sides through [`SmithForm::left_apply`].
///
/// Elimination combines rows and columns with 2x2 unimodular Bezout
/// transforms, which keeps entry growth modest. The diagonal is not
/// normalised in place; [`SmithForm::invariant_factors`] gives the
/// divisibility chain.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub v: IntMatrix,
    row_ops: Vec<RowOp>,
    rows: usize,
}

/// `(x, y) <- (a x + b y, c x + d y)` on two rows, determinant one.
#[derive(Debug, Clone)]
struct RowOp {
    x: usize,
    y: usize,
    m: [BigInt; 4],
}

fn combine(vx: &BigInt, vy: &BigInt, m: &[BigInt; 4]) -> (BigInt, BigInt) {
    (&m[0] * vx + &m[1] * vy, &m[2] * vx + &m[3] * vy)
}

fn swap_matrix() -> [BigInt; 4] {
    [BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero()]
}

/// Unimodular matrix sending `(a, b)` to `(gcd, 0)`, for `a != 0`.
fn bezout(a: &BigInt, b: &BigInt) -> [BigInt; 4] {
    if (b % a).is_zero() {
        return [BigInt::one(), BigInt::zero(), -(b / a), BigInt::one()];
    }
    let e = a.extended_gcd(b);
    [e.x, e.y, -(b / &e.gcd), a / &e.gcd]
}

impl IntMatrix {
    fn combine_rows(&mut self, x: usize, y: usize, m: &[BigInt; 4]) {
        for j in 0..self.cols {
            let (nx, ny) = combine(&self[(x, j)], &self[(y, j)], m);
            self[(x, j)] = nx;
            self[(y, j)] = ny;
        }
    }

    fn combine_cols(&mut self, x: usize, y: usize, m: &[BigInt; 4]) {
        for i in 0..self.rows {
            let (nx, ny) = combine(&self[(i, x)], &self[(i, y)], m);
            self[(i, x)] = nx;
            self[(i, y)] = ny;
        }
    }
}

impl SmithForm {
    pub fn new(a: &IntMatrix) -> Self {
        let mut d = a.clone();
        let mut v = IntMatrix::identity(a.cols);
        let mut row_ops = Vec::new();
        let rank_bound = a.rows.min(a.cols);
        let mut t = 0;
        while t < rank_bound {
            // pivot: smallest nonzero magnitude in the remaining block
            let mut best: Option<(usize, usize)> = None;
            for i in t..d.rows {
                for j in t..d.cols {
                    if !d[(i, j)].is_zero()
                        && best.is_none_or(|(bi, bj)| d[(i, j)].magnitude() < d[(bi, bj)].magnitude())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            if pi != t {
                d.swap_rows(t, pi);
                row_ops.push(RowOp { x: t, y: pi, m: swap_matrix() });
            }
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            loop {
                for i in t + 1..d.rows {
                    if !d[(i, t)].is_zero() {
                        let m = bezout(&d[(t, t)], &d[(i, t)]);
                        d.combine_rows(t, i, &m);
                        row_ops.push(RowOp { x: t, y: i, m });
                    }
                }
                for j in t + 1..d.cols {
                    if !d[(t, j)].is_zero() {
                        let [a, b, c, e] = bezout(&d[(t, t)], &d[(t, j)]);
                        // column form: (col_t, col_j) <- (a col_t + b col_j, c col_t + e col_j)
                        let m = [a, b, c, e];
                        d.combine_cols(t, j, &m);
                        v.combine_cols(t, j, &m);
                    }
                }
                if (t + 1..d.rows).all(|i| d[(i, t)].is_zero()) {
                    break;
                }
            }
            if d[(t, t)].is_negative() {
                d.negate_col(t);
                v.negate_col(t);
            }
            t += 1;
        }
        let diagonal = (0..t).map(|i| d[(i, i)].clone()).collect();
        SmithForm { diagonal, v, row_ops, rows: a.rows }
    }

    pub fn rank(&self) -> usize {
        self.diagonal.len()
    }

    /// The invariant factors of the matrix: positive, each dividing the
    /// next.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let mut f = self.diagonal.clone();
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                let (g, l) = (f[i].gcd(&f[j]), f[i].lcm(&f[j]));
                f[i] = g;
                f[j] = l;
            }
        }
        f
    }

    /// `U b`.
    pub fn left_apply(&self, b: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(b.len(), self.rows);
        let mut c = b.to_vec();
        for op in &self.row_ops {
            let (nx, ny) = combine(&c[op.x], &c[op.y], &op.m);
            c[op.x] = nx;
            c[op.y] = ny;
        }
        c
    }

    /// An integer solution of `A x = b`, or `None` if there is none. Free
    /// coordinates of `V⁻¹ x` are set to zero.
    pub fn solve(&self, b: &[BigInt]) -> Option<Vec<BigInt>> {
        let c = self.left_apply(b);
        let r = self.rank();
        if c[r..].iter().any(|x| !x.is_zero()) {
            return None;
        }
        let mut y = vec![BigInt::zero(); self.v.cols];
        for i in 0..r {
            let (q, rem) = c[i].div_rem(&self.diagonal[i]);
            if !rem.is_zero() {
                return None;
            }
            y[i] = q;
        }
        Some(self.v.mul_vec(&y))
    }
}

/// Solves `A x = b` over the integers.
pub fn solve_integer_system(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(a.rows, b.len());
    if a.cols == 0 {
        return b.iter().all(Zero::is_zero).then(Vec::new);
    }
    SmithForm::new(a).solve(b)
}
