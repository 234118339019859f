//! Small dense vector/matrix helpers.
//!
//! Jacobians throughout the crate use the transposed layout: entry `(i, j)`
//! of a map `f` is `∂f^j / ∂x^i`, i.e. rows are indexed by the *input*
//! component and columns by the *output* component. Under this layout,
//! backpropagating a cotangent through `f` is a plain matrix–vector product
//! ([`Jacobian::pullback`]), and pushing an input perturbation forward is the
//! transposed product ([`Jacobian::pushforward`]).

/// Dense Jacobian in input-major layout: `entry(i, j) = ∂f^j/∂x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    in_dim: usize,
    out_dim: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Jacobian {
            in_dim,
            out_dim,
            data: vec![0.0; in_dim * out_dim],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut j = Self::zeros(n, n);
        for i in 0..n {
            j.data[i * n + i] = 1.0;
        }
        j
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let in_dim = rows.len();
        let out_dim = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(in_dim * out_dim);
        for r in rows {
            assert_eq!(r.len(), out_dim, "ragged jacobian rows");
            data.extend_from_slice(r);
        }
        Jacobian {
            in_dim,
            out_dim,
            data,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.out_dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.out_dim + j] = v;
    }

    /// `(i, j) += v`.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.out_dim + j] += v;
    }

    /// Backpropagate an output-space cotangent: `r[i] = Σ_j entry(i,j)·c[j]`.
    ///
    /// In the transposed-Jacobian notation this is the product `(∂f/∂x)·c`.
    pub fn pullback(&self, cotangent: &[f64]) -> Vec<f64> {
        assert_eq!(cotangent.len(), self.out_dim, "cotangent dim");
        let mut out = vec![0.0; self.in_dim];
        for i in 0..self.in_dim {
            let row = &self.data[i * self.out_dim..(i + 1) * self.out_dim];
            out[i] = dot(row, cotangent);
        }
        out
    }

    /// Push an input perturbation forward: `r[j] = Σ_i d[i]·entry(i,j)`.
    pub fn pushforward(&self, direction: &[f64]) -> Vec<f64> {
        assert_eq!(direction.len(), self.in_dim, "direction dim");
        let mut out = vec![0.0; self.out_dim];
        for i in 0..self.in_dim {
            let row = &self.data[i * self.out_dim..(i + 1) * self.out_dim];
            for j in 0..self.out_dim {
                out[j] += direction[i] * row[j];
            }
        }
        out
    }

    /// Rank-one product `a·bᵀ` in the transposed layout: `entry(i,j) = a[i]·b[j]`.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        let mut j = Self::zeros(a.len(), b.len());
        for (i, &ai) in a.iter().enumerate() {
            for (k, &bk) in b.iter().enumerate() {
                j.data[i * b.len() + k] = ai * bk;
            }
        }
        j
    }

    /// Entrywise `self + s·other`.
    pub fn add_scaled(&self, other: &Jacobian, s: f64) -> Self {
        assert_eq!(self.in_dim, other.in_dim);
        assert_eq!(self.out_dim, other.out_dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + s * b)
            .collect();
        Jacobian {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            data,
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a + s·b`.
pub fn add_scaled(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a += s·b` in place.
pub fn axpy(a: &mut [f64], b: &[f64], s: f64) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// `γ^λ` with the exact short-circuits the reduction properties rely on:
/// `γ = 1` gives exactly 1 and `λ = 1` gives exactly `γ`.
pub fn gamma_pow(gamma: f64, lambda: f64) -> f64 {
    assert!(gamma > 0.0, "discount factor must be positive");
    if gamma == 1.0 {
        1.0
    } else if lambda == 1.0 {
        gamma
    } else {
        (lambda * gamma.ln()).exp()
    }
}
