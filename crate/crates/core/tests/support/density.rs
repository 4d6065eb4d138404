//! Exact density-matrix simulation of the two-pair circuits used to
//! cross-check the analytic Bell-diagonal maps. Qubit 0 is the most
//! significant bit of a basis index.

#![allow(dead_code)]

use num_complex::Complex64 as C;

#[derive(Clone, Debug)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<C>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        Self {
            dim,
            data: rows.iter().map(|&x| C::new(x, 0.0)).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (n, m) = (self.dim, other.dim);
        let mut out = Matrix::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = self[(i, j)] * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &Matrix) -> Matrix {
        u.mul(self).mul(&u.dagger())
    }

    pub fn trace(&self) -> C {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `⟨v| M |v⟩`
    pub fn expectation(&self, v: &[C]) -> C {
        let n = self.dim;
        let mut acc = C::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += v[i].conj() * self[(i, j)] * v[j];
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.dim + j]
    }
}

pub fn pauli_x() -> Matrix {
    Matrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_z() -> Matrix {
    Matrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
}

/// `exp(-i θ X / 2)`
pub fn rx(theta: f64) -> Matrix {
    let c = C::new((theta / 2.0).cos(), 0.0);
    let s = C::new(0.0, -(theta / 2.0).sin());
    Matrix {
        dim: 2,
        data: vec![c, s, s, c],
    }
}

/// Embeds a single-qubit gate acting on `qubit` of an `n`-qubit register.
pub fn on_qubit(n: usize, qubit: usize, gate: &Matrix) -> Matrix {
    let mut out = Matrix::identity(1);
    for q in 0..n {
        let factor = if q == qubit {
            gate.clone()
        } else {
            Matrix::identity(2)
        };
        out = out.kron(&factor);
    }
    out
}

fn bit(index: usize, n: usize, qubit: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

pub fn cnot(n: usize, control: usize, target: usize) -> Matrix {
    let dim = 1 << n;
    let mut out = Matrix::zeros(dim);
    for i in 0..dim {
        let j = if bit(i, n, control) == 1 {
            i ^ (1 << (n - 1 - target))
        } else {
            i
        };
        out[(j, i)] = C::new(1.0, 0.0);
    }
    out
}

/// Reduced state on `keep` (in ascending qubit order).
pub fn partial_trace(rho: &Matrix, n: usize, keep: &[usize]) -> Matrix {
    let k = keep.len();
    let mut out = Matrix::zeros(1 << k);
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let compose = |kept_bits: usize, traced_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let b = (kept_bits >> (k - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let b = (traced_bits >> (traced.len() - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        idx
    };
    for i in 0..(1 << k) {
        for j in 0..(1 << k) {
            let mut acc = C::new(0.0, 0.0);
            for t in 0..(1 << traced.len()) {
                acc += rho[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Bell vectors in the order (Φ⁺, Ψ⁻, Ψ⁺, Φ⁻).
pub fn bell_vectors() -> [[C; 4]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |a: f64, b: f64, c: f64, d: f64| [C::new(a, 0.0), C::new(b, 0.0), C::new(c, 0.0), C::new(d, 0.0)];
    [
        r(h, 0.0, 0.0, h),
        r(0.0, h, -h, 0.0),
        r(0.0, h, h, 0.0),
        r(h, 0.0, 0.0, -h),
    ]
}

pub fn bell_diagonal(coeffs: [f64; 4]) -> Matrix {
    let mut rho = Matrix::zeros(4);
    for (k, v) in bell_vectors().iter().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] += v[i] * v[j].conj() * coeffs[k];
            }
        }
    }
    rho
}

pub fn bell_coefficients(rho: &Matrix) -> [f64; 4] {
    let vs = bell_vectors();
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = rho.expectation(&vs[k]).re;
    }
    out
}

/// Largest magnitude of an off-diagonal element in the Bell basis.
pub fn bell_off_diagonal(rho: &Matrix) -> f64 {
    let vs = bell_vectors();
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            if a == b {
                continue;
            }
            let mut acc = C::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    acc += vs[a][i].conj() * rho[(i, j)] * vs[b][j];
                }
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Two-pair DEJMPS circuit: local rotations Rx(π/2) on Alice's qubits and
/// Rx(-π/2) on Bob's, bilateral CNOT, Z measurement of the target pair and
/// post-selection on coincident outcomes. Returns the Bell coefficients of
/// the kept pair, the success probability, and the worst Bell-basis
/// coherence of the output.
pub fn dejmps_circuit(pair1: [f64; 4], pair2: [f64; 4]) -> ([f64; 4], f64, f64) {
    // qubits: 0 = A1, 1 = B1, 2 = A2, 3 = B2
    let n = 4;
    let rho = bell_diagonal(pair1).kron(&bell_diagonal(pair2));
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut u = Matrix::identity(16);
    for (q, theta) in [(0, half_pi), (2, half_pi), (1, -half_pi), (3, -half_pi)] {
        u = on_qubit(n, q, &rx(theta)).mul(&u);
    }
    u = cnot(n, 0, 2).mul(&u);
    u = cnot(n, 1, 3).mul(&u);
    let rho = rho.conjugate_by(&u);

    let mut projector = Matrix::zeros(16);
    for i in 0..16 {
        if bit(i, n, 2) == bit(i, n, 3) {
            projector[(i, i)] = C::new(1.0, 0.0);
        }
    }
    let kept = projector.mul(&rho).mul(&projector);
    let success = kept.trace().re;
    let reduced = partial_trace(&kept, n, &[0, 1]).scale(1.0 / success);
    (
        bell_coefficients(&reduced),
        success,
        bell_off_diagonal(&reduced),
    )
}

/// Entanglement swapping by an explicit Bell measurement on the middle
/// qubits of `left ⊗ right`, followed by the Pauli correction on the far
/// qubit that restores Φ⁺ for perfect inputs.
pub fn swap_circuit(left: [f64; 4], right: [f64; 4]) -> [f64; 4] {
    // qubits: 0 = A, 1 = C1, 2 = C2, 3 = B
    let n = 4;
    let corrections = swap_corrections();
    let rho = bell_diagonal(left).kron(&bell_diagonal(right));
    let mut total = Matrix::zeros(4);
    for (k, correction) in corrections.iter().enumerate() {
        let post = measure_middle(&rho, k);
        let fixed = post.conjugate_by(&Matrix::identity(2).kron(correction));
        total = total.add(&fixed);
    }
    let _ = n;
    bell_coefficients(&total)
}

/// Unnormalized state of (A, B) after projecting (C1, C2) onto Bell state `k`.
fn measure_middle(rho: &Matrix, k: usize) -> Matrix {
    let n = 4;
    let v = bell_vectors()[k];
    // projector |v⟩⟨v| on qubits 1,2, identity on 0 and 3
    let mut p_mid = Matrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            p_mid[(i, j)] = v[i] * v[j].conj();
        }
    }
    let projector = Matrix::identity(2).kron(&p_mid).kron(&Matrix::identity(2));
    let post = projector.mul(rho).mul(&projector);
    partial_trace(&post, n, &[0, 3])
}

fn swap_corrections() -> Vec<Matrix> {
    let x = pauli_x();
    let z = pauli_z();
    let candidates = [Matrix::identity(2), x.clone(), z.clone(), x.mul(&z)];
    let perfect = bell_diagonal([1.0, 0.0, 0.0, 0.0]).kron(&bell_diagonal([1.0, 0.0, 0.0, 0.0]));
    (0..4)
        .map(|k| {
            let post = measure_middle(&perfect, k);
            let norm = post.trace().re;
            candidates
                .iter()
                .find(|p| {
                    let fixed = post.conjugate_by(&Matrix::identity(2).kron(p));
                    (bell_coefficients(&fixed)[0] / norm - 1.0).abs() < 1e-12
                })
                .expect("some Pauli restores the ideal pair")
                .clone()
        })
        .collect()
}

/// Random Bell-diagonal coefficients from a deterministic generator.
pub fn random_coeffs(next: &mut impl FnMut() -> f64) -> [f64; 4] {
    let w = [next(), next(), next(), next()];
    let sum: f64 = w.iter().sum();
    w.map(|x| x / sum)
}
