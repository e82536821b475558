//! Seeded random generators for matrices and maps.
//!
//! Every generator draws from a ChaCha8 stream, so a seed fully determines
//! its output on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cneg::{CnegForm, CnegTerm};
use crate::linalg::{self, c, identity, real, trace, Mat, C64};
use crate::qorder::{eps_deform, resolvent_subordinate};
use crate::qpure::make_invertible_qpure;
use crate::superop::{self, from_kraus, state_map, KrausSet, SuperOp};

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Standard complex Gaussian (unit variance).
    pub fn complex(&mut self) -> C64 {
        c(self.normal(), self.normal()) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn random_matrix(&mut self, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(rows, cols, |_, _| self.complex())
    }

    pub fn random_hermitian(&mut self, n: usize) -> Mat {
        linalg::hermitian_part(&self.random_matrix(n, n))
    }

    /// Haar-like unitary: polar factor of a complex Gaussian matrix.
    pub fn random_unitary(&mut self, n: usize) -> Mat {
        linalg::polar_factor(&self.random_matrix(n, n))
    }

    /// Density matrix of the given rank (trace one).
    pub fn random_density(&mut self, n: usize, rank: usize) -> Mat {
        let x = self.random_matrix(n, rank);
        let d = &x * x.adjoint();
        let tr = trace(&d).re;
        let d = d / real(tr);
        linalg::hermitian_part(&d)
    }

    /// Full-rank density with smallest eigenvalue bounded away from zero.
    pub fn random_faithful_density(&mut self, n: usize) -> Mat {
        let d = self.random_density(n, n);
        let mixed = d * real(0.8) + identity(n) * real(0.2 / n as f64);
        linalg::hermitian_part(&mixed)
    }

    /// `r` Kraus operators for a map `M_n -> M_m`.
    pub fn random_kraus(&mut self, n: usize, m: usize, r: usize) -> KrausSet {
        loop {
            let ops: Vec<Mat> = (0..r).map(|_| self.random_matrix(m, n)).collect();
            if let Ok(k) = KrausSet::new(ops) {
                return k;
            }
        }
    }

    pub fn random_cp_map(&mut self, n: usize, r: usize) -> SuperOp {
        from_kraus(&self.random_kraus(n, n, r.min(n * n)))
    }

    /// Arbitrary (generally non-positive) map `M_n -> M_m`.
    pub fn random_superop(&mut self, n: usize, m: usize) -> SuperOp {
        SuperOp::from_matrix(n, m, self.random_matrix(m * m, n * n)).expect("shape")
    }

    /// Self-adjoint map with an indefinite Choi matrix in general.
    pub fn random_hermitian_preserving(&mut self, n: usize) -> SuperOp {
        let ch = superop::ChoiMatrix { dim_in: n, dim_out: n, matrix: self.random_hermitian(n * n) };
        superop::from_choi(&ch).expect("shape")
    }

    /// Real vector summing to zero.
    pub fn random_lambdas(&mut self, n: usize) -> Vec<f64> {
        let mut l: Vec<f64> = (0..n).map(|_| self.normal()).collect();
        let mean = l.iter().sum::<f64>() / n as f64;
        for x in &mut l {
            *x -= mean;
        }
        let drift: f64 = l.iter().sum();
        l[0] -= drift;
        l
    }

    /// Traceless operators with `tr(S_i† S_j) = n δ_ij`.
    pub fn random_traceless_family(&mut self, n: usize, count: usize) -> Vec<Mat> {
        let mut out: Vec<Mat> = Vec::new();
        while out.len() < count {
            let mut s = self.random_matrix(n, n);
            let tr = trace(&s) / real(n as f64);
            s -= identity(n) * tr;
            for prev in &out {
                let overlap = trace(&(prev.adjoint() * &s)) / real(n as f64);
                s -= prev * overlap;
            }
            let norm = linalg::frobenius(&s);
            if norm < 1e-6 {
                continue;
            }
            out.push(s * real((n as f64).sqrt() / norm));
        }
        out
    }

    /// Canonical data of a unital conditionally negative map with `terms`
    /// dissipative terms.
    pub fn random_unital_cneg_form(&mut self, n: usize, terms: usize) -> CnegForm {
        let ops = self.random_traceless_family(n, terms.min(n * n - 1));
        let lambdas: Vec<f64> = ops.iter().map(|_| self.uniform(0.05, 0.6)).collect();
        let mut k = Mat::zeros(n, n);
        for (s, l) in ops.iter().zip(&lambdas) {
            k += s * s.adjoint() * real(*l);
        }
        let s = 1.0 + trace(&k).re / n as f64;
        let k0 = identity(n) * real(1.0 - s) + k;
        let h = self.random_hermitian(n);
        let ya = (&h - identity(n) * (trace(&h) / real(n as f64))) * c(0.0, 1.0);
        let y = ya + k0 * real(0.5);
        CnegForm { s, y, terms: ops.into_iter().zip(lambdas).map(|(op, lambda)| CnegTerm { lambda, op }).collect() }
    }

    pub fn random_unital_cneg(&mut self, n: usize, terms: usize) -> SuperOp {
        self.random_unital_cneg_form(n, terms).reconstruct()
    }

    /// Invertible unital q-positive map: the inverse of a unital cneg map.
    pub fn random_invertible_unital_q_positive(&mut self, n: usize) -> SuperOp {
        let terms = 1 + self.index(2);
        self.random_unital_cneg(n, terms).inverse().expect("unital cneg maps are invertible")
    }

    /// A q-positive map drawn from the structured families: faithful state
    /// maps, conjugated Schur normal forms, inverses of unital cneg maps, and
    /// ε-deformations and resolvent subordinates of those.
    pub fn random_q_positive(&mut self, n: usize) -> SuperOp {
        let base = match self.index(3) {
            0 => state_map(&self.random_faithful_density(n)).expect("square"),
            1 => {
                let l = self.random_lambdas(n);
                let u = self.random_unitary(n);
                make_invertible_qpure(&l, Some(&u)).expect("lambdas sum to zero")
            }
            _ => self.random_invertible_unital_q_positive(n),
        };
        match self.index(3) {
            0 => base,
            1 => {
                let eps = self.uniform(0.0, 0.9);
                eps_deform(&base, eps).expect("eps in range")
            }
            _ => {
                let s = self.uniform(0.0, 3.0);
                resolvent_subordinate(&base, s).expect("q-positive maps have regular resolvents")
            }
        }
    }
}
