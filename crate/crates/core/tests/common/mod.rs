//! Dense reference constructions shared by the integration tests. Everything
//! here works on explicitly materialized matrices and never calls the sweep
//! code it is used to check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use sweepdd::discretization::{ImpedanceSpec, ProblemSpec};
use sweepdd::indexing::{GroupWindow, Partition, WindowKind};
use sweepdd::interface::{InterfaceSystem, InterfaceVector};

pub type C = Complex64;

pub fn system(n1: usize, n2: usize, n: usize) -> InterfaceSystem {
    let spec = ProblemSpec::scattering(2.0 * std::f64::consts::PI, n);
    let imp = ImpedanceSpec::for_wavenumber(spec.kappa);
    InterfaceSystem::new(spec, imp, Partition::new(n1, n2).unwrap()).unwrap()
}

pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    pub fn complex(&mut self) -> C {
        C::new(self.uniform(), self.uniform())
    }
}

pub fn random_vector(sys: &InterfaceSystem, seed: u64) -> InterfaceVector {
    let mut rng = Lcg::new(seed);
    let data = (0..sys.dim()).map(|_| rng.complex()).collect();
    InterfaceVector::from_vec(data, sys.block_len())
}

pub fn rel_err(got: &[C], want: &[C]) -> f64 {
    let diff = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm_sqr())
        .fold(0.0, |a, b| a + b)
        .sqrt();
    let scale = want
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, |a, b| a + b)
        .sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Largest entry-wise difference relative to the largest entry of `want`.
pub fn rel_entrywise(got: &DMatrix<C>, want: &DMatrix<C>) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = got
        .iter()
        .zip(want.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Diagonal group of each scalar unknown (group of the receiving subdomain).
pub fn unknown_groups(p: &Partition, block: usize) -> Vec<usize> {
    p.pairs()
        .iter()
        .flat_map(|pair| std::iter::repeat_n(pair.owner.l1(), block))
        .collect()
}

/// The dense `S` together with its group-triangular parts.
pub struct DenseParts {
    pub s: DMatrix<C>,
    pub groups: Vec<usize>,
    /// `I - (group-strictly-lower part of S)`
    pub s_l: DMatrix<C>,
    /// `I - (group-strictly-upper part of S)`
    pub s_u: DMatrix<C>,
}

pub fn dense_parts(sys: &InterfaceSystem) -> DenseParts {
    let s = sys.materialize_dense().unwrap().entries;
    let groups = unknown_groups(sys.partition(), sys.block_len());
    let dim = s.nrows();
    let mut s_l = DMatrix::identity(dim, dim);
    let mut s_u = DMatrix::identity(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if groups[r] > groups[c] {
                s_l[(r, c)] -= s[(r, c)];
            } else if groups[r] < groups[c] {
                s_u[(r, c)] -= s[(r, c)];
            }
        }
    }
    DenseParts {
        s,
        groups,
        s_l,
        s_u,
    }
}

/// `V_target S_{target,source} V_sourceᵀ` embedded in full size.
pub fn coupling(parts: &DenseParts, target: usize, source: usize) -> DMatrix<C> {
    let dim = parts.s.nrows();
    let mut m = DMatrix::from_element(dim, dim, C::new(0.0, 0.0));
    for r in 0..dim {
        for c in 0..dim {
            if parts.groups[r] == target && parts.groups[c] == source {
                m[(r, c)] = parts.s[(r, c)];
            }
        }
    }
    m
}

pub fn dense_solve(a: &DMatrix<C>, b: &[C]) -> Vec<C> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("nonsingular")
        .as_slice()
        .to_vec()
}

pub fn dense_inverse(a: &DMatrix<C>) -> DMatrix<C> {
    a.clone().lu().try_inverse().expect("nonsingular")
}

pub fn mul(a: &DMatrix<C>, x: &[C]) -> Vec<C> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Unknown positions covered by a window.
pub fn window_rows(groups: &[usize], w: &GroupWindow) -> Vec<usize> {
    (0..groups.len())
        .filter(|&k| w.contains(groups[k]))
        .collect()
}

fn restrict(m: &DMatrix<C>, rows: &[usize]) -> DMatrix<C> {
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| m[(rows[i], rows[j])])
}

/// Dense block Jacobi half-step over the given windows. `triangular` is
/// `S_L` for lower windows and `S_U` for upper ones. In dedup mode
/// `r + Σ W (B⁻¹ - I) Wᵀ r`, in literal mode `Σ W B⁻¹ Wᵀ r`.
pub fn dense_bj_half(
    triangular: &DMatrix<C>,
    groups: &[usize],
    windows: &[GroupWindow],
    r: &[C],
    literal: bool,
) -> Vec<C> {
    let mut out = if literal {
        vec![C::new(0.0, 0.0); r.len()]
    } else {
        r.to_vec()
    };
    for w in windows {
        let rows = window_rows(groups, w);
        let block = restrict(triangular, &rows);
        let local: Vec<C> = rows.iter().map(|&k| r[k]).collect();
        let solved = dense_solve(&block, &local);
        for (t, &k) in rows.iter().enumerate() {
            if literal {
                out[k] += solved[t];
            } else {
                out[k] += solved[t] - local[t];
            }
        }
    }
    out
}

/// Dense evaluation of the two block Jacobi half-steps with the intermediate
/// residual, starting from a zero iterate.
pub fn dense_bsp(
    parts: &DenseParts,
    p: &Partition,
    b: &[C],
    literal: bool,
    intermediate: bool,
) -> Vec<C> {
    let lower = p.windows(WindowKind::Lower);
    let upper = p.windows(WindowKind::Upper);
    let z_l = dense_bj_half(&parts.s_l, &parts.groups, &lower, b, literal);
    let r = if intermediate {
        let dim = parts.s.nrows();
        let a = DMatrix::<C>::identity(dim, dim) - &parts.s;
        let az = mul(&a, &z_l);
        b.iter().zip(&az).map(|(x, y)| x - y).collect()
    } else {
        b.to_vec()
    };
    let z_u = dense_bj_half(&parts.s_u, &parts.groups, &upper, &r, literal);
    z_l.iter().zip(&z_u).map(|(a, b)| a + b).collect()
}
