//! The global interface problem `(I - S) g = b`.
//!
//! Interface unknowns are blocked by pair ordinal: block `m(j,i) - 1` holds
//! the `n` Robin values incoming to `j` across `Γ(j,i)`, ordered along the
//! face by increasing global coordinate. `S` is applied matrix-free with a
//! single local solve per subdomain: the subdomain reads all of its incoming
//! blocks and writes its outgoing traces into the blocks owned by its
//! neighbours. Each output block has exactly one writer, so subdomain solves
//! can run concurrently without affecting the result.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::discretization::{
    Face, FaceTraces, ImpedanceSpec, Lifting, LocalField, LocalOperator, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::indexing::{MultiIndex, Partition};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest dimension accepted by [`InterfaceSystem::materialize_dense`].
pub const DENSE_GUARD: usize = 6000;

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceVector {
    block: usize,
    data: Vec<Complex64>,
}

impl InterfaceVector {
    pub fn zeros(blocks: usize, block: usize) -> Self {
        Self {
            block,
            data: vec![ZERO; blocks * block],
        }
    }

    pub fn from_vec(data: Vec<Complex64>, block: usize) -> Self {
        assert!(
            block > 0 && data.len() % block == 0,
            "length must be a multiple of the block size"
        );
        Self { block, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn n_blocks(&self) -> usize {
        self.data.len() / self.block
    }

    pub fn block(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.block..(k + 1) * self.block]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.data[k * self.block..(k + 1) * self.block]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0, |acc, v| acc + v)
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == ZERO)
    }
}

impl Index<usize> for InterfaceVector {
    type Output = Complex64;

    fn index(&self, k: usize) -> &Complex64 {
        &self.data[k]
    }
}

impl IndexMut<usize> for InterfaceVector {
    fn index_mut(&mut self, k: usize) -> &mut Complex64 {
        &mut self.data[k]
    }
}

/// Densely materialized `S`, for verification only.
#[derive(Debug, Clone)]
pub struct DenseInterfaceMatrix {
    pub entries: DMatrix<Complex64>,
    pub block: usize,
}

impl DenseInterfaceMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.entries * v).as_slice().to_vec()
    }

    /// Max-abs entry of the `(row_block, col_block)` block.
    pub fn block_max(&self, row_block: usize, col_block: usize) -> f64 {
        let b = self.block;
        self.entries
            .view((row_block * b, col_block * b), (b, b))
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Outgoing traces of one subdomain solve, keyed by destination block.
pub type Outgoing = Vec<(usize, Vec<Complex64>)>;

pub struct InterfaceSystem {
    partition: Partition,
    spec: ProblemSpec,
    locals: Vec<LocalOperator>,
    n: usize,
}

impl InterfaceSystem {
    /// Assembles and factorizes every subdomain operator.
    pub fn new(spec: ProblemSpec, imp: ImpedanceSpec, partition: Partition) -> Result<Self> {
        spec.validate()?;
        spec.scatterer_owner(&partition)?;
        let locals = partition
            .subdomains()
            .par_iter()
            .map(|&i| LocalOperator::assemble(&spec, &imp, &partition, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: spec.cells_per_side,
            partition,
            spec,
            locals,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn n_blocks(&self) -> usize {
        self.partition.pairs().len()
    }

    /// Number of interface unknowns, `2 N_e n`.
    pub fn dim(&self) -> usize {
        self.n_blocks() * self.n
    }

    pub fn zeros(&self) -> InterfaceVector {
        InterfaceVector::zeros(self.n_blocks(), self.n)
    }

    pub fn local(&self, i: MultiIndex) -> &LocalOperator {
        &self.locals[self.partition.linear(i)]
    }

    fn check(&self, g: &InterfaceVector) -> Result<()> {
        if g.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: g.len(),
            });
        }
        Ok(())
    }

    /// Incoming traces of `i` read from its own blocks of `g`.
    pub fn incoming<'a>(&self, i: MultiIndex, g: &'a [Complex64]) -> FaceTraces<'a> {
        let mut traces: FaceTraces<'a> = [None; 4];
        for &k in self.partition.neighbors(i) {
            let face = Face::between(i, k).expect("neighbours are adjacent");
            let b = self.partition.block(i, k);
            traces[face as usize] = Some(&g[b * self.n..(b + 1) * self.n]);
        }
        traces
    }

    /// Solves subdomain `i` with its incoming blocks of `g` and returns the
    /// outgoing traces destined to blocks `m(j,i)`. All-zero input is skipped.
    pub fn outgoing_from(&self, i: MultiIndex, g: &[Complex64]) -> Result<Outgoing> {
        let op = self.local(i);
        let incoming = self.incoming(i, g);
        let quiet = incoming
            .iter()
            .flatten()
            .all(|t| t.iter().all(|v| *v == ZERO));
        let mut out = Vec::with_capacity(4);
        if quiet {
            for &j in self.partition.neighbors(i) {
                out.push((self.partition.block(j, i), vec![ZERO; self.n]));
            }
            return Ok(out);
        }
        let field = op.solve(&incoming, None)?;
        for &j in self.partition.neighbors(i) {
            let face = Face::between(i, j).expect("neighbours are adjacent");
            let trace = op.outgoing_trace(&field, incoming[face as usize], face)?;
            out.push((self.partition.block(j, i), trace));
        }
        Ok(out)
    }

    /// Runs [`Self::outgoing_from`] for each listed subdomain concurrently.
    pub fn solve_many(&self, subdomains: &[MultiIndex], g: &[Complex64]) -> Result<Vec<Outgoing>> {
        subdomains
            .par_iter()
            .map(|&i| self.outgoing_from(i, g))
            .collect()
    }

    pub fn apply_s(&self, g: &InterfaceVector) -> Result<InterfaceVector> {
        self.check(g)?;
        let mut out = self.zeros();
        for outgoing in self.solve_many(self.partition.subdomains(), g.as_slice())? {
            for (b, trace) in outgoing {
                out.block_mut(b).copy_from_slice(&trace);
            }
        }
        Ok(out)
    }

    /// `g - S g`.
    pub fn apply_interface_operator(&self, g: &InterfaceVector) -> Result<InterfaceVector> {
        let mut out = self.apply_s(g)?;
        for (o, v) in out.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *o = v - *o;
        }
        Ok(out)
    }

    /// `V_target S V_sourceᵀ g` for sets of diagonal group labels: only
    /// subdomains of the source groups are solved, and only blocks owned by
    /// target-group subdomains are kept.
    pub fn restricted_apply(
        &self,
        g: &InterfaceVector,
        source_groups: &[usize],
        target_groups: &[usize],
    ) -> Result<InterfaceVector> {
        self.check(g)?;
        let mut out = self.zeros();
        let solved: Vec<MultiIndex> = source_groups
            .iter()
            .flat_map(|&s| self.partition.group(s).iter().copied())
            .collect();
        for outgoing in self.solve_many(&solved, g.as_slice())? {
            for (b, trace) in outgoing {
                let owner = self.partition.pairs()[b].owner;
                if target_groups.contains(&owner.l1()) {
                    out.block_mut(b).copy_from_slice(&trace);
                }
            }
        }
        Ok(out)
    }

    pub fn liftings(&self) -> Result<Vec<Lifting>> {
        self.locals.par_iter().map(|op| op.lifting()).collect()
    }

    /// `b`: block `m(j,i)` receives the outgoing lifting trace of `i` toward `j`.
    pub fn assemble_rhs(&self, liftings: &[Lifting]) -> InterfaceVector {
        let mut b = self.zeros();
        for (&i, lifting) in self.partition.subdomains().iter().zip(liftings) {
            for &j in self.partition.neighbors(i) {
                let face = Face::between(i, j).expect("neighbours are adjacent");
                if let Some(t) = lifting.trace(face) {
                    b.block_mut(self.partition.block(j, i)).copy_from_slice(t);
                }
            }
        }
        b
    }

    /// Local fields `v_i` solved from the incoming blocks of `g`.
    pub fn local_fields(&self, g: &InterfaceVector) -> Result<Vec<LocalField>> {
        self.check(g)?;
        self.partition
            .subdomains()
            .par_iter()
            .map(|&i| self.local(i).solve(&self.incoming(i, g.as_slice()), None))
            .collect()
    }

    /// Column `k` is `S e_k`.
    pub fn materialize_dense(&self) -> Result<DenseInterfaceMatrix> {
        let dim = self.dim();
        if dim > DENSE_GUARD {
            return Err(Error::SizeGuard {
                size: dim,
                limit: DENSE_GUARD,
            });
        }
        let mut entries = DMatrix::from_element(dim, dim, ZERO);
        let mut e = self.zeros();
        for k in 0..dim {
            e[k] = Complex64::new(1.0, 0.0);
            let col = self.apply_s(&e)?;
            entries.column_mut(k).copy_from_slice(col.as_slice());
            e[k] = ZERO;
        }
        Ok(DenseInterfaceMatrix {
            entries,
            block: self.n,
        })
    }
}
