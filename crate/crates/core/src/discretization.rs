//! Cell-centred finite differences for `(-Δ - κ²) u = 0` on one subdomain.
//!
//! Every boundary face of a subdomain is closed with a ghost value `u_g`
//! eliminated through the Robin relation
//!
//! ```text
//! (u_g - u_c)/h - τ (u_g + u_c)/2 = ĝ
//! ```
//!
//! where `ĝ = 0` on the exterior boundary and on interfaces carries the
//! incoming transmission datum. The homogeneous part lands on the diagonal
//! of the matrix and `ĝ` moves to the right-hand side, so one factorization
//! serves every solve. Cells whose centre lies inside the sound-soft
//! scatterer become identity rows carrying `-u_inc`.
//!
//! [`LocalOperator`] is immutable once built and the band LU is read-only
//! during solves, so concurrent solves against one operator are safe.

use num_complex::Complex64;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::indexing::{MultiIndex, Partition};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest unknown count accepted by [`mono_solve`].
pub const MONO_GUARD: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        let (dx, dy) = (p.0 - self.center.0, p.1 - self.center.1);
        dx * dx + dy * dy < self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kappa: f64,
    pub subdomain_side: f64,
    pub cells_per_side: usize,
    pub scatterer: Option<Disk>,
    /// Unit propagation direction of the incident plane wave.
    pub incident_direction: (f64, f64),
    /// Lower-left corner of the whole domain.
    pub origin: (f64, f64),
}

impl ProblemSpec {
    /// Unit disk at the origin inside subdomain `(1,1)`, plane wave along +x,
    /// domain `[-side/2, side*N - side/2]` in both directions.
    pub fn scattering(kappa: f64, cells_per_side: usize) -> Self {
        Self::with_side(kappa, 2.5, cells_per_side)
    }

    pub fn with_side(kappa: f64, side: f64, cells_per_side: usize) -> Self {
        Self {
            kappa,
            subdomain_side: side,
            cells_per_side,
            scatterer: Some(Disk {
                center: (0.0, 0.0),
                radius: 1.0,
            }),
            incident_direction: (1.0, 0.0),
            origin: (-0.5 * side, -0.5 * side),
        }
    }

    pub fn without_scatterer(mut self) -> Self {
        self.scatterer = None;
        self
    }

    /// Smallest cell count giving ten cells per wavelength.
    pub fn default_cells(kappa: f64, side: f64) -> usize {
        let per_wavelength = 10.0;
        ((side * kappa * per_wavelength / (2.0 * std::f64::consts::PI)).ceil() as usize).max(4)
    }

    pub fn h(&self) -> f64 {
        self.subdomain_side / self.cells_per_side as f64
    }

    /// Centre of the cell with global grid coordinates `(ax, by)`.
    pub fn cell_center(&self, ax: usize, by: usize) -> (f64, f64) {
        let h = self.h();
        (
            self.origin.0 + (ax as f64 + 0.5) * h,
            self.origin.1 + (by as f64 + 0.5) * h,
        )
    }

    pub fn incident(&self, p: (f64, f64)) -> Complex64 {
        let (dx, dy) = self.incident_direction;
        Complex64::from_polar(1.0, self.kappa * (dx * p.0 + dy * p.1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.subdomain_side > 0.0 && self.subdomain_side.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "subdomain side must be positive, got {}",
                self.subdomain_side
            )));
        }
        if self.cells_per_side < 4 {
            return Err(Error::InvalidProblem(format!(
                "cells per side must be at least 4, got {}",
                self.cells_per_side
            )));
        }
        if let Some(d) = self.scatterer {
            if !(d.radius > 0.0) {
                return Err(Error::InvalidProblem(
                    "scatterer radius must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Subdomain whose open box strictly contains the scatterer.
    pub fn scatterer_owner(&self, partition: &Partition) -> Result<Option<MultiIndex>> {
        let Some(d) = self.scatterer else {
            return Ok(None);
        };
        let side = self.subdomain_side;
        let locate = |c: f64, o: f64, count: usize| -> Option<usize> {
            let lo = ((c - d.radius - o) / side).floor();
            let hi = ((c + d.radius - o) / side).floor();
            let inside = lo == hi && lo >= 0.0 && (lo as usize) < count;
            // Reject disks that touch a cut line exactly.
            let touches =
                (c - d.radius - o) == lo * side || (c + d.radius - o) == (lo + 1.0) * side;
            (inside && !touches).then_some(lo as usize + 1)
        };
        match (
            locate(d.center.0, self.origin.0, partition.n1()),
            locate(d.center.1, self.origin.1, partition.n2()),
        ) {
            (Some(i1), Some(i2)) => Ok(Some(MultiIndex::new(i1, i2))),
            _ => Err(Error::ScattererOnInterface),
        }
    }
}

/// Value of the multiplicative impedance operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceSpec {
    pub coefficient: Complex64,
}

impl ImpedanceSpec {
    /// `τ = iκ`, absorbing under the `e^{-iωt}` convention.
    pub fn for_wavenumber(kappa: f64) -> Self {
        Self {
            coefficient: Complex64::new(0.0, kappa),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    West = 0,
    East = 1,
    South = 2,
    North = 3,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::West, Face::East, Face::South, Face::North];

    /// Face of `i` shared with the edge-adjacent subdomain `j`.
    pub fn between(i: MultiIndex, j: MultiIndex) -> Option<Face> {
        match (j.i1 as isize - i.i1 as isize, j.i2 as isize - i.i2 as isize) {
            (-1, 0) => Some(Face::West),
            (1, 0) => Some(Face::East),
            (0, -1) => Some(Face::South),
            (0, 1) => Some(Face::North),
            _ => None,
        }
    }

    /// Local cell indices along the face in increasing global coordinate.
    pub fn cells(self, n: usize) -> impl Iterator<Item = usize> {
        (0..n).map(move |t| match self {
            Face::West => t * n,
            Face::East => t * n + n - 1,
            Face::South => t,
            Face::North => (n - 1) * n + t,
        })
    }
}

/// Incoming traces per face, indexed by `Face as usize`. `None` on an
/// interface face means a zero trace.
pub type FaceTraces<'a> = [Option<&'a [Complex64]>; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct LocalField {
    pub subdomain: MultiIndex,
    pub n: usize,
    /// Row-major: `values[b * n + a]` for column `a`, row `b`.
    pub values: Vec<Complex64>,
}

/// Closure coefficients for the eliminated ghost value.
#[derive(Debug, Clone, Copy)]
struct Closure {
    h: f64,
    tau: Complex64,
    /// `1/h - τ/2`
    alpha: Complex64,
    /// `1/h + τ/2`
    beta: Complex64,
}

impl Closure {
    fn new(h: f64, tau: Complex64) -> Self {
        Self {
            h,
            tau,
            alpha: Complex64::new(1.0 / h, 0.0) - tau * 0.5,
            beta: Complex64::new(1.0 / h, 0.0) + tau * 0.5,
        }
    }

    /// Contribution of a closed face to the diagonal of the stencil row.
    fn diagonal(&self) -> Complex64 {
        -(self.beta / self.alpha) / (self.h * self.h)
    }

    /// Right-hand-side weight of the incoming datum.
    fn rhs_weight(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) / (self.alpha * self.h * self.h)
    }

    fn ghost(&self, incoming: Complex64, center: Complex64) -> Complex64 {
        (incoming + self.beta * center) / self.alpha
    }

    /// `(-∂_n - τ) u` on the face.
    fn outgoing(&self, incoming: Complex64, center: Complex64) -> Complex64 {
        let ghost = self.ghost(incoming, center);
        -(ghost - center) / self.h - self.tau * (ghost + center) * 0.5
    }
}

/// Assembles the Helmholtz operator on an `nx × ny` block of cells with all
/// four sides closed by the homogeneous Robin relation. `dirichlet` lists
/// cells replaced by identity rows.
fn assemble_block(
    nx: usize,
    ny: usize,
    kappa: f64,
    closure: &Closure,
    dirichlet: &[usize],
) -> BandMatrix {
    let h2 = closure.h * closure.h;
    let mut a = BandMatrix::zeros(nx * ny, nx, nx);
    let diag = Complex64::new(4.0 / h2 - kappa * kappa, 0.0);
    let off = Complex64::new(-1.0 / h2, 0.0);
    let ghost = closure.diagonal();
    for by in 0..ny {
        for ax in 0..nx {
            let c = by * nx + ax;
            a.add(c, c, diag);
            let mut link = |inside: bool, nb: usize| {
                if inside {
                    a.add(c, nb, off);
                } else {
                    a.add(c, c, ghost);
                }
            };
            link(ax > 0, c.wrapping_sub(1));
            link(ax + 1 < nx, c + 1);
            link(by > 0, c.wrapping_sub(nx));
            link(by + 1 < ny, c + nx);
        }
    }
    for &d in dirichlet {
        let lo = d.saturating_sub(nx);
        let hi = (d + nx).min(nx * ny - 1);
        for col in lo..=hi {
            a.set(d, col, ZERO);
        }
        a.set(d, d, Complex64::new(1.0, 0.0));
    }
    a
}

/// One subdomain's factorized operator.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    subdomain: MultiIndex,
    n: usize,
    closure: Closure,
    neighbors: [Option<MultiIndex>; 4],
    dirichlet_cells: Vec<usize>,
    dirichlet_data: Vec<Complex64>,
    matrix: BandMatrix,
    lu: BandLu,
}

impl LocalOperator {
    pub fn assemble(
        spec: &ProblemSpec,
        imp: &ImpedanceSpec,
        partition: &Partition,
        i: MultiIndex,
    ) -> Result<Self> {
        spec.validate()?;
        if !partition.contains(i) {
            return Err(Error::InvalidProblem(format!(
                "{i} is outside the partition"
            )));
        }
        let n = spec.cells_per_side;
        let closure = Closure::new(spec.h(), imp.coefficient);

        let mut neighbors = [None; 4];
        for &j in partition.neighbors(i) {
            let face = Face::between(i, j).expect("lattice neighbours share a face");
            neighbors[face as usize] = Some(j);
        }

        let mut dirichlet_cells = Vec::new();
        let mut dirichlet_data = Vec::new();
        if spec.scatterer_owner(partition)? == Some(i) {
            let disk = spec.scatterer.expect("owner implies a scatterer");
            let (x0, y0) = ((i.i1 - 1) * n, (i.i2 - 1) * n);
            for b in 0..n {
                for a in 0..n {
                    let p = spec.cell_center(x0 + a, y0 + b);
                    if disk.contains(p) {
                        dirichlet_cells.push(b * n + a);
                        dirichlet_data.push(-spec.incident(p));
                    }
                }
            }
            if dirichlet_cells.is_empty() {
                return Err(Error::ScattererUnresolved);
            }
        }

        let matrix = assemble_block(n, n, spec.kappa, &closure, &dirichlet_cells);
        let lu = matrix
            .clone()
            .factorize()
            .map_err(|pivot| Error::SingularFactorization {
                subdomain: i,
                pivot,
            })?;
        Ok(Self {
            subdomain: i,
            n,
            closure,
            neighbors,
            dirichlet_cells,
            dirichlet_data,
            matrix,
            lu,
        })
    }

    pub fn subdomain(&self) -> MultiIndex {
        self.subdomain
    }

    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn neighbor(&self, face: Face) -> Option<MultiIndex> {
        self.neighbors[face as usize]
    }

    pub fn interface_faces(&self) -> impl Iterator<Item = (Face, MultiIndex)> + '_ {
        Face::ALL
            .into_iter()
            .filter_map(|f| self.neighbors[f as usize].map(|j| (f, j)))
    }

    pub fn has_scatterer(&self) -> bool {
        !self.dirichlet_cells.is_empty()
    }

    pub fn dirichlet_cells(&self) -> &[usize] {
        &self.dirichlet_cells
    }

    /// `-u_inc` at each scatterer cell, in the order of [`Self::dirichlet_cells`].
    pub fn dirichlet_data(&self) -> &[Complex64] {
        &self.dirichlet_data
    }

    fn check_traces(&self, incoming: &FaceTraces<'_>) -> Result<()> {
        for face in Face::ALL {
            if let Some(t) = incoming[face as usize] {
                if self.neighbors[face as usize].is_none() {
                    return Err(Error::NotInterfaceFace(face));
                }
                if t.len() != self.n {
                    return Err(Error::LengthMismatch {
                        expected: self.n,
                        actual: t.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Solves with the given incoming Robin data and optional Dirichlet values
    /// on the scatterer cells.
    pub fn solve(
        &self,
        incoming: &FaceTraces<'_>,
        source: Option<&[Complex64]>,
    ) -> Result<LocalField> {
        self.check_traces(incoming)?;
        let n = self.n;
        let mut rhs = vec![ZERO; n * n];
        let w = self.closure.rhs_weight();
        for face in Face::ALL {
            if let Some(t) = incoming[face as usize] {
                for (cell, &g) in face.cells(n).zip(t) {
                    rhs[cell] += w * g;
                }
            }
        }
        if let Some(values) = source {
            if values.len() != self.dirichlet_cells.len() {
                return Err(Error::LengthMismatch {
                    expected: self.dirichlet_cells.len(),
                    actual: values.len(),
                });
            }
            for (&cell, &v) in self.dirichlet_cells.iter().zip(values) {
                rhs[cell] = v;
            }
        }
        self.lu.solve_in_place(&mut rhs);
        Ok(LocalField {
            subdomain: self.subdomain,
            n,
            values: rhs,
        })
    }

    /// `(-∂_n - τ) u` on an interface face, reconstructing the ghost from
    /// the incoming datum the field was solved with.
    pub fn outgoing_trace(
        &self,
        field: &LocalField,
        incoming: Option<&[Complex64]>,
        face: Face,
    ) -> Result<Vec<Complex64>> {
        if self.neighbors[face as usize].is_none() {
            return Err(Error::NotInterfaceFace(face));
        }
        if let Some(t) = incoming {
            if t.len() != self.n {
                return Err(Error::LengthMismatch {
                    expected: self.n,
                    actual: t.len(),
                });
            }
        }
        Ok(face
            .cells(self.n)
            .enumerate()
            .map(|(t, cell)| {
                let g = incoming.map_or(ZERO, |tr| tr[t]);
                self.closure.outgoing(g, field.values[cell])
            })
            .collect())
    }

    /// Lifting of the scatterer data: zero Robin data everywhere, `-u_inc` on
    /// the scatterer. Subdomains without a scatterer return zeros without solving.
    pub fn lifting(&self) -> Result<Lifting> {
        let mut traces: [Option<Vec<Complex64>>; 4] = Default::default();
        if !self.has_scatterer() {
            for (face, _) in self.interface_faces() {
                traces[face as usize] = Some(vec![ZERO; self.n]);
            }
            return Ok(Lifting {
                field: LocalField {
                    subdomain: self.subdomain,
                    n: self.n,
                    values: vec![ZERO; self.n * self.n],
                },
                traces,
            });
        }
        let field = self.solve(&[None; 4], Some(&self.dirichlet_data))?;
        for (face, _) in self.interface_faces() {
            traces[face as usize] = Some(self.outgoing_trace(&field, None, face)?);
        }
        Ok(Lifting { field, traces })
    }

    /// Incoming ghost value on a face cell, exposed for equivalence checks.
    pub fn ghost_value(&self, incoming: Complex64, center: Complex64) -> Complex64 {
        self.closure.ghost(incoming, center)
    }
}

/// Lifting field and its outgoing traces per interface face.
#[derive(Debug, Clone)]
pub struct Lifting {
    pub field: LocalField,
    pub traces: [Option<Vec<Complex64>>; 4],
}

impl Lifting {
    pub fn trace(&self, face: Face) -> Option<&[Complex64]> {
        self.traces[face as usize].as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.field.values.iter().all(|v| *v == ZERO)
    }
}

pub fn assemble_local(
    spec: &ProblemSpec,
    imp: &ImpedanceSpec,
    partition: &Partition,
    i: MultiIndex,
) -> Result<LocalOperator> {
    LocalOperator::assemble(spec, imp, partition, i)
}

pub fn solve_local(
    op: &LocalOperator,
    incoming: &FaceTraces<'_>,
    source: Option<&[Complex64]>,
) -> Result<LocalField> {
    op.solve(incoming, source)
}

pub fn extract_outgoing_trace(
    op: &LocalOperator,
    field: &LocalField,
    incoming: Option<&[Complex64]>,
    face: Face,
) -> Result<Vec<Complex64>> {
    op.outgoing_trace(field, incoming, face)
}

pub fn solve_lifting(op: &LocalOperator) -> Result<Lifting> {
    op.lifting()
}

/// Field on the whole `(N1 n) × (N2 n)` grid, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Complex64>,
}

impl GlobalField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            values: vec![ZERO; nx * ny],
        }
    }

    pub fn get(&self, ax: usize, by: usize) -> Complex64 {
        self.values[by * self.nx + ax]
    }

    /// Copies a subdomain's cells into their global positions.
    pub fn place(&mut self, field: &LocalField) {
        let n = field.n;
        let (x0, y0) = ((field.subdomain.i1 - 1) * n, (field.subdomain.i2 - 1) * n);
        for b in 0..n {
            let row = (y0 + b) * self.nx + x0;
            self.values[row..row + n].copy_from_slice(&field.values[b * n..(b + 1) * n]);
        }
    }
}

/// Single-domain solve of the same discrete problem, used as the reference
/// for the decomposed solution.
pub fn mono_solve(
    spec: &ProblemSpec,
    imp: &ImpedanceSpec,
    partition: &Partition,
) -> Result<GlobalField> {
    spec.validate()?;
    let n = spec.cells_per_side;
    let (nx, ny) = (partition.n1() * n, partition.n2() * n);
    if nx * ny > MONO_GUARD {
        return Err(Error::SizeGuard {
            size: nx * ny,
            limit: MONO_GUARD,
        });
    }
    let closure = Closure::new(spec.h(), imp.coefficient);
    let mut rhs = vec![ZERO; nx * ny];
    let mut dirichlet = Vec::new();
    if spec.scatterer_owner(partition)?.is_some() {
        let disk = spec.scatterer.expect("owner implies a scatterer");
        for by in 0..ny {
            for ax in 0..nx {
                let p = spec.cell_center(ax, by);
                if disk.contains(p) {
                    dirichlet.push(by * nx + ax);
                    rhs[by * nx + ax] = -spec.incident(p);
                }
            }
        }
        if dirichlet.is_empty() {
            return Err(Error::ScattererUnresolved);
        }
    }
    let lu = assemble_block(nx, ny, spec.kappa, &closure, &dirichlet)
        .factorize()
        .map_err(|pivot| Error::SingularFactorization {
            subdomain: MultiIndex::new(0, 0),
            pivot,
        })?;
    lu.solve_in_place(&mut rhs);
    Ok(GlobalField {
        nx,
        ny,
        values: rhs,
    })
}
