//! End-to-end solve: liftings, right-hand side, preconditioned GMRES on the
//! interface system, reconstruction of the subdomain fields and an optional
//! comparison against the single-domain discretization.

use std::time::Instant;

use num_complex::Complex64;

use crate::discretization::{
    mono_solve, GlobalField, ImpedanceSpec, Lifting, LocalField, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::indexing::Partition;
use crate::interface::{InterfaceSystem, InterfaceVector};
use crate::krylov::{gmres, GmresOptions, LinearOperator};
use crate::preconditioner::{StepTrace, SweepConfig, Sweeper};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonoError {
    pub max_rel: f64,
    pub l2_rel: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub steps_per_iteration: usize,
    pub total_sequential_steps: usize,
    /// Relative residual per iteration, iteration 0 included.
    pub residual_history: Vec<f64>,
    /// Seconds spent in GMRES.
    pub wall_time: f64,
    pub error_vs_mono: Option<MonoError>,
    pub schedule: StepTrace,
    pub converged: bool,
    /// `‖(I - S) g - b‖ / ‖b‖` at the returned solution.
    pub interface_residual: f64,
    pub interface_unknowns: usize,
    pub field: GlobalField,
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config {
            key: "workers".into(),
            message: e.to_string(),
        })?;
    Ok(pool.install(f))
}

struct InterfaceOperator<'a>(&'a InterfaceSystem);

impl LinearOperator for InterfaceOperator<'_> {
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let g = InterfaceVector::from_vec(x.to_vec(), self.0.block_len());
        Ok(self.0.apply_interface_operator(&g)?.into_vec())
    }
}

/// `u_i = v_i(g) + w_i` for every subdomain, and the stitched global field.
pub fn reconstruct_solution(
    sys: &InterfaceSystem,
    g: &InterfaceVector,
    liftings: &[Lifting],
) -> Result<(Vec<LocalField>, GlobalField)> {
    let mut fields = sys.local_fields(g)?;
    for (f, l) in fields.iter_mut().zip(liftings) {
        for (v, w) in f.values.iter_mut().zip(&l.field.values) {
            *v += w;
        }
    }
    let n = sys.block_len();
    let p = sys.partition();
    let mut global = GlobalField::zeros(p.n1() * n, p.n2() * n);
    for f in &fields {
        global.place(f);
    }
    Ok((fields, global))
}

/// Relative max-norm and L2 differences; absolute when the reference is zero.
pub fn compare_with_mono(stitched: &GlobalField, mono: &GlobalField) -> Result<MonoError> {
    if stitched.nx != mono.nx || stitched.ny != mono.ny {
        return Err(Error::GridMismatch(format!(
            "{}x{} vs {}x{}",
            stitched.nx, stitched.ny, mono.nx, mono.ny
        )));
    }
    let mut diff_max: f64 = 0.0;
    let mut ref_max: f64 = 0.0;
    let mut diff_l2 = 0.0;
    let mut ref_l2 = 0.0;
    for (u, v) in stitched.values.iter().zip(&mono.values) {
        let d = (u - v).norm();
        diff_max = diff_max.max(d);
        ref_max = ref_max.max(v.norm());
        diff_l2 += d * d;
        ref_l2 += v.norm_sqr();
    }
    let (diff_l2, ref_l2) = (diff_l2.sqrt(), ref_l2.sqrt());
    Ok(MonoError {
        max_rel: if ref_max > 0.0 {
            diff_max / ref_max
        } else {
            diff_max
        },
        l2_rel: if ref_l2 > 0.0 {
            diff_l2 / ref_l2
        } else {
            diff_l2
        },
    })
}

pub fn solve_problem(
    spec: &ProblemSpec,
    imp: &ImpedanceSpec,
    partition: &Partition,
    sweep: &SweepConfig,
    opts: &GmresOptions,
    run_mono_check: bool,
) -> Result<SolveReport> {
    let sys = InterfaceSystem::new(spec.clone(), *imp, partition.clone())?;
    let liftings = sys.liftings()?;
    let b = sys.assemble_rhs(&liftings);

    let sweeper = Sweeper::new(&sys, *sweep);
    let a = InterfaceOperator(&sys);
    let m: Option<&dyn LinearOperator> = match sweep.kind {
        crate::preconditioner::PreconditionerKind::None => None,
        _ => Some(&sweeper),
    };
    let start = Instant::now();
    let result = gmres(&a, m, b.as_slice(), opts)?;
    let wall_time = start.elapsed().as_secs_f64();

    let g = InterfaceVector::from_vec(result.solution, sys.block_len());
    let residual = {
        let ag = sys.apply_interface_operator(&g)?;
        let r: f64 = ag
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (y - x).norm_sqr())
            .fold(0.0, |acc, v| acc + v)
            .sqrt();
        let bn = b.norm();
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    };
    let (_, field) = reconstruct_solution(&sys, &g, &liftings)?;
    let error_vs_mono = if run_mono_check {
        let mono = mono_solve(spec, imp, partition)?;
        Some(compare_with_mono(&field, &mono)?)
    } else {
        None
    };

    let steps_per_iteration = sweeper.steps();
    Ok(SolveReport {
        iterations: result.iterations,
        steps_per_iteration,
        total_sequential_steps: result.iterations * steps_per_iteration,
        residual_history: result.true_history.unwrap_or(result.history),
        wall_time,
        error_vs_mono,
        schedule: sweeper.trace().clone(),
        converged: result.converged,
        interface_residual: residual,
        interface_unknowns: sys.dim(),
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: Vec<Complex64>) -> GlobalField {
        GlobalField {
            nx: values.len(),
            ny: 1,
            values,
        }
    }

    #[test]
    fn compare_cases() {
        let v = field(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)]);
        assert_eq!(
            compare_with_mono(&v, &v).unwrap(),
            MonoError {
                max_rel: 0.0,
                l2_rel: 0.0
            }
        );
        let twice = field(v.values.iter().map(|x| x * 2.0).collect());
        let e = compare_with_mono(&twice, &v).unwrap();
        assert!((e.max_rel - 1.0).abs() < 1e-15 && (e.l2_rel - 1.0).abs() < 1e-15);
        let other = GlobalField::zeros(1, 2);
        assert!(matches!(
            compare_with_mono(&other, &v),
            Err(Error::GridMismatch(_))
        ));
    }
}
