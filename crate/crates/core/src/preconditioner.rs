//! Sweeping preconditioners over diagonal groups.
//!
//! A forward substitution with the group-lower part of `I - S` advances one
//! diagonal group per sequential step: step `t` solves every subdomain of
//! the current group and pushes its outgoing traces into the next group. The
//! symmetric Gauss-Seidel variant (SP) runs one full forward sweep followed
//! by one full backward sweep. The block Jacobi variant (BSP) cuts each
//! direction into windows of `N1 + 1` groups that overlap in one seam group
//! and sweeps all windows concurrently, each on its own copy of the input.
//!
//! Every sweep is driven by a [`StepTrace`] computed up front, so the
//! reported schedule and the executed solves are the same object.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;

use crate::error::Result;
use crate::indexing::{GroupWindow, MultiIndex, Partition, WindowKind};
use crate::interface::{InterfaceSystem, InterfaceVector};
use crate::krylov::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PreconditionerKind {
    None,
    #[default]
    Sp,
    Bsp,
}

impl PreconditionerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Sp => "sp",
            Self::Bsp => "bsp",
        }
    }
}

/// How overlapping windows are recombined at their seam group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SeamMode {
    /// Input plus each window's correction; seams see the input once.
    #[default]
    Dedup,
    /// Plain sum of the window solutions; seams see the input twice.
    Literal,
}

impl SeamMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dedup => "dedup",
            Self::Literal => "literal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub kind: PreconditionerKind,
    pub bsp_seam: SeamMode,
    pub bsp_intermediate_residual: bool,
    pub count_residual_steps: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: PreconditionerKind::Sp,
            bsp_seam: SeamMode::Dedup,
            bsp_intermediate_residual: true,
            count_residual_steps: false,
        }
    }
}

impl SweepConfig {
    pub fn of(kind: PreconditionerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Forward,
    Backward,
    Residual,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::Backward => "backward",
            Self::Residual => "residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// One partial-sweep update `z_lane|target += S_{target,source} z_lane|source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepTask {
    /// Window whose private copy of the vector is updated.
    pub lane: usize,
    pub source_group: usize,
    pub target_group: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub step: usize,
    pub phase: Phase,
    pub tasks: Vec<SweepTask>,
    pub solves: Vec<MultiIndex>,
}

impl fmt::Display for StepRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} phase={} solves=", self.step, self.phase.name())?;
        for (k, s) in self.solves.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepTrace {
    pub records: Vec<StepRecord>,
}

impl StepTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    /// One line per record.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }

    /// Checks that the concurrent work inside every record touches disjoint
    /// memory: each `(lane, block)` is written by at most one task and no
    /// task reads what another task of the same record writes.
    pub fn check_independent(&self, partition: &Partition) -> bool {
        for rec in &self.records {
            let mut seen = HashSet::new();
            if !rec.solves.iter().all(|s| seen.insert(*s)) {
                return false;
            }
            let mut writes: HashSet<(usize, usize)> = HashSet::new();
            let mut reads: Vec<HashSet<(usize, usize)>> = Vec::new();
            let mut task_writes: Vec<HashSet<(usize, usize)>> = Vec::new();
            for t in &rec.tasks {
                let mut r = HashSet::new();
                let mut w = HashSet::new();
                for &i in partition.group(t.source_group) {
                    for &k in partition.neighbors(i) {
                        r.insert((t.lane, partition.block(i, k)));
                        if k.l1() == t.target_group {
                            w.insert((t.lane, partition.block(k, i)));
                        }
                    }
                }
                for key in &w {
                    if !writes.insert(*key) {
                        return false;
                    }
                }
                reads.push(r);
                task_writes.push(w);
            }
            for (a, w) in task_writes.iter().enumerate() {
                for (b, r) in reads.iter().enumerate() {
                    if a != b && !w.is_disjoint(r) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// The single window spanning every group, used by the full sweeps.
fn full_window(partition: &Partition, kind: WindowKind) -> Vec<GroupWindow> {
    if partition.n_groups() < 2 {
        return Vec::new();
    }
    vec![GroupWindow {
        kind,
        block_index: 1,
        first: 2,
        last: partition.n_groups() + 1,
    }]
}

fn half_records(
    partition: &Partition,
    windows: &[GroupWindow],
    direction: Direction,
    first_step: usize,
) -> Vec<StepRecord> {
    let depth = windows.iter().map(|w| w.len() - 1).max().unwrap_or(0);
    (1..=depth)
        .map(|t| {
            let tasks: Vec<SweepTask> = windows
                .iter()
                .enumerate()
                .filter(|(_, w)| t < w.len())
                .map(|(lane, w)| match direction {
                    Direction::Forward => SweepTask {
                        lane,
                        source_group: w.first + t - 1,
                        target_group: w.first + t,
                    },
                    Direction::Backward => SweepTask {
                        lane,
                        source_group: w.last + 1 - t,
                        target_group: w.last - t,
                    },
                })
                .collect();
            let mut solves: Vec<MultiIndex> = tasks
                .iter()
                .flat_map(|task| partition.group(task.source_group).iter().copied())
                .collect();
            solves.sort();
            StepRecord {
                step: first_step + t - 1,
                phase: match direction {
                    Direction::Forward => Phase::Forward,
                    Direction::Backward => Phase::Backward,
                },
                tasks,
                solves,
            }
        })
        .collect()
}

fn windows_for(
    partition: &Partition,
    kind: PreconditionerKind,
    direction: Direction,
) -> Vec<GroupWindow> {
    let wk = match direction {
        Direction::Forward => WindowKind::Lower,
        Direction::Backward => WindowKind::Upper,
    };
    match kind {
        PreconditionerKind::Bsp => partition.windows(wk),
        _ => full_window(partition, wk),
    }
}

/// The sequence of concurrent solve rounds one preconditioner application
/// executes. The BSP intermediate residual appears as its own record only
/// when residual steps are counted.
pub fn step_schedule(config: &SweepConfig, partition: &Partition) -> StepTrace {
    if config.kind == PreconditionerKind::None {
        return StepTrace::default();
    }
    let fwd = windows_for(partition, config.kind, Direction::Forward);
    let mut records = half_records(partition, &fwd, Direction::Forward, 1);
    if config.kind == PreconditionerKind::Bsp
        && config.bsp_intermediate_residual
        && config.count_residual_steps
        && partition.n_interfaces() > 0
    {
        let mut solves = partition.subdomains().to_vec();
        solves.sort();
        records.push(StepRecord {
            step: records.len() + 1,
            phase: Phase::Residual,
            tasks: Vec::new(),
            solves,
        });
    }
    let bwd = windows_for(partition, config.kind, Direction::Backward);
    let next = records.len() + 1;
    records.extend(half_records(partition, &bwd, Direction::Backward, next));
    StepTrace { records }
}

fn axpy_blocks(dst: &mut InterfaceVector, src: &InterfaceVector, range: std::ops::Range<usize>) {
    for k in range {
        for (d, s) in dst.block_mut(k).iter_mut().zip(src.block(k)) {
            *d += s;
        }
    }
}

fn copy_blocks(dst: &mut InterfaceVector, src: &InterfaceVector, range: std::ops::Range<usize>) {
    for k in range {
        dst.block_mut(k).copy_from_slice(src.block(k));
    }
}

/// Runs the sweep records of one direction on private per-window copies of `r`
/// and recombines them.
fn run_half(
    sys: &InterfaceSystem,
    r: &InterfaceVector,
    windows: &[GroupWindow],
    records: &[&StepRecord],
    direction: Direction,
    seam: SeamMode,
) -> Result<InterfaceVector> {
    let partition = sys.partition();
    let mut lanes: Vec<InterfaceVector> = vec![r.clone(); windows.len()];
    for rec in records {
        let work: Vec<(usize, usize, MultiIndex)> = rec
            .tasks
            .iter()
            .flat_map(|t| {
                partition
                    .group(t.source_group)
                    .iter()
                    .map(move |&i| (t.lane, t.target_group, i))
            })
            .collect();
        let results = {
            use rayon::prelude::*;
            let lanes = &lanes;
            work.par_iter()
                .map(|&(lane, _, i)| sys.outgoing_from(i, lanes[lane].as_slice()))
                .collect::<Result<Vec<_>>>()?
        };
        for (&(lane, target, _), outgoing) in work.iter().zip(results) {
            for (b, trace) in outgoing {
                if partition.pairs()[b].owner.l1() == target {
                    for (d, s) in lanes[lane].block_mut(b).iter_mut().zip(&trace) {
                        *d += s;
                    }
                }
            }
        }
    }

    if windows.len() == 1 {
        return Ok(lanes.pop().expect("one lane"));
    }
    let start = |w: &GroupWindow| match direction {
        Direction::Forward => w.first,
        Direction::Backward => w.last,
    };
    match seam {
        SeamMode::Dedup => {
            // Corrections vanish on a window's starting group, and every other
            // group belongs to exactly one window as a non-starting group.
            let mut out = r.clone();
            for (w, lane) in windows.iter().zip(&lanes) {
                for g in w.groups().filter(|&g| g != start(w)) {
                    copy_blocks(&mut out, lane, partition.group_blocks(g));
                }
            }
            Ok(out)
        }
        SeamMode::Literal => {
            let mut out = sys.zeros();
            for (w, lane) in windows.iter().zip(&lanes) {
                for g in w.groups() {
                    axpy_blocks(&mut out, lane, partition.group_blocks(g));
                }
            }
            Ok(out)
        }
    }
}

/// A configured preconditioner with its precomputed schedule.
pub struct Sweeper<'a> {
    sys: &'a InterfaceSystem,
    config: SweepConfig,
    trace: StepTrace,
}

impl<'a> Sweeper<'a> {
    pub fn new(sys: &'a InterfaceSystem, config: SweepConfig) -> Self {
        let trace = step_schedule(&config, sys.partition());
        Self { sys, config, trace }
    }

    pub fn config(&self) -> &SweepConfig {
        &self.config
    }

    pub fn trace(&self) -> &StepTrace {
        &self.trace
    }

    /// Counted sequential steps per application.
    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    fn records(&self, phase: Phase) -> Vec<&StepRecord> {
        self.trace.phase(phase).collect()
    }

    fn half(&self, r: &InterfaceVector, direction: Direction) -> Result<InterfaceVector> {
        let windows = windows_for(self.sys.partition(), self.config.kind, direction);
        let phase = match direction {
            Direction::Forward => Phase::Forward,
            Direction::Backward => Phase::Backward,
        };
        run_half(
            self.sys,
            r,
            &windows,
            &self.records(phase),
            direction,
            self.config.bsp_seam,
        )
    }

    pub fn apply(&self, r: &InterfaceVector) -> Result<InterfaceVector> {
        match self.config.kind {
            PreconditionerKind::None => Ok(r.clone()),
            PreconditionerKind::Sp => {
                let z = self.half(r, Direction::Forward)?;
                self.half(&z, Direction::Backward)
            }
            PreconditionerKind::Bsp => {
                let lower = self.half(r, Direction::Forward)?;
                let residual = if self.config.bsp_intermediate_residual {
                    let mut res = self.sys.apply_interface_operator(&lower)?;
                    for (x, b) in res.as_mut_slice().iter_mut().zip(r.as_slice()) {
                        *x = b - *x;
                    }
                    res
                } else {
                    r.clone()
                };
                let mut out = self.half(&residual, Direction::Backward)?;
                for (o, l) in out.as_mut_slice().iter_mut().zip(lower.as_slice()) {
                    *o += l;
                }
                Ok(out)
            }
        }
    }
}

impl LinearOperator for Sweeper<'_> {
    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let r = InterfaceVector::from_vec(x.to_vec(), self.sys.block_len());
        Ok(Sweeper::apply(self, &r)?.into_vec())
    }
}

/// `S_L⁻¹ r`: one full forward sweep.
pub fn forward_sweep(sys: &InterfaceSystem, r: &InterfaceVector) -> Result<InterfaceVector> {
    Sweeper::new(sys, SweepConfig::of(PreconditionerKind::Sp)).half(r, Direction::Forward)
}

/// `S_U⁻¹ r`: one full backward sweep.
pub fn backward_sweep(sys: &InterfaceSystem, r: &InterfaceVector) -> Result<InterfaceVector> {
    Sweeper::new(sys, SweepConfig::of(PreconditionerKind::Sp)).half(r, Direction::Backward)
}

/// `S_U⁻¹ S_L⁻¹ r`.
pub fn sgs_apply(sys: &InterfaceSystem, r: &InterfaceVector) -> Result<InterfaceVector> {
    Sweeper::new(sys, SweepConfig::of(PreconditionerKind::Sp)).apply(r)
}

/// One block Jacobi half-step: concurrent partial sweeps over the lower
/// (forward) or upper (backward) windows.
pub fn bj_half_apply(
    sys: &InterfaceSystem,
    r: &InterfaceVector,
    direction: Direction,
    seam: SeamMode,
) -> Result<InterfaceVector> {
    let config = SweepConfig {
        kind: PreconditionerKind::Bsp,
        bsp_seam: seam,
        ..SweepConfig::default()
    };
    Sweeper::new(sys, config).half(r, direction)
}

pub fn bsp_apply(
    sys: &InterfaceSystem,
    b: &InterfaceVector,
    config: &SweepConfig,
) -> Result<InterfaceVector> {
    let config = SweepConfig {
        kind: PreconditionerKind::Bsp,
        ..*config
    };
    Sweeper::new(sys, config).apply(b)
}

/// Sequential steps per application implied by the schedule.
pub fn steps_per_application(config: &SweepConfig, partition: &Partition) -> usize {
    step_schedule(config, partition).len()
}
