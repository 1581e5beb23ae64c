//! Time-history CSV, field snapshots and checkpoint files.
//!
//! Snapshot layout (little-endian): the magic `NSSNAP01`, `u32` dimension, `u32` base degree,
//! `f64` time, `u32` elements per direction, then one block per velocity component followed
//! by one pressure block. A block is `u32` degree and `u32` basis count per direction and the
//! coefficients with the first direction varying fastest.

use std::fs::{self, File};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::config::RunConfig;
use crate::diagnostics::{ConservationReport, EnergyBudget};
use crate::domain::Vec3;
use crate::error::{Error, Result};
use crate::simulation::{Simulation, StepRecord};
use crate::small_scales::{ClosureKind, SmallScaleField};
use crate::spline::ScalarSplineSpace;
use crate::time_integrator::State;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"NSSNAP01";
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NSCKPT01";

/// Column names of the time-history file.
pub const HISTORY_COLUMNS: [&str; 27] = [
    "t",
    "E_h",
    "E_prime",
    "E_cross",
    "E_total",
    "D_visc",
    "D_small",
    "fraction",
    "div_max",
    "mom_x",
    "mom_y",
    "mom_z",
    "W_force_h",
    "W_force_prime",
    "T_laplace",
    "T_pressure_small",
    "T_backscatter",
    "T_convective_cross",
    "T_rate_cross",
    "unwanted",
    "numerical_dissipation",
    "identity_residual",
    "orthogonality",
    "step",
    "passes",
    "nonlinear_residual",
    "linear_iterations",
];

/// One row of the history: energies and conservation of the current state, rates of the
/// step that produced it.
pub fn history_row(step: usize, budget: &EnergyBudget, cons: &ConservationReport, record: Option<&StepRecord>) -> Vec<String> {
    let f = |v: f64| format!("{v:e}");
    let rates = record.map_or(*budget, |r| r.balance.alpha);
    let mut row = vec![
        f(budget.t),
        f(budget.e_h),
        f(budget.e_prime),
        f(budget.e_cross),
        f(budget.e_total),
        f(rates.d_visc),
        f(rates.d_small),
        f(rates.fraction),
        f(cons.div_max),
        f(cons.momentum[0]),
        f(cons.momentum[1]),
        f(cons.momentum[2]),
        f(rates.w_force_h),
        f(rates.w_force_prime),
        f(rates.t_laplace),
        f(rates.t_pressure_small),
        f(rates.t_backscatter),
        f(rates.t_convective_cross),
        f(rates.t_rate_cross),
        f(rates.unwanted),
    ];
    match record {
        Some(r) => {
            row.push(f(r.balance.numerical_dissipation));
            row.push(f(r.balance.identity_residual));
        }
        None => {
            row.push(f(0.0));
            row.push(f(0.0));
        }
    }
    row.push(f(cons.orthogonality));
    row.push(step.to_string());
    row.push(record.map_or(0, |r| r.report.passes).to_string());
    row.push(f(record.map_or(0.0, |r| r.report.final_residual)));
    row.push(record.map_or(0, |r| r.report.linear_iterations).to_string());
    row
}

/// Append-only CSV writer flushed after every row.
pub struct HistoryWriter {
    writer: csv::Writer<File>,
}

impl HistoryWriter {
    /// Creates (truncating) `path` and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(File::create(path)?);
        writer.write_record(HISTORY_COLUMNS)?;
        writer.flush()?;
        Ok(Self { writer })
    }

    /// Keeps the rows of an existing history up to and including `last_step`, then appends.
    pub fn resume(path: &Path, last_step: usize) -> Result<Self> {
        let mut kept: Vec<csv::StringRecord> = Vec::new();
        if path.exists() {
            let mut reader = csv::Reader::from_path(path)?;
            let step_col = HISTORY_COLUMNS.iter().position(|c| *c == "step").unwrap_or(0);
            for rec in reader.records() {
                let rec = match rec {
                    Ok(r) => r,
                    Err(_) => break,
                };
                match rec.get(step_col).and_then(|s| s.parse::<usize>().ok()) {
                    Some(s) if s <= last_step => kept.push(rec),
                    _ => break,
                }
            }
        }
        let mut out = Self::create(path)?;
        for rec in &kept {
            out.writer.write_record(rec)?;
        }
        out.writer.flush()?;
        Ok(out)
    }

    pub fn write(&mut self, row: &[String]) -> Result<()> {
        self.writer.write_record(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

fn write_vec<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    w.write_u64::<LittleEndian>(v.len() as u64)?;
    for &x in v {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

fn read_vec<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = r.read_u64::<LittleEndian>()? as usize;
    if n > (1 << 40) {
        return Err(Error::Format("implausible array length".into()));
    }
    let mut v = vec![0.0; n];
    r.read_f64_into::<LittleEndian>(&mut v)?;
    Ok(v)
}

fn write_vec3<W: Write>(w: &mut W, v: &[Vec3]) -> Result<()> {
    w.write_u64::<LittleEndian>(v.len() as u64)?;
    for x in v {
        for &c in x {
            w.write_f64::<LittleEndian>(c)?;
        }
    }
    Ok(())
}

fn read_vec3<R: Read>(r: &mut R) -> Result<Vec<Vec3>> {
    let flat = {
        let n = r.read_u64::<LittleEndian>()? as usize;
        if n > (1 << 38) {
            return Err(Error::Format("implausible array length".into()));
        }
        let mut v = vec![0.0; 3 * n];
        r.read_f64_into::<LittleEndian>(&mut v)?;
        v
    };
    Ok(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_block<W: Write>(w: &mut W, space: &ScalarSplineSpace, coeffs: &[f64]) -> Result<()> {
    for dir in 0..space.dim() {
        w.write_u32::<LittleEndian>(space.knots(dir).degree() as u32)?;
    }
    for dir in 0..space.dim() {
        w.write_u32::<LittleEndian>(space.n_basis_dir(dir) as u32)?;
    }
    for &c in coeffs {
        w.write_f64::<LittleEndian>(c)?;
    }
    Ok(())
}

/// Writes the velocity and pressure coefficients of the current state.
pub fn write_snapshot(path: &Path, sim: &Simulation) -> Result<()> {
    let asm = sim.assembler();
    let space = asm.space();
    let layout = asm.layout();
    let state = sim.state();
    let mut buf = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.write_u32::<LittleEndian>(space.dim() as u32)?;
    buf.write_u32::<LittleEndian>(space.base_degree() as u32)?;
    buf.write_f64::<LittleEndian>(state.t)?;
    for &n in asm.domain().elements() {
        buf.write_u32::<LittleEndian>(n as u32)?;
    }
    for c in 0..space.dim() {
        let off = layout.velocity_offsets[c];
        write_block(&mut buf, space.velocity(c), &state.u[off..off + layout.velocity[c]])?;
    }
    write_block(&mut buf, space.pressure(), &state.p)?;
    write_atomic(path, &buf)
}

/// Coefficient arrays of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub base_degree: usize,
    pub t: f64,
    pub elements: Vec<usize>,
    /// `(degrees, basis counts, coefficients)` per velocity component.
    pub velocity: Vec<(Vec<usize>, Vec<usize>, Vec<f64>)>,
    pub pressure: (Vec<usize>, Vec<usize>, Vec<f64>),
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a snapshot file".into()));
    }
    let dim = r.read_u32::<LittleEndian>()? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("bad dimension {dim}")));
    }
    let base_degree = r.read_u32::<LittleEndian>()? as usize;
    let t = r.read_f64::<LittleEndian>()?;
    let elements = (0..dim)
        .map(|_| r.read_u32::<LittleEndian>().map(|n| n as usize))
        .collect::<std::io::Result<Vec<_>>>()?;
    let block = |r: &mut BufReader<File>| -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
        let deg = (0..dim)
            .map(|_| r.read_u32::<LittleEndian>().map(|n| n as usize))
            .collect::<std::io::Result<Vec<_>>>()?;
        let nb = (0..dim)
            .map(|_| r.read_u32::<LittleEndian>().map(|n| n as usize))
            .collect::<std::io::Result<Vec<_>>>()?;
        let mut c = vec![0.0; nb.iter().product()];
        r.read_f64_into::<LittleEndian>(&mut c)?;
        Ok((deg, nb, c))
    };
    let velocity = (0..dim).map(|_| block(&mut r)).collect::<Result<Vec<_>>>()?;
    let pressure = block(&mut r)?;
    Ok(Snapshot {
        dim,
        base_degree,
        t,
        elements,
        velocity,
        pressure,
    })
}

/// Writes everything needed to continue the run bit-for-bit.
pub fn write_checkpoint(path: &Path, cfg: &RunConfig, state: &State, small: &SmallScaleField) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    let text = cfg.to_text();
    buf.write_u64::<LittleEndian>(text.len() as u64)?;
    buf.extend_from_slice(text.as_bytes());
    buf.write_f64::<LittleEndian>(state.t)?;
    buf.write_u64::<LittleEndian>(state.step as u64)?;
    write_vec(&mut buf, &state.u)?;
    write_vec(&mut buf, &state.u_dot)?;
    write_vec(&mut buf, &state.p)?;
    write_vec(&mut buf, &state.zeta)?;
    buf.write_u8(match small.kind {
        ClosureKind::None => 0,
        ClosureKind::Static => 1,
        ClosureKind::Dynamic => 2,
    })?;
    buf.write_u64::<LittleEndian>(small.n_elements as u64)?;
    buf.write_u64::<LittleEndian>(small.n_points as u64)?;
    write_vec3(&mut buf, &small.velocity)?;
    write_vec3(&mut buf, &small.rate)?;
    write_vec(&mut buf, &small.pressure)?;
    write_vec(&mut buf, &small.tau_m)?;
    write_vec(&mut buf, &small.tau_c)?;
    write_atomic(path, &buf)
}

/// Contents of a checkpoint file.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub state: State,
    pub small: SmallScaleField,
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let len = r.read_u64::<LittleEndian>()? as usize;
    if len > (1 << 24) {
        return Err(Error::Format("implausible configuration length".into()));
    }
    let mut text = vec![0u8; len];
    r.read_exact(&mut text)?;
    let text = String::from_utf8(text).map_err(|_| Error::Format("configuration is not UTF-8".into()))?;
    let config = RunConfig::parse(&text)?;
    let t = r.read_f64::<LittleEndian>()?;
    let step = r.read_u64::<LittleEndian>()? as usize;
    let state = State {
        u: read_vec(&mut r)?,
        u_dot: read_vec(&mut r)?,
        p: read_vec(&mut r)?,
        zeta: read_vec(&mut r)?,
        t,
        step,
    };
    let kind = match r.read_u8()? {
        0 => ClosureKind::None,
        1 => ClosureKind::Static,
        2 => ClosureKind::Dynamic,
        k => return Err(Error::Format(format!("unknown closure tag {k}"))),
    };
    let n_elements = r.read_u64::<LittleEndian>()? as usize;
    let n_points = r.read_u64::<LittleEndian>()? as usize;
    let small = SmallScaleField {
        kind,
        n_elements,
        n_points,
        velocity: read_vec3(&mut r)?,
        rate: read_vec3(&mut r)?,
        pressure: read_vec(&mut r)?,
        tau_m: read_vec(&mut r)?,
        tau_c: read_vec(&mut r)?,
    };
    if small.velocity.len() != n_elements * n_points || small.rate.len() != small.velocity.len() {
        return Err(Error::Format("small-scale arrays do not match their header".into()));
    }
    Ok(Checkpoint { config, state, small })
}

pub fn checkpoint_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("checkpoint_{step:06}.bin"))
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:06}.bin"))
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub final_energy: f64,
    pub history: PathBuf,
    pub last_checkpoint: Option<PathBuf>,
}

/// Runs `sim` to completion, streaming the history and writing periodic checkpoints and
/// snapshots into the configured output directory. When `resumed` is set the existing
/// history is kept up to the current step.
///
/// A failed step returns the error; checkpoints already written stay in place.
pub fn run(sim: &mut Simulation, resumed: bool) -> Result<RunSummary> {
    let cfg = sim.config().clone();
    fs::create_dir_all(&cfg.output_dir)?;
    let history = cfg.output_dir.join(&cfg.history_file);
    let mut writer = if resumed {
        HistoryWriter::resume(&history, sim.state().step)?
    } else {
        let mut w = HistoryWriter::create(&history)?;
        w.write(&history_row(sim.state().step, &sim.budget(), &sim.conservation(), None))?;
        w
    };
    let mut last_checkpoint = None;
    let mut steps = 0;
    while !sim.finished() {
        let rec = sim.advance()?;
        steps += 1;
        let step = sim.state().step;
        writer.write(&history_row(step, &rec.budget, &rec.conservation, Some(&rec)))?;
        if cfg.checkpoint_every > 0 && step.is_multiple_of(cfg.checkpoint_every) {
            let path = checkpoint_path(&cfg.output_dir, step);
            write_checkpoint(&path, &cfg, sim.state(), sim.small())?;
            last_checkpoint = Some(path);
        }
        if cfg.snapshot_every > 0 && step.is_multiple_of(cfg.snapshot_every) {
            write_snapshot(&snapshot_path(&cfg.output_dir, step), sim)?;
        }
    }
    Ok(RunSummary {
        steps,
        final_time: sim.state().t,
        final_energy: sim.budget().e_total,
        history,
        last_checkpoint,
    })
}

/// Budget and conservation report of a stored state.
pub fn replay_budget(path: &Path) -> Result<(EnergyBudget, ConservationReport)> {
    let ck = read_checkpoint(path)?;
    let sim = Simulation::resume(&ck.config, ck.state, ck.small)?;
    Ok((sim.budget(), sim.conservation()))
}
