use std::fs;

use vmsflow::config::RunConfig;
use vmsflow::formulations::Formulation;
use vmsflow::output::{
    self, checkpoint_path, read_checkpoint, read_snapshot, snapshot_path, write_checkpoint, HISTORY_COLUMNS,
};
use vmsflow::simulation::Simulation;

fn config(form: Formulation, dir: &std::path::Path, steps: usize) -> RunConfig {
    let mut cfg = RunConfig::with_formulation(form);
    cfg.dim = 2;
    cfg.elements = 6;
    cfg.reynolds = 200.0;
    cfg.max_steps = Some(steps);
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn history_has_documented_header_and_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Formulation::Glsdd, dir.path(), 3);
    let mut sim = Simulation::new(&cfg).unwrap();
    let summary = output::run(&mut sim, false).unwrap();
    assert_eq!(summary.steps, 3);
    let text = fs::read_to_string(&summary.history).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,E_h,E_prime,E_cross,E_total,D_visc,D_small,fraction,div_max,mom_x,mom_y,mom_z,"));
    assert_eq!(header.split(',').count(), HISTORY_COLUMNS.len());
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let vals: Vec<&str> = r.split(',').collect();
        assert_eq!(vals.len(), HISTORY_COLUMNS.len());
        for v in vals {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Formulation::Vmss, dir.path(), 2);
    let mut sim = Simulation::new(&cfg).unwrap();
    sim.advance().unwrap();
    let path = dir.path().join("ck.bin");
    write_checkpoint(&path, &cfg, sim.state(), sim.small()).unwrap();
    let ck = read_checkpoint(&path).unwrap();
    assert_eq!(ck.config, cfg);
    assert_eq!(&ck.state, sim.state());
    assert_eq!(&ck.small, sim.small());
    for (a, b) in ck.state.u.iter().zip(&sim.state().u) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn corrupted_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.bin");
    fs::write(&path, b"NOTMAGIC....").unwrap();
    assert!(read_checkpoint(&path).is_err());
    assert!(read_snapshot(&path).is_err());
    fs::write(&path, b"NSCKPT01\x05").unwrap();
    assert!(read_checkpoint(&path).is_err());
}

#[test]
fn snapshot_holds_coefficients_in_direction_major_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Formulation::Galerkin, dir.path(), 1);
    cfg.elements = 5;
    cfg.degree = 2;
    cfg.snapshot_every = 1;
    let mut sim = Simulation::new(&cfg).unwrap();
    output::run(&mut sim, false).unwrap();
    let snap = read_snapshot(&snapshot_path(dir.path(), 1)).unwrap();
    assert_eq!(snap.dim, 2);
    assert_eq!(snap.base_degree, 2);
    assert_eq!(snap.elements, vec![5, 5]);
    assert_eq!(snap.t, sim.state().t);
    assert_eq!(snap.velocity[0].0, vec![3, 2]);
    assert_eq!(snap.velocity[1].0, vec![2, 3]);
    assert_eq!(snap.pressure.0, vec![2, 2]);
    let layout = sim.assembler().layout();
    let n0 = layout.velocity[0];
    assert_eq!(snap.velocity[0].2, sim.state().u[..n0]);
    assert_eq!(snap.velocity[1].2, sim.state().u[n0..]);
    assert_eq!(snap.pressure.2, sim.state().p);
    let space = sim.assembler().space().velocity(0);
    assert_eq!(space.flat_index(&[1, 0]), 1);
}

fn rows_after(text: &str, step: usize) -> Vec<String> {
    let step_col = HISTORY_COLUMNS.iter().position(|c| *c == "step").unwrap();
    text.lines()
        .skip(1)
        .filter(|l| l.split(',').nth(step_col).unwrap().parse::<usize>().unwrap() > step)
        .map(String::from)
        .collect()
}

#[test]
fn restart_reproduces_history_bit_for_bit() {
    for form in [Formulation::Glsdd, Formulation::Vmss] {
        let full = tempfile::tempdir().unwrap();
        let mut cfg = config(form, full.path(), 4);
        cfg.checkpoint_every = 2;
        cfg.deterministic_reductions = true;
        let mut sim = Simulation::new(&cfg).unwrap();
        let summary = output::run(&mut sim, false).unwrap();
        let reference = fs::read_to_string(&summary.history).unwrap();

        let ck = read_checkpoint(&checkpoint_path(full.path(), 2)).unwrap();
        let again = tempfile::tempdir().unwrap();
        let mut cfg2 = ck.config.clone();
        cfg2.output_dir = again.path().to_path_buf();
        let mut sim2 = Simulation::resume(&cfg2, ck.state, ck.small).unwrap();
        let s2 = output::run(&mut sim2, true).unwrap();
        assert_eq!(s2.steps, 2);
        let resumed = fs::read_to_string(&s2.history).unwrap();
        assert_eq!(rows_after(&reference, 2), rows_after(&resumed, 2), "{form}");
        assert_eq!(sim.state(), sim2.state());
    }
}

#[test]
fn resume_truncates_rows_past_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Formulation::Galerkin, dir.path(), 3);
    cfg.checkpoint_every = 1;
    let mut sim = Simulation::new(&cfg).unwrap();
    let summary = output::run(&mut sim, false).unwrap();
    let before = fs::read_to_string(&summary.history).unwrap();
    let ck = read_checkpoint(&checkpoint_path(dir.path(), 1)).unwrap();
    let mut sim2 = Simulation::resume(&ck.config, ck.state, ck.small).unwrap();
    output::run(&mut sim2, true).unwrap();
    let after = fs::read_to_string(&summary.history).unwrap();
    assert_eq!(before, after);
}

#[test]
fn killed_run_leaves_parseable_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Formulation::Galerkin, dir.path(), 2);
    let path = dir.path().join("h.csv");
    let mut sim = Simulation::new(&cfg).unwrap();
    {
        let mut w = output::HistoryWriter::create(&path).unwrap();
        w.write(&output::history_row(0, &sim.budget(), &sim.conservation(), None)).unwrap();
        let rec = sim.advance().unwrap();
        w.write(&output::history_row(1, &rec.budget, &rec.conservation, Some(&rec))).unwrap();
        std::mem::forget(w);
    }
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.records().count(), 2);
}

#[test]
fn replay_matches_live_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Formulation::Glsdd, dir.path(), 2);
    let mut sim = Simulation::new(&cfg).unwrap();
    sim.advance().unwrap();
    let path = dir.path().join("ck.bin");
    write_checkpoint(&path, &cfg, sim.state(), sim.small()).unwrap();
    let (b, c) = output::replay_budget(&path).unwrap();
    assert_eq!(b, sim.budget());
    assert_eq!(c, sim.conservation());
}
