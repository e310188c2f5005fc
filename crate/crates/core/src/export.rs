//! Artifact files for a finished run.
//!
//! All files are staged in a temporary directory inside the output
//! directory and renamed into place only once every file has been written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::comb::{frequency_of, frequency_to_compound, Polarization};
use crate::config::ExportSelector;
use crate::error::{Error, Result};
use crate::lattice::MacronodeGraph;
use crate::mtx;
use crate::pipeline::{Report, RunState, SLOT_ORDERING};

pub const EDGES_FILE: &str = "edges.json";
pub const MODES_FILE: &str = "modes.json";
pub const DOT_FILE: &str = "macronodes.dot";
pub const REPORT_FILE: &str = "report.json";

#[derive(Serialize)]
struct ModeEntry {
    index: usize,
    opo: usize,
    pol: Polarization,
    n: i64,
    macronode: i64,
    slot: usize,
}

#[derive(Serialize)]
struct ThetaFile {
    index: usize,
    theta: f64,
    analytic: String,
    numeric: Option<String>,
}

#[derive(Serialize)]
struct ModeMap {
    slot_ordering: &'static str,
    modes: Vec<ModeEntry>,
    matrices: Vec<(&'static str, &'static str)>,
    nullifier_covariances: Vec<ThetaFile>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Pretty JSON for a report, newline terminated.
pub fn report_json(report: &Report) -> String {
    to_json(report)
}

/// Parse a report written by [`report_json`].
pub fn parse_report(text: &str) -> Result<Report> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    })
}

/// DOT rendering of the macronode graph. Each node carries its macronode
/// index and the label of the connected component ("copy") it belongs to;
/// with `copies > 1` the compound index `(m, k)` is shown as well.
pub fn macronode_dot(mg: &MacronodeGraph, copies: i64) -> String {
    let mut copy_of = std::collections::BTreeMap::new();
    for (c, comp) in mg.components().iter().enumerate() {
        for &m in comp {
            copy_of.insert(m, c);
        }
    }
    let mut out = String::new();
    out.push_str("graph macronodes {\n  node [shape=circle];\n");
    for &m in &mg.nodes {
        let c = copy_of[&m];
        let mut label = format!("m = {m}\\ncopy {c}");
        if copies > 1 {
            if let Ok(ci) = frequency_to_compound(frequency_of(m), copies) {
                let _ = write!(label, "\\n({}, {})", ci.m, ci.k);
            }
        }
        let _ = writeln!(out, "  {m} [label=\"{label}\", copy={c}];");
    }
    for &(a, b, _) in &mg.edges {
        let _ = writeln!(out, "  {a} -- {b} [offset={}];", b - a);
    }
    out.push_str("}\n");
    out
}

fn file_list(state: &RunState, selectors: &[ExportSelector]) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let report = &state.summary.report;
    for sel in ExportSelector::ALL {
        if !selectors.contains(&sel) {
            continue;
        }
        match sel {
            ExportSelector::Edges => files.push((EDGES_FILE.into(), to_json(&state.hgraph.edge_records()))),
            ExportSelector::Matrices => {
                let g = state.hgraph.adjacency_matrix();
                let r = state.interferometer.matrix();
                files.push(("G.mtx".into(), mtx::write_real(&g)));
                files.push(("R.mtx".into(), mtx::write_real(r)));
                files.push(("Z.mtx".into(), mtx::write_complex(&state.z.re, &state.z.im)));
                files.push(("Z_re.mtx".into(), mtx::write_real(&state.z.re)));
                files.push(("Z_im.mtx".into(), mtx::write_real(&state.z.im)));
                files.push(("ZC.mtx".into(), mtx::write_complex(&state.cluster.re, &state.cluster.im)));
                let mut thetas = Vec::new();
                for (i, ts) in state.thetas.iter().enumerate() {
                    let analytic = format!("nullifier_cov_analytic_{i}.mtx");
                    files.push((analytic.clone(), mtx::write_real(&ts.analytic)));
                    let numeric = ts.numeric.as_ref().map(|m| {
                        let name = format!("nullifier_cov_numeric_{i}.mtx");
                        files.push((name.clone(), mtx::write_dense(m)));
                        name
                    });
                    thetas.push(ThetaFile {
                        index: i,
                        theta: ts.theta,
                        analytic,
                        numeric,
                    });
                }
                let modes = state
                    .hgraph
                    .modes()
                    .iter()
                    .enumerate()
                    .map(|(index, q)| ModeEntry {
                        index,
                        opo: q.opo,
                        pol: q.pol,
                        n: q.n,
                        macronode: q.macronode(),
                        slot: q.slot(),
                    })
                    .collect();
                let map = ModeMap {
                    slot_ordering: SLOT_ORDERING,
                    modes,
                    matrices: vec![
                        ("G.mtx", "H-graph adjacency G"),
                        ("R.mtx", "macronode interferometer R"),
                        ("Z.mtx", "graph state Z = R Z0 R^T"),
                        ("Z_re.mtx", "Re Z"),
                        ("Z_im.mtx", "Im Z"),
                        ("ZC.mtx", "cluster form i eps I + t R G R^T"),
                    ],
                    nullifier_covariances: thetas,
                };
                files.push((MODES_FILE.into(), to_json(&map)));
            }
            ExportSelector::Dot => files.push((
                DOT_FILE.into(),
                macronode_dot(&state.macronode_graph, report.config.copies()),
            )),
            ExportSelector::Report => files.push((REPORT_FILE.into(), report_json(report))),
        }
    }
    files
}

/// Write the selected artifacts into `out`, creating it if needed.
/// Returns the final paths. On error no new file is left behind.
pub fn export_artifacts(state: &RunState, selectors: &[ExportSelector], out: &Path) -> Result<Vec<PathBuf>> {
    let files = file_list(state, selectors);
    if files.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(out).map_err(|e| Error::io(format!("cannot create {}", out.display()), e))?;
    let stage = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(out)
        .map_err(|e| Error::io(format!("cannot write to {}", out.display()), e))?;
    for (name, body) in &files {
        let path = stage.path().join(name);
        fs::write(&path, body).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    }
    let mut placed = Vec::new();
    for (name, _) in &files {
        let dest = out.join(name);
        if let Err(e) = fs::rename(stage.path().join(name), &dest) {
            for p in &placed {
                let _ = fs::remove_file(p);
            }
            return Err(Error::io(format!("cannot move {} into place", dest.display()), e));
        }
        placed.push(dest);
    }
    Ok(placed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::{CombWindow, OpoSpec};
    use crate::config::PipelineConfig;
    use crate::pipeline::run_pipeline;

    fn wire_state() -> RunState {
        let cfg = PipelineConfig::new(CombWindow::symmetric(4), vec![OpoSpec::single(1).unwrap()]);
        run_pipeline(&cfg).unwrap()
    }

    #[test]
    fn report_round_trips() {
        let state = wire_state();
        let text = report_json(&state.summary.report);
        let back = parse_report(&text).unwrap();
        assert_eq!(back, state.summary.report);
        assert_eq!(report_json(&back), text);
        assert!(matches!(parse_report("{\"format\": 1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn writes_every_selector() {
        let state = wire_state();
        let dir = tempfile::tempdir().unwrap();
        let paths = export_artifacts(&state, &ExportSelector::ALL, dir.path()).unwrap();
        let names: Vec<_> = paths.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        for expected in [EDGES_FILE, "G.mtx", "R.mtx", "Z.mtx", MODES_FILE, DOT_FILE, REPORT_FILE] {
            assert!(names.iter().any(|n| n == expected), "{expected} missing from {names:?}");
        }
        assert_eq!(names.iter().filter(|n| n.starts_with("nullifier_cov_numeric_")).count(), 3);
        // staging directory is gone
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, names.len());
        let g = mtx::read_matrix_market(&fs::read_to_string(dir.path().join("G.mtx")).unwrap()).unwrap();
        assert_eq!(g.symmetry, mtx::Symmetry::Symmetric);
        assert_eq!(g.to_csr().unwrap(), state.hgraph.adjacency_matrix());
        let z = mtx::read_matrix_market(&fs::read_to_string(dir.path().join("Z.mtx")).unwrap()).unwrap();
        assert_eq!(z.field, mtx::Field::Complex);
        assert_eq!(z.imag_part(), state.z.im);
    }

    #[test]
    fn unwritable_destination_leaves_nothing() {
        let state = wire_state();
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = export_artifacts(&state, &ExportSelector::ALL, &blocker.join("out")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn dot_labels_copies() {
        let cfg = PipelineConfig::new(CombWindow::symmetric(10), vec![OpoSpec::new(1, 3).unwrap()]);
        let state = run_pipeline(&cfg).unwrap();
        let dot = macronode_dot(&state.macronode_graph, 3);
        assert!(dot.starts_with("graph macronodes {"));
        assert!(dot.contains("copy 2"));
        assert!(!dot.contains("copy 3"));
        assert!(dot.contains("\\n("));
    }
}
