//! File output: CSV time series, state snapshots, legacy VTK and run
//! manifests.
//!
//! Every CSV starts with a comment line `# config_hash=<hex>` tying it to the
//! manifest of the run that wrote it, followed by a fixed header row.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{EnergyRecord, RelEnergyRecord};
use crate::error::{Error, Result};
use crate::grid::{make_grid, BcMode, DirectorField, MacVectorField, ScalarField, State};
use crate::mms::{ConvergenceTable, ERROR_FLOOR};
use crate::picard::PicardReport;

pub const ENERGY_HEADER: [&str; 6] = ["t", "E", "D", "residual", "drift", "U0_proxy"];
pub const PICARD_HEADER: [&str; 5] = ["slab_index", "iter", "U_bar", "ratio", "halvings"];
pub const REL_ENERGY_HEADER: [&str; 4] = ["t", "R", "phi", "envelope"];
pub const CONVERGENCE_HEADER: [&str; 6] = ["h", "dt", "err_u_L2", "err_d_L2", "order_u", "order_d"];
pub const STUDY_HEADER: [&str; 8] = [
    "slab_T",
    "epsilon",
    "dt",
    "iterations",
    "converged",
    "terminal_ratio",
    "max_ratio",
    "U0_proxy",
];

/// Opens `path` for CSV output and writes the hash comment line.
pub fn csv_writer(path: &Path, config_hash: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config_hash={config_hash}")?;
    Ok(csv::Writer::from_writer(file))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_energy_csv(path: &Path, hash: &str, records: &[EnergyRecord]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(ENERGY_HEADER)?;
    for r in records {
        w.write_record([r.t, r.energy, r.dissipation, r.residual, r.drift, r.u0_proxy].map(num))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per Picard iterate; `ratio` is empty on the first iterate of
/// each slab.
pub fn write_picard_csv(path: &Path, hash: &str, reports: &[PicardReport]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(PICARD_HEADER)?;
    for (slab, rep) in reports.iter().enumerate() {
        for (k, u) in rep.iterates.iter().enumerate() {
            let ratio = if k == 0 { None } else { rep.ratios.get(k - 1).copied() };
            w.write_record([
                slab.to_string(),
                k.to_string(),
                num(*u),
                opt(ratio),
                rep.halvings.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_rel_energy_csv(path: &Path, hash: &str, records: &[RelEnergyRecord]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(REL_ENERGY_HEADER)?;
    for r in records {
        w.write_record([r.t, r.r, r.phi, r.envelope].map(num))?;
    }
    w.flush()?;
    Ok(())
}

/// Orders are written as numbers, empty on the first row, and `floor` when
/// both errors of the pair sit below the rounding floor.
pub fn write_convergence_csv(path: &Path, hash: &str, table: &ConvergenceTable) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(CONVERGENCE_HEADER)?;
    for (i, r) in table.rows.iter().enumerate() {
        let show = |o: Option<f64>, e: f64| match o {
            Some(v) => num(v),
            None if i > 0 && e < ERROR_FLOOR => "floor".to_string(),
            None => String::new(),
        };
        w.write_record([
            num(r.h),
            num(r.dt),
            num(r.err_u_l2),
            num(r.err_d_l2),
            show(r.order_u, r.err_u_l2),
            show(r.order_d, r.err_d_l2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by this module: skips comment lines and returns the
/// header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// Layout description stored next to the binary snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub dims: Vec<usize>,
    pub lengths: Vec<f64>,
    pub bc: BcMode,
    pub t: f64,
    /// Field blocks in file order.
    pub fields: Vec<String>,
    pub layout: String,
    pub config_hash: String,
}

const SNAPSHOT_FORMAT: &str = "nematic-snapshot-1";

/// Writes `<stem>.bin` (little-endian f64) and `<stem>.toml` (header).
/// Each field block lists interior cells row-major, last axis fastest; the
/// velocity component along axis `a` of a cell is the one on its low face
/// along `a`.
pub fn write_snapshot(dir: &Path, stem: &str, state: &State, hash: &str) -> Result<[PathBuf; 2]> {
    let g = state.grid();
    let mut fields = Vec::new();
    let mut bytes = Vec::with_capacity(8 * g.cell_count() * (g.ndim() + 4));
    let mut push = |name: String, data: &[f64]| {
        fields.push(name);
        for &i in g.interior() {
            bytes.extend_from_slice(&data[i].to_le_bytes());
        }
    };
    for a in 0..g.ndim() {
        push(format!("u{a}"), state.u.comp(a));
    }
    for c in 0..3 {
        push(format!("d{c}"), state.d.comp(c));
    }
    push("p".into(), state.p.data());
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.into(),
        dims: g.dims().to_vec(),
        lengths: g.lengths().to_vec(),
        bc: g.bc(),
        t: state.t,
        fields,
        layout: "f64 little-endian, interior cells row-major, last axis fastest".into(),
        config_hash: hash.into(),
    };
    let bin = dir.join(format!("{stem}.bin"));
    let head = dir.join(format!("{stem}.toml"));
    fs::write(&bin, bytes)?;
    fs::write(&head, toml::to_string(&header).expect("header serialises"))?;
    Ok([bin, head])
}

/// Inverse of [`write_snapshot`].
pub fn read_snapshot(dir: &Path, stem: &str) -> Result<State> {
    let text = fs::read_to_string(dir.join(format!("{stem}.toml")))?;
    let header: SnapshotHeader = toml::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("bad snapshot header: {e}")))?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(Error::InvalidArgument(format!("unsupported snapshot format {}", header.format)));
    }
    let g = make_grid(&header.dims, &header.lengths, header.bc)?;
    let mut raw = Vec::new();
    File::open(dir.join(format!("{stem}.bin")))?.read_to_end(&mut raw)?;
    let n = g.cell_count();
    let blocks = g.ndim() + 4;
    if raw.len() != 8 * n * blocks {
        return Err(Error::InvalidArgument(format!(
            "snapshot holds {} bytes, expected {}",
            raw.len(),
            8 * n * blocks
        )));
    }
    let block = |b: usize| {
        let mut out = vec![0.0; g.padded_len()];
        for (k, &i) in g.interior().iter().enumerate() {
            let at = 8 * (b * n + k);
            out[i] = f64::from_le_bytes(raw[at..at + 8].try_into().expect("8 bytes"));
        }
        out
    };
    let mut u = MacVectorField::from_comps(&g, (0..g.ndim()).map(block).collect());
    crate::grid::apply_velocity_bc(&mut u);
    let nd = g.ndim();
    let mut d = DirectorField::from_comps(&g, [block(nd), block(nd + 1), block(nd + 2)]);
    crate::grid::apply_director_bc(&mut d);
    let mut p = ScalarField::from_data(&g, block(nd + 3));
    crate::grid::apply_scalar_bc(&mut p);
    State::new(u, d, p, header.t)
}

/// Legacy VTK structured-points file with cell data: velocity (face
/// averages), director and pressure.
pub fn write_vtk(path: &Path, state: &State) -> Result<()> {
    let g = state.grid();
    let ndim = g.ndim();
    let mut dims = [1usize; 3];
    let mut h = [1.0; 3];
    for a in 0..ndim {
        dims[a] = g.dims()[a];
        h[a] = g.h(a);
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "nematic state t={}", state.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", dims[0] + 1, dims[1] + 1, dims[2] + 1)?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING {} {} {}", h[0], h[1], h[2])?;
    writeln!(w, "CELL_DATA {}", g.cell_count())?;
    // VTK wants x fastest.
    let mut order = Vec::with_capacity(g.cell_count());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let m = [i + 1, j + 1, k + 1];
                order.push(g.flatten(&m[..ndim]));
            }
        }
    }
    let uc = state.u.cell_centered();
    writeln!(w, "VECTORS velocity double")?;
    for &c in &order {
        let v: Vec<f64> = (0..3).map(|a| if a < ndim { uc[a][c] } else { 0.0 }).collect();
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }
    writeln!(w, "VECTORS director double")?;
    for &c in &order {
        writeln!(w, "{} {} {}", state.d.comp(0)[c], state.d.comp(1)[c], state.d.comp(2)[c])?;
    }
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &c in &order {
        writeln!(w, "{}", state.p.data()[c])?;
    }
    w.flush()?;
    Ok(())
}

/// Provenance record written next to every command's artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_hash: &str, seed: u64, threads: usize) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash.into(),
            seed,
            threads,
            wall_time_s: 0.0,
            artifacts: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.toml");
        fs::write(&path, toml::to_string(self).expect("manifest serialises"))?;
        Ok(path)
    }
}

/// Machine-readable failure description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBlock {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorBlock {
    pub fn from_error(e: &Error) -> Self {
        ErrorBlock {
            kind: e.kind().into(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("error block serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::InitialCondition;

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for (dims, bc) in [(vec![8, 6], BcMode::Wall), (vec![4, 6, 4], BcMode::Periodic)] {
            let lengths = vec![1.0; dims.len()];
            let g = make_grid(&dims, &lengths, bc).unwrap();
            let mut s = InitialCondition::random_smooth(0.4).build(&g, 2).unwrap();
            s.p = ScalarField::from_fn(&g, |x| x[0] - 0.5);
            s.t = 0.375;
            write_snapshot(dir.path(), "s", &s, "abc").unwrap();
            let r = read_snapshot(dir.path(), "s").unwrap();
            assert_eq!(r.t, s.t);
            assert_eq!(r.u.comps(), s.u.comps());
            assert_eq!(r.d.comps(), s.d.comps());
            assert_eq!(r.p.data(), s.p.data());
        }
    }

    #[test]
    fn energy_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let rec = EnergyRecord {
            t: 0.5,
            energy: 0.25,
            dissipation: 1.0,
            residual: 0.0,
            drift: 1e-9,
            u0_proxy: 2.0,
        };
        write_energy_csv(&path, "ff", &[rec]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=ff\nt,E,D,residual,drift,U0_proxy\n0.5,0.25,1,0,0.000000001,2\n"));
        let (h, rows) = read_csv(&path).unwrap();
        assert_eq!(h, ENERGY_HEADER);
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn picard_csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let rep = PicardReport {
            t_start: 0.0,
            slab_t: 0.1,
            dt: 0.01,
            iterates: vec![1.0, 0.1, 0.01],
            ratios: vec![0.1, 0.1],
            halvings: 1,
            converged: true,
        };
        write_picard_csv(&path, "x", &[rep.clone(), rep]).unwrap();
        let (_, rows) = read_csv(&path).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0], ["0", "0", "1", "", "1"]);
        assert_eq!(rows[4], ["1", "1", "0.1", "0.1", "1"]);
    }

    #[test]
    fn vtk_has_all_cells() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(&[4, 5], &[1.0, 1.0], BcMode::Wall).unwrap();
        let path = dir.path().join("s.vtk");
        write_vtk(&path, &State::rest(&g)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("CELL_DATA 20"));
        assert!(text.contains("DIMENSIONS 5 6 2"));
        assert_eq!(text.lines().filter(|l| *l == "0 0 1").count(), 20);
    }
}
