//! Plain-text outputs: ledger CSV, field snapshots and the monitor CSV.
//! Floats are written with 17 significant digits and LF line endings, so a
//! write-read round trip is bitwise and identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::audit::{LedgerRow, MonitorRecord};
use crate::coupler::{CycleSummary, PointRow};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::mech::MechState;
use crate::tensor::DevTensor;

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn timeseries_to_string(rows: &[LedgerRow]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(LedgerRow::HEADER);
    out.push('\n');
    for r in rows {
        let cols = [
            r.t,
            r.e_mech,
            r.e_th,
            r.w_ext,
            r.d_cum,
            r.entropy,
            r.entropy_prod,
            r.min_theta,
            r.max_theta,
        ];
        for v in cols {
            num(&mut out, v);
            out.push(',');
        }
        let _ = write!(out, "{},", r.coupler_iters);
        num(&mut out, r.energy_residual);
        out.push(',');
        num(&mut out, r.phi_floor);
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_timeseries(rows: &[LedgerRow], path: &Path) -> Result<()> {
    write_file(path, &timeseries_to_string(rows))
}

pub fn parse_timeseries(text: &str, path: &Path) -> Result<Vec<LedgerRow>> {
    let fmt = |line: usize, message: String| Error::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == LedgerRow::HEADER => {}
        other => return Err(fmt(1, format!("unexpected header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 12 {
            return Err(fmt(lineno, format!("expected 12 columns, got {}", cols.len())));
        }
        let f = |j: usize| -> Result<f64> {
            cols[j]
                .parse::<f64>()
                .map_err(|e| fmt(lineno, format!("column {}: {e}", j + 1)))
        };
        let iters = cols[9]
            .parse::<usize>()
            .map_err(|e| fmt(lineno, format!("column 10: {e}")))?;
        rows.push(LedgerRow {
            t: f(0)?,
            e_mech: f(1)?,
            e_th: f(2)?,
            w_ext: f(3)?,
            d_cum: f(4)?,
            entropy: f(5)?,
            entropy_prod: f(6)?,
            min_theta: f(7)?,
            max_theta: f(8)?,
            coupler_iters: iters,
            energy_residual: f(10)?,
            phi_floor: f(11)?,
        });
    }
    Ok(rows)
}

pub fn read_timeseries(path: &Path) -> Result<Vec<LedgerRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timeseries(&text, path)
}

/// Nodal fields of one time level as stored in a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub num_triangles: usize,
    pub u: Vec<[f64; 2]>,
    pub z: Vec<DevTensor>,
    pub vartheta: Vec<f64>,
}

pub fn snapshot_to_string(mesh: &Mesh, state: &MechState, vartheta: &[f64]) -> Result<String> {
    let n = mesh.num_nodes();
    for len in [state.u.len(), state.z.len(), vartheta.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    let mut out = String::with_capacity(128 * (n + 1));
    let _ = writeln!(out, "# nodes {} triangles {}", n, mesh.num_triangles());
    for ((u, z), v) in state.u.iter().zip(&state.z).zip(vartheta) {
        let vals = [u[0], u[1], z.a, z.b, *v];
        for (j, v) in vals.into_iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_snapshot(mesh: &Mesh, state: &MechState, vartheta: &[f64], path: &Path) -> Result<()> {
    write_file(path, &snapshot_to_string(mesh, state, vartheta)?)
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<Snapshot> {
    let fmt = |line: usize, message: String| Error::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match parts.as_slice() {
        ["#", "nodes", n, "triangles", m] => (
            n.parse::<usize>().map_err(|e| fmt(1, e.to_string()))?,
            m.parse::<usize>().map_err(|e| fmt(1, e.to_string()))?,
        ),
        _ => return Err(fmt(1, format!("bad header {header:?}"))),
    };
    let mut snap = Snapshot {
        num_triangles: m,
        u: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        vartheta: Vec::with_capacity(n),
    };
    for (i, line) in lines.enumerate().take(n) {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fmt(i + 2, e.to_string()))?;
        if vals.len() != 5 {
            return Err(fmt(i + 2, format!("expected 5 values, got {}", vals.len())));
        }
        snap.u.push([vals[0], vals[1]]);
        snap.z.push(DevTensor::new(vals[2], vals[3]));
        snap.vartheta.push(vals[4]);
    }
    if snap.u.len() != n {
        return Err(fmt(snap.u.len() + 2, format!("expected {n} node rows")));
    }
    Ok(snap)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, path)
}

pub const MONITOR_HEADER: &str = "t,M,theta_pow,vartheta_l1,min_vartheta,zeta_bound_ok";

pub fn monitor_to_string(records: &[MonitorRecord]) -> String {
    let mut out = String::new();
    out.push_str(MONITOR_HEADER);
    out.push('\n');
    for r in records {
        for v in [r.t, r.m_value, r.theta_pow, r.vartheta_l1, r.min_vartheta] {
            num(&mut out, v);
            out.push(',');
        }
        let _ = writeln!(out, "{}", u8::from(r.zeta_bound_ok));
    }
    out
}

pub fn write_monitor(records: &[MonitorRecord], path: &Path) -> Result<()> {
    write_file(path, &monitor_to_string(records))
}

pub const POINT_HEADER: &str = "t,e_xx,e_xy,e_yy,z_a,z_b,s_xx,s_xy,s_yy,theta,vartheta,dissipation_rate";

pub fn point_rows_to_string(rows: &[PointRow]) -> String {
    let mut out = String::new();
    out.push_str(POINT_HEADER);
    out.push('\n');
    for r in rows {
        let vals = [
            r.t,
            r.strain.xx,
            r.strain.xy,
            r.strain.yy,
            r.z.a,
            r.z.b,
            r.stress.xx,
            r.stress.xy,
            r.stress.yy,
            r.theta,
            r.vartheta,
            r.dissipation_rate,
        ];
        for (j, v) in vals.into_iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn cycles_to_string(cycles: &[CycleSummary]) -> String {
    let mut out = String::from("cycle,loop_area,dissipated\n");
    for c in cycles {
        let _ = write!(out, "{},", c.index);
        num(&mut out, c.loop_area);
        out.push(',');
        num(&mut out, c.dissipated);
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ledger_is_header_only() {
        assert_eq!(timeseries_to_string(&[]), format!("{}\n", LedgerRow::HEADER));
    }

    #[test]
    fn ledger_round_trip_is_bitwise() {
        let rows = vec![
            LedgerRow { t: 0.0, e_mech: 1.0 / 3.0, phi_floor: 1.0, min_theta: 0.7, ..Default::default() },
            LedgerRow {
                t: 0.005,
                e_mech: std::f64::consts::PI,
                e_th: 1e-300,
                w_ext: -2.5e17,
                entropy: -0.1,
                coupler_iters: 7,
                energy_residual: 5e-324,
                ..Default::default()
            },
        ];
        let text = timeseries_to_string(&rows);
        assert!(!text.contains('\r'));
        let back = parse_timeseries(&text, Path::new("mem")).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            for (x, y) in a.float_columns().iter().zip(b.float_columns()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(a.coupler_iters, b.coupler_iters);
        }
    }

    #[test]
    fn zero_snapshot_has_zero_columns() {
        let mesh = Mesh::rectangle(2, 2, 1.0, 1.0).unwrap();
        let state = MechState::zeros(9);
        let text = snapshot_to_string(&mesh, &state, &[0.0; 9]).unwrap();
        assert!(text.starts_with("# nodes 9 triangles 8\n"));
        let snap = parse_snapshot(&text, Path::new("mem")).unwrap();
        assert!(snap.u.iter().all(|u| *u == [0.0, 0.0]));
        assert!(snap.z.iter().all(|z| *z == DevTensor::ZERO));
        assert!(snap.vartheta.iter().all(|v| *v == 0.0));
        assert_eq!(snap.num_triangles, 8);
    }

    #[test]
    fn bad_column_count_reports_line() {
        let text = format!("{}\n1,2,3\n", LedgerRow::HEADER);
        match parse_timeseries(&text, Path::new("x")) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
