//! Per-step trace rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub r: Vector3<f64>,
    pub p_err: Vector3<f64>,
    pub mu_d: Vector3<f64>,
    pub eta: Vector3<f64>,
    pub u_mpc: Vector3<f64>,
    pub bound_b: f64,
    pub bound_b_axis: f64,
    pub thrust: f64,
    pub omega: Vector3<f64>,
    pub omega_d: Vector3<f64>,
    /// Hybrid variable before any jump at `t`.
    pub theta: f64,
    /// Potential before any jump at `t`.
    pub u_pot: f64,
    /// Potential gap before any jump at `t`.
    pub mu_u: f64,
    /// Jumps up to and including `t`.
    pub jumps: u64,
    pub dist_rtilde: f64,
    pub solver_iters: [u64; 3],
    pub solver_flag: [u8; 3],
}

fn vec_cols(name: &str) -> [String; 3] {
    ["x", "y", "z"].map(|c| format!("{name}_{c}"))
}

/// Column names in file order.
pub fn trace_columns() -> Vec<String> {
    let mut c = vec!["t".to_string()];
    for n in ["p", "v", "r", "p_err", "mu_d", "eta", "u_mpc"] {
        c.extend(vec_cols(n));
    }
    c.extend(["bound_B", "bound_Baxis", "T"].map(String::from));
    c.extend(vec_cols("omega"));
    c.extend(vec_cols("omega_d"));
    c.extend(["theta", "U", "mu_U", "jumps", "dist_Rtilde"].map(String::from));
    c.extend(vec_cols("solver_iters"));
    c.extend(vec_cols("solver_flag"));
    c
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

impl TraceRow {
    fn fields(&self) -> Vec<String> {
        let mut out = vec![f(self.t)];
        for v in [&self.p, &self.v, &self.r, &self.p_err, &self.mu_d, &self.eta, &self.u_mpc] {
            out.extend(v.iter().map(|&x| f(x)));
        }
        out.extend([f(self.bound_b), f(self.bound_b_axis), f(self.thrust)]);
        out.extend(self.omega.iter().map(|&x| f(x)));
        out.extend(self.omega_d.iter().map(|&x| f(x)));
        out.extend([f(self.theta), f(self.u_pot), f(self.mu_u), self.jumps.to_string(), f(self.dist_rtilde)]);
        out.extend(self.solver_iters.iter().map(|x| x.to_string()));
        out.extend(self.solver_flag.iter().map(|x| x.to_string()));
        out
    }

    fn parse(rec: &csv::StringRecord, line: u64) -> Result<Self> {
        let err = |col: usize, what: &str| {
            Error::Config(format!("trace line {line}, column `{}`: {what}", trace_columns()[col]))
        };
        let num = |i: usize| -> Result<f64> {
            rec.get(i).ok_or_else(|| err(i, "missing"))?.parse::<f64>().map_err(|e| err(i, &e.to_string()))
        };
        let int = |i: usize| -> Result<u64> {
            rec.get(i).ok_or_else(|| err(i, "missing"))?.parse::<u64>().map_err(|e| err(i, &e.to_string()))
        };
        let v3 = |i: usize| -> Result<Vector3<f64>> { Ok(Vector3::new(num(i)?, num(i + 1)?, num(i + 2)?)) };
        let flag = |i: usize| -> Result<u8> {
            match int(i)? {
                0 => Ok(0),
                1 => Ok(1),
                _ => Err(err(i, "flag must be 0 or 1")),
            }
        };
        Ok(Self {
            t: num(0)?,
            p: v3(1)?,
            v: v3(4)?,
            r: v3(7)?,
            p_err: v3(10)?,
            mu_d: v3(13)?,
            eta: v3(16)?,
            u_mpc: v3(19)?,
            bound_b: num(22)?,
            bound_b_axis: num(23)?,
            thrust: num(24)?,
            omega: v3(25)?,
            omega_d: v3(28)?,
            theta: num(31)?,
            u_pot: num(32)?,
            mu_u: num(33)?,
            jumps: int(34)?,
            dist_rtilde: num(35)?,
            solver_iters: [int(36)?, int(37)?, int(38)?],
            solver_flag: [flag(39)?, flag(40)?, flag(41)?],
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        },
        _ => Error::Config(format!("trace: {e}")),
    }
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(trace_columns()).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_trace(rows: &[TraceRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trace(rows, std::io::BufWriter::new(file))
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    let expect = trace_columns();
    if header.len() != expect.len() {
        return Err(Error::Config(format!(
            "trace header has {} columns, expected {}",
            header.len(),
            expect.len()
        )));
    }
    for (i, (got, want)) in header.iter().zip(&expect).enumerate() {
        if got != want {
            return Err(Error::Config(format!("trace header column {i} is `{got}`, expected `{want}`")));
        }
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(TraceRow::parse(&rec, line)?);
    }
    Ok(rows)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRow>> {
    read_trace(std::fs::File::open(path)?)
}
