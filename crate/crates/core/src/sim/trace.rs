//! Per-step trace rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("trace file {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("trace file {path}: header mismatch, expected `{expected}`")]
    Header { path: String, expected: String },
    #[error("trace file {path}, line {line}: {message}")]
    Value { path: String, line: u64, message: String },
}

pub const TRACE_HEADER: [&str; 22] = [
    "t",
    "leader_x",
    "leader_v",
    "follower_x",
    "follower_v",
    "y",
    "x_lo",
    "x_hi",
    "x_hat",
    "v_lo",
    "v_hi",
    "gap",
    "e",
    "r",
    "u_leader",
    "u_bar",
    "u_follower",
    "f",
    "f_hat",
    "f_tilde",
    "eps_pos",
    "contained",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub leader_x: f64,
    pub leader_v: f64,
    pub follower_x: f64,
    pub follower_v: f64,
    pub y: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x_hat: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub gap: f64,
    pub e: f64,
    pub r: f64,
    pub u_leader: f64,
    pub u_bar: f64,
    pub u_follower: f64,
    pub f: f64,
    pub f_hat: f64,
    pub f_tilde: f64,
    pub eps_pos: f64,
    pub contained: bool,
}

impl TraceRow {
    /// Numeric columns in header order.
    pub fn values(&self) -> [f64; 21] {
        [
            self.t,
            self.leader_x,
            self.leader_v,
            self.follower_x,
            self.follower_v,
            self.y,
            self.x_lo,
            self.x_hi,
            self.x_hat,
            self.v_lo,
            self.v_hi,
            self.gap,
            self.e,
            self.r,
            self.u_leader,
            self.u_bar,
            self.u_follower,
            self.f,
            self.f_hat,
            self.f_tilde,
            self.eps_pos,
        ]
    }

    pub fn from_values(v: &[f64; 21], contained: bool) -> Self {
        Self {
            t: v[0],
            leader_x: v[1],
            leader_v: v[2],
            follower_x: v[3],
            follower_v: v[4],
            y: v[5],
            x_lo: v[6],
            x_hi: v[7],
            x_hat: v[8],
            v_lo: v[9],
            v_hi: v[10],
            gap: v[11],
            e: v[12],
            r: v[13],
            u_leader: v[14],
            u_bar: v[15],
            u_follower: v[16],
            f: v[17],
            f_hat: v[18],
            f_tilde: v[19],
            eps_pos: v[20],
            contained,
        }
    }

    /// The row as it reads back after a CSV round trip.
    pub fn rounded(&self) -> Self {
        Self::from_values(&self.values().map(round_sig9), self.contained)
    }
}

/// Rounds to 9 significant digits. Negative zero becomes zero, as it prints.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text for `x` rounded to 9 significant digits.
pub fn format_sig9(x: f64) -> String {
    let r = round_sig9(x);
    if r == 0.0 {
        "0".to_string()
    } else if r.abs() < 1e-6 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        r.to_string()
    }
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    let mut record: Vec<String> = Vec::with_capacity(TRACE_HEADER.len());
    for row in rows {
        record.clear();
        record.extend(row.values().iter().map(|v| format_sig9(*v)));
        record.push(if row.contained { "1" } else { "0" }.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_trace(rows: &[TraceRow], path: &Path) -> Result<(), TraceError> {
    let p = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|source| TraceError::Io { path: p.clone(), source })?;
    write_trace(rows, std::io::BufWriter::new(file)).map_err(|source| TraceError::Csv { path: p, source })
}

pub fn read_trace<R: Read>(input: R, path: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|source| TraceError::Csv { path: path.to_string(), source })?;
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(TraceError::Header { path: path.to_string(), expected: TRACE_HEADER.join(",") });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| TraceError::Csv { path: path.to_string(), source })?;
        let line = rec.position().map_or(0, |p| p.line());
        let value_err = |message: String| TraceError::Value { path: path.to_string(), line, message };
        let mut v = [0.0; 21];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = rec[i]
                .parse()
                .map_err(|_| value_err(format!("column {} is not a number: {:?}", TRACE_HEADER[i], &rec[i])))?;
        }
        let contained = match &rec[21] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(value_err(format!("contained must be 0 or 1, got {other:?}"))),
        };
        rows.push(TraceRow::from_values(&v, contained));
    }
    Ok(rows)
}

pub fn parse_trace_file(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    let p = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| TraceError::Io { path: p.clone(), source })?;
    read_trace(std::io::BufReader::new(file), &p)
}
