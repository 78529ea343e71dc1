//! Deterministic text output. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use spinprobe::Trajectory64;

use crate::CliError;

pub const TRAJECTORY_HEADER: &str =
    "t,re_c11,im_c11,re_c22,im_c22,re_c12,im_c12,re_c21,im_c21,norm,M,E,arg_det,arg_det_valid";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(tr: &Trajectory64) -> String {
    let mut out = String::with_capacity(tr.len() * 320);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (s, o) in tr.states.iter().zip(&tr.samples) {
        let fields = [
            o.t, s.c11.re, s.c11.im, s.c22.re, s.c22.im, s.c12.re, s.c12.im, s.c21.re, s.c21.im, o.norm, o.m, o.e,
            o.arg_det,
        ];
        for x in fields {
            out.push_str(&num(x));
            out.push(',');
        }
        out.push_str(if o.arg_det_valid { "1\n" } else { "0\n" });
    }
    out
}

/// Columns of equal length under the given header.
pub fn columns_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let n = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..n {
        let row: Vec<String> = columns.iter().map(|c| num(c[k])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_file(dir: &Path, file: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(file);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    Ok(path)
}
