//! Plot-ready reshaping of result files.
//!
//! Two inputs are recognised by their header row:
//!
//! - a strike sweep `strike,fft,mc,mc_se` becomes `strike,fft,mc,mc_lo,mc_hi`
//!   with the Monte Carlo band at three standard errors;
//! - a path dump `path,<t_0>,<t_1>,…` is transposed to `t,path_1,…,path_n`.

use std::fs;

use crate::output::{Cell, Table};
use crate::CliError;

fn input_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("plot_data input {path}: {msg}"))
}

fn parse_num(path: &str, line: usize, s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| input_err(path, format!("row {line}: `{s}` is not a number")))
}

/// Reads `path` and reshapes it for plotting.
pub fn plot_data(path: &str) -> Result<Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| input_err(path, e))?;
    reshape(path, &text)
}

pub fn reshape(path: &str, text: &str) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| input_err(path, e))?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(input_err(path, "missing header row"));
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| input_err(path, e))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    if header == ["strike", "fft", "mc", "mc_se"] {
        let mut out = Table::new(["strike", "fft", "mc", "mc_lo", "mc_hi"]);
        for (i, r) in rows.iter().enumerate() {
            let k = parse_num(path, i + 1, &r[0])?;
            let fft = parse_num(path, i + 1, &r[1])?;
            let band: [Cell; 3] = if r[2].is_empty() {
                ["".into(), "".into(), "".into()]
            } else {
                let (mc, se) = (parse_num(path, i + 1, &r[2])?, parse_num(path, i + 1, &r[3])?);
                [mc.into(), (mc - 3.0 * se).into(), (mc + 3.0 * se).into()]
            };
            let [a, b, c] = band;
            out.push(vec![k.into(), fft.into(), a, b, c]);
        }
        return Ok(out);
    }
    if header[0] == "path" {
        let times = header[1..]
            .iter()
            .enumerate()
            .map(|(j, h)| parse_num(path, 0, h).map(|_| (j, h)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=rows.len()).map(|i| format!("path_{i}")));
        let mut out = Table::new(cols);
        if rows.is_empty() {
            return Ok(out);
        }
        for (j, h) in times {
            let mut row: Vec<Cell> = vec![parse_num(path, 0, h)?.into()];
            for (i, r) in rows.iter().enumerate() {
                row.push(parse_num(path, i + 1, &r[j + 1])?.into());
            }
            out.push(row);
        }
        return Ok(out);
    }
    Err(input_err(path, format!("unrecognised header {header:?}")))
}
