//! Plain-text parameter checkpoints.
//!
//! ```text
//! ehnet 1
//! shape <input_size> <hidden_size> <output_size> <activation>
//! lstm.forget.w <rows> <cols>
//! <rows * cols values, row-major, space separated>
//! lstm.forget.b 1 <hidden>
//! ...
//! dense.w <output> <hidden>
//! dense.b 1 <output>
//! ```
//!
//! Gate order is forget, input, cell, output. Each `lstm.{gate}.w` is the
//! gate's `H x (In + H)` block acting on `[x_t, h_{t-1}]`. Values are written
//! with Rust's shortest round-trip float formatting, so save/load is exact.

use std::io::{BufRead, Write};

use ndarray::{s, Array1, Array2};

use super::lstm::{LstmParams, GATES};
use super::network::{Activation, DenseParams, NetworkParams, NetworkShape};
use crate::error::{Error, Result};

const MAGIC: &str = "ehnet 1";

fn write_array<W: Write>(w: &mut W, key: &str, rows: usize, cols: usize, values: impl Iterator<Item = f64>) -> Result<()> {
    writeln!(w, "{key} {rows} {cols}")?;
    let line: Vec<String> = values.map(|v| v.to_string()).collect();
    writeln!(w, "{}", line.join(" "))?;
    Ok(())
}

pub fn save<W: Write>(params: &NetworkParams, w: &mut W) -> Result<()> {
    let shape = params.shape();
    writeln!(w, "{MAGIC}")?;
    writeln!(
        w,
        "shape {} {} {} {}",
        shape.input_size,
        shape.hidden_size,
        shape.output_size,
        shape.activation.name()
    )?;
    let hs = shape.hidden_size;
    let cols = shape.input_size + hs;
    for (g, name) in GATES.iter().enumerate() {
        let rows = params.lstm.w.slice(s![g * hs..(g + 1) * hs, ..]);
        write_array(w, &format!("lstm.{name}.w"), hs, cols, rows.iter().copied())?;
        let b = params.lstm.b.slice(s![g * hs..(g + 1) * hs]);
        write_array(w, &format!("lstm.{name}.b"), 1, hs, b.iter().copied())?;
    }
    write_array(w, "dense.w", shape.output_size, hs, params.dense.w.iter().copied())?;
    write_array(w, "dense.b", 1, shape.output_size, params.dense.b.iter().copied())?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_array<R: BufRead>(lines: &mut std::io::Lines<R>, key: &str, rows: usize, cols: usize) -> Result<Vec<f64>> {
    let header = lines.next().ok_or_else(|| bad(format!("missing {key}")))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != key {
        return Err(bad(format!("expected header for {key}, got {header:?}")));
    }
    let (r, c): (usize, usize) = (
        parts[1].parse().map_err(|_| bad("bad row count"))?,
        parts[2].parse().map_err(|_| bad("bad column count"))?,
    );
    if (r, c) != (rows, cols) {
        return Err(bad(format!("{key} is {r}x{c}, expected {rows}x{cols}")));
    }
    let data = lines.next().ok_or_else(|| bad(format!("missing values for {key}")))??;
    let values = data
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad value {t:?} in {key}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != rows * cols {
        return Err(bad(format!("{key} has {} values, expected {}", values.len(), rows * cols)));
    }
    Ok(values)
}

pub fn load<R: BufRead>(r: R) -> Result<NetworkParams> {
    let mut lines = r.lines();
    let magic = lines.next().ok_or_else(|| bad("empty checkpoint"))??;
    if magic.trim() != MAGIC {
        return Err(bad(format!("unknown checkpoint header {magic:?}")));
    }
    let shape_line = lines.next().ok_or_else(|| bad("missing shape"))??;
    let parts: Vec<&str> = shape_line.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "shape" {
        return Err(bad(format!("bad shape line {shape_line:?}")));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad size {s:?}")));
    let shape = NetworkShape {
        input_size: num(parts[1])?,
        hidden_size: num(parts[2])?,
        output_size: num(parts[3])?,
        activation: Activation::parse(parts[4]).ok_or_else(|| bad("unknown activation"))?,
    };
    let hs = shape.hidden_size;
    let cols = shape.input_size + hs;
    let mut lstm = LstmParams::zeros(shape.input_size, hs);
    for (g, name) in GATES.iter().enumerate() {
        let w = read_array(&mut lines, &format!("lstm.{name}.w"), hs, cols)?;
        lstm.w
            .slice_mut(s![g * hs..(g + 1) * hs, ..])
            .assign(&Array2::from_shape_vec((hs, cols), w).expect("length checked"));
        let b = read_array(&mut lines, &format!("lstm.{name}.b"), 1, hs)?;
        lstm.b.slice_mut(s![g * hs..(g + 1) * hs]).assign(&Array1::from(b));
    }
    let w = read_array(&mut lines, "dense.w", shape.output_size, hs)?;
    let b = read_array(&mut lines, "dense.b", 1, shape.output_size)?;
    let dense = DenseParams {
        w: Array2::from_shape_vec((shape.output_size, hs), w).expect("length checked"),
        b: Array1::from(b),
        activation: shape.activation,
    };
    NetworkParams::from_parts(lstm, dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::optim::weight_init;
    use crate::rng::stream_rng;

    #[test]
    fn exact_roundtrip() {
        let shape = NetworkShape {
            input_size: 3,
            hidden_size: 4,
            output_size: 5,
            activation: Activation::Tanh,
        };
        let p = weight_init(shape, &mut stream_rng(1, 0));
        let mut buf = Vec::new();
        save(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("lstm.cell.w 4 7"));
        assert!(text.contains("dense.b 1 5"));
        let q = load(buf.as_slice()).unwrap();
        assert_eq!(p.flatten(), q.flatten());
        assert_eq!(p.shape(), q.shape());
    }

    #[test]
    fn truncated_file_rejected() {
        let p = NetworkParams::zeros(NetworkShape {
            input_size: 1,
            hidden_size: 1,
            output_size: 1,
            activation: Activation::Identity,
        });
        let mut buf = Vec::new();
        save(&p, &mut buf).unwrap();
        let cut = &buf[..buf.len() / 2];
        assert!(load(cut).is_err());
    }
}
