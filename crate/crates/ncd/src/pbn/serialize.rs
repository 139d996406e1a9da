//! Flat, line-oriented text form of a trained model, for reproducibility
//! audits. Shape tags and a fixed tensor order make any tampering or
//! truncation detectable; values print in the shortest decimal form that
//! parses back to the identical f64, so round trips are exact.

use ndarray::{Array1, Array2};

use crate::error::{NcdError, Result};

use super::model::{Dense, Mlp, PBNConfig, PBNModel};

const MAGIC: &str = "pbn-model v1";

impl PBNModel {
    /// Renders the model as text: the magic line, one `key value` line per
    /// hyperparameter, every tensor as a `tensor <name> <dims>` tag followed
    /// by its rows, and a final `end` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        push_header(&mut out, "d", self.d);
        push_header(&mut out, "c_l", self.c_l);
        push_header(&mut out, "h1", self.h1);
        push_header(&mut out, "h2", self.h2);
        push_header(&mut out, "latent_dim", self.config.latent_dim);
        push_header(&mut out, "lr", self.config.lr);
        push_header(&mut out, "dropout", self.config.dropout);
        push_header(&mut out, "w", self.config.w);
        push_header(&mut out, "epochs", self.config.epochs);
        push_header(&mut out, "batch_size", self.config.batch_size);
        push_header(&mut out, "seed", self.config.seed);
        for (prefix, mlp) in [("enc", &self.enc), ("dec", &self.dec)] {
            for (i, layer) in mlp.layers.iter().enumerate() {
                push_matrix(&mut out, &format!("{prefix}.{i}.w"), &layer.w);
                push_vector(&mut out, &format!("{prefix}.{i}.b"), &layer.b);
            }
        }
        push_matrix(&mut out, "cls.w", &self.cls.w);
        push_vector(&mut out, "cls.b", &self.cls.b);
        out.push_str("end\n");
        out
    }

    /// Parses text produced by [`PBNModel::to_text`].
    ///
    /// Strict by design: the magic line, header order, tensor order, every
    /// shape, and the terminator must all match, every value must be a
    /// finite f64, and nothing may follow `end`.
    pub fn from_text(text: &str) -> Result<PBNModel> {
        let mut cur = Cursor {
            lines: text.lines(),
            lineno: 0,
        };
        let magic = cur.next()?;
        if magic != MAGIC {
            return Err(NcdError::invalid(format!(
                "not a model file: first line {magic:?}, expected {MAGIC:?}"
            )));
        }
        let d = parse_usize(header(&mut cur, "d")?, "d")?;
        let c_l = parse_usize(header(&mut cur, "c_l")?, "c_l")?;
        let h1 = parse_usize(header(&mut cur, "h1")?, "h1")?;
        let h2 = parse_usize(header(&mut cur, "h2")?, "h2")?;
        let config = PBNConfig {
            latent_dim: parse_usize(header(&mut cur, "latent_dim")?, "latent_dim")?,
            lr: parse_f64(header(&mut cur, "lr")?, "lr")?,
            dropout: parse_f64(header(&mut cur, "dropout")?, "dropout")?,
            w: parse_f64(header(&mut cur, "w")?, "w")?,
            epochs: parse_usize(header(&mut cur, "epochs")?, "epochs")?,
            batch_size: parse_usize(header(&mut cur, "batch_size")?, "batch_size")?,
            seed: parse_u64(header(&mut cur, "seed")?, "seed")?,
        };
        config.validate(d)?;
        if c_l < 2 {
            return Err(NcdError::invalid(format!("c_l {c_l} below 2")));
        }
        let l = config.latent_dim;
        let enc = read_mlp(&mut cur, "enc", &[d, h1, h2, l])?;
        let dec = read_mlp(&mut cur, "dec", &[l, h2, h1, d])?;
        let cls = Dense {
            w: read_matrix(&mut cur, "cls.w", l, c_l)?,
            b: read_vector(&mut cur, "cls.b", c_l)?,
        };
        let last = cur.next()?;
        if last != "end" {
            return Err(NcdError::invalid(format!(
                "expected terminator at line {}, found {last:?}",
                cur.lineno
            )));
        }
        if cur.lines.next().is_some() {
            return Err(NcdError::invalid("content after the end line"));
        }
        Ok(PBNModel {
            enc,
            dec,
            cls,
            config,
            d,
            c_l,
            h1,
            h2,
        })
    }
}

fn push_header(out: &mut String, key: &str, value: impl std::fmt::Display) {
    out.push_str(&format!("{key} {value}\n"));
}

fn push_matrix(out: &mut String, name: &str, m: &Array2<f64>) {
    out.push_str(&format!("tensor {name} {} {}\n", m.nrows(), m.ncols()));
    for row in m.rows() {
        push_row(out, row.iter());
    }
}

fn push_vector(out: &mut String, name: &str, v: &Array1<f64>) {
    out.push_str(&format!("tensor {name} {}\n", v.len()));
    push_row(out, v.iter());
}

fn push_row<'a>(out: &mut String, vals: impl Iterator<Item = &'a f64>) {
    for (i, v) in vals.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

struct Cursor<'a> {
    lines: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.lines
            .next()
            .ok_or_else(|| NcdError::invalid(format!("model text ends at line {}", self.lineno)))
    }
}

fn header<'a>(cur: &mut Cursor<'a>, key: &str) -> Result<&'a str> {
    let line = cur.next()?;
    match line.split_once(' ') {
        Some((k, v)) if k == key => Ok(v),
        _ => Err(NcdError::invalid(format!(
            "expected header {key:?} at line {}, found {line:?}",
            cur.lineno
        ))),
    }
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| NcdError::invalid(format!("{what}: {s:?} is not a count")))
}

fn parse_u64(s: &str, what: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| NcdError::invalid(format!("{what}: {s:?} is not a u64")))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| NcdError::invalid(format!("{what}: {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(NcdError::invalid(format!("{what}: {s:?} is not finite")));
    }
    Ok(v)
}

fn expect_tag(cur: &mut Cursor, tag: &str) -> Result<()> {
    let line = cur.next()?;
    if line != tag {
        return Err(NcdError::invalid(format!(
            "expected {tag:?} at line {}, found {line:?}",
            cur.lineno
        )));
    }
    Ok(())
}

fn read_matrix(cur: &mut Cursor, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
    expect_tag(cur, &format!("tensor {name} {rows} {cols}"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        read_row(cur, name, cols, &mut data)?;
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("rows * cols values collected"))
}

fn read_vector(cur: &mut Cursor, name: &str, len: usize) -> Result<Array1<f64>> {
    expect_tag(cur, &format!("tensor {name} {len}"))?;
    let mut data = Vec::with_capacity(len);
    read_row(cur, name, len, &mut data)?;
    Ok(Array1::from_vec(data))
}

fn read_row(cur: &mut Cursor, name: &str, len: usize, data: &mut Vec<f64>) -> Result<()> {
    let line = cur.next()?;
    let before = data.len();
    for tok in line.split_ascii_whitespace() {
        data.push(parse_f64(tok, name)?);
    }
    if data.len() - before != len {
        return Err(NcdError::invalid(format!(
            "{name}: row at line {} has {} values, expected {len}",
            cur.lineno,
            data.len() - before
        )));
    }
    Ok(())
}

fn read_mlp(cur: &mut Cursor, prefix: &str, dims: &[usize]) -> Result<Mlp> {
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for i in 0..dims.len() - 1 {
        let w = read_matrix(cur, &format!("{prefix}.{i}.w"), dims[i], dims[i + 1])?;
        let b = read_vector(cur, &format!("{prefix}.{i}.b"), dims[i + 1])?;
        layers.push(Dense { w, b });
    }
    Ok(Mlp { layers })
}
