//! Text formats: trees, samples, null distributions and marginal profiles.
//!
//! A tree is written as its terminal vertices in canonical order, separated
//! by commas, each vertex as dot-separated labels (`1.1.1,1.2`); the empty
//! tree is `-`. Files start with a versioned header line; lines beginning
//! with `#` are comments. Real numbers are written in plain decimal notation
//! with 17 significant digits, which reloads bit-exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::{NullDistribution, NullMeta};
use crate::layout::Layout;
use crate::sampling::{GwModel, MarginalProfile};
use crate::tree::{check_arity, Tree, TreeSample, Vertex, MAX_ARITY};

pub const SAMPLE_MAGIC: &str = "treestat-sample";
pub const NULL_MAGIC: &str = "treestat-null";
pub const MARGINALS_MAGIC: &str = "treestat-marginals";
pub const VERSION: &str = "v1";

pub fn format_tree(t: &Tree) -> String {
    let terminals = t.terminals();
    if terminals.is_empty() {
        return "-".into();
    }
    terminals
        .iter()
        .map(Vertex::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_tree(text: &str, m: usize) -> Result<Tree> {
    parse_tree_at(text, m, 1)
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_tree_at(text: &str, m: usize, line: usize) -> Result<Tree> {
    check_arity(m)?;
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    if body == "-" {
        return Tree::empty(m);
    }
    if body.is_empty() {
        return Err(parse_error(line, lead + 1, "empty tree text (use '-')"));
    }
    let mut terminals = Vec::new();
    let mut offset = lead;
    for component in body.split(',') {
        let col = offset + (component.len() - component.trim_start().len()) + 1;
        terminals.push(parse_vertex(component.trim(), m, line, col)?);
        offset += component.len() + 1;
    }
    Tree::from_terminals(m, terminals)
}

fn parse_vertex(text: &str, m: usize, line: usize, column: usize) -> Result<Vertex> {
    if text.is_empty() {
        return Err(parse_error(line, column, "empty vertex"));
    }
    let mut labels = Vec::new();
    let mut col = column;
    for part in text.split('.') {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_error(line, col, format!("malformed label {part:?}")));
        }
        let label: usize = part.parse().map_err(|_| Error::ArityViolation {
            label: usize::MAX,
            m,
        })?;
        if label == 0 || label > m {
            return Err(Error::ArityViolation { label, m });
        }
        labels.push(label as u8);
        col += part.len() + 1;
    }
    if labels[0] != 1 {
        return Err(parse_error(
            line,
            column,
            "a vertex must start at the root 1",
        ));
    }
    Vertex::new(labels)
}

/// Plain decimal with 17 significant digits.
pub fn format_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    out
}

/// Parses a decimal number; only `.` is accepted as separator.
pub fn parse_decimal(text: &str) -> Result<f64> {
    let t = text.trim();
    let ok = !t.is_empty()
        && t.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'));
    if !ok {
        return Err(Error::Format(format!("not a decimal number: {text:?}")));
    }
    t.parse()
        .map_err(|_| Error::Format(format!("not a decimal number: {text:?}")))
}

fn parse_int<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
    text.parse()
        .map_err(|_| Error::Format(format!("{key}={text} is not a non-negative integer")))
}

// Parses `<magic> v1 k=v ...`, requiring exactly `keys`.
fn parse_header(line: &str, magic: &str, keys: &[&str]) -> Result<BTreeMap<String, String>> {
    let mut tokens = line.split_whitespace();
    match tokens.next() {
        Some(t) if t == magic => {}
        other => {
            return Err(Error::Format(format!(
                "expected a {magic:?} header, found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    match tokens.next() {
        Some(VERSION) => {}
        Some(v) => return Err(Error::Format(format!("unknown {magic} version {v:?}"))),
        None => return Err(Error::Format(format!("{magic} header lacks a version"))),
    }
    let mut out = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("header field {tok:?} is not key=value")))?;
        if !keys.contains(&k) {
            return Err(Error::Format(format!("unknown header field {k:?}")));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Format(format!("header field {k:?} repeated")));
        }
    }
    for k in keys {
        if !out.contains_key(*k) {
            return Err(Error::Format(format!("header lacks {k}=")));
        }
    }
    Ok(out)
}

// (1-based line number, content) of every non-comment, non-blank line
fn content_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

fn comment_value<R: BufRead>(reader: R, key: &str) -> Result<Option<String>> {
    let prefix = format!("# {key}=");
    for line in reader.lines() {
        let line = line?;
        if let Some(v) = line.trim().strip_prefix(&prefix) {
            return Ok(Some(v.to_string()));
        }
    }
    Ok(None)
}

pub fn write_sample<W: Write>(sample: &TreeSample, mut w: W) -> Result<()> {
    writeln!(
        w,
        "{SAMPLE_MAGIC} {VERSION} m={} depth={}",
        sample.m(),
        sample.depth_cap()
    )?;
    for t in sample.iter() {
        writeln!(w, "{}", format_tree(t))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample<R: BufRead>(reader: R) -> Result<TreeSample> {
    let lines = content_lines(reader)?;
    let (_, header) = lines
        .first()
        .ok_or_else(|| Error::Format("missing sample header".into()))?;
    let h = parse_header(header, SAMPLE_MAGIC, &["m", "depth"])?;
    let m: usize = parse_int("m", &h["m"])?;
    let depth: usize = parse_int("depth", &h["depth"])?;
    if m > MAX_ARITY {
        return Err(Error::InvalidArity(m));
    }
    let mut trees = Vec::with_capacity(lines.len() - 1);
    for (lineno, text) in &lines[1..] {
        let t = parse_tree_at(text, m, *lineno)?;
        if t.depth() > depth {
            return Err(Error::Format(format!(
                "line {lineno}: tree of depth {} in a depth={depth} sample",
                t.depth()
            )));
        }
        trees.push(t);
    }
    TreeSample::new(m, depth, trees)
}

pub fn write_null<W: Write>(null: &NullDistribution, mut w: W) -> Result<()> {
    let meta = null.meta();
    writeln!(
        w,
        "{NULL_MAGIC} {VERSION} B={} n={} m={} depth={} z={} seed={}",
        null.len(),
        meta.n,
        meta.m,
        meta.depth,
        meta.z,
        meta.seed
    )?;
    writeln!(w, "# model={}", meta.model)?;
    for v in null.values() {
        writeln!(w, "{}", format_decimal(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_null<R: BufRead>(reader: R) -> Result<NullDistribution> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let lines = content_lines(text.as_bytes())?;
    let (_, header) = lines
        .first()
        .ok_or_else(|| Error::Format("missing null-distribution header".into()))?;
    let h = parse_header(header, NULL_MAGIC, &["B", "n", "m", "depth", "z", "seed"])?;
    let b: usize = parse_int("B", &h["B"])?;
    let meta = NullMeta {
        model: comment_value(text.as_bytes(), "model")?.unwrap_or_default(),
        n: parse_int("n", &h["n"])?,
        m: parse_int("m", &h["m"])?,
        depth: parse_int("depth", &h["depth"])?,
        z: parse_decimal(&h["z"])?,
        seed: parse_int("seed", &h["seed"])?,
    };
    let values = lines[1..]
        .iter()
        .map(|(lineno, l)| {
            parse_decimal(l).map_err(|e| Error::Format(format!("line {lineno}: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != b {
        return Err(Error::Format(format!(
            "header announces B={b} values, file has {}",
            values.len()
        )));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Format("null values are not ascending".into()));
    }
    Ok(NullDistribution::new(values, meta))
}

/// One `<vertex> <probability>` line per vertex, in canonical vertex order.
pub fn write_marginals<W: Write>(profile: &MarginalProfile, mut w: W) -> Result<()> {
    writeln!(
        w,
        "{MARGINALS_MAGIC} {VERSION} m={} depth={}",
        profile.m(),
        profile.depth()
    )?;
    let mut rows: Vec<(Vertex, f64)> = profile.iter().collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for (v, p) in rows {
        writeln!(w, "{v} {}", format_decimal(p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_marginals<R: BufRead>(reader: R) -> Result<MarginalProfile> {
    let lines = content_lines(reader)?;
    let (_, header) = lines
        .first()
        .ok_or_else(|| Error::Format("missing marginals header".into()))?;
    let h = parse_header(header, MARGINALS_MAGIC, &["m", "depth"])?;
    let m: usize = parse_int("m", &h["m"])?;
    let depth: usize = parse_int("depth", &h["depth"])?;
    let layout = Layout::new(m, depth)?;
    let mut probs = vec![None; layout.len()];
    for (lineno, line) in &lines[1..] {
        let mut parts = line.split_whitespace();
        let (Some(vtext), Some(ptext), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_error(*lineno, 1, "expected '<vertex> <probability>'"));
        };
        let v = parse_vertex(vtext, m, *lineno, 1)?;
        let idx = layout.index_of(&v).ok_or_else(|| {
            Error::Format(format!(
                "line {lineno}: vertex {v} deeper than depth={depth}"
            ))
        })?;
        if probs[idx].is_some() {
            return Err(Error::Format(format!("line {lineno}: vertex {v} repeated")));
        }
        probs[idx] = Some(parse_decimal(ptext)?);
    }
    let probs = probs
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| Error::Format(format!("no marginal for vertex {}", layout.vertex(i))))
        })
        .collect::<Result<Vec<f64>>>()?;
    MarginalProfile::new(layout, probs)
}

/// `perslot:<rho_1,...,rho_m>` or `countfill:<q_0,...,q_m>`.
pub fn parse_model(spec: &str, root_prob: f64) -> Result<GwModel> {
    let (kind, list) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidParameter(format!("model {spec:?} lacks a kind prefix")))?;
    let values = list
        .split(',')
        .map(parse_decimal)
        .collect::<Result<Vec<f64>>>()?;
    match kind.trim() {
        "perslot" => GwModel::per_slot(root_prob, values),
        "countfill" => GwModel::count_left_fill(root_prob, values),
        other => Err(Error::InvalidParameter(format!(
            "unknown model kind {other:?} (perslot or countfill)"
        ))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_sample_file(path: impl AsRef<Path>) -> Result<TreeSample> {
    read_sample(open(path.as_ref())?)
}

pub fn write_sample_file(sample: &TreeSample, path: impl AsRef<Path>) -> Result<()> {
    write_sample(sample, create(path.as_ref())?)
}

pub fn read_null_file(path: impl AsRef<Path>) -> Result<NullDistribution> {
    read_null(open(path.as_ref())?)
}

pub fn write_null_file(null: &NullDistribution, path: impl AsRef<Path>) -> Result<()> {
    write_null(null, create(path.as_ref())?)
}

pub fn read_marginals_file(path: impl AsRef<Path>) -> Result<MarginalProfile> {
    read_marginals(open(path.as_ref())?)
}
