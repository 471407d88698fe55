//! LP and fixed-MPS writers with matching readers.
//!
//! Coefficients are printed in shortest round-trip form, so reading an
//! exported model and exporting it again reproduces the same bytes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bipmodel::{BipProblem, Family, Objective, Row, Sense};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelFormat {
    Lp,
    Mps,
}

impl ModelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ModelFormat::Lp => "lp",
            ModelFormat::Mps => "mps",
        }
    }
}

impl FromStr for ModelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "lp-text" => Ok(ModelFormat::Lp),
            "mps" | "mps-fixed" => Ok(ModelFormat::Mps),
            _ => Err(Error::Config(format!("unknown model format '{s}'"))),
        }
    }
}

pub fn export_model(p: &BipProblem, format: ModelFormat) -> String {
    let mut names = p.names.clone();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), p.names.len(), "variable names must be unique");
    match format {
        ModelFormat::Lp => write_lp(p),
        ModelFormat::Mps => write_mps(p),
    }
}

pub fn import_model(text: &str, format: ModelFormat) -> Result<BipProblem> {
    match format {
        ModelFormat::Lp => read_lp(text),
        ModelFormat::Mps => read_mps(text),
    }
}

const WIDTH: usize = 78;

struct Wrapped {
    out: String,
    line: String,
}

impl Wrapped {
    fn new() -> Self {
        Wrapped {
            out: String::new(),
            line: String::new(),
        }
    }

    fn start(&mut self, head: &str) {
        self.flush();
        self.line.push_str(head);
    }

    fn chunk(&mut self, s: &str) {
        if self.line.len() + 1 + s.len() > WIDTH && !self.line.trim().is_empty() {
            self.flush();
            self.line.push_str("  ");
        } else {
            self.line.push(' ');
        }
        self.line.push_str(s);
    }

    fn flush(&mut self) {
        if !self.line.is_empty() {
            self.out.push_str(&self.line);
            self.out.push('\n');
            self.line.clear();
        }
    }

    fn raw(&mut self, s: &str) {
        self.flush();
        self.out.push_str(s);
        self.out.push('\n');
    }
}

fn term(c: f64, name: &str) -> String {
    let sign = if c < 0.0 { '-' } else { '+' };
    let mag = c.abs();
    if mag == 1.0 {
        format!("{sign} {name}")
    } else {
        format!("{sign} {mag} {name}")
    }
}

fn sense_token(s: Sense) -> &'static str {
    match s {
        Sense::Eq => "=",
        Sense::Le => "<=",
        Sense::Ge => ">=",
    }
}

fn write_lp(p: &BipProblem) -> String {
    let mut w = Wrapped::new();
    w.raw("Minimize");
    w.start(" obj:");
    for &(v, c) in &p.objective.coefs {
        w.chunk(&term(c, &p.names[v]));
    }
    if p.objective.offset != 0.0 || p.objective.coefs.is_empty() {
        let o = p.objective.offset;
        w.chunk(&format!("{} {}", if o < 0.0 { '-' } else { '+' }, o.abs()));
    }
    w.raw("Subject To");
    for row in &p.rows {
        w.start(&format!(" {}:", row.name));
        for &(v, c) in &row.coefs {
            w.chunk(&term(c, &p.names[v]));
        }
        w.chunk(&format!("{} {}", sense_token(row.sense), row.rhs));
    }
    if !p.names.is_empty() {
        w.raw("Binary");
        w.start("");
        for name in &p.names {
            w.chunk(name);
        }
    }
    w.raw("End");
    w.out
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, got '{tok}'")))
}

fn family_of(name: &str, line: usize) -> Result<Family> {
    Family::from_row_name(name)
        .ok_or_else(|| parse_err(line, format!("row name '{name}' carries no family tag")))
}

#[derive(PartialEq)]
enum LpSection {
    None,
    Objective,
    Constraints,
    Binary,
    End,
}

fn read_lp(text: &str) -> Result<BipProblem> {
    let mut section = LpSection::None;
    let mut obj_tokens: Vec<(usize, String)> = Vec::new();
    let mut con_tokens: Vec<(usize, String)> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let lower = line.trim().to_ascii_lowercase();
        match lower.as_str() {
            "minimize" | "minimise" | "min" => {
                section = LpSection::Objective;
                continue;
            }
            "subject to" | "such that" | "st" | "s.t." => {
                section = LpSection::Constraints;
                continue;
            }
            "binary" | "binaries" | "bin" => {
                section = LpSection::Binary;
                continue;
            }
            "end" => {
                section = LpSection::End;
                continue;
            }
            "" => continue,
            _ => {}
        }
        let toks = line.split_whitespace().map(|t| (ln, t.to_string()));
        match section {
            LpSection::Objective => obj_tokens.extend(toks),
            LpSection::Constraints => con_tokens.extend(toks),
            LpSection::Binary => names.extend(line.split_whitespace().map(str::to_string)),
            LpSection::None => return Err(parse_err(ln, "content before 'Minimize'")),
            LpSection::End => return Err(parse_err(ln, "content after 'End'")),
        }
    }
    if section != LpSection::End {
        return Err(parse_err(text.lines().count(), "missing 'End'"));
    }
    let index: HashMap<String, usize> = names
        .iter()
        .enumerate()
        .map(|(k, n)| (n.clone(), k))
        .collect();
    if index.len() != names.len() {
        return Err(parse_err(0, "duplicate binary declaration"));
    }
    let lookup = |name: &str, ln: usize| -> Result<usize> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| parse_err(ln, format!("variable '{name}' is not declared binary")))
    };

    // Objective: optional label, then signed terms and constants.
    let mut objective = Objective::default();
    let skip = obj_tokens.first().is_some_and(|(_, t)| t.ends_with(':')) as usize;
    let toks = &obj_tokens[skip..];
    let mut k = 0;
    while k < toks.len() {
        let (ln, t) = (toks[k].0, toks[k].1.as_str());
        let sign = match t {
            "+" => 1.0,
            "-" => -1.0,
            _ => return Err(parse_err(ln, format!("expected a sign, got '{t}'"))),
        };
        k += 1;
        let (ln, t) = toks
            .get(k)
            .map(|(l, t)| (*l, t.as_str()))
            .ok_or_else(|| parse_err(ln, "dangling sign"))?;
        if let Ok(c) = t.parse::<f64>() {
            let next = toks.get(k + 1).map(|x| x.1.as_str());
            if next.is_none() || next == Some("+") || next == Some("-") {
                objective.offset += sign * c;
                k += 1;
            } else {
                let (ln2, name) = (toks[k + 1].0, toks[k + 1].1.as_str());
                objective.coefs.push((lookup(name, ln2)?, sign * c));
                k += 2;
            }
        } else {
            objective.coefs.push((lookup(t, ln)?, sign));
            k += 1;
        }
    }

    let mut rows = Vec::new();
    let mut k = 0;
    while k < con_tokens.len() {
        let (ln, ref head) = con_tokens[k];
        let name = head
            .strip_suffix(':')
            .ok_or_else(|| parse_err(ln, format!("expected 'NAME:', got '{head}'")))?
            .to_string();
        let family = family_of(&name, ln)?;
        k += 1;
        let mut coefs = Vec::new();
        loop {
            let (ln, ref t) = *con_tokens
                .get(k)
                .ok_or_else(|| parse_err(ln, "row ends without a sense"))?;
            let sense = match t.as_str() {
                "=" => Some(Sense::Eq),
                "<=" | "=<" => Some(Sense::Le),
                ">=" | "=>" => Some(Sense::Ge),
                _ => None,
            };
            if let Some(sense) = sense {
                let (ln, ref r) = *con_tokens
                    .get(k + 1)
                    .ok_or_else(|| parse_err(ln, "missing right-hand side"))?;
                let rhs = parse_num(r, ln)?;
                rows.push(Row {
                    name: name.clone(),
                    family,
                    coefs,
                    sense,
                    rhs,
                });
                k += 2;
                break;
            }
            let sign = match t.as_str() {
                "+" => 1.0,
                "-" => -1.0,
                _ => return Err(parse_err(ln, format!("expected a sign, got '{t}'"))),
            };
            let (ln, ref t) = *con_tokens
                .get(k + 1)
                .ok_or_else(|| parse_err(ln, "dangling sign"))?;
            if let Ok(c) = t.parse::<f64>() {
                let (ln2, ref v) = *con_tokens
                    .get(k + 2)
                    .ok_or_else(|| parse_err(ln, "coefficient without variable"))?;
                coefs.push((lookup(v, ln2)?, sign * c));
                k += 3;
            } else {
                coefs.push((lookup(t, ln)?, sign));
                k += 2;
            }
        }
    }
    Ok(BipProblem {
        names,
        rows,
        objective,
        guide: None,
    })
}

fn mps_line(a: &str, b: &str, value: f64) -> String {
    format!("    {a:<8}  {b:<8}  {value:>12}")
}

fn write_mps(p: &BipProblem) -> String {
    let mut out = String::new();
    out.push_str("NAME          QALLOC\n");
    out.push_str("ROWS\n");
    out.push_str(" N  OBJ\n");
    for row in &p.rows {
        let s = match row.sense {
            Sense::Eq => 'E',
            Sense::Le => 'L',
            Sense::Ge => 'G',
        };
        let _ = writeln!(out, " {s}  {}", row.name);
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_vars()];
    for (r, row) in p.rows.iter().enumerate() {
        for &(v, a) in &row.coefs {
            cols[v].push((r, a));
        }
    }
    let mut obj = vec![None; p.num_vars()];
    for &(v, c) in &p.objective.coefs {
        obj[v] = Some(c);
    }
    out.push_str("COLUMNS\n");
    if p.num_vars() > 0 {
        out.push_str("    MARKER                 'MARKER'                 'INTORG'\n");
    }
    for (v, name) in p.names.iter().enumerate() {
        let mut wrote = false;
        if let Some(c) = obj[v] {
            out.push_str(&mps_line(name, "OBJ", c));
            out.push('\n');
            wrote = true;
        }
        for &(r, a) in &cols[v] {
            out.push_str(&mps_line(name, &p.rows[r].name, a));
            out.push('\n');
            wrote = true;
        }
        if !wrote {
            out.push_str(&mps_line(name, "OBJ", 0.0));
            out.push('\n');
        }
    }
    if p.num_vars() > 0 {
        out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");
    }
    out.push_str("RHS\n");
    if p.objective.offset != 0.0 {
        out.push_str(&mps_line("RHS", "OBJ", -p.objective.offset));
        out.push('\n');
    }
    for row in &p.rows {
        if row.rhs != 0.0 {
            out.push_str(&mps_line("RHS", &row.name, row.rhs));
            out.push('\n');
        }
    }
    out.push_str("BOUNDS\n");
    for name in &p.names {
        let _ = writeln!(out, " BV BND       {name}");
    }
    out.push_str("ENDATA\n");
    out
}

fn read_mps(text: &str) -> Result<BipProblem> {
    #[derive(PartialEq)]
    enum Sec {
        Head,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let mut sec = Sec::Head;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<Row> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut objective = Objective::default();
    let mut in_int = false;
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if !line.starts_with(' ') {
            let head = line.split_whitespace().next().unwrap_or("");
            sec = match head {
                "NAME" => Sec::Head,
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "BOUNDS" => Sec::Bounds,
                "ENDATA" => Sec::Done,
                other => return Err(parse_err(ln, format!("unknown section '{other}'"))),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match sec {
            Sec::Rows => {
                let [kind, name] = f[..] else {
                    return Err(parse_err(ln, "expected '<type> <row>'"));
                };
                let sense = match kind {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(parse_err(ln, "more than one objective row"));
                        }
                        obj_row = Some(name.to_string());
                        continue;
                    }
                    "E" => Sense::Eq,
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    _ => return Err(parse_err(ln, format!("unknown row type '{kind}'"))),
                };
                row_index.insert(name.to_string(), rows.len());
                rows.push(Row {
                    name: name.to_string(),
                    family: family_of(name, ln)?,
                    coefs: Vec::new(),
                    sense,
                    rhs: 0.0,
                });
            }
            Sec::Columns => {
                if f.get(1) == Some(&"'MARKER'") {
                    in_int = f.get(2) == Some(&"'INTORG'");
                    continue;
                }
                if !in_int {
                    return Err(parse_err(
                        ln,
                        "continuous column; only binaries are supported",
                    ));
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(parse_err(
                        ln,
                        "expected '<col> <row> <value> [<row> <value>]'",
                    ));
                }
                let v = *var_index.entry(f[0].to_string()).or_insert_with(|| {
                    names.push(f[0].to_string());
                    names.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let a = parse_num(pair[1], ln)?;
                    if a == 0.0 {
                        continue;
                    }
                    if Some(pair[0]) == obj_row.as_deref() {
                        objective.coefs.push((v, a));
                    } else {
                        let &r = row_index
                            .get(pair[0])
                            .ok_or_else(|| parse_err(ln, format!("unknown row '{}'", pair[0])))?;
                        rows[r].coefs.push((v, a));
                    }
                }
            }
            Sec::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(parse_err(
                        ln,
                        "expected '<set> <row> <value> [<row> <value>]'",
                    ));
                }
                for pair in f[1..].chunks(2) {
                    let b = parse_num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        objective.offset = -b;
                    } else {
                        let &r = row_index
                            .get(pair[0])
                            .ok_or_else(|| parse_err(ln, format!("unknown row '{}'", pair[0])))?;
                        rows[r].rhs = b;
                    }
                }
            }
            Sec::Bounds => {
                let ok = match f[..] {
                    ["BV", _, name] => var_index.contains_key(name),
                    ["UP", _, name, "1"] | ["LO", _, name, "0"] => var_index.contains_key(name),
                    _ => false,
                };
                if !ok {
                    return Err(parse_err(
                        ln,
                        format!("unsupported bound '{}'", line.trim()),
                    ));
                }
            }
            Sec::Head | Sec::Done => {
                return Err(parse_err(ln, "unexpected data line"));
            }
        }
    }
    if sec != Sec::Done {
        return Err(parse_err(text.lines().count(), "missing ENDATA"));
    }
    Ok(BipProblem {
        names,
        rows,
        objective,
        guide: None,
    })
}
