use std::fmt::Write as _;

use bellcorr::mat3::RealMatrix;
use bellcorr::pauli::Operator4;
use clap::ValueEnum;
use serde_json::{json, Map, Value as Json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Formats with 12 significant digits, keeping at least one decimal place.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let mut s = format!("{x:.decimals$}");
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.push('0');
            }
        } else {
            s.push_str(".0");
        }
        s
    } else {
        let mut m = mantissa.to_string();
        while m.ends_with('0') {
            m.pop();
        }
        if m.ends_with('.') {
            m.push('0');
        }
        format!("{m}e{exp}")
    }
}

fn json_num(x: f64) -> Json {
    if x.is_finite() {
        json!(fmt_num(x).parse::<f64>().expect("round trip"))
    } else {
        json!(fmt_num(x))
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Text(String),
    Flag(bool),
    Int(u64),
    Vector(Vec<f64>),
    Matrix(RealMatrix),
    Operator(Operator4),
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::Num(x) => json_num(*x),
            Value::Text(s) => json!(s),
            Value::Flag(b) => json!(b),
            Value::Int(n) => json!(n),
            Value::Vector(v) => Json::Array(v.iter().map(|x| json_num(*x)).collect()),
            Value::Matrix(m) => Json::Array(
                m.to_rows()
                    .iter()
                    .map(|r| Json::Array(r.iter().map(|x| json_num(*x)).collect()))
                    .collect(),
            ),
            Value::Operator(op) => Json::Array(
                op.to_pairs()
                    .iter()
                    .map(|r| Json::Array(r.iter().map(|[re, im]| json!([json_num(*re), json_num(*im)])).collect()))
                    .collect(),
            ),
        }
    }

    fn inline(&self) -> String {
        match self {
            Value::Num(x) => fmt_num(*x),
            Value::Text(s) => s.clone(),
            Value::Flag(b) => b.to_string(),
            Value::Int(n) => n.to_string(),
            other => other.to_json().to_string(),
        }
    }

    fn text_block(&self) -> Option<Vec<String>> {
        match self {
            Value::Matrix(m) => Some(
                m.to_rows()
                    .iter()
                    .map(|r| r.iter().map(|x| format!("{:>18}", fmt_num(*x))).collect::<Vec<_>>().join(" "))
                    .collect(),
            ),
            Value::Operator(op) => Some(
                op.to_pairs()
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|[re, im]| format!("{:>16}{:>+18}i", fmt_num(*re), fmt_num(*im)))
                            .collect::<Vec<_>>()
                            .join("  ")
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
    Int(u64),
    Missing,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Missing => "-".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            other => other.text(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::Num(x) => json_num(*x),
            Cell::Text(s) => json!(s),
            Cell::Int(n) => json!(n),
            Cell::Missing => Json::Null,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// Output of one command: named fields, an optional table, and optional
/// replay records.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub fields: Vec<(&'static str, Value)>,
    pub table: Option<Table>,
    pub records: Vec<Json>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            seed: None,
            fields: Vec::new(),
            table: None,
            records: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &'static str, value: Value) -> &mut Self {
        self.fields.push((key, value));
        self
    }

    fn preface(&self) -> String {
        let mut s = format!("# bellcorr {} {}", env!("CARGO_PKG_VERSION"), self.command);
        if let Some(seed) = self.seed {
            let _ = write!(s, " seed={seed}");
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.render_text(),
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = self.preface();
        out.push('\n');
        let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.fields {
            match v.text_block() {
                Some(lines) => {
                    let _ = writeln!(out, "{k}:");
                    for line in lines {
                        let _ = writeln!(out, "  {line}");
                    }
                }
                None => {
                    let _ = writeln!(out, "{k:<width$}  {}", v.inline());
                }
            }
        }
        if let Some(t) = &self.table {
            let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
            let widths: Vec<usize> = (0..t.columns.len())
                .map(|j| cells.iter().map(|r| r[j].len()).chain([t.columns[j].len()]).max().unwrap_or(0))
                .collect();
            let line = |items: Vec<String>| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            if !self.fields.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "{}", line(t.columns.iter().map(|c| c.to_string()).collect()));
            for r in cells {
                let _ = writeln!(out, "{}", line(r));
            }
        }
        for rec in &self.records {
            let _ = writeln!(out, "replay: {rec}");
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = self.preface();
        out.push('\n');
        match &self.table {
            Some(t) => {
                let _ = writeln!(out, "{}", t.columns.join(","));
                for r in &t.rows {
                    let _ = writeln!(out, "{}", r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                }
            }
            None => {
                out.push_str("field,value\n");
                for (k, v) in &self.fields {
                    let _ = writeln!(out, "{k},{}", csv_escape(&v.inline()));
                }
            }
        }
        out
    }

    fn render_json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        obj.insert("command".into(), json!(self.command));
        if let Some(seed) = self.seed {
            obj.insert("seed".into(), json!(seed));
        }
        for (k, v) in &self.fields {
            obj.insert((*k).into(), v.to_json());
        }
        if let Some(t) = &self.table {
            let rows = t
                .rows
                .iter()
                .map(|r| {
                    let mut row = Map::new();
                    for (c, cell) in t.columns.iter().zip(r) {
                        row.insert((*c).into(), cell.json());
                    }
                    Json::Object(row)
                })
                .collect();
            obj.insert("rows".into(), Json::Array(rows));
        }
        if !self.records.is_empty() {
            obj.insert("failures".into(), Json::Array(self.records.clone()));
        }
        let mut s = serde_json::to_string_pretty(&Json::Object(obj)).expect("serializable");
        s.push('\n');
        s
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
