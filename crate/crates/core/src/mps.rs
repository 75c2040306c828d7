//! Free-format MPS export and import for the lifted model.
//!
//! Names follow the stable column/row naming of the variable space, values
//! print with Rust's shortest round-trip formatting, and sections are
//! emitted in deterministic order, so export -> import -> export is
//! byte-identical.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::SparseLpModel;

pub const OBJECTIVE_ROW: &str = "COST";
const RHS_SET: &str = "RHS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Free,
    Equal,
    LessEq,
    GreaterEq,
}

impl RowSense {
    fn code(self) -> char {
        match self {
            RowSense::Free => 'N',
            RowSense::Equal => 'E',
            RowSense::LessEq => 'L',
            RowSense::GreaterEq => 'G',
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(RowSense::Free),
            "E" => Ok(RowSense::Equal),
            "L" => Ok(RowSense::LessEq),
            "G" => Ok(RowSense::GreaterEq),
            other => Err(Error::Parse(format!("unknown row sense {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MpsColumn {
    pub name: String,
    pub entries: Vec<(String, f64)>,
}

/// An MPS file in memory: enough structure to re-emit it byte-for-byte and
/// to rebuild the coefficient matrix.
#[derive(Debug, Clone)]
pub struct MpsFile {
    pub name: String,
    pub rows: Vec<(RowSense, String)>,
    pub columns: Vec<MpsColumn>,
    pub rhs: Vec<(String, f64)>,
}

impl MpsFile {
    pub fn from_model(model: &SparseLpModel) -> Self {
        let space = model.space();
        let mut rows = Vec::with_capacity(model.n_rows() + 1);
        rows.push((RowSense::Free, OBJECTIVE_ROW.to_string()));
        for row in model.rows() {
            rows.push((RowSense::Equal, row.tag.name()));
        }

        // transpose the row-major model into column order
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n_cols()];
        for (ri, row) in model.rows().iter().enumerate() {
            for (&c, &v) in row.cols.iter().zip(&row.coefs) {
                by_col[c as usize].push((ri, v));
            }
        }
        let columns = by_col
            .into_iter()
            .enumerate()
            .map(|(c, in_rows)| {
                let mut entries = Vec::with_capacity(in_rows.len() + 1);
                let obj = model.objective()[c];
                if obj != 0.0 {
                    entries.push((OBJECTIVE_ROW.to_string(), obj));
                }
                for (ri, v) in in_rows {
                    entries.push((model.rows()[ri].tag.name(), v));
                }
                MpsColumn { name: space.column_name(c as u32), entries }
            })
            .collect();

        let rhs = model
            .rows()
            .iter()
            .filter(|r| r.rhs != 0.0)
            .map(|r| (r.tag.name(), r.rhs))
            .collect();

        Self { name: model.label().to_string(), rows, columns, rhs }
    }

    pub fn write(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NAME {}", self.name);
        out.push_str("ROWS\n");
        for (sense, name) in &self.rows {
            let _ = writeln!(out, " {} {}", sense.code(), name);
        }
        out.push_str("COLUMNS\n");
        for col in &self.columns {
            for (row, v) in &col.entries {
                let _ = writeln!(out, "    {} {} {}", col.name, row, v);
            }
        }
        out.push_str("RHS\n");
        for (row, v) in &self.rhs {
            let _ = writeln!(out, "    {RHS_SET} {} {}", row, v);
        }
        out.push_str("ENDATA\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Preamble,
            Rows,
            Columns,
            Rhs,
            Done,
        }
        let mut section = Section::Preamble;
        let mut name = String::new();
        let mut rows = Vec::new();
        let mut columns: Vec<MpsColumn> = Vec::new();
        let mut rhs = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('*') {
                continue;
            }
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if !line.starts_with(' ') {
                let mut it = line.split_whitespace();
                match it.next().unwrap() {
                    "NAME" => name = it.next().unwrap_or("").to_string(),
                    "ROWS" => section = Section::Rows,
                    "COLUMNS" => section = Section::Columns,
                    "RHS" => section = Section::Rhs,
                    "BOUNDS" | "RANGES" => {
                        return Err(bad("BOUNDS/RANGES sections are not supported"))
                    }
                    "ENDATA" => section = Section::Done,
                    other => return Err(bad(&format!("unknown section {other:?}"))),
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match section {
                Section::Rows => {
                    if fields.len() != 2 {
                        return Err(bad("ROWS entries need a sense and a name"));
                    }
                    rows.push((RowSense::parse(fields[0])?, fields[1].to_string()));
                }
                Section::Columns => {
                    if fields.len() != 3 && fields.len() != 5 {
                        return Err(bad("COLUMNS entries come in (column, row, value) groups"));
                    }
                    let col = fields[0];
                    if columns.last().map(|c| c.name.as_str()) != Some(col) {
                        columns.push(MpsColumn { name: col.to_string(), entries: Vec::new() });
                    }
                    let cur = columns.last_mut().unwrap();
                    for pair in fields[1..].chunks(2) {
                        let v: f64 = pair[1]
                            .parse()
                            .map_err(|e| bad(&format!("bad value {:?}: {e}", pair[1])))?;
                        cur.entries.push((pair[0].to_string(), v));
                    }
                }
                Section::Rhs => {
                    if fields.len() != 3 && fields.len() != 5 {
                        return Err(bad("RHS entries come in (set, row, value) groups"));
                    }
                    for pair in fields[1..].chunks(2) {
                        let v: f64 = pair[1]
                            .parse()
                            .map_err(|e| bad(&format!("bad value {:?}: {e}", pair[1])))?;
                        rhs.push((pair[0].to_string(), v));
                    }
                }
                Section::Preamble | Section::Done => {
                    return Err(bad("data outside any section"));
                }
            }
        }
        if section != Section::Done {
            return Err(Error::Parse("missing ENDATA".into()));
        }
        Ok(Self { name, rows, columns, rhs })
    }

    pub fn n_constraint_rows(&self) -> usize {
        self.rows.iter().filter(|(s, _)| *s != RowSense::Free).count()
    }

    /// Compares the parsed matrix against a model, coefficient by
    /// coefficient. Returns the first discrepancy, or `None` if equal.
    pub fn diff_model(&self, model: &SparseLpModel) -> Option<String> {
        if self.n_constraint_rows() != model.n_rows() {
            return Some(format!(
                "{} constraint rows, model has {}",
                self.n_constraint_rows(),
                model.n_rows()
            ));
        }
        if self.columns.len() != model.n_cols() {
            return Some(format!(
                "{} columns, model has {}",
                self.columns.len(),
                model.n_cols()
            ));
        }
        let row_index: HashMap<String, usize> = model
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.tag.name(), i))
            .collect();
        for (c, col) in self.columns.iter().enumerate() {
            let want = model.space().column_name(c as u32);
            if col.name != want {
                return Some(format!("column {c} named {:?}, expected {want:?}", col.name));
            }
            let model_row = |name: &str| -> Option<f64> {
                if name == OBJECTIVE_ROW {
                    return Some(model.objective()[c]);
                }
                let &ri = row_index.get(name)?;
                let row = &model.rows()[ri];
                Some(match row.cols.binary_search(&(c as u32)) {
                    Ok(k) => row.coefs[k],
                    Err(_) => 0.0,
                })
            };
            for (rname, v) in &col.entries {
                match model_row(rname) {
                    Some(mv) if mv == *v => {}
                    Some(mv) => {
                        return Some(format!(
                            "coefficient ({rname}, {}) is {v}, model has {mv}",
                            col.name
                        ))
                    }
                    None => return Some(format!("unknown row {rname:?}")),
                }
            }
            let nnz_want = model.rows().iter().filter(|r| r.cols.binary_search(&(c as u32)).is_ok()).count()
                + usize::from(model.objective()[c] != 0.0);
            if col.entries.len() != nnz_want {
                return Some(format!(
                    "column {} has {} entries, model has {nnz_want}",
                    col.name,
                    col.entries.len()
                ));
            }
        }
        for (rname, v) in &self.rhs {
            match row_index.get(rname.as_str()) {
                Some(&ri) if model.rows()[ri].rhs == *v => {}
                Some(&ri) => {
                    return Some(format!(
                        "rhs of {rname} is {v}, model has {}",
                        model.rows()[ri].rhs
                    ))
                }
                None => return Some(format!("rhs names unknown row {rname:?}")),
            }
        }
        let nonzero_rhs = model.rows().iter().filter(|r| r.rhs != 0.0).count();
        if self.rhs.len() != nonzero_rhs {
            return Some(format!(
                "{} rhs entries, model has {nonzero_rhs} nonzero",
                self.rhs.len()
            ));
        }
        None
    }
}

/// Renders a model as an MPS file.
pub fn export(model: &SparseLpModel) -> String {
    MpsFile::from_model(model).write()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random;
    use crate::model::build_model;

    #[test]
    fn round_trip_is_byte_identical() {
        let inst = generate_random(6, 42, false).unwrap();
        let model = build_model(&inst).unwrap();
        let first = export(&model);
        let parsed = MpsFile::parse(&first).unwrap();
        assert_eq!(parsed.write(), first);
        assert_eq!(parsed.diff_model(&model), None);
    }

    #[test]
    fn parsed_shape_matches_model() {
        let inst = generate_random(5, 7, true).unwrap();
        let model = build_model(&inst).unwrap();
        let parsed = MpsFile::parse(&export(&model)).unwrap();
        assert_eq!(parsed.name, model.label());
        assert_eq!(parsed.n_constraint_rows(), model.n_rows());
        assert_eq!(parsed.columns.len(), model.n_cols());
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(MpsFile::parse("NAME x\nROWS\n").is_err());
        assert!(MpsFile::parse("NAME x\nROWS\n Q FOO\nENDATA\n").is_err());
        assert!(MpsFile::parse("NAME x\nCOLUMNS\n    C R notanumber\nENDATA\n").is_err());
        assert!(MpsFile::parse(" stray data\n").is_err());
    }
}
