//! Free-format MPS in both directions and the plain-text solution format.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::lp::{LpInstance, RowFamily, Sense, SolveResult, SolveStatus, VarRole, VariableRef, NONE};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unknown variable name `{0}`")]
    UnknownVariableName(String),
}

fn num<T: Scalar>(v: T) -> String {
    let x = v.as_f64();
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:e}")
    }
}

/// Writes `lp` in free MPS. Columns without any row entry get an explicit
/// zero objective entry so readers still see them; those entries are the only
/// `OBJ` lines that do not come from the objective.
pub fn write_mps<T: Scalar, W: Write>(lp: &LpInstance<T>, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    let var_names: Vec<String> = (0..lp.n_vars()).map(|j| lp.var_name(j)).collect();
    let row_names: Vec<String> = (0..lp.n_rows()).map(|i| lp.row_name(i)).collect();

    writeln!(w, "NAME {}", if lp.name.is_empty() { "flowgraph" } else { &lp.name })?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N OBJ")?;
    for (meta, name) in lp.rows.iter().zip(&row_names) {
        let tag = match meta.sense() {
            Sense::Eq => "E",
            Sense::Le | Sense::Range => "L",
            Sense::Ge => "G",
        };
        writeln!(w, " {tag} {name}")?;
    }

    // Column-wise view of the row storage.
    let mut col_count = vec![0usize; lp.n_vars() + 1];
    for i in 0..lp.n_rows() {
        for &j in lp.row(i).0 {
            col_count[j as usize + 1] += 1;
        }
    }
    for j in 0..lp.n_vars() {
        col_count[j + 1] += col_count[j];
    }
    let mut fill = col_count.clone();
    let mut entries = vec![(0usize, T::zero()); lp.n_nonzeros()];
    for i in 0..lp.n_rows() {
        let (c, v) = lp.row(i);
        for (&j, &a) in c.iter().zip(v) {
            entries[fill[j as usize]] = (i, a);
            fill[j as usize] += 1;
        }
    }
    let mut obj = vec![T::zero(); lp.n_vars()];
    for &(j, c) in &lp.objective {
        obj[j] = obj[j] + c;
    }

    writeln!(w, "COLUMNS")?;
    let mut in_int = false;
    let mut marker = 0;
    for j in 0..lp.n_vars() {
        let integer = lp.vars[j].integer;
        if integer != in_int {
            let kind = if integer { "INTORG" } else { "INTEND" };
            writeln!(w, " MARKER{marker} 'MARKER' '{kind}'")?;
            marker += 1;
            in_int = integer;
        }
        let name = &var_names[j];
        let col = &entries[col_count[j]..col_count[j + 1]];
        if obj[j] != T::zero() || col.is_empty() {
            writeln!(w, " {name} OBJ {}", num(obj[j]))?;
        }
        for &(i, a) in col {
            writeln!(w, " {name} {} {}", row_names[i], num(a))?;
        }
    }
    if in_int {
        writeln!(w, " MARKER{marker} 'MARKER' 'INTEND'")?;
    }

    writeln!(w, "RHS")?;
    for (meta, name) in lp.rows.iter().zip(&row_names) {
        let rhs = match meta.sense() {
            Sense::Eq | Sense::Ge => meta.lower,
            Sense::Le | Sense::Range => meta.upper,
        };
        if rhs != T::zero() {
            writeln!(w, " RHS {name} {}", num(rhs))?;
        }
    }
    if lp.rows.iter().any(|m| m.sense() == Sense::Range) {
        writeln!(w, "RANGES")?;
        for (meta, name) in lp.rows.iter().zip(&row_names) {
            if meta.sense() == Sense::Range {
                writeln!(w, " RNG {name} {}", num(meta.upper - meta.lower))?;
            }
        }
    }

    writeln!(w, "BOUNDS")?;
    for (v, name) in lp.vars.iter().zip(&var_names) {
        let (lo, up) = (v.lower, v.upper);
        if lo == up {
            writeln!(w, " FX BND {name} {}", num(lo))?;
            continue;
        }
        if lo.is_infinite() && up.is_infinite() {
            writeln!(w, " FR BND {name}")?;
            continue;
        }
        if lo.is_infinite() {
            writeln!(w, " MI BND {name}")?;
        } else if lo != T::zero() || v.integer {
            writeln!(w, " LO BND {name} {}", num(lo))?;
        }
        if up.is_finite() {
            writeln!(w, " UP BND {name} {}", num(up))?;
        } else if v.integer {
            writeln!(w, " PL BND {name}")?;
        }
    }
    writeln!(w, "ENDATA")?;
    w.flush()
}

pub fn write_mps_file<T: Scalar>(lp: &LpInstance<T>, path: &Path) -> Result<(), FormatError> {
    let f = fs::File::create(path)?;
    write_mps(lp, f)?;
    Ok(())
}

const ROLES: [VarRole; 6] =
    [VarRole::Flow, VarRole::StorageLevel, VarRole::Invest, VarRole::UnitsOn, VarRole::FlowAboveMin, VarRole::VoltageAngle];

/// `prefix(x,y,3)` split into its prefix and arguments.
fn split_key(name: &str) -> Option<(&str, Vec<&str>)> {
    let (prefix, rest) = name.split_once('(')?;
    let inner = rest.strip_suffix(')')?;
    Some((prefix, inner.split(',').collect()))
}

struct Keys {
    entities: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Keys {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&k) = self.lookup.get(s) {
            return k;
        }
        let k = self.entities.len() as u32;
        self.entities.push(s.to_string());
        self.lookup.insert(s.to_string(), k);
        k
    }

    /// Entity keys and timestep of an argument list; a trailing integer is
    /// the timestep when `timed` says so.
    fn args(&mut self, args: &[&str], timed: bool) -> Option<(u32, u32, u32)> {
        let (names, t) = match (timed, args.split_last()) {
            (true, Some((last, rest))) => (rest, last.parse::<u32>().ok()?),
            _ => (args, NONE),
        };
        match names {
            [a] => Some((self.intern(a), NONE, t)),
            [a, b] => Some((self.intern(a), self.intern(b), t)),
            _ => None,
        }
    }
}

/// Reads free MPS written by [`write_mps`] back into an instance.
///
/// Names must follow the `prefix(entity,...,t)` scheme of this crate, since
/// variable and row keys are rebuilt from them. Row terms come back sorted
/// by column.
pub fn read_mps<T: Scalar>(text: &str) -> Result<LpInstance<T>, FormatError> {
    let err = |line: usize, message: String| FormatError::ParseError { line, message };
    let mut lp = LpInstance::new("");
    let mut keys = Keys { entities: Vec::new(), lookup: HashMap::new() };
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_tags: Vec<(String, char)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut terms: Vec<Vec<(usize, T)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut range: Vec<Option<f64>> = Vec::new();
    let mut objective: Vec<(usize, T)> = Vec::new();
    let mut integer = false;
    let mut section = "";
    let mut saw_end = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = fields[0];
            match section {
                "NAME" => lp.name = fields.get(1).copied().unwrap_or("").to_string(),
                "ROWS" | "COLUMNS" | "RHS" | "RANGES" | "BOUNDS" => {}
                "ENDATA" => {
                    saw_end = true;
                    break;
                }
                other => return Err(err(line, format!("unknown section `{other}`"))),
            }
            continue;
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(line, format!("bad number `{s}`")));
        match section {
            "ROWS" => {
                let [tag, name] = fields[..] else { return Err(err(line, "expected `<type> <row>`".into())) };
                if tag == "N" {
                    if obj_row.is_none() {
                        obj_row = Some(name.to_string());
                    }
                    continue;
                }
                let tag = match tag {
                    "E" | "L" | "G" => tag.chars().next().unwrap(),
                    _ => return Err(err(line, format!("unknown row type `{tag}`"))),
                };
                if row_index.insert(name.to_string(), row_tags.len()).is_some() {
                    return Err(err(line, format!("duplicate row `{name}`")));
                }
                row_tags.push((name.to_string(), tag));
                terms.push(Vec::new());
                rhs.push(0.0);
                range.push(None);
            }
            "COLUMNS" => {
                if fields.get(1) == Some(&"'MARKER'") {
                    match fields.get(2) {
                        Some(&"'INTORG'") => integer = true,
                        Some(&"'INTEND'") => integer = false,
                        _ => return Err(err(line, "bad marker".into())),
                    }
                    continue;
                }
                if fields.len() < 3 || fields.len().is_multiple_of(2) {
                    return Err(err(line, "expected `<column> <row> <value> [<row> <value>]`".into()));
                }
                let name = fields[0];
                let j = match col_index.get(name) {
                    Some(&j) => j,
                    None => {
                        let (prefix, args) = split_key(name).ok_or_else(|| err(line, format!("unrecognised column name `{name}`")))?;
                        let role = ROLES
                            .into_iter()
                            .find(|r| r.prefix() == prefix)
                            .ok_or_else(|| err(line, format!("unknown variable prefix `{prefix}`")))?;
                        let (a, b, t) = keys
                            .args(&args, role != VarRole::Invest)
                            .ok_or_else(|| err(line, format!("malformed column name `{name}`")))?;
                        let j = lp.add_var(VariableRef { role, a, b, t, lower: T::zero(), upper: T::infinity(), integer });
                        col_index.insert(name.to_string(), j);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let v = T::of(num(pair[1])?);
                    if Some(pair[0]) == obj_row.as_deref() {
                        objective.push((j, v));
                    } else {
                        let i = *row_index.get(pair[0]).ok_or_else(|| err(line, format!("unknown row `{}`", pair[0])))?;
                        terms[i].push((j, v));
                    }
                }
            }
            "RHS" | "RANGES" => {
                if fields.len() < 3 || fields.len().is_multiple_of(2) {
                    return Err(err(line, "expected `<set> <row> <value> [<row> <value>]`".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let v = num(pair[1])?;
                    if section == "RHS" && Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let i = *row_index.get(pair[0]).ok_or_else(|| err(line, format!("unknown row `{}`", pair[0])))?;
                    if section == "RHS" {
                        rhs[i] = v;
                    } else {
                        range[i] = Some(v);
                    }
                }
            }
            "BOUNDS" => {
                if fields.len() < 3 {
                    return Err(err(line, "expected `<type> <set> <column> [<value>]`".into()));
                }
                let j = *col_index.get(fields[2]).ok_or_else(|| err(line, format!("unknown column `{}`", fields[2])))?;
                let value = || fields.get(3).ok_or_else(|| err(line, "missing bound value".into())).and_then(|s| num(s)).map(T::of);
                let v = &mut lp.vars[j];
                match fields[0] {
                    "UP" | "UI" => v.upper = value()?,
                    "LO" | "LI" => v.lower = value()?,
                    "FX" => {
                        v.lower = value()?;
                        v.upper = v.lower;
                    }
                    "FR" => {
                        v.lower = T::neg_infinity();
                        v.upper = T::infinity();
                    }
                    "MI" => v.lower = T::neg_infinity(),
                    "PL" => v.upper = T::infinity(),
                    "BV" => {
                        v.lower = T::zero();
                        v.upper = T::one();
                        v.integer = true;
                    }
                    other => return Err(err(line, format!("unknown bound type `{other}`"))),
                }
            }
            _ => return Err(err(line, "data line outside a section".into())),
        }
    }
    if !saw_end {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    for (i, (name, tag)) in row_tags.iter().enumerate() {
        let (prefix, args) = split_key(name).ok_or_else(|| err(0, format!("unrecognised row name `{name}`")))?;
        let family = RowFamily::ALL
            .into_iter()
            .find(|f| f.prefix() == prefix)
            .ok_or_else(|| err(0, format!("unknown row prefix `{prefix}`")))?;
        let (a, b, t) = keys.args(&args, true).ok_or_else(|| err(0, format!("malformed row name `{name}`")))?;
        let r = rhs[i];
        let (lower, upper) = match (tag, range[i]) {
            ('E', None) => (r, r),
            ('E', Some(w)) if w < 0.0 => (r + w, r),
            ('E', Some(w)) => (r, r + w),
            ('L', None) => (f64::NEG_INFINITY, r),
            ('L', Some(w)) => (r - w.abs(), r),
            ('G', None) => (r, f64::INFINITY),
            (_, Some(w)) => (r, r + w.abs()),
            (_, None) => unreachable!("row tags are E, L or G"),
        };
        let row = &mut terms[i];
        row.sort_by_key(|&(j, _)| j);
        lp.push_row_parts(family, a, b, t, T::of(lower), T::of(upper), row);
    }
    objective.sort_by_key(|&(j, _)| j);
    objective.retain(|&(_, c)| c != T::zero());
    lp.objective = objective;
    lp.entities = keys.entities;
    Ok(lp)
}

pub fn read_mps_file<T: Scalar>(path: &Path) -> Result<LpInstance<T>, FormatError> {
    read_mps(&fs::read_to_string(path)?)
}

/// Writes a solution in the format [`read_solution`] accepts.
pub fn write_solution<T: Scalar, W: Write>(lp: &LpInstance<T>, result: &SolveResult<T>, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "status {}", result.status)?;
    writeln!(w, "obj {:e}", result.objective.as_f64())?;
    if let Some(x) = &result.primal {
        for (j, v) in x.iter().enumerate() {
            writeln!(w, "{} {:e}", lp.var_name(j), v.as_f64())?;
        }
    }
    w.flush()
}

/// Parses a solution file against the variable names of `lp`. Variables the
/// file does not mention are zero.
pub fn read_solution<T: Scalar>(path: &Path, lp: &LpInstance<T>) -> Result<SolveResult<T>, FormatError> {
    let text = fs::read_to_string(path)?;
    parse_solution(&text, lp)
}

pub fn parse_solution<T: Scalar>(text: &str, lp: &LpInstance<T>) -> Result<SolveResult<T>, FormatError> {
    let err = |line: usize, message: &str| FormatError::ParseError { line, message: message.to_string() };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let (n, first) = lines.next().ok_or_else(|| err(1, "empty solution file"))?;
    let status = match first.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["status", s] => match *s {
            "optimal" => SolveStatus::Optimal,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            other => return Err(err(n + 1, &format!("unknown status `{other}`"))),
        },
        _ => return Err(err(n + 1, "expected `status <optimal|infeasible|unbounded>`")),
    };
    let parse_num = |line: usize, s: &str| s.parse::<f64>().map(T::of).map_err(|_| err(line, &format!("bad number `{s}`")));

    let objective = match lines.next() {
        Some((n, l)) => match l.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["obj", v] => parse_num(n + 1, v)?,
            _ => return Err(err(n + 1, "expected `obj <value>`")),
        },
        None if status != SolveStatus::Optimal => T::nan(),
        None => return Err(err(n + 2, "missing objective line")),
    };

    if status != SolveStatus::Optimal {
        return Ok(SolveResult { status, objective, primal: None, iterations: 0, wall_time_s: 0.0 });
    }
    let index = lp.var_index_by_name();
    let mut x = vec![T::zero(); lp.n_vars()];
    for (n, l) in lines {
        let mut parts = l.split_whitespace();
        let (Some(name), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(n + 1, "expected `<name> <value>`"));
        };
        let j = *index.get(name).ok_or_else(|| FormatError::UnknownVariableName(name.to_string()))?;
        x[j] = parse_num(n + 1, v)?;
    }
    Ok(SolveResult { status, objective, primal: Some(x), iterations: 0, wall_time_s: 0.0 })
}
