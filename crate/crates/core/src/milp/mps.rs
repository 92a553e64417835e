//! Fixed-format MPS writer and reader.
//!
//! Names that do not fit the 8-character fields (or contain blanks, or
//! collide) are replaced by `C0000012` / `R0000003` style codes; the original
//! names are kept in `* NAME` comment lines so the reader can restore them.
//! Numeric fields are written with the shortest exact decimal representation
//! and widened past 12 characters when needed, which keeps round trips exact.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::program::{Row, Sense, StandardFormProgram};
use super::Solution;
use crate::error::{Error, Result};

fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".to_string()
    } else if (1e-4..1e12).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fits(name: &str) -> bool {
    !name.is_empty() && name.len() <= 8 && name.is_ascii() && !name.contains(char::is_whitespace) && !name.starts_with('*')
}

fn assign_codes<'a>(names: impl Iterator<Item = &'a str>, prefix: char, reserved: &HashSet<String>) -> Vec<(String, bool)> {
    let mut used: HashSet<String> = reserved.clone();
    let names: Vec<&str> = names.collect();
    let mut out = Vec::with_capacity(names.len());
    for (k, n) in names.iter().enumerate() {
        let code = format!("{prefix}{k:07}");
        if fits(n) && !used.contains(*n) && !(n.len() == 8 && n.starts_with(prefix) && n[1..].chars().all(|c| c.is_ascii_digit())) {
            used.insert(n.to_string());
            out.push((n.to_string(), false));
        } else {
            used.insert(code.clone());
            out.push((code, true));
        }
    }
    out
}

/// Renders the program as fixed-format MPS text. Identical programs give
/// identical bytes.
pub fn export_mps(program: &StandardFormProgram) -> Result<String> {
    program.validate()?;
    let reserved: HashSet<String> = ["OBJ".to_string()].into_iter().collect();
    let cols = assign_codes(program.names.iter().map(|s| s.as_str()), 'C', &reserved);
    let rows = assign_codes(program.rows.iter().map(|r| r.name.as_str()), 'R', &reserved);

    let mut s = String::new();
    writeln!(s, "NAME          H2GRID").unwrap();
    for (j, (code, renamed)) in cols.iter().enumerate() {
        if *renamed {
            writeln!(s, "* NAME {code} {}", program.names[j]).unwrap();
        }
    }
    for (i, (code, renamed)) in rows.iter().enumerate() {
        if *renamed {
            writeln!(s, "* NAME {code} {}", program.rows[i].name).unwrap();
        }
    }
    writeln!(s, "ROWS").unwrap();
    writeln!(s, " N  OBJ").unwrap();
    for (i, r) in program.rows.iter().enumerate() {
        let t = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        writeln!(s, " {t}  {}", rows[i].0).unwrap();
    }
    // column-major coefficient lists
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); program.num_vars()];
    for (i, r) in program.rows.iter().enumerate() {
        for &(j, a) in &r.coefs {
            by_col[j].push((i, a));
        }
    }
    writeln!(s, "COLUMNS").unwrap();
    let mut in_int = false;
    let mut marker = 0;
    for j in 0..program.num_vars() {
        let is_bin = program.binary[j];
        if is_bin != in_int {
            let kind = if is_bin { "'INTORG'" } else { "'INTEND'" };
            writeln!(s, "    {:<8}  {:<8}  {:>12}", format!("M{marker:07}"), "'MARKER'", kind).unwrap();
            marker += 1;
            in_int = is_bin;
        }
        let name = &cols[j].0;
        writeln!(s, "    {:<8}  {:<8}  {:>12}", name, "OBJ", fmt_num(program.objective[j])).unwrap();
        let mut entries = by_col[j].clone();
        entries.sort_by_key(|e| e.0);
        for (i, a) in entries {
            writeln!(s, "    {:<8}  {:<8}  {:>12}", name, rows[i].0, fmt_num(a)).unwrap();
        }
    }
    if in_int {
        writeln!(s, "    {:<8}  {:<8}  {:>12}", format!("M{marker:07}"), "'MARKER'", "'INTEND'").unwrap();
    }
    writeln!(s, "RHS").unwrap();
    if program.objective_offset != 0.0 {
        writeln!(s, "    {:<8}  {:<8}  {:>12}", "RHS", "OBJ", fmt_num(-program.objective_offset)).unwrap();
    }
    for (i, r) in program.rows.iter().enumerate() {
        if r.rhs != 0.0 {
            writeln!(s, "    {:<8}  {:<8}  {:>12}", "RHS", rows[i].0, fmt_num(r.rhs)).unwrap();
        }
    }
    writeln!(s, "BOUNDS").unwrap();
    for j in 0..program.num_vars() {
        let (lo, hi) = (program.lower[j], program.upper[j]);
        let name = &cols[j].0;
        let line = |s: &mut String, t: &str, v: Option<f64>| match v {
            Some(v) => writeln!(s, " {t} {:<8}  {:<8}  {:>12}", "BND", name, fmt_num(v)).unwrap(),
            None => writeln!(s, " {t} {:<8}  {}", "BND", name).unwrap(),
        };
        if program.binary[j] && lo == 0.0 && hi == 1.0 {
            line(&mut s, "BV", None);
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            line(&mut s, "FR", None);
        } else if lo == hi {
            line(&mut s, "FX", Some(lo));
        } else {
            if lo == f64::NEG_INFINITY {
                line(&mut s, "MI", None);
            } else if lo != 0.0 {
                line(&mut s, "LO", Some(lo));
            }
            if hi.is_finite() {
                line(&mut s, "UP", Some(hi));
            }
        }
    }
    if program.is_quadratic() {
        writeln!(s, "QUADOBJ").unwrap();
        for j in 0..program.num_vars() {
            let q = program.quad(j);
            if q != 0.0 {
                writeln!(s, "    {:<8}  {:<8}  {:>12}", cols[j].0, cols[j].0, fmt_num(q)).unwrap();
            }
        }
    }
    writeln!(s, "ENDATA").unwrap();
    Ok(s)
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Data(format!("MPS line {line}: bad number `{tok}`")))
}

/// Parses MPS text produced by [`export_mps`] (and plain fixed/free MPS
/// without RANGES).
pub fn import_mps(text: &str) -> Result<StandardFormProgram> {
    let mut p = StandardFormProgram::new();
    let mut original: HashMap<String, String> = HashMap::new();
    let mut row_idx: HashMap<String, usize> = HashMap::new();
    let mut col_idx: HashMap<String, usize> = HashMap::new();
    let mut obj_name = String::from("OBJ");
    let mut section = String::new();
    let mut in_int = false;
    let mut row_coefs: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut lower_seen: Vec<bool> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        if let Some(rest) = raw.strip_prefix("* NAME ") {
            if let Some((code, name)) = rest.split_once(' ') {
                original.insert(code.to_string(), name.to_string());
            }
            continue;
        }
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        if !raw.starts_with(' ') {
            section = raw.split_whitespace().next().unwrap_or("").to_string();
            if section == "ENDATA" {
                break;
            }
            if section == "RANGES" {
                return Err(Error::Data("MPS RANGES section is not supported".into()));
            }
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        let bad = || Error::Data(format!("MPS line {ln}: malformed entry"));
        match section.as_str() {
            "ROWS" => {
                if f.len() < 2 {
                    return Err(bad());
                }
                let sense = match f[0] {
                    "N" => {
                        obj_name = f[1].to_string();
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(bad()),
                };
                row_idx.insert(f[1].to_string(), p.rows.len());
                p.rows.push(Row { name: f[1].to_string(), coefs: Vec::new(), sense, rhs: 0.0 });
                row_coefs.push(Vec::new());
            }
            "COLUMNS" => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    in_int = f[2] == "'INTORG'";
                    continue;
                }
                if f.len() < 3 || f.len().is_multiple_of(2) {
                    return Err(bad());
                }
                let j = match col_idx.get(f[0]) {
                    Some(&j) => j,
                    None => {
                        let j = if in_int { p.add_binary(f[0], 0.0) } else { p.add_var(f[0], 0.0, f64::INFINITY, 0.0) };
                        lower_seen.push(false);
                        col_idx.insert(f[0].to_string(), j);
                        j
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if pair[0] == obj_name {
                        p.objective[j] += v;
                    } else {
                        let i = *row_idx.get(pair[0]).ok_or_else(bad)?;
                        row_coefs[i].push((j, v));
                    }
                }
            }
            "RHS" => {
                let toks = if f.len() % 2 == 1 { &f[1..] } else { &f[..] };
                for pair in toks.chunks(2) {
                    if pair.len() < 2 {
                        return Err(bad());
                    }
                    let v = parse_num(pair[1], ln)?;
                    if pair[0] == obj_name {
                        p.objective_offset = -v;
                    } else {
                        let i = *row_idx.get(pair[0]).ok_or_else(bad)?;
                        p.rows[i].rhs = v;
                    }
                }
            }
            "BOUNDS" => {
                if f.len() < 3 {
                    return Err(bad());
                }
                let j = *col_idx.get(f[2]).ok_or_else(bad)?;
                let val = if f.len() >= 4 { Some(parse_num(f[3], ln)?) } else { None };
                let need = |v: Option<f64>| v.ok_or_else(bad);
                match f[0] {
                    "UP" => {
                        let v = need(val)?;
                        p.upper[j] = v;
                        if v < 0.0 && !lower_seen[j] && p.lower[j] == 0.0 {
                            p.lower[j] = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => {
                        p.lower[j] = need(val)?;
                        lower_seen[j] = true;
                    }
                    "FX" => {
                        let v = need(val)?;
                        p.lower[j] = v;
                        p.upper[j] = v;
                        lower_seen[j] = true;
                    }
                    "FR" => {
                        p.lower[j] = f64::NEG_INFINITY;
                        p.upper[j] = f64::INFINITY;
                        lower_seen[j] = true;
                    }
                    "MI" => {
                        p.lower[j] = f64::NEG_INFINITY;
                        lower_seen[j] = true;
                    }
                    "PL" => p.upper[j] = f64::INFINITY,
                    "BV" => {
                        p.binary[j] = true;
                        p.lower[j] = 0.0;
                        p.upper[j] = 1.0;
                    }
                    _ => return Err(bad()),
                }
            }
            "QUADOBJ" | "QMATRIX" => {
                if f.len() < 3 {
                    return Err(bad());
                }
                if f[0] != f[1] {
                    return Err(Error::Data(format!("MPS line {ln}: only diagonal quadratic terms are supported")));
                }
                let j = *col_idx.get(f[0]).ok_or_else(bad)?;
                let v = parse_num(f[2], ln)?;
                p.add_quadratic(j, v);
            }
            _ => return Err(Error::Data(format!("MPS line {ln}: entry outside a known section"))),
        }
    }
    for (i, coefs) in row_coefs.into_iter().enumerate() {
        p.rows[i].coefs = coefs;
    }
    // binaries declared only through markers keep [0,1] unless bounds said otherwise
    for j in 0..p.num_vars() {
        if p.binary[j] && p.upper[j] == f64::INFINITY {
            p.upper[j] = 1.0;
        }
    }
    for name in p.names.iter_mut() {
        if let Some(o) = original.get(name) {
            *name = o.clone();
        }
    }
    for row in p.rows.iter_mut() {
        if let Some(o) = original.get(&row.name) {
            row.name = o.clone();
        }
    }
    p.validate()?;
    Ok(p)
}

/// Writes `name,value` rows for every variable.
pub fn write_solution_csv(program: &StandardFormProgram, solution: &Solution, path: &Path) -> Result<()> {
    let mut s = String::from("name,value\n");
    for (name, v) in program.names.iter().zip(&solution.x) {
        let name = if name.contains([',', '"', '\n']) { format!("\"{}\"", name.replace('"', "\"\"")) } else { name.clone() };
        writeln!(s, "{name},{v}").unwrap();
    }
    crate::io::write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> StandardFormProgram {
        let mut p = StandardFormProgram::new();
        p.add_var("x", 0.0, 4.0, 1.5);
        p.add_binary("y", -2.0);
        p.add_row("cap", vec![(0, 1.0), (1, 3.0)], Sense::Le, 5.0);
        p.add_row("floor", vec![(0, 1.0)], Sense::Ge, 0.25);
        p
    }

    #[test]
    fn golden_two_variable_fixture() {
        let text = export_mps(&fixture()).unwrap();
        let golden = "NAME          H2GRID
ROWS
 N  OBJ
 L  cap
 G  floor
COLUMNS
    x         OBJ                1.5
    x         cap                  1
    x         floor                1
    M0000000  'MARKER'      'INTORG'
    y         OBJ                 -2
    y         cap                  3
    M0000001  'MARKER'      'INTEND'
RHS
    RHS       cap                  5
    RHS       floor             0.25
BOUNDS
 UP BND       x                    4
 BV BND       y
ENDATA
";
        assert_eq!(text, golden);
    }

    #[test]
    fn long_names_are_coded_and_restored() {
        let mut p = fixture();
        p.names[0] = "battery charge[17]".into();
        p.rows[0].name = "balance t=3".into();
        p.objective_offset = 2.5;
        p.add_quadratic(0, 0.125);
        let text = export_mps(&p).unwrap();
        assert!(text.contains("C0000000"));
        let back = import_mps(&text).unwrap();
        assert_eq!(back, p);
    }
}
