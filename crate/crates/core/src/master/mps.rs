//! Fixed-format MPS export.

use std::io::Write;

use crate::error::{Error, Result};

use super::model::{MipModel, Sense};

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.len() > 8 || name.contains(char::is_whitespace) {
        return Err(Error::Config(format!("name {name:?} is not a valid fixed MPS name")));
    }
    Ok(())
}

fn line<W: Write>(out: &mut W, f1: &str, f2: &str, f3: &str, f4: &str) -> Result<()> {
    let text = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}");
    writeln!(out, "{}", text.trim_end())?;
    Ok(())
}

/// Integer marker; the keyword goes in field 5 (column 40).
fn marker<W: Write>(out: &mut W, index: usize, tag: &str) -> Result<()> {
    let name = format!("M{index}");
    writeln!(out, "    {name:<8}  {:<8}  {:>12}   {tag}", "'MARKER'", "")?;
    Ok(())
}

/// Writes the model. Binaries sit between integer markers with an upper
/// bound of 1; continuous variables keep the default `[0, inf)`.
pub fn write_mps<W: Write>(m: &MipModel, name: &str, mut out: W) -> Result<()> {
    for v in &m.variables {
        check_name(&v.name)?;
    }
    for c in &m.constraints {
        check_name(&c.name)?;
    }
    writeln!(out, "NAME          {name}")?;
    writeln!(out, "ROWS")?;
    line(&mut out, "N", "OBJ", "", "")?;
    for c in &m.constraints {
        let sense = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        line(&mut out, sense, &c.name, "", "")?;
    }

    let mut columns: Vec<Vec<(&str, i64)>> = vec![Vec::new(); m.variables.len()];
    for &(v, a) in &m.objective {
        columns[v].push(("OBJ", a));
    }
    for c in &m.constraints {
        for &(v, a) in &c.terms {
            columns[v].push((c.name.as_str(), a));
        }
    }

    writeln!(out, "COLUMNS")?;
    let mut in_int = false;
    let mut markers = 0;
    for (v, entries) in m.variables.iter().zip(&columns) {
        if v.binary != in_int {
            let tag = if v.binary { "'INTORG'" } else { "'INTEND'" };
            marker(&mut out, markers, tag)?;
            markers += 1;
            in_int = v.binary;
        }
        if entries.is_empty() {
            // keep the column declared
            line(&mut out, "", &v.name, "OBJ", "0")?;
        }
        for (row, a) in entries {
            line(&mut out, "", &v.name, row, &a.to_string())?;
        }
    }
    if in_int {
        marker(&mut out, markers, "'INTEND'")?;
    }

    writeln!(out, "RHS")?;
    for c in &m.constraints {
        if c.rhs != 0 {
            line(&mut out, "", "RHS", &c.name, &c.rhs.to_string())?;
        }
    }
    writeln!(out, "BOUNDS")?;
    for v in m.variables.iter().filter(|v| v.binary) {
        line(&mut out, "UP", "BND", &v.name, "1")?;
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}
