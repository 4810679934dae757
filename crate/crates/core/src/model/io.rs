//! CSV files for boxes, cartons and the carton/box relation.

use std::io::{BufRead, Write};

use super::{check_box_order, BoxFormat, Carton, Dim3, RelTable};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Yields `(line_number, fields)` for every data row after checking the header.
fn rows<R: BufRead>(source: R, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    let mut lines = source.lines().enumerate();
    match lines.next() {
        Some((_, line)) => {
            let line = line?;
            if line.trim() != header {
                return Err(parse_err(1, format!("expected header {header:?}, got {line:?}")));
            }
        }
        None => return Err(parse_err(1, "empty file")),
    }
    let width = header.split(',').count();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(parse_err(
                idx + 1,
                format!("expected {width} fields, got {}", fields.len()),
            ));
        }
        out.push((idx + 1, fields));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("bad number {field:?}")))
}

pub fn write_boxes<W: Write>(boxes: &[BoxFormat], mut sink: W) -> Result<()> {
    writeln!(sink, "id,l,w,h")?;
    for b in boxes {
        writeln!(sink, "{},{},{},{}", b.id, b.dims.l, b.dims.w, b.dims.h)?;
    }
    Ok(())
}

pub fn read_boxes<R: BufRead>(source: R) -> Result<Vec<BoxFormat>> {
    let mut boxes = Vec::new();
    for (line, f) in rows(source, "id,l,w,h")? {
        let dims = Dim3::new(num(line, &f[1])?, num(line, &f[2])?, num(line, &f[3])?)
            .map_err(|e| parse_err(line, e.to_string()))?;
        boxes.push(BoxFormat {
            id: num(line, &f[0])?,
            dims,
            volume: dims.volume(),
        });
    }
    check_box_order(&boxes)?;
    Ok(boxes)
}

pub fn write_cartons<W: Write>(cartons: &[Carton], mut sink: W) -> Result<()> {
    writeln!(sink, "id,l,w,heights")?;
    for c in cartons {
        let heights: Vec<String> = c.crease_heights.iter().map(u32::to_string).collect();
        writeln!(sink, "{},{},{},{}", c.id, c.dims.l, c.dims.w, heights.join(";"))?;
    }
    Ok(())
}

pub fn read_cartons<R: BufRead>(source: R) -> Result<Vec<Carton>> {
    let mut cartons = Vec::new();
    for (line, f) in rows(source, "id,l,w,heights")? {
        let id: usize = num(line, &f[0])?;
        if id != cartons.len() {
            return Err(parse_err(line, format!("carton ids must be dense, got {id}")));
        }
        let mut heights = f[3]
            .split(';')
            .map(|h| num::<u32>(line, h.trim()))
            .collect::<Result<Vec<_>>>()?;
        heights.sort_unstable();
        heights.dedup();
        let top = *heights.last().ok_or_else(|| parse_err(line, "no heights"))?;
        let dims = Dim3::new(num(line, &f[1])?, num(line, &f[2])?, top)
            .map_err(|e| parse_err(line, e.to_string()))?;
        cartons.push(Carton {
            id,
            dims,
            crease_heights: heights,
        });
    }
    Ok(cartons)
}

pub fn write_rel<W: Write>(rel: &RelTable, mut sink: W) -> Result<()> {
    writeln!(sink, "carton_id,box_id")?;
    for &(k, b) in rel.pairs() {
        writeln!(sink, "{k},{b}")?;
    }
    Ok(())
}

pub fn read_rel<R: BufRead>(source: R, cartons: usize, boxes: usize) -> Result<RelTable> {
    let mut pairs = Vec::new();
    for (line, f) in rows(source, "carton_id,box_id")? {
        pairs.push((num(line, &f[0])?, num(line, &f[1])?));
    }
    RelTable::new(pairs, cartons, boxes)
}
