use std::io::{Read, Write};

use serde::Deserialize;

use super::field::Field;
use super::grid::Grid;

/// One line of the field CSV layout `idx,i,j,x1,x2,tag,value`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FieldRecord {
    pub idx: usize,
    pub i: usize,
    pub j: usize,
    pub x1: f64,
    pub x2: f64,
    pub tag: String,
    pub value: f64,
}

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a field with 17 significant digits per float.
pub fn write_field_csv<W: Write>(out: W, grid: &Grid, field: &Field) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["idx", "i", "j", "x1", "x2", "tag", "value"])?;
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        let [x1, x2] = grid.point(k);
        w.write_record([
            k.to_string(),
            i.to_string(),
            j.to_string(),
            sig17(x1),
            sig17(x2),
            grid.tag(k).as_str().to_string(),
            sig17(field[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv<R: Read>(input: R) -> csv::Result<Vec<FieldRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
