//! Instance and fractional-assignment files.
//!
//! One JSON document per instance, format version "tafm-1". Every number
//! travels as a string "p/q" or an integer literal, so exact values survive
//! serialization; floats are rejected. Edges are 1-based (job, machine)
//! pairs. Emission is canonical: fixed field order, edges in row-major
//! order, so equal inputs produce byte-identical files.

use serde::Serialize;
use serde_json::Value;

use crate::assignment::FractionalAssignment;
use crate::error::{Error, Result};
use crate::instance::{EdgeSet, Instance, Variant};
use crate::rational::{format_rational, parse_rational, Rational};

pub const FORMAT_VERSION: &str = "tafm-1";

#[derive(Serialize)]
struct InstanceFile {
    format_version: &'static str,
    variant: &'static str,
    n: usize,
    m: usize,
    values: Vec<Vec<String>>,
    sizes: Vec<Vec<String>>,
    capacities: Vec<String>,
    edges: Vec<[usize; 2]>,
}

fn matrix_strings(mat: &[Vec<Rational>]) -> Vec<Vec<String>> {
    mat.iter()
        .map(|row| row.iter().map(format_rational).collect())
        .collect()
}

pub fn emit_instance(inst: &Instance, edges: &EdgeSet) -> String {
    let file = InstanceFile {
        format_version: FORMAT_VERSION,
        variant: inst.variant.name(),
        n: inst.n,
        m: inst.m,
        values: matrix_strings(&inst.values),
        sizes: matrix_strings(&inst.sizes),
        capacities: inst.capacities.iter().map(format_rational).collect(),
        edges: edges.iter().map(|(i, j)| [i + 1, j + 1]).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("serialization cannot fail");
    text.push('\n');
    text
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn field<'a>(doc: &'a Value, name: &str) -> Result<&'a Value> {
    doc.get(name).ok_or_else(|| bad(format!("missing field {name:?}")))
}

fn as_dimension(v: &Value, name: &str) -> Result<usize> {
    let k = v
        .as_u64()
        .ok_or_else(|| bad(format!("{name} must be a positive integer")))?;
    if k == 0 || k > 10_000 {
        return Err(bad(format!("{name} out of range: {k}")));
    }
    Ok(k as usize)
}

/// A number in a file: either a string "p/q" / "p", or an integer literal.
/// Floats are refused outright.
fn as_rational(v: &Value, what: &str) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|_| bad(format!("{what}: bad number {s:?}"))),
        Value::Number(num) => {
            if let Some(k) = num.as_i64() {
                Ok(Rational::from_integer(k.into()))
            } else {
                Err(bad(format!(
                    "{what}: {num} is not an integer; write fractions as \"p/q\" strings"
                )))
            }
        }
        other => Err(bad(format!("{what}: expected a number, got {other}"))),
    }
}

fn as_matrix(v: &Value, n: usize, m: usize, what: &str) -> Result<Vec<Vec<Rational>>> {
    let rows = v
        .as_array()
        .ok_or_else(|| bad(format!("{what} must be an array of {n} rows")))?;
    if rows.len() != n {
        return Err(bad(format!("{what} has {} rows, expected {n}", rows.len())));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let cells = row
                .as_array()
                .ok_or_else(|| bad(format!("{what} row {} must be an array", i + 1)))?;
            if cells.len() != m {
                return Err(bad(format!(
                    "{what} row {} has {} entries, expected {m}",
                    i + 1,
                    cells.len()
                )));
            }
            cells
                .iter()
                .map(|cell| as_rational(cell, what))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn check_version(doc: &Value) -> Result<()> {
    let version = field(doc, "format_version")?
        .as_str()
        .ok_or_else(|| bad("format_version must be a string"))?;
    if version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format_version {version:?}, expected {FORMAT_VERSION:?}"
        )));
    }
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<(Instance, EdgeSet)> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| bad(format!("not valid JSON: {e}")))?;
    check_version(&doc)?;
    let variant = Variant::from_name(
        field(&doc, "variant")?
            .as_str()
            .ok_or_else(|| bad("variant must be a string"))?,
    )?;
    let n = as_dimension(field(&doc, "n")?, "n")?;
    let m = as_dimension(field(&doc, "m")?, "m")?;
    let values = as_matrix(field(&doc, "values")?, n, m, "values")?;
    let sizes = as_matrix(field(&doc, "sizes")?, n, m, "sizes")?;
    let caps_field = field(&doc, "capacities")?
        .as_array()
        .ok_or_else(|| bad("capacities must be an array"))?;
    if caps_field.len() != m {
        return Err(bad(format!(
            "capacities has {} entries, expected {m}",
            caps_field.len()
        )));
    }
    let capacities = caps_field
        .iter()
        .map(|c| as_rational(c, "capacities"))
        .collect::<Result<Vec<_>>>()?;

    let mut edge_set = EdgeSet::new();
    for (k, pair) in field(&doc, "edges")?
        .as_array()
        .ok_or_else(|| bad("edges must be an array of [job, machine] pairs"))?
        .iter()
        .enumerate()
    {
        let coords = pair
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| bad(format!("edge {}: expected [job, machine]", k + 1)))?;
        let i = coords[0]
            .as_u64()
            .ok_or_else(|| bad(format!("edge {}: job must be an integer", k + 1)))?;
        let j = coords[1]
            .as_u64()
            .ok_or_else(|| bad(format!("edge {}: machine must be an integer", k + 1)))?;
        if i < 1 || i as usize > n || j < 1 || j as usize > m {
            return Err(bad(format!(
                "edge {}: ({i}, {j}) outside the {n}x{m} grid (1-based)",
                k + 1
            )));
        }
        edge_set.insert(i as usize - 1, j as usize - 1);
    }

    let inst = Instance::new(values, sizes, capacities, variant);
    inst.check_structure(variant).map_err(Error::InvalidInstance)?;
    Ok((inst, edge_set))
}

#[derive(Serialize)]
struct FractionalFile {
    format_version: &'static str,
    n: usize,
    m: usize,
    x: Vec<Vec<String>>,
}

pub fn emit_fractional(x: &FractionalAssignment) -> String {
    let mat: Vec<Vec<Rational>> = (0..x.n)
        .map(|i| (0..x.m).map(|j| x.get(i, j).clone()).collect())
        .collect();
    let file = FractionalFile {
        format_version: FORMAT_VERSION,
        n: x.n,
        m: x.m,
        x: matrix_strings(&mat),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("serialization cannot fail");
    text.push('\n');
    text
}

pub fn parse_fractional(text: &str) -> Result<FractionalAssignment> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| bad(format!("not valid JSON: {e}")))?;
    check_version(&doc)?;
    let n = as_dimension(field(&doc, "n")?, "n")?;
    let m = as_dimension(field(&doc, "m")?, "m")?;
    let mat = as_matrix(field(&doc, "x")?, n, m, "x")?;
    Ok(FractionalAssignment::from_matrix(mat))
}
