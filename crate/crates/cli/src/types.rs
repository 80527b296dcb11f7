//! The `types` subcommand: report each variable's inferred domain type,
//! its comparison value set, and the histogram over exclusive classes.

use std::fs;
use std::path::Path;

use domcheck_core::cfa::{Cfa, VarId};
use domcheck_core::domtype::{infer, DomainTyping};
use domcheck_core::frontend::compile;
use serde::Serialize;

use crate::{CliError, TypesFormat};

/// At most this many value-set members are listed; the size column
/// always carries the true count.
const VALUES_SHOWN: usize = 16;

struct Row {
    variable: String,
    dom_type: String,
    valueset_size: usize,
    values: Vec<i32>,
    witness_line: Option<u32>,
}

pub fn run(file: &Path, format: TypesFormat) -> Result<i32, CliError> {
    let src = fs::read_to_string(file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
    let cfa = compile(&src)
        .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
    let typing = infer(&cfa);

    let rows = collect_rows(&cfa, &typing);
    let histogram = typing.histogram();
    match format {
        TypesFormat::Table => print_table(&rows, histogram),
        TypesFormat::Csv => print_csv(&rows)?,
        TypesFormat::Json => print_json(&rows, histogram)?,
    }
    Ok(0)
}

fn collect_rows(cfa: &Cfa, typing: &DomainTyping) -> Vec<Row> {
    (0..cfa.num_vars() as u32)
        .map(|i| {
            let v = VarId(i);
            let values = typing.value_set(v).unwrap_or(&[]);
            Row {
                variable: cfa.var_name(v).to_string(),
                dom_type: typing.type_of(v).to_string(),
                valueset_size: values.len(),
                values: values.iter().copied().take(VALUES_SHOWN).collect(),
                witness_line: typing.witness_edge(v).map(|e| cfa.edges[e].line),
            }
        })
        .collect()
}

fn print_table(rows: &[Row], histogram: [usize; 4]) {
    let mut name_w = "variable".len();
    let mut type_w = "type".len();
    let mut values_w = "values".len();
    for r in rows {
        name_w = name_w.max(r.variable.len());
        type_w = type_w.max(r.dom_type.len());
        values_w = values_w.max(value_set_text(r).len());
    }
    println!(
        "{:name_w$}  {:type_w$}  {:values_w$}  witness",
        "variable", "type", "values"
    );
    for r in rows {
        let witness = r
            .witness_line
            .map(|l| format!("line {l}"))
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{:name_w$}  {:type_w$}  {:values_w$}  {witness}",
            r.variable,
            r.dom_type,
            value_set_text(r),
        );
    }
    println!(
        "histogram: bool={} inteq={} inteqadd={} int={}",
        histogram[0], histogram[1], histogram[2], histogram[3]
    );
}

/// `{989, 1042}` style rendering, eliding everything past the shown
/// prefix.
fn value_set_text(r: &Row) -> String {
    if r.valueset_size == 0 {
        return "-".to_string();
    }
    let shown: Vec<String> = r.values.iter().map(i32::to_string).collect();
    let suffix = if r.valueset_size > r.values.len() {
        format!(", +{} more", r.valueset_size - r.values.len())
    } else {
        String::new()
    };
    format!("{{{}{suffix}}}", shown.join(", "))
}

fn print_csv(rows: &[Row]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(std::io::stdout());
    let err = |e: csv::Error| CliError::Input(format!("cannot write CSV: {e}"));
    w.write_record(["variable", "type", "valueset_size", "values", "witness_line"])
        .map_err(err)?;
    for r in rows {
        let values: Vec<String> = r.values.iter().map(i32::to_string).collect();
        let witness = r.witness_line.map(|l| l.to_string()).unwrap_or_default();
        w.write_record([
            r.variable.as_str(),
            r.dom_type.as_str(),
            &r.valueset_size.to_string(),
            &values.join(";"),
            &witness,
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| CliError::Input(format!("cannot write CSV: {e}")))?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRow<'a> {
    variable: &'a str,
    #[serde(rename = "type")]
    dom_type: &'a str,
    valueset_size: usize,
    values: &'a [i32],
    witness_line: Option<u32>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    variables: Vec<JsonRow<'a>>,
    histogram: Histogram,
}

#[derive(Serialize)]
struct Histogram {
    bool: usize,
    inteq: usize,
    inteqadd: usize,
    int: usize,
}

fn print_json(rows: &[Row], histogram: [usize; 4]) -> Result<(), CliError> {
    let report = JsonReport {
        variables: rows
            .iter()
            .map(|r| JsonRow {
                variable: &r.variable,
                dom_type: &r.dom_type,
                valueset_size: r.valueset_size,
                values: &r.values,
                witness_line: r.witness_line,
            })
            .collect(),
        histogram: Histogram {
            bool: histogram[0],
            inteq: histogram[1],
            inteqadd: histogram[2],
            int: histogram[3],
        },
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Input(format!("cannot encode report: {e}")))?;
    println!("{text}");
    Ok(())
}
