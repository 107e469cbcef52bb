//! CSV ingestion: one dataset per column, header row names the datasets.
//!
//! The separator is autodetected (',' or ';'; German data sources use
//! ';'), and `--decimal-comma` switches number parsing to ',' decimal
//! points, which implies ';'-separated fields. Columns may have different
//! lengths: empty trailing cells are simply skipped, so a file can carry
//! an 18-year series next to a 14-year one.

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub values: Vec<f64>,
}

pub struct IngestOptions {
    pub decimal_comma: bool,
    /// Keep only these columns (all when empty).
    pub columns: Vec<String>,
}

pub fn parse_csv(text: &str, path: &str, opts: &IngestOptions) -> Result<Vec<Dataset>, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let Some((first_no, first_line)) = lines.next() else {
        return Err(CliError::data(format!("{path}: file is empty")));
    };

    // ',' as decimal mark implies ';'-separated fields
    let sep = if opts.decimal_comma {
        ';'
    } else {
        detect_separator(first_line)
    };

    let first_fields = split_fields(first_line, sep);
    // a header is any first row that does not parse entirely as numbers
    let headerless = first_fields
        .iter()
        .all(|f| parse_number(f, opts.decimal_comma).is_some());

    let names: Vec<String> = if headerless {
        (1..=first_fields.len())
            .map(|i| format!("col{i}"))
            .collect()
    } else {
        first_fields.iter().map(|f| f.trim().to_string()).collect()
    };
    let width = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];

    let data_rows = if headerless {
        vec![(first_no, first_line)]
    } else {
        Vec::new()
    };
    for (line_no, line) in data_rows.into_iter().chain(lines) {
        let fields = split_fields(line, sep);
        if fields.len() > width {
            return Err(CliError::data(format!(
                "{path}: line {line_no} has {} fields, header has {width}",
                fields.len()
            )));
        }
        for (col, field) in fields.iter().enumerate() {
            let trimmed = field.trim();
            if trimmed.is_empty() {
                continue; // ragged column, dataset ends earlier
            }
            match parse_number(trimmed, opts.decimal_comma) {
                Some(v) => columns[col].push(v),
                None => {
                    return Err(CliError::data(format!(
                        "{path}: line {line_no}, column {} ('{}'): cannot parse '{trimmed}' as a number",
                        col + 1,
                        names[col]
                    )))
                }
            }
        }
    }

    let mut datasets: Vec<Dataset> = names
        .into_iter()
        .zip(columns)
        .map(|(name, values)| Dataset { name, values })
        .collect();

    if !opts.columns.is_empty() {
        for wanted in &opts.columns {
            if !datasets.iter().any(|d| &d.name == wanted) {
                let available: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
                return Err(CliError::data(format!(
                    "{path}: no column named '{wanted}' (available: {})",
                    available.join(", ")
                )));
            }
        }
        datasets.retain(|d| opts.columns.contains(&d.name));
    }
    datasets.retain(|d| !d.values.is_empty());
    if datasets.is_empty() {
        return Err(CliError::data(format!("{path}: no data rows found")));
    }
    Ok(datasets)
}

fn detect_separator(line: &str) -> char {
    let semis = line.matches(';').count();
    let commas = line.matches(',').count();
    if semis > 0 && semis >= commas {
        ';'
    } else {
        ','
    }
}

fn split_fields(line: &str, sep: char) -> Vec<&str> {
    line.split(sep).collect()
}

fn parse_number(s: &str, decimal_comma: bool) -> Option<f64> {
    let normalized;
    let s = if decimal_comma {
        normalized = s.replace(',', ".");
        normalized.as_str()
    } else {
        s
    };
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> IngestOptions {
        IngestOptions {
            decimal_comma: false,
            columns: vec![],
        }
    }

    #[test]
    fn parses_headered_columns() {
        let text = "a,b\n1.0,4\n2.0,5\n3.0,\n";
        let ds = parse_csv(text, "t.csv", &opts()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].name, "a");
        assert_eq!(ds[0].values, vec![1.0, 2.0, 3.0]);
        assert_eq!(ds[1].values, vec![4.0, 5.0]); // ragged column
    }

    #[test]
    fn parses_headerless_single_column() {
        let ds = parse_csv("1.5\n2.5\n", "t.csv", &opts()).unwrap();
        assert_eq!(ds[0].name, "col1");
        assert_eq!(ds[0].values, vec![1.5, 2.5]);
    }

    #[test]
    fn semicolon_and_decimal_comma() {
        let o = IngestOptions {
            decimal_comma: true,
            columns: vec![],
        };
        let ds = parse_csv("quote\n0,95\n1,02\n", "t.csv", &o).unwrap();
        assert_eq!(ds[0].values, vec![0.95, 1.02]);

        let ds = parse_csv("a;b\n0,9;1,1\n0,8;1,2\n", "t.csv", &o).unwrap();
        assert_eq!(ds[0].values, vec![0.9, 0.8]);
        assert_eq!(ds[1].values, vec![1.1, 1.2]);
    }

    #[test]
    fn bad_cell_reports_line_and_column() {
        let err = parse_csv("a,b\n1.0,2.0\n1.5,oops\n", "t.csv", &opts()).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("line 3") && msg.contains("'b'") && msg.contains("oops"),
            "{msg}"
        );
    }

    #[test]
    fn column_filter() {
        let o = IngestOptions {
            decimal_comma: false,
            columns: vec!["b".into()],
        };
        let ds = parse_csv("a,b\n1,2\n", "t.csv", &o).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].name, "b");

        let o = IngestOptions {
            decimal_comma: false,
            columns: vec!["missing".into()],
        };
        assert!(parse_csv("a,b\n1,2\n", "t.csv", &o).is_err());
    }
}
