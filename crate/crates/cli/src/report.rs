use std::io::Write;

use serde_json::{json, Map, Value};

/// Tabular rows plus a summary, rendered as CSV or JSON.
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report {
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Map::new(),
        }
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn results(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "rows": rows, "summary": self.summary })
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Rows first, then a blank line and `key,value` summary lines.
pub fn write_csv(report: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut *out);
        if !report.rows.is_empty() {
            w.write_record(&report.columns)?;
            for r in &report.rows {
                w.write_record(r.iter().map(cell))?;
            }
        }
        w.flush()?;
    }
    if !report.summary.is_empty() {
        if !report.rows.is_empty() {
            writeln!(out)?;
        }
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut *out);
        w.write_record(["key", "value"])?;
        for (k, v) in &report.summary {
            w.write_record([k.as_str(), &cell(v)])?;
        }
        w.flush()?;
    }
    Ok(())
}
