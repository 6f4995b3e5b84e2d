//! Command reports and their CSV / JSON-lines rendering.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliResult;

/// What a command produced. `records` go to the output sink; `summary` is
/// a single JSON object for the log stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub records: Vec<Value>,
    pub summary: Value,
    pub pass: bool,
    /// Verbatim output that replaces the records (used by gen-degrees).
    pub raw: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, records: Vec<Value>, summary: Value, pass: bool) -> Self {
        Self { command, records, summary, pass, raw: None }
    }

    pub fn render(&self, format: Format) -> CliResult<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(format, &mut buf)?;
        Ok(buf)
    }

    pub fn write_to<W: Write>(&self, format: Format, out: W) -> CliResult<()> {
        if let Some(raw) = &self.raw {
            let mut out = out;
            out.write_all(raw.as_bytes())?;
            return Ok(());
        }
        match format {
            Format::Jsonl => write_jsonl(&self.records, out),
            Format::Csv => write_csv(&self.records, out),
        }
    }

    pub fn summary_line(&self) -> String {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command));
        m.insert("pass".into(), Value::from(self.pass));
        m.insert("summary".into(), self.summary.clone());
        Value::Object(m).to_string()
    }
}

fn write_jsonl<W: Write>(records: &[Value], mut out: W) -> CliResult<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Flattens nested objects to `a.b` keys and arrays to `a_0, a_1, …`.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn go(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    go(&key, v, out);
                }
            }
            Value::Array(a) => {
                for (i, v) in a.iter().enumerate() {
                    go(&format!("{prefix}_{i}"), v, out);
                }
            }
            Value::Null => out.push((prefix.to_string(), String::new())),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    go("", value, &mut out);
    out
}

fn write_csv<W: Write>(records: &[Value], out: W) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header: Option<Vec<String>> = None;
    for r in records {
        let flat = flatten(r);
        let keys: Vec<String> = flat.iter().map(|(k, _)| k.clone()).collect();
        if header.as_ref() != Some(&keys) {
            w.write_record(&keys)?;
            header = Some(keys);
        }
        w.write_record(flat.iter().map(|(_, v)| v))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flattening() {
        let v = json!({"t": 3, "d": 0.5, "xs": [1, 2], "s": {"a": null, "b": "x"}});
        let f = flatten(&v);
        let keys: Vec<&str> = f.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["t", "d", "xs_0", "xs_1", "s.a", "s.b"]);
        assert_eq!(f[1].1, "0.5");
        assert_eq!(f[4].1, "");
    }

    #[test]
    fn csv_and_jsonl() {
        let r = Report::new("x", vec![json!({"t": 0, "d": 1.0}), json!({"t": 1, "d": 0.25})], json!({}), true);
        assert_eq!(String::from_utf8(r.render(Format::Csv).unwrap()).unwrap(), "t,d\n0,1.0\n1,0.25\n");
        assert_eq!(
            String::from_utf8(r.render(Format::Jsonl).unwrap()).unwrap(),
            "{\"t\":0,\"d\":1.0}\n{\"t\":1,\"d\":0.25}\n"
        );
    }

    #[test]
    fn header_repeats_when_shape_changes() {
        let r = Report::new("x", vec![json!({"a": 1}), json!({"b": 2})], json!({}), true);
        assert_eq!(String::from_utf8(r.render(Format::Csv).unwrap()).unwrap(), "a\n1\nb\n2\n");
    }
}
