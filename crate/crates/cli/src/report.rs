//! Line-oriented report records, as `key=value` text or JSON lines.

use std::io::{self, Write};

use serde::Serialize;

#[derive(Clone, Debug, Default, Serialize)]
pub struct Record {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algo: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cuts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fair: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchanges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reruns: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rebuilt: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<&'static str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micros: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beads: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owners: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub struct Reporter<W: Write> {
    out: W,
    json: bool,
}

fn quote(v: &str) -> String {
    if !v.is_empty()
        && v.chars()
            .all(|c| c.is_ascii_graphic() && c != '"' && c != '=')
    {
        v.to_string()
    } else {
        format!("{v:?}")
    }
}

impl<W: Write> Reporter<W> {
    pub fn new(out: W, json: bool) -> Self {
        Reporter { out, json }
    }

    pub fn emit<T: Serialize>(&mut self, rec: &T) -> io::Result<()> {
        if self.json {
            serde_json::to_writer(&mut self.out, rec)?;
            return writeln!(self.out);
        }
        // serde's field order doubles as the text order
        let value = serde_json::to_value(rec).map_err(io::Error::other)?;
        let fields = value.as_object().expect("record is an object");
        let mut parts = Vec::with_capacity(fields.len());
        for (key, v) in fields {
            let text = match v {
                serde_json::Value::String(s) => quote(s),
                serde_json::Value::Array(items) => quote(
                    &items
                        .iter()
                        .map(|i| i.as_str().unwrap_or_default())
                        .collect::<Vec<_>>()
                        .join("; "),
                ),
                other => other.to_string(),
            };
            parts.push(format!("{key}={text}"));
        }
        writeln!(self.out, "{}", parts.join(" "))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(rec: &Record, json: bool) -> String {
        let mut buf = Vec::new();
        Reporter::new(&mut buf, json).emit(rec).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn text_form() {
        let rec = Record {
            kind: "step",
            step: Some(2),
            command: Some("SWAP 8".into()),
            cuts: Some(3),
            fair: Some(true),
            ..Default::default()
        };
        assert_eq!(
            render(&rec, false),
            "kind=step step=2 command=\"SWAP 8\" cuts=3 fair=true\n"
        );
    }

    #[test]
    fn json_form() {
        let rec = Record {
            kind: "final",
            owners: Some("1 1 2".into()),
            ..Default::default()
        };
        assert_eq!(
            render(&rec, true),
            "{\"kind\":\"final\",\"owners\":\"1 1 2\"}\n"
        );
    }
}
