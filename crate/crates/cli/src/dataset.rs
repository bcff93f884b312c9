//! Datasets: ordered metadata plus a row-major grid of named columns, written
//! as CSV (`#key=value` header lines) or as one JSON object.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let plain = format!("{x}");
    let sci = format!("{x:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn parse_f64(s: &str) -> Result<f64, DatasetError> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| DatasetError::Malformed(format!("bad number `{s}`"))),
    }
}

/// Git-style content hash: SHA-256 of `blob {len}\0{text}`, lowercase hex.
pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub units: String,
    pub data: Vec<f64>,
}

impl Column {
    pub fn new(name: &str, units: &str, data: Vec<f64>) -> Self {
        Self { name: name.into(), units: units.into(), data }
    }

    fn header(&self) -> String {
        if self.units.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{}]", self.name, self.units)
        }
    }

    fn from_header(h: &str) -> Self {
        match h.strip_suffix(']').and_then(|s| s.split_once('[')) {
            Some((n, u)) => Self::new(n, u, Vec::new()),
            None => Self::new(h, "", Vec::new()),
        }
    }
}

/// `values` columns hold one entry per point of the axes' Cartesian product,
/// last axis fastest.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    pub meta: Vec<(String, String)>,
    pub axes: Vec<Column>,
    pub values: Vec<Column>,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c == '\\' {
            match it.next() {
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(o) => out.push(o),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

impl Dataset {
    pub fn push_meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.into(), value.into()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn points(&self) -> usize {
        self.axes.iter().map(|a| a.data.len()).product()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.axes.is_empty() {
            return Err(DatasetError::Malformed("dataset needs at least one axis".into()));
        }
        let n = self.points();
        for c in &self.values {
            if c.data.len() != n {
                return Err(DatasetError::Malformed(format!(
                    "column `{}` has {} entries, the axes span {n} points",
                    c.name,
                    c.data.len()
                )));
            }
        }
        for (k, _) in &self.meta {
            if k.is_empty() || k.contains('=') || k.contains('\n') {
                return Err(DatasetError::Malformed(format!("bad metadata key `{k}`")));
            }
        }
        Ok(())
    }

    /// Axis indices of flat point `p`.
    fn index(&self, mut p: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.data.len();
            idx[a] = p % n;
            p /= n;
        }
        idx
    }

    pub fn to_csv(&self) -> Result<String, DatasetError> {
        self.validate()?;
        let mut s = format!("#axes={}\n", self.axes.len());
        for (k, v) in &self.meta {
            s.push_str(&format!("#{k}={}\n", escape(v)));
        }
        let header: Vec<String> = self.axes.iter().chain(&self.values).map(Column::header).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for p in 0..self.points() {
            let idx = self.index(p);
            let mut row: Vec<String> = self.axes.iter().zip(&idx).map(|(a, &i)| fmt_f64(a.data[i])).collect();
            row.extend(self.values.iter().map(|c| fmt_f64(c.data[p])));
            s.push_str(&row.join(","));
            s.push('\n');
        }
        Ok(s)
    }

    pub fn from_csv(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines();
        let mut meta = Vec::new();
        let mut n_axes = None;
        let header = loop {
            let line = lines.next().ok_or_else(|| DatasetError::Malformed("missing header row".into()))?;
            let Some(m) = line.strip_prefix('#') else { break line };
            let (k, v) =
                m.split_once('=').ok_or_else(|| DatasetError::Malformed(format!("bad metadata line `{line}`")))?;
            if k == "axes" && n_axes.is_none() {
                n_axes = Some(v.parse::<usize>().map_err(|_| DatasetError::Malformed("bad axes count".into()))?);
            } else {
                meta.push((k.to_string(), unescape(v)));
            }
        };
        let n_axes = n_axes.ok_or_else(|| DatasetError::Malformed("missing #axes line".into()))?;
        let mut cols: Vec<Column> = header.split(',').map(Column::from_header).collect();
        if n_axes == 0 || n_axes > cols.len() {
            return Err(DatasetError::Malformed("axis count does not match the header".into()));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let row = line.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?;
            if row.len() != cols.len() {
                return Err(DatasetError::Malformed(format!("row `{line}` has {} fields", row.len())));
            }
            rows.push(row);
        }
        // row-major: axis a holds for `step` rows, `step` = product of later lengths
        let mut period = rows.len();
        for a in 0..n_axes {
            let col: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            let mut step = period;
            for (i, w) in col[..period].windows(2).enumerate() {
                if w[0].to_bits() != w[1].to_bits() {
                    step = i + 1;
                    break;
                }
            }
            let len = period / step.max(1);
            cols[a].data = (0..len).map(|k| col[k * step]).collect();
            period = step;
        }
        for (j, c) in cols.iter_mut().enumerate().skip(n_axes) {
            c.data = rows.iter().map(|r| r[j]).collect();
        }
        let values = cols.split_off(n_axes);
        let ds = Dataset { meta, axes: cols, values };
        if ds.points() != rows.len() {
            return Err(DatasetError::Malformed("rows do not form a full grid over the axes".into()));
        }
        for (p, row) in rows.iter().enumerate() {
            for (a, &i) in ds.index(p).iter().enumerate() {
                if row[a].to_bits() != ds.axes[a].data[i].to_bits() {
                    return Err(DatasetError::Malformed(format!("row {} breaks the axis ordering", p + 1)));
                }
            }
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn to_json(&self) -> Result<String, DatasetError> {
        self.validate()?;
        let num = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
        let col = |c: &Column, key: &str| {
            let mut m = Map::new();
            m.insert("name".into(), json!(c.name));
            m.insert("units".into(), json!(c.units));
            m.insert(key.into(), Value::Array(c.data.iter().map(|&x| num(x)).collect()));
            Value::Object(m)
        };
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), json!(v));
        }
        let mut root = Map::new();
        root.insert("meta".into(), Value::Object(meta));
        root.insert("axes".into(), Value::Array(self.axes.iter().map(|c| col(c, "values")).collect()));
        root.insert("values".into(), Value::Array(self.values.iter().map(|c| col(c, "data")).collect()));
        let mut s =
            serde_json::to_string_pretty(&Value::Object(root)).map_err(|e| DatasetError::Malformed(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Non-finite numbers are written as `null` and read back as NaN.
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let bad = |m: &str| DatasetError::Malformed(m.into());
        let v: Value = serde_json::from_str(text).map_err(|e| DatasetError::Malformed(e.to_string()))?;
        let meta = v["meta"]
            .as_object()
            .ok_or_else(|| bad("missing meta object"))?
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.as_str().ok_or_else(|| bad("meta values must be strings"))?.to_string())))
            .collect::<Result<Vec<_>, DatasetError>>()?;
        let cols = |key: &str, data: &str| -> Result<Vec<Column>, DatasetError> {
            v[key]
                .as_array()
                .ok_or_else(|| bad("missing column array"))?
                .iter()
                .map(|c| {
                    let nums = c[data]
                        .as_array()
                        .ok_or_else(|| bad("missing column data"))?
                        .iter()
                        .map(|x| {
                            if x.is_null() {
                                Ok(f64::NAN)
                            } else {
                                x.as_f64().ok_or_else(|| bad("non-numeric entry"))
                            }
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Column::new(
                        c["name"].as_str().ok_or_else(|| bad("column name"))?,
                        c["units"].as_str().unwrap_or(""),
                        nums,
                    ))
                })
                .collect()
        };
        let ds = Dataset { meta, axes: cols("axes", "values")?, values: cols("values", "data")? };
        ds.validate()?;
        Ok(ds)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so a failed run leaves no partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Dataset {
        let mut d = Dataset::default();
        d.push_meta("tool", "ccd-sim");
        d.push_meta("note", "two\nlines \\ here");
        d.axes.push(Column::new("detuning", "Hz", vec![-1e6, 1e6]));
        d.axes.push(Column::new("duration", "s", vec![0.0, 1.5e-7]));
        d.values.push(Column::new("p_up", "", vec![0.0, 0.25, 0.1, f64::NAN]));
        d
    }

    #[test]
    fn two_by_two_grid_rows() {
        let csv = grid().to_csv().unwrap();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "detuning[Hz],duration[s],p_up");
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[2], "-1e6,1.5e-7,0.25");
        assert_eq!(rows[4], "1e6,1.5e-7,NaN");
    }

    #[test]
    fn csv_and_json_reload() {
        let d = grid();
        let back = Dataset::from_csv(&d.to_csv().unwrap()).unwrap();
        assert_eq!(back.meta, d.meta);
        assert_eq!(back.axes, d.axes);
        assert_eq!(back.values[0].data[..3], d.values[0].data[..3]);
        assert!(back.values[0].data[3].is_nan());
        let j = Dataset::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(j.meta, d.meta);
        assert_eq!(j.axes, d.axes);
        assert_eq!(d.to_json().unwrap(), j.to_json().unwrap());
    }

    #[test]
    fn shortest_round_trip_numbers() {
        for x in [0.1, 1.0 / 3.0, 3.6e6, 2.0 * std::f64::consts::PI * 3.6e6, 1e-300, -0.0, 5e-324] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(3.6e6), "3.6e6");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn hash_is_git_blob_style() {
        // `printf 'hello\n' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(content_hash("hello\n"), "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4");
    }

    #[test]
    fn mismatched_columns_rejected() {
        let mut d = grid();
        d.values[0].data.pop();
        assert!(d.to_csv().is_err());
        assert!(Dataset::from_csv("#axes=1\nx,y\n1,2\n1,3\n").is_err());
    }
}
