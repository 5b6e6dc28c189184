//! On-disk formats: instance CSVs, truth and anomaly files, manifests.
//!
//! A dataset directory holds `instances/<id>.csv`, `truth.csv`,
//! `manifest.txt` and, for generated data, `anomalies.csv`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::datamodel::{AttributeSchema, LeafTable, LeafTableBuilder, MeasureKind};
use crate::error::{Error, Result};
use crate::synthgen::GroundTruth;

pub const INSTANCE_DIR: &str = "instances";
pub const TRUTH_FILE: &str = "truth.csv";
pub const ANOMALIES_FILE: &str = "anomalies.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

const FUNDAMENTAL_COLUMNS: [&str; 2] = ["real", "predict"];
const DERIVED_COLUMNS: [&str; 4] = ["real_num", "predict_num", "real_denom", "predict_denom"];

fn parse_error(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(path, line, e.to_string())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Measure kind implied by a header, and the number of attribute columns.
fn classify_header(header: &[&str]) -> Option<(MeasureKind, usize)> {
    let n = header.len();
    if n > DERIVED_COLUMNS.len() && header[n - 4..] == DERIVED_COLUMNS {
        Some((MeasureKind::Derived, n - 4))
    } else if n > FUNDAMENTAL_COLUMNS.len() && header[n - 2..] == FUNDAMENTAL_COLUMNS {
        Some((MeasureKind::Fundamental, n - 2))
    } else {
        None
    }
}

pub fn read_instance(path: &Path, kind: Option<MeasureKind>) -> Result<LeafTable> {
    parse_instance(open(path)?, &path.display().to_string(), kind)
}

/// Parses an instance CSV. The measure kind follows the header unless
/// `kind` forces one.
pub fn parse_instance<R: Read>(
    reader: R,
    source: &str,
    kind: Option<MeasureKind>,
) -> Result<LeafTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let (found, dim) = classify_header(&cols).ok_or_else(|| {
        parse_error(
            source,
            1,
            format!(
                "header must end with `{}` or `{}` after at least one attribute column",
                FUNDAMENTAL_COLUMNS.join(","),
                DERIVED_COLUMNS.join(",")
            ),
        )
    })?;
    if let Some(k) = kind {
        if k != found {
            return Err(parse_error(
                source,
                1,
                format!("expected a {k:?} measure header, found {found:?}").to_lowercase(),
            ));
        }
    }
    let names: Vec<String> = cols[..dim].iter().map(|s| s.to_string()).collect();
    let mut seen_names = names.clone();
    seen_names.sort();
    if let Some(w) = seen_names.windows(2).find(|w| w[0] == w[1]) {
        return Err(parse_error(source, 1, format!("duplicate attribute column `{}`", w[0])));
    }

    let mut builder = LeafTableBuilder::new(names, found);
    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut record = csv::StringRecord::new();
    let mut values = [0.0f64; 4];
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(source, e)),
        }
        let line = record.position().map_or(0, |p| p.line());
        let measures = &record.iter().collect::<Vec<_>>()[dim..];
        for (slot, text) in values.iter_mut().zip(measures) {
            let x: f64 = text
                .parse()
                .map_err(|_| parse_error(source, line, format!("invalid number `{text}`")))?;
            if !(x.is_finite() && x >= 0.0) {
                return Err(parse_error(
                    source,
                    line,
                    format!("measure values must be finite and non-negative, got `{text}`"),
                ));
            }
            *slot = x;
        }
        let attrs: Vec<&str> = record.iter().take(dim).collect();
        if attrs.iter().any(|a| a.is_empty()) {
            return Err(parse_error(source, line, "empty attribute value"));
        }
        let key = attrs.join("\u{1f}");
        if let Some(first) = seen.insert(key, line) {
            return Err(parse_error(
                source,
                line,
                format!("duplicate leaf, first seen on line {first}"),
            ));
        }
        let pushed = match found {
            MeasureKind::Fundamental => builder.push_fundamental(&attrs, values[0], values[1]),
            MeasureKind::Derived => {
                builder.push_derived(&attrs, values[0], values[1], values[2], values[3])
            }
        };
        pushed.map_err(|e| parse_error(source, line, e.to_string()))?;
    }
    if seen.is_empty() {
        return Err(parse_error(source, 2, "no data rows"));
    }
    builder
        .build()
        .map_err(|e| parse_error(source, 0, e.to_string()))
}

pub fn write_instance(path: &Path, table: &LeafTable) -> Result<()> {
    let mut w = create(path)?;
    write_instance_to(&mut w, table).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_instance_to<W: Write>(w: W, table: &LeafTable) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let schema = table.schema();
    let mut header: Vec<&str> = schema.names().iter().map(String::as_str).collect();
    match table.derived_columns() {
        None => header.extend(FUNDAMENTAL_COLUMNS),
        Some(_) => header.extend(DERIVED_COLUMNS),
    }
    wtr.write_record(&header)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..table.len() {
        fields.clear();
        for (a, &id) in table.row(i).iter().enumerate() {
            fields.push(schema.dictionary(a).value(id).unwrap_or_default().to_owned());
        }
        match table.derived_columns() {
            None => {
                fields.push(table.actual(i).to_string());
                fields.push(table.forecast(i).to_string());
            }
            Some(dc) => {
                for col in [&dc.actual_num, &dc.forecast_num, &dc.actual_den, &dc.forecast_den] {
                    fields.push(col[i].to_string());
                }
            }
        }
        wtr.write_record(&fields)?;
    }
    wtr.flush()
}

/// Rewrites `text` as `attr=value&...` in the order of `names`.
pub fn canonical_element(text: &str, names: &[String]) -> Result<String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(String::new());
    }
    let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
    for pair in text.split('&') {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::MalformedElement(text.to_owned()))?;
        let (name, value) = (name.trim(), value.trim());
        let idx = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_owned()))?;
        if pairs.iter().any(|p| p.0 == idx) {
            return Err(Error::DuplicateAttribute(name.to_owned()));
        }
        pairs.push((idx, name, value));
    }
    pairs.sort_by_key(|p| p.0);
    let parts: Vec<String> = pairs.iter().map(|(_, n, v)| format!("{n}={v}")).collect();
    Ok(parts.join("&"))
}

/// Instance id → element texts, as written.
pub fn read_truth(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let source = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let header = rdr.headers().map_err(|e| csv_error(&source, e))?;
    if header.iter().collect::<Vec<_>>() != ["instance_id", "set"] {
        return Err(parse_error(&source, 1, "header must be `instance_id,set`"));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(&source, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].to_owned();
        let set: Vec<String> = rec[1]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect();
        if out.insert(id.clone(), set).is_some() {
            return Err(parse_error(&source, line, format!("duplicate instance `{id}`")));
        }
    }
    Ok(out)
}

pub fn write_truth(path: &Path, sets: &BTreeMap<String, Vec<String>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| Error::io(path, e.into());
    wtr.write_record(["instance_id", "set"]).map_err(io)?;
    for (id, set) in sets {
        wtr.write_record([id.as_str(), &set.join(";")]).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// One row per injected anomaly.
pub fn write_anomalies(path: &Path, truth: &GroundTruth, schema: &AttributeSchema) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| Error::io(path, e.into());
    wtr.write_record(["instance_id", "anomaly", "elements", "severity", "deviation", "side"])
        .map_err(io)?;
    for inst in &truth.instances {
        let side = match inst.side {
            crate::synthgen::Side::Actual => "actual",
            crate::synthgen::Side::Forecast => "forecast",
        };
        for (k, a) in inst.anomalies.iter().enumerate() {
            let elements: Vec<String> = a.elements.iter().map(|e| e.format(schema)).collect();
            wtr.write_record([
                inst.id.as_str(),
                &k.to_string(),
                &elements.join(";"),
                &a.severity.to_string(),
                &a.deviation.to_string(),
                side,
            ])
            .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    let source = path.display().to_string();
    let mut out = BTreeMap::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_error(&source, n as u64 + 1, "expected `key=value`"))?;
        if out.insert(k.trim().to_owned(), v.trim().to_owned()).is_some() {
            return Err(parse_error(&source, n as u64 + 1, format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, kv: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    for (k, v) in kv {
        writeln!(w, "{k}={v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(id, path)` of every `*.csv` under `<dir>/instances`, sorted by id.
pub fn list_instances(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let inst_dir = dir.join(INSTANCE_DIR);
    let entries = std::fs::read_dir(&inst_dir).map_err(|e| Error::io(&inst_dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&inst_dir, e))?.path();
        if path.extension().is_some_and(|x| x == "csv") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_owned(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}
