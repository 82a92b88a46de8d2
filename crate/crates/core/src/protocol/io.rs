//! Protocol configuration files and channel/state file formats.
//!
//! Channel files start with a header line `CHOI in=<dims> out=<dims>` or
//! `KRAUS in=<dims> out=<dims> count=<k>`, where `<dims>` lists `label:dim` pairs separated by
//! commas, followed by matrices in the text matrix format. Resource state files start with
//! `PURE <d_L> <d_R>` (amplitude column) or `MIXED <d_L> <d_R>` (density matrix).

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::cdqs::CdqsProtocol;
use super::cds::CdsProtocol;
use super::frouting::FRoutingProtocol;
use super::predicate::Predicate;
use crate::channel::{max_entangled_vector, DensityState, QuantumChannel, ResourceState};
use crate::error::{Error, Result};
use crate::tensor::{read_matrix, write_matrix, ComplexVector, SystemDims};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelFormat {
    Choi,
    Kraus,
}

fn dims_spec(d: &SystemDims) -> String {
    d.labels().zip(d.dims()).map(|(l, n)| format!("{l}:{n}")).collect::<Vec<_>>().join(",")
}

fn parse_dims(spec: &str, line: usize, field: &str) -> Result<SystemDims> {
    let perr = |msg: String| Error::Parse { line, field: field.to_string(), msg };
    let mut pairs = Vec::new();
    for part in spec.split(',') {
        let (label, dim) = part.split_once(':').ok_or_else(|| perr(format!("`{part}` is not label:dim")))?;
        let dim: usize = dim.parse().map_err(|e| perr(format!("`{dim}`: {e}")))?;
        pairs.push((label.to_string(), dim));
    }
    SystemDims::new(pairs).map_err(|e| perr(e.to_string()))
}

pub fn write_channel(ch: &QuantumChannel, format: ChannelFormat) -> Result<String> {
    let (i, o) = (dims_spec(ch.in_dims()), dims_spec(ch.out_dims()));
    Ok(match format {
        ChannelFormat::Choi => format!("CHOI in={i} out={o}\n{}", write_matrix(ch.choi()?)),
        ChannelFormat::Kraus => {
            let ops = ch.kraus();
            let mut s = format!("KRAUS in={i} out={o} count={}\n", ops.len());
            for k in ops {
                s.push_str(&write_matrix(k));
            }
            s
        }
    })
}

fn header_fields(line: &str) -> Vec<(&str, &str)> {
    line.split_whitespace().skip(1).filter_map(|t| t.split_once('=')).collect()
}

fn header_value<'a>(fields: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| Error::Parse {
        line: 1,
        field: key.to_string(),
        msg: "missing from header".into(),
    })
}

/// Splits `text` after its first `skip` lines, returning the remainder and its first line number.
fn body_after(text: &str, skip: usize) -> (&str, usize) {
    let mut offset = 0;
    for _ in 0..skip {
        match text[offset..].find('\n') {
            Some(p) => offset += p + 1,
            None => return ("", skip + 1),
        }
    }
    (&text[offset..], skip + 1)
}

/// Parses and validates a channel file.
pub fn read_channel(text: &str) -> Result<QuantumChannel> {
    let header = text.lines().next().unwrap_or("");
    let kind = header.split_whitespace().next().unwrap_or("");
    let fields = header_fields(header);
    let in_dims = parse_dims(header_value(&fields, "in")?, 1, "in")?;
    let out_dims = parse_dims(header_value(&fields, "out")?, 1, "out")?;
    let (body, first) = body_after(text, 1);
    match kind {
        "CHOI" => {
            let m = read_matrix(body, first)?;
            QuantumChannel::from_choi(m, in_dims, out_dims)
        }
        "KRAUS" => {
            let count: usize = header_value(&fields, "count")?.parse().map_err(|e| Error::Parse {
                line: 1,
                field: "count".into(),
                msg: format!("{e}"),
            })?;
            let mut ops = Vec::with_capacity(count);
            let mut rest = body;
            let mut line = first;
            for k in 0..count {
                let shape: Vec<usize> =
                    rest.lines().next().unwrap_or("").split_whitespace().filter_map(|t| t.parse().ok()).collect();
                let &[r, c] = shape.as_slice() else {
                    return Err(Error::Parse {
                        line,
                        field: format!("kraus[{k}].shape"),
                        msg: "expected `rows cols`".into(),
                    });
                };
                let (next, _) = body_after(rest, 1 + r * c);
                let chunk = &rest[..rest.len() - next.len()];
                ops.push(read_matrix(chunk, line)?);
                rest = next;
                line += 1 + r * c;
            }
            QuantumChannel::from_kraus(ops, in_dims, out_dims).map_err(|e| match e {
                Error::Argument(msg) => Error::validation("kraus completeness", msg),
                other => other,
            })
        }
        other => Err(Error::Parse {
            line: 1,
            field: "format".into(),
            msg: format!("expected CHOI or KRAUS, found `{other}`"),
        }),
    }
}

pub fn write_state(res: &ResourceState) -> String {
    match res {
        ResourceState::Pure { amplitudes, d_l, d_r } => {
            let m = crate::tensor::ComplexMatrix::from_column_slice(amplitudes.len(), 1, amplitudes.as_slice());
            format!("PURE {d_l} {d_r}\n{}", write_matrix(&m))
        }
        ResourceState::Mixed { state, d_l, d_r } => format!("MIXED {d_l} {d_r}\n{}", write_matrix(state.matrix())),
    }
}

pub fn read_state(text: &str) -> Result<ResourceState> {
    let header: Vec<&str> = text.lines().next().unwrap_or("").split_whitespace().collect();
    let dim = |k: usize, name: &str| -> Result<usize> {
        header.get(k).and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
            line: 1,
            field: name.into(),
            msg: "expected a dimension".into(),
        })
    };
    let (d_l, d_r) = (dim(1, "d_L")?, dim(2, "d_R")?);
    let (body, first) = body_after(text, 1);
    let m = read_matrix(body, first)?;
    match header.first().copied() {
        Some("PURE") => ResourceState::pure(ComplexVector::from_column_slice(m.as_slice()), d_l, d_r),
        Some("MIXED") => {
            let dims = SystemDims::new([("L", d_l), ("R", d_r)])?;
            ResourceState::mixed(DensityState::new(m, dims)?, d_l, d_r)
        }
        other => Err(Error::Parse {
            line: 1,
            field: "format".into(),
            msg: format!("expected PURE or MIXED, found {other:?}"),
        }),
    }
}

/// Any protocol the configuration format can describe.
#[derive(Clone, Debug)]
pub enum LoadedProtocol {
    Cds(CdsProtocol),
    Cdqs(CdqsProtocol),
    FRouting(FRoutingProtocol),
}

/// Line of the first occurrence of `"key"` in the JSON text, for error messages.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |p| p + 1)
}

struct Fields<'a> {
    text: &'a str,
    obj: &'a serde_json::Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::Parse { line: line_of(self.text, key), field: key.to_string(), msg: msg.into() }
    }

    fn get(&self, key: &str) -> Result<&'a Value> {
        self.obj.get(key).ok_or_else(|| self.err(key, "missing field"))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)?.as_u64().map(|v| v as usize).ok_or_else(|| self.err(key, "expected a non-negative integer"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.obj.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.err(key, "expected a number")),
        }
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        self.get(key)?.as_str().ok_or_else(|| self.err(key, "expected a string"))
    }

    fn str_list(&self, key: &str) -> Result<Vec<&'a str>> {
        let arr = self.get(key)?.as_array().ok_or_else(|| self.err(key, "expected an array"))?;
        arr.iter().map(|v| v.as_str().ok_or_else(|| self.err(key, "expected an array of file names"))).collect()
    }
}

fn predicate_from(f: &Fields, n: usize) -> Result<Predicate> {
    let spec = f.str("predicate")?;
    let res = match spec.strip_prefix("0x") {
        Some(hex) => Predicate::from_hex("table", n, hex),
        None => Predicate::named(spec, n),
    };
    res.map_err(|e| f.err("predicate", e.to_string()))
}

/// Registry name when it reproduces the table, hex otherwise.
fn predicate_spec(p: &Predicate) -> String {
    match Predicate::named(&p.name, p.n) {
        Ok(named) if named.table == p.table => p.name.clone(),
        _ => format!("0x{}", p.to_hex()),
    }
}

fn resource_from(f: &Fields, dir: &Path) -> Result<ResourceState> {
    let spec = match f.obj.get("resource") {
        None => "none",
        Some(_) => f.str("resource")?,
    };
    match spec {
        "none" => Ok(ResourceState::none()),
        "epr" => ResourceState::pure(max_entangled_vector(2), 2, 2),
        path => {
            let text = fs::read_to_string(dir.join(path))?;
            read_state(&text).map_err(|e| match e {
                Error::Parse { line, field, msg } => Error::Parse { line, field: format!("resource:{field}"), msg },
                other => other,
            })
        }
    }
}

fn channels_from(f: &Fields, key: &str, dir: &Path) -> Result<Vec<QuantumChannel>> {
    f.str_list(key)?
        .into_iter()
        .enumerate()
        .map(|(i, path)| {
            let text = fs::read_to_string(dir.join(path))?;
            read_channel(&text).map_err(|e| match e {
                Error::Parse { line, field, msg } => {
                    Error::Parse { line, field: format!("{key}[{i}] ({path}):{field}"), msg }
                }
                Error::Validation { invariant, detail } => {
                    Error::Validation { invariant, detail: format!("{key}[{i}] ({path}): {detail}") }
                }
                other => other,
            })
        })
        .collect()
}

/// Parses a protocol configuration; relative file names resolve against `dir`.
pub fn parse_protocol(text: &str, dir: &Path) -> Result<LoadedProtocol> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        field: "<json>".into(),
        msg: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line: 1,
        field: "<root>".into(),
        msg: "expected a JSON object".into(),
    })?;
    let f = Fields { text, obj };
    let kind = f.str("kind")?;
    let n = f.usize("n")?;
    let name = obj.get("name").and_then(Value::as_str).unwrap_or("config").to_string();
    match kind {
        "cds" => {
            let mut v = value.clone();
            v["predicate"] =
                serde_json::to_value(predicate_from(&f, n)?).map_err(|e| f.err("predicate", e.to_string()))?;
            v["name"] = json!(name);
            let c: CdsProtocol = serde_json::from_value(v).map_err(|e| f.err("cds", e.to_string()))?;
            c.validate()?;
            Ok(LoadedProtocol::Cds(c))
        }
        "cdqs" => {
            let p = CdqsProtocol::new(
                &name,
                predicate_from(&f, n)?,
                f.usize("d_Q")?,
                resource_from(&f, dir)?,
                channels_from(&f, "alice", dir)?,
                channels_from(&f, "bob", dir)?,
                (f.f64_or("declared_eps", 0.0)?, f.f64_or("declared_delta", 0.0)?),
            )?;
            Ok(LoadedProtocol::Cdqs(p))
        }
        "frouting" => {
            let p = FRoutingProtocol::new(
                &name,
                predicate_from(&f, n)?,
                f.usize("d_Q")?,
                resource_from(&f, dir)?,
                channels_from(&f, "alice", dir)?,
                channels_from(&f, "bob", dir)?,
                f.f64_or("declared_eps", 0.0)?,
            )?;
            Ok(LoadedProtocol::FRouting(p))
        }
        other => Err(f.err("kind", format!("unknown kind `{other}` (expected cds, cdqs or frouting)"))),
    }
}

pub fn load_protocol_file(path: &Path) -> Result<LoadedProtocol> {
    let text = fs::read_to_string(path)?;
    parse_protocol(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Writes `<stem>.json` plus one file per channel (and the resource) into `dir`.
pub fn save_protocol(p: &LoadedProtocol, dir: &Path, stem: &str, format: ChannelFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let write_channels = |who: &str, chans: &[QuantumChannel]| -> Result<Vec<String>> {
        chans
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let file = format!("{stem}.{who}{i}.{}", if format == ChannelFormat::Choi { "choi" } else { "kraus" });
                fs::write(dir.join(&file), write_channel(c, format)?)?;
                Ok(file)
            })
            .collect()
    };
    let write_resource = |res: &ResourceState| -> Result<String> {
        let file = format!("{stem}.resource");
        fs::write(dir.join(&file), write_state(res))?;
        Ok(file)
    };
    let config = match p {
        LoadedProtocol::Cds(c) => {
            let mut v = serde_json::to_value(c).map_err(|e| Error::Argument(e.to_string()))?;
            v["kind"] = json!("cds");
            v["n"] = json!(c.predicate.n);
            v["predicate"] = json!(predicate_spec(&c.predicate));
            v
        }
        LoadedProtocol::Cdqs(c) => json!({
            "kind": "cdqs",
            "name": c.name,
            "n": c.predicate.n,
            "predicate": predicate_spec(&c.predicate),
            "d_Q": c.d_q,
            "resource": write_resource(&c.resource)?,
            "alice": write_channels("alice", &c.alice)?,
            "bob": write_channels("bob", &c.bob)?,
            "declared_eps": c.declared_eps,
            "declared_delta": c.declared_delta,
        }),
        LoadedProtocol::FRouting(c) => json!({
            "kind": "frouting",
            "name": c.name,
            "n": c.predicate.n,
            "predicate": predicate_spec(&c.predicate),
            "d_Q": c.d_q,
            "resource": write_resource(&c.resource)?,
            "alice": write_channels("alice", &c.alice)?,
            "bob": write_channels("bob", &c.bob)?,
            "declared_eps": c.declared_eps,
        }),
    };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&config).map_err(|e| Error::Argument(e.to_string()))?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::depolarizing;

    #[test]
    fn choi_file_round_trip_is_exact() {
        let ch = depolarizing(0.3, 2).unwrap();
        let text = write_channel(&ch, ChannelFormat::Choi).unwrap();
        let back = read_channel(&text).unwrap();
        assert_eq!(back.choi().unwrap(), ch.choi().unwrap());
        let reread = read_channel(&write_channel(&back, ChannelFormat::Choi).unwrap()).unwrap();
        assert_eq!(reread.choi().unwrap(), back.choi().unwrap());
    }

    #[test]
    fn kraus_file_round_trip() {
        let ch = depolarizing(0.3, 2).unwrap();
        let back = read_channel(&write_channel(&ch, ChannelFormat::Kraus).unwrap()).unwrap();
        assert_eq!(back.kraus(), ch.kraus());
    }

    #[test]
    fn non_psd_choi_is_a_validation_error() {
        let text = "CHOI in=Q:1 out=M:2\n2 2\n2 0\n0 0\n0 0\n-1 0\n";
        match read_channel(text) {
            Err(Error::Validation { invariant, .. }) => {
                assert!(invariant.contains("PSD") || invariant.contains("trace"))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_name_line_and_field() {
        let text = "CHOI in=Q:1 out=M:1\n1 1\n1 zero\n";
        match read_channel(text) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 3);
                assert!(field.contains("im"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let cfg = "{\n  \"kind\": \"cdqs\",\n  \"n\": \"two\"\n}";
        match parse_protocol(cfg, Path::new(".")) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "n");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn state_round_trip() {
        let r = ResourceState::correlated(&[1.0, 3.0]).unwrap();
        assert_eq!(read_state(&write_state(&r)).unwrap(), r);
    }
}
