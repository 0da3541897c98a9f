//! Instance files: a JSON document tagged by `kind`.
//!
//! Every numeric field that is not a count may be written as a JSON number
//! (parsed exactly from its decimal text) or as a string holding a decimal or
//! a `p/q` fraction. Writers emit integers as numbers and other rationals as
//! `"p/q"` strings, so a round trip is lossless.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use super::{
    ConfigInstance, Configuration, Edge, Instance, InstanceKind, RelatedInstance, Request,
    RoutingInstance, RoutingRequest, UnrelatedInstance,
};
use crate::error::{Error, Result};
use crate::stoch::{ExactDist, Rational};

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_instance(inst))?;
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = as_object(&doc, "$")?;
    let kind: InstanceKind = as_str(get(obj, "$", "kind")?, "$.kind")?.parse()?;
    let inst = match kind {
        InstanceKind::Config => {
            let m = as_count(get(obj, "$", "m")?, "$.m")?;
            let reqs = as_array(get(obj, "$", "requests")?, "$.requests")?;
            let mut requests = Vec::with_capacity(reqs.len());
            for (j, r) in reqs.iter().enumerate() {
                let p = format!("$.requests[{j}]");
                let ro = as_object(r, &p)?;
                let id = match ro.get("id") {
                    Some(v) => as_count(v, &format!("{p}.id"))?,
                    None => j,
                };
                let cfgs = as_array(get(ro, &p, "configs")?, &format!("{p}.configs"))?;
                let mut configs = Vec::with_capacity(cfgs.len());
                for (c, cv) in cfgs.iter().enumerate() {
                    let cp = format!("{p}.configs[{c}]");
                    let co = as_object(cv, &cp)?;
                    let mp = format!("{cp}.multipliers");
                    let multipliers = as_array(get(co, &cp, "multipliers")?, &mp)?
                        .iter()
                        .enumerate()
                        .map(|(i, a)| as_nonneg(a, &format!("{mp}[{i}]")))
                        .collect::<Result<Vec<_>>>()?;
                    let law = parse_law(get(co, &cp, "law")?, &format!("{cp}.law"))?;
                    configs.push(Configuration::new(multipliers, law));
                }
                requests.push(Request { id, configs });
            }
            Instance::Config(ConfigInstance::new(m, requests)?)
        }
        InstanceKind::Unrelated => {
            let m = as_count(get(obj, "$", "m")?, "$.m")?;
            let jobs = as_array(get(obj, "$", "jobs")?, "$.jobs")?
                .iter()
                .enumerate()
                .map(|(j, laws)| {
                    let p = format!("$.jobs[{j}]");
                    as_array(laws, &p)?
                        .iter()
                        .enumerate()
                        .map(|(i, l)| parse_law(l, &format!("{p}[{i}]")))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Instance::Unrelated(UnrelatedInstance::new(m, jobs)?)
        }
        InstanceKind::Related => {
            let speeds = as_array(get(obj, "$", "speeds")?, "$.speeds")?
                .iter()
                .enumerate()
                .map(|(i, s)| as_nonneg(s, &format!("$.speeds[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let jobs = as_array(get(obj, "$", "jobs")?, "$.jobs")?
                .iter()
                .enumerate()
                .map(|(j, l)| parse_law(l, &format!("$.jobs[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            Instance::Related(RelatedInstance::new(speeds, jobs)?)
        }
        InstanceKind::Routing => {
            let vertices = as_count(get(obj, "$", "vertices")?, "$.vertices")?;
            let mut edges = Vec::new();
            for (e, ev) in as_array(get(obj, "$", "edges")?, "$.edges")?.iter().enumerate() {
                let p = format!("$.edges[{e}]");
                let t = as_tuple(ev, &p, 3)?;
                edges.push(Edge {
                    tail: as_count(&t[0], &format!("{p}[0]"))?,
                    head: as_count(&t[1], &format!("{p}[1]"))?,
                    capacity: as_nonneg(&t[2], &format!("{p}[2]"))?,
                });
            }
            let mut requests = Vec::new();
            for (j, rv) in as_array(get(obj, "$", "requests")?, "$.requests")?.iter().enumerate() {
                let p = format!("$.requests[{j}]");
                let t = as_tuple(rv, &p, 3)?;
                requests.push(RoutingRequest {
                    source: as_count(&t[0], &format!("{p}[0]"))?,
                    sink: as_count(&t[1], &format!("{p}[1]"))?,
                    demand: parse_law(&t[2], &format!("{p}[2]"))?,
                });
            }
            Instance::Routing(RoutingInstance::new(vertices, edges, requests)?)
        }
    };
    Ok(inst)
}

pub fn render_instance(inst: &Instance) -> String {
    let doc = match inst {
        Instance::Config(c) => json!({
            "kind": "config",
            "m": c.m,
            "requests": c.requests.iter().map(|r| json!({
                "id": r.id,
                "configs": r.configs.iter().map(|cfg| json!({
                    "multipliers": cfg.multipliers.iter().map(rational_value).collect::<Vec<_>>(),
                    "law": law_value(&cfg.law),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
        Instance::Unrelated(u) => json!({
            "kind": "unrelated",
            "m": u.m,
            "jobs": u.jobs.iter().map(|laws| laws.iter().map(law_value).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
        Instance::Related(r) => json!({
            "kind": "related",
            "speeds": r.speeds.iter().map(rational_value).collect::<Vec<_>>(),
            "jobs": r.jobs.iter().map(law_value).collect::<Vec<_>>(),
        }),
        Instance::Routing(r) => json!({
            "kind": "routing",
            "vertices": r.vertices,
            "edges": r.edges.iter().map(|e| json!([e.tail, e.head, rational_value(&e.capacity)])).collect::<Vec<_>>(),
            "requests": r.requests.iter().map(|q| json!([q.source, q.sink, law_value(&q.demand)])).collect::<Vec<_>>(),
        }),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// Integers as JSON numbers, everything else as a `"p/q"` string.
pub(crate) fn rational_value(x: &Rational) -> Value {
    if x.is_integer() {
        if let Some(i) = x.numer().to_i64() {
            return json!(i);
        }
    }
    Value::String(x.to_string())
}

fn law_value(d: &ExactDist) -> Value {
    Value::Array(
        d.support()
            .iter()
            .map(|(v, p)| json!([rational_value(v), rational_value(p)]))
            .collect(),
    )
}

fn parse_law(v: &Value, path: &str) -> Result<ExactDist> {
    let pairs = as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(k, pv)| {
            let p = format!("{path}[{k}]");
            let t = as_tuple(pv, &p, 2)?;
            Ok((as_nonneg(&t[0], &format!("{p}[0]"))?, as_nonneg(&t[1], &format!("{p}[1]"))?))
        })
        .collect::<Result<Vec<_>>>()?;
    ExactDist::new(pairs).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{path}: {msg}")),
        other => other,
    })
}

fn get<'v>(obj: &'v Map<String, Value>, path: &str, key: &str) -> Result<&'v Value> {
    obj.get(key)
        .ok_or_else(|| Error::field(format!("{path}.{key}"), "missing"))
}

fn as_object<'v>(v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::field(path, "expected an object"))
}

fn as_array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
    v.as_array().ok_or_else(|| Error::field(path, "expected an array"))
}

fn as_str<'v>(v: &'v Value, path: &str) -> Result<&'v str> {
    v.as_str().ok_or_else(|| Error::field(path, "expected a string"))
}

fn as_tuple<'v>(v: &'v Value, path: &str, len: usize) -> Result<&'v Vec<Value>> {
    let a = as_array(v, path)?;
    if a.len() != len {
        return Err(Error::field(path, format!("expected {len} entries, found {}", a.len())));
    }
    Ok(a)
}

fn as_count(v: &Value, path: &str) -> Result<usize> {
    let x = as_rational(v, path)?;
    if !x.is_integer() || x.is_negative() {
        return Err(Error::field(path, format!("expected a nonnegative integer, found {x}")));
    }
    x.numer()
        .to_usize()
        .ok_or_else(|| Error::field(path, "integer out of range"))
}

fn as_nonneg(v: &Value, path: &str) -> Result<Rational> {
    let x = as_rational(v, path)?;
    if x.is_negative() {
        return Err(Error::field(path, format!("expected a nonnegative number, found {x}")));
    }
    Ok(x)
}

fn as_rational(v: &Value, path: &str) -> Result<Rational> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(Error::field(path, "expected a number or a numeric string")),
    };
    parse_rational(&text).ok_or_else(|| Error::field(path, format!("cannot parse `{text}` as a rational")))
}

/// Parses `p/q`, or a decimal with optional sign, fraction and exponent.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p = parse_decimal(p.trim())?;
        let q = parse_decimal(q.trim())?;
        if q.is_zero() {
            return None;
        }
        return Some(p / q);
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], i32::from_str(&text[k + 1..]).ok()?),
        None => (text, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int}{frac}");
    let n = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut x = Rational::from_integer(n);
    let pow = Rational::from_integer(num_traits::pow(ten, shift.unsigned_abs() as usize));
    if shift >= 0 {
        x *= pow;
    } else {
        x /= pow;
    }
    if neg {
        x = -x;
    }
    Some(x)
}
