//! JSON instance and solution files.
//!
//! Writers emit a canonical layout (one node, travel row or route per line)
//! so that saving the same value twice produces identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{Instance, InstanceData, Minutes, NodeSpec, Route, ShiftPolicy, Solution};

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ShiftStartsRepr {
    List(Vec<Minutes>),
    Marker(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: usize,
    a: Minutes,
    b: Minutes,
    s: Minutes,
    d: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    m: usize,
    capacity: i64,
    max_shift_span: Minutes,
    shift_starts: ShiftStartsRepr,
    big_m: i64,
    nodes: Vec<NodeRecord>,
    travel: Vec<Vec<Minutes>>,
    groups: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteRecord {
    vehicle: usize,
    sequence: Vec<usize>,
    shift_start: Minutes,
    times: Vec<Minutes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loads: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    routes: Vec<RouteRecord>,
    unserved: Vec<usize>,
}

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        ModelError::Parse {
            path: path.to_path_buf(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })
}

fn read(path: &Path) -> Result<String, ModelError> {
    fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), ModelError> {
    fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn instance_from_str(text: &str, origin: &Path) -> Result<Instance, ModelError> {
    let file: InstanceFile = parse(text, origin)?;
    let shift_starts = match file.shift_starts {
        ShiftStartsRepr::List(v) => ShiftPolicy::Candidates(v),
        ShiftStartsRepr::Marker(s) if s == "flexible" => ShiftPolicy::Flexible,
        ShiftStartsRepr::Marker(s) => {
            return Err(ModelError::Parse {
                path: origin.to_path_buf(),
                line: 0,
                column: 0,
                field: "shift_starts".into(),
                message: format!("expected an array of minutes or \"flexible\", found \"{s}\""),
            })
        }
    };
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for (idx, rec) in file.nodes.iter().enumerate() {
        if rec.id != idx + 1 {
            return Err(ModelError::invariant(
                "node indexing",
                format!("nodes[{idx}] has id {}, expected {}", rec.id, idx + 1),
            ));
        }
        nodes.push(NodeSpec {
            a: rec.a,
            b: rec.b,
            s: rec.s,
            d: rec.d,
        });
    }
    Instance::new(InstanceData {
        n: file.n,
        m: file.m,
        capacity: file.capacity,
        max_shift_span: file.max_shift_span,
        shift_starts,
        big_m: file.big_m,
        nodes,
        travel: file.travel,
        groups: file.groups,
    })
}

pub fn instance_to_string(inst: &Instance) -> String {
    let d = inst.data();
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"n\": {},", d.n);
    let _ = writeln!(out, "  \"m\": {},", d.m);
    let _ = writeln!(out, "  \"capacity\": {},", d.capacity);
    let _ = writeln!(out, "  \"max_shift_span\": {},", d.max_shift_span);
    match &d.shift_starts {
        ShiftPolicy::Flexible => out.push_str("  \"shift_starts\": \"flexible\",\n"),
        ShiftPolicy::Candidates(c) => {
            let _ = writeln!(out, "  \"shift_starts\": {},", json_list(c));
        }
    }
    let _ = writeln!(out, "  \"big_m\": {},", d.big_m);
    out.push_str("  \"nodes\": [\n");
    for (idx, node) in d.nodes.iter().enumerate() {
        let sep = if idx + 1 == d.nodes.len() { "" } else { "," };
        let _ = writeln!(
            out,
            "    {{\"id\": {}, \"a\": {}, \"b\": {}, \"s\": {}, \"d\": {}}}{sep}",
            idx + 1,
            node.a,
            node.b,
            node.s,
            node.d
        );
    }
    out.push_str("  ],\n  \"travel\": [\n");
    for (idx, row) in d.travel.iter().enumerate() {
        let sep = if idx + 1 == d.travel.len() { "" } else { "," };
        let _ = writeln!(out, "    {}{sep}", json_list(row));
    }
    out.push_str("  ],\n");
    let groups: Vec<String> = d.groups.iter().map(|g| json_list(g)).collect();
    let _ = writeln!(out, "  \"groups\": [{}]", groups.join(", "));
    out.push_str("}\n");
    out
}

fn json_list<T: std::fmt::Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, ModelError> {
    let path = path.as_ref();
    instance_from_str(&read(path)?, path)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(path.as_ref(), &instance_to_string(inst))
}

pub fn solution_from_str(
    inst: &Instance,
    text: &str,
    origin: &Path,
) -> Result<Solution, ModelError> {
    let sol = raw_solution_from_str(text, origin)?;
    sol.check_structure(inst)?;
    Ok(sol)
}

/// Parses a solution file without checking it against an instance, so that
/// structural defects can be reported by [`crate::check_solution`].
pub fn raw_solution_from_str(text: &str, origin: &Path) -> Result<Solution, ModelError> {
    let file: SolutionFile = parse(text, origin)?;
    let mut routes: Vec<Route> = file
        .routes
        .into_iter()
        .map(|r| Route {
            vehicle: r.vehicle,
            sequence: r.sequence,
            shift_start: r.shift_start,
            times: r.times,
            loads: r.loads,
        })
        .collect();
    routes.sort_by_key(|r| r.vehicle);
    Ok(Solution {
        routes,
        unserved: file.unserved,
    })
}

pub fn solution_to_string(sol: &Solution) -> String {
    let mut out = String::from("{\n  \"routes\": [\n");
    for (idx, r) in sol.routes.iter().enumerate() {
        let sep = if idx + 1 == sol.routes.len() { "" } else { "," };
        let _ = write!(
            out,
            "    {{\"vehicle\": {}, \"sequence\": {}, \"shift_start\": {}, \"times\": {}",
            r.vehicle,
            json_list(&r.sequence),
            r.shift_start,
            json_list(&r.times)
        );
        if let Some(loads) = &r.loads {
            let _ = write!(out, ", \"loads\": {}", json_list(loads));
        }
        let _ = writeln!(out, "}}{sep}");
    }
    let mut unserved = sol.unserved.clone();
    unserved.sort_unstable();
    let _ = writeln!(out, "  ],\n  \"unserved\": {}\n}}", json_list(&unserved));
    out
}

pub fn load_solution(inst: &Instance, path: impl AsRef<Path>) -> Result<Solution, ModelError> {
    let path = path.as_ref();
    solution_from_str(inst, &read(path)?, path)
}

pub fn load_raw_solution(path: impl AsRef<Path>) -> Result<Solution, ModelError> {
    let path = path.as_ref();
    raw_solution_from_str(&read(path)?, path)
}

pub fn save_solution(sol: &Solution, path: impl AsRef<Path>) -> Result<(), ModelError> {
    write(path.as_ref(), &solution_to_string(sol))
}
