//! Trust-assumption documents.
//!
//! A document names the processes and gives every process a fail-prone
//! system, either as explicit lists of names or as an operator tree:
//!
//! ```json
//! {
//!   "processes": ["p1", "p2", "p3", "p4", "p5"],
//!   "fail_prone": {
//!     "p1": {"theta": {"k": 1, "of": ["p2", "p3", "p4", "p5"]}},
//!     "p3": {"star": [{"theta": {"k": 1, "of": ["p1", "p2"]}},
//!                     {"theta": {"k": 1, "of": ["p4", "p5"]}}]},
//!     "p5": [["p2", "p4"]]
//!   },
//!   "quorums": {"p1": [["p1", "p2", "p3", "p4"]]}
//! }
//! ```
//!
//! `quorums` is optional; omitted entries use the canonical quorum system.
//! Process names map to indices in declaration order.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde_json::{json, Map, Value as Json};

use crate::algebra::{
    canonical_quorums, check_b3, is_asym_bqs, star, theta, AsymBqsViolation, AsymmetricFamily,
    B3Violation, ProcessId, ProcessSet, SetFamily,
};
use crate::error::{Error, Result};

/// A resolved trust assumption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrustSpec {
    names: Vec<String>,
    fail_prone: AsymmetricFamily,
    quorums: AsymmetricFamily,
    explicit_quorums: bool,
}

/// Operator tree of a fail-prone or quorum expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Sets(Vec<Vec<String>>),
    Theta { k: usize, of: Vec<String> },
    Star(Vec<Expr>),
}

#[derive(Clone, Copy)]
enum Role {
    FailProne,
    Quorum,
}

impl TrustSpec {
    /// Builds a spec from resolved families. `quorums = None` means canonical.
    pub fn new(
        names: Vec<String>,
        fail_prone: AsymmetricFamily,
        quorums: Option<AsymmetricFamily>,
    ) -> Result<Self> {
        check_names(&names)?;
        if names.len() != fail_prone.universe_size() {
            return Err(Error::UniverseMismatch {
                expected: names.len(),
                found: fail_prone.universe_size(),
            });
        }
        let explicit_quorums = quorums.is_some();
        let quorums = match quorums {
            Some(q) if q.universe_size() != names.len() => {
                return Err(Error::UniverseMismatch {
                    expected: names.len(),
                    found: q.universe_size(),
                })
            }
            Some(q) => q,
            None => fail_prone.map(|_, f| canonical_quorums(f)),
        };
        Ok(TrustSpec {
            names,
            fail_prone,
            quorums,
            explicit_quorums,
        })
    }

    /// Default names `p1..pn`.
    pub fn with_default_names(
        fail_prone: AsymmetricFamily,
        quorums: Option<AsymmetricFamily>,
    ) -> Result<Self> {
        let names = (0..fail_prone.universe_size())
            .map(|i| ProcessId(i).to_string())
            .collect();
        TrustSpec::new(names, fail_prone, quorums)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_trust_spec(&text)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, p: ProcessId) -> &str {
        &self.names[p.0]
    }

    pub fn id(&self, name: &str) -> Result<ProcessId> {
        self.names
            .iter()
            .position(|x| x == name)
            .map(ProcessId)
            .ok_or_else(|| Error::UnknownProcess(name.to_string()))
    }

    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<ProcessSet> {
        names
            .iter()
            .map(|x| self.id(x.as_ref()))
            .collect::<Result<ProcessSet>>()
    }

    pub fn fail_prone(&self) -> &AsymmetricFamily {
        &self.fail_prone
    }

    pub fn quorums(&self) -> &AsymmetricFamily {
        &self.quorums
    }

    pub fn has_explicit_quorums(&self) -> bool {
        self.explicit_quorums
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n()).map(ProcessId)
    }

    pub fn format_set(&self, s: ProcessSet) -> String {
        let inner: Vec<&str> = s.iter().map(|p| self.name(p)).collect();
        format!("{{{}}}", inner.join(","))
    }

    pub fn format_family(&self, f: &SetFamily) -> String {
        let inner: Vec<String> = f.iter().map(|s| self.format_set(*s)).collect();
        format!("{{{}}}", inner.join(","))
    }

    fn names_of(&self, s: ProcessSet) -> Vec<String> {
        s.iter().map(|p| self.name(p).to_string()).collect()
    }
}

impl Expr {
    pub fn from_json(v: &Json) -> Result<Expr> {
        match v {
            Json::Array(sets) => sets
                .iter()
                .map(|s| match s {
                    Json::Array(names) => names
                        .iter()
                        .map(|x| {
                            x.as_str().map(str::to_string).ok_or_else(|| {
                                Error::MalformedExpression(format!("expected a process name, got {x}"))
                            })
                        })
                        .collect(),
                    other => Err(Error::MalformedExpression(format!(
                        "expected a list of process names, got {other}"
                    ))),
                })
                .collect::<Result<_>>()
                .map(Expr::Sets),
            Json::Object(obj) if obj.len() == 1 => {
                let (op, arg) = obj.iter().next().expect("one entry");
                match op.as_str() {
                    "theta" => {
                        let k = arg
                            .get("k")
                            .and_then(Json::as_u64)
                            .ok_or_else(|| Error::MalformedExpression("theta needs an integer `k`".into()))?;
                        let of = arg
                            .get("of")
                            .and_then(Json::as_array)
                            .ok_or_else(|| Error::MalformedExpression("theta needs a name list `of`".into()))?
                            .iter()
                            .map(|x| {
                                x.as_str().map(str::to_string).ok_or_else(|| {
                                    Error::MalformedExpression(format!("expected a process name, got {x}"))
                                })
                            })
                            .collect::<Result<_>>()?;
                        Ok(Expr::Theta { k: k as usize, of })
                    }
                    "star" => {
                        let parts = arg
                            .as_array()
                            .filter(|a| !a.is_empty())
                            .ok_or_else(|| Error::MalformedExpression("star needs a non-empty list of operands".into()))?;
                        parts.iter().map(Expr::from_json).collect::<Result<_>>().map(Expr::Star)
                    }
                    other => Err(Error::MalformedExpression(format!("unknown operator `{other}`"))),
                }
            }
            other => Err(Error::MalformedExpression(format!(
                "expected a list of sets or a theta/star operator, got {other}"
            ))),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Expr::Sets(sets) => json!(sets),
            Expr::Theta { k, of } => json!({"theta": {"k": k, "of": of}}),
            Expr::Star(parts) => json!({"star": parts.iter().map(Expr::to_json).collect::<Vec<_>>()}),
        }
    }

    fn eval(&self, n: usize, ids: &HashMap<&str, ProcessId>, role: Role) -> Result<SetFamily> {
        let resolve = |names: &[String]| -> Result<ProcessSet> {
            names
                .iter()
                .map(|x| ids.get(x.as_str()).copied().ok_or_else(|| Error::UnknownProcess(x.clone())))
                .collect()
        };
        match self {
            Expr::Sets(sets) => {
                let sets = sets.iter().map(|s| resolve(s)).collect::<Result<Vec<_>>>()?;
                match role {
                    Role::FailProne if sets.is_empty() => Ok(SetFamily::nothing(n)),
                    Role::FailProne => SetFamily::new(n, sets),
                    Role::Quorum => SetFamily::new_minimal(n, sets),
                }
            }
            Expr::Theta { k, of } => {
                let base = resolve(of)?;
                if base.len() != of.len() {
                    return Err(Error::MalformedExpression(format!("theta base {of:?} repeats a name")));
                }
                theta(n, *k, base).map_err(|e| Error::MalformedExpression(e.to_string()))
            }
            Expr::Star(parts) => {
                let mut acc = parts[0].eval(n, ids, role)?;
                for part in &parts[1..] {
                    let rhs = part.eval(n, ids, role)?;
                    acc = match role {
                        Role::FailProne => star(&acc, &rhs)?,
                        Role::Quorum => SetFamily::new_minimal(
                            n,
                            acc.iter().flat_map(|a| rhs.iter().map(move |b| a.union(*b))),
                        )?,
                    };
                }
                Ok(acc)
            }
        }
    }
}

/// Parses and resolves a JSON trust document.
pub fn parse_trust_spec(text: &str) -> Result<TrustSpec> {
    let doc: Json = serde_json::from_str(text)?;
    parse_trust_value(&doc)
}

/// Resolves an already-decoded JSON trust document.
pub fn parse_trust_value(doc: &Json) -> Result<TrustSpec> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::MalformedExpression("trust document must be a JSON object".into()))?;
    let names: Vec<String> = obj
        .get("processes")
        .and_then(Json::as_array)
        .ok_or_else(|| Error::MalformedExpression("missing `processes` list".into()))?
        .iter()
        .map(|x| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::MalformedExpression(format!("process names must be strings, got {x}")))
        })
        .collect::<Result<_>>()?;
    check_names(&names)?;
    let ids: HashMap<&str, ProcessId> = names
        .iter()
        .enumerate()
        .map(|(i, x)| (x.as_str(), ProcessId(i)))
        .collect();

    let fail_map = obj
        .get("fail_prone")
        .and_then(Json::as_object)
        .ok_or_else(|| Error::MalformedExpression("missing `fail_prone` object".into()))?;
    let fail_prone: Vec<SetFamily> = resolve_per_process(fail_map, &names, &ids, Role::FailProne, true)?
        .into_iter()
        .map(|f| f.expect("required entries are present"))
        .collect();

    let quorums = match obj.get("quorums") {
        None | Some(Json::Null) => None,
        Some(Json::Object(qmap)) => {
            let explicit = resolve_per_process(qmap, &names, &ids, Role::Quorum, false)?;
            // Processes without an explicit entry keep their canonical quorums.
            let merged = explicit
                .into_iter()
                .zip(&fail_prone)
                .map(|(q, f)| q.unwrap_or_else(|| canonical_quorums(f)))
                .collect();
            Some(AsymmetricFamily::new(merged)?)
        }
        Some(other) => {
            return Err(Error::MalformedExpression(format!("`quorums` must be an object, got {other}")))
        }
    };
    let fail_prone = AsymmetricFamily::new(fail_prone)?;
    TrustSpec::new(names, fail_prone, quorums)
}

fn resolve_per_process(
    map: &Map<String, Json>,
    names: &[String],
    ids: &HashMap<&str, ProcessId>,
    role: Role,
    required: bool,
) -> Result<Vec<Option<SetFamily>>> {
    if let Some(unknown) = map.keys().find(|k| !ids.contains_key(k.as_str())) {
        return Err(Error::UnknownProcess(unknown.clone()));
    }
    names
        .iter()
        .map(|name| match map.get(name) {
            Some(v) => Expr::from_json(v)?.eval(names.len(), ids, role).map(Some),
            None if required => Err(Error::MalformedExpression(format!(
                "process `{name}` has no fail-prone system"
            ))),
            None => Ok(None),
        })
        .collect()
}

fn check_names(names: &[String]) -> Result<()> {
    if names.is_empty() || names.len() > crate::algebra::MAX_PROCESSES {
        return Err(Error::InvalidArgument(format!(
            "a trust document needs 1..=64 processes, got {}",
            names.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for x in names {
        if !seen.insert(x.as_str()) {
            return Err(Error::DuplicateProcess(x.clone()));
        }
    }
    Ok(())
}

/// Writes a spec back as a document with every family expanded to explicit lists.
pub fn emit_trust_spec(spec: &TrustSpec) -> String {
    let family_json = |f: &SetFamily| -> Json {
        Json::Array(f.iter().map(|s| json!(spec.names_of(*s))).collect())
    };
    let mut fail = Map::new();
    for (p, f) in spec.fail_prone.iter() {
        fail.insert(spec.name(p).to_string(), family_json(f));
    }
    let mut doc = Map::new();
    doc.insert("processes".into(), json!(spec.names));
    doc.insert("fail_prone".into(), Json::Object(fail));
    if spec.explicit_quorums {
        let mut q = Map::new();
        for (p, f) in spec.quorums.iter() {
            q.insert(spec.name(p).to_string(), family_json(f));
        }
        doc.insert("quorums".into(), Json::Object(q));
    }
    serde_json::to_string_pretty(&Json::Object(doc)).expect("JSON values always serialize")
}

/// Verdicts about a trust assumption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub b3: std::result::Result<(), B3Violation>,
    /// Per process: some quorum avoids each of its fail-prone sets.
    pub availability: Vec<bool>,
    /// Processes listing themselves in one of their own fail-prone sets.
    pub self_trust_warnings: Vec<ProcessId>,
    pub asym_bqs: std::result::Result<(), AsymBqsViolation>,
    pub explicit_quorums: bool,
}

impl ValidationReport {
    pub fn b3_holds(&self) -> bool {
        self.b3.is_ok()
    }
}

pub fn validate(spec: &TrustSpec) -> ValidationReport {
    let availability = spec
        .fail_prone
        .iter()
        .map(|(p, f)| {
            let q = spec.quorums.get(p);
            f.iter().all(|fs| q.iter().any(|qs| !qs.intersects(*fs)))
        })
        .collect();
    let self_trust_warnings = spec
        .fail_prone
        .iter()
        .filter(|(p, f)| f.iter().any(|s| s.contains(*p)))
        .map(|(p, _)| p)
        .collect();
    ValidationReport {
        b3: check_b3(&spec.fail_prone),
        availability,
        self_trust_warnings,
        asym_bqs: is_asym_bqs(&spec.quorums, &spec.fail_prone).expect("same universe by construction"),
        explicit_quorums: spec.explicit_quorums,
    }
}

/// Renders names instead of indices in violation witnesses.
pub struct Named<'a, T>(pub &'a TrustSpec, pub &'a T);

impl fmt::Display for Named<'_, B3Violation> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, w) = (self.0, self.1);
        write!(
            f,
            "i={} j={} F_i={} F_j={} F_ij={}",
            s.name(w.i),
            s.name(w.j),
            s.format_set(w.f_i),
            s.format_set(w.f_j),
            s.format_set(w.f_ij)
        )
    }
}

impl fmt::Display for Named<'_, AsymBqsViolation> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        match *self.1 {
            AsymBqsViolation::Consistency { i, j, q_i, q_j, f_ij } => write!(
                f,
                "consistency: Q_i={} of {} and Q_j={} of {} meet inside F_ij={}",
                s.format_set(q_i),
                s.name(i),
                s.format_set(q_j),
                s.name(j),
                s.format_set(f_ij)
            ),
            AsymBqsViolation::Availability { i, f_i } => write!(
                f,
                "availability: no quorum of {} avoids {}",
                s.name(i),
                s.format_set(f_i)
            ),
        }
    }
}
