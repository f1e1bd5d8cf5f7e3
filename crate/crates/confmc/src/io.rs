//! JSON model/query/result schemas. All probabilities travel as
//! number-strings (`"7/10"` or exact decimals like `"0.1"`); parsing is
//! exact and serialization round-trips bit-for-bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Dist;
use crate::model::{ActionId, Configuration, MdpModel, ModelError, Vec01};
use crate::rat::{format_rat, parse_rat, Rat, RatParseError};
use crate::scheduler::{LinearFractional, Scheduler};
use crate::semantics::SemanticsId;
use crate::synthesis::Certificate;
use crate::target::TargetSet;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("number parse error: {0}")]
    Number(#[from] RatParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("file parse error at {path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> IoError {
    IoError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

/// On-disk MDP: states, actions, and one row-major matrix of number-strings
/// per action.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub transitions: BTreeMap<String, Vec<Vec<String>>>,
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<MdpModel, IoError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let n = file.states.len();
    let mut matrices = Vec::with_capacity(file.actions.len());
    for action in &file.actions {
        let rows = file
            .transitions
            .get(action)
            .ok_or_else(|| invalid("transitions", format!("missing action {action:?}")))?;
        if rows.len() != n {
            return Err(invalid(
                "transitions",
                format!("action {action:?} has {} rows, expected {n}", rows.len()),
            ));
        }
        let mut matrix = Vec::with_capacity(n);
        for row in rows {
            let parsed: Result<Vec<Rat>, RatParseError> =
                row.iter().map(|s| parse_rat(s)).collect();
            matrix.push(parsed?);
        }
        matrices.push(matrix);
    }
    Ok(MdpModel::new(file.states, file.actions, matrices)?)
}

/// Serializes a model so that [`parse_model`] reproduces it exactly.
pub fn serialize_model(m: &MdpModel) -> String {
    let transitions: BTreeMap<String, Vec<Vec<String>>> = m
        .action_names
        .iter()
        .enumerate()
        .map(|(a, name)| {
            (
                name.clone(),
                m.matrices[a]
                    .iter()
                    .map(|row| row.iter().map(format_rat).collect())
                    .collect(),
            )
        })
        .collect();
    let file = ModelFile {
        states: m.state_names.clone(),
        actions: m.action_names.clone(),
        transitions,
    };
    serde_json::to_string_pretty(&file).expect("model file serializes")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetFile {
    Upward { generators: Vec<Vec<String>> },
    Downward { generators: Vec<Vec<String>> },
    Explicit { configs: Vec<Vec<String>> },
    Linear {
        alpha: Vec<String>,
        bound: String,
        #[serde(default)]
        strict: bool,
    },
}

/// One history-table entry: a configuration-prefix and its action weights.
pub type HistoryEntryFile = (Vec<Vec<String>>, BTreeMap<String, String>);

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulerFile {
    Constant {
        weights: BTreeMap<String, String>,
    },
    Word {
        word: Vec<String>,
        default: String,
    },
    LinearFractional {
        theta: BTreeMap<String, Vec<String>>,
        s: Vec<String>,
    },
    HistoryTable {
        entries: Vec<HistoryEntryFile>,
        default: BTreeMap<String, String>,
    },
}

/// Algorithm knobs a query may pin; command-line flags override them.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct QueryOptions {
    #[serde(skip_serializing_if = "Option::is_none", rename = "K")]
    pub big_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "L")]
    pub big_l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_limit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

/// On-disk reachability query.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QueryFile {
    pub initial: Vec<String>,
    pub semantics: String,
    pub target: TargetFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerFile>,
    #[serde(default)]
    pub options: QueryOptions,
}

/// A query resolved against a model: dense vectors, interned ids.
#[derive(Clone, Debug)]
pub struct Query {
    pub initial: Configuration,
    pub semantics: SemanticsId,
    pub target: TargetSet,
    pub threshold: Option<Rat>,
    pub scheduler: Option<Scheduler>,
    pub options: QueryOptions,
}

fn parse_vector(path: &str, strings: &[String], n: usize) -> Result<Vec<Rat>, IoError> {
    if strings.len() != n {
        return Err(invalid(
            path,
            format!("expected {n} entries, got {}", strings.len()),
        ));
    }
    Ok(strings
        .iter()
        .map(|s| parse_rat(s))
        .collect::<Result<Vec<_>, _>>()?)
}

fn parse_action_dist(
    path: &str,
    weights: &BTreeMap<String, String>,
    m: &MdpModel,
) -> Result<Dist<ActionId>, IoError> {
    let mut pairs = Vec::with_capacity(weights.len());
    for (name, w) in weights {
        let a = m
            .action_by_name(name)
            .ok_or_else(|| invalid(path, format!("unknown action {name:?}")))?;
        pairs.push((a, parse_rat(w)?));
    }
    Dist::new(pairs).map_err(|e| invalid(path, e.to_string()))
}

fn parse_scheduler(file: &SchedulerFile, m: &MdpModel) -> Result<Scheduler, IoError> {
    let n = m.n_states();
    match file {
        SchedulerFile::Constant { weights } => Ok(Scheduler::ConstantMixed(parse_action_dist(
            "scheduler.weights",
            weights,
            m,
        )?)),
        SchedulerFile::Word { word, default } => {
            let mut ids = Vec::with_capacity(word.len());
            for name in word {
                ids.push(
                    m.action_by_name(name)
                        .ok_or_else(|| invalid("scheduler.word", format!("unknown action {name:?}")))?,
                );
            }
            let default = m
                .action_by_name(default)
                .ok_or_else(|| invalid("scheduler.default", format!("unknown action {default:?}")))?;
            Ok(Scheduler::ActionWord { word: ids, default })
        }
        SchedulerFile::LinearFractional { theta, s } => {
            let mut rows = Vec::with_capacity(m.n_actions());
            for name in &m.action_names {
                let coeffs = theta.get(name).ok_or_else(|| {
                    invalid("scheduler.theta", format!("missing action {name:?}"))
                })?;
                let v = parse_vector("scheduler.theta", coeffs, n + 1)?;
                rows.push((v[0].clone(), v[1..].to_vec()));
            }
            let sv = parse_vector("scheduler.s", s, n + 1)?;
            Ok(Scheduler::LinearFractional(LinearFractional {
                theta: rows,
                s: (sv[0].clone(), sv[1..].to_vec()),
            }))
        }
        SchedulerFile::HistoryTable { entries, default } => {
            let mut parsed = Vec::with_capacity(entries.len());
            for (prefix, weights) in entries {
                let mut history = Vec::with_capacity(prefix.len());
                for cfg in prefix {
                    history.push(Configuration::new(parse_vector(
                        "scheduler.entries",
                        cfg,
                        n,
                    )?)?);
                }
                parsed.push((history, parse_action_dist("scheduler.entries", weights, m)?));
            }
            Ok(Scheduler::HistoryTable {
                entries: parsed,
                default: parse_action_dist("scheduler.default", default, m)?,
            })
        }
    }
}

fn parse_target(file: &TargetFile, n: usize) -> Result<TargetSet, IoError> {
    match file {
        TargetFile::Upward { generators } => {
            let gens = generators
                .iter()
                .map(|g| Ok(Vec01::new(parse_vector("target.generators", g, n)?)?))
                .collect::<Result<Vec<_>, IoError>>()?;
            Ok(TargetSet::upward(gens))
        }
        TargetFile::Downward { generators } => {
            let gens = generators
                .iter()
                .map(|g| Ok(Vec01::new(parse_vector("target.generators", g, n)?)?))
                .collect::<Result<Vec<_>, IoError>>()?;
            Ok(TargetSet::downward(gens))
        }
        TargetFile::Explicit { configs } => {
            let cfgs = configs
                .iter()
                .map(|c| Ok(Configuration::new(parse_vector("target.configs", c, n)?)?))
                .collect::<Result<Vec<_>, IoError>>()?;
            Ok(TargetSet::explicit(cfgs))
        }
        TargetFile::Linear {
            alpha,
            bound,
            strict,
        } => Ok(TargetSet::LinearThreshold {
            alpha: parse_vector("target.alpha", alpha, n)?,
            bound: parse_rat(bound)?,
            strict: *strict,
        }),
    }
}

/// Parses a query against its model, checking dimensions and ranges.
pub fn parse_query(text: &str, m: &MdpModel) -> Result<Query, IoError> {
    let file: QueryFile = serde_json::from_str(text)?;
    let n = m.n_states();
    let initial = Configuration::new(parse_vector("initial", &file.initial, n)?)?;
    let semantics: SemanticsId = file
        .semantics
        .parse()
        .map_err(|e: String| invalid("semantics", e))?;
    let target = parse_target(&file.target, n)?;
    let threshold = match &file.threshold {
        Some(t) => {
            let v = parse_rat(t)?;
            if !crate::rat::is_unit(&v) {
                return Err(invalid("threshold", "must lie in [0,1]"));
            }
            Some(v)
        }
        None => None,
    };
    let scheduler = file
        .scheduler
        .as_ref()
        .map(|s| parse_scheduler(s, m))
        .transpose()?;
    Ok(Query {
        initial,
        semantics,
        target,
        threshold,
        scheduler,
        options: file.options,
    })
}

fn strings(v: &[Rat]) -> Vec<String> {
    v.iter().map(format_rat).collect()
}

/// Builds the on-disk form of a query (used by the generators).
pub fn query_file(
    m: &MdpModel,
    initial: &Configuration,
    semantics: SemanticsId,
    target: &TargetSet,
    threshold: Option<&Rat>,
    scheduler: Option<&Scheduler>,
) -> QueryFile {
    let target = match target {
        TargetSet::UpwardGenerators(g) => TargetFile::Upward {
            generators: g.iter().map(|v| strings(v.entries())).collect(),
        },
        TargetSet::DownwardGenerators(g) => TargetFile::Downward {
            generators: g.iter().map(|v| strings(v.entries())).collect(),
        },
        TargetSet::ExplicitConfigs(c) => TargetFile::Explicit {
            configs: c.iter().map(|v| strings(v.weights())).collect(),
        },
        TargetSet::LinearThreshold {
            alpha,
            bound,
            strict,
        } => TargetFile::Linear {
            alpha: strings(alpha),
            bound: format_rat(bound),
            strict: *strict,
        },
    };
    let scheduler = scheduler.map(|s| match s {
        Scheduler::ConstantMixed(d) => SchedulerFile::Constant {
            weights: d
                .iter()
                .map(|(a, w)| (m.action_names[a.0].clone(), format_rat(w)))
                .collect(),
        },
        Scheduler::ActionWord { word, default } => SchedulerFile::Word {
            word: word.iter().map(|a| m.action_names[a.0].clone()).collect(),
            default: m.action_names[default.0].clone(),
        },
        Scheduler::LinearFractional(lf) => SchedulerFile::LinearFractional {
            theta: lf
                .theta
                .iter()
                .enumerate()
                .map(|(a, (c, coeffs))| {
                    let mut v = vec![format_rat(c)];
                    v.extend(strings(coeffs));
                    (m.action_names[a].clone(), v)
                })
                .collect(),
            s: {
                let mut v = vec![format_rat(&lf.s.0)];
                v.extend(strings(&lf.s.1));
                v
            },
        },
        Scheduler::HistoryTable { entries, default } => SchedulerFile::HistoryTable {
            entries: entries
                .iter()
                .map(|(prefix, d)| {
                    (
                        prefix.iter().map(|c| strings(c.weights())).collect(),
                        d.iter()
                            .map(|(a, w)| (m.action_names[a.0].clone(), format_rat(w)))
                            .collect(),
                    )
                })
                .collect(),
            default: default
                .iter()
                .map(|(a, w)| (m.action_names[a.0].clone(), format_rat(w)))
                .collect(),
        },
    });
    QueryFile {
        initial: strings(initial.weights()),
        semantics: semantics.as_str().to_string(),
        target,
        threshold: threshold.map(format_rat),
        scheduler,
        options: QueryOptions::default(),
    }
}

/// On-disk certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub theta: BTreeMap<String, Vec<String>>,
    pub s: Vec<String>,
    pub r: Vec<String>,
    pub gamma: String,
    pub xi: String,
}

pub fn certificate_file(cert: &Certificate, m: &MdpModel) -> CertificateFile {
    CertificateFile {
        theta: cert
            .theta
            .iter()
            .enumerate()
            .map(|(a, (c, coeffs))| {
                let mut v = vec![format_rat(c)];
                v.extend(strings(coeffs));
                (m.action_names[a].clone(), v)
            })
            .collect(),
        s: {
            let mut v = vec![format_rat(&cert.s.0)];
            v.extend(strings(&cert.s.1));
            v
        },
        r: {
            let mut v = vec![format_rat(&cert.r.0)];
            v.extend(strings(&cert.r.1));
            v
        },
        gamma: format_rat(&cert.gamma),
        xi: format_rat(&cert.xi),
    }
}

/// Machine-readable run outcome; rerunning with the embedded seed and the
/// same inputs reproduces the verdict.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ResultRecord {
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub successors: Option<Vec<(Vec<String>, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_frequency: Option<f64>,
    pub timing_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
}

impl ResultRecord {
    pub fn new(verdict: impl Into<String>) -> Self {
        ResultRecord {
            verdict: verdict.into(),
            version: crate::VERSION.to_string(),
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result record serializes")
    }
}

pub fn successors_field(d: &Dist<Configuration>) -> Vec<(Vec<String>, String)> {
    d.iter()
        .map(|(c, p)| (strings(c.weights()), format_rat(p)))
        .collect()
}
