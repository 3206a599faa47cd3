//! The five subcommands. Each produces CSV/JSON artifacts in memory; writing
//! them out is left to [`Artifacts::write`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use fock_core::approx::{distance_profile_with, projection_strategy, DistanceProfile, GramMatrix, GrowthTable, WeightedSamples};
use fock_core::lattice::{parseval_sum, TruncatedLattice};
use fock_core::registry::{parse_complex, FunctionContext, FunctionRegistry};
use fock_core::{EntireFnHandle, FockError};
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cache::{GramCache, GramKey, Lookup};
use crate::checks::{self, CheckOutcome, Measurement};
use crate::config::ExperimentConfig;
use crate::format::Table;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheStatus {
    Hit,
    Stored,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheEvent {
    pub f_tag: String,
    pub degree: usize,
    pub status: CacheStatus,
    pub file: String,
}

/// Everything one command run needs besides its arguments.
pub struct Session {
    pub config: ExperimentConfig,
    pub cache: GramCache,
    pub registry: FunctionRegistry,
    pub functions: FunctionContext,
    fingerprint: String,
    stages: Vec<(String, f64)>,
    pub cache_events: Vec<CacheEvent>,
    pub warnings: Vec<String>,
}

impl Session {
    pub fn new(config: ExperimentConfig, cache: GramCache) -> Self {
        let functions = config.function_context();
        Session {
            fingerprint: config.fingerprint(),
            config,
            cache,
            registry: FunctionRegistry::builtin(),
            functions,
            stages: Vec::new(),
            cache_events: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self).with_context(|| format!("stage {name}"));
        self.stages.push((name.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    pub fn resolve(&self, spec: &str) -> Result<EntireFnHandle> {
        self.registry.resolve(spec, &self.functions).with_context(|| format!("function {spec:?}"))
    }

    /// Cached Gram matrix of `samples` up to `degree`; a rejected cache file
    /// is replaced and reported as a warning.
    pub fn gram(&mut self, samples: &WeightedSamples, degree: usize, cache: &GramCache) -> Result<GramMatrix> {
        let key = GramKey::new(&samples.label, degree, &self.config.quadrature);
        let file = cache.path_for(&key).display().to_string();
        let event = |status| CacheEvent {
            f_tag: key.f_tag.clone(),
            degree,
            status,
            file: file.clone(),
        };
        match cache.load(&key) {
            Lookup::Hit(g) => {
                self.cache_events.push(event(CacheStatus::Hit));
                return Ok(g);
            }
            Lookup::Rejected(why) => {
                self.warnings.push(format!("ignored Gram cache file {why}"));
                self.cache_events.push(event(CacheStatus::Rejected));
            }
            Lookup::Miss => {}
        }
        let g = GramMatrix::assemble(samples, degree)?;
        cache.store(&key, &g, &self.fingerprint).with_context(|| format!("writing {file}"))?;
        self.cache_events.push(event(CacheStatus::Stored));
        Ok(g)
    }
}

/// Named output files plus the JSON summary printed on stdout.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: serde_json::Value,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    config_fingerprint: &'a str,
    tool_version: &'a str,
    stages: BTreeMap<String, f64>,
    outputs: Vec<OutputEntry>,
    cache: &'a [CacheEvent],
    warnings: &'a [String],
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

impl Artifacts {
    /// Writes the outputs, `config.toml` and `run-<command>.json` into `dir`.
    pub fn write(&self, dir: &Path, command: &str, session: &Session) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        let mut outputs = Vec::new();
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            write_atomic(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
            outputs.push(OutputEntry {
                file: name.clone(),
                bytes: bytes.len(),
                sha256: hex::encode(Sha256::digest(bytes)),
            });
            written.push(p);
        }
        let cfg = dir.join("config.toml");
        write_atomic(&cfg, session.config.to_toml().as_bytes())?;
        let record = RunRecord {
            command,
            config_fingerprint: session.fingerprint(),
            tool_version: TOOL_VERSION,
            stages: session.stages.iter().cloned().collect(),
            outputs,
            cache: &session.cache_events,
            warnings: &session.warnings,
        };
        let rec = dir.join(format!("run-{command}.json"));
        write_atomic(&rec, &serde_json::to_vec_pretty(&record)?)?;
        written.push(rec);
        Ok(written)
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

pub fn parse_point(s: &str) -> Result<Complex64> {
    parse_complex(s).map_err(|e| anyhow!(e))
}

fn pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// `eval`: `re, im, log_mag, phase` per point.
pub fn eval(session: &mut Session, function: &str, points: &[Complex64]) -> Result<Artifacts> {
    let f = session.resolve(function)?;
    let points: Vec<Complex64> = if points.is_empty() {
        session.config.eval_points.iter().copied().map(pair).collect()
    } else {
        points.to_vec()
    };
    let mut t = Table::new(&["re", "im", "log_mag", "phase"]);
    session.stage("evaluate", |_| {
        for (row, &z) in points.iter().enumerate() {
            let v = f.eval(z);
            if v.log_mag().is_nan() || v.phase().is_nan() {
                return Err(anyhow!("row {row}: {function} at {z} did not evaluate"));
            }
            t.push(vec![z.re.into(), z.im.into(), v.log_mag().into(), v.phase().into()]);
        }
        Ok(())
    })?;
    let file = format!("eval-{}.csv", sanitize(function));
    let summary = serde_json::json!({
        "command": "eval",
        "function": function,
        "label": f.label(),
        "rows": t.len(),
        "config_fingerprint": session.fingerprint(),
        "output": file,
    });
    Ok(Artifacts {
        files: vec![(file, t.render().into_bytes())],
        summary,
        exit_code: 0,
    })
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Weight samples, Gram matrix and the two pipeline outputs for one config.
pub struct Pipeline {
    pub samples: WeightedSamples,
    pub target: EntireFnHandle,
}

impl Pipeline {
    pub fn prepare(session: &mut Session) -> Result<Self> {
        let f = session.resolve(&session.config.weight.clone())?;
        let target = session.resolve(&session.config.target.clone())?;
        let q = session.config.quadrature;
        let samples = session.stage("sampling", |_| Ok(WeightedSamples::new(&*f, &q)?))?;
        Ok(Pipeline { samples, target })
    }

    pub fn profile(&self, session: &mut Session, gram: &GramMatrix) -> Result<DistanceProfile> {
        let strategy = projection_strategy(&session.config.strategy)?;
        let tau = session.config.tau;
        session.stage("distance", |_| Ok(distance_profile_with(&self.samples, gram, &*self.target, &*strategy, tau)?))
    }

    pub fn growth(&self, session: &mut Session, gram: &GramMatrix) -> Result<(GrowthTable, Option<usize>)> {
        let strategy = projection_strategy(&session.config.strategy)?;
        let (tau, xs) = (session.config.tau, session.config.x_samples.clone());
        session.stage("key-estimate", |_| {
            let (table, err) = strategy.growth(&self.samples, gram, tau, &xs);
            match err {
                None => Ok((table, None)),
                Some(FockError::DegreeTooHighForQuadrature { degree, .. }) => Ok((table, Some(degree))),
                Some(e) => Err(e.into()),
            }
        })
    }
}

pub fn distance_table(p: &DistanceProfile) -> Table {
    let mut t = Table::new(&["n", "d_n", "relative", "condition", "discarded_rank", "error_bound"]);
    for f in &p.fits {
        t.push(vec![
            f.degree.into(),
            f.distance.into(),
            (f.distance / p.target_norm).into(),
            f.condition.into(),
            f.discarded_rank.into(),
            f.error_bound.into(),
        ]);
    }
    t
}

pub fn keyest_table(g: &GrowthTable, gamma: f64) -> Table {
    let mut t = Table::new(&["x0", "n", "log_k", "x0_gamma", "gap"]);
    for (i, &x0) in g.points.iter().enumerate() {
        for (n, row) in g.values.iter().enumerate() {
            let lk = row[i].ln();
            let xg = x0.powf(gamma);
            t.push(vec![x0.into(), n.into(), lk.into(), xg.into(), (lk - xg).into()]);
        }
    }
    t
}

#[derive(Serialize)]
struct DistanceSummary<'a> {
    command: &'a str,
    preset: &'a str,
    config_fingerprint: &'a str,
    weight: &'a str,
    target: &'a str,
    strategy: &'a str,
    target_norm: f64,
    verdict: fock_core::approx::Verdict,
    min_relative: f64,
    last_relative: f64,
    requested: usize,
    truncated_at: Option<usize>,
    output: &'a str,
}

pub fn distance(session: &mut Session) -> Result<Artifacts> {
    let pipe = Pipeline::prepare(session)?;
    let cache = session.cache.clone();
    let n = session.config.n_max;
    let gram = session.stage("gram", |s| s.gram(&pipe.samples, n, &cache))?;
    let p = pipe.profile(session, &gram)?;
    let rel = p.relative();
    let summary = DistanceSummary {
        command: "distance",
        preset: &session.config.preset,
        config_fingerprint: session.fingerprint(),
        weight: &session.config.weight,
        target: &session.config.target,
        strategy: &p.strategy,
        target_norm: p.target_norm,
        verdict: p.verdict(),
        min_relative: rel.iter().copied().fold(f64::INFINITY, f64::min),
        last_relative: rel.last().copied().unwrap_or(f64::NAN),
        requested: p.requested,
        truncated_at: p.truncated_at,
        output: "distance.csv",
    };
    let summary = serde_json::to_value(&summary)?;
    Ok(Artifacts {
        files: vec![
            ("distance.csv".into(), distance_table(&p).render().into_bytes()),
            ("distance.json".into(), json_bytes(&summary)?),
        ],
        summary,
        exit_code: 0,
    })
}

pub fn keyest(session: &mut Session) -> Result<Artifacts> {
    let pipe = Pipeline::prepare(session)?;
    let cache = session.cache.clone();
    let n = session.config.n_max;
    let gram = session.stage("gram", |s| s.gram(&pipe.samples, n, &cache))?;
    let (g, truncated) = pipe.growth(session, &gram)?;
    let t = keyest_table(&g, session.config.params.gamma);
    let gap = g
        .values
        .iter()
        .flat_map(|row| row.iter().zip(&g.points).map(|(k, x)| k.ln() - x.powf(session.config.params.gamma)))
        .fold(f64::NEG_INFINITY, f64::max);
    let summary = serde_json::json!({
        "command": "keyest",
        "preset": session.config.preset,
        "config_fingerprint": session.fingerprint(),
        "weight": session.config.weight,
        "strategy": session.config.strategy,
        "max_gap": gap,
        "truncated_at": truncated,
        "output": "keyest.csv",
    });
    Ok(Artifacts {
        files: vec![("keyest.csv".into(), t.render().into_bytes())],
        summary,
        exit_code: 0,
    })
}

pub fn cauchy(session: &mut Session) -> Result<Artifacts> {
    let c = session.config.cauchy.clone();
    let f1 = session.resolve(&c.f1)?;
    let f2 = session.resolve(&c.f2)?;
    let lattice = TruncatedLattice::new(session.config.lattice_radius);
    let q = session.config.quadrature;
    let mut t = Table::new(&["abs_z", "angle", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "tail_bound"]);
    let mut worst = 0.0f64;
    session.stage("parseval", |_| {
        for (row, &p) in c.points.iter().enumerate() {
            let z = pair(p);
            let r = parseval_sum(f1.clone(), f2.clone(), pair(c.mu), z, &lattice, &q).with_context(|| format!("row {row} (z = {z})"))?;
            worst = worst.max(r.residual / r.tail_bound);
            t.push(vec![
                z.norm().into(),
                z.arg().into(),
                r.lhs.re.into(),
                r.lhs.im.into(),
                r.rhs.re.into(),
                r.rhs.im.into(),
                r.residual.into(),
                r.tail_bound.into(),
            ]);
        }
        Ok(())
    })?;
    let summary = serde_json::json!({
        "command": "cauchy",
        "config_fingerprint": session.fingerprint(),
        "rows": t.len(),
        "max_residual_over_tail_bound": worst,
        "output": "cauchy.csv",
    });
    Ok(Artifacts {
        files: vec![("cauchy.csv".into(), t.render().into_bytes())],
        summary,
        exit_code: 0,
    })
}

/// Renders the distance and key-estimate tables with the given Gram matrix.
fn pipeline_csv(session: &mut Session, pipe: &Pipeline, gram: &GramMatrix) -> Result<Vec<u8>> {
    let p = pipe.profile(session, gram)?;
    let (g, _) = pipe.growth(session, gram)?;
    let mut out = distance_table(&p).render().into_bytes();
    out.extend(keyest_table(&g, session.config.params.gamma).render().into_bytes());
    Ok(out)
}

/// Criterion 11 as far as one process can check it: the configured pipeline
/// renders identical CSV from the session cache, from a cold cache and from
/// the warm cache that run leaves behind.
pub fn determinism_check(session: &mut Session) -> CheckOutcome {
    let mut run = || -> Result<Vec<Measurement>> {
        let pipe = Pipeline::prepare(session)?;
        let n = session.config.n_max;
        let shared = session.cache.clone();
        let first = session.gram(&pipe.samples, n, &shared)?;
        let a = pipeline_csv(session, &pipe, &first)?;

        let scratch = tempfile::tempdir()?;
        let fresh = GramCache::new(scratch.path());
        let cold = session.gram(&pipe.samples, n, &fresh)?;
        let b = pipeline_csv(session, &pipe, &cold)?;
        let warm = session.gram(&pipe.samples, n, &fresh)?;
        let c = pipeline_csv(session, &pipe, &warm)?;
        // the scratch cache's events are not part of the session record
        session.cache_events.retain(|e| !e.file.starts_with(&scratch.path().display().to_string()));

        let differing = |x: &[u8], y: &[u8]| x.iter().zip(y).filter(|(p, q)| p != q).count() + x.len().abs_diff(y.len());
        Ok(vec![
            Measurement::at_most("bytes differing, session cache vs cold", differing(&a, &b) as f64, 0.0),
            Measurement::at_most("bytes differing, cold vs warm cache", differing(&b, &c) as f64, 0.0),
        ])
    };
    let r = run().map_err(|e| format!("{e:#}"));
    CheckOutcome::from_result(11, checks::CRITERIA[10].1, r)
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub config_fingerprint: String,
    pub tool_version: String,
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<CheckOutcome>,
    pub warnings: Vec<String>,
}

/// Runs criteria 1 to 11; criterion 9 uses the configured parameter chain
/// and contour, criterion 11 the configured pipeline.
pub fn verify(session: &mut Session) -> Result<Artifacts> {
    let params = session.config.params;
    let contour = session.config.contour;
    let mut outcomes = Vec::new();
    let fixed: [(&str, fn() -> CheckOutcome); 8] = [
        ("check-1", checks::criterion_1),
        ("check-2", checks::criterion_2),
        ("check-3", checks::criterion_3),
        ("check-4", checks::criterion_4),
        ("check-5", checks::criterion_5),
        ("check-6", checks::criterion_6),
        ("check-8", checks::criterion_8),
        ("check-10", checks::criterion_10),
    ];
    for (stage, f) in fixed {
        outcomes.push(session.stage(stage, |_| Ok(f()))?);
    }
    outcomes.push(session.stage("check-7", |_| Ok(checks::criterion_7(params)))?);
    outcomes.push(session.stage("check-9", |_| Ok(checks::criterion_9(params, contour)))?);
    outcomes.push(session.stage("check-11", |s| Ok(determinism_check(s)))?);
    outcomes.sort_by_key(|o| o.id);

    let first_failure = outcomes.iter().find(|o| !o.pass).map(CheckOutcome::line);
    let report = VerifyReport {
        config_fingerprint: session.fingerprint().to_string(),
        tool_version: TOOL_VERSION.to_string(),
        passed: first_failure.is_none(),
        first_failure,
        checks: outcomes,
        warnings: session.warnings.clone(),
    };
    let summary = serde_json::to_value(&report)?;
    Ok(Artifacts {
        files: vec![("verify.json".into(), json_bytes(&summary)?)],
        exit_code: if report.passed { 0 } else { 1 },
        summary,
    })
}
