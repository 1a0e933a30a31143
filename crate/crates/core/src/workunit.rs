//! Prefix workunits: generation, file formats, a local worker pool with
//! resume, and quorum merging of result files.
//!
//! Workunit file:
//! ```text
//! DLSWU1 <n> <cs-code> <plan-hash> <k> <count>
//! <id> <s0> <s1> ... <s(k-1)>
//! ```
//! Results file:
//! ```text
//! DLSRES1 <plan-hash> <run-tag>
//! <id> <count> <nodes>
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::plan::{
    compute_hourglass_plan, compute_plan, default_lookahead, place_lookahead, row_major_plan,
    FillPlan, FixedPrefix,
};
use crate::square::{ConstraintSet, Order};
use crate::symenum::{SymEnumerator, SymMode};

pub const WORKUNIT_MAGIC: &str = "DLSWU1";
pub const RESULTS_MAGIC: &str = "DLSRES1";

/// Prefixes an I/O error with the path it concerns.
fn at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workunit {
    pub id: u64,
    pub symbols: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkunitHeader {
    pub order: Order,
    pub constraints: ConstraintSet,
    pub plan_hash: String,
    pub depth: usize,
    pub count: u64,
}

impl WorkunitHeader {
    fn line(&self) -> String {
        format!(
            "{WORKUNIT_MAGIC} {} {} {} {} {}",
            self.order,
            self.constraints.code(),
            self.plan_hash,
            self.depth,
            self.count
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkunitResult {
    pub id: u64,
    pub count: u128,
    pub nodes: u64,
}

/// Smallest depth giving at least 1000 workunits; 10 for order 9.
pub fn default_depth(plan: &FillPlan) -> usize {
    if plan.n() == 9 && plan.constraints().has_diagonals() {
        return 10.min(plan.len());
    }
    let mut e = Engine::new(plan);
    for k in 1..=plan.len() {
        let mut c = 0u64;
        e.walk(k, |_| {
            c += 1;
            c < 1000
        });
        if c >= 1000 {
            return k;
        }
    }
    plan.len()
}

/// Every valid assignment of the first `k` plan steps, in the engine's
/// branch order, numbered from 0.
pub fn generate(plan: &FillPlan, k: usize) -> Result<Vec<Workunit>> {
    let mut out = Vec::new();
    for_each_prefix(plan, k, |id, symbols| {
        out.push(Workunit {
            id,
            symbols: symbols.to_vec(),
        })
    })?;
    Ok(out)
}

fn for_each_prefix<F: FnMut(u64, &[u8])>(plan: &FillPlan, k: usize, mut f: F) -> Result<u64> {
    if k == 0 || k > plan.len() {
        return Err(Error::InvalidDepth {
            depth: k,
            reason: format!("must lie in 1..={}", plan.len()),
        });
    }
    let mut e = Engine::new(plan);
    let mut id = 0u64;
    let mut buf = Vec::with_capacity(k);
    e.walk(k, |e| {
        buf.clear();
        buf.extend((0..k).map(|d| e.symbol_at(d)));
        f(id, &buf);
        id += 1;
        true
    });
    Ok(id)
}

/// Writes the workunit file for `plan` at depth `k`; returns the count.
pub fn generate_to_file(plan: &FillPlan, k: usize, path: &Path) -> Result<u64> {
    let mut body = String::new();
    let count = for_each_prefix(plan, k, |id, symbols| {
        let _ = write!(body, "{id}");
        for s in symbols {
            let _ = write!(body, " {s}");
        }
        body.push('\n');
    })?;
    let header = WorkunitHeader {
        order: plan.order(),
        constraints: plan.constraints(),
        plan_hash: plan.fingerprint(),
        depth: k,
        count,
    };
    let mut f = File::create(path).map_err(at(path))?;
    f.write_all(header.line().as_bytes())?;
    f.write_all(b"\n")?;
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(count)
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a workunit file, checking the header, id sequence and symbol range.
pub fn read_workunits(path: &Path) -> Result<(WorkunitHeader, Vec<Workunit>)> {
    let reader = BufReader::new(File::open(path).map_err(at(path))?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    let f: Vec<&str> = first.split_whitespace().collect();
    if f.len() != 6 || f[0] != WORKUNIT_MAGIC {
        return Err(format_err(path, 1, format!("expected '{WORKUNIT_MAGIC} <n> <cs> <hash> <k> <count>'")));
    }
    let num = |s: &str, what: &str| -> Result<u64> {
        s.parse().map_err(|_| format_err(path, 1, format!("bad {what} '{s}'")))
    };
    let order = Order::new(num(f[1], "order")? as usize)?;
    let constraints: ConstraintSet = f[2].parse()?;
    let header = WorkunitHeader {
        order,
        constraints,
        plan_hash: f[3].to_string(),
        depth: num(f[4], "depth")? as usize,
        count: num(f[5], "count")?,
    };
    let n = order.get();
    let mut units = Vec::with_capacity(header.count as usize);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let id: u64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format_err(path, lineno, "bad id"))?;
        if id != units.len() as u64 {
            return Err(format_err(path, lineno, format!("expected id {}, found {id}", units.len())));
        }
        let symbols: Vec<u8> = it
            .map(|t| t.parse::<u8>().ok().filter(|&v| (v as usize) < n))
            .collect::<Option<_>>()
            .ok_or_else(|| format_err(path, lineno, "bad symbol"))?;
        if symbols.len() != header.depth {
            return Err(format_err(
                path,
                lineno,
                format!("{} symbols, header says {}", symbols.len(), header.depth),
            ));
        }
        units.push(Workunit { id, symbols });
    }
    if units.len() as u64 != header.count {
        return Err(format_err(
            path,
            1,
            format!("header announces {} workunits, file holds {}", header.count, units.len()),
        ));
    }
    Ok((header, units))
}

/// Plans a workunit file may have been generated from.
pub fn candidate_plans(order: Order, cs: ConstraintSet) -> Vec<FillPlan> {
    let mut out = Vec::new();
    let mut push = |p: Result<FillPlan>| {
        if let Ok(p) = p {
            if let Some(w) = default_lookahead(&p) {
                if let Ok(la) = place_lookahead(&p, w) {
                    out.push(la);
                }
            }
            out.push(p);
        }
    };
    for fixed in [FixedPrefix::FirstRow, FixedPrefix::FirstRowAndColumn] {
        push(compute_plan(order, cs, fixed));
        push(row_major_plan(order, cs, fixed));
    }
    if cs.has_diagonals() {
        push(compute_hourglass_plan(order, cs));
    }
    out
}

/// Finds the plan whose fingerprint matches the header.
pub fn resolve_plan(header: &WorkunitHeader) -> Result<FillPlan> {
    candidate_plans(header.order, header.constraints)
        .into_iter()
        .find(|p| p.fingerprint() == header.plan_hash)
        .ok_or_else(|| {
            Error::Fingerprint(format!(
                "no known plan for order {} {} has fingerprint {}",
                header.order,
                header.constraints.code(),
                header.plan_hash
            ))
        })
}

#[derive(Clone, Debug)]
pub struct ResultsFile {
    pub plan_hash: String,
    pub run_tag: String,
    pub results: Vec<WorkunitResult>,
    /// Lines that could not be parsed, with their 1-based line number.
    pub corrupt: Vec<(usize, String)>,
}

/// Reads a results file. Unparseable lines are collected, not fatal.
pub fn read_results(path: &Path) -> Result<ResultsFile> {
    let mut text = String::new();
    File::open(path).map_err(at(path))?.read_to_string(&mut text)?;
    let mut lines = text.split('\n');
    let first = lines.next().unwrap_or("");
    let f: Vec<&str> = first.split_whitespace().collect();
    if f.len() != 3 || f[0] != RESULTS_MAGIC {
        return Err(format_err(path, 1, format!("expected '{RESULTS_MAGIC} <hash> <run-tag>'")));
    }
    let mut out = ResultsFile {
        plan_hash: f[1].to_string(),
        run_tag: f[2].to_string(),
        results: Vec::new(),
        corrupt: Vec::new(),
    };
    let complete = text.ends_with('\n');
    let rest: Vec<&str> = lines.collect();
    for (i, line) in rest.iter().enumerate() {
        let lineno = i + 2;
        let last = i + 1 == rest.len();
        if line.trim().is_empty() {
            continue;
        }
        if last && !complete {
            out.corrupt.push((lineno, format!("unterminated line '{line}'")));
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let parsed = (t.len() == 3)
            .then(|| Some((t[0].parse().ok()?, t[1].parse().ok()?, t[2].parse().ok()?)))
            .flatten();
        match parsed {
            Some((id, count, nodes)) => out.results.push(WorkunitResult { id, count, nodes }),
            None => out.corrupt.push((lineno, format!("cannot parse '{line}'"))),
        }
    }
    Ok(out)
}

/// Which engine counts the workunits of a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchEngine {
    Plain,
    /// Symmetry-broken engine, counting each hourglass through its
    /// canonical form so per-workunit counts match the plain engine.
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub input: PathBuf,
    pub output: PathBuf,
    pub threads: usize,
    pub range: Option<Range<u64>>,
    pub run_tag: String,
    pub engine: BatchEngine,
    /// Stop after this many workunits have been counted in this call.
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchManifest {
    pub plan_hash: String,
    pub run_tag: String,
    pub engine: BatchEngine,
    pub total: u64,
    pub selected: u64,
    pub completed: u64,
    pub pending: u64,
    pub failed: Vec<u64>,
    pub corrupt_lines: Vec<usize>,
    #[serde(serialize_with = "ser_u128")]
    pub running_sum: u128,
    pub nodes: u64,
    pub seconds: f64,
}

fn ser_u128<S: serde::Serializer>(v: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn manifest_path(results: &Path) -> PathBuf {
    let mut p = results.as_os_str().to_owned();
    p.push(".manifest.json");
    PathBuf::from(p)
}

enum Counter {
    Plain(Box<Engine>),
    Symmetric(Box<SymEnumerator>),
}

impl Counter {
    fn count(&mut self, symbols: &[u8]) -> Result<(u128, u64)> {
        match self {
            Counter::Plain(e) => {
                e.apply_prefix(symbols)?;
                Ok(e.count_from_here())
            }
            Counter::Symmetric(s) => {
                let r = s.run_prefix(symbols, SymMode::Representative)?;
                Ok((r.total, r.nodes))
            }
        }
    }
}

fn open_results(opts: &RunOptions, plan_hash: &str) -> Result<(File, ResultsFile)> {
    if opts.run_tag.is_empty() || opts.run_tag.contains(char::is_whitespace) {
        return Err(Error::Unsupported(format!("invalid run tag '{}'", opts.run_tag)));
    }
    if opts.output.exists() {
        let existing = read_results(&opts.output)?;
        if existing.plan_hash != plan_hash {
            return Err(Error::Fingerprint(format!(
                "{} belongs to plan {}, workunits to {plan_hash}",
                opts.output.display(),
                existing.plan_hash
            )));
        }
        if existing.run_tag != opts.run_tag {
            return Err(Error::Fingerprint(format!(
                "{} was written by run '{}', not '{}'",
                opts.output.display(),
                existing.run_tag,
                opts.run_tag
            )));
        }
        let mut f = OpenOptions::new().read(true).append(true).open(&opts.output).map_err(at(&opts.output))?;
        let len = f.metadata()?.len();
        if len > 0 {
            let mut last = [0u8; 1];
            f.seek(SeekFrom::Start(len - 1))?;
            f.read_exact(&mut last)?;
            if last[0] != b'\n' {
                f.write_all(b"\n")?;
            }
        }
        Ok((f, existing))
    } else {
        let mut f = OpenOptions::new().create_new(true).append(true).open(&opts.output).map_err(at(&opts.output))?;
        f.write_all(format!("{RESULTS_MAGIC} {plan_hash} {}\n", opts.run_tag).as_bytes())?;
        let fresh = ResultsFile {
            plan_hash: plan_hash.to_string(),
            run_tag: opts.run_tag.clone(),
            results: Vec::new(),
            corrupt: Vec::new(),
        };
        Ok((f, fresh))
    }
}

/// Counts every selected workunit not already in the results file, appending
/// one line per workunit, and writes the manifest next to the results.
pub fn run_batch(opts: &RunOptions) -> Result<BatchManifest> {
    let start = Instant::now();
    let (header, units) = read_workunits(&opts.input)?;
    let plan = resolve_plan(&header)?;
    let (file, existing) = open_results(opts, &header.plan_hash)?;
    for (line, msg) in &existing.corrupt {
        eprintln!("{}:{line}: {msg}; the workunit will be recounted", opts.output.display());
    }

    let sym = match opts.engine {
        BatchEngine::Plain => None,
        BatchEngine::Symmetric => {
            let s = SymEnumerator::new(plan.order(), plan.constraints())?;
            if header.depth > s.boundary() || !plan.shares_prefix(s.plan(), header.depth) {
                return Err(Error::Fingerprint(
                    "workunit prefixes do not fit the symmetry-broken plan".into(),
                ));
            }
            Some(s)
        }
    };

    let in_range = |id: u64| opts.range.as_ref().is_none_or(|r| r.contains(&id));
    let known: HashSet<u64> = units.iter().map(|u| u.id).collect();
    let mut done: BTreeMap<u64, u128> = BTreeMap::new();
    for r in &existing.results {
        if known.contains(&r.id) && in_range(r.id) {
            done.insert(r.id, r.count);
        }
    }
    let mut pending: Vec<&Workunit> = units
        .iter()
        .filter(|u| in_range(u.id) && !done.contains_key(&u.id))
        .collect();
    if let Some(limit) = opts.limit {
        pending.truncate(limit);
    }
    let selected = units.iter().filter(|u| in_range(u.id)).count() as u64;

    let threads = if opts.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        opts.threads
    }
    .min(pending.len().max(1));

    let next = AtomicUsize::new(0);
    let out = Mutex::new(file);
    // Finished (id, count) pairs, failed ids, nodes.
    type Collected = (Vec<(u64, u128)>, Vec<u64>, u64);
    let collected: Mutex<Collected> = Mutex::new((Vec::new(), Vec::new(), 0));
    let io_error: Mutex<Option<std::io::Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| {
                let mut counter = match &sym {
                    Some(s) => Counter::Symmetric(Box::new(s.clone())),
                    None => Counter::Plain(Box::new(Engine::new(&plan))),
                };
                let mut local = (Vec::new(), Vec::new(), 0u64);
                loop {
                    if io_error.lock().unwrap().is_some() {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(u) = pending.get(i) else { break };
                    match counter.count(&u.symbols) {
                        Ok((count, nodes)) => {
                            let line = format!("{} {count} {nodes}\n", u.id);
                            let res = out.lock().unwrap().write_all(line.as_bytes());
                            if let Err(e) = res {
                                *io_error.lock().unwrap() = Some(e);
                                break;
                            }
                            local.0.push((u.id, count));
                            local.2 += nodes;
                        }
                        Err(_) => local.1.push(u.id),
                    }
                }
                let mut c = collected.lock().unwrap();
                c.0.extend(local.0);
                c.1.extend(local.1);
                c.2 += local.2;
            });
        }
    });
    if let Some(e) = io_error.into_inner().unwrap() {
        return Err(e.into());
    }
    out.into_inner().unwrap().flush()?;

    let (new, mut failed, nodes) = collected.into_inner().unwrap();
    failed.sort_unstable();
    done.extend(new);
    let completed = done.len() as u64;
    let manifest = BatchManifest {
        plan_hash: header.plan_hash.clone(),
        run_tag: opts.run_tag.clone(),
        engine: opts.engine,
        total: header.count,
        selected,
        completed,
        pending: selected - completed - failed.len() as u64,
        failed,
        corrupt_lines: existing.corrupt.iter().map(|c| c.0).collect(),
        running_sum: done.values().sum(),
        nodes,
        seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(
        manifest_path(&opts.output),
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Unsupported(e.to_string()))?,
    )?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct Disagreement {
    pub id: u64,
    /// `(run tag, count)` pairs seen for this id.
    pub reports: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MergeReport {
    pub plan_hash: String,
    pub quorum: usize,
    pub ids_seen: u64,
    pub validated: u64,
    /// Ids whose results disagree; they need to be issued again.
    pub disagreements: Vec<Disagreement>,
    /// Ids with fewer than `quorum` agreeing run tags and no disagreement.
    pub under_quorum: Vec<u64>,
    /// Ids with no result at all.
    pub missing: Vec<u64>,
    pub corrupt_lines: Vec<String>,
    #[serde(serialize_with = "ser_u128")]
    pub validated_sum: u128,
    /// Present only when every id validated.
    #[serde(serialize_with = "ser_opt_u128")]
    pub total: Option<u128>,
}

fn ser_opt_u128<S: serde::Serializer>(v: &Option<u128>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&x.to_string()),
        None => s.serialize_none(),
    }
}

/// Merges result files. An id validates when exactly one count value is
/// reported by at least `quorum` distinct run tags. The total is given only
/// when every id validates; with `units` the expected ids come from that
/// workunit file, otherwise from `0..=max id`.
pub fn merge(files: &[PathBuf], quorum: usize, units: Option<&Path>) -> Result<MergeReport> {
    if files.is_empty() {
        return Err(Error::Unsupported("no results files given".into()));
    }
    if quorum == 0 {
        return Err(Error::Unsupported("quorum must be at least 1".into()));
    }
    let mut hash: Option<String> = None;
    let mut seen: BTreeMap<u64, BTreeMap<u128, BTreeSet<String>>> = BTreeMap::new();
    let mut corrupt_lines = Vec::new();
    for path in files {
        let r = read_results(path)?;
        match &hash {
            None => hash = Some(r.plan_hash.clone()),
            Some(h) if *h != r.plan_hash => {
                return Err(Error::Fingerprint(format!(
                    "{} belongs to plan {}, expected {h}",
                    path.display(),
                    r.plan_hash
                )))
            }
            _ => {}
        }
        for (line, msg) in r.corrupt {
            corrupt_lines.push(format!("{}:{line}: {msg}", path.display()));
        }
        for res in r.results {
            seen.entry(res.id)
                .or_default()
                .entry(res.count)
                .or_default()
                .insert(r.run_tag.clone());
        }
    }
    let plan_hash = hash.unwrap_or_default();

    let expected: Vec<u64> = match units {
        Some(p) => {
            let (header, list) = read_workunits(p)?;
            if header.plan_hash != plan_hash {
                return Err(Error::Fingerprint(format!(
                    "{} belongs to plan {}, results to {plan_hash}",
                    p.display(),
                    header.plan_hash
                )));
            }
            list.iter().map(|u| u.id).collect()
        }
        None => seen.keys().next_back().map_or(Vec::new(), |&m| (0..=m).collect()),
    };

    let mut report = MergeReport {
        plan_hash,
        quorum,
        ids_seen: seen.len() as u64,
        validated: 0,
        disagreements: Vec::new(),
        under_quorum: Vec::new(),
        missing: Vec::new(),
        corrupt_lines,
        validated_sum: 0,
        total: None,
    };
    for id in &expected {
        let Some(values) = seen.get(id) else {
            report.missing.push(*id);
            continue;
        };
        let winners: Vec<u128> = values
            .iter()
            .filter(|(_, tags)| tags.len() >= quorum)
            .map(|(&c, _)| c)
            .collect();
        if values.len() > 1 {
            report.disagreements.push(Disagreement {
                id: *id,
                reports: values
                    .iter()
                    .flat_map(|(c, tags)| tags.iter().map(move |t| (t.clone(), c.to_string())))
                    .collect(),
            });
        }
        if winners.len() == 1 {
            report.validated += 1;
            report.validated_sum += winners[0];
        } else if values.len() == 1 {
            report.under_quorum.push(*id);
        }
    }
    let unknown = seen.keys().any(|id| expected.binary_search(id).is_err());
    if unknown {
        return Err(Error::Fingerprint("results name ids outside the workunit file".into()));
    }
    if report.validated == expected.len() as u64 {
        report.total = Some(report.validated_sum);
    }
    Ok(report)
}
