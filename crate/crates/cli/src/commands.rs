//! One function per verb. Files are processed on a worker pool; results are
//! printed and summarized in sorted input order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Duration;

use histcad::analysis::{analysis_json, analyze_document};
use histcad::constraints::{check_satisfied, solve, Pin};
use histcad::flatten::flatten_model;
use histcad::format::{import_hierarchical, quantize_document, serialize_document};
use histcad::geomexec::{
    chamfer_distance, document_samples_at, execute_document_at, read_xyz, write_xyz, DocumentStatus, MetricReport,
    CHAMFER_DISPLAY_SCALE, SAMPLE_SEED,
};
use histcad::model::{validate_document, Document};
use histcad::nlt::{
    annotate as annotate_one, append_log, build_prompt, document_prompt, logged_hashes, request_hash, transcribe,
    HttpTransport, RetryPolicy, Task,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::inputs::{load_document, stem, FileError};
use crate::CliError;

/// What one file produced: report lines and whether it succeeded.
struct Outcome {
    lines: Vec<String>,
    ok: bool,
}

impl Outcome {
    fn ok(lines: Vec<String>) -> Self {
        Outcome { lines, ok: true }
    }
}

/// Runs `f` on every file with `cfg.jobs` workers. A panic or error in one
/// file becomes that file's failure.
fn par_files<T: Send>(
    cfg: &RunConfig,
    files: &[PathBuf],
    f: impl Fn(&Path) -> Result<T, FileError> + Sync,
) -> Vec<Result<T, FileError>> {
    let work = || {
        files
            .par_iter()
            .map(|p| {
                catch_unwind(AssertUnwindSafe(|| f(p))).unwrap_or_else(|panic| {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_default();
                    Err(FileError::new("INTERNAL_ERROR", msg))
                })
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Prints each file's report in order and returns the number of failures.
fn report(files: &[PathBuf], outcomes: Vec<Result<Outcome, FileError>>) -> usize {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut failed = 0;
    for (path, outcome) in files.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                if !o.ok {
                    failed += 1;
                }
                for line in o.lines {
                    let _ = writeln!(out, "{line}");
                }
            }
            Err(e) => {
                failed += 1;
                log::warn!("{}: {}", path.display(), e);
                let _ = writeln!(out, "{}: {}", path.display(), e);
            }
        }
    }
    failed
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    std::fs::write(path, bytes).map_err(|e| FileError::new("IO_ERROR", format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> FileError + '_ {
    move |e| FileError::new("IO_ERROR", format!("{}: {e}", path.display()))
}

pub fn validate(cfg: &RunConfig, files: &[PathBuf]) -> Result<bool, CliError> {
    let outcomes = par_files(cfg, files, |path| {
        let loaded = load_document(path, cfg.strict)?;
        let mut problems: Vec<String> = validate_document(&loaded.document).violations.iter().map(|v| v.to_string()).collect();
        if let Some(tol) = cfg.tol {
            for (i, part) in loaded.document.parts.iter().enumerate() {
                for c in check_satisfied(&part.sketch, tol).failures() {
                    problems.push(format!("UNSATISFIED part={i} constraint={}: residual {:e} exceeds {tol:e}", c.index, c.residual));
                }
            }
        }
        let mut lines = vec![format!("{}: {}", path.display(), if problems.is_empty() { "ok" } else { "invalid" })];
        lines.extend(loaded.warnings.iter().map(|w| format!("  warning: {w}")));
        lines.extend(problems.iter().map(|p| format!("  {p}")));
        Ok(Outcome { lines, ok: problems.is_empty() })
    });
    let failed = report(files, outcomes);
    println!("{} files, {} invalid", files.len(), failed);
    Ok(failed == 0)
}

pub fn flatten(cfg: &RunConfig, files: &[PathBuf], quantize: Option<u32>) -> Result<bool, CliError> {
    let out = cfg.out_dir()?;
    let outcomes = par_files(cfg, files, |path| {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let model = import_hierarchical(&text).map_err(|e| FileError::new(e.code(), e.to_string()))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let (mut doc, reports) = flatten_model(&model, &name).map_err(|e| FileError::new(e.code(), e.to_string()))?;
        if let Some(steps) = quantize {
            doc = quantize_document(&doc, steps);
        }
        let target = out.join(format!("{}.hcad", stem(path)));
        write_bytes(&target, serialize_document(&doc).as_bytes())?;
        let prims: usize = doc.parts.iter().map(|p| p.sketch.primitives.len()).sum();
        let pruned: usize = reports.iter().map(|r| r.prune_log.entries.len()).sum();
        let cons: usize = doc.parts.iter().map(|p| p.sketch.constraints.len()).sum();
        Ok(Outcome::ok(vec![format!(
            "{} -> {}: {} parts, {} primitives, {} constraints, {} pruned",
            path.display(),
            target.display(),
            doc.parts.len(),
            prims,
            cons,
            pruned
        )]))
    });
    let failed = report(files, outcomes);
    println!("{} files, {} failed", files.len(), failed);
    Ok(failed == 0)
}

pub fn analyze(cfg: &RunConfig, files: &[PathBuf]) -> Result<bool, CliError> {
    let out = cfg.out_dir()?;
    let outcomes = par_files(cfg, files, |path| {
        let doc = load_document(path, cfg.strict)?.document;
        let analysis = analyze_document(&doc);
        let target = out.join(format!("{}.analysis.json", stem(path)));
        let mut text = serde_json::to_string_pretty(&analysis_json(&analysis)).expect("json values serialize");
        text.push('\n');
        write_bytes(&target, text.as_bytes())?;
        let loops: usize = analysis.parts.iter().map(|p| p.dict.outers.iter().map(|o| 1 + o.holes.len()).sum::<usize>()).sum();
        let mut lines = vec![format!(
            "{} -> {}: {} parts, {} loops, {} relations",
            path.display(),
            target.display(),
            analysis.parts.len(),
            loops,
            analysis.relations.len()
        )];
        let errors: Vec<String> = analysis
            .parts
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.error.as_ref().map(|(_, m)| format!("  part {}: {m}", i + 1)))
            .collect();
        let ok = errors.is_empty();
        lines.extend(errors);
        Ok(Outcome { lines, ok })
    });
    let failed = report(files, outcomes);
    println!("{} files, {} failed", files.len(), failed);
    Ok(failed == 0)
}

pub fn exec(cfg: &RunConfig, files: &[PathBuf]) -> Result<bool, CliError> {
    let out = cfg.out_dir()?;
    let results = par_files(cfg, files, |path| {
        let doc = load_document(path, cfg.strict)?.document;
        let exec = execute_document_at(&doc, cfg.grid).map_err(|e| FileError::new(e.code(), e.to_string()))?;
        let name = stem(path);
        for (k, mesh) in exec.meshes.iter().enumerate() {
            let target = out.join(format!("{name}.part{}.stl", k + 1));
            let f = File::create(&target).map_err(io_err(&target))?;
            let mut w = BufWriter::new(f);
            mesh.write_stl(&mut w).and_then(|_| w.flush()).map_err(io_err(&target))?;
        }
        let samples = exec.field.surface_samples(cfg.samples, SAMPLE_SEED);
        let xyz = out.join(format!("{name}.xyz"));
        let mut buf = Vec::new();
        write_xyz(&samples, &mut buf).map_err(io_err(&xyz))?;
        write_bytes(&xyz, &buf)?;
        Ok((exec.field.volume(), exec.meshes.len()))
    });
    let mut status_log = String::new();
    let mut outcomes = Vec::new();
    for (path, r) in files.iter().zip(results) {
        let entry = match &r {
            Ok((volume, parts)) => json!({"file": path.display().to_string(), "ok": true, "volume": volume, "parts": parts}),
            Err(e) => json!({"file": path.display().to_string(), "ok": false, "code": e.code, "message": e.message}),
        };
        status_log.push_str(&entry.to_string());
        status_log.push('\n');
        outcomes.push(r.map(|(volume, parts)| {
            Outcome::ok(vec![format!("{}: ok, {parts} part meshes, volume {volume}", path.display())])
        }));
    }
    std::fs::write(out.join("status.jsonl"), status_log)
        .map_err(|e| CliError::Usage(format!("cannot write status log: {e}")))?;
    let failed = report(files, outcomes);
    println!("{} files, {} failed, IR {:.4}", files.len(), failed, failed as f64 / files.len() as f64);
    Ok(failed == 0)
}

/// A pin as given on the command line: 0-based part, parameter path and value.
fn parse_pin(spec: &str) -> Result<(usize, String, f64), CliError> {
    let bad = || CliError::Usage(format!("invalid pin `{spec}`; expected [PART:]ID.PARAM=VALUE"));
    let (lhs, value) = spec.split_once('=').ok_or_else(bad)?;
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    let (part, path) = match lhs.split_once(':') {
        Some((p, path)) => (p.trim().parse::<usize>().ok().filter(|&p| p >= 1).ok_or_else(bad)? - 1, path),
        None => (0, lhs),
    };
    Ok((part, path.trim().to_string(), value))
}

pub fn edit(cfg: &RunConfig, files: &[PathBuf], pin_specs: &[String]) -> Result<bool, CliError> {
    let mut pins: BTreeMap<usize, Vec<(String, f64)>> = BTreeMap::new();
    for spec in pin_specs {
        let (part, path, value) = parse_pin(spec)?;
        pins.entry(part).or_default().push((path, value));
    }
    let out = cfg.out_dir()?;
    let outcomes = par_files(cfg, files, |path| {
        let mut doc = load_document(path, cfg.strict)?.document;
        if let Some(&part) = pins.keys().find(|&&p| p >= doc.parts.len()) {
            return Err(FileError::new("UNKNOWN_VARIABLE", format!("part {} does not exist", part + 1)));
        }
        let mut lines = vec![format!("{}:", path.display())];
        let mut ok = true;
        for (i, part) in doc.parts.iter_mut().enumerate() {
            let resolved: Vec<Pin> = pins
                .get(&i)
                .map(|list| list.iter().map(|(p, v)| Pin::parse(p, *v, &part.sketch)).collect::<Result<_, _>>())
                .transpose()
                .map_err(|e| FileError::new(e.code(), e.to_string()))?
                .unwrap_or_default();
            match solve(&part.sketch, &resolved) {
                Ok(sol) => {
                    let r = &sol.report;
                    let mut line = format!(
                        "  part {}: converged in {} iterations, max residual {:e}, {} pins",
                        i + 1,
                        r.iterations,
                        r.max_residual,
                        r.pins
                    );
                    if let Some(tol) = cfg.tol {
                        let check = check_satisfied(&sol.sketch, tol);
                        if !check.all_pass() {
                            ok = false;
                            line.push_str(&format!("; UNSATISFIED at tol {tol:e}: {check}"));
                        }
                    }
                    lines.push(line);
                    part.sketch = sol.sketch;
                }
                Err(e) => {
                    ok = false;
                    lines.push(format!("  part {}: {e}", i + 1));
                }
            }
        }
        if ok {
            let target = out.join(format!("{}.hcad", stem(path)));
            write_bytes(&target, serialize_document(&doc).as_bytes())?;
            lines[0] = format!("{} -> {}", path.display(), target.display());
        }
        Ok(Outcome { lines, ok })
    });
    let failed = report(files, outcomes);
    println!("{} files, {} failed", files.len(), failed);
    Ok(failed == 0)
}

pub fn nlt(cfg: &RunConfig, files: &[PathBuf]) -> Result<bool, CliError> {
    let out = cfg.out_dir()?;
    let outcomes = par_files(cfg, files, |path| {
        let doc = load_document(path, cfg.strict)?.document;
        let nlt = transcribe(&doc);
        let text = nlt.text();
        let target = out.join(format!("{}.nlt.txt", stem(path)));
        write_bytes(&target, text.as_bytes())?;
        let mut lines = vec![format!("{} -> {}", path.display(), target.display())];
        if let Some(task) = cfg.task {
            let prompt = build_prompt(text.trim_end(), task, nlt.is_multi_part());
            let p = out.join(format!("{}.{}.prompt.txt", stem(path), task.key()));
            write_bytes(&p, format!("{prompt}\n").as_bytes())?;
            lines.push(format!("  prompt -> {}", p.display()));
        }
        Ok(Outcome::ok(lines))
    });
    let failed = report(files, outcomes);
    println!("{} files, {} failed", files.len(), failed);
    Ok(failed == 0)
}

/// Log of annotation records inside the output directory.
pub const ANNOTATION_LOG: &str = "annotations.jsonl";

pub fn annotate(cfg: &RunConfig, files: &[PathBuf]) -> Result<bool, CliError> {
    let task: Task = cfg.task.ok_or_else(|| CliError::Usage("annotate needs --task".into()))?;
    let endpoint = cfg.endpoint.clone().ok_or_else(|| CliError::Usage("annotate needs --endpoint".into()))?;
    let transport = HttpTransport::from_env(endpoint, cfg.model.clone());
    let retry = RetryPolicy { attempts: 3, base_delay: Duration::from_millis(cfg.retry_delay_ms) };
    let log_path = cfg.out_dir()?.join(ANNOTATION_LOG);
    let seen = logged_hashes(&log_path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", log_path.display())))?;

    // parse everything first; documents already in the log are skipped
    let mut pending = Vec::new();
    let mut lines: Vec<Option<Result<Outcome, FileError>>> = Vec::new();
    for path in files {
        match load_document(path, cfg.strict) {
            Ok(l) => {
                if seen.contains(&request_hash(&cfg.model, &document_prompt(&l.document, task))) {
                    lines.push(Some(Ok(Outcome::ok(vec![format!("{}: skipped, already logged", path.display())]))));
                } else {
                    lines.push(None);
                    pending.push((path.clone(), l.document));
                }
            }
            Err(e) => lines.push(Some(Err(e))),
        }
    }
    let named: Vec<(String, Document)> = pending.iter().map(|(p, d)| (p.display().to_string(), d.clone())).collect();
    let results = match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(|| {
            named.par_iter().map(|(name, doc)| annotate_one(name, doc, task, &transport, &retry)).collect::<Vec<_>>()
        }),
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let mut records = Vec::new();
    let mut results = results.into_iter();
    let mut skipped = 0;
    let outcomes: Vec<Result<Outcome, FileError>> = lines
        .into_iter()
        .zip(files)
        .map(|(line, path)| match line {
            Some(done) => {
                skipped += done.is_ok() as usize;
                done
            }
            None => match results.next().expect("one result per pending document") {
                Ok(rec) => {
                    let msg = format!("{}: annotated, request {}", path.display(), &rec.request_hash[..12]);
                    records.push(rec);
                    Ok(Outcome::ok(vec![msg]))
                }
                Err(e) => Err(FileError::new(e.code(), e.to_string())),
            },
        })
        .collect();
    append_log(&log_path, &records).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", log_path.display())))?;
    let failed = report(files, outcomes);
    println!("{} files, {} annotated, {} skipped, {} failed", files.len(), records.len(), skipped, failed);
    Ok(failed == 0)
}

/// Reference point set for `path`: a `.xyz` cloud, or samples of a document.
fn reference_points(dir: &Path, name: &str, cfg: &RunConfig) -> Option<Result<Vec<histcad::geom::Vec3>, FileError>> {
    let xyz = dir.join(format!("{name}.xyz"));
    if xyz.is_file() {
        let f = match File::open(&xyz) {
            Ok(f) => f,
            Err(e) => return Some(Err(io_err(&xyz)(e))),
        };
        return Some(read_xyz(BufReader::new(f)).map_err(|e| FileError::new("REFERENCE_ERROR", format!("{}: {e}", xyz.display()))));
    }
    ["hcad", "hier"].iter().map(|ext| dir.join(format!("{name}.{ext}"))).find(|p| p.is_file()).map(|p| {
        let doc = load_document(&p, cfg.strict).map_err(|e| FileError::new("REFERENCE_ERROR", e.to_string()))?;
        document_samples_at(&doc.document, cfg.samples, SAMPLE_SEED, cfg.grid)
            .map_err(|e| FileError::new("REFERENCE_ERROR", format!("{}: {e}", p.display())))
    })
}

pub fn eval(cfg: &RunConfig, files: &[PathBuf], references: Option<&Path>) -> Result<bool, CliError> {
    if let Some(dir) = references {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("reference directory {} not found", dir.display())));
        }
    }
    let out = cfg.out_dir()?;
    // reference problems are configuration errors, reported apart from generation failures
    let results = par_files(cfg, files, |path| {
        let reference = match references.and_then(|d| reference_points(d, &stem(path), cfg)) {
            Some(Ok(r)) => Some(r),
            Some(Err(e)) => return Ok(Err(e)),
            None => None,
        };
        let doc = load_document(path, cfg.strict)?.document;
        let samples =
            document_samples_at(&doc, cfg.samples, SAMPLE_SEED, cfg.grid).map_err(|e| FileError::new(e.code(), e.to_string()))?;
        let chamfer = match reference {
            Some(r) => Some(chamfer_distance(&samples, &r).map_err(|e| FileError::new(e.code(), e.to_string()))?),
            None => None,
        };
        Ok(Ok(chamfer))
    });
    let mut statuses = Vec::new();
    let mut reference_errors = Vec::new();
    for (index, (path, r)) in files.iter().zip(results).enumerate() {
        let (error, chamfer) = match r {
            Ok(Ok(c)) => (None, c),
            Ok(Err(e)) => {
                reference_errors.push(format!("{}: {e}", path.display()));
                continue;
            }
            Err(e) => (Some((e.code, e.message)), None),
        };
        statuses.push((path, DocumentStatus { index, error, chamfer }));
    }
    let docs: Vec<serde_json::Value> = statuses
        .iter()
        .map(|(path, s)| {
            json!({
                "file": path.display().to_string(),
                "ok": s.ok(),
                "code": s.error.as_ref().map(|e| e.0.clone()),
                "chamfer": s.chamfer,
            })
        })
        .collect();
    let rep = MetricReport::from_statuses(statuses.into_iter().map(|(_, s)| s).collect());
    let (avg, med) = rep.scaled_chamfer();
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
    for s in rep.statuses.iter().filter(|s| !s.ok()) {
        let (code, msg) = s.error.as_ref().expect("failed status carries an error");
        println!("{}: {}", files[s.index].display(), if msg.starts_with(code.as_str()) { msg.clone() } else { format!("{code}: {msg}") });
    }
    for e in &reference_errors {
        println!("{e}");
    }
    println!("documents {}", rep.total);
    println!("failures {}", rep.failures);
    println!("invalidity {:.4}", rep.invalidity);
    println!("avg_chamfer_x1e3 {}", fmt(avg));
    println!("median_chamfer_x1e3 {}", fmt(med));
    let summary = json!({
        "total": rep.total,
        "failures": rep.failures,
        "invalidity": rep.invalidity,
        "avg_chamfer": rep.avg_chamfer,
        "median_chamfer": rep.median_chamfer,
        "chamfer_display_scale": CHAMFER_DISPLAY_SCALE,
        "documents": docs,
        "reference_errors": reference_errors,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("json values serialize");
    text.push('\n');
    std::fs::write(out.join("metrics.json"), text).map_err(|e| CliError::Usage(format!("cannot write metrics: {e}")))?;
    Ok(rep.failures == 0 && reference_errors.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pin_syntax() {
        assert_eq!(parse_pin("c1.radius=3").unwrap(), (0, "c1.radius".into(), 3.0));
        assert_eq!(parse_pin("2:l1.end.x=-1.5").unwrap(), (1, "l1.end.x".into(), -1.5));
        for bad in ["c1.radius", "0:c1.radius=1", "c1.radius=x", "a:b.c=1"] {
            assert!(parse_pin(bad).is_err(), "{bad}");
        }
    }
}
