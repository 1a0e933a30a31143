use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use dlsenum::engine::{count_completions, enumerate};
use dlsenum::plan::{compute_plan, FixedPrefix};
use dlsenum::square::{ConstraintSet, Order};
use dlsenum::workunit::{
    default_depth, generate, generate_to_file, manifest_path, merge, read_results, read_workunits, run_batch,
    BatchEngine, RunOptions,
};
use dlsenum::FillPlan;
use tempfile::TempDir;

const DLS7: u128 = 171_200;

fn dls7() -> FillPlan {
    compute_plan(Order::new(7).unwrap(), ConstraintSet::DLS, FixedPrefix::FirstRow).unwrap()
}

fn opts(input: &Path, output: &Path, tag: &str) -> RunOptions {
    RunOptions {
        input: input.to_path_buf(),
        output: output.to_path_buf(),
        threads: 2,
        range: None,
        run_tag: tag.into(),
        engine: BatchEngine::Plain,
        limit: None,
    }
}

fn units_file(dir: &TempDir, plan: &FillPlan, depth: usize) -> PathBuf {
    let p = dir.path().join("units.txt");
    generate_to_file(plan, depth, &p).unwrap();
    p
}

#[test]
fn workunits_partition_the_search() {
    let plan = dls7();
    let k = default_depth(&plan);
    let units = generate(&plan, k).unwrap();
    assert!(units.len() >= 1000);
    let mut prefixes: Vec<&Vec<u8>> = units.iter().map(|u| &u.symbols).collect();
    prefixes.sort();
    prefixes.dedup();
    assert_eq!(prefixes.len(), units.len());
    let mut sum = 0u128;
    for (i, u) in units.iter().enumerate() {
        assert_eq!(u.id, i as u64);
        assert_eq!(u.symbols.len(), k);
        sum += count_completions(&plan, &u.symbols).unwrap().0;
    }
    assert_eq!(sum, DLS7);
    assert_eq!(sum, enumerate(&plan).count);
}

#[test]
fn generation_is_deterministic() {
    let plan = dls7();
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let n = generate_to_file(&plan, 6, &a).unwrap();
    assert_eq!(generate_to_file(&plan, 6, &b).unwrap(), n);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, units) = read_workunits(&a).unwrap();
    assert_eq!(header.count, n);
    assert_eq!(header.depth, 6);
    assert_eq!(units, generate(&plan, 6).unwrap());
}

#[test]
fn batch_and_merge_give_the_total() {
    let plan = dls7();
    let dir = TempDir::new().unwrap();
    let units = units_file(&dir, &plan, default_depth(&plan));
    let out = dir.path().join("res.txt");
    let m = run_batch(&opts(&units, &out, "a")).unwrap();
    assert_eq!(m.running_sum, DLS7);
    assert_eq!(m.pending, 0);
    assert!(manifest_path(&out).exists());
    let r = merge(&[out], 1, Some(&units)).unwrap();
    assert_eq!(r.total, Some(DLS7));
    assert!(r.missing.is_empty() && r.disagreements.is_empty());
}

#[test]
fn resume_skips_finished_units() {
    let plan = dls7();
    let dir = TempDir::new().unwrap();
    let units = units_file(&dir, &plan, 5);
    let out = dir.path().join("res.txt");
    let first = run_batch(&RunOptions {
        limit: Some(10),
        ..opts(&units, &out, "a")
    })
    .unwrap();
    assert_eq!(first.completed, 10);
    assert!(first.pending > 0);
    let second = run_batch(&opts(&units, &out, "a")).unwrap();
    assert_eq!(second.pending, 0);
    assert_eq!(second.running_sum, DLS7);
    let res = read_results(&out).unwrap();
    let mut ids: Vec<u64> = res.results.iter().map(|r| r.id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), res.results.len());
    assert_eq!(ids.len() as u64, second.total);
    assert!(run_batch(&opts(&units, &out, "b")).is_err());
}

#[test]
fn corrupt_lines_are_recounted() {
    let plan = dls7();
    let dir = TempDir::new().unwrap();
    let units = units_file(&dir, &plan, 5);
    let out = dir.path().join("res.txt");
    run_batch(&opts(&units, &out, "a")).unwrap();
    // Damage one line and leave a torn write at the end.
    let text = fs::read_to_string(&out).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let victim = lines[3].split_whitespace().next().unwrap().to_string();
    lines[3] = format!("{victim} 12x 9");
    let last = lines.pop().unwrap();
    let torn = &last[..last.len() / 2];
    fs::write(&out, format!("{}\n{torn}", lines.join("\n"))).unwrap();
    let damaged = read_results(&out).unwrap();
    assert_eq!(damaged.corrupt.len(), 2);

    let m = run_batch(&opts(&units, &out, "a")).unwrap();
    assert_eq!(m.running_sum, DLS7);
    let r = merge(std::slice::from_ref(&out), 1, Some(&units)).unwrap();
    assert_eq!(r.corrupt_lines.len(), 2);
    assert_eq!(r.total, Some(DLS7));
}

#[test]
fn ranges_split_a_batch() {
    let plan = dls7();
    let dir = TempDir::new().unwrap();
    let units = units_file(&dir, &plan, 5);
    let (header, _) = read_workunits(&units).unwrap();
    let mid = header.count / 3;
    let lo = dir.path().join("lo.txt");
    let hi = dir.path().join("hi.txt");
    let a = run_batch(&RunOptions {
        range: Some(0..mid),
        ..opts(&units, &lo, "a")
    })
    .unwrap();
    let b = run_batch(&RunOptions {
        range: Some(mid..header.count),
        ..opts(&units, &hi, "a")
    })
    .unwrap();
    assert_eq!(a.running_sum + b.running_sum, DLS7);
    let partial = merge(std::slice::from_ref(&lo), 1, Some(&units)).unwrap();
    assert_eq!(partial.total, None);
    assert_eq!(partial.missing.len() as u64, header.count - mid);
    assert_eq!(merge(&[lo, hi], 1, Some(&units)).unwrap().total, Some(DLS7));
}

#[test]
fn quorum_withholds_disputed_totals() {
    let plan = dls7();
    let dir = TempDir::new().unwrap();
    let units = units_file(&dir, &plan, 5);
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    run_batch(&opts(&units, &a, "host-a")).unwrap();
    run_batch(&RunOptions {
        engine: BatchEngine::Symmetric,
        ..opts(&units, &b, "host-b")
    })
    .unwrap();
    let agreed = merge(&[a.clone(), b.clone()], 2, Some(&units)).unwrap();
    assert_eq!(agreed.total, Some(DLS7));

    assert_eq!(merge(std::slice::from_ref(&a), 2, Some(&units)).unwrap().total, None);

    let c = dir.path().join("c.txt");
    let text = fs::read_to_string(&b).unwrap().replace("host-b", "host-c");
    let mut lines: Vec<&str> = text.lines().collect();
    let parts: Vec<&str> = lines[1].split_whitespace().collect();
    let forged = format!("{} {} {}", parts[0], parts[1].parse::<u128>().unwrap() + 1, parts[2]);
    lines[1] = &forged;
    let mut f = OpenOptions::new().create(true).write(true).truncate(true).open(&c).unwrap();
    writeln!(f, "{}", lines.join("\n")).unwrap();
    let disputed = merge(&[a, b, c], 2, Some(&units)).unwrap();
    assert_eq!(disputed.total, Some(DLS7), "two tags still agree");
    assert_eq!(disputed.disagreements.len(), 1);
}
