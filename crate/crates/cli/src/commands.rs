use std::collections::HashMap;
use std::fmt::Display;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use serde::{Serialize, Serializer};

use softjaccard::alignment::{align_to_atlas, apply_transform, RansacConfig};
use softjaccard::analysis::{
    conditional_distributions, correspondence_errors, derive_pair_labels, flag_outliers, ks_permutation, ks_two_sample,
    label_pairs, predict_families, roc_auc, scale_error_regression, Grouping, OutlierRule, PairTable,
};
use softjaccard::group::{classify_cohort, group_roc, write_group_csv, GroupConfig, SignConvention};
use softjaccard::index::{DescriptorIndex, IndexMode};
use softjaccard::io::{
    read_distances, read_keypoint_file, read_labels_csv, write_distances, write_keypoint_file, write_labels_csv,
    CohortManifest, DistanceFormat, ManifestEntry,
};
use softjaccard::jaccard::{CohortEngine, DistanceForm};
use softjaccard::model::{AlphaConvention, DistanceMatrix, KernelConfig, KernelMode, KeypointSet, PairLabel, SubjectRecord};
use softjaccard::synth::{generate_cohort, CohortSpec};

use crate::run_manifest;

fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort directory.
    Synth(SynthArgs),
    /// Build and save a descriptor index for a cohort.
    Index(IndexArgs),
    /// Pairwise soft Jaccard distance matrix.
    Dist(DistArgs),
    /// Align keypoints to an atlas with a similarity transform.
    Align(AlignArgs),
    /// Pair labels and per-pair table with conditional summaries.
    Labels(LabelsArgs),
    /// ROC curve of related versus unrelated pairs.
    Roc(RocArgs),
    /// Two-sample KS test between the distances of two labels.
    Ks(KsArgs),
    /// Flag per-label distance outliers.
    Outliers(OutlierArgs),
    /// Nearest-neighbor family prediction.
    Family(FamilyArgs),
    /// Sex prediction from distances to group supersets.
    Group(GroupArgs),
    /// Localization error against keypoint scale for matched keypoints.
    ScaleReg(ScaleRegArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IndexOpts {
    /// Exact kd-tree search.
    #[arg(long, conflicts_with = "approx")]
    pub exact: bool,
    /// Randomized kd-forest search (default).
    #[arg(long)]
    pub approx: bool,
    /// Seed of the randomized trees.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub trees: usize,
    /// Leaf checks per query.
    #[arg(long, default_value_t = 1024)]
    pub checks: usize,
}

impl IndexOpts {
    fn mode(&self) -> IndexMode {
        if self.exact {
            IndexMode::Exact
        } else {
            IndexMode::Approximate {
                trees: self.trees,
                checks: self.checks,
                seed: self.seed,
            }
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct KernelOpts {
    /// Neighbors per keypoint query.
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    /// hse, app or app+geo
    #[arg(long, default_value = "app+geo")]
    #[serde(serialize_with = "display")]
    pub kernel: KernelMode,
    /// neglog (-ln J) or oneminus (1 - J)
    #[arg(long, default_value = "neglog")]
    #[serde(serialize_with = "display")]
    pub distance: DistanceForm,
    /// Bandwidth convention: minsq or min
    #[arg(long, default_value = "minsq")]
    #[serde(serialize_with = "display")]
    pub alpha: AlphaConvention,
    /// Count only the first N candidates as hard matches (hse kernel).
    #[arg(long)]
    pub hse_rank_limit: Option<usize>,
    /// Treat keypoint coordinates as not sharing a common frame (logs a warning with app+geo).
    #[arg(long)]
    pub unaligned: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub index: IndexOpts,
}

impl KernelOpts {
    fn config(&self) -> KernelConfig {
        KernelConfig {
            mode: self.kernel,
            k: self.k,
            alpha: self.alpha,
            hse_rank_limit: self.hse_rank_limit,
            assume_aligned: !self.unaligned,
            ..KernelConfig::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with cohort spec fields; flags below override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub families: Option<usize>,
    #[arg(long)]
    pub keypoints: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct IndexArgs {
    /// Cohort directory or manifest.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Index file.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub index: IndexOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct DistArgs {
    /// Cohort directory or manifest.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Distance CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// long (one row per pair) or full (square matrix)
    #[arg(long, default_value = "long")]
    #[serde(serialize_with = "display")]
    pub format: DistanceFormat,
    /// Prebuilt index file; overrides the index flags.
    #[arg(long = "index-file")]
    pub index_file: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct AlignArgs {
    /// Keypoint file, or a cohort directory or manifest.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub atlas: PathBuf,
    /// Transform file for a single input; output directory for a cohort.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the transformed keypoints of a single input here.
    #[arg(long)]
    pub aligned: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    pub ratio: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct MatrixInput {
    /// Distance CSV (long or full).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelsArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Distance CSV; without it only pair labels are written.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summaries of the conditional distributions.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// label, demographic, sex or age:<years>
    #[arg(long, default_value = "label")]
    pub by: String,
}

#[derive(Debug, Args, Serialize)]
pub struct RocArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub matrix: MatrixInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated positive labels.
    #[arg(long, default_value = "MZ,DZ,FS,HS")]
    pub positive: String,
    #[arg(long, default_value = "UR")]
    pub negative: String,
}

#[derive(Debug, Args, Serialize)]
pub struct KsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub matrix: MatrixInput,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    /// Permutation p-value with this many shuffles instead of the asymptotic one.
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct OutlierArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub matrix: MatrixInput,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub iqr: f64,
    #[arg(long, default_value_t = 5)]
    pub min_samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub matrix: MatrixInput,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GroupArgs {
    /// Cohort directory or manifest.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Labels CSV; defaults to the one named in the manifest.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the ROC curve over the threshold.
    #[arg(long)]
    pub roc: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Use the decision rule with the opposite sign convention.
    #[arg(long)]
    pub as_printed: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct ScaleRegArgs {
    /// Cohort directory or manifest; every subject is matched to the atlas.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Atlas subject id; defaults to the first subject.
    #[arg(long)]
    pub atlas: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub ratio: f64,
}

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Synth(a) => synth(&a, argv),
        Command::Index(a) => index(&a, argv),
        Command::Dist(a) => dist(&a, argv),
        Command::Align(a) => align(&a, argv),
        Command::Labels(a) => labels(&a, argv),
        Command::Roc(a) => roc(&a, argv),
        Command::Ks(a) => ks(&a, argv),
        Command::Outliers(a) => outliers(&a, argv),
        Command::Family(a) => family(&a, argv),
        Command::Group(a) => group(&a, argv),
        Command::ScaleReg(a) => scale_reg(&a, argv),
    }
}

fn manifest_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("cohort.toml")
    } else {
        path.to_path_buf()
    }
}

fn load_cohort(path: &Path) -> Result<(CohortManifest, Vec<KeypointSet>)> {
    let manifest = CohortManifest::load(manifest_file(path))?;
    let cohort = manifest.read_cohort()?;
    Ok((manifest, cohort))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_labels(list: &str) -> Result<Vec<PairLabel>> {
    list.split(',')
        .map(|t| t.trim().parse::<PairLabel>().map_err(anyhow::Error::msg))
        .collect()
}

fn load_table(m: &MatrixInput) -> Result<(DistanceMatrix, Vec<SubjectRecord>, PairTable)> {
    let matrix = read_distances(&m.input)?;
    let records = read_labels_csv(&m.labels)?;
    let table = label_pairs(&matrix, &records)?;
    for issue in &table.issues {
        log::warn!("{} / {}: {}", issue.subject_a, issue.subject_b, issue.reason);
    }
    Ok((matrix, records, table))
}

fn synth(a: &SynthArgs, argv: &[String]) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => CohortSpec::default(),
    };
    spec.seed = a.seed;
    if let Some(v) = a.families {
        spec.n_families = v;
    }
    if let Some(v) = a.keypoints {
        spec.keypoints = v;
    }
    if let Some(v) = a.dim {
        spec.descriptor_dim = v;
    }
    let cohort = generate_cohort(&spec)?;
    cohort.write_to_dir(&a.out)?;
    std::fs::write(a.out.join("spec.toml"), toml::to_string(&spec)?)?;
    println!("{} subjects written to {}", cohort.sets.len(), a.out.display());
    run_manifest::write(&a.out, "synth", argv, &(a, &spec))
}

fn index(a: &IndexArgs, argv: &[String]) -> Result<()> {
    let (_, cohort) = load_cohort(&a.input)?;
    let idx = DescriptorIndex::build(&cohort, a.index.mode())?;
    idx.save(&a.out)?;
    println!("{} entries from {} images", idx.len(), idx.image_count());
    run_manifest::write(&a.out, "index", argv, a)
}

fn engine<'a>(cohort: &'a [KeypointSet], opts: &KernelOpts, index_file: Option<&Path>) -> Result<CohortEngine<'a>> {
    Ok(match index_file {
        Some(p) => CohortEngine::with_index(cohort, DescriptorIndex::load(p)?)?,
        None => CohortEngine::new(cohort, opts.index.mode())?,
    })
}

fn dist(a: &DistArgs, argv: &[String]) -> Result<()> {
    let (_, cohort) = load_cohort(&a.input)?;
    let engine = engine(&cohort, &a.kernel, a.index_file.as_deref())?;
    let matrix = engine.distance_matrix(&a.kernel.config(), a.kernel.distance, a.kernel.threads)?;
    write_distances(&matrix, &a.out, a.format)?;
    run_manifest::write(&a.out, "dist", argv, a)
}

fn align(a: &AlignArgs, argv: &[String]) -> Result<()> {
    let atlas = read_keypoint_file(&a.atlas)?;
    let config = RansacConfig {
        trials: a.trials,
        inlier_tol: a.tol,
        seed: a.seed,
    };
    let is_cohort = a.input.is_dir() || a.input.extension().is_some_and(|e| e == "toml");
    if !is_cohort {
        let src = read_keypoint_file(&a.input)?;
        let est = align_to_atlas(&src, &atlas, a.ratio, &config)?;
        est.transform.save(&a.out)?;
        if let Some(path) = &a.aligned {
            write_keypoint_file(&apply_transform(&src, &est.transform), path)?;
        }
        println!("{} inliers, rms {:.4} mm", est.inliers.len(), est.rms);
        return run_manifest::write(&a.out, "align", argv, a);
    }
    let (manifest, cohort) = load_cohort(&a.input)?;
    let kp_dir = a.out.join("keypoints");
    let tf_dir = a.out.join("transforms");
    for d in [&kp_dir, &tf_dir] {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    let mut entries = Vec::new();
    for set in &cohort {
        let est = align_to_atlas(set, &atlas, a.ratio, &config).with_context(|| format!("aligning {}", set.subject_id))?;
        est.transform.save(tf_dir.join(format!("{}.txt", set.subject_id)))?;
        let rel = Path::new("keypoints").join(format!("{}.skj", set.subject_id));
        write_keypoint_file(&apply_transform(set, &est.transform), a.out.join(&rel))?;
        entries.push(ManifestEntry {
            id: set.subject_id.clone(),
            keypoints: rel,
        });
    }
    write_labels_csv(&read_labels_csv(&manifest.labels)?, a.out.join("labels.csv"))?;
    CohortManifest {
        labels: "labels.csv".into(),
        subjects: entries,
    }
    .save(a.out.join("cohort.toml"))?;
    println!("{} subjects aligned into {}", cohort.len(), a.out.display());
    run_manifest::write(&a.out, "align", argv, a)
}

fn grouping(by: &str) -> Result<Grouping> {
    Ok(match by {
        "label" => Grouping::Label,
        "demographic" => Grouping::Demographic,
        "sex" => Grouping::SexPair,
        other => match other.strip_prefix("age:").and_then(|w| w.parse::<f64>().ok()) {
            Some(w) if w > 0.0 => Grouping::AgeBin(w),
            _ => bail!("unknown grouping {other:?} (expected label, demographic, sex, age:<years>)"),
        },
    })
}

fn labels(a: &LabelsArgs, argv: &[String]) -> Result<()> {
    let records = read_labels_csv(&a.labels)?;
    let grouping = grouping(&a.by)?;
    match &a.input {
        None => {
            let labels = derive_pair_labels(&records);
            for issue in &labels.issues {
                log::warn!("{} / {}: {}", issue.subject_a, issue.subject_b, issue.reason);
            }
            let mut w = csv::Writer::from_writer(create(&a.out)?);
            w.write_record(["subject_a", "subject_b", "label"])?;
            for (i, j, l) in labels.iter() {
                w.write_record([records[i].subject_id.as_str(), &records[j].subject_id, l.as_str()])?;
            }
            w.flush()?;
            let counts = labels.counts();
            for (l, c) in PairLabel::ALL.iter().zip(counts) {
                println!("{l} {c}");
            }
        }
        Some(input) => {
            let (_, _, table) = load_table(&MatrixInput {
                input: input.clone(),
                labels: a.labels.clone(),
            })?;
            table.write_csv(create(&a.out)?)?;
            if let Some(path) = &a.summary {
                #[derive(Serialize)]
                struct Group<'a> {
                    key: &'a str,
                    summary: &'a softjaccard::analysis::Summary,
                }
                let pairs = match grouping {
                    // demographic cells are defined over unrelated pairs
                    Grouping::Demographic => table.pairs.iter().filter(|p| p.label == PairLabel::Ur).cloned().collect(),
                    _ => table.pairs.clone(),
                };
                let groups = conditional_distributions(&pairs, grouping);
                let out: Vec<Group> = groups.iter().map(|g| Group { key: &g.key, summary: &g.summary }).collect();
                write_json(path, &out)?;
            }
            println!("{} pairs, {} same-subject pairs", table.pairs.len(), table.same_subject.len());
        }
    }
    run_manifest::write(&a.out, "labels", argv, a)
}

fn roc(a: &RocArgs, argv: &[String]) -> Result<()> {
    let (_, _, table) = load_table(&a.matrix)?;
    let pos = parse_labels(&a.positive)?;
    let neg = parse_labels(&a.negative)?;
    let collect = |set: &[PairLabel]| -> Vec<f64> {
        table.pairs.iter().filter(|p| set.contains(&p.label)).map(|p| p.distance).collect()
    };
    let curve = roc_auc(&collect(&pos), &collect(&neg))?;
    curve.write_csv(create(&a.out)?)?;
    println!("auc {:.6}", curve.auc);
    run_manifest::write(&a.out, "roc", argv, a)
}

fn ks(a: &KsArgs, argv: &[String]) -> Result<()> {
    let (_, _, table) = load_table(&a.matrix)?;
    let x = table.distances(a.a.parse().map_err(anyhow::Error::msg)?);
    let y = table.distances(a.b.parse().map_err(anyhow::Error::msg)?);
    let r = match a.permutations {
        Some(n) => ks_permutation(&x, &y, n, a.seed)?,
        None => ks_two_sample(&x, &y)?,
    };
    #[derive(Serialize)]
    struct Out<'a> {
        a: &'a str,
        b: &'a str,
        n_a: usize,
        n_b: usize,
        statistic: f64,
        p_value: f64,
    }
    write_json(
        &a.out,
        &Out {
            a: &a.a,
            b: &a.b,
            n_a: x.len(),
            n_b: y.len(),
            statistic: r.statistic,
            p_value: r.p_value,
        },
    )?;
    println!("D {:.6} p {:.6e}", r.statistic, r.p_value);
    run_manifest::write(&a.out, "ks", argv, a)
}

fn outliers(a: &OutlierArgs, argv: &[String]) -> Result<()> {
    let (_, _, table) = load_table(&a.matrix)?;
    let rule = OutlierRule {
        iqr_multiple: a.iqr,
        min_samples: a.min_samples,
    };
    let flags = flag_outliers(&table.pairs, &rule);
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(["subject_a", "subject_b", "label", "distance", "direction", "z"])?;
    for f in &flags {
        let p = &table.pairs[f.pair];
        let dir = match f.direction {
            softjaccard::analysis::Direction::High => "high",
            softjaccard::analysis::Direction::Low => "low",
        };
        w.write_record([
            p.subject_a.as_str(),
            &p.subject_b,
            f.label.as_str(),
            &softjaccard::io::format_distance(p.distance),
            dir,
            &f.z.to_string(),
        ])?;
    }
    w.flush()?;
    println!("{} flags", flags.len());
    run_manifest::write(&a.out, "outliers", argv, a)
}

fn family(a: &FamilyArgs, argv: &[String]) -> Result<()> {
    let (matrix, records, _) = load_table(&a.matrix)?;
    let predictions = predict_families(&matrix, &records)?;
    let families: HashMap<&str, &str> = records.iter().map(|r| (r.subject_id.as_str(), r.family_id.as_str())).collect();
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    w.write_record(["subject_id", "neighbor_id", "distance", "predicted_family", "actual_family", "correct"])?;
    let mut correct = 0;
    for p in &predictions {
        let actual = families.get(p.subject_id.as_str()).copied().unwrap_or("");
        let ok = actual == p.predicted_family;
        correct += ok as usize;
        w.write_record([
            p.subject_id.as_str(),
            &p.neighbor_id,
            &softjaccard::io::format_distance(p.distance),
            &p.predicted_family,
            actual,
            if ok { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    println!("{correct} of {} predicted into their own family", predictions.len());
    run_manifest::write(&a.out, "family", argv, a)
}

fn group(a: &GroupArgs, argv: &[String]) -> Result<()> {
    let (manifest, cohort) = load_cohort(&a.input)?;
    let records = read_labels_csv(a.labels.as_ref().unwrap_or(&manifest.labels))?;
    let engine = engine(&cohort, &a.kernel, None)?;
    let config = GroupConfig {
        kernel: a.kernel.config(),
        distance: a.kernel.distance,
        tau: a.tau,
        sign: if a.as_printed {
            SignConvention::AsPrinted
        } else {
            SignConvention::CloserGroup
        },
        threads: a.kernel.threads,
    };
    let results = classify_cohort(&engine, &records, &config)?;
    write_group_csv(&results, create(&a.out)?)?;
    let curve = group_roc(&results)?;
    if let Some(path) = &a.roc {
        curve.write_csv(create(path)?)?;
    }
    let correct = results.iter().filter(|r| r.predicted == r.actual).count();
    println!("auc {:.6}, {correct} of {} correct at tau {}", curve.auc, results.len(), a.tau);
    run_manifest::write(&a.out, "group", argv, a)
}

fn scale_reg(a: &ScaleRegArgs, argv: &[String]) -> Result<()> {
    let (_, cohort) = load_cohort(&a.input)?;
    let atlas = match &a.atlas {
        Some(id) => cohort
            .iter()
            .position(|s| &s.subject_id == id)
            .with_context(|| format!("atlas subject {id} not in cohort"))?,
        None => 0,
    };
    if cohort.is_empty() {
        bail!("cohort is empty");
    }
    let mut samples = Vec::new();
    for (i, set) in cohort.iter().enumerate() {
        if i != atlas {
            samples.extend(correspondence_errors(set, &cohort[atlas], a.ratio)?);
        }
    }
    let fit = scale_error_regression(&samples)?;
    write_json(&a.out, &fit)?;
    println!(
        "{} samples: raw slope {:.6}, normalized slope {:.6}",
        samples.len(),
        fit.raw.slope,
        fit.normalized.slope
    );
    run_manifest::write(&a.out, "scale-reg", argv, a)
}
