//! `semgraph annotate`: per category, register every source cloud against
//! each template of that category, keep the lowest-error fit, transfer the
//! template's part labels and write the labeled cloud.
//!
//! Layout: `<source>/<category>/*.xyz|*.off` (unlabeled),
//! `<templates>/<category>/*.xyz` (labeled). Output mirrors the source
//! layout under `--out`, plus a report CSV
//! `file,template_used,iterations,final_error`.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use semgraph_core::pointcloud::{load_cloud, save_xyz, subsample, CloudFormat, PointCloud};
use semgraph_core::registration::{icp_register, transfer_labels, IcpResult};
use semgraph_core::rng::Rng;

use crate::config::{self, FileConfig};
use crate::{parallel_map, worker_threads};

#[derive(Args, Debug, Clone)]
pub struct AnnotateArgs {
    /// Directory of unlabeled clouds, one subdirectory per category
    #[arg(long)]
    pub source: PathBuf,

    /// Directory of labeled template clouds, one subdirectory per category
    #[arg(long)]
    pub templates: PathBuf,

    /// Output directory for labeled clouds (plus report.csv)
    #[arg(long)]
    pub out: PathBuf,

    /// ICP iteration cap
    #[arg(long)]
    pub max_iters: Option<usize>,

    /// ICP convergence tolerance on the change in mean squared error
    #[arg(long)]
    pub tol: Option<f64>,

    /// Subsample both clouds to this many points before ICP
    #[arg(long)]
    pub points: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
}

struct Task {
    category: String,
    path: PathBuf,
    templates: Vec<(String, PointCloud)>,
    points: usize,
    seed: u64,
    index: u64,
}

struct Annotated {
    labeled: PointCloud,
    template_used: String,
    result: IcpResult,
}

fn load_any_cloud(path: &PathBuf) -> semgraph_core::Result<PointCloud> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("off") => CloudFormat::OffVertices,
        _ => CloudFormat::XyzText,
    };
    load_cloud(path, format)
}

fn annotate_one(task: &Task, icp: &semgraph_core::registration::IcpParams) -> Result<Annotated> {
    let cloud = load_any_cloud(&task.path)?;
    let mut sub_rng = Rng::substream(task.seed, "subsample", &[task.index]);
    let source = subsample(&cloud, task.points, sub_rng.next_u64())?;

    let mut best: Option<Annotated> = None;
    for (tname, template) in &task.templates {
        let result = icp_register(&source, template, icp)?;
        if best
            .as_ref()
            .is_none_or(|b| result.final_error < b.result.final_error)
        {
            let labeled = transfer_labels(&source, template, &result.transform)?;
            best = Some(Annotated {
                labeled,
                template_used: tname.clone(),
                result,
            });
        }
    }
    best.context("category has no usable template")
}

pub fn run(args: &AnnotateArgs, file_cfg: &FileConfig) -> Result<i32> {
    let icp = config::resolve_icp(args.max_iters, args.tol, file_cfg)?;
    let points = config::pick(args.points, file_cfg.get("points"), config::DEFAULT_POINTS)?;
    let seed = config::pick(args.seed, file_cfg.get("seed"), config::DEFAULT_SEED)?;

    let template_cats = super::category_dirs(&args.templates)?;
    if template_cats.is_empty() {
        bail!(
            "template directory {} has no categories",
            args.templates.display()
        );
    }
    // Templates are shared across files; load and subsample them once.
    let mut templates_by_cat: Vec<(String, Vec<(String, PointCloud)>)> = Vec::new();
    for (cat, dir) in &template_cats {
        let mut tpls = Vec::new();
        for (i, path) in super::files_with_ext(dir, &["xyz"])?.iter().enumerate() {
            let cloud = load_any_cloud(path)?;
            if cloud.labels().is_none() {
                bail!("template {} has no part labels", path.display());
            }
            let mut rng = Rng::substream(seed, "template-subsample", &[i as u64]);
            let sub = subsample(&cloud, points, rng.next_u64())?;
            tpls.push((
                path.file_name().unwrap().to_string_lossy().into_owned(),
                sub,
            ));
        }
        templates_by_cat.push((cat.clone(), tpls));
    }

    let mut tasks = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for (cat, dir) in super::category_dirs(&args.source)? {
        let files = super::files_with_ext(&dir, &["xyz", "off"])?;
        let templates = templates_by_cat
            .iter()
            .find(|(c, _)| *c == cat)
            .map(|(_, t)| t.clone())
            .unwrap_or_default();
        for path in files {
            let display = format!("{cat}/{}", path.file_name().unwrap().to_string_lossy());
            if templates.is_empty() {
                failures.push((display, format!("no template for category {cat:?}")));
                continue;
            }
            let index = tasks.len() as u64;
            tasks.push(Task {
                category: cat.clone(),
                path,
                templates: templates.clone(),
                points,
                seed,
                index,
            });
        }
    }

    let results = parallel_map(&tasks, worker_threads(), |task| annotate_one(task, &icp));

    let mut report = String::from("file,template_used,iterations,final_error\n");
    let mut ok = 0usize;
    for (task, result) in tasks.iter().zip(results) {
        let display = format!(
            "{}/{}",
            task.category,
            task.path.file_name().unwrap().to_string_lossy()
        );
        match result {
            Ok(annotated) => {
                let stem = task.path.file_stem().unwrap().to_string_lossy();
                let out_path = args.out.join(&task.category).join(format!("{stem}.xyz"));
                if let Some(parent) = out_path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                save_xyz(&annotated.labeled, &out_path)?;
                writeln!(
                    report,
                    "{display},{},{},{}",
                    annotated.template_used,
                    annotated.result.iterations,
                    annotated.result.final_error
                )
                .expect("string write");
                ok += 1;
            }
            Err(e) => failures.push((display, format!("{e:#}"))),
        }
    }

    super::write_text(&args.out.join("report.csv"), &report)?;

    println!("annotated {ok} clouds, {} failures", failures.len());
    for (file, why) in &failures {
        eprintln!("failed: {file}: {why}");
    }
    Ok(if failures.is_empty() { 0 } else { 1 })
}
