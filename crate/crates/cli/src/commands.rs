use std::fs;
use std::path::{Path, PathBuf};

use fusekit::config::Settings;
use fusekit::eval::{evaluate_colors, geometric_chamfer, overlap_fitness};
use fusekit::geometry::apply_sim3;
use fusekit::io::{read_ply, write_ply, SessionManifest};
use fusekit::pipeline::{load_inputs, run_stages, PartialRun, PipelineError, Stage};
use fusekit::posegraph::write_g2o;
use fusekit::synth::generate_synthetic_scene;
use fusekit::{ColoredPointCloud, Error};
use serde_json::json;

use crate::args::{Cli, Command, Common, EvaluateArgs, StageArgs, SynthArgs};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numerical {
        message: String,
        stage: Option<&'static str>,
        session: Option<usize>,
    },
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical { .. } => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numerical { message: m, .. } => m,
        }
    }

    pub fn diagnostics(&self) -> Vec<String> {
        let Failure::Numerical { stage, session, .. } = self else {
            return Vec::new();
        };
        let mut out = Vec::new();
        if let Some(s) = stage {
            out.push(format!("stage: {s}"));
        }
        if let Some(k) = session {
            out.push(format!("session: {k}"));
        }
        out
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Numerical {
                message: e.to_string(),
                stage: None,
                session: None,
            }
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.source.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Numerical {
                message: e.to_string(),
                stage: Some(e.stage),
                session: e.session,
            }
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Prefuse(a) => stage(a, Stage::Prefuse),
        Command::Register(a) => stage(a, Stage::Register),
        Command::Optimize(a) => stage(a, Stage::Optimize),
        Command::Pipeline(a) => stage(a, Stage::Propagate),
        Command::Evaluate(a) => evaluate(a),
    }
}

fn settings(common: &Common) -> Result<Settings, Failure> {
    let s = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    Ok(match common.seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn out_dir(dir: &Path) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn synth(a: SynthArgs) -> Outcome {
    let s = settings(&a.common)?;
    let scene = generate_synthetic_scene(&s.synth)?;
    let dir = out_dir(&a.out)?;
    scene.write_to(&dir)?;
    println!(
        "wrote {} sessions, {} ground-truth points to {}",
        scene.sessions.len(),
        scene.gt_cloud.len(),
        dir.join("manifest.txt").display()
    );
    Ok(())
}

fn stage(a: StageArgs, last: Stage) -> Outcome {
    let mut s = settings(&a.common)?;
    if let Some(beta) = a.beta {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Failure::Usage(format!("--beta must lie in [0, 1], got {beta}")));
        }
        s.pipeline.postfusion.beta = beta;
    }
    let manifest = SessionManifest::load(&a.manifest)?;
    let inputs = load_inputs(&manifest)?;
    let run = run_stages(&inputs, &s.pipeline, last)?;
    print!("{}", run.report.to_text());
    if let Some(dir) = &a.out {
        let dir = out_dir(dir)?;
        write_outputs(&dir, &run, &inputs.sessions)?;
    }
    Ok(())
}

fn write_outputs(dir: &Path, run: &PartialRun, sessions: &[fusekit::pipeline::SessionInput]) -> Outcome {
    write_file(&dir.join("report.txt"), run.report.to_text())?;
    write_file(&dir.join("report.json"), run.report.to_json_string())?;
    if let Some(reg) = &run.register {
        let mut registered = ColoredPointCloud::default();
        for (s, t) in sessions.iter().zip(reg.transforms()) {
            registered.extend(&apply_sim3(&t, &s.cloud));
        }
        write_ply(&registered, dir.join("registered.ply"))?;
    }
    if let Some(opt) = &run.optimize {
        write_file(&dir.join("graph.g2o"), write_g2o(&opt.graph, Some(&opt.result.poses)))?;
    }
    if let Some(cloud) = &run.cloud {
        write_ply(cloud, dir.join("fused.ply"))?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Outcome {
    let s = settings(&a.common)?;
    let mut cfg = s.pipeline.eval;
    cfg.tau = a.tau.unwrap_or(cfg.tau);
    cfg.r_g = a.rg.unwrap_or(cfg.r_g);
    cfg.voxel_size = a.voxel.unwrap_or(cfg.voxel_size);
    let reference = match (&a.reference, &a.manifest) {
        (Some(r), _) => r.clone(),
        (None, Some(m)) => SessionManifest::load(m)?.lidar_cloud,
        (None, None) => return Err(Failure::Usage("evaluate needs --ref or --manifest".into())),
    };
    let src = read_ply(&a.cloud)?;
    let reference = read_ply(&reference)?;
    let colors = evaluate_colors(&src, &reference, &cfg)?;
    let chamfer = geometric_chamfer(&src, &reference)?;
    let fitness = overlap_fitness(&src, &reference, a.gate)?;
    let text = format!(
        "{}chamfer {chamfer}\nfitness {fitness}\ngate {}\n",
        colors.to_text(),
        a.gate
    );
    print!("{text}");
    if let Some(dir) = &a.out {
        let dir = out_dir(dir)?;
        let mut doc = colors.to_json();
        doc["geometry"] = json!({ "chamfer": chamfer, "fitness": fitness, "gate": a.gate });
        write_file(&dir.join("metrics.txt"), &text)?;
        let body = serde_json::to_string_pretty(&doc).expect("metrics serialize") + "\n";
        write_file(&dir.join("metrics.json"), body)?;
    }
    Ok(())
}
