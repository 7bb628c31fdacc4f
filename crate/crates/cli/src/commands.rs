use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use condensation::clustering::{agglomerate, condensation_as_clustering, same_merge_tree, Linkage};
use condensation::datasets::{generate as generate_cloud, DatasetName, DatasetSpec};
use condensation::io::{
    format_activity, format_barcode, format_cloud, format_diagram, format_linkage, format_spectral,
    parse_cloud, spectral_header,
};
use condensation::spectral::spectral_audit;
use condensation::topology::{
    condensation_homology, persistence_bound_audit, topological_activity, vr_persistence,
};
use condensation::{
    condense as run_condensation, CondensationConfig, KernelFamily, KernelSpec, PointCloud,
    ScheduleSpec,
};

use crate::manifest::{
    artifact_files, load_trace_dir, manifest_path, write_trace_dir, RunManifest, RunSummary,
};
use crate::{
    CliResult, CompareArgs, CondenseArgs, ConfigArgs, DatasetArgs, Failure, GenerateArgs,
    HomologyArgs, ReportArgs, SpectraArgs, EXIT_NOT_EQUIVALENT,
};

const DEFAULT_N: usize = 128;

fn dataset_spec(name: &str, a: &DatasetArgs) -> CliResult<DatasetSpec> {
    let name: DatasetName = name.parse()?;
    let n = match (a.n, a.k) {
        (Some(n), Some(k)) if n != k => {
            return Err(Failure::config(anyhow!("--n {n} and --k {k} disagree")))
        }
        (n, k) => n.or(k).unwrap_or(DEFAULT_N),
    };
    let mut spec = DatasetSpec::new(name, n, a.seed);
    spec.noise = a.noise;
    for p in &a.params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| Failure::config(anyhow!("--param expects KEY=VALUE, got '{p}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::config(anyhow!("--param {key}: '{value}' is not a number")))?;
        spec.params.insert(key.trim().to_string(), value);
    }
    spec.validate()?;
    Ok(spec)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_cloud(path: &Path) -> CliResult<PointCloud> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_cloud(&text).with_context(|| format!("parsing {}", path.display()))?)
}

pub fn generate(a: &GenerateArgs) -> CliResult<()> {
    let spec = dataset_spec(&a.name, &a.dataset)?;
    let cloud = generate_cloud(&spec)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_n{}_s{}.csv", spec.name, spec.n, spec.seed)));
    write_file(&out, &format_cloud(&cloud))?;
    println!("{}", out.display());
    Ok(())
}

pub fn build_config(a: &ConfigArgs) -> CliResult<CondensationConfig> {
    let mut c = match &a.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => CondensationConfig::new(KernelSpec::gaussian(1.0), ScheduleSpec::fixed()),
    };
    if let Some(k) = &a.kernel {
        c.kernel.family = k.parse()?;
        if c.kernel.family == KernelFamily::DensityNormalized && c.kernel.base.is_none() {
            c.kernel.base = Some(KernelFamily::Gaussian);
        }
    }
    if let Some(b) = &a.base {
        c.kernel.base = Some(b.parse()?);
    }
    if let Some(v) = a.epsilon {
        c.kernel.epsilon = v;
    }
    if let Some(v) = a.alpha {
        c.kernel.alpha = v;
    }
    if let Some(v) = a.beta {
        c.kernel.beta = v;
    }
    if let Some(s) = &a.schedule {
        c.schedule.policy = s.parse()?;
    }
    if let Some(v) = a.delta {
        c.schedule.delta = v;
    }
    if let Some(v) = a.stall_threshold {
        c.schedule.stall_threshold = v;
    }
    if let Some(v) = a.coincidence_tol {
        c.schedule.coincidence_tol = v;
    }
    if let Some(v) = a.tau {
        c.tau = v;
    }
    if let Some(v) = a.zeta {
        c.zeta = v;
    }
    if let Some(v) = a.zeta_fraction {
        c.zeta_epsilon_fraction = Some(v);
    }
    if let Some(v) = a.max_steps {
        c.max_steps = v;
    }
    if let Some(v) = a.convergence_tol {
        c.convergence_tol = v;
    }
    if let Some(v) = a.fixed_point_tol {
        c.fixed_point_tol = v;
    }
    if a.weight_by_multiplicity {
        c.weight_by_multiplicity = true;
    }
    c.validate()?;
    Ok(c)
}

pub fn condense(a: &CondenseArgs) -> CliResult<()> {
    let (input, dataset, config, spectrum) = match &a.manifest {
        Some(path) => {
            let m = RunManifest::read(&manifest_path(path))?;
            m.config.validate()?;
            (m.input.map(PathBuf::from), m.dataset, m.config, m.spectrum)
        }
        None => {
            let config = build_config(&a.config)?;
            let dataset = a
                .dataset
                .as_deref()
                .map(|name| dataset_spec(name, &a.dataset_args))
                .transpose()?;
            let input = match &a.input {
                Some(p) => Some(
                    fs::canonicalize(p).with_context(|| format!("resolving {}", p.display()))?,
                ),
                None => None,
            };
            (input, dataset, config, !a.no_spectrum)
        }
    };
    let cloud = match (&input, &dataset) {
        (Some(path), _) => read_cloud(path)?,
        (None, Some(spec)) => generate_cloud(spec)?,
        (None, None) => {
            return Err(Failure::config(anyhow!(
                "give --input, --dataset or --manifest"
            )))
        }
    };

    let start = Instant::now();
    let trace = run_condensation(&cloud, &config)?;
    let wall_time_ms = start.elapsed().as_millis() as u64;

    let manifest = RunManifest {
        format_version: 1,
        input: input.map(|p| p.display().to_string()),
        spectrum,
        dataset,
        config,
        result: RunSummary {
            termination: trace.termination.to_string(),
            steps: trace.steps(),
            final_rows: trace.last().len(),
            wall_time_ms,
        },
        artifacts: artifact_files(trace.steps()),
    };
    write_trace_dir(&a.out, &trace, &manifest)?;
    println!(
        "{}: {} after {} steps, {} distinct rows",
        a.out.display(),
        trace.termination,
        trace.steps(),
        trace.last().len()
    );
    Ok(())
}

pub fn homology(a: &HomologyArgs) -> CliResult<()> {
    let (manifest, trace) = load_trace_dir(&a.trace)?;
    let out = a.out.clone().unwrap_or_else(|| a.trace.clone());
    match a.mode.as_str() {
        "condensation" => {
            let run_zeta = trace.zetas.iter().copied().fold(0.0, f64::max);
            let zeta = a
                .zeta
                .unwrap_or(run_zeta.max(manifest.config.convergence_tol));
            let h = condensation_homology(&trace, zeta);
            let dendrogram =
                condensation::topology::dendrogram_from_pairing(&h.pairing, trace.original_size())?;
            let activity = topological_activity(&h.diagram);
            if activity.windows(2).any(|w| w[1].1 < w[0].1) {
                return Err(Failure {
                    code: crate::EXIT_NUMERIC,
                    error: anyhow!("activity curve is not monotone"),
                });
            }
            write_file(
                &out.join("condensation_diagram.csv"),
                &format_diagram(&h.diagram),
            )?;
            write_file(
                &out.join("condensation_barcode.csv"),
                &format_barcode(&h.diagram, 0),
            )?;
            write_file(&out.join("dendrogram.csv"), &format_linkage(&dendrogram))?;
            write_file(&out.join("activity.csv"), &format_activity(&activity))?;
            let finite = h.diagram.finite_points(0).count();
            println!(
                "{} finite bars, {} essential",
                finite,
                h.diagram.len() - finite
            );
        }
        "rips" => {
            let max_dim = a.dims.iter().copied().max().unwrap_or(0);
            let scale = a.max_scale.unwrap_or(f64::INFINITY);
            for (t, snap) in trace.snapshots.iter().enumerate() {
                let mut d = vr_persistence(snap, max_dim, scale)?;
                d.points.retain(|p| a.dims.contains(&p.dim));
                write_file(
                    &out.join(format!("rips_step_{t:04}.csv")),
                    &format_diagram(&d),
                )?;
            }
            if a.dims.contains(&0) {
                let rows = persistence_bound_audit(&trace, 0)?;
                let mut text = String::from("from,to,bottleneck,hausdorff_bound,diam_bound,ok\n");
                for r in &rows {
                    text.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        r.from, r.to, r.bottleneck, r.hausdorff_bound, r.diam_bound, r.ok
                    ));
                }
                write_file(&out.join("stability.csv"), &text)?;
            }
            println!(
                "{} diagrams written to {}",
                trace.snapshots.len(),
                out.display()
            );
        }
        other => {
            return Err(Failure::config(anyhow!(
                "unknown homology mode '{other}' (condensation or rips)"
            )))
        }
    }
    Ok(())
}

pub fn spectra(a: &SpectraArgs) -> CliResult<()> {
    let (manifest, trace) = load_trace_dir(&a.trace)?;
    let dim = trace.initial().dim();
    let text = if trace.steps() == 0 {
        format!("{}\n", spectral_header(dim))
    } else {
        format_spectral(&spectral_audit(&trace, &manifest.config)?, dim)
    };
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.trace.join("spectral.csv"));
    write_file(&out, &text)?;
    println!("{}", out.display());
    Ok(())
}

pub fn compare_clustering(a: &CompareArgs) -> CliResult<()> {
    let linkage: Linkage = a.mode.parse()?;
    let cloud = read_cloud(&a.input)?;
    let reference = agglomerate(&cloud, linkage)?;
    let condensed = condensation_as_clustering(&cloud, linkage.into())?;
    if let Some(dir) = &a.out {
        write_file(
            &dir.join("agglomerative_linkage.csv"),
            &format_linkage(&reference),
        )?;
        write_file(
            &dir.join("condensation_linkage.csv"),
            &format_linkage(&condensed),
        )?;
    }
    if same_merge_tree(&reference, &condensed)? {
        println!(
            "equivalent: condensation reproduces {linkage} on {} points",
            cloud.len()
        );
        Ok(())
    } else {
        println!("not equivalent: merge trees differ ({linkage})");
        Err(Failure {
            code: EXIT_NOT_EQUIVALENT,
            error: anyhow!("merge trees differ"),
        })
    }
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    let mut text = String::new();
    for path in &a.paths {
        let file = manifest_path(path);
        let manifest =
            fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        text.push_str(&format!("# {}\n{manifest}", file.display()));
        if !manifest.ends_with('\n') {
            text.push('\n');
        }
    }
    let mut stdout = std::io::stdout().lock();
    match stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
    {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::config(e)),
        _ => Ok(()),
    }
}
