use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use relmat::builders::{
    bow_matrix, coattendance, cooccurrence, similarity_matrix, tfidf_transform, word_context, Corpus, TabularSource,
    DOC_TYPE,
};
use relmat::eval::{acc, ari, kmeans, nmi, synth, KMeansConfig, Partition};
use relmat::io::{load_embeddings, load_labels, load_matrix, save_embeddings, save_labels, save_matrix};
use relmat::postproc::{center_by_type, nearest_neighbors, pairwise_distances, Query};
use relmat::trainer::TrainObserver;
use relmat::{EmbeddingSet, MatrixSet, Registry, RelationMatrix};

use crate::config::{parse_sampling, RunConfig};
use crate::{BuildArgs, CliError, EvalArgs, ExportArgs, Recipe, SynthArgs, SynthTask, TrainArgs};

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn need<'a>(v: &'a Option<String>, flag: &str, recipe: &str) -> CliResult<&'a str> {
    v.as_deref().ok_or_else(|| CliError::Usage(format!("`{recipe}` requires --{flag}")))
}

fn read_table(args: &BuildArgs, attrs: &[&str]) -> CliResult<TabularSource> {
    let delimiter = match args.delimiter {
        Some(c) if c.is_ascii() => c as u8,
        Some(c) => return Err(CliError::Usage(format!("delimiter `{c}` is not ASCII"))),
        None if args.input.extension().is_some_and(|e| e == "csv") => b',',
        None => b'\t',
    };
    let src = TabularSource::read(&args.input, delimiter)?;
    for a in attrs {
        if !src.columns().iter().any(|c| c == a) {
            return Err(CliError::Usage(format!(
                "no column `{a}` in {} (columns: {})",
                args.input.display(),
                src.columns().join(", ")
            )));
        }
    }
    Ok(src)
}

fn read_corpus(args: &BuildArgs) -> CliResult<Corpus> {
    if args.input.is_dir() {
        let (corpus, labels) = Corpus::read_labeled_dir(&args.input)?;
        if let Some(path) = &args.labels_out {
            let rows: Vec<(String, String)> =
                corpus.names.iter().zip(labels).map(|(n, l)| (format!("{DOC_TYPE}:{n}"), l)).collect();
            save_labels(path, &rows)?;
        }
        Ok(corpus)
    } else {
        if args.labels_out.is_some() {
            return Err(CliError::Usage("--labels-out needs a labeled corpus directory".into()));
        }
        Ok(Corpus::read(&args.input)?)
    }
}

pub fn build(args: &BuildArgs) -> CliResult {
    let mut reg = Registry::new();
    let m: RelationMatrix = match args.recipe {
        Recipe::Cooccur => {
            let (row, col) = (need(&args.row, "row", "cooccur")?, need(&args.col, "col", "cooccur")?);
            cooccurrence(&mut reg, &read_table(args, &[row, col])?, row, col)?
        }
        Recipe::Coattend => {
            let (row, via) = (need(&args.row, "row", "coattend")?, need(&args.via, "via", "coattend")?);
            coattendance(&mut reg, &read_table(args, &[row, via])?, row, via)?
        }
        Recipe::Similarity => {
            let key = need(&args.key, "key", "similarity")?;
            if args.features.is_empty() {
                return Err(CliError::Usage("`similarity` requires --features".into()));
            }
            let attrs: Vec<&str> = args.features.iter().map(String::as_str).collect();
            let mut all = attrs.clone();
            all.push(key);
            let src = read_table(args, &all)?;
            similarity_matrix(&mut reg, key, &src.features(key, &attrs)?, args.threshold, args.top_k)?
        }
        Recipe::Tfidf => tfidf_transform(&load_matrix(&args.input, &mut reg)?)?,
        Recipe::Wordcontext => word_context(&mut reg, &read_corpus(args)?, args.window, args.vocab)?,
        Recipe::Bow => bow_matrix(&mut reg, &read_corpus(args)?, args.vocab)?,
    };
    let m = m.with_alpha(args.alpha)?;
    save_matrix(&args.output, &reg, &m)?;
    println!("cells={} mass={}", m.nnz(), m.total_mass());
    Ok(())
}

/// Appends probe losses to `probes.tsv` and writes checkpoint files.
struct RunObserver {
    probes: BufWriter<File>,
    probes_path: PathBuf,
    out_dir: PathBuf,
    registry: Registry,
}

impl TrainObserver<f32> for RunObserver {
    fn on_probe(&mut self, iteration: usize, loss: f64) {
        if let Err(e) = writeln!(self.probes, "{iteration}\t{loss}") {
            log::warn!("{}: {e}", self.probes_path.display());
        }
    }

    fn on_checkpoint(&mut self, iteration: usize, embeddings: &EmbeddingSet<f32>) -> relmat::Result<()> {
        save_embeddings(&self.out_dir.join(format!("checkpoint-{iteration}.txt")), &self.registry, embeddings)
    }
}

pub fn train(args: &TrainArgs) -> CliResult {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = &args.sampling {
        cfg.train.sampling = parse_sampling(s).map_err(CliError::Usage)?;
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.train.workers = w;
    }
    if let Some(n) = args.n_iter {
        cfg.train.n_iter = n;
    }
    if let Some(d) = &args.out_dir {
        cfg.out_dir = std::path::absolute(d).map_err(|e| io_err(d, e))?;
    }
    cfg.train.validate()?;
    cfg.check_files()?;

    let mut reg = Registry::new();
    let mut set = MatrixSet::new();
    for entry in &cfg.matrices {
        let mut m = load_matrix(&entry.path, &mut reg)?;
        if let Some(a) = entry.alpha {
            m.set_alpha(a)?;
        }
        set.push(m);
    }
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    let echo = cfg.out_dir.join("config.txt");
    fs::write(&echo, cfg.echo()).map_err(|e| io_err(&echo, e))?;

    let probes_path = cfg.out_dir.join("probes.tsv");
    let probes = File::create(&probes_path).map(BufWriter::new).map_err(|e| io_err(&probes_path, e))?;
    let mut observer = RunObserver { probes, probes_path, out_dir: cfg.out_dir.clone(), registry: reg.clone() };
    let emb: EmbeddingSet = relmat::train_with(&set, &reg, &cfg.train, &mut observer)?;
    observer.probes.flush().map_err(|e| io_err(&observer.probes_path, e))?;

    let out = cfg.out_dir.join("embeddings.txt");
    save_embeddings(&out, &reg, &emb)?;
    let counts: Vec<String> = reg.types().map(|(t, ty)| format!("{}={}", ty.name, emb.type_len(t))).collect();
    println!("embeddings={} {}", out.display(), counts.join(" "));
    Ok(())
}

pub fn eval(args: &EvalArgs) -> CliResult {
    let (reg, emb) = load_embeddings(&args.embeddings)?;
    let emb = if args.center { center_by_type(&emb) } else { emb };
    let labels = load_labels(&args.labels)?;
    if labels.is_empty() {
        return Err(CliError::Data(format!("{}: no labels", args.labels.display())));
    }
    let mut points = Vec::with_capacity(labels.len());
    let mut missing = Vec::new();
    for (key, _) in &labels {
        match reg.lookup_key(key) {
            Ok((t, id)) => points.push(emb.row(t, id).iter().map(|&x| f64::from(x)).collect::<Vec<f64>>()),
            Err(_) => missing.push(key.as_str()),
        }
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(10).copied().collect();
        let more = if missing.len() > shown.len() {
            format!(" and {} more", missing.len() - shown.len())
        } else {
            String::new()
        };
        return Err(CliError::Data(format!(
            "{} of {} labeled entities are not in {}: {}{more}",
            missing.len(),
            labels.len(),
            args.embeddings.display(),
            shown.join(", ")
        )));
    }
    let names: Vec<&str> = labels.iter().map(|(_, l)| l.as_str()).collect();
    let (truth, distinct) = Partition::from_strings(&names);
    let k = args.k.unwrap_or(distinct.len());
    let config = KMeansConfig { n_init: args.n_init, ..KMeansConfig::new(k, args.seed) };
    let pred = kmeans(&points, &config)?.partition;
    if let Some(path) = &args.assignments {
        let rows: Vec<(String, String)> =
            labels.iter().zip(pred.labels()).map(|((key, _), c)| (key.clone(), c.to_string())).collect();
        save_labels(path, &rows)?;
    }
    println!(
        "n={} k={k} nmi={:?} ari={:?} acc={:?}",
        labels.len(),
        nmi(&pred, &truth)?,
        ari(&pred, &truth)?,
        acc(&pred, &truth)?
    );
    Ok(())
}

pub fn export(args: &ExportArgs) -> CliResult {
    let (reg, emb) = load_embeddings(&args.embeddings)?;
    let emb = if args.center { center_by_type(&emb) } else { emb };
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let dest = args.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let werr = |e: std::io::Error| io_err(&dest, e);

    if !args.dist.is_empty() {
        let types = args.dist.iter().map(|t| reg.type_id(t)).collect::<relmat::Result<Vec<_>>>()?;
        let d = pairwise_distances(&emb, &types)?;
        relmat::io::write_distances(&mut out, &reg, &d).map_err(werr)?;
    } else if let Some(target) = &args.neighbors {
        if args.query.is_empty() {
            return Err(CliError::Usage("--neighbors requires at least one --query type:name".into()));
        }
        let target = reg.type_id(target)?;
        for q in &args.query {
            let (t, id) = reg.lookup_key(q)?;
            let found = nearest_neighbors(&emb, &Query::Entity(t, id), target, args.k)?;
            relmat::io::write_neighbors(&mut out, &reg, q, target, &found).map_err(werr)?;
        }
    } else {
        if !args.query.is_empty() {
            return Err(CliError::Usage("--query needs --neighbors".into()));
        }
        relmat::io::write_embeddings(&mut out, &reg, &emb).map_err(werr)?;
    }
    out.flush().map_err(werr)?;
    Ok(())
}

fn cluster_labels(type_name: &str, labels: &[usize], names: &[&str]) -> Vec<(String, String)> {
    labels.iter().enumerate().map(|(i, &l)| (format!("{type_name}:{i}"), names[l].to_string())).collect()
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let four = synth::four_cluster_labels();
    let mut reg = Registry::new();
    let mut written = BTreeSet::new();
    let config = match args.task {
        SynthTask::TwoMatrix => {
            let ab = synth::two_block_ab().build(&mut reg, "A", "B")?;
            let ac = synth::center_corner_ac().build(&mut reg, "A", "C")?;
            save_matrix(&dir.join("A_B.mat"), &reg, &ab)?;
            save_matrix(&dir.join("A_C.mat"), &reg, &ac)?;
            save_labels(&dir.join("labels.tsv"), &cluster_labels("A", &four, &synth::CLUSTER_NAMES))?;
            save_labels(&dir.join("labels_rg_bk.tsv"), &cluster_labels("A", &synth::rg_bk_labels(), &["RG", "BK"]))?;
            save_labels(&dir.join("labels_gb_rk.tsv"), &cluster_labels("A", &synth::gb_rk_labels(), &["RK", "GB"]))?;
            written.extend(["A_B.mat", "A_C.mat", "labels.tsv", "labels_rg_bk.tsv", "labels_gb_rk.tsv"]);
            "# short budget: global sampling has not yet picked up the light A x C matrix\n\
             matrix = A_B.mat\nmatrix = A_C.mat\nn_iter = 40\n"
        }
        SynthTask::FourBlock => {
            let ab = synth::four_block().build(&mut reg, "A", "B")?;
            save_matrix(&dir.join("A_B.mat"), &reg, &ab)?;
            let mut labels = cluster_labels("A", &four, &synth::CLUSTER_NAMES);
            labels.extend(cluster_labels("B", &four, &synth::CLUSTER_NAMES));
            save_labels(&dir.join("labels.tsv"), &labels)?;
            written.extend(["A_B.mat", "labels.tsv"]);
            "# planar embeddings, plotted directly\nmatrix = A_B.mat\ndim = 2\nn_iter = 1000\n"
        }
    };
    let conf = dir.join("train.conf");
    fs::write(&conf, config).map_err(|e| io_err(&conf, e))?;
    written.insert("train.conf");
    println!("wrote {} in {}", written.into_iter().collect::<Vec<_>>().join(" "), dir.display());
    Ok(())
}
