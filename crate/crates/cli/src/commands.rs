use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use fusekit::analysis::{
    complementarity_report, export_histograms, histogram_csv, normalized_distribution, pairs_csv, sample_pairs,
};
use fusekit::efficiency::{
    estimate_flat_index_size, flops_bm25, flops_dense, flops_multivector, flops_sparse, measure_latency,
    render_profile_table, CostModelInputs, FlopsReport, IndexSize, ProfileRow, DEFAULT_WARMUP,
};
use fusekit::fusion::{
    build_score_distribution, distributions_for, fuse_runsets, parse_weights, tune_weights, FusionSpec, Normalization,
    DEFAULT_TUNING_STEP,
};
use fusekit::io::{read_corpus, read_qrels, read_queries, read_run, write_run};
use fusekit::lexical::{tokenize, Bm25Params, LexicalIndex};
use fusekit::metrics::{evaluate_run, Metric};
use fusekit::model::{DocId, QueryId, RunList, RunSet};
use fusekit::synth::{generate, SynthConfig};
use fusekit::vectors::{
    ids_path, read_dense_records, read_multivector_records, read_sparse_records, FlatDenseIndex, MultiVectorStore,
    SparseIndex,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{pick, pick_path, Config};
use crate::{
    AnalyzeArgs, Cli, CliError, Command, EvalArgs, FuseArgs, IndexArgs, Kind, Preset, ProfileArgs, SearchArgs,
    SynthArgs, TuneArgs,
};

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_K: usize = 100;
const DEFAULT_CUTOFFS: &str = "1,5,10,20,50,100";
const DEFAULT_ANALYSIS_SEED: u64 = 13;
const DEFAULT_PAIRS: usize = 1500;
const DEFAULT_BINS: usize = 50;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Synth(a) => synth(a, &cfg),
        Command::Index(a) => index(a, &cfg),
        Command::Search(a) => search(a, &cfg),
        Command::Fuse(a) => fuse(a, &cfg),
        Command::Tune(a) => tune(a, &cfg),
        Command::Eval(a) => eval(a, &cfg),
        Command::Profile(a) => profile(a, &cfg),
        Command::Analyze(a) => analyze(a, &cfg),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| {
        fusekit::Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

fn query_id(id: &str) -> Result<QueryId> {
    Ok(QueryId::new(id)?)
}

fn check_k(k: usize) -> Result<usize> {
    if k == 0 {
        return Err(CliError::Usage("k must be ≥ 1".into()));
    }
    Ok(k)
}

/// One label per run file: the file stem, suffixed on collision.
fn labels(paths: &[PathBuf]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    paths
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                stem
            } else {
                format!("{stem}-{n}")
            }
        })
        .collect()
}

fn read_runs(paths: &[PathBuf]) -> Result<Vec<RunSet>> {
    paths.iter().map(|p| Ok(read_run(p)?)).collect()
}

fn synth(a: SynthArgs, cfg: &Config) -> Result<()> {
    let defaults = SynthConfig::default();
    let config = SynthConfig {
        seed: pick(a.seed, cfg, "synth", "seed", defaults.seed)?,
        queries: pick(a.queries, cfg, "synth", "queries", defaults.queries)?,
        ..defaults
    };
    let bench = generate(&config)?;
    bench.write_dir(&a.out)?;
    eprintln!(
        "wrote {} documents and {} queries to {}",
        bench.corpus.len(),
        bench.queries.len(),
        a.out.display()
    );
    Ok(())
}

fn input_key(kind: Kind) -> &'static str {
    match kind {
        Kind::Lexical => "corpus",
        Kind::Dense => "dense_docs",
        Kind::Sparse => "sparse_docs",
        Kind::Multivector => "multi_docs",
    }
}

fn query_key(kind: Kind) -> &'static str {
    match kind {
        Kind::Lexical => "queries",
        Kind::Dense => "dense_queries",
        Kind::Sparse => "sparse_queries",
        Kind::Multivector => "multi_queries",
    }
}

fn index(a: IndexArgs, cfg: &Config) -> Result<()> {
    let input = pick_path(a.input, cfg, "paths", input_key(a.kind))?;
    let cosine = pick(a.cosine, cfg, "vectors", "cosine", true)?;
    let count = match a.kind {
        Kind::Lexical => {
            let index = LexicalIndex::build(&read_corpus(&input)?)?;
            index.save(&a.out)?;
            index.corpus_size()
        }
        Kind::Dense => {
            let index = FlatDenseIndex::ingest(&input, cosine)?;
            index.save(&a.out)?;
            index.len()
        }
        Kind::Sparse => {
            let index = SparseIndex::ingest(&input)?;
            index.save(&a.out)?;
            index.len()
        }
        Kind::Multivector => {
            let store = MultiVectorStore::ingest(&input, cosine)?;
            store.save(&a.out)?;
            store.len()
        }
    };
    eprintln!("indexed {count} documents ({}) into {}", a.kind.name(), a.out.display());
    Ok(())
}

fn bm25_params(a: &SearchArgs, cfg: &Config) -> Result<Bm25Params> {
    let preset = match a.preset {
        Some(p) => p,
        None => match cfg.raw("bm25", "preset") {
            Some("legal") => Preset::Legal,
            Some("general") | None => Preset::General,
            Some(other) => return Err(CliError::Usage(format!("config [bm25] preset = `{other}`"))),
        },
    };
    let base = match preset {
        Preset::General => Bm25Params::GENERAL,
        Preset::Legal => Bm25Params::LEGAL,
    };
    let k1 = pick(a.k1, cfg, "bm25", "k1", base.k1)?;
    let b = pick(a.b, cfg, "bm25", "b", base.b)?;
    Ok(Bm25Params::new(k1, b)?)
}

/// Runs `f` over the queries in parallel and collects one run per query.
fn par_search<T, F>(items: &[T], f: F) -> Result<RunSet>
where
    T: Sync,
    F: Fn(&T) -> fusekit::Result<RunList> + Sync,
{
    items
        .par_iter()
        .map(|item| {
            let run = f(item)?;
            Ok((run.query_id().clone(), run))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

fn search(a: SearchArgs, cfg: &Config) -> Result<()> {
    let queries_path = pick_path(a.queries.clone(), cfg, "paths", query_key(a.kind))?;
    let k = check_k(pick(a.k, cfg, "search", "k", DEFAULT_K)?)?;
    let cosine = pick(a.cosine, cfg, "vectors", "cosine", true)?;
    let runs = match a.kind {
        Kind::Lexical => {
            let params = bm25_params(&a, cfg)?;
            let index = LexicalIndex::load(&a.index)?;
            let queries = read_queries(&queries_path)?;
            par_search(&queries, |q| index.search(params, q.id.clone(), &tokenize(&q.text), k))?
        }
        Kind::Dense => {
            let index = FlatDenseIndex::load(&a.index)?;
            let queries = read_dense_records(open(&queries_path)?, &origin(&queries_path), cosine)?;
            par_search(&queries, |q| index.search(QueryId::new(q.id.clone())?, &q.vector, k))?
        }
        Kind::Sparse => {
            let index = SparseIndex::load(&a.index)?;
            let queries = read_sparse_records(open(&queries_path)?, &origin(&queries_path))?;
            par_search(&queries, |(id, v)| index.search(QueryId::new(id.clone())?, v, k))?
        }
        Kind::Multivector => {
            let store = MultiVectorStore::load(&a.index)?;
            let queries = read_multivector_records(open(&queries_path)?, &origin(&queries_path), cosine)?;
            par_search(&queries, |(id, m)| store.search(QueryId::new(id.clone())?, m, k))?
        }
    };
    let tag = a.tag.unwrap_or_else(|| a.kind.name().to_string());
    write_run(runs.values(), &a.out, &tag)?;
    eprintln!("searched {} queries -> {}", runs.len(), a.out.display());
    Ok(())
}

fn fusion_spec(cfg: &Config) -> Result<FusionSpec> {
    let mut spec = FusionSpec::default();
    for (k, v) in cfg.section("fusion") {
        if k != "depth" {
            spec.set(&k, &v)?;
        }
    }
    Ok(spec)
}

fn fuse(a: FuseArgs, cfg: &Config) -> Result<()> {
    let mut spec = fusion_spec(cfg)?;
    if let Some(m) = a.method {
        spec.method = m;
    }
    if let Some(n) = a.norm {
        spec.normalization = n;
    }
    if let Some(w) = &a.weights {
        spec.weights = Some(parse_weights(w)?);
    }
    if let Some(k) = a.rrf_k {
        spec.set("rrf_k", &k.to_string())?;
    }
    let depth = a.depth.or(cfg.get("fusion", "depth")?);
    let systems = read_runs(&a.runs)?;
    let dists = match spec.normalization {
        Normalization::Percentile => Some(distributions_for(&systems, &labels(&a.runs))?),
        _ => None,
    };
    let fused = fuse_runsets(&systems, &spec, dists.as_deref(), depth)?;
    let tag = a.tag.unwrap_or_else(|| spec.label());
    write_run(fused.values(), &a.out, &tag)?;
    eprintln!(
        "fused {} systems over {} queries -> {}",
        systems.len(),
        fused.len(),
        a.out.display()
    );
    Ok(())
}

fn tune(a: TuneArgs, cfg: &Config) -> Result<()> {
    let qrels = read_qrels(pick_path(a.qrels, cfg, "paths", "qrels")?)?;
    let spec = fusion_spec(cfg)?;
    let norm = a.norm.unwrap_or(spec.normalization);
    let metric: Metric = match a.metric.or_else(|| cfg.raw("tune", "metric").map(str::to_string)) {
        Some(m) => m.parse()?,
        None => Metric::Recall(10),
    };
    let step = pick(a.step, cfg, "tune", "step", DEFAULT_TUNING_STEP)?;
    let depth = a.depth.or(cfg.get("fusion", "depth")?);
    let systems = read_runs(&a.runs)?;
    let names = labels(&a.runs);
    let dists = match norm {
        Normalization::Percentile => Some(distributions_for(&systems, &names)?),
        _ => None,
    };
    let outcome = tune_weights(&systems, &qrels, norm, dists.as_deref(), metric, step, depth)?;
    let weights: Vec<String> = outcome.weights.iter().map(f64::to_string).collect();
    println!("systems={}", names.join(","));
    println!("norm={norm}");
    println!("weights={}", weights.join(","));
    println!("{}={}", outcome.metric, outcome.score);
    if let Some(path) = &a.out {
        let report = json!({
            "systems": names,
            "normalization": norm.name(),
            "step": step,
            "outcome": outcome,
        });
        write_file(
            path,
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        )?;
    }
    if let Some(path) = &a.write_config {
        let text = format!(
            "[fusion]\nmethod = nsf\nnorm = {norm}\nweights = {}\n",
            weights.join(",")
        );
        write_file(path, text)?;
    }
    Ok(())
}

fn parse_cutoffs(text: &str) -> Result<Vec<usize>> {
    let cutoffs = text
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .ok()
                .filter(|k| *k > 0)
                .ok_or_else(|| CliError::Usage(format!("cutoff `{c}` is not a positive integer")))
        })
        .collect::<Result<Vec<_>>>()?;
    if !cutoffs.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::Usage(format!("cutoffs must be strictly increasing: {text}")));
    }
    Ok(cutoffs)
}

fn eval(a: EvalArgs, cfg: &Config) -> Result<()> {
    let qrels = read_qrels(pick_path(a.qrels, cfg, "paths", "qrels")?)?;
    let cutoffs_text = a
        .cutoffs
        .or_else(|| cfg.raw("eval", "cutoffs").map(str::to_string))
        .unwrap_or_else(|| DEFAULT_CUTOFFS.to_string());
    let cutoffs = parse_cutoffs(&cutoffs_text)?;
    let runs = read_run(&a.run)?;
    let report = evaluate_run(&runs, &qrels, &Metric::standard_set(&cutoffs))?;
    let text = if a.json {
        report.to_json() + "\n"
    } else {
        report.to_table()
    };
    print!("{text}");
    if let Some(path) = &a.out {
        write_file(path, &text)?;
    }
    Ok(())
}

fn cost_inputs(a: &ProfileArgs, cfg: &Config) -> Result<CostModelInputs> {
    let d = CostModelInputs::default();
    let inputs = CostModelInputs {
        avg_query_len: pick(a.avg_query_len, cfg, "cost", "avg_query_len", d.avg_query_len)?,
        avg_doc_len: pick(a.avg_doc_len, cfg, "cost", "avg_doc_len", d.avg_doc_len)?,
        corpus_size: pick(a.corpus_size, cfg, "cost", "corpus_size", d.corpus_size)?,
        dim: pick(a.dim, cfg, "cost", "dim", d.dim)?,
        token_dim: pick(a.token_dim, cfg, "cost", "token_dim", d.token_dim)?,
        bits_per_value: pick(a.bits, cfg, "cost", "bits", d.bits_per_value)?,
        forward_flops: pick(a.forward_flops, cfg, "cost", "forward_flops", d.forward_flops)?,
        cross_forward_flops: pick(
            a.cross_forward_flops,
            cfg,
            "cost",
            "cross_forward_flops",
            d.cross_forward_flops,
        )?,
        avg_query_nonzeros: pick(
            a.avg_query_nonzeros,
            cfg,
            "cost",
            "avg_query_nonzeros",
            d.avg_query_nonzeros,
        )?,
        avg_posting_len: pick(a.avg_posting_len, cfg, "cost", "avg_posting_len", d.avg_posting_len)?,
        rerank_depth: pick(a.rerank_depth, cfg, "cost", "rerank_depth", d.rerank_depth)?,
    };
    inputs.validate()?;
    Ok(inputs)
}

fn file_bytes(path: &Path) -> Result<u64> {
    let main = fs::metadata(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .len();
    let ids = fs::metadata(ids_path(path)).map(|m| m.len()).unwrap_or(0);
    Ok(main + ids)
}

fn profile(a: ProfileArgs, cfg: &Config) -> Result<()> {
    let inputs = cost_inputs(&a, cfg)?;
    let plaintext = match &a.corpus {
        Some(p) => Some(read_corpus(p)?.plaintext_bytes()),
        None => None,
    };
    let ratio = |size: &IndexSize| plaintext.and_then(|p| size.ratio_to(p));
    let rows = match a.kind {
        None => analytic_rows(&inputs, ratio),
        Some(kind) => {
            let index = a.index.as_deref().expect("clap requires --index");
            let queries = a.queries.as_deref().expect("clap requires --queries");
            let warmup = pick(a.warmup, cfg, "profile", "warmup", DEFAULT_WARMUP)?;
            let k = check_k(pick(a.k, cfg, "search", "k", DEFAULT_K)?)?;
            let mut row = live_row(kind, index, queries, warmup, k, &inputs, cfg)?;
            row.index = Some(IndexSize::from_bytes(file_bytes(index)?));
            row.ratio = row.index.as_ref().and_then(ratio);
            vec![row]
        }
    };
    if a.json {
        let report = json!({ "inputs": inputs, "rows": rows });
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", render_profile_table(&rows));
    }
    Ok(())
}

fn analytic_rows(i: &CostModelInputs, ratio: impl Fn(&IndexSize) -> Option<f64>) -> Vec<ProfileRow> {
    let flops = FlopsReport::from_inputs(i);
    let dense = estimate_flat_index_size(i.dim, i.bits_per_value, i.corpus_size);
    let tokens = (i.avg_doc_len * i.corpus_size as f64).round() as u64;
    let multi = estimate_flat_index_size(i.token_dim, i.bits_per_value, tokens);
    let row = |system: &str, index: Option<IndexSize>, flops: f64| ProfileRow {
        system: system.into(),
        ratio: index.as_ref().and_then(&ratio),
        index,
        latency_secs: None,
        flops,
    };
    vec![
        row("bm25", None, flops.bm25),
        row("dense", Some(dense), flops.dense),
        row("sparse", None, flops.sparse),
        row("multivector", Some(multi), flops.multivector),
        row("multivector-closed-form", Some(multi), flops.multivector_closed_form),
        row("cross-encoder", None, flops.cross_encoder),
    ]
}

fn live_row(
    kind: Kind,
    index: &Path,
    queries: &Path,
    warmup: usize,
    k: usize,
    inputs: &CostModelInputs,
    cfg: &Config,
) -> Result<ProfileRow> {
    let cosine = pick(None, cfg, "vectors", "cosine", true)?;
    let sink = |r: fusekit::Result<RunList>| {
        std::hint::black_box(r.expect("search over validated inputs"));
    };
    let (latency, flops) = match kind {
        Kind::Lexical => {
            let idx = LexicalIndex::load(index)?;
            let qs: Vec<(QueryId, Vec<String>)> = read_queries(queries)?
                .into_iter()
                .map(|q| (q.id, tokenize(&q.text)))
                .collect();
            let avg_len = qs.iter().map(|q| q.1.len()).sum::<usize>() as f64 / qs.len().max(1) as f64;
            let lat = measure_latency(&qs, warmup, |(id, t)| {
                sink(idx.search(Bm25Params::GENERAL, id.clone(), t, k))
            })?;
            (lat, flops_bm25(avg_len, idx.corpus_size() as u64))
        }
        Kind::Dense => {
            let idx = FlatDenseIndex::load(index)?;
            let qs = read_dense_records(open(queries)?, &origin(queries), cosine)?;
            let ids = qs.iter().map(|q| query_id(&q.id)).collect::<Result<Vec<_>>>()?;
            let pairs: Vec<_> = ids.into_iter().zip(qs).collect();
            let lat = measure_latency(&pairs, warmup, |(id, q)| sink(idx.search(id.clone(), &q.vector, k)))?;
            (
                lat,
                flops_dense(inputs.forward_flops, idx.dim() as u64, idx.len() as u64),
            )
        }
        Kind::Sparse => {
            let idx = SparseIndex::load(index)?;
            let qs = read_sparse_records(open(queries)?, &origin(queries))?;
            let nnz = qs.iter().map(|q| q.1.nnz()).sum::<usize>() as f64 / qs.len().max(1) as f64;
            let ids = qs.iter().map(|q| query_id(&q.0)).collect::<Result<Vec<_>>>()?;
            let pairs: Vec<_> = ids.into_iter().zip(qs).collect();
            let lat = measure_latency(&pairs, warmup, |(id, (_, v))| sink(idx.search(id.clone(), v, k)))?;
            (lat, flops_sparse(inputs.forward_flops, nnz, idx.avg_posting_len()))
        }
        Kind::Multivector => {
            let store = MultiVectorStore::load(index)?;
            let qs = read_multivector_records(open(queries)?, &origin(queries), cosine)?;
            let q_len = qs.iter().map(|q| q.1.rows()).sum::<usize>() as f64 / qs.len().max(1) as f64;
            let d_len = store.total_tokens() as f64 / store.len() as f64;
            let ids = qs.iter().map(|q| query_id(&q.0)).collect::<Result<Vec<_>>>()?;
            let pairs: Vec<_> = ids.into_iter().zip(qs).collect();
            let lat = measure_latency(&pairs, warmup, |(id, (_, m))| sink(store.search(id.clone(), m, k)))?;
            let flops = flops_multivector(
                inputs.forward_flops,
                store.dim() as u64,
                q_len,
                d_len,
                store.len() as u64,
            );
            (lat, flops)
        }
    };
    Ok(ProfileRow {
        system: kind.name().into(),
        index: None,
        ratio: None,
        latency_secs: Some(latency.mean_secs),
        flops,
    })
}

fn analyze(a: AnalyzeArgs, cfg: &Config) -> Result<()> {
    let qrels = read_qrels(pick_path(a.qrels, cfg, "paths", "qrels")?)?;
    let seed = pick(a.seed, cfg, "analysis", "seed", DEFAULT_ANALYSIS_SEED)?;
    let bins = pick(a.bins, cfg, "analysis", "bins", DEFAULT_BINS)?;
    let systems = read_runs(&a.runs)?;
    let names = labels(&a.runs);
    let corpus: Option<Vec<DocId>> = match &a.corpus {
        Some(p) => Some(read_corpus(p)?.iter().map(|d| d.id.clone()).collect()),
        None => None,
    };

    let judged: BTreeSet<&QueryId> = systems
        .iter()
        .flat_map(|s| s.keys())
        .filter(|q| qrels.relevant(q.as_str()).is_some_and(|r| !r.is_empty()))
        .collect();
    let available: usize = judged
        .iter()
        .map(|q| qrels.relevant(q.as_str()).map_or(0, |r| r.len()))
        .sum();
    let n_pos = match a.n_pos.or(cfg.get("analysis", "n_pos")?) {
        Some(n) => n,
        None => available.min(DEFAULT_PAIRS),
    };
    let n_neg = a.n_neg.or(cfg.get("analysis", "n_neg")?).unwrap_or(n_pos);

    create_dir(&a.out)?;
    let mut quartiles = BTreeMap::new();
    let mut minmax_dists = Vec::new();
    for (runs, name) in systems.iter().zip(&names) {
        let raw = build_score_distribution(name.clone(), runs.values())?;
        for norm in Normalization::ALL {
            let dist = normalized_distribution(name, runs, norm, Some(&raw))?;
            let hist = export_histograms(&dist, bins)?;
            write_file(&a.out.join(format!("hist_{name}_{norm}.csv")), histogram_csv(&hist))?;
            if norm == Normalization::MinMax {
                quartiles.insert(name.clone(), [dist.q1(), dist.median(), dist.q3()]);
                minmax_dists.push(dist);
            }
        }
    }

    let pairs = sample_pairs(&systems, &qrels, corpus.as_deref(), n_pos, n_neg, seed)?;
    write_file(&a.out.join("pairs.csv"), pairs_csv(&pairs, &names))?;
    let report = complementarity_report(&pairs, &minmax_dists[0], &minmax_dists[1]);
    write_file(&a.out.join("regions.csv"), report.to_csv())?;
    let summary = json!({
        "systems": names,
        "seed": seed,
        "n_pos": n_pos,
        "n_neg": n_neg,
        "bins": bins,
        "minmax_quartiles": quartiles,
        "regions": report,
    });
    write_file(
        &a.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    eprintln!("wrote analysis of {} pairs to {}", pairs.len(), a.out.display());
    Ok(())
}
