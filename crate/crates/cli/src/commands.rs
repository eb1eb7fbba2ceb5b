use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use glosshift::analysis::{
    alignment, build_report, correlate_report, read_alignments, read_scores, write_markdown, write_rows_csv,
    write_scatter, write_summary_csv, AnalysisError, Metric, VocabBijection, DEFAULT_STRONG_THRESHOLD,
};
use glosshift::bpe::{subword_overlap, train_bpe, SubwordVocab, DEFAULT_VOCAB_SIZE};
use glosshift::conllu::{parse_conllu_file, DependencyTree};
use glosshift::datasets::{
    read_conll_columns, read_jsonl, tagged_records_to_sentences, transform_classification, transform_qa_dataset,
    transform_token_dataset, write_conll_columns, write_jsonl, DatasetError, NliRecord, QaRecord, TaggedRecord,
};
use glosshift::embedding::EmbeddingTable;
use glosshift::ordering::{estimate_ordering, OrderingModel, ReorderOptions};
use glosshift::sgns::{train_sgns, SgnsConfig};
use glosshift::transform::{build_bilingual_mixture, stream_transform, MixMode};
use glosshift::translit::{TranslitMap, TranslitMapBuilder, DEFAULT_SPECIAL_TOKENS};
use glosshift::{Corpus, Sentence, TransformKind, TransformSpec, Transformer};

use crate::config::Config;
use crate::error::{domain, CliError, CliResult};
use crate::manifest::Recorder;
use crate::{
    AlignArgs, BpeArgs, DatasetArgs, DetranslitArgs, MixArgs, OverlapArgs, ReportArgs, SgnsArgs, SyntaxEstimateArgs,
    Task, TransformArgs, TransformOpts,
};

pub struct Context {
    pub config: Config,
    pub section: &'static str,
    pub threads: Option<usize>,
}

impl Context {
    fn finish(&self, rec: Recorder) -> CliResult<()> {
        rec.finish(rayon::current_num_threads(), self.config.path.as_deref())?;
        Ok(())
    }
}

fn kv(key: &str, value: impl std::fmt::Display) {
    println!("{key}={value}");
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 20, f))
        .map_err(CliError::io(path))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(CliError::io(path))
}

fn read_corpus(path: &Path, rec: &mut Recorder) -> CliResult<Corpus> {
    rec.input(path)?;
    Corpus::read(path.display().to_string(), open(path)?).map_err(CliError::io(path))
}

fn write_corpus(corpus: &Corpus, path: &Path, rec: &mut Recorder) -> CliResult<()> {
    corpus.write(create(path)?).map_err(CliError::io(path))?;
    rec.output(path);
    Ok(())
}

/// `<file>.map` next to `out`.
fn default_map_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".map");
    out.with_file_name(name)
}

/// Where the tokens for a map built on the fly come from.
enum MapSource<'a> {
    Files(&'a [&'a Path]),
    Tokens(Vec<String>),
}

struct Prepared {
    transformer: Transformer,
    parses: Option<Vec<DependencyTree>>,
}

/// Resolves the transformation, its seed and resources, recording inputs
/// and any map that gets written.
fn prepare(
    ctx: &Context,
    opts: &TransformOpts,
    source: MapSource<'_>,
    out_for_map: &Path,
    rec: &mut Recorder,
) -> CliResult<Prepared> {
    let cfg = &ctx.config;
    let s = ctx.section;
    let kind: String = cfg.require(s, "kind", opts.kind.clone())?;
    let probe = TransformSpec::parse(&kind, 0).map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = match cfg.pick(s, "seed", opts.seed)? {
        Some(seed) => seed,
        None if probe.is_stochastic() => {
            return Err(CliError::Usage(format!(
                "{kind} is randomized; pass --seed (or set `seed` in the config)"
            )))
        }
        None => 0,
    };
    rec.seed("transform", seed);
    let spec = TransformSpec::parse(&kind, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut transformer = Transformer::new(spec.clone());
    let mut parses = None;

    if spec.contains(TransformKind::Translit) {
        let map = match cfg.pick::<PathBuf>(s, "map", opts.map.clone())? {
            Some(path) => {
                rec.input(&path)?;
                TranslitMap::read(open(&path)?).map_err(|e| CliError::from_lib(&path, e))?
            }
            None => {
                let mut builder = TranslitMapBuilder::new(DEFAULT_SPECIAL_TOKENS);
                match source {
                    MapSource::Files(files) => {
                        for path in files {
                            for line in open(path)?.lines() {
                                builder.observe_line(&line.map_err(CliError::io(path))?);
                            }
                        }
                    }
                    MapSource::Tokens(tokens) => tokens.iter().for_each(|t| builder.observe_token(t)),
                }
                let map = builder.finish().map_err(domain)?;
                let path = cfg
                    .pick::<PathBuf>(s, "map_out", opts.map_out.clone())?
                    .unwrap_or_else(|| default_map_path(out_for_map));
                map.write(create(&path)?).map_err(CliError::io(&path))?;
                rec.output(&path);
                kv("map", path.display());
                map
            }
        };
        transformer = transformer.with_translit(map);
    }

    if spec.contains(TransformKind::Syn) {
        let ordering: PathBuf = cfg.require(s, "ordering", opts.ordering.clone())?;
        let conllu: PathBuf = cfg.require(s, "conllu", opts.conllu.clone())?;
        rec.input(&ordering)?;
        let model = OrderingModel::read(open(&ordering)?).map_err(|e| CliError::from_lib(&ordering, e))?;
        rec.input(&conllu)?;
        parses = Some(parse_conllu_file(&conllu).map_err(|e| CliError::from_lib(&conllu, e))?);
        transformer = transformer.with_syntax(model, ReorderOptions::default());
    }
    Ok(Prepared { transformer, parses })
}

pub fn transform(ctx: &Context, a: TransformArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let input: PathBuf = cfg.require(ctx.section, "in", a.input)?;
    let out: PathBuf = cfg.require(ctx.section, "out", a.out)?;
    let chunk = cfg.or(ctx.section, "chunk", a.chunk, 10_000)?;
    let mut rec = Recorder::new("transform");
    rec.input(&input)?;
    let p = prepare(ctx, &a.opts, MapSource::Files(&[input.as_path()]), &out, &mut rec)?;
    let reader = open(&input)?;
    let writer = create(&out)?;
    let n = stream_transform(reader, writer, &p.transformer, p.parses.as_deref(), chunk)
        .map_err(|e| CliError::from_lib(&input, e))?;
    rec.output(&out);
    ctx.finish(rec)?;
    kv("kind", p.transformer.spec());
    kv("seed", p.transformer.spec().seed);
    kv("sentences", n);
    kv("output", out.display());
    Ok(())
}

pub fn detranslit(ctx: &Context, a: DetranslitArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let map_path: PathBuf = cfg.require(ctx.section, "map", a.map)?;
    let input: PathBuf = cfg.require(ctx.section, "in", a.input)?;
    let out: PathBuf = cfg.require(ctx.section, "out", a.out)?;
    let mut rec = Recorder::new("detranslit");
    rec.input(&map_path)?;
    let map = TranslitMap::read(open(&map_path)?).map_err(|e| CliError::from_lib(&map_path, e))?;
    rec.input(&input)?;
    let mut w = create(&out)?;
    let mut n = 0;
    for (i, line) in open(&input)?.lines().enumerate() {
        let line = line.map_err(CliError::io(&input))?;
        let tokens = Sentence::parse(&line)
            .tokens()
            .iter()
            .map(|t| map.invert_token(t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Domain(format!("{}: line {}: {e}", input.display(), i + 1)))?;
        writeln!(w, "{}", tokens.join(" ")).map_err(CliError::io(&out))?;
        n += 1;
    }
    w.flush().map_err(CliError::io(&out))?;
    rec.output(&out);
    ctx.finish(rec)?;
    kv("sentences", n);
    kv("output", out.display());
    Ok(())
}

pub fn mix(ctx: &Context, a: MixArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let mode: String = cfg.require(ctx.section, "mode", a.mode)?;
    let mode: MixMode = mode.parse().map_err(|e: glosshift::transform::TransformError| CliError::Usage(e.to_string()))?;
    let input: PathBuf = cfg.require(ctx.section, "in", a.input)?;
    let second_path: Option<PathBuf> = cfg.pick(ctx.section, "second", a.second)?;
    let out_dir: PathBuf = cfg.require(ctx.section, "out_dir", a.out_dir)?;
    std::fs::create_dir_all(&out_dir).map_err(CliError::io(&out_dir))?;
    let mut rec = Recorder::new("mix");
    let first = read_corpus(&input, &mut rec)?;
    let second = match &second_path {
        Some(p) => Some(read_corpus(p, &mut rec)?),
        None => None,
    };
    let map_files: Vec<&Path> = std::iter::once(input.as_path()).chain(second_path.as_deref()).collect();
    let derived_path = out_dir.join("derived.txt");
    let p = prepare(ctx, &a.opts, MapSource::Files(&map_files), &derived_path, &mut rec)?;
    let (orig, derived) = build_bilingual_mixture(&first, second.as_ref(), &p.transformer, mode, p.parses.as_deref())
        .map_err(|e| match e {
            glosshift::transform::TransformError::MissingSecondCorpus
            | glosshift::transform::TransformError::UnexpectedSecondCorpus => CliError::Usage(e.to_string()),
            e => CliError::from_lib(&input, e),
        })?;
    write_corpus(&orig, &out_dir.join("original.txt"), &mut rec)?;
    write_corpus(&derived, &derived_path, &mut rec)?;
    let mut all = orig.sentences.clone();
    all.extend(derived.sentences.iter().cloned());
    write_corpus(&Corpus::new("mixed", all), &out_dir.join("mixed.txt"), &mut rec)?;
    ctx.finish(rec)?;
    kv("mode", mode);
    kv("kind", p.transformer.spec());
    kv("original", orig.len());
    kv("derived", derived.len());
    kv("out_dir", out_dir.display());
    Ok(())
}

pub fn bpe(ctx: &Context, a: BpeArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let inputs: Vec<PathBuf> = if a.input.is_empty() {
        cfg.require(ctx.section, "in", None)?
    } else {
        a.input
    };
    let size = cfg.or(ctx.section, "vocab_size", a.vocab_size, DEFAULT_VOCAB_SIZE)?;
    let out: PathBuf = cfg.require(ctx.section, "out", a.out)?;
    let mut rec = Recorder::new("bpe");
    let mut sentences = Vec::new();
    for p in &inputs {
        sentences.extend(read_corpus(p, &mut rec)?.sentences);
    }
    let vocab = train_bpe(&Corpus::new("bpe", sentences), size).map_err(domain)?;
    vocab.write(create(&out)?).map_err(CliError::io(&out))?;
    rec.output(&out);
    ctx.finish(rec)?;
    kv("alphabet", vocab.alphabet().len());
    kv("merges", vocab.merges().len());
    kv("vocab_size", vocab.vocab().len());
    kv("output", out.display());
    Ok(())
}

pub fn overlap(ctx: &Context, a: OverlapArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let c1: PathBuf = cfg.require(ctx.section, "c1", a.c1)?;
    let c2: PathBuf = cfg.require(ctx.section, "c2", a.c2)?;
    let vocab_path: PathBuf = cfg.require(ctx.section, "vocab", a.vocab)?;
    let mut rec = Recorder::new("overlap");
    let vocab = SubwordVocab::read(open(&vocab_path)?).map_err(|e| CliError::from_lib(&vocab_path, e))?;
    let r = subword_overlap(&read_corpus(&c1, &mut rec)?, &read_corpus(&c2, &mut rec)?, &vocab);
    kv("e1", r.e1_size);
    kv("e2", r.e2_size);
    kv("intersection", r.intersection_size);
    kv("union", r.union_size);
    kv("overlap", format!("{:.4}", r.overlap));
    Ok(())
}

pub fn syntax_estimate(ctx: &Context, a: SyntaxEstimateArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let conllu: PathBuf = cfg.require(ctx.section, "conllu", a.conllu)?;
    let k = cfg.or(ctx.section, "smoothing", a.smoothing, 1.0)?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(CliError::Usage(format!("--smoothing must be a non-negative number, got {k}")));
    }
    let out: PathBuf = cfg.require(ctx.section, "out", a.out)?;
    let mut rec = Recorder::new("syntax-estimate");
    rec.input(&conllu)?;
    let trees = parse_conllu_file(&conllu).map_err(|e| CliError::from_lib(&conllu, e))?;
    let model = estimate_ordering(&trees, k).map_err(|e| CliError::from_lib(&conllu, e))?;
    model.write(create(&out)?).map_err(CliError::io(&out))?;
    rec.output(&out);
    ctx.finish(rec)?;
    kv("trees", trees.len());
    kv("keys", model.counts().count());
    kv("prior", format!("{:.4}", model.prior()));
    kv("output", out.display());
    Ok(())
}

fn is_jsonl(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

fn dataset_error(path: &Path, e: DatasetError) -> CliError {
    CliError::from_lib(path, e)
}

pub fn dataset(ctx: &Context, a: DatasetArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let task: Task = cfg.require(ctx.section, "task", a.task)?;
    let input: PathBuf = cfg.require(ctx.section, "in", a.input)?;
    let out: PathBuf = cfg.require(ctx.section, "out", a.out)?;
    let mut rec = Recorder::new("dataset");
    rec.input(&input)?;
    let err = |e| dataset_error(&input, e);

    let (written, skipped) = match task {
        Task::Nli => {
            let records: Vec<NliRecord> = read_jsonl(open(&input)?).map_err(err)?;
            let data: Vec<_> = records.iter().map(NliRecord::to_instance).collect();
            let tokens = data.iter().flat_map(|d| d.sentences.iter().flat_map(|s| s.tokens().to_vec())).collect();
            let p = prepare(ctx, &a.opts, MapSource::Tokens(tokens), &out, &mut rec)?;
            let t = transform_classification(&data, &p.transformer, p.parses.as_deref()).map_err(err)?;
            let kept = kept_records(&records, &t.skipped);
            let outs: Vec<NliRecord> = kept.iter().zip(&t.items).map(|(r, i)| r.with_instance(i)).collect();
            write_jsonl(&outs, create(&out)?).map_err(|e| dataset_error(&out, e))?;
            (outs.len(), t.skipped)
        }
        Task::Ner | Task::Pos => {
            let (data, records) = if is_jsonl(&input) {
                let records: Vec<TaggedRecord> = read_jsonl(open(&input)?).map_err(err)?;
                (tagged_records_to_sentences(&records).map_err(err)?, records)
            } else {
                (read_conll_columns(open(&input)?).map_err(err)?, Vec::new())
            };
            let tokens = data.iter().flat_map(|s| s.tokens().to_vec()).collect();
            let p = prepare(ctx, &a.opts, MapSource::Tokens(tokens), &out, &mut rec)?;
            let t = transform_token_dataset(&data, &p.transformer, p.parses.as_deref()).map_err(err)?;
            if is_jsonl(&out) {
                // Extra fields survive when the input was JSON Lines too.
                let kept = kept_records(&records, &t.skipped);
                let outs: Vec<TaggedRecord> = t
                    .items
                    .iter()
                    .enumerate()
                    .map(|(i, s)| TaggedRecord {
                        tokens: s.tokens().to_vec(),
                        labels: s.labels().to_vec(),
                        extra: kept.get(i).map(|r| r.extra.clone()).unwrap_or_default(),
                    })
                    .collect();
                write_jsonl(&outs, create(&out)?).map_err(|e| dataset_error(&out, e))?;
            } else {
                write_conll_columns(&t.items, create(&out)?).map_err(CliError::io(&out))?;
            }
            (t.items.len(), t.skipped)
        }
        Task::Qa => {
            let records: Vec<QaRecord> = read_jsonl(open(&input)?).map_err(err)?;
            let data = records
                .iter()
                .enumerate()
                .map(|(i, r)| r.to_instance().map_err(|e| e.at(i)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let tokens = data
                .iter()
                .flat_map(|q| q.context.tokens().iter().chain(q.question.tokens()).cloned())
                .collect();
            let p = prepare(ctx, &a.opts, MapSource::Tokens(tokens), &out, &mut rec)?;
            let outs: Vec<QaRecord> = transform_qa_dataset(&data, &p.transformer)
                .map_err(err)?
                .iter()
                .zip(&records)
                .map(|(q, r)| r.with_instance(q))
                .collect();
            write_jsonl(&outs, create(&out)?).map_err(|e| dataset_error(&out, e))?;
            (outs.len(), Vec::new())
        }
    };
    rec.output(&out);
    ctx.finish(rec)?;
    if !skipped.is_empty() {
        eprintln!("glosshift: skipped {} instances without a matching parse: {skipped:?}", skipped.len());
    }
    kv("instances", written);
    kv("skipped", skipped.len());
    kv("output", out.display());
    Ok(())
}

fn kept_records<T: Clone>(records: &[T], skipped: &[usize]) -> Vec<T> {
    records
        .iter()
        .enumerate()
        .filter(|(i, _)| !skipped.contains(i))
        .map(|(_, r)| r.clone())
        .collect()
}

pub fn sgns(ctx: &Context, a: SgnsArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let s = ctx.section;
    let inputs: Vec<PathBuf> = if a.input.is_empty() {
        cfg.require(s, "in", None)?
    } else {
        a.input
    };
    let out: PathBuf = cfg.require(s, "out", a.out)?;
    let d = SgnsConfig::default();
    let sc = SgnsConfig {
        dim: cfg.or(s, "dim", a.dim, d.dim)?,
        window: cfg.or(s, "window", a.window, d.window)?,
        negatives: cfg.or(s, "negatives", a.negatives, d.negatives)?,
        min_count: cfg.or(s, "min_count", a.min_count, d.min_count)?,
        epochs: cfg.or(s, "epochs", a.epochs, d.epochs)?,
        learning_rate: cfg.or(s, "learning_rate", a.learning_rate, d.learning_rate)?,
        seed: cfg
            .pick(s, "seed", a.seed)?
            .ok_or_else(|| CliError::Usage("sgns is randomized; pass --seed (or set `seed` in the config)".into()))?,
        threads: ctx.threads.unwrap_or(1),
    };
    let mut rec = Recorder::new("sgns");
    rec.seed("sgns", sc.seed);
    let mut sentences = Vec::new();
    for p in &inputs {
        sentences.extend(read_corpus(p, &mut rec)?.sentences);
    }
    let outcome = train_sgns(&Corpus::new("sgns", sentences), &sc).map_err(domain)?;
    outcome.table.write(create(&out)?).map_err(CliError::io(&out))?;
    rec.output(&out);
    rec.finish(sc.threads, cfg.path.as_deref())?;
    kv("vocab", outcome.table.len());
    kv("dim", outcome.table.dim());
    kv("threads", sc.threads);
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        kv(&format!("loss_epoch_{}", i + 1), format!("{l:.6}"));
    }
    kv("output", out.display());
    Ok(())
}

pub fn align(ctx: &Context, a: AlignArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let s = ctx.section;
    let emb: PathBuf = cfg.require(s, "emb", a.emb)?;
    let metric: String = cfg.or(s, "metric", a.metric, "cosine".into())?;
    let metric: Metric = metric.parse().map_err(CliError::Usage)?;
    let table = EmbeddingTable::read(open(&emb)?).map_err(|e| CliError::from_lib(&emb, e))?;
    let bijection = match (cfg.pick::<PathBuf>(s, "map", a.map)?, cfg.pick::<PathBuf>(s, "translit", a.translit)?) {
        (Some(m), _) => VocabBijection::read(open(&m)?).map_err(|e| CliError::from_lib(&m, e))?,
        (None, Some(t)) => {
            let map = TranslitMap::read(open(&t)?).map_err(|e| CliError::from_lib(&t, e))?;
            // Table tokens written entirely in the source alphabet whose
            // transliteration also has a row.
            let words: Vec<&str> = table
                .vocab()
                .iter()
                .map(String::as_str)
                .filter(|w| !map.is_special(w) && w.chars().all(|c| map.image(c).is_some()))
                .filter(|w| map.transliterate_token(w).is_ok_and(|d| table.index_of(&d).is_some()))
                .collect();
            VocabBijection::from_translit(words, &map).map_err(domain)?
        }
        (None, None) => return Err(CliError::Usage("align needs --map or --translit".into())),
    };
    let score = alignment(&table, &bijection, metric).map_err(domain)?;
    kv("pairs", bijection.len());
    kv("metric", metric);
    kv("alignment", format!("{score:.4}"));
    Ok(())
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn report(ctx: &Context, a: ReportArgs) -> CliResult<()> {
    let cfg = &ctx.config;
    let s = ctx.section;
    let scores: PathBuf = cfg.require(s, "scores", a.scores)?;
    let align_path: Option<PathBuf> = cfg.pick(s, "align", a.align)?;
    let out_dir: Option<PathBuf> = cfg.pick(s, "out_dir", a.out_dir)?;
    let threshold = cfg.or(s, "threshold", a.threshold, DEFAULT_STRONG_THRESHOLD)?;
    let mut rec = Recorder::new("report");
    rec.input(&scores)?;
    let records = read_scores(open(&scores)?).map_err(|e| CliError::from_lib(&scores, e))?;
    let report = build_report(&records, threshold).map_err(|e| CliError::from_lib(&scores, e))?;
    let correlated = match &align_path {
        Some(p) => {
            rec.input(p)?;
            let alignments = read_alignments(open(p)?).map_err(|e| CliError::from_lib(p, e))?;
            Some(correlate_report(&report, &alignments).map_err(|e| match e {
                AnalysisError::Io(_) => CliError::from_lib(p, e),
                e => domain(e),
            })?)
        }
        None => None,
    };

    let Some(dir) = out_dir else {
        let stdout = std::io::stdout();
        write_markdown(&report, stdout.lock()).map_err(CliError::io(Path::new("<stdout>")))?;
        if let Some(c) = &correlated {
            for t in &c.tasks {
                eprintln!(
                    "glosshift: {} rho={:.4} p={:.4} n={}",
                    t.task, t.correlation.rho, t.correlation.p_value, t.correlation.n
                );
            }
        }
        return Ok(());
    };

    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let md = dir.join("report.md");
    write_markdown(&report, create(&md)?).map_err(CliError::io(&md))?;
    rec.output(&md);
    let rows = dir.join("rows.csv");
    write_rows_csv(&report, create(&rows)?).map_err(|e| CliError::from_lib(&rows, e))?;
    rec.output(&rows);
    let summary = dir.join("summary.csv");
    write_summary_csv(&report, create(&summary)?).map_err(|e| CliError::from_lib(&summary, e))?;
    rec.output(&summary);
    if let Some(c) = &correlated {
        for t in &c.tasks {
            let path = dir.join(format!("scatter_{}.tsv", file_safe(&t.task)));
            write_scatter(t, create(&path)?).map_err(CliError::io(&path))?;
            rec.output(&path);
        }
    }
    ctx.finish(rec)?;
    kv("rows", report.rows.len());
    kv("aggregates", report.aggregates.len());
    kv("strong", report.aggregates.iter().filter(|a| a.strong).count());
    if let Some(c) = &correlated {
        for t in &c.tasks {
            let key = file_safe(&t.task);
            kv(&format!("rho_{key}"), format!("{:.4}", t.correlation.rho));
            kv(&format!("p_{key}"), format!("{:.4}", t.correlation.p_value));
            kv(&format!("n_{key}"), t.correlation.n);
        }
        for task in &c.skipped {
            eprintln!("glosshift: {task}: fewer than 3 settings shared with the alignment table, not correlated");
        }
    }
    kv("out_dir", dir.display());
    Ok(())
}
