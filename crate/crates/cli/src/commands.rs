use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Stdio};

use rayon::prelude::*;

use kanbun_core::corpus::{
    corpus_stats, extract_record, format_corpus, group_split, load_raw, SplitSpec,
};
use kanbun_core::metrics::{corpus_bleu, fleiss_kappa, pearson, spearman, CorrelationRow};
use kanbun_core::reorder::{fit_sentences, reorder_sentence, IdentityPredictor, RankPredictor};
use kanbun_core::{
    parse_marks, render_marks, Annotations, BaselinePredictor, BleuConfig, CharFormTable,
    MarkedSentence, MetricReport, OrderPair, ReadingOrder, Smoothing, SourceSentence,
};

use crate::error::{CliError, Result};
use crate::io::{self, content_lines, format_orders, write_output};
use crate::{Command, SmoothingArg};

pub struct Context {
    pub seed: u64,
    pub char_table: Option<PathBuf>,
}

impl Context {
    fn table(&self) -> Result<CharFormTable> {
        match &self.char_table {
            Some(p) => {
                CharFormTable::load(p).map_err(|e| CliError::data(p, char_table_line(&e), e))
            }
            None => Ok(CharFormTable::shipped()),
        }
    }
}

fn char_table_line(e: &kanbun_core::text::CharFormError) -> Option<usize> {
    use kanbun_core::text::CharFormError::*;
    match e {
        Parse { line, .. } | DuplicateKey { line, .. } | NotInjective { line, .. } => Some(*line),
        Chained { .. } | Io { .. } => None,
    }
}

pub fn run(ctx: &Context, command: Command) -> Result<()> {
    match command {
        Command::Extract {
            input,
            annotations,
            output,
        } => extract(ctx, &input, annotations.as_deref(), output.as_deref()),
        Command::RenderKaeriten { input, output } => render(&input, output.as_deref()),
        Command::ParseKaeriten { input, output } => parse(&input, output.as_deref()),
        Command::Train { input, output } => train(&input, output.as_deref()),
        Command::Reorder {
            input,
            model,
            output,
        } => reorder(ctx, &input, model.as_deref(), output.as_deref()),
        Command::EvalOrder {
            gold,
            predicted,
            output,
        } => eval_order(&gold, &predicted, output.as_deref()),
        Command::EvalMt {
            candidates,
            references,
            max_n,
            smoothing,
            output,
        } => {
            let config = BleuConfig {
                max_n: max_n as usize,
                smoothing: match smoothing {
                    SmoothingArg::Exponential => Smoothing::Exponential,
                    SmoothingArg::None => Smoothing::None,
                },
            };
            eval_mt(&candidates, &references, config, output.as_deref())
        }
        Command::Split {
            input,
            ratios,
            output_dir,
        } => split(ctx, &input, ratios, &output_dir),
        Command::Stats { input } => stats(&input),
        Command::Correlate {
            auto,
            human,
            output,
        } => correlate(&auto, &human, output.as_deref()),
        Command::Translate {
            input,
            backend,
            backend_args,
            reorder_model,
            output,
        } => translate(
            ctx,
            &input,
            &backend,
            &backend_args,
            reorder_model.as_deref(),
            output.as_deref(),
        ),
    }
}

/// First error in input order, so failures do not depend on scheduling.
fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn extract(
    ctx: &Context,
    input: &Path,
    annotations: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let table = ctx.table()?;
    let escapes = match annotations {
        Some(p) => Annotations::parse(&io::read_text(p)?)
            .map_err(|e| CliError::data(p, Some(e.line), e.message))?,
        None => Annotations::default(),
    };
    let raw = load_raw(input).map_err(|e| CliError::data(input, e.line(), e))?;
    let records = first_error(
        raw.par_iter()
            .map(|r| {
                extract_record(r, &escapes, &table).map_err(|e| {
                    CliError::data(input, Some(e.line), format!("{}: {}", e.id, e.message))
                })
            })
            .collect(),
    )?;
    write_output(output, &format_corpus(&records))
}

fn render(input: &Path, output: Option<&Path>) -> Result<()> {
    let records = io::load_corpus_with_lines(input)?;
    let lines = first_error(
        records
            .par_iter()
            .map(|(line, r)| {
                render_marks(r.source.chars(), &r.order)
                    .map(|m| format!("{}\t{m}", r.id))
                    .map_err(|e| CliError::data(input, Some(*line), format!("{}: {e}", r.id)))
            })
            .collect(),
    )?;
    let mut out = String::from("# id\tmarked\n");
    for l in lines {
        writeln!(out, "{l}").unwrap();
    }
    write_output(output, &out)
}

fn parse(input: &Path, output: Option<&Path>) -> Result<()> {
    let text = io::read_text(input)?;
    let rows: Vec<(usize, &str)> = content_lines(&text).collect();
    let orders = first_error(
        rows.par_iter()
            .map(|&(line, l)| {
                let err = |m: String| CliError::data(input, Some(line), m);
                let (id, marked) = l
                    .split_once('\t')
                    .ok_or_else(|| err("expected `id\\tmarked`".into()))?;
                let marked: MarkedSentence =
                    marked.parse().map_err(|e| err(format!("{id}: {e}")))?;
                let order = parse_marks(&marked).map_err(|e| err(format!("{id}: {e}")))?;
                Ok((id.to_string(), order))
            })
            .collect(),
    )?;
    let mut seen = std::collections::BTreeSet::new();
    for ((line, _), (id, _)) in rows.iter().zip(&orders) {
        if !seen.insert(id) {
            return Err(CliError::data(
                input,
                Some(*line),
                format!("duplicate id {id:?}"),
            ));
        }
    }
    write_output(output, &format_orders(&orders))
}

fn train(input: &Path, output: Option<&Path>) -> Result<()> {
    let records = io::load_corpus(input)?;
    let model: BaselinePredictor = fit_sentences(records.iter().map(|r| (&r.source, &r.order)))
        .map_err(|e| CliError::data(input, None, e))?;
    write_output(output, &model.to_text())
}

fn load_model(path: &Path) -> Result<BaselinePredictor> {
    BaselinePredictor::from_text(&io::read_text(path)?).map_err(|e| {
        let line = match &e {
            kanbun_core::ReorderError::Model { line, .. } => Some(*line),
            _ => None,
        };
        CliError::data(path, line, e)
    })
}

fn predict_all(
    input: &Path,
    sources: &[(String, String)],
    model: Option<&BaselinePredictor>,
) -> Result<Vec<(String, SourceSentence, ReadingOrder)>> {
    let predictor: &(dyn RankPredictor + Sync) = match model {
        Some(m) => m,
        None => &IdentityPredictor,
    };
    first_error(
        sources
            .par_iter()
            .map(|(id, text)| {
                let err = |m: String| CliError::data(input, None, format!("{id}: {m}"));
                let source = SourceSentence::new(id, "", text).map_err(|e| err(e.to_string()))?;
                let order = reorder_sentence(predictor, &source).map_err(|e| err(e.to_string()))?;
                Ok((id.clone(), source, order))
            })
            .collect(),
    )
}

fn reorder(ctx: &Context, input: &Path, model: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let table = ctx.table()?;
    let model = model.map(load_model).transpose()?;
    let sources = io::load_sources(input, &table)?;
    let predicted = predict_all(input, &sources, model.as_ref())?;
    let orders: Vec<(String, ReadingOrder)> =
        predicted.into_iter().map(|(id, _, o)| (id, o)).collect();
    write_output(output, &format_orders(&orders))
}

fn eval_order(gold: &Path, predicted: &Path, output: Option<&Path>) -> Result<()> {
    let gold_orders = io::load_orders(gold)?;
    let predicted_orders: BTreeMap<String, ReadingOrder> =
        io::load_orders(predicted)?.into_iter().collect();
    if gold_orders.is_empty() {
        return Err(CliError::data(gold, None, "no gold orders"));
    }
    let mut pairs = Vec::with_capacity(gold_orders.len());
    for (id, g) in gold_orders {
        let p = predicted_orders
            .get(&id)
            .ok_or_else(|| CliError::data(predicted, None, format!("no prediction for {id:?}")))?;
        let pair = OrderPair::new(g, p.clone())
            .map_err(|e| CliError::data(predicted, None, format!("{id}: {e}")))?;
        pairs.push((id, pair));
    }
    write_output(output, &MetricReport::for_orders(&pairs).to_string())
}

fn eval_mt(
    candidates: &Path,
    references: &Path,
    config: BleuConfig,
    output: Option<&Path>,
) -> Result<()> {
    let cands = io::load_texts(candidates)?;
    let refs = io::load_texts(references)?;
    if cands.len() != refs.len() {
        return Err(CliError::data(
            references,
            None,
            format!("{} references for {} candidates", refs.len(), cands.len()),
        ));
    }
    for ((cid, _, _), (rid, _, line)) in cands.iter().zip(&refs) {
        if cid != rid {
            return Err(CliError::data(
                references,
                Some(*line),
                format!("reference id {rid:?} does not match candidate id {cid:?}"),
            ));
        }
    }
    let ids: Vec<String> = cands.iter().map(|(id, _, _)| id.clone()).collect();
    let c: Vec<&str> = cands.iter().map(|(_, t, _)| t.as_str()).collect();
    let r: Vec<&str> = refs.iter().map(|(_, t, _)| t.as_str()).collect();
    let report = MetricReport::for_translations(&ids, &c, &r, config)
        .map_err(|e| CliError::data(candidates, None, e))?;
    write_output(output, &report.to_string())
}

fn split(ctx: &Context, input: &Path, ratios: [f64; 3], output_dir: &Path) -> Result<()> {
    let spec = SplitSpec::new(ratios, ctx.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let records = io::load_corpus(input)?;
    let split = group_split(&records, &spec).map_err(|e| CliError::data(input, None, e))?;
    std::fs::create_dir_all(output_dir).map_err(|e| CliError::data(output_dir, None, e))?;
    for (name, part) in [
        ("train.tsv", &split.train),
        ("validation.tsv", &split.validation),
        ("test.tsv", &split.test),
    ] {
        write_output(Some(&output_dir.join(name)), &format_corpus(part))?;
    }
    Ok(())
}

fn stats(input: &Path) -> Result<()> {
    let s = corpus_stats(&io::load_corpus(input)?);
    write_output(
        None,
        &format!(
            "poems\t{}\nsentences\t{}\ncharacters\t{}\n",
            s.poems, s.sentences, s.characters
        ),
    )
}

/// Per-sentence automatic scores by metric name.
fn auto_scores(path: &Path) -> Result<io::ScoreTable> {
    let text = io::read_text(path)?;
    if !text.starts_with("# kanbun metric report") {
        return io::load_auto(path);
    }
    let report = MetricReport::from_text(&text).map_err(|e| {
        let line = match &e {
            kanbun_core::MetricError::Report { line, .. } => Some(*line),
            _ => None,
        };
        CliError::data(path, line, e)
    })?;
    let rows = &report.per_sentence;
    let config = report.bleu_config;
    type Getter = fn(&kanbun_core::metrics::SentenceScores, BleuConfig) -> Option<f64>;
    let candidates: [(&str, Getter); 4] = [
        ("tau", |s, _| s.tau),
        ("bleu", |s, c| {
            s.bleu
                .as_ref()
                .map(|b| corpus_bleu(std::slice::from_ref(b), c))
        }),
        ("ribes", |s, _| s.ribes),
        ("rouge_l", |s, _| s.rouge_l),
    ];
    let used: Vec<(&str, Getter)> = candidates
        .into_iter()
        .filter(|(_, get)| !rows.is_empty() && rows.iter().all(|s| get(s, config).is_some()))
        .collect();
    let names = used.iter().map(|(n, _)| n.to_string()).collect();
    let table = rows
        .iter()
        .map(|s| {
            (
                s.id.clone(),
                used.iter()
                    .map(|(_, get)| get(s, config).unwrap())
                    .collect(),
            )
        })
        .collect();
    Ok((names, table))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

fn correlate(auto: &Path, human: &Path, output: Option<&Path>) -> Result<()> {
    let (metrics, scores) = auto_scores(auto)?;
    let judgements = io::load_human(human)?;
    let mut out = String::from("# metric\tcriterion\tn\tpearson\tspearman\n");
    for (criterion, by_id) in &judgements.by_criterion {
        let ids: Vec<&String> = by_id.keys().filter(|id| scores.contains_key(*id)).collect();
        let human_mean: Vec<f64> = ids
            .iter()
            .map(|id| {
                let r = &by_id[*id];
                r.values().sum::<f64>() / r.len() as f64
            })
            .collect();
        for (m, metric) in metrics.iter().enumerate() {
            let x: Vec<f64> = ids.iter().map(|id| scores[*id][m]).collect();
            let row = CorrelationRow {
                metric: metric.clone(),
                criterion: criterion.clone(),
                n: ids.len(),
                pearson: pearson(&x, &human_mean).unwrap_or(f64::NAN),
                spearman: spearman(&x, &human_mean).unwrap_or(f64::NAN),
            };
            let finite = |v: f64| v.is_finite().then_some(v);
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                row.metric,
                row.criterion,
                row.n,
                fmt_opt(finite(row.pearson)),
                fmt_opt(finite(row.spearman))
            )
            .unwrap();
        }
    }
    out.push_str("## agreement\n# criterion\titems\traters\tfleiss_kappa\n");
    for (criterion, by_id) in &judgements.by_criterion {
        let mut categories: Vec<f64> = by_id.values().flat_map(|r| r.values().copied()).collect();
        categories.sort_by(f64::total_cmp);
        categories.dedup();
        let table: Vec<Vec<usize>> = by_id
            .values()
            .map(|r| {
                let mut row = vec![0; categories.len()];
                for v in r.values() {
                    row[categories.partition_point(|c| c < v)] += 1;
                }
                row
            })
            .collect();
        let raters = by_id.values().map(|r| r.len()).max().unwrap_or(0);
        let kappa = match fleiss_kappa(&table) {
            Ok(k) => Some(k),
            Err(kanbun_core::MetricError::UnequalRaterCounts { .. }) => {
                return Err(CliError::data(
                    human,
                    None,
                    format!("criterion {criterion:?}: items have different numbers of raters"),
                ))
            }
            Err(_) => None,
        };
        writeln!(
            out,
            "{criterion}\t{}\t{raters}\t{}",
            by_id.len(),
            fmt_opt(kappa)
        )
        .unwrap();
    }
    write_output(output, &out)
}

fn translate(
    ctx: &Context,
    input: &Path,
    backend: &Path,
    args: &[String],
    reorder_model: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let table = ctx.table()?;
    let model = reorder_model.map(load_model).transpose()?;
    let sources = io::load_sources(input, &table)?;
    let lines: Vec<(String, String)> = match &model {
        Some(m) => predict_all(input, &sources, Some(m))?
            .into_iter()
            .map(|(id, s, o)| (id, o.order().iter().map(|&p| s.chars()[p - 1]).collect()))
            .collect(),
        None => sources,
    };
    let backend_err = |m: String| CliError::data(backend, None, m);
    let mut child = Process::new(backend)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| backend_err(format!("cannot start backend: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let payload: String = lines.iter().map(|(_, s)| format!("{s}\n")).collect();
    // Feed from another thread so a backend that answers line by line
    // cannot fill its stdout pipe while we are still writing.
    let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));
    let stdout = child.stdout.take().expect("piped stdout");
    let replies: Vec<String> = BufReader::new(stdout)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| backend_err(format!("reading backend output: {e}")))?;
    let status = child.wait().map_err(|e| backend_err(e.to_string()))?;
    writer
        .join()
        .expect("writer thread")
        .map_err(|e| backend_err(format!("writing backend input: {e}")))?;
    if !status.success() {
        return Err(backend_err(format!("backend exited with {status}")));
    }
    if replies.len() != lines.len() {
        return Err(backend_err(format!(
            "backend returned {} lines for {} sentences",
            replies.len(),
            lines.len()
        )));
    }
    let mut out = String::from("# id\ttext\n");
    for ((id, _), reply) in lines.iter().zip(&replies) {
        let reply = reply.trim_end_matches('\r');
        if reply.contains('\t') {
            return Err(backend_err(format!("translation of {id:?} contains a tab")));
        }
        writeln!(out, "{id}\t{reply}").unwrap();
    }
    write_output(output, &out)
}
