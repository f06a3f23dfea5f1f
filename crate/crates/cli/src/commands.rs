use std::path::Path;

use collatekit::context::{measure_context_reduction, WhitespaceCounter};
use collatekit::erm::{parse_erm_text, validate_erm};
use collatekit::planner::{emit_training_batches, load_batch_file, write_batch_file};
use collatekit::seed::{self, DEFAULT_SEED};
use collatekit::similarity::chunk_partition;
use collatekit::trainer::{train, ToyEmbeddingModel, TrainerConfig};
use collatekit::{
    build_collation_map, canonical, evaluate, min_effective_batch_size, plan_batches, CollationMap, EmbeddingStore,
    Error, EvalReport, Result, RetrievalDataset, Scope,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::manifest::{default_manifest_path, Recorder};
use crate::{BatchSizeArg, Cli, Command, ScopeArg, EXIT_INVALID_DOCUMENT};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `text` to `--out` when given, otherwise to stdout.
fn emit(rec: &mut Recorder, out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            write_text(path, text)?;
            rec.output(path);
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<u8> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli.out.as_deref();
    let (rec, config, status): (Recorder, Value, u8) = match &cli.command {
        Command::Eval(a) => {
            let mut rec = Recorder::new("eval", seed);
            rec.input(&a.dataset)?;
            rec.input(&a.embeddings)?;
            let dataset = RetrievalDataset::load(&a.dataset)?;
            let store = EmbeddingStore::load(&a.embeddings)?;
            let (scope, label) = match (a.scope, a.batch_size) {
                (ScopeArg::Full, None) => (Scope::FullCorpus, "full".to_string()),
                (ScopeArg::Batch, Some(b)) => (Scope::PerBatch(chunk_partition(&dataset, b)?), b.to_string()),
                (ScopeArg::Full, Some(_)) => {
                    return Err(Error::Config("--batch-size requires --scope batch".into()))
                }
                (ScopeArg::Batch, None) => return Err(Error::Config("--scope batch requires --batch-size".into())),
            };
            let report = evaluate(&dataset, &store, &scope)?;
            print!("{}", EvalReport::table(&[(label, &report)]));
            if let Some(path) = out {
                canonical::write(path, &report)?;
                rec.output(path);
            }
            let config = json!({
                "dataset": a.dataset, "embeddings": a.embeddings,
                "scope": format!("{:?}", a.scope).to_lowercase(), "batch_size": a.batch_size,
            });
            (rec, config, 0)
        }
        Command::Collate(a) => {
            let mut rec = Recorder::new("collate", seed);
            rec.input(&a.dataset)?;
            rec.input(&a.embeddings)?;
            let dataset = RetrievalDataset::load(&a.dataset)?;
            let store = EmbeddingStore::load(&a.embeddings)?;
            let map = build_collation_map(&dataset, &store, a.k_soft, a.k_hard, seed)?;
            emit(&mut rec, out, &map.to_json_string()?)?;
            let config = json!({
                "dataset": a.dataset, "embeddings": a.embeddings,
                "k_soft": a.k_soft, "k_hard": a.k_hard, "seed": seed,
            });
            (rec, config, 0)
        }
        Command::Plan(a) => {
            let mut rec = Recorder::new("plan", seed);
            rec.input(&a.collation)?;
            let map = CollationMap::load(&a.collation)?;
            let dataset = match &a.dataset {
                Some(p) => {
                    rec.input(p)?;
                    Some(RetrievalDataset::load(p)?)
                }
                None => None,
            };
            let batch_size = match a.batch_size {
                BatchSizeArg::Min => min_effective_batch_size(map.len(), map.n_positives())?,
                BatchSizeArg::Fixed(b) => b,
            };
            let plan = plan_batches(&map, batch_size)?;
            let records = emit_training_batches(&plan, &map, dataset.as_ref())?;
            match out {
                Some(path) => {
                    write_batch_file(path, &records)?;
                    rec.output(path);
                }
                None => {
                    for r in &records {
                        println!("{}", canonical::to_line(r)?);
                    }
                }
            }
            if let Some(path) = &a.plan_out {
                plan.save(path)?;
                rec.output(path);
            }
            eprintln!(
                "b_min={} batch_size={} num_batches={} pos_per_batch={}",
                plan.b_min, plan.batch_size, plan.num_batches, plan.pos_per_batch
            );
            let config = json!({
                "collation": a.collation, "dataset": a.dataset,
                "batch_size": plan.batch_size, "b_min": plan.b_min,
                "batch_size_arg": match a.batch_size { BatchSizeArg::Min => json!("min"), BatchSizeArg::Fixed(b) => json!(b) },
            });
            (rec, config, 0)
        }
        Command::Train(a) => {
            let mut rec = Recorder::new("train", seed);
            rec.input(&a.batches)?;
            rec.input(&a.features)?;
            rec.input(&a.val_dataset)?;
            let mut config = match &a.config {
                Some(p) => {
                    rec.input(p)?;
                    TrainerConfig::load(p)?
                }
                None => TrainerConfig::default(),
            };
            if let Some(s) = cli.seed {
                config.seed = s;
            }
            config.validate()?;
            rec.set_seed(config.seed);
            let records = load_batch_file(&a.batches)?;
            let features = EmbeddingStore::load(&a.features)?;
            let validation = RetrievalDataset::load(&a.val_dataset)?;
            let init = ToyEmbeddingModel::random(config.embedding_dim, features.dim(), seed::derive(config.seed, "init"))?;
            let (model, trace) = train(init, &records, &features, &validation, &config)?;
            write_text(&a.trace_out, &trace.to_jsonl()?)?;
            rec.output(&a.trace_out);
            if let Some(path) = out {
                model.save(path)?;
                rec.output(path);
            }
            println!(
                "initial accuracy {:.4}, best {:.4} at step {}, stopped at step {} ({:?})",
                trace.initial_accuracy, trace.best_accuracy, trace.best_step, trace.stop_step, trace.stop_reason
            );
            let resolved = serde_json::to_value(&config).map_err(|e| Error::Config(e.to_string()))?;
            (rec, json!({ "trainer": resolved, "batches": a.batches, "features": a.features, "val_dataset": a.val_dataset }), 0)
        }
        Command::MeasureContext(a) => {
            #[derive(Deserialize)]
            struct PairLine {
                #[serde(default)]
                id: Option<String>,
                plain: String,
                erm: String,
            }
            let mut rec = Recorder::new("measure-context", seed);
            rec.input(&a.pairs)?;
            let text = read_text(&a.pairs)?;
            let mut labels = Vec::new();
            let mut pairs = Vec::new();
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let p: PairLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                    context: format!("{} line {}", a.pairs.display(), i + 1),
                    message: e.to_string(),
                })?;
                labels.push(p.id.unwrap_or_else(|| pairs.len().to_string()));
                pairs.push((p.plain, p.erm));
            }
            let report = measure_context_reduction(&pairs, &WhitespaceCounter)?;
            print!("{}", report.to_table(Some(&labels)));
            if let Some(path) = out {
                canonical::write(path, &json!({ "labels": labels, "report": report }))?;
                rec.output(path);
            }
            (rec, json!({ "pairs": a.pairs, "counter": "whitespace" }), 0)
        }
        Command::ValidateErm(a) => {
            let mut rec = Recorder::new("validate-erm", seed);
            rec.input(&a.file)?;
            let document = parse_erm_text(&read_text(&a.file)?)?;
            let violations = validate_erm(&document);
            for v in &violations {
                println!("{}: {}", if v.path.is_empty() { "/" } else { &v.path }, v.message);
            }
            if violations.is_empty() {
                println!("valid");
            }
            if let Some(path) = out {
                canonical::write(path, &json!({ "valid": violations.is_empty(), "violations": violations }))?;
                rec.output(path);
            }
            let status = if violations.is_empty() { 0 } else { EXIT_INVALID_DOCUMENT };
            (rec, json!({ "file": a.file }), status)
        }
    };

    let manifest_path = match (&cli.manifest_out, rec.primary_output()) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(primary)) => Some(default_manifest_path(primary)),
        (None, None) => None,
    };
    if let Some(path) = manifest_path {
        rec.finish(config, &path)?;
    }
    Ok(status)
}
