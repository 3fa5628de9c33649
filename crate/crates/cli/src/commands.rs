use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use topic_score::corpus::{load_vocab, preprocess, CorpusFormat};
use topic_score::export::{
    format_f64, matrix_to_csv, scree_csv, write_json, write_matrix_csv, write_text, Diagnostics,
    Timing,
};
use topic_score::synth_eval::run_monte_carlo;
use topic_score::vertex_hunt::distance_to_simplex;
use topic_score::{
    fit, fit_frequencies, generate_model, l1_loss, DocTermMatrix, FitOptions, PreprocessOptions,
    SynthConfig, TopicError,
};

use crate::args::{EstimatorArgs, FitArgs, Format, OracleArgs, SynthArgs};

/// Oracle runs must reproduce the true topics to this l1 loss.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

pub enum Outcome {
    Ok,
    CheckFailed,
}

fn fit_options(est: &EstimatorArgs) -> FitOptions {
    FitOptions {
        threshold: est.t.0,
        clusters: est.l,
        seed: est.seed,
        kmeans_restarts: est.kmeans_restarts,
        kmeans_max_iter: est.kmeans_max_iter,
        svd_method: est.svd.into(),
    }
}

fn check_k(k: usize) -> Result<(), TopicError> {
    if k == 0 {
        return Err(TopicError::InvalidK {
            k,
            reason: "need at least one topic".into(),
        });
    }
    Ok(())
}

fn create_out(dir: &Path) -> Result<(), TopicError> {
    fs::create_dir_all(dir).map_err(|source| TopicError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn read_word_list(path: &Path) -> Result<HashSet<String>, TopicError> {
    Ok(load_vocab(path)?.into_iter().collect())
}

pub fn cmd_fit(args: &FitArgs) -> Result<Outcome, TopicError> {
    check_k(args.est.k)?;
    let format = match args.format {
        Format::Uci => CorpusFormat::Uci,
        Format::Csv => CorpusFormat::TripletCsv,
    };
    let mut corpus = DocTermMatrix::load(&args.corpus, format)?;
    if let Some(path) = &args.vocab {
        corpus = corpus.with_vocab(load_vocab(path)?)?;
    }
    let stopwords = match &args.stopwords {
        Some(path) => read_word_list(path)?,
        None => HashSet::new(),
    };
    let popts = PreprocessOptions {
        stopwords,
        keep_top_words: args.keep_top_words,
        drop_short_docs_fraction: args.drop_short_docs,
    };
    let (clean, report) = preprocess(&corpus, &popts)?;

    let opts = fit_options(&args.est);
    let start = Instant::now();
    let est = fit(&clean, args.est.k, &opts)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    create_out(&args.out)?;
    write_matrix_csv(&args.out.join("A_hat.csv"), &est.a_hat)?;
    write_matrix_csv(&args.out.join("pi_hat.csv"), &est.pi_hat)?;
    let timing = args.record_timing.then_some(Timing {
        wall_time_ms: elapsed,
    });
    write_json(
        &args.out.join("diagnostics.json"),
        &Diagnostics::from_estimate(&est, opts.threshold, timing),
    )?;
    write_json(&args.out.join("preprocess_report.json"), &report)?;
    if let Some(sd) = &est.spectral {
        write_text(&args.out.join("scree.csv"), &scree_csv(&sd.singular_values))?;
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct Summary<'a> {
    reps: usize,
    mean_loss: f64,
    stderr: Option<f64>,
    config: &'a SynthConfig,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Outcome, TopicError> {
    check_k(args.est.k)?;
    if args.reps == 0 {
        return Err(TopicError::InvalidArgument("--reps must be at least 1".into()));
    }
    let cfg = args.model.config(args.est.k, args.est.seed);
    cfg.validate()?;
    let report = run_monte_carlo(&cfg, args.reps, &fit_options(&args.est))?;

    create_out(&args.out)?;
    let mut csv = String::from("rep,loss,wall_time_ms\n");
    for row in &report.rows {
        let time = if args.record_timing {
            format!("{:.3}", row.wall_time_ms)
        } else {
            String::new()
        };
        writeln!(csv, "{},{},{}", row.rep, format_f64(row.loss), time).unwrap();
    }
    write_text(&args.out.join("results.csv"), &csv)?;
    write_json(
        &args.out.join("summary.json"),
        &Summary {
            reps: args.reps,
            mean_loss: report.mean_loss,
            stderr: report.stderr,
            config: &report.config,
        },
    )?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct OracleReport {
    loss: f64,
    tolerance: f64,
    passed: bool,
    max_relative_row_error: f64,
    max_containment_distance: f64,
    fallback_used: bool,
}

pub fn cmd_oracle_check(args: &OracleArgs) -> Result<Outcome, TopicError> {
    check_k(args.est.k)?;
    let cfg = args.model.config(args.est.k, args.est.seed);
    let model = generate_model(&cfg)?;
    let est = fit_frequencies(&model.d0(), cfg.k, &fit_options(&args.est))?;
    let loss = l1_loss(&est.a_hat, &model.a)?;

    create_out(&args.out)?;
    let anchors = model.anchor_topics();
    let mut containment = 0.0f64;
    if let (Some(ratio), Some(vh)) = (&est.ratio, &est.vh) {
        // Ratio rows are indexed by kept word; place them back at their
        // original positions (zero rows get zero coordinates).
        let dim = ratio.rows.ncols();
        let mut cloud = vec![vec![0.0; dim]; model.a.nrows()];
        for (pos, &j) in est.kept_rows.iter().enumerate() {
            let r: Vec<f64> = ratio.rows.row(pos).iter().copied().collect();
            containment = containment.max(distance_to_simplex(&r, &vh.vertices));
            cloud[j] = r;
        }
        let mut csv = String::new();
        for (j, row) in cloud.iter().enumerate() {
            let mut fields: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
            fields.push(u8::from(anchors[j].is_some()).to_string());
            csv.push_str(&fields.join(","));
            csv.push('\n');
        }
        write_text(&args.out.join("pointcloud.csv"), &csv)?;
        write_text(&args.out.join("vertices.csv"), &matrix_to_csv(&vh.vertices))?;
    }
    let max_rel = loss.per_word_rel.iter().flatten().copied().fold(0.0, f64::max);
    let passed = loss.loss <= ORACLE_TOLERANCE;
    write_json(
        &args.out.join("oracle.json"),
        &OracleReport {
            loss: loss.loss,
            tolerance: ORACLE_TOLERANCE,
            passed,
            max_relative_row_error: max_rel,
            max_containment_distance: containment,
            fallback_used: est.vh.as_ref().is_some_and(|v| v.fallback_used),
        },
    )?;
    write_matrix_csv(&args.out.join("A_hat.csv"), &est.a_hat)?;
    Ok(if passed { Outcome::Ok } else { Outcome::CheckFailed })
}
