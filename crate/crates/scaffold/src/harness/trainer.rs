//! End-to-end run drivers: task data preparation, the teacher-student
//! episode loop, restart management, evaluation, trace emission, mid-run
//! checkpointing, and the supervised LSTM baseline.
//!
//! A run is a sequence of restarts. Each restart draws fresh parameters,
//! steps through training episodes until its environment-step budget is
//! spent, and is scored by greedy validation error; the best restart's
//! weights are kept. All mutable run state lives in [`TrainContext`] and
//! converts to and from [`CheckpointBundle`], so a restored run continues
//! step-for-step exactly where the saved one stopped.

use rand::Rng as _;

use crate::data::{
    all_candidates, build_dialog_vocab, generate_dialogs, kb_file_text, match_features,
    seen_tokens, CandidateSet, Dialog, DialogCorpus, DialogSpec, KbLexicons, FIELD_NAMES,
};
use crate::encoders::{Tokenizer, Vocabulary};
use crate::environment::{
    generate_corpus, travel_tokenizer, CorpusSpec, Directive, EpisodeRunner, RewardEvent,
    TravelLog, DIRECTIONS,
};
use crate::error::{Error, Result};
use crate::harness::checkpoint::{CheckpointBundle, MetricAccum, ParamRecord};
use crate::harness::config::{RunConfig, Track, Variant};
use crate::harness::metrics::{MetricsRow, MetricsWriter};
use crate::harness::model::{recompute_update, select_from_values, BaselineModel, SnModel, SnSpec};
use crate::harness::trace::{format_sources, trace_to_tsv, TraceRow};
use crate::numerics::{AdamConfig, AdamState, Graph, ParamSet};
use crate::rng::{seeded, stream, Rng, RngState};
use crate::student::{
    greedy_action, sync_target, ActionSet, EpsSchedule, RecomputeCtx, ReplayBuffer, Transition,
};
use crate::teacher::{
    default_rules, generate_qa_dialog, generate_qa_travel, update_episode_attention, Curriculum,
    ImportanceTracker, PatToken, QAPair, TemplateRule,
};

// ---------------------------------------------------------------------------
// Task data

/// Prepared travel-log task: the three splits plus the shared encoding
/// tables every restart reuses.
#[derive(Debug, Clone)]
pub struct TravelData {
    pub train: Vec<TravelLog>,
    pub val: Vec<TravelLog>,
    pub test: Vec<TravelLog>,
    pub labels: Vec<String>,
    pub rules: Vec<TemplateRule>,
    pub tokenizer: Tokenizer,
    pub vocab: Vocabulary,
    pub actions: ActionSet,
    pub n_max: usize,
}

/// Prepared dialog task: splits, the candidate action space, knowledge-base
/// lexicons for match features, and the encoding tables.
#[derive(Debug, Clone)]
pub struct DialogData {
    pub train: Vec<Dialog>,
    pub val: Vec<Dialog>,
    pub test: Vec<Dialog>,
    pub candidates: CandidateSet,
    pub lexicons: KbLexicons,
    pub vocab: Vocabulary,
    pub actions: ActionSet,
    pub n_max: usize,
}

/// Either track's prepared data.
#[derive(Debug, Clone)]
pub enum TaskData {
    Travel(TravelData),
    Dialog(DialogData),
}

/// Validation logs taken from the tail of the training split: the largest
/// count that keeps at least one training item.
fn val_count(n: usize, fraction: f64) -> usize {
    let raw = ((n as f64) * fraction).ceil() as usize;
    raw.min(n.saturating_sub(1))
}

impl TravelData {
    pub fn prepare(cfg: &RunConfig) -> Result<TravelData> {
        let train_spec = CorpusSpec {
            n_attractions: cfg.attractions,
            n_logs: cfg.train_logs,
            max_moves: cfg.max_moves,
            seed: cfg.seed,
        };
        let test_spec = CorpusSpec {
            n_logs: cfg.test_logs,
            seed: cfg.seed + 1,
            ..train_spec.clone()
        };
        let train_corpus = generate_corpus(&train_spec)?;
        let test_corpus = generate_corpus(&test_spec)?;
        let labels = train_corpus.labels();
        let tokenizer = travel_tokenizer(&labels);
        let rules = default_rules();

        // Vocabulary: training text, the answer labels, direction words,
        // and the literal words of the teacher's question templates.
        let mut vocab = Vocabulary::new();
        for log in &train_corpus.logs {
            for sentence in &log.sentences {
                for token in tokenizer.tokenize(sentence) {
                    vocab.add(&token);
                }
            }
            for token in tokenizer.tokenize(&log.question) {
                vocab.add(&token);
            }
        }
        for label in &labels {
            vocab.add(label);
        }
        for dir in DIRECTIONS {
            vocab.add(dir.word());
        }
        for rule in &rules {
            for part in &rule.question {
                if let PatToken::Lit(word) = part {
                    vocab.add(word);
                }
            }
        }
        vocab.freeze();

        let mut action_labels = labels.clone();
        action_labels.extend(DIRECTIONS.iter().map(|d| d.word().to_string()));
        let actions = ActionSet::new(action_labels)?;

        let mut n_max = cfg.n_max;
        if n_max == 0 {
            for log in train_corpus.logs.iter().chain(test_corpus.logs.iter()) {
                for sentence in &log.sentences {
                    n_max = n_max.max(tokenizer.tokenize(sentence).len());
                }
            }
        }
        if n_max == 0 {
            return Err(Error::Contract("empty travel corpus".into()));
        }

        let mut train = train_corpus.logs;
        let val = train.split_off(train.len() - val_count(train.len(), cfg.validation_fraction));
        Ok(TravelData {
            train,
            val,
            test: test_corpus.logs,
            labels,
            rules,
            tokenizer,
            vocab,
            actions,
            n_max,
        })
    }
}

impl DialogData {
    pub fn prepare(cfg: &RunConfig) -> Result<DialogData> {
        let mut train = generate_dialogs(DialogSpec {
            n_dialogs: cfg.n_dialogs,
            seed: cfg.seed,
        });
        let test = generate_dialogs(DialogSpec {
            n_dialogs: cfg.test_logs,
            seed: cfg.seed + 1,
        });
        let candidates = all_candidates();
        candidates.verify_resolvable(&train)?;
        candidates.verify_resolvable(&test)?;
        let lexicons = KbLexicons::from_kb_lines(&kb_file_text())?;
        let actions = candidates.to_action_set()?;

        let mut vocab = Vocabulary::new();
        build_dialog_vocab(
            &DialogCorpus {
                dialogs: train.clone(),
                warnings: Vec::new(),
            },
            &mut vocab,
        );
        vocab.freeze();

        let mut n_max = cfg.n_max;
        if n_max == 0 {
            for dialog in train.iter().chain(test.iter()) {
                for sentence in dialog.sentences() {
                    n_max = n_max.max(sentence.len());
                }
            }
        }
        if n_max == 0 {
            return Err(Error::Contract("empty dialog corpus".into()));
        }

        let val = train.split_off(train.len() - val_count(train.len(), cfg.validation_fraction));
        Ok(DialogData {
            train,
            val,
            test,
            candidates,
            lexicons,
            vocab,
            actions,
            n_max,
        })
    }
}

impl TaskData {
    /// Generate and split both corpora deterministically from the run
    /// configuration: training data from `seed`, test data from `seed + 1`.
    pub fn prepare(cfg: &RunConfig) -> Result<TaskData> {
        cfg.validate()?;
        if cfg.match_features && cfg.track != Track::Dialog {
            return Err(Error::Contract(
                "match features are a dialog-track option".into(),
            ));
        }
        match cfg.track {
            Track::TravelLog => Ok(TaskData::Travel(TravelData::prepare(cfg)?)),
            Track::Dialog => Ok(TaskData::Dialog(DialogData::prepare(cfg)?)),
        }
    }

    pub fn track(&self) -> Track {
        match self {
            TaskData::Travel(_) => Track::TravelLog,
            TaskData::Dialog(_) => Track::Dialog,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        match self {
            TaskData::Travel(t) => &t.vocab,
            TaskData::Dialog(d) => &d.vocab,
        }
    }

    pub fn actions(&self) -> &ActionSet {
        match self {
            TaskData::Travel(t) => &t.actions,
            TaskData::Dialog(d) => &d.actions,
        }
    }

    pub fn n_max(&self) -> usize {
        match self {
            TaskData::Travel(t) => t.n_max,
            TaskData::Dialog(d) => d.n_max,
        }
    }

    pub fn train_len(&self) -> usize {
        match self {
            TaskData::Travel(t) => t.train.len(),
            TaskData::Dialog(d) => d.train.len(),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Greedy error over one split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Scored items: logs on the travel track, bot turns on dialog.
    pub n: usize,
    pub wrong: usize,
    pub error: f64,
}

impl EvalReport {
    fn from_counts(n: usize, wrong: usize) -> EvalReport {
        EvalReport {
            n,
            wrong,
            error: if n == 0 { 0.0 } else { wrong as f64 / n as f64 },
        }
    }
}

/// Which split an operation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Final-answer error: fold every sentence, ask the log's own question
/// greedily. No teacher questions and no learning.
fn eval_travel(
    model: &SnModel,
    ps: &ParamSet,
    data: &TravelData,
    logs: &[TravelLog],
) -> Result<EvalReport> {
    let d = model.spec.d;
    let mut wrong = 0usize;
    for log in logs {
        let mut memory = vec![0.0f64; d];
        let mut last_ids: Vec<usize> = Vec::new();
        for sentence in &log.sentences {
            let ids = data.vocab.encode(&data.tokenizer.tokenize(sentence));
            memory = model.fold_numeric(ps, &ids, &memory)?.m_next;
            last_ids = ids;
        }
        let q_ids = data.vocab.encode(&data.tokenizer.tokenize(&log.question));
        let gold = data.actions.index_of(&log.answer).ok_or_else(|| {
            Error::Compatibility(format!("gold answer {:?} is not in the action set", log.answer))
        })?;
        let nums = model.step_numeric(ps, &last_ids, &q_ids, &memory, None)?;
        if greedy_action(&nums.q) != gold {
            wrong += 1;
        }
    }
    Ok(EvalReport::from_counts(logs.len(), wrong))
}

/// Per-response error with gold forcing: every bot turn is predicted from
/// the true history, then the true response is folded regardless.
fn eval_dialog(
    model: &SnModel,
    ps: &ParamSet,
    data: &DialogData,
    dialogs: &[Dialog],
) -> Result<EvalReport> {
    let d = model.spec.d;
    let use_feats = model.spec.feats > 0;
    let mut total = 0usize;
    let mut wrong = 0usize;
    for dialog in dialogs {
        let mut memory = vec![0.0f64; d];
        let mut contexts: Vec<Vec<String>> = Vec::new();
        for turn in &dialog.turns {
            let user_tokens = turn.user.clone();
            let user_ids = data.vocab.encode(&user_tokens);
            if let Some(bot) = &turn.bot {
                total += 1;
                let gold = data.candidates.id(bot)?;
                let feats = if use_feats {
                    Some(candidate_features(data, &contexts, &user_tokens, &user_tokens))
                } else {
                    None
                };
                let nums =
                    model.step_numeric(ps, &user_ids, &user_ids, &memory, feats.as_deref())?;
                if greedy_action(&nums.q) != gold {
                    wrong += 1;
                }
            }
            memory = model.fold_numeric(ps, &user_ids, &memory)?.m_next;
            contexts.push(user_tokens);
            if let Some(bot) = &turn.bot {
                let bot_tokens: Vec<String> =
                    bot.split_whitespace().map(str::to_string).collect();
                let bot_ids = data.vocab.encode(&bot_tokens);
                memory = model.fold_numeric(ps, &bot_ids, &memory)?.m_next;
                contexts.push(bot_tokens);
            }
        }
    }
    Ok(EvalReport::from_counts(total, wrong))
}

/// Match-feature rows for every candidate given the visible context, the
/// current user utterance, and the question being answered.
fn candidate_features(
    data: &DialogData,
    contexts: &[Vec<String>],
    current_user: &[String],
    question: &[String],
) -> Vec<Vec<f64>> {
    let mut visible = contexts.to_vec();
    visible.push(current_user.to_vec());
    let seen = seen_tokens(&visible, question);
    (0..data.candidates.len())
        .map(|c| match_features(&seen, data.candidates.get(c), &data.lexicons).as_slice().to_vec())
        .collect()
}

// ---------------------------------------------------------------------------
// Train context

/// Whether an episode learns (ε-greedy, replay, updates) or only reports
/// what the trained policy does (greedy, read-only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Train,
    Trace,
}

/// What one episode produced. Counters mirror the reward protocol; rows are
/// filled in trace mode only.
#[derive(Debug, Clone, Default)]
pub struct EpisodeOutcome {
    pub return_sum: f64,
    pub steps: u64,
    pub questions_asked: u64,
    pub questions_correct: u64,
    pub rows: Vec<TraceRow>,
}

/// A transition waiting for its successor state; closed at the next
/// question event or at episode end.
struct Pending {
    s: Vec<f64>,
    a: usize,
    r: f64,
    ctx: RecomputeCtx,
}

/// One question event's inputs.
struct EventArgs<'a> {
    sentence: &'a [usize],
    question: &'a [usize],
    memory: &'a [f64],
    feats: Option<Vec<Vec<f64>>>,
    answer: usize,
    final_event: bool,
    prev: &'a Option<(Vec<f64>, Vec<f64>)>,
    mode: RunMode,
}

/// Complete mutable state of one restart.
pub struct TrainContext {
    pub cfg: RunConfig,
    pub restart: usize,
    pub model: SnModel,
    pub ps: ParamSet,
    pub target: ParamSet,
    pub adam: AdamState,
    pub buffer: ReplayBuffer,
    pub curriculum: Curriculum,
    pub schedule: EpsSchedule,
    pub policy_rng: Rng,
    pub replay_rng: Rng,
    pub teacher_rng: Rng,
    /// Environment steps taken within this restart.
    pub global_step: u64,
    pub episode: u64,
    pub updates: u64,
    /// Next training item, as a running index into the train split.
    pub train_cursor: u64,
    pub accum: MetricAccum,
}

fn mean_abs(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
    }
}

impl TrainContext {
    /// Fresh restart state. Restart `r` draws from seed `cfg.seed + r`, so
    /// restarts are independent but each is reproducible on its own.
    pub fn new(cfg: &RunConfig, data: &TaskData, restart: usize) -> Result<TrainContext> {
        cfg.validate()?;
        if cfg.track != data.track() {
            return Err(Error::Compatibility(format!(
                "configuration is for the {} track but the data is {}",
                cfg.track.name(),
                data.track().name()
            )));
        }
        if cfg.variant == Variant::LstmBaseline {
            return Err(Error::Contract(
                "the lstm-baseline variant trains supervised; use train_lstm_baseline".into(),
            ));
        }
        let seed = cfg.seed + restart as u64;
        let mut init = seeded(seed, stream::INIT);
        let spec = SnSpec {
            d: cfg.d,
            n_max: data.n_max(),
            vocab_size: data.vocab().len(),
            k: data.actions().k(),
            q_hidden: cfg.q_hidden,
            interaction: cfg.interaction,
            attention_in_state: cfg.variant.attention_in_state(),
            feats: if cfg.match_features { FIELD_NAMES.len() } else { 0 },
        };
        let mut ps = ParamSet::new();
        let model = SnModel::new(&mut ps, spec, &mut init)?;
        let target = ps.clone();
        let adam = AdamState::new(
            AdamConfig {
                lr: cfg.lr_for_restart(restart),
                weight_decay: cfg.weight_decay,
                ..AdamConfig::default()
            },
            &ps,
        );
        Ok(TrainContext {
            restart,
            model,
            ps,
            target,
            adam,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            curriculum: Curriculum::new(cfg.plateau_window, cfg.plateau_min_improvement),
            schedule: EpsSchedule::over_half(cfg.eps_start, cfg.eps_floor, cfg.max_steps),
            policy_rng: seeded(seed, stream::POLICY),
            replay_rng: seeded(seed, stream::REPLAY),
            teacher_rng: seeded(seed, stream::TEACHER),
            global_step: 0,
            episode: 0,
            updates: 0,
            train_cursor: 0,
            accum: MetricAccum::default(),
            cfg: cfg.clone(),
        })
    }

    /// One ε-greedy (or greedy, in trace mode) answer to a question, judged
    /// by the reward protocol, with replay storage and one learning update.
    fn question_event(
        &mut self,
        runner: &mut EpisodeRunner,
        pending: &mut Option<Pending>,
        args: EventArgs<'_>,
    ) -> Result<(usize, RewardEvent, Option<Directive>)> {
        let nums = self.model.step_numeric(
            &self.ps,
            args.sentence,
            args.question,
            args.memory,
            args.feats.as_deref(),
        )?;
        let action = match args.mode {
            RunMode::Trace => greedy_action(&nums.q),
            RunMode::Train => {
                let eps = self.schedule.eps(self.global_step);
                select_from_values(&nums.q, eps, &mut self.policy_rng)
            }
        };
        let correct = action == args.answer;
        let (event, directive) = if args.final_event {
            (runner.final_answer(correct)?, None)
        } else {
            let (event, directive) = runner.step(correct)?;
            (event, Some(directive))
        };
        self.global_step += 1;
        self.accum.asked_window += 1;
        if correct {
            self.accum.correct_window += 1;
        }
        self.accum.m_abs_sum += mean_abs(args.memory);
        self.accum.m_abs_count += 1;

        if args.mode == RunMode::Train {
            let ctx = RecomputeCtx {
                sentence_tokens: args.sentence.to_vec(),
                question_tokens: args.question.to_vec(),
                memory_in: args.memory.to_vec(),
                prev_h_last: args.prev.as_ref().map(|p| p.0.clone()),
                prev_memory: args.prev.as_ref().map(|p| p.1.clone()),
                match_feats: args.feats.clone(),
                match_feats_next: None,
            };
            if let Some(p) = pending.take() {
                let mut closed = p.ctx;
                closed.match_feats_next = args.feats.clone();
                self.buffer.push(Transition {
                    s: p.s,
                    a: p.a,
                    r: p.r,
                    s_next: nums.state.clone(),
                    terminal: false,
                    ctx: Some(closed),
                });
            }
            let current = Pending {
                s: nums.state,
                a: action,
                r: event.value,
                ctx,
            };
            if event.terminal {
                let width = self.model.spec.state_width();
                self.buffer.push(Transition {
                    s: current.s,
                    a: current.a,
                    r: current.r,
                    s_next: vec![0.0; width],
                    terminal: true,
                    ctx: Some(current.ctx),
                });
            } else {
                *pending = Some(current);
            }
            self.maybe_update()?;
        }
        Ok((action, event, directive))
    }

    /// One replay update per environment step, once the buffer has seen the
    /// warmup count, plus the periodic target sync.
    fn maybe_update(&mut self) -> Result<()> {
        if (self.buffer.pushed as usize) < self.cfg.warmup
            || self.buffer.len() < self.cfg.batch_size
        {
            return Ok(());
        }
        if let Some(loss) = recompute_update(
            &self.model,
            &self.buffer,
            &mut self.ps,
            &self.target,
            &mut self.adam,
            self.cfg.gamma,
            self.cfg.batch_size,
            &mut self.replay_rng,
        )? {
            self.accum.loss_sum += loss;
            self.accum.loss_count += 1;
            self.updates += 1;
            if self.updates % self.cfg.n_sync == 0 {
                sync_target(&self.ps, &mut self.target)?;
            }
        }
        Ok(())
    }

    /// One travel-log episode. Sentences are read in order; from the second
    /// sentence on the teacher may quiz (the attention summary and the
    /// question read the pre-update memory), the gate then folds the
    /// sentence in. A wrong answer re-presents the same question up to
    /// `max_trials`. After the last sentence the log's own question is the
    /// terminal event with the signed accuracy bonus.
    pub fn run_travel_episode(
        &mut self,
        data: &TravelData,
        log: &TravelLog,
        mode: RunMode,
    ) -> Result<EpisodeOutcome> {
        let d = self.model.spec.d;
        let trace = mode == RunMode::Trace;
        let mut runner = EpisodeRunner::new(log.sentences.len(), self.cfg.max_trials)?;
        let mut memory = vec![0.0f64; d];
        let mut tracker = ImportanceTracker::new(d);
        let mut history: Vec<Vec<String>> = Vec::new();
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut pending: Option<Pending> = None;
        let mut out = EpisodeOutcome::default();
        let mut last_ids: Vec<usize> = Vec::new();

        for (idx, text) in log.sentences.iter().enumerate() {
            let tokens = data.tokenizer.tokenize(text);
            let ids = data.vocab.encode(&tokens);
            history.push(tokens);
            let fold = self.model.fold_numeric(&self.ps, &ids, &memory)?;
            let shown = match &fold.m_bar {
                Some(m_bar) => Some(tracker.importance(m_bar)?),
                None => None,
            };
            // Random-sampling variants report no usable importance, which
            // forces the teacher's uniform branch.
            let teacher_importance = if self.cfg.variant.importance_questions() {
                shown.unwrap_or(f64::NEG_INFINITY)
            } else {
                f64::NEG_INFINITY
            };
            let qa = if idx >= 1 {
                generate_qa_travel(
                    &data.rules,
                    &history,
                    teacher_importance,
                    self.cfg.importance_threshold,
                    self.curriculum.phase(),
                    &data.actions,
                    &mut self.teacher_rng,
                )
            } else {
                None
            };
            match qa {
                Some(qa) => {
                    let q_ids = data.vocab.encode(&data.tokenizer.tokenize(&qa.question));
                    let question_label =
                        format!("{} {}", format_sources(&qa.sources), qa.question);
                    loop {
                        let (action, event, directive) = self.question_event(
                            &mut runner,
                            &mut pending,
                            EventArgs {
                                sentence: &ids,
                                question: &q_ids,
                                memory: &memory,
                                feats: None,
                                answer: qa.answer,
                                final_event: false,
                                prev: &prev,
                                mode,
                            },
                        )?;
                        out.steps += 1;
                        out.return_sum += event.value;
                        if trace {
                            out.rows.push(TraceRow {
                                sentence: text.clone(),
                                importance: shown,
                                question: question_label.clone(),
                                action: data.actions.label(action).to_string(),
                                reward: Some(event.value),
                            });
                        }
                        if event.terminal {
                            break;
                        }
                        match directive.expect("intermediate events carry a directive") {
                            Directive::Stay => continue,
                            Directive::Advance | Directive::Failed => break,
                        }
                    }
                }
                None => {
                    runner.skip_question()?;
                    if trace {
                        out.rows.push(TraceRow {
                            sentence: text.clone(),
                            importance: shown,
                            question: String::new(),
                            action: String::new(),
                            reward: None,
                        });
                    }
                }
            }
            if runner.is_terminal() {
                break;
            }
            if let Some(m_bar) = &fold.m_bar {
                update_episode_attention(&mut tracker, m_bar)?;
            }
            prev = Some((fold.h_last, memory.clone()));
            memory = fold.m_next;
            last_ids = ids;
        }

        if !runner.is_terminal() {
            let q_ids = data.vocab.encode(&data.tokenizer.tokenize(&log.question));
            let gold = data.actions.index_of(&log.answer).ok_or_else(|| {
                Error::Compatibility(format!(
                    "gold answer {:?} is not in the action set",
                    log.answer
                ))
            })?;
            let (action, event, _) = self.question_event(
                &mut runner,
                &mut pending,
                EventArgs {
                    sentence: &last_ids,
                    question: &q_ids,
                    memory: &memory,
                    feats: None,
                    answer: gold,
                    final_event: true,
                    prev: &prev,
                    mode,
                },
            )?;
            out.steps += 1;
            out.return_sum += event.value;
            if trace {
                out.rows.push(TraceRow {
                    sentence: log.question.clone(),
                    importance: None,
                    question: String::new(),
                    action: data.actions.label(action).to_string(),
                    reward: Some(event.value),
                });
            }
        }
        debug_assert!(pending.is_none());
        out.questions_asked = runner.questions_asked() as u64;
        out.questions_correct = runner.correct_total() as u64;
        Ok(out)
    }

    /// One dialog episode. Each bot turn is a question event: the current
    /// user utterance is the sentence, the memory holds every earlier
    /// utterance, and the question is either the live exchange (with
    /// probability `human_fraction`/100) or a teacher replay of a uniform
    /// earlier exchange. The dialog's last bot turn is the terminal event.
    /// After each turn the user utterance and the gold response fold into
    /// memory in order.
    pub fn run_dialog_episode(
        &mut self,
        data: &DialogData,
        dialog: &Dialog,
        mode: RunMode,
    ) -> Result<EpisodeOutcome> {
        let d = self.model.spec.d;
        let trace = mode == RunMode::Trace;
        let mut out = EpisodeOutcome::default();
        let Some(last_bot) = dialog.turns.iter().rposition(|t| t.bot.is_some()) else {
            return Ok(out);
        };
        let mut runner = EpisodeRunner::new(dialog.sentences().len(), self.cfg.max_trials)?;
        let mut memory = vec![0.0f64; d];
        let mut tracker = ImportanceTracker::new(d);
        let mut contexts: Vec<Vec<String>> = Vec::new();
        let mut pairs: Vec<(String, usize)> = Vec::new();
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut pending: Option<Pending> = None;

        for (ti, turn) in dialog.turns.iter().enumerate() {
            let user_tokens = turn.user.clone();
            let user_ids = data.vocab.encode(&user_tokens);
            let fold = self.model.fold_numeric(&self.ps, &user_ids, &memory)?;
            let shown = match &fold.m_bar {
                Some(m_bar) => Some(tracker.importance(m_bar)?),
                None => None,
            };

            if let Some(bot) = &turn.bot {
                let gold = data.candidates.id(bot)?;
                pairs.push((turn.user_text(), gold));
                let is_final = ti == last_bot;
                let qa = if is_final {
                    // The closing exchange is always the live one.
                    QAPair {
                        question: turn.user_text(),
                        answer: gold,
                        sources: vec![turn.index],
                    }
                } else {
                    let human =
                        self.teacher_rng.gen_range(0..100u8) < self.cfg.human_fraction;
                    if human {
                        self.accum.human_events += 1;
                        QAPair {
                            question: turn.user_text(),
                            answer: gold,
                            sources: vec![turn.index],
                        }
                    } else {
                        self.accum.teacher_events += 1;
                        generate_qa_dialog(&pairs, &mut self.teacher_rng).ok_or_else(|| {
                            Error::Contract("dialog teacher found no exchange to replay".into())
                        })?
                    }
                };
                let q_tokens: Vec<String> =
                    qa.question.split_whitespace().map(str::to_string).collect();
                let q_ids = data.vocab.encode(&q_tokens);
                let feats = if self.cfg.match_features {
                    Some(candidate_features(data, &contexts, &user_tokens, &q_tokens))
                } else {
                    None
                };
                let question_label = format!("{} {}", format_sources(&qa.sources), qa.question);
                loop {
                    let (action, event, directive) = self.question_event(
                        &mut runner,
                        &mut pending,
                        EventArgs {
                            sentence: &user_ids,
                            question: &q_ids,
                            memory: &memory,
                            feats: feats.clone(),
                            answer: qa.answer,
                            final_event: is_final,
                            prev: &prev,
                            mode,
                        },
                    )?;
                    out.steps += 1;
                    out.return_sum += event.value;
                    if trace {
                        out.rows.push(TraceRow {
                            sentence: turn.user_text(),
                            importance: shown,
                            question: question_label.clone(),
                            action: data.actions.label(action).to_string(),
                            reward: Some(event.value),
                        });
                    }
                    if event.terminal {
                        break;
                    }
                    match directive.expect("intermediate events carry a directive") {
                        Directive::Stay => continue,
                        Directive::Advance | Directive::Failed => break,
                    }
                }
                if runner.is_terminal() {
                    break;
                }
            } else {
                runner.skip_question()?;
                if trace {
                    out.rows.push(TraceRow {
                        sentence: turn.user_text(),
                        importance: shown,
                        question: String::new(),
                        action: String::new(),
                        reward: None,
                    });
                }
            }

            if let Some(m_bar) = &fold.m_bar {
                update_episode_attention(&mut tracker, m_bar)?;
            }
            prev = Some((fold.h_last.clone(), memory.clone()));
            memory = fold.m_next;
            contexts.push(user_tokens);
            if let Some(bot) = &turn.bot {
                let bot_tokens: Vec<String> =
                    bot.split_whitespace().map(str::to_string).collect();
                let bot_ids = data.vocab.encode(&bot_tokens);
                let bot_fold = self.model.fold_numeric(&self.ps, &bot_ids, &memory)?;
                if let Some(m_bar) = &bot_fold.m_bar {
                    update_episode_attention(&mut tracker, m_bar)?;
                }
                prev = Some((bot_fold.h_last, memory.clone()));
                memory = bot_fold.m_next;
                contexts.push(bot_tokens);
            }
        }
        debug_assert!(pending.is_none());
        out.questions_asked = runner.questions_asked() as u64;
        out.questions_correct = runner.correct_total() as u64;
        Ok(out)
    }

    fn run_episode(&mut self, data: &TaskData, index: usize, mode: RunMode) -> Result<EpisodeOutcome> {
        match data {
            TaskData::Travel(t) => {
                let log = t.train[index].clone();
                self.run_travel_episode(t, &log, mode)
            }
            TaskData::Dialog(d) => {
                let dialog = d.train[index].clone();
                self.run_dialog_episode(d, &dialog, mode)
            }
        }
    }

    /// Greedy error over a split, with no learning and no teacher.
    pub fn eval_split(&self, data: &TaskData, split: Split) -> Result<EvalReport> {
        match data {
            TaskData::Travel(t) => {
                let logs = match split {
                    Split::Train => &t.train,
                    Split::Val => &t.val,
                    Split::Test => &t.test,
                };
                eval_travel(&self.model, &self.ps, t, logs)
            }
            TaskData::Dialog(d) => {
                let dialogs = match split {
                    Split::Train => &d.train,
                    Split::Val => &d.val,
                    Split::Test => &d.test,
                };
                eval_dialog(&self.model, &self.ps, d, dialogs)
            }
        }
    }

    /// Run whole training episodes until the step counter reaches
    /// `step_limit`. Every `eval_every` episodes the validation error is
    /// measured, appended to `metrics`, and fed to the curriculum's plateau
    /// detector. Returns at an episode boundary, so a checkpoint taken
    /// afterwards resumes exactly.
    pub fn run_steps(
        &mut self,
        data: &TaskData,
        metrics: &mut MetricsWriter,
        step_limit: u64,
    ) -> Result<()> {
        if data.train_len() == 0 {
            return Err(Error::Contract("training split is empty".into()));
        }
        while self.global_step < step_limit {
            let index = (self.train_cursor as usize) % data.train_len();
            self.train_cursor += 1;
            self.episode += 1;
            self.run_episode(data, index, RunMode::Train)?;
            if self.episode % self.cfg.eval_every == 0 {
                let val = self.eval_split(data, Split::Val)?;
                self.curriculum.record(val.error * 100.0);
                self.push_metrics_row(metrics, Some(val.error), None)?;
            }
        }
        Ok(())
    }

    /// Append one metrics row and reset the windowed accumulators.
    fn push_metrics_row(
        &mut self,
        metrics: &mut MetricsWriter,
        val_error: Option<f64>,
        test_error: Option<f64>,
    ) -> Result<()> {
        let row = MetricsRow {
            restart: self.restart,
            step: self.global_step,
            episode: self.episode,
            train_loss: (self.accum.loss_count > 0)
                .then(|| self.accum.loss_sum / self.accum.loss_count as f64),
            val_error,
            test_error,
            eps: self.schedule.eps(self.global_step),
            mean_abs_m: if self.accum.m_abs_count > 0 {
                self.accum.m_abs_sum / self.accum.m_abs_count as f64
            } else {
                0.0
            },
            questions_asked: self.accum.asked_window,
            questions_correct: self.accum.correct_window,
        };
        metrics.push(row)?;
        self.accum.loss_sum = 0.0;
        self.accum.loss_count = 0;
        self.accum.m_abs_sum = 0.0;
        self.accum.m_abs_count = 0;
        self.accum.asked_window = 0;
        self.accum.correct_window = 0;
        Ok(())
    }

    /// Snapshot every piece of run state. The bundle restores byte-exactly:
    /// parameters, both optimizers' moments, all three generators' positions,
    /// the replay buffer's exact slot layout, and the counters.
    pub fn to_bundle(&self, data: &TaskData) -> Result<CheckpointBundle> {
        let params: Vec<ParamRecord> = self
            .ps
            .iter()
            .map(|(_, p)| ParamRecord {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                decay: p.decay,
                data: p.value.data().to_vec(),
            })
            .collect();
        let target_values = self
            .target
            .iter()
            .map(|(_, p)| p.value.data().to_vec())
            .collect();
        let adam_m = self.adam.m.iter().map(|t| t.data().to_vec()).collect();
        let adam_v = self.adam.v.iter().map(|t| t.data().to_vec()).collect();
        Ok(CheckpointBundle {
            config: self.cfg.clone(),
            vocab_text: data.vocab().to_lines(),
            action_labels: data.actions().labels().to_vec(),
            n_max: self.model.spec.n_max,
            params,
            target_values,
            adam_step: self.adam.step,
            adam_lr: self.adam.cfg.lr,
            adam_m,
            adam_v,
            policy_rng: RngState::capture(&self.policy_rng),
            replay_rng: RngState::capture(&self.replay_rng),
            teacher_rng: RngState::capture(&self.teacher_rng),
            restart: self.restart,
            global_step: self.global_step,
            episode: self.episode,
            updates: self.updates,
            train_cursor: self.train_cursor,
            accum: self.accum.clone(),
            curriculum_phase: self.curriculum.phase(),
            curriculum_history: self.curriculum.history().to_vec(),
            replay_capacity: self.buffer.capacity(),
            replay_next: self.buffer.next_slot(),
            replay_pushed: self.buffer.pushed,
            replay_items: self.buffer.iter().cloned().collect(),
        })
    }

    /// Rebuild a context from a checkpoint against freshly prepared data.
    /// The data must match what the run was started with; the vocabulary
    /// text and action labels are compared to catch drift.
    pub fn from_bundle(bundle: &CheckpointBundle, data: &TaskData) -> Result<TrainContext> {
        if data.vocab().to_lines() != bundle.vocab_text {
            return Err(Error::Compatibility(
                "checkpoint vocabulary does not match the prepared data".into(),
            ));
        }
        if data.actions().labels() != bundle.action_labels.as_slice() {
            return Err(Error::Compatibility(
                "checkpoint action set does not match the prepared data".into(),
            ));
        }
        if data.n_max() != bundle.n_max {
            return Err(Error::Compatibility(format!(
                "checkpoint attention width {} does not match the data's {}",
                bundle.n_max,
                data.n_max()
            )));
        }
        let mut ctx = TrainContext::new(&bundle.config, data, bundle.restart)?;
        let count = ctx.ps.iter().count();
        if count != bundle.params.len()
            || bundle.target_values.len() != bundle.params.len()
            || bundle.adam_m.len() != bundle.params.len()
            || bundle.adam_v.len() != bundle.params.len()
        {
            return Err(Error::Compatibility(format!(
                "checkpoint holds {} parameters, the rebuilt model {}",
                bundle.params.len(),
                count
            )));
        }
        for (i, (_, p)) in ctx.ps.iter_mut().enumerate() {
            let rec = &bundle.params[i];
            if p.name != rec.name || p.value.shape() != rec.shape.as_slice() {
                return Err(Error::Compatibility(format!(
                    "parameter {} is {:?} {:?} in the checkpoint but {:?} {:?} in the model",
                    i,
                    rec.name,
                    rec.shape,
                    p.name,
                    p.value.shape()
                )));
            }
            p.value.data_mut().copy_from_slice(&rec.data);
            p.grad.data_mut().fill(0.0);
        }
        for (i, (_, p)) in ctx.target.iter_mut().enumerate() {
            p.value.data_mut().copy_from_slice(&bundle.target_values[i]);
            p.grad.data_mut().fill(0.0);
        }
        ctx.adam.step = bundle.adam_step;
        ctx.adam.cfg.lr = bundle.adam_lr;
        for (i, t) in ctx.adam.m.iter_mut().enumerate() {
            t.data_mut().copy_from_slice(&bundle.adam_m[i]);
        }
        for (i, t) in ctx.adam.v.iter_mut().enumerate() {
            t.data_mut().copy_from_slice(&bundle.adam_v[i]);
        }
        ctx.policy_rng = bundle.policy_rng.restore();
        ctx.replay_rng = bundle.replay_rng.restore();
        ctx.teacher_rng = bundle.teacher_rng.restore();
        ctx.global_step = bundle.global_step;
        ctx.episode = bundle.episode;
        ctx.updates = bundle.updates;
        ctx.train_cursor = bundle.train_cursor;
        ctx.accum = bundle.accum.clone();
        ctx.curriculum = Curriculum::from_parts(
            bundle.config.plateau_window,
            bundle.config.plateau_min_improvement,
            bundle.curriculum_phase,
            bundle.curriculum_history.clone(),
        );
        ctx.buffer = ReplayBuffer::from_parts(
            bundle.replay_capacity,
            bundle.replay_items.clone(),
            bundle.replay_next,
            bundle.replay_pushed,
        );
        Ok(ctx)
    }
}

// ---------------------------------------------------------------------------
// Run drivers

/// How one restart ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub restart: usize,
    pub lr: f64,
    pub steps: u64,
    pub episodes: u64,
    pub val_error: Option<f64>,
    pub test_error: Option<f64>,
    /// Name of the parameter whose gradient blew up, when the restart was
    /// abandoned for divergence.
    pub diverged: Option<String>,
}

/// A full run: every restart's report, the index and final state of the
/// best one by validation error, and the metrics log.
pub struct TrainOutcome {
    pub reports: Vec<RestartReport>,
    pub best_restart: Option<usize>,
    pub best: Option<CheckpointBundle>,
    pub metrics: MetricsWriter,
}

/// Train every restart of `cfg` on `data` and keep the best by validation
/// error. A diverged restart is reported and skipped; any other error
/// aborts the run.
pub fn train(cfg: &RunConfig, data: &TaskData) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut metrics = MetricsWriter::new();
    let mut reports = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(f64, usize, Box<CheckpointBundle>)> = None;
    for restart in 0..cfg.restarts {
        let mut ctx = TrainContext::new(cfg, data, restart)?;
        let lr = cfg.lr_for_restart(restart);
        match ctx.run_steps(data, &mut metrics, cfg.max_steps) {
            Ok(()) => {}
            Err(Error::NonFiniteGrad { param }) => {
                reports.push(RestartReport {
                    restart,
                    lr,
                    steps: ctx.global_step,
                    episodes: ctx.episode,
                    val_error: None,
                    test_error: None,
                    diverged: Some(param),
                });
                continue;
            }
            Err(e) => return Err(e),
        }
        let val = ctx.eval_split(data, Split::Val)?;
        let test = ctx.eval_split(data, Split::Test)?;
        let last_step = metrics
            .rows()
            .iter()
            .rev()
            .find(|r| r.restart == restart)
            .map(|r| r.step);
        if last_step != Some(ctx.global_step) {
            ctx.push_metrics_row(&mut metrics, Some(val.error), Some(test.error))?;
        }
        reports.push(RestartReport {
            restart,
            lr,
            steps: ctx.global_step,
            episodes: ctx.episode,
            val_error: Some(val.error),
            test_error: Some(test.error),
            diverged: None,
        });
        if best.as_ref().map_or(true, |(e, _, _)| val.error < *e) {
            best = Some((val.error, restart, Box::new(ctx.to_bundle(data)?)));
        }
    }
    let (best_restart, bundle) = match best {
        Some((_, r, b)) => (Some(r), Some(*b)),
        None => (None, None),
    };
    Ok(TrainOutcome {
        reports,
        best_restart,
        best: bundle,
        metrics,
    })
}

/// Greedy test error of a saved run.
pub fn evaluate(bundle: &CheckpointBundle, data: &TaskData) -> Result<EvalReport> {
    let ctx = TrainContext::from_bundle(bundle, data)?;
    ctx.eval_split(data, Split::Test)
}

/// Play one test episode greedily with the saved weights and a fresh,
/// index-seeded teacher, and render the per-sentence table: text, attention
/// importance, the (source-tagged) question, the answer given, the reward.
pub fn emit_trace(bundle: &CheckpointBundle, data: &TaskData, index: usize) -> Result<String> {
    let mut ctx = TrainContext::from_bundle(bundle, data)?;
    ctx.teacher_rng = seeded(bundle.config.seed + index as u64, stream::TEACHER);
    let out = match data {
        TaskData::Travel(t) => {
            let log = t.test.get(index).ok_or_else(|| {
                Error::Contract(format!(
                    "trace index {index} is out of range for {} test logs",
                    t.test.len()
                ))
            })?;
            ctx.run_travel_episode(t, log, RunMode::Trace)?
        }
        TaskData::Dialog(d) => {
            let dialog = d.test.get(index).ok_or_else(|| {
                Error::Contract(format!(
                    "trace index {index} is out of range for {} test dialogs",
                    d.test.len()
                ))
            })?;
            ctx.run_dialog_episode(d, dialog, RunMode::Trace)?
        }
    };
    Ok(trace_to_tsv(&out.rows))
}

/// One setting of the corpus/teacher question mix.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanFractionPoint {
    pub human_fraction: u8,
    pub test_error: f64,
    /// Measured share of corpus-replay question events in the best restart.
    pub corpus_share: f64,
    /// The share the setting requests: `human_fraction / 100`.
    pub corpus_share_target: f64,
}

/// Sweep the corpus-question share on the dialog track: train once per
/// setting (same data throughout) and report test error plus the measured
/// mix of corpus versus teacher questions.
pub fn run_human_fraction(base: &RunConfig, fractions: &[u8]) -> Result<Vec<HumanFractionPoint>> {
    if base.track != Track::Dialog {
        return Err(Error::Contract(
            "the question-mix sweep is a dialog-track experiment".into(),
        ));
    }
    let mut points = Vec::with_capacity(fractions.len());
    for &m in fractions {
        let mut cfg = base.clone();
        cfg.human_fraction = m;
        let data = TaskData::prepare(&cfg)?;
        let out = train(&cfg, &data)?;
        let best = out
            .best_restart
            .ok_or_else(|| Error::Contract("every restart diverged".into()))?;
        let bundle = out.best.expect("a best restart implies a bundle");
        let report = out
            .reports
            .iter()
            .find(|r| r.restart == best)
            .expect("the best restart has a report");
        let drawn = bundle.accum.human_events + bundle.accum.teacher_events;
        points.push(HumanFractionPoint {
            human_fraction: m,
            test_error: report.test_error.expect("non-diverged restarts carry errors"),
            corpus_share: if drawn == 0 {
                0.0
            } else {
                bundle.accum.human_events as f64 / drawn as f64
            },
            corpus_share_target: m as f64 / 100.0,
        });
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Supervised baseline

/// Whole-text samples for the LSTM classifier: all tokens in reading order
/// plus the question, labeled with the gold action.
fn baseline_samples(data: &TaskData) -> Result<(Vec<(Vec<usize>, usize)>, Vec<(Vec<usize>, usize)>)> {
    fn travel_split(data: &TravelData, logs: &[TravelLog]) -> Result<Vec<(Vec<usize>, usize)>> {
        logs.iter()
            .map(|log| {
                let mut tokens = Vec::new();
                for sentence in &log.sentences {
                    tokens.extend(data.vocab.encode(&data.tokenizer.tokenize(sentence)));
                }
                tokens.extend(data.vocab.encode(&data.tokenizer.tokenize(&log.question)));
                let gold = data.actions.index_of(&log.answer).ok_or_else(|| {
                    Error::Compatibility(format!(
                        "gold answer {:?} is not in the action set",
                        log.answer
                    ))
                })?;
                Ok((tokens, gold))
            })
            .collect()
    }
    fn dialog_split(data: &DialogData, dialogs: &[Dialog]) -> Result<Vec<(Vec<usize>, usize)>> {
        let mut samples = Vec::new();
        for dialog in dialogs {
            let mut tokens: Vec<usize> = Vec::new();
            for turn in &dialog.turns {
                let user_ids = data.vocab.encode(&turn.user);
                if let Some(bot) = &turn.bot {
                    let mut with_q = tokens.clone();
                    with_q.extend(user_ids.iter().copied());
                    samples.push((with_q, data.candidates.id(bot)?));
                }
                tokens.extend(user_ids);
                if let Some(bot) = &turn.bot {
                    let bot_tokens: Vec<String> =
                        bot.split_whitespace().map(str::to_string).collect();
                    tokens.extend(data.vocab.encode(&bot_tokens));
                }
            }
        }
        Ok(samples)
    }
    match data {
        TaskData::Travel(t) => Ok((travel_split(t, &t.train)?, travel_split(t, &t.test)?)),
        TaskData::Dialog(d) => Ok((dialog_split(d, &d.train)?, dialog_split(d, &d.test)?)),
    }
}

/// Train the supervised LSTM classifier: `cfg.max_steps` minibatch
/// cross-entropy updates over the training split, then greedy test error.
pub fn train_lstm_baseline(cfg: &RunConfig, data: &TaskData) -> Result<EvalReport> {
    cfg.validate()?;
    let (train_samples, test_samples) = baseline_samples(data)?;
    if train_samples.is_empty() {
        return Err(Error::Contract("baseline needs at least one training sample".into()));
    }
    let mut init = seeded(cfg.seed, stream::INIT);
    let mut ps = ParamSet::new();
    let model = BaselineModel::new(
        &mut ps,
        data.vocab().len(),
        cfg.d,
        data.actions().k(),
        &mut init,
    );
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr_for_restart(0),
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        },
        &ps,
    );
    let mut order = seeded(cfg.seed, stream::POLICY);
    for _ in 0..cfg.max_steps {
        let mut g = Graph::new();
        let mut losses = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let (tokens, label) = &train_samples[order.gen_range(0..train_samples.len())];
            let logits = model.logits_var(&mut g, &ps, tokens)?;
            losses.push(g.cross_entropy(logits, *label)?);
        }
        let stacked = g.concat_rows(&losses)?;
        let loss = g.mean(stacked);
        g.backward(loss, &mut ps)?;
        if !g.value(loss).data()[0].is_finite() {
            ps.zero_grads();
            return Err(Error::NonFiniteGrad {
                param: "loss".into(),
            });
        }
        adam.apply(&mut ps)?;
    }
    let mut wrong = 0usize;
    for (tokens, label) in &test_samples {
        if greedy_action(&model.logits(&ps, tokens)?) != *label {
            wrong += 1;
        }
    }
    Ok(EvalReport::from_counts(test_samples.len(), wrong))
}
