//! Versioned, digest-protected checkpoint container.
//!
//! Everything a run needs to continue exactly — parameters, optimizer
//! moments, target network, RNG positions, replay buffer, curriculum and
//! counters — serializes to one little-endian byte stream guarded by a
//! SHA-256 digest. Numbers are written with fixed width and byte order, so
//! a checkpoint is portable across machines.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::rng::RngState;
use crate::student::{RecomputeCtx, Transition};
use crate::teacher::CurriculumPhase;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SNCK";

/// One trainable tensor as stored: name, shape, decay flag, values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub decay: bool,
    pub data: Vec<f64>,
}

/// Windowed metric accumulators, saved so the first metrics row after a
/// restore matches the uninterrupted run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricAccum {
    pub loss_sum: f64,
    pub loss_count: u64,
    pub m_abs_sum: f64,
    pub m_abs_count: u64,
    pub asked_window: u64,
    pub correct_window: u64,
    /// Question events answered from the corpus (human) pair vs generated
    /// by the teacher; audited by the question-source experiment.
    pub human_events: u64,
    pub teacher_events: u64,
}

/// Complete snapshot of one training context at an episode boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointBundle {
    pub config: RunConfig,
    pub vocab_text: String,
    pub action_labels: Vec<String>,
    /// Resolved attention width (the config may leave it to the data).
    pub n_max: usize,
    pub params: Vec<ParamRecord>,
    /// Target-network values, parallel to `params`.
    pub target_values: Vec<Vec<f64>>,
    pub adam_step: u64,
    pub adam_lr: f64,
    pub adam_m: Vec<Vec<f64>>,
    pub adam_v: Vec<Vec<f64>>,
    pub policy_rng: RngState,
    pub replay_rng: RngState,
    pub teacher_rng: RngState,
    pub restart: usize,
    pub global_step: u64,
    pub episode: u64,
    pub updates: u64,
    /// Position in the training-set sweep order.
    pub train_cursor: u64,
    pub accum: MetricAccum,
    pub curriculum_phase: CurriculumPhase,
    pub curriculum_history: Vec<f64>,
    pub replay_capacity: usize,
    pub replay_next: usize,
    pub replay_pushed: u64,
    pub replay_items: Vec<Transition>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn bool(&mut self, v: bool) {
        self.u8(v as u8);
    }

    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        for &x in v {
            self.f64(x);
        }
    }

    fn usizes(&mut self, v: &[usize]) {
        self.usize(v.len());
        for &x in v {
            self.usize(x);
        }
    }

    fn rng(&mut self, s: &RngState) {
        self.buf.extend_from_slice(&s.seed);
        self.u64(s.stream);
        self.u128(s.word_pos);
    }

    fn opt_f64s(&mut self, v: &Option<Vec<f64>>) {
        match v {
            Some(x) => {
                self.bool(true);
                self.f64s(x);
            }
            None => self.bool(false),
        }
    }

    fn opt_feat_rows(&mut self, v: &Option<Vec<Vec<f64>>>) {
        match v {
            Some(rows) => {
                self.bool(true);
                self.usize(rows.len());
                for row in rows {
                    self.f64s(row);
                }
            }
            None => self.bool(false),
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "truncated: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("length {v} overflows usize")))
    }

    fn bool(&mut self) -> Result<bool> {
        Ok(self.u8()? != 0)
    }

    fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|e| Error::Checkpoint(format!("bad utf-8 string: {e}")))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn usizes(&mut self) -> Result<Vec<usize>> {
        let n = self.usize()?;
        (0..n).map(|_| self.usize()).collect()
    }

    fn rng(&mut self) -> Result<RngState> {
        let seed: [u8; 32] = self.take(32)?.try_into().unwrap();
        Ok(RngState {
            seed,
            stream: self.u64()?,
            word_pos: self.u128()?,
        })
    }

    fn opt_f64s(&mut self) -> Result<Option<Vec<f64>>> {
        Ok(if self.bool()? { Some(self.f64s()?) } else { None })
    }

    fn opt_feat_rows(&mut self) -> Result<Option<Vec<Vec<f64>>>> {
        if !self.bool()? {
            return Ok(None);
        }
        let n = self.usize()?;
        Ok(Some((0..n).map(|_| self.f64s()).collect::<Result<_>>()?))
    }
}

fn write_transition(w: &mut Writer, t: &Transition) {
    w.f64s(&t.s);
    w.usize(t.a);
    w.f64(t.r);
    w.f64s(&t.s_next);
    w.bool(t.terminal);
    match &t.ctx {
        Some(c) => {
            w.bool(true);
            w.usizes(&c.sentence_tokens);
            w.usizes(&c.question_tokens);
            w.f64s(&c.memory_in);
            w.opt_f64s(&c.prev_h_last);
            w.opt_f64s(&c.prev_memory);
            w.opt_feat_rows(&c.match_feats);
            w.opt_feat_rows(&c.match_feats_next);
        }
        None => w.bool(false),
    }
}

fn read_transition(r: &mut Reader) -> Result<Transition> {
    let s = r.f64s()?;
    let a = r.usize()?;
    let reward = r.f64()?;
    let s_next = r.f64s()?;
    let terminal = r.bool()?;
    let ctx = if r.bool()? {
        Some(RecomputeCtx {
            sentence_tokens: r.usizes()?,
            question_tokens: r.usizes()?,
            memory_in: r.f64s()?,
            prev_h_last: r.opt_f64s()?,
            prev_memory: r.opt_f64s()?,
            match_feats: r.opt_feat_rows()?,
            match_feats_next: r.opt_feat_rows()?,
        })
    } else {
        None
    };
    Ok(Transition {
        s,
        a,
        r: reward,
        s_next,
        terminal,
        ctx,
    })
}

impl CheckpointBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(&self.config.to_kv_lines());
        w.str(&self.vocab_text);
        w.usize(self.action_labels.len());
        for label in &self.action_labels {
            w.str(label);
        }
        w.usize(self.n_max);
        w.usize(self.params.len());
        for p in &self.params {
            w.str(&p.name);
            w.bool(p.decay);
            w.usizes(&p.shape);
            w.f64s(&p.data);
        }
        for t in &self.target_values {
            w.f64s(t);
        }
        w.u64(self.adam_step);
        w.f64(self.adam_lr);
        for m in &self.adam_m {
            w.f64s(m);
        }
        for v in &self.adam_v {
            w.f64s(v);
        }
        w.rng(&self.policy_rng);
        w.rng(&self.replay_rng);
        w.rng(&self.teacher_rng);
        w.usize(self.restart);
        w.u64(self.global_step);
        w.u64(self.episode);
        w.u64(self.updates);
        w.u64(self.train_cursor);
        w.f64(self.accum.loss_sum);
        w.u64(self.accum.loss_count);
        w.f64(self.accum.m_abs_sum);
        w.u64(self.accum.m_abs_count);
        w.u64(self.accum.asked_window);
        w.u64(self.accum.correct_window);
        w.u64(self.accum.human_events);
        w.u64(self.accum.teacher_events);
        w.u8(match self.curriculum_phase {
            CurriculumPhase::SingleSentence => 0,
            CurriculumPhase::MultiSentence => 1,
        });
        w.f64s(&self.curriculum_history);
        w.usize(self.replay_capacity);
        w.usize(self.replay_next);
        w.u64(self.replay_pushed);
        w.usize(self.replay_items.len());
        for t in &self.replay_items {
            write_transition(&mut w, t);
        }

        let payload = w.buf;
        let mut out = Vec::with_capacity(payload.len() + 40);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let digest = Sha256::digest(&payload);
        out.extend_from_slice(&digest);
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version mismatch: file has {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let stored_digest: [u8; 32] = r.take(32)?.try_into().unwrap();
        let payload = &bytes[r.pos..];
        let digest: [u8; 32] = Sha256::digest(payload).into();
        if digest != stored_digest {
            return Err(Error::Checkpoint("digest mismatch; file is corrupt".into()));
        }

        let config_text = r.str()?;
        let config = RunConfig::from_kv_lines(&config_text, RunConfig::default())
            .map_err(|e| Error::Checkpoint(format!("embedded config: {e}")))?;
        let vocab_text = r.str()?;
        let n_labels = r.usize()?;
        let action_labels = (0..n_labels).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let n_max = r.usize()?;
        let n_params = r.usize()?;
        let mut params = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let name = r.str()?;
            let decay = r.bool()?;
            let shape = r.usizes()?;
            let data = r.f64s()?;
            if shape.iter().product::<usize>() != data.len() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name}: shape {shape:?} does not match {} values",
                    data.len()
                )));
            }
            params.push(ParamRecord {
                name,
                shape,
                decay,
                data,
            });
        }
        let target_values = (0..n_params).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
        let adam_step = r.u64()?;
        let adam_lr = r.f64()?;
        let adam_m = (0..n_params).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
        let adam_v = (0..n_params).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
        let policy_rng = r.rng()?;
        let replay_rng = r.rng()?;
        let teacher_rng = r.rng()?;
        let restart = r.usize()?;
        let global_step = r.u64()?;
        let episode = r.u64()?;
        let updates = r.u64()?;
        let train_cursor = r.u64()?;
        let accum = MetricAccum {
            loss_sum: r.f64()?,
            loss_count: r.u64()?,
            m_abs_sum: r.f64()?,
            m_abs_count: r.u64()?,
            asked_window: r.u64()?,
            correct_window: r.u64()?,
            human_events: r.u64()?,
            teacher_events: r.u64()?,
        };
        let curriculum_phase = match r.u8()? {
            0 => CurriculumPhase::SingleSentence,
            1 => CurriculumPhase::MultiSentence,
            other => {
                return Err(Error::Checkpoint(format!("unknown curriculum phase {other}")))
            }
        };
        let curriculum_history = r.f64s()?;
        let replay_capacity = r.usize()?;
        let replay_next = r.usize()?;
        let replay_pushed = r.u64()?;
        let n_items = r.usize()?;
        let replay_items = (0..n_items)
            .map(|_| read_transition(&mut r))
            .collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes after payload",
                bytes.len() - r.pos
            )));
        }
        Ok(CheckpointBundle {
            config,
            vocab_text,
            action_labels,
            n_max,
            params,
            target_values,
            adam_step,
            adam_lr,
            adam_m,
            adam_v,
            policy_rng,
            replay_rng,
            teacher_rng,
            restart,
            global_step,
            episode,
            updates,
            train_cursor,
            accum,
            curriculum_phase,
            curriculum_history,
            replay_capacity,
            replay_next,
            replay_pushed,
            replay_items,
        })
    }
}

pub fn save_checkpoint<P: AsRef<Path>>(path: P, bundle: &CheckpointBundle) -> Result<()> {
    fs::write(path, bundle.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<CheckpointBundle> {
    let bytes = fs::read(path.as_ref()).map_err(|e| {
        Error::Checkpoint(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    CheckpointBundle::from_bytes(&bytes)
}
