//! Restaurant-dialog corpus ingestion.
//!
//! Reads the line-oriented dialog format: each line is `<id> <user
//! utterance>\t<bot response>`, a bare `<id> <text>` line (no tab) is an
//! api-result fact that joins the context without a bot response, and a
//! blank line ends the current dialog. Turn ids restart at 1 for every
//! dialog; a dialog that starts elsewhere is kept but flagged with a
//! warning. Parsed dialogs round-trip through [`serialize_dialogs`]
//! byte-identically up to trailing whitespace.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::data::candidates::CandidateSet;
use crate::encoders::{Vocabulary, UNK};
use crate::error::{Error, Result};

/// One numbered line of a dialog: the user's utterance and, unless the
/// line is a bare api-result fact, the bot's response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogTurn {
    /// 1-based id as written in the file.
    pub index: usize,
    /// Whitespace tokens of the user utterance (or of the bare fact line).
    pub user: Vec<String>,
    /// Bot response text; `None` for bare api-result lines.
    pub bot: Option<String>,
}

impl DialogTurn {
    /// User side re-joined with single spaces.
    pub fn user_text(&self) -> String {
        self.user.join(" ")
    }
}

/// A complete dialog: the turns between two blank-line separators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dialog {
    pub turns: Vec<DialogTurn>,
}

impl Dialog {
    /// Utterances in reading order: user line, then bot line when present.
    /// This is the sentence stream the episode memory consumes.
    pub fn sentences(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for turn in &self.turns {
            out.push(turn.user.clone());
            if let Some(bot) = &turn.bot {
                out.push(tokenize_line(bot));
            }
        }
        out
    }
}

/// Parsed corpus plus any format warnings (kept, not fatal).
#[derive(Debug, Clone, Default)]
pub struct DialogCorpus {
    pub dialogs: Vec<Dialog>,
    pub warnings: Vec<String>,
}

/// One supervised example: predict the bot's response to `question` given
/// every earlier utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogSample {
    /// All utterances before the answer turn, in reading order.
    pub context: Vec<Vec<String>>,
    /// The user utterance the bot is responding to.
    pub question: Vec<String>,
    /// Candidate id of the gold bot response.
    pub answer: usize,
}

fn tokenize_line(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Parse a whole dialog file. See the module docs for the line format.
pub fn parse_dialog_str(text: &str) -> Result<DialogCorpus> {
    let mut corpus = DialogCorpus::default();
    let mut current = Dialog::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !current.turns.is_empty() {
                corpus.dialogs.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (id_str, rest) = line.split_once(' ').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected `<id> <utterance>`, got {line:?}"),
        })?;
        let index: usize = id_str.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("turn id is not a number: {id_str:?}"),
        })?;
        if current.turns.is_empty() && index != 1 {
            corpus
                .warnings
                .push(format!("line {line_no}: dialog ids restart at {index}, not 1"));
        }
        let (user, bot) = match rest.split_once('\t') {
            Some((u, b)) => (u, Some(b.trim_end().to_string())),
            None => (rest, None),
        };
        current.turns.push(DialogTurn {
            index,
            user: tokenize_line(user),
            bot,
        });
    }
    if !current.turns.is_empty() {
        corpus.dialogs.push(current);
    }
    Ok(corpus)
}

/// Parse a dialog file from disk.
pub fn parse_dialog_file<P: AsRef<Path>>(path: P) -> Result<DialogCorpus> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::Ingestion(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    parse_dialog_str(&text)
}

/// Render dialogs back into the file format (single-space tokens, tab
/// before bot responses, blank line between dialogs).
pub fn serialize_dialogs(dialogs: &[Dialog]) -> String {
    let mut out = String::new();
    for (d, dialog) in dialogs.iter().enumerate() {
        if d > 0 {
            out.push('\n');
        }
        for turn in &dialog.turns {
            out.push_str(&turn.index.to_string());
            out.push(' ');
            out.push_str(&turn.user_text());
            if let Some(bot) = &turn.bot {
                out.push('\t');
                out.push_str(bot);
            }
            out.push('\n');
        }
    }
    out
}

/// Expand a dialog into one sample per bot turn. The context of each
/// sample is every utterance strictly before the answered turn's bot
/// response; bare api-result lines contribute context but no sample.
pub fn to_samples(dialog: &Dialog, candidates: &CandidateSet) -> Result<Vec<DialogSample>> {
    let mut samples = Vec::new();
    let mut context: Vec<Vec<String>> = Vec::new();
    for turn in &dialog.turns {
        if let Some(bot) = &turn.bot {
            let answer = candidates.id(bot)?;
            samples.push(DialogSample {
                context: context.clone(),
                question: turn.user.clone(),
                answer,
            });
            context.push(turn.user.clone());
            context.push(tokenize_line(bot));
        } else {
            context.push(turn.user.clone());
        }
    }
    Ok(samples)
}

/// A test split parsed against a frozen training vocabulary, with the
/// out-of-vocabulary token count for metrics.
#[derive(Debug, Clone)]
pub struct OovSplit {
    pub corpus: DialogCorpus,
    pub total_tokens: usize,
    pub unk_tokens: usize,
}

impl OovSplit {
    /// Fraction of utterance tokens that fall outside the vocabulary.
    pub fn unk_rate(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.unk_tokens as f64 / self.total_tokens as f64
        }
    }
}

/// Load a held-out split without touching the vocabulary: the file is
/// parsed as usual and every token absent from `vocab` is counted as UNK.
pub fn load_oov_split<P: AsRef<Path>>(path: P, vocab: &Vocabulary) -> Result<OovSplit> {
    let corpus = parse_dialog_file(path)?;
    let mut total = 0usize;
    let mut unk = 0usize;
    for dialog in &corpus.dialogs {
        for sentence in dialog.sentences() {
            for token in &sentence {
                total += 1;
                if vocab.index_of(token).is_none() {
                    unk += 1;
                }
            }
        }
    }
    Ok(OovSplit {
        corpus,
        total_tokens: total,
        unk_tokens: unk,
    })
}

/// Encode one sample as a normalized record line: context token ids with
/// ` | ` between utterances, a tab, question token ids, a tab, and the
/// answer's candidate id. Unknown tokens encode as the UNK id.
pub fn encode_record(sample: &DialogSample, vocab: &Vocabulary) -> String {
    let enc = |tokens: &[String]| -> String {
        tokens
            .iter()
            .map(|t| vocab.get_or_unk(t).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let ctx = sample
        .context
        .iter()
        .map(|s| enc(s))
        .collect::<Vec<_>>()
        .join(" | ");
    format!("{ctx}\t{}\t{}", enc(&sample.question), sample.answer)
}

/// Write the normalized record file, one [`encode_record`] line per sample.
pub fn write_records<P: AsRef<Path>>(
    samples: &[DialogSample],
    vocab: &Vocabulary,
    path: P,
) -> Result<()> {
    let mut out = String::new();
    for sample in samples {
        out.push_str(&encode_record(sample, vocab));
        out.push('\n');
    }
    fs::write(path.as_ref(), out)
        .map_err(|e| Error::Ingestion(format!("cannot write {}: {e}", path.as_ref().display())))
}

/// Parse one normalized record line back into id form
/// `(context utterances, question, answer id)`.
pub fn decode_record(line: &str) -> Result<(Vec<Vec<usize>>, Vec<usize>, usize)> {
    let mut parts = line.split('\t');
    let (ctx, q, a) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(q), Some(a), None) => (c, q, a),
        _ => {
            return Err(Error::Ingestion(format!(
                "record line needs 3 tab-separated fields: {line:?}"
            )))
        }
    };
    let ids = |field: &str| -> Result<Vec<usize>> {
        field
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Ingestion(format!("bad token id {t:?} in {line:?}")))
            })
            .collect()
    };
    let context = if ctx.trim().is_empty() {
        Vec::new()
    } else {
        ctx.split(" | ").map(ids).collect::<Result<Vec<_>>>()?
    };
    let answer = a
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Ingestion(format!("bad answer id {a:?} in {line:?}")))?;
    Ok((context, ids(q)?, answer))
}

/// Collect every distinct utterance token of a corpus into `vocab`.
pub fn build_dialog_vocab(corpus: &DialogCorpus, vocab: &mut Vocabulary) {
    for dialog in &corpus.dialogs {
        for sentence in dialog.sentences() {
            for token in &sentence {
                vocab.add(token);
            }
        }
    }
}

/// Distinct utterance tokens of a corpus (diagnostics and OOV checks).
pub fn corpus_token_set(corpus: &DialogCorpus) -> HashSet<String> {
    let mut set = HashSet::new();
    for dialog in &corpus.dialogs {
        for sentence in dialog.sentences() {
            set.extend(sentence);
        }
    }
    set
}

/// Guard against silent misuse of the reserved UNK id in records.
pub fn unk_id() -> usize {
    UNK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::candidates::CandidateSet;

    pub(crate) const RESTAURANT_DIALOG: &str = "\
1 <SILENCE>\tHello , welcome to the restaurant line . How may I help you ?
2 i want a moderately priced restaurant that serves\tWhat kind of food would you like ?
3 canapes food\tWhat part of town do you have in mind ?
4 it doesnt matter\tapi-call canapes R-location moderate
5 api-call no result
6 <SILENCE>\tyippee_noodle_bar is a nice restaurant in the centre of town in the moderate price range
7 gastropub food\tSorry there is no canapes restaurant in the moderate price range
8 i want a gastropub restaurant\tthe cow pizza kitchen and bar is a nice restaurant in the centre of town serving gastropub food
9 what is the address\tSure , the cow pizza kitchen and bar is on the-cow-pizza-kitchen-and-bar-address
10 what is the phone number\tThe phone number of the cow pizza kitchen and bar is the-cow-pizza-kitchen-and-bar-phone
11 what is the area\tthe cow pizza kitchen and bar is a nice place in the centre of town
12 thank you goodbye\tyou are welcome
";

    fn restaurant_corpus() -> DialogCorpus {
        parse_dialog_str(RESTAURANT_DIALOG).unwrap()
    }

    #[test]
    fn api_call_turn_parses_user_and_bot_sides() {
        let corpus = restaurant_corpus();
        let turn = &corpus.dialogs[0].turns[3];
        assert_eq!(turn.index, 4);
        assert_eq!(turn.user_text(), "it doesnt matter");
        assert_eq!(turn.bot.as_deref(), Some("api-call canapes R-location moderate"));
    }

    #[test]
    fn bare_api_result_line_attaches_as_context_without_bot() {
        let corpus = restaurant_corpus();
        let turn = &corpus.dialogs[0].turns[4];
        assert_eq!(turn.index, 5);
        assert_eq!(turn.user_text(), "api-call no result");
        assert_eq!(turn.bot, None);
        let sentences = corpus.dialogs[0].sentences();
        assert!(sentences.contains(&vec![
            "api-call".to_string(),
            "no".to_string(),
            "result".to_string()
        ]));
    }

    #[test]
    fn empty_file_yields_zero_dialogs() {
        let corpus = parse_dialog_str("").unwrap();
        assert!(corpus.dialogs.is_empty());
        assert!(corpus.warnings.is_empty());
        let blank = parse_dialog_str("\n\n\n").unwrap();
        assert!(blank.dialogs.is_empty());
    }

    #[test]
    fn blank_lines_split_dialogs_and_ids_restart() {
        let text = "1 hi\thello\n2 bye\tgoodbye\n\n1 hi again\thello again\n";
        let corpus = parse_dialog_str(text).unwrap();
        assert_eq!(corpus.dialogs.len(), 2);
        assert_eq!(corpus.dialogs[0].turns.len(), 2);
        assert_eq!(corpus.dialogs[1].turns[0].index, 1);
        assert!(corpus.warnings.is_empty());
    }

    #[test]
    fn non_restarting_ids_warn_but_parse() {
        let text = "1 hi\thello\n\n3 hi\thello\n";
        let corpus = parse_dialog_str(text).unwrap();
        assert_eq!(corpus.dialogs.len(), 2);
        assert_eq!(corpus.warnings.len(), 1);
        assert!(corpus.warnings[0].contains("restart at 3"), "{:?}", corpus.warnings);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let err = parse_dialog_str("1 hi\thello\nnonsense\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let err = parse_dialog_str("x hi\thello\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains('x'), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn silence_token_survives_parsing() {
        let corpus = restaurant_corpus();
        assert_eq!(corpus.dialogs[0].turns[0].user, vec!["<SILENCE>".to_string()]);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let corpus = restaurant_corpus();
        assert_eq!(serialize_dialogs(&corpus.dialogs), RESTAURANT_DIALOG);
        let multi = "1 a\tb\n2 c d\te f\n\n1 g\th\n2 api result line\n";
        let corpus = parse_dialog_str(multi).unwrap();
        assert_eq!(serialize_dialogs(&corpus.dialogs), multi);
    }

    #[test]
    fn twelve_turn_dialog_yields_eleven_samples() {
        let corpus = restaurant_corpus();
        let candidates = CandidateSet::from_corpus(&corpus.dialogs);
        let samples = to_samples(&corpus.dialogs[0], &candidates).unwrap();
        assert_eq!(samples.len(), 11);
    }

    #[test]
    fn single_turn_dialog_yields_one_sample() {
        let corpus = parse_dialog_str("1 hi\thello\n").unwrap();
        let candidates = CandidateSet::from_corpus(&corpus.dialogs);
        let samples = to_samples(&corpus.dialogs[0], &candidates).unwrap();
        assert_eq!(samples.len(), 1);
        assert!(samples[0].context.is_empty());
        assert_eq!(samples[0].question, vec!["hi".to_string()]);
    }

    #[test]
    fn contexts_are_strictly_nested() {
        let corpus = restaurant_corpus();
        let candidates = CandidateSet::from_corpus(&corpus.dialogs);
        let samples = to_samples(&corpus.dialogs[0], &candidates).unwrap();
        for pair in samples.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!(a.context.len() < b.context.len());
            assert_eq!(&b.context[..a.context.len()], &a.context[..]);
        }
    }

    #[test]
    fn no_context_contains_its_own_answer_turn() {
        let corpus = restaurant_corpus();
        let candidates = CandidateSet::from_corpus(&corpus.dialogs);
        let samples = to_samples(&corpus.dialogs[0], &candidates).unwrap();
        for sample in &samples {
            let answer_tokens: Vec<String> = candidates
                .get(sample.answer)
                .split_whitespace()
                .map(str::to_string)
                .collect();
            let mut stream = sample.context.clone();
            stream.push(sample.question.clone());
            let after_question = &stream[stream.len() - 1..];
            assert_ne!(after_question[0], answer_tokens);
        }
        // The api-result fact is context for every later sample.
        let fact = vec!["api-call".to_string(), "no".to_string(), "result".to_string()];
        assert!(samples[4].context.contains(&fact));
        assert!(!samples[3].context.contains(&fact));
    }

    #[test]
    fn oov_split_counts_unknown_tokens_without_growing_vocab() {
        let dir = std::env::temp_dir().join("scaffold_dialog_oov_test");
        std::fs::create_dir_all(&dir).unwrap();
        let train_path = dir.join("train.txt");
        let test_path = dir.join("test.txt");
        std::fs::write(&train_path, "1 hi there\thello friend\n").unwrap();
        std::fs::write(&test_path, "1 hi stranger\thello friend\n").unwrap();

        let train = parse_dialog_file(&train_path).unwrap();
        let mut vocab = Vocabulary::new();
        build_dialog_vocab(&train, &mut vocab);
        vocab.freeze();
        let before = vocab.len();

        let split = load_oov_split(&test_path, &vocab).unwrap();
        assert_eq!(vocab.len(), before);
        assert_eq!(split.total_tokens, 4);
        assert_eq!(split.unk_tokens, 1);
        assert!((split.unk_rate() - 0.25).abs() < 1e-12);
        assert_eq!(vocab.get_or_unk("stranger"), UNK);
    }

    #[test]
    fn record_lines_round_trip_ids() {
        let corpus = restaurant_corpus();
        let candidates = CandidateSet::from_corpus(&corpus.dialogs);
        let samples = to_samples(&corpus.dialogs[0], &candidates).unwrap();
        let mut vocab = Vocabulary::new();
        build_dialog_vocab(&corpus, &mut vocab);
        vocab.freeze();

        for sample in &samples {
            let line = encode_record(sample, &vocab);
            let (ctx, q, a) = decode_record(&line).unwrap();
            assert_eq!(a, sample.answer);
            assert_eq!(ctx.len(), sample.context.len());
            assert_eq!(q, vocab.encode(&sample.question));
            for (ids, sent) in ctx.iter().zip(&sample.context) {
                assert_eq!(ids, &vocab.encode(sent));
            }
        }
        assert!(decode_record("1 2 3").is_err());
        assert!(decode_record("1\t2\tx").is_err());
    }
}
