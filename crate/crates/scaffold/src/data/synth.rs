//! Synthetic restaurant-booking dialog generator.
//!
//! Produces dialogs in the exact file format the parser ingests, shaped
//! like the api-call-issuing task: the user asks for a table and names
//! some of the four booking slots (cuisine, location, party size, price);
//! the bot asks for each missing slot in a fixed order, wraps up, and
//! issues `api_call <cuisine> <location> <size> <price>`. Every run also
//! yields the full candidates file and a knowledge-base file, so the
//! ingestion path (candidates, match features, OOV splits) can be driven
//! end to end without any external data.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::candidates::CandidateSet;
use crate::data::dialog::{Dialog, DialogTurn};
use crate::error::{Error, Result};
use crate::rng::{seeded, stream, Rng};

pub const CUISINES: [&str; 3] = ["noodle", "grill", "tapas"];
pub const LOCATIONS: [&str; 3] = ["riverside", "old-town", "harbor"];
pub const SIZES: [&str; 2] = ["two", "six"];
pub const PRICES: [&str; 2] = ["cheap", "expensive"];

const GREETING: &str = "hello what can i help you with today";
const ACK: &str = "ok i am on it";
const ASK_CUISINE: &str = "any preference on a type of cuisine";
const ASK_LOCATION: &str = "where should it be";
const ASK_SIZE: &str = "how many people would be in your party";
const ASK_PRICE: &str = "which price range are you looking for";
const WRAPUP: &str = "ok let me look into some options for you";
const SILENCE: &str = "<SILENCE>";

/// Booking slots in the order the bot asks for them.
const SLOTS: [usize; 4] = [0, 1, 2, 3];

/// How many dialogs to generate and with which seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DialogSpec {
    pub n_dialogs: usize,
    pub seed: u64,
}

fn slot_values(rng: &mut Rng) -> [&'static str; 4] {
    [
        CUISINES.choose(rng).unwrap(),
        LOCATIONS.choose(rng).unwrap(),
        SIZES.choose(rng).unwrap(),
        PRICES.choose(rng).unwrap(),
    ]
}

fn slot_phrase(slot: usize, value: &str) -> String {
    match slot {
        0 => format!("with {value} food"),
        1 => format!("in {value}"),
        2 => format!("for {value} people"),
        _ => format!("in a {value} price range"),
    }
}

fn slot_question(slot: usize) -> &'static str {
    match slot {
        0 => ASK_CUISINE,
        1 => ASK_LOCATION,
        2 => ASK_SIZE,
        _ => ASK_PRICE,
    }
}

fn api_call(values: &[&str; 4]) -> String {
    format!(
        "api_call {} {} {} {}",
        values[0], values[1], values[2], values[3]
    )
}

fn turn(index: usize, user: &str, bot: &str) -> DialogTurn {
    DialogTurn {
        index,
        user: user.split_whitespace().map(str::to_string).collect(),
        bot: Some(bot.to_string()),
    }
}

/// Generate one booking dialog.
pub fn generate_dialog(rng: &mut Rng) -> Dialog {
    let values = slot_values(rng);
    // Each slot is independently named upfront or left for the bot to ask.
    let provided: Vec<bool> = SLOTS.map(|_| rng.gen_bool(0.5)).to_vec();
    let missing: Vec<usize> = SLOTS.into_iter().filter(|&s| !provided[s]).collect();

    let mut request = String::from("can you book a table");
    for slot in SLOTS {
        if provided[slot] {
            request.push(' ');
            request.push_str(&slot_phrase(slot, values[slot]));
        }
    }

    let mut turns = Vec::new();
    turns.push(turn(1, "good morning", GREETING));
    turns.push(turn(2, &request, ACK));
    let mut next_bot: Vec<&str> = missing.iter().map(|&s| slot_question(s)).collect();
    next_bot.push(WRAPUP);
    let mut user_lines = vec![SILENCE.to_string()];
    user_lines.extend(missing.iter().map(|&s| slot_phrase(s, values[s])));
    for (i, (user, bot)) in user_lines.iter().zip(&next_bot).enumerate() {
        turns.push(turn(3 + i, user, bot));
    }
    let last = turns.len() + 1;
    turns.push(turn(last, SILENCE, &api_call(&values)));
    Dialog { turns }
}

/// Generate a corpus of booking dialogs from the data stream of `seed`.
pub fn generate_dialogs(spec: DialogSpec) -> Vec<Dialog> {
    let mut rng = seeded(spec.seed, stream::DATA);
    (0..spec.n_dialogs).map(|_| generate_dialog(&mut rng)).collect()
}

/// The complete candidate list of the booking task: every fixed bot line
/// plus every reachable api_call, in a stable order.
pub fn all_candidates() -> CandidateSet {
    let mut lines = vec![
        GREETING.to_string(),
        ACK.to_string(),
        ASK_CUISINE.to_string(),
        ASK_LOCATION.to_string(),
        ASK_SIZE.to_string(),
        ASK_PRICE.to_string(),
        WRAPUP.to_string(),
    ];
    for c in CUISINES {
        for l in LOCATIONS {
            for s in SIZES {
                for p in PRICES {
                    lines.push(api_call(&[c, l, s, p]));
                }
            }
        }
    }
    CandidateSet::from_lines(&lines.join("\n"))
}

/// Knowledge-base file text for the booking world: one restaurant per
/// (cuisine, location, price) combination with all seven fields filled.
pub fn kb_file_text() -> String {
    let mut out = String::new();
    let mut line = 1usize;
    for c in CUISINES {
        for l in LOCATIONS {
            for p in PRICES {
                let name = format!("resto_{l}_{p}_{c}");
                let mut push = |key: &str, value: &str| {
                    out.push_str(&format!("{line} {name} {key} {value}\n"));
                    line += 1;
                };
                push("R_cuisine", c);
                push("R_location", l);
                push("R_price", p);
                push("R_phone", &format!("{name}_phone"));
                push("R_address", &format!("{name}_address"));
                push("R_rating", "7");
                for s in SIZES {
                    push("R_number", s);
                }
            }
        }
    }
    out
}

/// Swap every occurrence of the listed slot values for replacement words
/// the training data never contains, producing an out-of-vocabulary split
/// from `dialogs`. Replacements are positional: `swaps[i].0` becomes
/// `swaps[i].1`.
pub fn substitute_entities(dialogs: &[Dialog], swaps: &[(&str, &str)]) -> Result<Vec<Dialog>> {
    for (from, to) in swaps {
        if from.split_whitespace().count() != 1 || to.split_whitespace().count() != 1 {
            return Err(Error::Contract(format!(
                "entity swaps must be single tokens: {from:?} -> {to:?}"
            )));
        }
    }
    let swap = |token: &str| -> String {
        for (from, to) in swaps {
            if token == *from {
                return to.to_string();
            }
        }
        token.to_string()
    };
    Ok(dialogs
        .iter()
        .map(|d| Dialog {
            turns: d
                .turns
                .iter()
                .map(|t| DialogTurn {
                    index: t.index,
                    user: t.user.iter().map(|w| swap(w)).collect(),
                    bot: t.bot.as_ref().map(|b| {
                        b.split_whitespace().map(swap).collect::<Vec<_>>().join(" ")
                    }),
                })
                .collect(),
        })
        .collect())
}
