//! Teacher: sentence-importance tracking, template question generation,
//! and the curriculum phase switch.

pub mod curriculum;
pub mod importance;
pub mod qa;
pub mod templates;

pub use curriculum::{detect_plateau, Curriculum, CurriculumPhase};
pub use importance::{importance, update_episode_attention, ImportanceTracker};
pub use qa::{generate_qa_dialog, generate_qa_travel, QAPair};
pub use templates::{
    applicable, default_rules, load_rules, parse_rules, Bindings, PatToken, Slot, TemplateRule,
    DEFAULT_RULES,
};
