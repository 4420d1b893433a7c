//! Story artifacts: domain types, the tag codec, and screenplay text.

pub mod codec;
pub mod tags;
pub mod types;

pub use codec::{
    advice_schema, advice_to_tags, chapter_schema, chapter_to_tags, characters_schema,
    characters_to_tags, detailed_performance_schema, episode_schema, episode_to_tags,
    extract_advice, extract_chapter, extract_characters, extract_episode,
    extract_episode_performances, extract_outline, extract_performance, extract_script_draft,
    extract_storyline_text, outline_schema, outline_to_tags, parse_screenplay, performance_node,
    performance_to_tags, render_episode_text, render_screenplay, script_draft_schema,
    script_draft_to_tags, storyline_schema, verdict_schema, word_count, NameMode,
};
pub use tags::{parse_tag_document, render, Arity, NamePattern, TagDocument, TagNode, TagRule, TagSchema};
pub use types::{
    Advice, Chapter, Character, CharacterSet, DetailedPerformance, DraftEvent, Episode, Genre,
    Outline, Placement, PlotLabel, SceneHeading, Screenplay, ScriptDraft, Storyline, Subplot,
    TopPlot, MAX_CHARACTERS, MIN_CHARACTERS,
};
