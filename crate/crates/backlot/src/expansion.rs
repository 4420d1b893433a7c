//! Stage 2: each subplot becomes a chapter. The prompt carries the nearest n
//! chapters verbatim and everything earlier only as raw subplot text.

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatRequest, Gateway, GenParams, Stage};
use crate::prompts;
use crate::story::{
    chapter_schema, extract_chapter, Chapter, Character, CharacterSet, Outline, PlotLabel,
    Storyline, Subplot,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpansionConfig {
    /// How many immediately preceding chapters ride along in full.
    pub context_chapters: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { context_chapters: 1 }
    }
}

/// One involved character plus whether this subplot is their earliest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvolvedCharacter {
    pub character: Character,
    pub first_appearance: bool,
}

/// What went into one expansion prompt, for the expansion log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub label: String,
    /// Chapters included verbatim, in order.
    pub recent: Vec<String>,
    /// Subplots included only as raw outline text, in order.
    pub raw: Vec<String>,
    pub first_appearances: Vec<String>,
    pub is_last: bool,
}

/// Everything the expand prompt for one subplot is built from.
#[derive(Debug, Clone)]
pub struct ExpansionContext {
    pub current: Subplot,
    pub scene: String,
    pub involved: Vec<InvolvedCharacter>,
    pub recent_chapters: Vec<Chapter>,
    pub earlier_subplots_raw: Vec<String>,
    pub is_last: bool,
    pub window: WindowRecord,
}

/// Assembles the context window for one subplot. Requires every earlier
/// subplot to be expanded already, in outline order.
pub fn build_expansion_context(
    outline: &Outline,
    characters: &CharacterSet,
    chapters_so_far: &[Chapter],
    label: &PlotLabel,
    config: &ExpansionConfig,
) -> Result<ExpansionContext> {
    let position = outline.position(label).ok_or_else(|| Error::UnknownLabel {
        label: label.to_string(),
    })?;
    if chapters_so_far.len() != position {
        return Err(Error::OutOfOrderExpansion {
            label: label.to_string(),
            expected: position,
            found: chapters_so_far.len(),
        });
    }
    let flat: Vec<&Subplot> = outline.subplots().collect();
    for (chapter, subplot) in chapters_so_far.iter().zip(&flat) {
        if chapter.label != subplot.label {
            return Err(Error::OutOfOrderExpansion {
                label: label.to_string(),
                expected: position,
                found: chapters_so_far.len(),
            });
        }
    }
    let current = flat[position].clone();

    let window = position.min(config.context_chapters);
    let recent_chapters: Vec<Chapter> = chapters_so_far[position - window..].to_vec();
    let earlier: &[&Subplot] = &flat[..position - window];
    let earlier_subplots_raw: Vec<String> =
        earlier.iter().map(|s| s.plot_text.clone()).collect();

    let mut involved = Vec::with_capacity(current.involved_characters.len());
    let mut first_appearances = Vec::new();
    for name in &current.involved_characters {
        let character = characters
            .get(name)
            .ok_or_else(|| Error::UnknownCharacterName { name: name.clone() })?
            .clone();
        let seen_before = flat[..position]
            .iter()
            .any(|s| s.involved_characters.iter().any(|n| n == name));
        if !seen_before {
            first_appearances.push(name.clone());
        }
        involved.push(InvolvedCharacter {
            character,
            first_appearance: !seen_before,
        });
    }

    let is_last = position + 1 == outline.subplot_count();
    let record = WindowRecord {
        label: label.to_string(),
        recent: recent_chapters.iter().map(|c| c.label.to_string()).collect(),
        raw: earlier.iter().map(|s| s.label.to_string()).collect(),
        first_appearances,
        is_last,
    };
    Ok(ExpansionContext {
        scene: current.scene.clone(),
        current,
        involved,
        recent_chapters,
        earlier_subplots_raw,
        is_last,
        window: record,
    })
}

/// One line per character: name, optional first-appearance remark, intro.
pub fn involved_block(involved: &[InvolvedCharacter]) -> String {
    involved
        .iter()
        .map(|ic| {
            if ic.first_appearance {
                format!(
                    "{} {}: {}",
                    ic.character.full_name,
                    prompts::FIRST_APPEARANCE_REMARK,
                    ic.character.introduction
                )
            } else {
                format!("{}: {}", ic.character.full_name, ic.character.introduction)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Raw subplot texts first (the far past), then recent chapters in full.
fn previous_contents(ctx: &ExpansionContext) -> String {
    let mut parts: Vec<&str> = ctx.earlier_subplots_raw.iter().map(String::as_str).collect();
    parts.extend(ctx.recent_chapters.iter().map(|c| c.text.as_str()));
    parts.join("\n")
}

/// Drives Stage 2 against the gateway.
pub struct Expander<'g> {
    gateway: &'g Gateway,
    params: GenParams,
    story_id: String,
    max_retries: u32,
    pub config: ExpansionConfig,
}

impl<'g> Expander<'g> {
    pub fn new(
        gateway: &'g Gateway,
        params: GenParams,
        max_retries: u32,
        story_id: impl Into<String>,
        config: ExpansionConfig,
    ) -> Expander<'g> {
        Expander {
            gateway,
            params,
            story_id: story_id.into(),
            max_retries,
            config,
        }
    }

    pub fn expansion_user_prompt(&self, storyline: &Storyline, ctx: &ExpansionContext) -> String {
        prompts::chapter_expansion_user(
            &ctx.current.plot_text,
            &storyline.text,
            &ctx.scene,
            &involved_block(&ctx.involved),
            &previous_contents(ctx),
            ctx.is_last,
        )
    }

    pub fn expand_subplot(&self, storyline: &Storyline, ctx: &ExpansionContext) -> Result<Chapter> {
        let request = ChatRequest::user(
            self.params.clone(),
            prompts::EXPANSION_SYSTEM,
            self.expansion_user_prompt(storyline, ctx),
        );
        let label = ctx.current.label.clone();
        self.gateway.complete_extract(
            &request,
            &chapter_schema(),
            self.max_retries,
            Stage::Expansion,
            &self.story_id,
            move |doc| extract_chapter(doc, label.clone()),
        )
    }

    /// Expands every subplot after the already-done prefix, left to right.
    /// `on_chapter` runs after each new chapter, e.g. to checkpoint it.
    pub fn expand_all(
        &self,
        storyline: &Storyline,
        outline: &Outline,
        characters: &CharacterSet,
        done: Vec<Chapter>,
        mut on_chapter: impl FnMut(&Chapter, &WindowRecord) -> Result<()>,
    ) -> Result<Vec<Chapter>> {
        let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
        if done.len() > labels.len() {
            return Err(Error::OutOfOrderExpansion {
                label: labels
                    .last()
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "none".into()),
                expected: labels.len(),
                found: done.len(),
            });
        }
        let mut chapters = done;
        for label in labels.iter().skip(chapters.len()) {
            let ctx = build_expansion_context(outline, characters, &chapters, label, &self.config)?;
            let chapter = self.expand_subplot(storyline, &ctx)?;
            on_chapter(&chapter, &ctx.window)?;
            chapters.push(chapter);
        }
        Ok(chapters)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;
    use std::time::Duration;

    use super::*;
    use crate::gateway::{
        Backend, FailureLog, FnBackend, MockBackend, RateLimiter, ScriptedBackend,
        VirtualClock,
    };
    use crate::story::{Genre, TopPlot};

    fn cast() -> CharacterSet {
        CharacterSet::new(vec![
            Character::new("Ada Quinn", "A methodical detective.").unwrap(),
            Character::new("Bram Holt", "A nervous archivist.").unwrap(),
            Character::new("Cleo Marsh", "A retired forger.").unwrap(),
        ])
        .unwrap()
    }

    /// Three tops, two subplots each: flat positions 1..=6.
    fn outline() -> Outline {
        let names = ["Ada Quinn", "Bram Holt", "Cleo Marsh"];
        let mut tops = Vec::new();
        for t in 1..=3usize {
            let mut subs = Vec::new();
            for (i, letter) in ['a', 'b'].iter().enumerate() {
                // Ada enters at 1a, Bram at 1b, Cleo at 2b.
                let involved: Vec<String> = match (t, *letter) {
                    (1, 'a') => vec![names[0].into()],
                    (1, 'b') => vec![names[0].into(), names[1].into()],
                    (2, 'b') => vec![names[2].into()],
                    _ => vec![names[(t + i) % 2].into()],
                };
                subs.push(
                    Subplot::new(
                        PlotLabel::sub(t, *letter).unwrap(),
                        format!("Beat {t}{letter} moves the case along."),
                        format!("location {t}{letter}"),
                        involved,
                    )
                    .unwrap(),
                );
            }
            tops.push(
                TopPlot::new(
                    PlotLabel::top(t).unwrap(),
                    format!("Act {t} of the investigation."),
                    "",
                    vec![names[0].into()],
                    subs,
                )
                .unwrap(),
            );
        }
        Outline::new(tops).unwrap()
    }

    fn storyline() -> Storyline {
        Storyline::new(Genre::Crime, "A detective unwinds a decades-old forgery ring.").unwrap()
    }

    fn chapters_upto(outline: &Outline, count: usize) -> Vec<Chapter> {
        outline
            .subplots()
            .take(count)
            .map(|s| Chapter::new(s.label.clone(), format!("Chapter for {}.", s.label)).unwrap())
            .collect()
    }

    fn gateway(backend: Arc<dyn Backend>) -> Gateway {
        let clock = Arc::new(VirtualClock::new());
        Gateway::new(
            backend,
            RateLimiter::new(10_000, Duration::from_secs(60), clock),
            Arc::new(FailureLog::default()),
        )
    }

    fn params() -> GenParams {
        GenParams::new("test-model", 1.0, 0.999).unwrap()
    }

    #[test]
    fn window_arithmetic_holds_for_every_position_and_width() {
        let outline = outline();
        let cast = cast();
        let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
        for n in 0..=2usize {
            let config = ExpansionConfig { context_chapters: n };
            for (pos, label) in labels.iter().enumerate() {
                let k = pos + 1;
                let prior = chapters_upto(&outline, pos);
                let ctx =
                    build_expansion_context(&outline, &cast, &prior, label, &config).unwrap();
                let expect_recent = n.min(k - 1);
                assert_eq!(ctx.recent_chapters.len(), expect_recent, "k={k} n={n}");
                assert_eq!(
                    ctx.earlier_subplots_raw.len(),
                    k - 1 - expect_recent,
                    "k={k} n={n}"
                );
                // Recent chapters are the ones immediately before, in order.
                let got: Vec<String> =
                    ctx.recent_chapters.iter().map(|c| c.label.to_string()).collect();
                let want: Vec<String> = labels[pos - expect_recent..pos]
                    .iter()
                    .map(|l| l.to_string())
                    .collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn first_subplot_has_empty_context() {
        let outline = outline();
        let ctx = build_expansion_context(
            &outline,
            &cast(),
            &[],
            &PlotLabel::sub(1, 'a').unwrap(),
            &ExpansionConfig::default(),
        )
        .unwrap();
        assert!(ctx.recent_chapters.is_empty());
        assert!(ctx.earlier_subplots_raw.is_empty());
        assert!(!ctx.is_last);
    }

    #[test]
    fn last_subplot_prompt_carries_the_ending_sentence() {
        let outline = outline();
        let last = PlotLabel::sub(3, 'b').unwrap();
        let ctx = build_expansion_context(
            &outline,
            &cast(),
            &chapters_upto(&outline, 5),
            &last,
            &ExpansionConfig::default(),
        )
        .unwrap();
        assert!(ctx.is_last);
        let gw = gateway(Arc::new(MockBackend::new(1)));
        let expander = Expander::new(&gw, params(), 2, "s1", ExpansionConfig::default());
        let prompt = expander.expansion_user_prompt(&storyline(), &ctx);
        assert!(prompt.contains(prompts::LAST_PLOT_SENTENCE));

        let first_ctx = build_expansion_context(
            &outline,
            &cast(),
            &[],
            &PlotLabel::sub(1, 'a').unwrap(),
            &ExpansionConfig::default(),
        )
        .unwrap();
        let prompt = expander.expansion_user_prompt(&storyline(), &first_ctx);
        assert!(!prompt.contains(prompts::LAST_PLOT_SENTENCE));
    }

    #[test]
    fn first_appearance_is_flagged_exactly_once_at_the_earliest_subplot() {
        let outline = outline();
        let cast = cast();
        let config = ExpansionConfig::default();
        let mut flagged: Vec<(String, String)> = Vec::new();
        let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
        for (pos, label) in labels.iter().enumerate() {
            let prior = chapters_upto(&outline, pos);
            let ctx = build_expansion_context(&outline, &cast, &prior, label, &config).unwrap();
            for ic in &ctx.involved {
                if ic.first_appearance {
                    flagged.push((ic.character.full_name.clone(), label.to_string()));
                }
            }
        }
        let mut names: Vec<&str> = flagged.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), flagged.len(), "someone flagged twice: {flagged:?}");
        assert!(flagged.contains(&("Ada Quinn".into(), "plot_1a".into())));
        assert!(flagged.contains(&("Bram Holt".into(), "plot_1b".into())));
        assert!(flagged.contains(&("Cleo Marsh".into(), "plot_2b".into())));
    }

    #[test]
    fn prompt_marks_only_first_appearing_characters() {
        let outline = outline();
        let ctx = build_expansion_context(
            &outline,
            &cast(),
            &chapters_upto(&outline, 1),
            &PlotLabel::sub(1, 'b').unwrap(),
            &ExpansionConfig::default(),
        )
        .unwrap();
        let block = involved_block(&ctx.involved);
        let ada = block.lines().find(|l| l.starts_with("Ada Quinn")).unwrap();
        let bram = block.lines().find(|l| l.starts_with("Bram Holt")).unwrap();
        assert!(!ada.contains(prompts::FIRST_APPEARANCE_REMARK));
        assert!(bram.contains(prompts::FIRST_APPEARANCE_REMARK));
        assert!(bram.starts_with(&format!(
            "Bram Holt {}: A nervous archivist.",
            prompts::FIRST_APPEARANCE_REMARK
        )));
    }

    #[test]
    fn unknown_and_out_of_order_labels_are_rejected() {
        let outline = outline();
        let cast = cast();
        let config = ExpansionConfig::default();
        let missing = PlotLabel::sub(9, 'a').unwrap();
        let err =
            build_expansion_context(&outline, &cast, &[], &missing, &config).unwrap_err();
        assert_eq!(err.kind(), "UnknownLabel");

        let third = PlotLabel::sub(2, 'a').unwrap();
        let err = build_expansion_context(&outline, &cast, &[], &third, &config).unwrap_err();
        assert_eq!(err.kind(), "OutOfOrderExpansion");

        // A prefix of the right length but wrong labels is also rejected.
        let mut wrong = chapters_upto(&outline, 2);
        wrong.swap(0, 1);
        let err = build_expansion_context(&outline, &cast, &wrong, &third, &config).unwrap_err();
        assert_eq!(err.kind(), "OutOfOrderExpansion");
    }

    #[test]
    fn scripted_chapter_reply_becomes_a_chapter() {
        let outline = outline();
        let gw = gateway(Arc::new(ScriptedBackend::always(
            "<chapter>\nThe case breaks open at dawn.\n</chapter>",
        )));
        let expander = Expander::new(&gw, params(), 2, "s1", ExpansionConfig::default());
        let ctx = build_expansion_context(
            &outline,
            &cast(),
            &[],
            &PlotLabel::sub(1, 'a').unwrap(),
            &ExpansionConfig::default(),
        )
        .unwrap();
        let chapter = expander.expand_subplot(&storyline(), &ctx).unwrap();
        assert_eq!(chapter.label.to_string(), "plot_1a");
        assert_eq!(chapter.text, "The case breaks open at dawn.");
    }

    #[test]
    fn expand_all_walks_the_outline_in_order() {
        let outline = outline();
        let gw = gateway(Arc::new(MockBackend::new(9)));
        let expander = Expander::new(&gw, params(), 2, "s1", ExpansionConfig::default());
        let mut seen = Vec::new();
        let chapters = expander
            .expand_all(&storyline(), &outline, &cast(), Vec::new(), |c, w| {
                seen.push((c.label.to_string(), w.clone()));
                Ok(())
            })
            .unwrap();
        let labels: Vec<String> = chapters.iter().map(|c| c.label.to_string()).collect();
        assert_eq!(
            labels,
            ["plot_1a", "plot_1b", "plot_2a", "plot_2b", "plot_3a", "plot_3b"]
        );
        assert!(chapters.iter().all(|c| !c.text.trim().is_empty()));
        assert_eq!(seen.len(), 6);
        // Window log for position 3 (n=1): chapter 2 verbatim, subplot 1 raw.
        let (_, third) = &seen[2];
        assert_eq!(third.recent, ["plot_1b"]);
        assert_eq!(third.raw, ["plot_1a"]);
    }

    #[test]
    fn expand_all_resumes_after_a_done_prefix() {
        let outline = outline();
        let done = chapters_upto(&outline, 4);
        let mock = MockBackend::new(9);
        let backend = Arc::new(FnBackend::new(move |_, req| mock.complete(req)));
        let counting = backend.clone();
        let gw = gateway(backend);
        let expander = Expander::new(&gw, params(), 2, "s1", ExpansionConfig::default());
        let chapters = expander
            .expand_all(&storyline(), &outline, &cast(), done.clone(), |_, _| Ok(()))
            .unwrap();
        assert_eq!(chapters.len(), 6);
        assert_eq!(chapters[..4], done[..]);
        assert_eq!(counting.calls(), 2, "only the two missing chapters are generated");
    }

    #[test]
    fn zero_window_sends_everything_raw() {
        let outline = outline();
        let config = ExpansionConfig { context_chapters: 0 };
        let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
        for (pos, label) in labels.iter().enumerate() {
            let ctx = build_expansion_context(
                &outline,
                &cast(),
                &chapters_upto(&outline, pos),
                label,
                &config,
            )
            .unwrap();
            assert!(ctx.recent_chapters.is_empty());
            assert_eq!(ctx.earlier_subplots_raw.len(), pos);
        }
    }

    #[test]
    fn previous_contents_orders_raw_before_recent() {
        let outline = outline();
        let ctx = build_expansion_context(
            &outline,
            &cast(),
            &chapters_upto(&outline, 3),
            &PlotLabel::sub(2, 'b').unwrap(),
            &ExpansionConfig::default(),
        )
        .unwrap();
        let text = previous_contents(&ctx);
        let raw_pos = text.find("Beat 1a").unwrap();
        let recent_pos = text.find("Chapter for plot_2a").unwrap();
        assert!(raw_pos < recent_pos);
        assert!(!text.contains("Chapter for plot_1a"), "windowed-out chapter leaked");
    }

    #[test]
    fn involved_characters_must_exist_in_the_cast() {
        let outline = outline();
        let small = CharacterSet::new(vec![
            Character::new("Ada Quinn", "A methodical detective.").unwrap(),
            Character::new("Bram Holt", "A nervous archivist.").unwrap(),
            Character::new("Someone Else", "Unrelated.").unwrap(),
        ])
        .unwrap();
        let err = build_expansion_context(
            &outline,
            &small,
            &chapters_upto(&outline, 3),
            &PlotLabel::sub(2, 'b').unwrap(),
            &ExpansionConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.kind(), "UnknownCharacterName");
    }
}
