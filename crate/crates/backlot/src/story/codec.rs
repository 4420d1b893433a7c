//! Conversions between domain artifacts, tag documents, and screenplay text.

use log::warn;

use crate::error::Error;
use crate::story::tags::{Arity, NamePattern, TagDocument, TagNode, TagRule, TagSchema};
use crate::story::types::{
    Advice, Chapter, Character, CharacterSet, DetailedPerformance, DraftEvent, Episode, Outline,
    PlotLabel, SceneHeading, ScriptDraft, Screenplay, Subplot, TopPlot,
};
use crate::Result;

// ---------------------------------------------------------------------------
// Schemas

pub fn advice_schema() -> TagSchema {
    TagSchema {
        name: "advice",
        roots: vec![TagRule::leaf(NamePattern::Literal("advice"), Arity::One)],
    }
}

pub fn characters_schema() -> TagSchema {
    TagSchema {
        name: "characters",
        roots: vec![TagRule::parent(
            NamePattern::Literal("characters"),
            Arity::One,
            vec![TagRule::parent(
                NamePattern::IndexedPrefix("character_"),
                Arity::AtLeastOne,
                vec![
                    TagRule::leaf(NamePattern::Literal("full_name"), Arity::One),
                    TagRule::leaf(NamePattern::Literal("character_introduction"), Arity::One),
                ],
            )],
        )],
    }
}

pub fn outline_schema() -> TagSchema {
    TagSchema {
        name: "outline",
        roots: vec![TagRule::parent(
            NamePattern::Literal("outline"),
            Arity::One,
            vec![TagRule::leaf(NamePattern::PlotTag, Arity::AtLeastOne)],
        )],
    }
}

pub fn chapter_schema() -> TagSchema {
    TagSchema {
        name: "chapter",
        roots: vec![TagRule::leaf(NamePattern::Literal("chapter"), Arity::One)],
    }
}

pub fn script_draft_schema() -> TagSchema {
    TagSchema {
        name: "script_draft",
        roots: vec![TagRule::parent(
            NamePattern::Literal("script_draft"),
            Arity::One,
            vec![
                // Optional here so a missing heading surfaces as the more
                // specific MissingSceneHeading during extraction.
                TagRule::leaf(NamePattern::Literal("scene_heading"), Arity::Optional),
                TagRule::parent(
                    NamePattern::Literal("character_performance"),
                    Arity::AtLeastOne,
                    vec![
                        TagRule::leaf(NamePattern::Literal("character"), Arity::One),
                        TagRule::leaf(NamePattern::Literal("performance"), Arity::One),
                    ],
                ),
            ],
        )],
    }
}

fn performance_fields() -> Vec<TagRule> {
    vec![
        TagRule::leaf(NamePattern::Literal("character"), Arity::One),
        TagRule::leaf(NamePattern::Literal("action"), Arity::One),
        TagRule::leaf(NamePattern::Literal("parenthetical"), Arity::One),
        TagRule::leaf(NamePattern::Literal("dialogue"), Arity::One),
    ]
}

pub fn detailed_performance_schema() -> TagSchema {
    TagSchema {
        name: "detailed_performance",
        roots: vec![TagRule::parent(
            NamePattern::Literal("detailed_performance"),
            Arity::One,
            performance_fields(),
        )],
    }
}

pub fn episode_schema() -> TagSchema {
    TagSchema {
        name: "episode",
        roots: vec![TagRule::parent(
            NamePattern::Literal("episode"),
            Arity::One,
            vec![
                TagRule::leaf(NamePattern::Literal("scene_heading"), Arity::Optional),
                TagRule::parent(
                    NamePattern::Literal("detailed_performance"),
                    Arity::AtLeastOne,
                    performance_fields(),
                ),
            ],
        )],
    }
}

pub fn verdict_schema() -> TagSchema {
    TagSchema {
        name: "verdict",
        roots: vec![
            TagRule::leaf(NamePattern::Literal("explanation"), Arity::One),
            TagRule::leaf(NamePattern::Literal("verdict"), Arity::One),
        ],
    }
}

pub fn storyline_schema() -> TagSchema {
    TagSchema {
        name: "storyline",
        roots: vec![TagRule::leaf(NamePattern::Literal("storyline"), Arity::One)],
    }
}

// ---------------------------------------------------------------------------
// Characters

/// Characters in document order, validated as a cast.
pub fn extract_characters(doc: &TagDocument) -> Result<CharacterSet> {
    let root = doc.root("characters").ok_or(Error::MissingTag {
        name: "characters".into(),
        offset: 0,
    })?;
    let mut characters = Vec::new();
    for node in &root.children {
        characters.push(Character::new(
            node.child_text("full_name"),
            node.child_text("character_introduction"),
        )?);
    }
    CharacterSet::new(characters)
}

pub fn characters_to_tags(cast: &CharacterSet) -> TagDocument {
    let children = cast
        .characters()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            TagNode::parent(
                format!("character_{}", i + 1),
                vec![
                    TagNode::leaf("full_name", c.full_name.clone()),
                    TagNode::leaf("character_introduction", c.introduction.clone()),
                ],
            )
        })
        .collect();
    TagDocument::new(vec![TagNode::parent("characters", children)])
}

// ---------------------------------------------------------------------------
// Outline

/// How to treat outline character names that are not in the cast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameMode {
    /// Unknown names are an error (default).
    Strict,
    /// Unknown names are kept verbatim with a warning.
    Lenient,
}

/// Split a plot body into prose, scene, and cast. The split uses the LAST
/// "Scene:" and LAST "Characters:" markers so earlier mentions inside the
/// prose survive. Missing markers parse as empty scene / empty cast.
fn split_plot_body(body: &str) -> (String, String, Vec<String>) {
    let (before_chars, names_part) = match body.rfind("Characters:") {
        Some(i) => (&body[..i], &body[i + "Characters:".len()..]),
        None => (body, ""),
    };
    let (plot_text, scene_part) = match before_chars.rfind("Scene:") {
        Some(i) => (
            &before_chars[..i],
            &before_chars[i + "Scene:".len()..],
        ),
        None => (before_chars, ""),
    };
    let involved = names_part
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    (
        plot_text.trim().to_string(),
        scene_part.trim().to_string(),
        involved,
    )
}

/// Inverse of `split_plot_body` for canonical rendering.
fn plot_body_string(plot_text: &str, scene: &str, involved: &[String]) -> String {
    let scene_part = if scene.is_empty() {
        String::new()
    } else {
        format!(" {scene}.")
    };
    let names_part = if involved.is_empty() {
        String::new()
    } else {
        format!(" {}", involved.join(", "))
    };
    let markers = format!("Scene:{scene_part} Characters:{names_part}");
    if plot_text.is_empty() {
        markers
    } else {
        format!("{plot_text}\n{markers}")
    }
}

fn check_names(involved: &mut [String], cast: &CharacterSet, mode: NameMode) -> Result<()> {
    for name in involved.iter() {
        if cast.get(name).is_none() {
            match mode {
                NameMode::Strict => {
                    return Err(Error::UnknownCharacterName { name: name.clone() })
                }
                NameMode::Lenient => {
                    warn!("outline names unknown character {name:?}; keeping verbatim")
                }
            }
        }
    }
    Ok(())
}

/// Group the flat sibling plot tags into a validated two-level outline.
pub fn extract_outline(doc: &TagDocument, cast: &CharacterSet, mode: NameMode) -> Result<Outline> {
    let root = doc.root("outline").ok_or(Error::MissingTag {
        name: "outline".into(),
        offset: 0,
    })?;
    struct PendingTop {
        label: PlotLabel,
        plot_text: String,
        scene: String,
        involved: Vec<String>,
        subplots: Vec<Subplot>,
    }
    let mut tops: Vec<PendingTop> = Vec::new();
    for node in &root.children {
        let label = PlotLabel::parse(&node.name)?;
        let (plot_text, scene, mut involved) = split_plot_body(&node.text);
        check_names(&mut involved, cast, mode)?;
        if label.is_top() {
            if label.top_index != tops.len() + 1 {
                return Err(Error::LabelGap {
                    label: label.tag_name(),
                });
            }
            tops.push(PendingTop {
                label,
                plot_text,
                scene,
                involved,
                subplots: Vec::new(),
            });
        } else {
            let Some(top) = tops.iter_mut().find(|t| t.label.top_index == label.top_index)
            else {
                return Err(Error::OrphanSubplot {
                    label: label.tag_name(),
                });
            };
            let expected = PlotLabel::letter_for(label.top_index, top.subplots.len())?;
            if label.sub_letter != Some(expected) {
                return Err(Error::LabelGap {
                    label: label.tag_name(),
                });
            }
            top.subplots.push(Subplot::new(label, plot_text, scene, involved)?);
        }
    }
    let tops = tops
        .into_iter()
        .map(|t| TopPlot::new(t.label, t.plot_text, t.scene, t.involved, t.subplots))
        .collect::<Result<Vec<_>>>()?;
    Outline::new(tops)
}

pub fn outline_to_tags(outline: &Outline) -> TagDocument {
    let mut children = Vec::new();
    for top in outline.top_plots() {
        children.push(TagNode::leaf(
            top.label.tag_name(),
            plot_body_string(&top.plot_text, &top.scene, &top.involved_characters),
        ));
        for sub in &top.subplots {
            children.push(TagNode::leaf(
                sub.label.tag_name(),
                plot_body_string(&sub.plot_text, &sub.scene, &sub.involved_characters),
            ));
        }
    }
    TagDocument::new(vec![TagNode::parent("outline", children)])
}

// ---------------------------------------------------------------------------
// Advice, chapter, storyline

pub fn extract_advice(doc: &TagDocument) -> Advice {
    let body = doc.root("advice").map(|n| n.text.as_str()).unwrap_or("");
    Advice::from_body(body)
}

pub fn advice_to_tags(advice: &Advice) -> TagDocument {
    let body = match advice {
        Advice::None => "None",
        Advice::Prose(p) => p.as_str(),
    };
    TagDocument::new(vec![TagNode::leaf("advice", body)])
}

pub fn extract_chapter(doc: &TagDocument, label: PlotLabel) -> Result<Chapter> {
    let body = doc.root("chapter").map(|n| n.text.as_str()).unwrap_or("");
    Chapter::new(label, body)
}

pub fn chapter_to_tags(chapter: &Chapter) -> TagDocument {
    TagDocument::new(vec![TagNode::leaf("chapter", chapter.text.clone())])
}

/// Body of a synthesized `<storyline>` reply.
pub fn extract_storyline_text(doc: &TagDocument) -> String {
    doc.root("storyline")
        .map(|n| n.text.clone())
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Script draft

/// Extract a draft and validate that every event's character is involved in
/// the subplot.
pub fn extract_script_draft(
    doc: &TagDocument,
    label: PlotLabel,
    involved: &[String],
) -> Result<ScriptDraft> {
    let root = doc.root("script_draft").ok_or(Error::MissingTag {
        name: "script_draft".into(),
        offset: 0,
    })?;
    let heading_node = root.child("scene_heading").ok_or(Error::MissingSceneHeading)?;
    if root.children.first().map(|c| c.name.as_str()) != Some("scene_heading") {
        return Err(Error::ConstraintViolation {
            detail: "scene heading must precede all events".into(),
        });
    }
    let heading = SceneHeading::parse(&heading_node.text)?;
    let mut events = Vec::new();
    for node in root.children.iter().filter(|c| c.name == "character_performance") {
        let character = node.child_text("character").to_string();
        if !involved.iter().any(|n| n == &character) {
            return Err(Error::ForeignCharacter { name: character });
        }
        events.push(DraftEvent {
            character,
            performance_guide: node.child_text("performance").to_string(),
        });
    }
    ScriptDraft::new(label, heading, events)
}

pub fn script_draft_to_tags(draft: &ScriptDraft) -> TagDocument {
    let mut children = vec![TagNode::leaf("scene_heading", draft.heading.render_line())];
    for event in &draft.events {
        children.push(TagNode::parent(
            "character_performance",
            vec![
                TagNode::leaf("character", event.character.clone()),
                TagNode::leaf("performance", event.performance_guide.clone()),
            ],
        ));
    }
    TagDocument::new(vec![TagNode::parent("script_draft", children)])
}

// ---------------------------------------------------------------------------
// Performances and episodes

fn strip_enclosing_parens(s: &str) -> &str {
    s.strip_prefix('(')
        .and_then(|rest| rest.strip_suffix(')'))
        .unwrap_or(s)
}

fn performance_from_node(node: &TagNode) -> Result<DetailedPerformance> {
    DetailedPerformance::new(
        node.child_text("character"),
        node.child_text("action"),
        strip_enclosing_parens(node.child_text("parenthetical")),
        node.child_text("dialogue"),
    )
}

/// Extract a single `<detailed_performance>` reply.
pub fn extract_performance(doc: &TagDocument) -> Result<DetailedPerformance> {
    let root = doc.root("detailed_performance").ok_or(Error::MissingTag {
        name: "detailed_performance".into(),
        offset: 0,
    })?;
    performance_from_node(root)
}

/// Tag form of one performance. Model output carries the parenthetical with
/// enclosing parens, so rendering re-adds them.
pub fn performance_node(p: &DetailedPerformance) -> TagNode {
    let parenthetical = if p.parenthetical.is_empty() {
        String::new()
    } else {
        format!("({})", p.parenthetical)
    };
    TagNode::parent(
        "detailed_performance",
        vec![
            TagNode::leaf("character", p.character.clone()),
            TagNode::leaf("action", p.action.clone()),
            TagNode::leaf("parenthetical", parenthetical),
            TagNode::leaf("dialogue", p.dialogue.clone()),
        ],
    )
}

pub fn performance_to_tags(p: &DetailedPerformance) -> TagDocument {
    TagDocument::new(vec![performance_node(p)])
}

/// Performances of an `<episode>` reply, ignoring any echoed heading.
pub fn extract_episode_performances(doc: &TagDocument) -> Result<Vec<DetailedPerformance>> {
    let root = doc.root("episode").ok_or(Error::MissingTag {
        name: "episode".into(),
        offset: 0,
    })?;
    root.children
        .iter()
        .filter(|c| c.name == "detailed_performance")
        .map(performance_from_node)
        .collect()
}

pub fn extract_episode(doc: &TagDocument, label: PlotLabel) -> Result<Episode> {
    let root = doc.root("episode").ok_or(Error::MissingTag {
        name: "episode".into(),
        offset: 0,
    })?;
    let heading_node = root.child("scene_heading").ok_or(Error::MissingSceneHeading)?;
    let heading = SceneHeading::parse(&heading_node.text)?;
    Episode::new(label, heading, extract_episode_performances(doc)?)
}

pub fn episode_to_tags(episode: &Episode) -> TagDocument {
    let mut children = vec![TagNode::leaf("scene_heading", episode.heading.render_line())];
    children.extend(episode.performances.iter().map(performance_node));
    TagDocument::new(vec![TagNode::parent("episode", children)])
}

// ---------------------------------------------------------------------------
// Screenplay text

/// Number of maximal non-whitespace runs.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Render one episode in screenplay form: heading line, then per performance
/// the character name line, `[action]`, `(parenthetical)`, and dialogue, each
/// only when non-empty.
pub fn render_episode_text(episode: &Episode) -> String {
    let mut out = String::new();
    out.push_str(&episode.heading.render_line());
    out.push('\n');
    for p in &episode.performances {
        out.push_str(&p.character);
        out.push_str(":\n");
        if !p.action.is_empty() {
            out.push_str(&format!("[{}]\n", p.action));
        }
        if !p.parenthetical.is_empty() {
            out.push_str(&format!("({})\n", p.parenthetical));
        }
        if !p.dialogue.is_empty() {
            out.push_str(&p.dialogue);
            out.push('\n');
        }
    }
    out
}

/// Byte-deterministic rendering of the whole screenplay; episodes are
/// separated by one blank line.
pub fn render_screenplay(screenplay: &Screenplay) -> String {
    screenplay
        .episodes
        .iter()
        .map(render_episode_text)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parse canonical screenplay text back into episodes. The text form omits
/// subplot labels, so the caller supplies them in story order. Headings are
/// recognized only at block starts; dialogue lines therefore must not begin
/// a block with two semicolons (canonical output never does).
pub fn parse_screenplay(text: &str, labels: &[PlotLabel]) -> Result<Screenplay> {
    struct EpisodeDraft {
        heading: SceneHeading,
        performances: Vec<DetailedPerformance>,
    }
    struct PerformanceDraft {
        character: String,
        action: String,
        parenthetical: String,
        dialogue: String,
    }

    fn flush_performance(
        ep: &mut EpisodeDraft,
        p: Option<PerformanceDraft>,
    ) -> crate::Result<()> {
        if let Some(p) = p {
            ep.performances
                .push(DetailedPerformance::new(p.character, p.action, p.parenthetical, p.dialogue)?);
        }
        Ok(())
    }

    let mut episodes: Vec<EpisodeDraft> = Vec::new();
    let mut current: Option<EpisodeDraft> = None;
    let mut perf: Option<PerformanceDraft> = None;
    let mut at_block_start = true;
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        if line.trim().is_empty() {
            at_block_start = true;
            continue;
        }
        if at_block_start && line.matches(';').count() == 2 {
            if let Ok(heading) = SceneHeading::parse(line) {
                if let Some(mut ep) = current.take() {
                    flush_performance(&mut ep, perf.take())?;
                    episodes.push(ep);
                }
                current = Some(EpisodeDraft {
                    heading,
                    performances: Vec::new(),
                });
                at_block_start = false;
                continue;
            }
        }
        at_block_start = false;
        let Some(ep) = current.as_mut() else {
            return Err(Error::ConstraintViolation {
                detail: format!("screenplay text before any scene heading: {line:?}"),
            });
        };
        if let Some(name) = line.strip_suffix(':') {
            if !name.trim().is_empty() {
                flush_performance(ep, perf.take())?;
                perf = Some(PerformanceDraft {
                    character: name.to_string(),
                    action: String::new(),
                    parenthetical: String::new(),
                    dialogue: String::new(),
                });
                continue;
            }
        }
        let Some(p) = perf.as_mut() else {
            return Err(Error::ConstraintViolation {
                detail: format!("screenplay line outside a performance: {line:?}"),
            });
        };
        if line.starts_with('[') {
            let mut body = line.to_string();
            while !body.ends_with(']') {
                let Some(next) = lines.next() else { break };
                body.push('\n');
                body.push_str(next);
            }
            p.action = body
                .strip_prefix('[')
                .and_then(|b| b.strip_suffix(']'))
                .unwrap_or(&body)
                .to_string();
        } else if line.starts_with('(') && p.dialogue.is_empty() {
            let mut body = line.to_string();
            while !body.ends_with(')') {
                let Some(next) = lines.next() else { break };
                body.push('\n');
                body.push_str(next);
            }
            p.parenthetical = strip_enclosing_parens(&body).to_string();
        } else {
            if !p.dialogue.is_empty() {
                p.dialogue.push('\n');
            }
            p.dialogue.push_str(line);
        }
    }
    if let Some(mut ep) = current.take() {
        flush_performance(&mut ep, perf.take())?;
        episodes.push(ep);
    }
    if episodes.len() != labels.len() {
        return Err(Error::ConstraintViolation {
            detail: format!(
                "screenplay has {} episodes but {} labels were supplied",
                episodes.len(),
                labels.len()
            ),
        });
    }
    let episodes = episodes
        .into_iter()
        .zip(labels.iter())
        .map(|(ep, label)| Episode::new(*label, ep.heading, ep.performances))
        .collect::<Result<Vec<_>>>()?;
    Ok(Screenplay { episodes })
}
