//! Offline backends: scripted reply queues, closure fakes, and a synthetic
//! author that answers any pipeline request deterministically.

use std::collections::VecDeque;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::gateway::{Backend, ChatRequest, Role};
use crate::prompts::markers;
use crate::story::{
    characters_schema, characters_to_tags, extract_characters, extract_outline, outline_to_tags,
    render, NameMode,
};
use crate::Result;

/// Replays a fixed sequence of replies and records every request it saw.
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<String>>,
    repeat: Option<String>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new<S: Into<String>>(replies: Vec<S>) -> ScriptedBackend {
        ScriptedBackend {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            repeat: None,
            seen: Mutex::new(Vec::new()),
        }
    }

    /// Answers every request with the same reply, forever.
    pub fn always(reply: impl Into<String>) -> ScriptedBackend {
        ScriptedBackend {
            replies: Mutex::new(VecDeque::new()),
            repeat: Some(reply.into()),
            seen: Mutex::new(Vec::new()),
        }
    }

    /// After the queue drains, keep answering with `reply`.
    pub fn then_always(replies: Vec<String>, reply: impl Into<String>) -> ScriptedBackend {
        ScriptedBackend {
            replies: Mutex::new(replies.into()),
            repeat: Some(reply.into()),
            seen: Mutex::new(Vec::new()),
        }
    }

    /// Every request seen so far, in order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String> {
        self.seen.lock().unwrap().push(req.clone());
        if let Some(reply) = self.replies.lock().unwrap().pop_front() {
            return Ok(reply);
        }
        match &self.repeat {
            Some(reply) => Ok(reply.clone()),
            None => Err(Error::Transport("scripted backend exhausted".into())),
        }
    }
}

/// Backend driven by a closure of (0-based call index, request).
pub struct FnBackend<F> {
    f: F,
    calls: Mutex<usize>,
}

impl<F> FnBackend<F>
where
    F: Fn(usize, &ChatRequest) -> Result<String> + Send + Sync,
{
    pub fn new(f: F) -> FnBackend<F> {
        FnBackend {
            f,
            calls: Mutex::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(usize, &ChatRequest) -> Result<String> + Send + Sync,
{
    fn name(&self) -> &'static str {
        "fn"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String> {
        let mut calls = self.calls.lock().unwrap();
        let index = *calls;
        *calls += 1;
        drop(calls);
        (self.f)(index, req)
    }
}

/// Deterministic synthetic author. Classifies each request by the template
/// marker in its latest user turn and fabricates a well-formed reply; the
/// reply is a pure function of (request text, seed).
pub struct MockBackend {
    seed: u64,
}

const NAME_POOL: [&str; 12] = [
    "Iris Calloway",
    "Marcus Hale",
    "Elena Vasquez",
    "Theo Brandt",
    "Nadia Osei",
    "Victor Lang",
    "June Park",
    "Omar Reyes",
    "Clara Whitfield",
    "Desmond Cole",
    "Priya Anand",
    "Felix Moreau",
];

const OCCUPATIONS: [&str; 8] = [
    "harbor pilot",
    "archivist",
    "field surgeon",
    "radio operator",
    "structural engineer",
    "court stenographer",
    "salvage diver",
    "telescope technician",
];

const DRIVES: [&str; 6] = [
    "wants to undo one old mistake before anyone learns of it",
    "keeps a promise made to someone who is gone",
    "is owed a debt the town pretends to forget",
    "believes the official account and slowly stops believing it",
    "protects a sibling who no longer wants protecting",
    "measures everything twice and still misses what matters",
];

const LOCATIONS: [&str; 8] = [
    "the harbor at low tide",
    "a cramped records annex",
    "the night market",
    "an unfinished overpass",
    "the lighthouse stairwell",
    "a rented room above the bakery",
    "the impound yard",
    "a commuter ferry cabin",
];

const COMPLICATIONS: [&str; 6] = [
    "a ledger surfaces with one page torn out",
    "an ally recants in front of witnesses",
    "the only route in is watched from both ends",
    "a favor is called in at the worst hour",
    "the tide schedule contradicts the alibi",
    "a stranger knows a name nobody should know",
];

const GUIDE_CLAUSES: [&str; 6] = [
    "studies the room before speaking",
    "lays the evidence on the table piece by piece",
    "blocks the doorway and waits",
    "reads the note aloud, slowly",
    "refuses to sit down",
    "pockets the key while nobody watches",
];

const DIALOGUE_POOL: [&str; 6] = [
    "Say that again, slower.",
    "We both know that page existed.",
    "Not here. Not with them listening.",
    "You counted wrong.",
    "I kept my half of it.",
    "Then we do this the long way.",
];

const PARENTHETICAL_POOL: [&str; 4] = ["(evenly)", "(half to herself)", "(without looking up)", "(quietly)"];

const STORY_SENTENCES: [&str; 14] = [
    "The first warning arrives as a clerical error nobody bothers to correct.",
    "What begins as routine work turns into a private investigation with public costs.",
    "Old loyalties resurface exactly when they are least affordable.",
    "Each small concession makes the next one easier and the way back harder.",
    "A borrowed key opens more than the door it was cut for.",
    "The people who could help have reasons of their own to stay quiet.",
    "An offhand remark in a crowded room proves impossible to take back.",
    "The paper trail ends where the weather-damaged records begin.",
    "Sleep becomes a luxury rationed between shifts and suspicion.",
    "By midsummer the rumors have grown teeth.",
    "A deadline moves up, and with it every carefully laid plan.",
    "Help arrives from the one person with nothing left to lose.",
    "The cost of the truth turns out to be payable only in installments.",
    "What is finally recovered is not what was lost, but it is enough.",
];

impl MockBackend {
    pub fn new(seed: u64) -> MockBackend {
        MockBackend { seed }
    }

    fn digest(&self, key: &str) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(key.as_bytes());
        let out = hasher.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }

    fn pick<'a>(&self, key: &str, pool: &[&'a str]) -> &'a str {
        pool[(self.digest(key) % pool.len() as u64) as usize]
    }

    fn characters_reply(&self, user: &str) -> String {
        let storyline = slot_after(user, "Storyline:\n");
        let h = self.digest(&format!("cast:{storyline}"));
        let count = 3 + (h % 3) as usize;
        let start = (h >> 8) as usize % NAME_POOL.len();
        let mut lines = vec!["<characters>".to_string()];
        for i in 0..count {
            let name = NAME_POOL[(start + i * 2) % NAME_POOL.len()];
            let occupation = self.pick(&format!("occ:{storyline}:{name}"), &OCCUPATIONS);
            let drive = self.pick(&format!("drive:{storyline}:{name}"), &DRIVES);
            let age = 26 + (self.digest(&format!("age:{storyline}:{name}")) % 34);
            lines.push(format!("<character_{}>", i + 1));
            lines.push(format!("<full_name>{name}</full_name>"));
            lines.push(format!(
                "<character_introduction>{name} is a {age}-year-old {occupation} who {drive}.</character_introduction>"
            ));
            lines.push(format!("</character_{}>", i + 1));
        }
        lines.push("</characters>".to_string());
        lines.join("\n")
    }

    fn revised_characters_reply(&self, req: &ChatRequest) -> Result<String> {
        let previous = last_assistant_with(req, "<characters>")
            .ok_or_else(|| Error::Transport("revision request without prior characters".into()))?;
        let block = slice_element(previous, "<characters>", "</characters>")
            .ok_or_else(|| Error::Transport("prior characters block unreadable".into()))?;
        let doc = crate::story::parse_tag_document(block, &characters_schema())?;
        let cast = extract_characters(&doc)?;
        let revised: Vec<crate::story::Character> = cast
            .characters()
            .iter()
            .map(|c| {
                crate::story::Character::new(
                    c.full_name.clone(),
                    format!("{} Under pressure, the want turns specific.", c.introduction),
                )
                .expect("amended introduction stays valid")
            })
            .collect();
        let revised = crate::story::CharacterSet::new(revised)?;
        Ok(render(&characters_to_tags(&revised)).trim_end().to_string())
    }

    fn outline_reply(&self, user: &str) -> Result<String> {
        let cast = cast_from_prompt(user)?;
        let names: Vec<&str> = cast.names().collect();
        let h = self.digest(&format!("outline:{}", names.join("|")));
        let base = (h % names.len() as u64) as usize;
        let name_at = |i: usize| names[(base + i) % names.len()].to_string();
        let mut lines = vec!["<outline>".to_string()];
        for top in 1..=2usize {
            let lead = name_at(top - 1);
            let top_complication =
                self.pick(&format!("top:{top}:{}", names.join("|")), &COMPLICATIONS);
            lines.push(format!("<plot_{top}>"));
            lines.push(format!(
                "{lead} is pulled into the affair when {top_complication}, and the fallout spreads through everyone nearby."
            ));
            lines.push(format!("Scene: Characters: {lead}"));
            lines.push(format!("</plot_{top}>"));
            for (si, letter) in ['a', 'b'].iter().enumerate() {
                let mut involved = vec![name_at(top - 1 + si)];
                if si == 1 {
                    let extra = name_at(top + 1);
                    if !involved.contains(&extra) {
                        involved.push(extra);
                    }
                }
                let scene = self.pick(&format!("scene:{top}{letter}"), &LOCATIONS);
                let complication = self.pick(&format!("beat:{top}{letter}"), &COMPLICATIONS);
                lines.push(format!("<plot_{top}{letter}>"));
                lines.push(format!(
                    "{} presses on even though {complication}.",
                    involved.join(" and ")
                ));
                lines.push(format!("Scene: {scene}. Characters: {}", involved.join(", ")));
                lines.push(format!("</plot_{top}{letter}>"));
            }
        }
        lines.push("</outline>".to_string());
        Ok(lines.join("\n"))
    }

    fn revised_outline_reply(&self, req: &ChatRequest, user: &str) -> Result<String> {
        let previous = last_assistant_with(req, "<outline>")
            .ok_or_else(|| Error::Transport("revision request without prior outline".into()))?;
        let block = slice_element(previous, "<outline>", "</outline>")
            .ok_or_else(|| Error::Transport("prior outline block unreadable".into()))?;
        let cast = cast_from_prompt(user)?;
        let doc = crate::story::parse_tag_document(block, &crate::story::outline_schema())?;
        let mut outline = extract_outline(&doc, &cast, NameMode::Lenient)?;
        let mut tops = outline.top_plots().to_vec();
        for top in &mut tops {
            for sub in &mut top.subplots {
                sub.plot_text.push_str(" The stakes sharpen.");
            }
        }
        outline = crate::story::Outline::new(tops)?;
        Ok(render(&outline_to_tags(&outline)).trim_end().to_string())
    }

    fn chapter_reply(&self, user: &str) -> String {
        let plot = slice_block(user, "<plot_point>\n", "\n</plot_point>").unwrap_or("");
        let h = format!("chapter:{plot}");
        let mut sentences = vec![plot.trim().to_string()];
        for i in 0..3 {
            sentences.push(self.pick(&format!("{h}:{i}"), &STORY_SENTENCES).to_string());
        }
        if user.contains(crate::prompts::LAST_PLOT_SENTENCE) {
            sentences.push(
                "When the accounting is finally done, nothing is owed and nothing is hidden, and the story closes.".to_string(),
            );
        }
        format!("<chapter>\n{}\n</chapter>", sentences.join(" "))
    }

    fn draft_reply(&self, user: &str) -> String {
        let scene = rslice_block(user, "<scene>", "</scene>").unwrap_or("a bare room");
        let location = scene.trim().trim_end_matches('.');
        let involved = rslice_block(user, "<involved_characters>\n", "\n</involved_characters>")
            .map(names_from_intro_lines)
            .unwrap_or_default();
        let involved = if involved.is_empty() {
            vec!["Narrator".to_string()]
        } else {
            involved
        };
        let h = self.digest(&format!("draft:{user}"));
        let count = 3 + (h % 2) as usize;
        let time = if h & 2 == 0 { "DAY" } else { "NIGHT" };
        let mut lines = vec![
            "<script_draft>".to_string(),
            format!("<scene_heading>INT.; {location}; {time}.</scene_heading>"),
        ];
        for i in 0..count {
            let who = &involved[i % involved.len()];
            let clause = self.pick(&format!("guide:{user}:{i}"), &GUIDE_CLAUSES);
            lines.push("<character_performance>".to_string());
            lines.push(format!("<character>{who}</character>"));
            lines.push(format!("<performance>{who} {clause}.</performance>"));
            lines.push("</character_performance>".to_string());
        }
        lines.push("</script_draft>".to_string());
        lines.join("\n")
    }

    fn performance_reply(&self, req: &ChatRequest, user: &str) -> String {
        let role = slice_block(&req.system, "<role_name>", "</role_name>").unwrap_or("Narrator");
        let guide = rslice_block(user, "<performance_guide>\n", "\n</performance_guide>").unwrap_or("");
        let h = self.digest(&format!("act:{role}:{guide}"));
        let (action, parenthetical, dialogue) = match h % 3 {
            0 => (format!("{} {}.", role, self.pick(&format!("a:{guide}"), &GUIDE_CLAUSES)), String::new(), String::new()),
            1 => (
                String::new(),
                self.pick(&format!("p:{guide}"), &PARENTHETICAL_POOL).to_string(),
                self.pick(&format!("d:{guide}"), &DIALOGUE_POOL).to_string(),
            ),
            _ => (
                format!("{} {}.", role, self.pick(&format!("a2:{guide}"), &GUIDE_CLAUSES)),
                self.pick(&format!("p2:{guide}"), &PARENTHETICAL_POOL).to_string(),
                self.pick(&format!("d2:{guide}"), &DIALOGUE_POOL).to_string(),
            ),
        };
        format!(
            "<detailed_performance>\n<character>{role}</character>\n<action>{action}</action>\n<parenthetical>{parenthetical}</parenthetical>\n<dialogue>{dialogue}</dialogue>\n</detailed_performance>"
        )
    }

    /// Realizes a draft block into an episode, one performance per event.
    fn draft_to_episode_reply(&self, user: &str) -> String {
        let heading = slice_block(user, "<scene_heading>", "</scene_heading>")
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .unwrap_or("INT.; a bare room; DAY.");
        let mut performances = Vec::new();
        let mut rest = user;
        while let (Some(character), Some(guide)) = (
            slice_block(rest, "<character>", "</character>"),
            slice_block(rest, "<performance>", "</performance>"),
        ) {
            performances.push((character.to_string(), guide.to_string()));
            match rest.find("</character_performance>").map(|i| i + 1) {
                Some(i) => rest = &rest[i..],
                None => break,
            }
        }
        if performances.is_empty() {
            performances.push(("Narrator".to_string(), "The hour passes.".to_string()));
        }
        self.render_episode(heading, &performances)
    }

    /// Fabricates a whole episode straight from the plot point and cast.
    fn plot_to_episode_reply(&self, user: &str) -> String {
        let plot = slice_block(user, "<plot_point>\n", "\n</plot_point>").unwrap_or("the turn");
        let h = self.digest(&format!("ptw:{plot}"));
        let location = LOCATIONS[(h % LOCATIONS.len() as u64) as usize];
        let time = if h & 1 == 0 { "DAY" } else { "NIGHT" };
        let heading = format!("INT.; {location}; {time}.");
        let mut cast: Vec<String> = Vec::new();
        let mut rest = user;
        while let Some(name) = slice_block(rest, "<full_name>", "</full_name>") {
            cast.push(name.to_string());
            match rest.find("</full_name>").map(|i| i + 1) {
                Some(i) => rest = &rest[i..],
                None => break,
            }
        }
        if cast.is_empty() {
            cast.push("Narrator".to_string());
        }
        let beat = plot.split('.').next().unwrap_or("it").trim();
        let performances: Vec<(String, String)> = (0..3)
            .map(|i| {
                let who = cast[i % cast.len()].clone();
                let clause = self.pick(&format!("ptw:{plot}:{i}"), &GUIDE_CLAUSES);
                (who.clone(), format!("{who} {clause}, mindful of {beat}."))
            })
            .collect();
        self.render_episode(&heading, &performances)
    }

    fn render_episode(&self, heading: &str, performances: &[(String, String)]) -> String {
        let mut lines = vec![
            "<episode>".to_string(),
            format!("<scene_heading>{heading}</scene_heading>"),
        ];
        for (i, (who, guide)) in performances.iter().enumerate() {
            let speak = i % 2 == 1;
            let action = if speak {
                String::new()
            } else {
                guide.clone()
            };
            let parenthetical = if speak {
                self.pick(&format!("ep-p:{who}:{i}"), &PARENTHETICAL_POOL).to_string()
            } else {
                String::new()
            };
            let dialogue = if speak {
                self.pick(&format!("ep-d:{who}:{i}"), &DIALOGUE_POOL).to_string()
            } else {
                String::new()
            };
            lines.push("<detailed_performance>".to_string());
            lines.push(format!("<character>{who}</character>"));
            lines.push(format!("<action>{action}</action>"));
            lines.push(format!("<parenthetical>{parenthetical}</parenthetical>"));
            lines.push(format!("<dialogue>{dialogue}</dialogue>"));
            lines.push("</detailed_performance>".to_string());
        }
        lines.push("</episode>".to_string());
        lines.join("\n")
    }

    /// The judged dimension only appears in the system prompt, so it joins
    /// the digest; otherwise every dimension would get the same verdict.
    fn verdict_reply(&self, system: &str, user: &str) -> String {
        let h = self.digest(&format!("verdict:{system}:{user}"));
        let verdict = match h % 20 {
            0..=8 => "A",
            9..=17 => "B",
            _ => "TIE",
        };
        format!(
            "<explanation>Judged on the stated focus; one draft holds its throughline better.</explanation>\n<verdict>{verdict}</verdict>"
        )
    }

    fn storyline_reply(&self, user: &str) -> String {
        let genre = slice_block(user, "for a ", " movie").unwrap_or("Drama");
        let target: usize = slice_block(user, "approximately ", " words")
            .and_then(|w| w.parse().ok())
            .unwrap_or(120);
        let target = target.clamp(60, 260);
        let h = self.digest(&format!("storyline:{genre}:{user}"));
        let mut text = format!(
            "A {} story: {} takes a position as a {} and inherits a problem no one mentions aloud.",
            genre.to_lowercase(),
            NAME_POOL[(h % 12) as usize],
            OCCUPATIONS[((h >> 8) % 8) as usize],
        );
        let mut i: u64 = 0;
        while crate::story::word_count(&text) < target.saturating_sub(8) {
            let s = STORY_SENTENCES[((h >> (i % 32)) as usize + i as usize) % STORY_SENTENCES.len()];
            text.push(' ');
            text.push_str(s);
            i += 1;
        }
        format!("<storyline>\n{text}\n</storyline>")
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &'static str {
        "mock"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String> {
        let user = latest_user(req)
            .ok_or_else(|| Error::Transport("request has no user turn".into()))?;
        if user.contains(markers::CHARACTER_DESIGN) {
            Ok(self.characters_reply(user))
        } else if user.contains(markers::CHARACTER_REVISION) {
            self.revised_characters_reply(req)
        } else if user.contains(markers::CHARACTER_FEEDBACK) {
            Ok("<advice>\nTie the cast together: give two of them a shared history that complicates the main want.\n</advice>".to_string())
        } else if user.contains(markers::CHARACTER_FEEDBACK_AGAIN) {
            Ok("<advice>None</advice>".to_string())
        } else if user.contains(markers::OUTLINE_DESIGN) {
            self.outline_reply(user)
        } else if user.contains(markers::OUTLINE_REVISION) {
            self.revised_outline_reply(req, user)
        } else if user.contains(markers::OUTLINE_FEEDBACK) {
            Ok("<advice>\nThe midpoint sags: raise the cost of the second subplot and make the ending consequence concrete.\n</advice>".to_string())
        } else if user.contains(markers::OUTLINE_FEEDBACK_AGAIN) {
            Ok("<advice>None</advice>".to_string())
        } else if user.contains(markers::EXPANSION) {
            Ok(self.chapter_reply(user))
        } else if user.contains(markers::DRAFT) {
            Ok(self.draft_reply(user))
        } else if user.contains(markers::ACT) {
            Ok(self.performance_reply(req, user))
        } else if user.contains(markers::JUDGE) {
            Ok(self.verdict_reply(&req.system, user))
        } else if user.contains(markers::SYNTH) {
            Ok(self.storyline_reply(user))
        } else if user.contains(markers::DIRECT_EPISODE) {
            Ok(self.draft_to_episode_reply(user))
        } else if user.contains(markers::PLAN_WRITE) {
            Ok(self.plot_to_episode_reply(user))
        } else {
            Err(Error::Transport("unrecognized request shape".into()))
        }
    }
}

fn latest_user(req: &ChatRequest) -> Option<&str> {
    req.turns
        .iter()
        .rev()
        .find(|t| t.role == Role::User)
        .map(|t| t.content.as_str())
}

fn last_assistant_with<'a>(req: &'a ChatRequest, needle: &str) -> Option<&'a str> {
    req.turns
        .iter()
        .rev()
        .find(|t| t.role == Role::Assistant && t.content.contains(needle))
        .map(|t| t.content.as_str())
}

/// Text after `open` up to (not including) `close`, first occurrence.
fn slice_block<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text[start..].find(close)? + start;
    Some(&text[start..end])
}

/// Like [`slice_block`] but keeps the surrounding tags, so the result parses
/// as a complete element.
fn slice_element<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)?;
    let end = text[start..].find(close)? + start + close.len();
    Some(&text[start..end])
}

/// Like [`slice_block`] but anchored on the last occurrence of `open`, so
/// in-context examples earlier in the prompt are skipped.
fn rslice_block<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.rfind(open)? + open.len();
    let end = text[start..].find(close)? + start;
    Some(&text[start..end])
}

/// Slot that ends at the next blank line (or end of text).
fn slot_after<'a>(text: &'a str, header: &str) -> &'a str {
    match text.find(header) {
        Some(i) => {
            let rest = &text[i + header.len()..];
            match rest.find("\n\n") {
                Some(j) => &rest[..j],
                None => rest,
            }
        }
        None => "",
    }
}

/// Names out of an involved-characters block of "Full Name: introduction"
/// lines, first-appearance remarks tolerated.
fn names_from_intro_lines(block: &str) -> Vec<String> {
    block
        .lines()
        .filter_map(|line| line.split_once(':'))
        .map(|(name, _)| {
            name.trim()
                .trim_end_matches(crate::prompts::FIRST_APPEARANCE_REMARK)
                .trim()
                .to_string()
        })
        .filter(|n| !n.is_empty())
        .collect()
}

fn cast_from_prompt(user: &str) -> Result<crate::story::CharacterSet> {
    let block = slice_element(user, "<characters>", "</characters>")
        .ok_or_else(|| Error::Transport("request carries no characters block".into()))?;
    let doc = crate::story::parse_tag_document(block, &characters_schema())?;
    extract_characters(&doc)
}
