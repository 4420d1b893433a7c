//! Story domain types, validated at construction.

use std::fmt;

use crate::error::Error;
use crate::Result;

/// Character cardinality bounds for a story.
pub const MIN_CHARACTERS: usize = 3;
pub const MAX_CHARACTERS: usize = 6;

/// The six storyline genres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Genre {
    Romance,
    ScienceFiction,
    Horror,
    Drama,
    Crime,
    Comedy,
}

impl Genre {
    pub fn all() -> [Genre; 6] {
        [
            Genre::Romance,
            Genre::ScienceFiction,
            Genre::Horror,
            Genre::Drama,
            Genre::Crime,
            Genre::Comedy,
        ]
    }

    /// Human-readable name, e.g. "Science Fiction".
    pub fn name(&self) -> &'static str {
        match self {
            Genre::Romance => "Romance",
            Genre::ScienceFiction => "Science Fiction",
            Genre::Horror => "Horror",
            Genre::Drama => "Drama",
            Genre::Crime => "Crime",
            Genre::Comedy => "Comedy",
        }
    }

    /// Filesystem-safe name, e.g. "science_fiction".
    pub fn slug(&self) -> &'static str {
        match self {
            Genre::Romance => "romance",
            Genre::ScienceFiction => "science_fiction",
            Genre::Horror => "horror",
            Genre::Drama => "drama",
            Genre::Crime => "crime",
            Genre::Comedy => "comedy",
        }
    }

    pub fn parse(s: &str) -> Result<Genre> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        Genre::all()
            .into_iter()
            .find(|g| {
                g.name()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .collect::<String>()
                    .to_ascii_lowercase()
                    == norm
            })
            .ok_or_else(|| Error::Config(format!("unknown genre: {s}")))
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// A short premise the whole pipeline grows from. The 50..=300 word range is
/// a soft target enforced by the synthesizer's regeneration policy, not here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Storyline {
    pub genre: Genre,
    pub text: String,
}

impl Storyline {
    pub fn new(genre: Genre, text: impl Into<String>) -> Result<Storyline> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::ConstraintViolation {
                detail: "storyline text is empty".into(),
            });
        }
        Ok(Storyline { genre, text })
    }
}

/// One designed character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub full_name: String,
    pub introduction: String,
}

impl Character {
    pub fn new(full_name: impl Into<String>, introduction: impl Into<String>) -> Result<Character> {
        let full_name = full_name.into();
        let introduction = introduction.into();
        if full_name.trim().is_empty() {
            return Err(Error::ConstraintViolation {
                detail: "character full_name is empty".into(),
            });
        }
        if full_name.contains('<') || full_name.contains('>') {
            return Err(Error::ConstraintViolation {
                detail: format!("character name contains angle brackets: {full_name}"),
            });
        }
        if introduction.trim().is_empty() {
            return Err(Error::ConstraintViolation {
                detail: format!("character {full_name} has an empty introduction"),
            });
        }
        Ok(Character {
            full_name,
            introduction,
        })
    }
}

/// The story's cast: 3 to 6 characters with distinct names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterSet {
    characters: Vec<Character>,
}

impl CharacterSet {
    pub fn new(characters: Vec<Character>) -> Result<CharacterSet> {
        let count = characters.len();
        if !(MIN_CHARACTERS..=MAX_CHARACTERS).contains(&count) {
            return Err(Error::CardinalityOutOfRange {
                count,
                min: MIN_CHARACTERS,
                max: MAX_CHARACTERS,
            });
        }
        for (i, c) in characters.iter().enumerate() {
            if characters[..i].iter().any(|p| p.full_name == c.full_name) {
                return Err(Error::DuplicateName {
                    name: c.full_name.clone(),
                });
            }
        }
        Ok(CharacterSet { characters })
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.characters.iter().map(|c| c.full_name.as_str())
    }

    pub fn get(&self, full_name: &str) -> Option<&Character> {
        self.characters.iter().find(|c| c.full_name == full_name)
    }
}

/// Position of a plot in the two-level outline: `plot_1` is a top plot,
/// `plot_1a` its first subplot. Sub letters run a..z without gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlotLabel {
    pub top_index: usize,
    pub sub_letter: Option<char>,
}

impl PlotLabel {
    pub fn top(top_index: usize) -> Result<PlotLabel> {
        if top_index == 0 {
            return Err(Error::InvalidLabel {
                raw: "plot_0".into(),
            });
        }
        Ok(PlotLabel {
            top_index,
            sub_letter: None,
        })
    }

    pub fn sub(top_index: usize, letter: char) -> Result<PlotLabel> {
        if top_index == 0 || !letter.is_ascii_lowercase() {
            return Err(Error::InvalidLabel {
                raw: format!("plot_{top_index}{letter}"),
            });
        }
        Ok(PlotLabel {
            top_index,
            sub_letter: Some(letter),
        })
    }

    /// Letter for the i-th subplot (0-based) of a top plot.
    pub fn letter_for(top_index: usize, i: usize) -> Result<char> {
        if i >= 26 {
            return Err(Error::SubplotOverflow { top_index });
        }
        Ok((b'a' + i as u8) as char)
    }

    /// Parse a tag name such as `plot_1` or `plot_1a`.
    pub fn parse(raw: &str) -> Result<PlotLabel> {
        let invalid = || Error::InvalidLabel { raw: raw.into() };
        let rest = raw.strip_prefix("plot_").ok_or_else(invalid)?;
        let digits = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
        if digits == 0 {
            return Err(invalid());
        }
        let top_index: usize = rest[..digits].parse().map_err(|_| invalid())?;
        if top_index == 0 {
            return Err(invalid());
        }
        let tail = &rest[digits..];
        match tail.len() {
            0 => PlotLabel::top(top_index),
            1 => {
                let letter = tail.chars().next().unwrap();
                PlotLabel::sub(top_index, letter)
            }
            _ => Err(invalid()),
        }
    }

    /// Tag name form, e.g. "plot_1a".
    pub fn tag_name(&self) -> String {
        match self.sub_letter {
            Some(l) => format!("plot_{}{}", self.top_index, l),
            None => format!("plot_{}", self.top_index),
        }
    }

    pub fn is_top(&self) -> bool {
        self.sub_letter.is_none()
    }
}

impl fmt::Display for PlotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag_name())
    }
}

fn strip_scene_period(scene: &str) -> String {
    let scene = scene.trim();
    scene.strip_suffix('.').unwrap_or(scene).to_string()
}

/// A leaf plot point: prose plus its scene and cast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subplot {
    pub label: PlotLabel,
    pub plot_text: String,
    /// Where the subplot takes place; may be empty. Stored without a
    /// trailing period (the outline text form re-adds one).
    pub scene: String,
    pub involved_characters: Vec<String>,
}

impl Subplot {
    pub fn new(
        label: PlotLabel,
        plot_text: impl Into<String>,
        scene: impl Into<String>,
        involved_characters: Vec<String>,
    ) -> Result<Subplot> {
        if label.is_top() {
            return Err(Error::InvalidLabel {
                raw: format!("{label} is not a subplot label"),
            });
        }
        Ok(Subplot {
            label,
            plot_text: plot_text.into(),
            scene: strip_scene_period(&scene.into()),
            involved_characters,
        })
    }
}

/// A top-level plot and its ordered subplots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopPlot {
    pub label: PlotLabel,
    pub plot_text: String,
    pub scene: String,
    pub involved_characters: Vec<String>,
    pub subplots: Vec<Subplot>,
}

impl TopPlot {
    pub fn new(
        label: PlotLabel,
        plot_text: impl Into<String>,
        scene: impl Into<String>,
        involved_characters: Vec<String>,
        subplots: Vec<Subplot>,
    ) -> Result<TopPlot> {
        if !label.is_top() {
            return Err(Error::InvalidLabel {
                raw: format!("{label} is not a top plot label"),
            });
        }
        if subplots.is_empty() {
            return Err(Error::EmptyTopPlot {
                label: label.tag_name(),
            });
        }
        for (i, sub) in subplots.iter().enumerate() {
            if sub.label.top_index != label.top_index {
                return Err(Error::OrphanSubplot {
                    label: sub.label.tag_name(),
                });
            }
            let expected = PlotLabel::letter_for(label.top_index, i)?;
            if sub.label.sub_letter != Some(expected) {
                return Err(Error::LabelGap {
                    label: sub.label.tag_name(),
                });
            }
        }
        Ok(TopPlot {
            label,
            plot_text: plot_text.into(),
            scene: strip_scene_period(&scene.into()),
            involved_characters,
            subplots,
        })
    }
}

/// The full two-level outline: top plots 1..k, each with subplots a..  .
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outline {
    top_plots: Vec<TopPlot>,
}

impl Outline {
    pub fn new(top_plots: Vec<TopPlot>) -> Result<Outline> {
        for (i, top) in top_plots.iter().enumerate() {
            if top.label.top_index != i + 1 {
                return Err(Error::LabelGap {
                    label: top.label.tag_name(),
                });
            }
        }
        Ok(Outline { top_plots })
    }

    pub fn top_plots(&self) -> &[TopPlot] {
        &self.top_plots
    }

    /// All subplots in story order.
    pub fn subplots(&self) -> impl Iterator<Item = &Subplot> {
        self.top_plots.iter().flat_map(|t| t.subplots.iter())
    }

    /// 0-based position of a subplot in story order.
    pub fn position(&self, label: &PlotLabel) -> Option<usize> {
        self.subplots().position(|s| s.label == *label)
    }

    pub fn subplot(&self, label: &PlotLabel) -> Option<&Subplot> {
        self.subplots().find(|s| s.label == *label)
    }

    pub fn subplot_count(&self) -> usize {
        self.subplots().count()
    }
}

/// Editor feedback. The exact body "None" (after trimming) is the
/// no-further-advice sentinel; anything else is advice prose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Advice {
    None,
    Prose(String),
}

impl Advice {
    pub fn from_body(body: &str) -> Advice {
        let trimmed = body.trim();
        if trimmed == "None" {
            Advice::None
        } else {
            Advice::Prose(trimmed.to_string())
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Advice::None)
    }
}

/// A subplot expanded into narrative prose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chapter {
    pub label: PlotLabel,
    pub text: String,
}

impl Chapter {
    pub fn new(label: PlotLabel, text: impl Into<String>) -> Result<Chapter> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::ConstraintViolation {
                detail: format!("chapter {label} is empty"),
            });
        }
        Ok(Chapter { label, text })
    }
}

/// Interior, exterior, or a verbatim non-standard placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    Int,
    Ext,
    Other(String),
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Int => f.write_str("INT."),
            Placement::Ext => f.write_str("EXT."),
            Placement::Other(raw) => f.write_str(raw),
        }
    }
}

/// `INT.; Inside Emma Taylor's room; DAY.` split into its three parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneHeading {
    pub placement: Placement,
    pub location: String,
    pub time_of_day: String,
}

impl SceneHeading {
    pub fn new(
        placement: Placement,
        location: impl Into<String>,
        time_of_day: impl Into<String>,
    ) -> Result<SceneHeading> {
        let location = location.into();
        let time_of_day = time_of_day.into();
        let empty = |what: &str| Error::ConstraintViolation {
            detail: format!("scene heading {what} is empty"),
        };
        if let Placement::Other(raw) = &placement {
            if raw.trim().is_empty() {
                return Err(empty("placement"));
            }
        }
        if location.trim().is_empty() {
            return Err(empty("location"));
        }
        if time_of_day.trim().is_empty() {
            return Err(empty("time of day"));
        }
        Ok(SceneHeading {
            placement,
            location,
            time_of_day,
        })
    }

    /// Parse a heading line: three `;`-separated components, trimmed. The
    /// first maps "INT." / "EXT." to placements and keeps anything else
    /// verbatim; the third drops one trailing period.
    pub fn parse(raw: &str) -> Result<SceneHeading> {
        let parts: Vec<&str> = raw.split(';').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::ComponentCount { found: parts.len() });
        }
        let placement = match parts[0] {
            "INT." => Placement::Int,
            "EXT." => Placement::Ext,
            other => Placement::Other(other.to_string()),
        };
        let time_of_day = parts[2].strip_suffix('.').unwrap_or(parts[2]);
        SceneHeading::new(placement, parts[1], time_of_day)
    }

    /// The canonical heading line, e.g. `INT.; Inside Emma Taylor's room; DAY.`
    pub fn render_line(&self) -> String {
        format!("{}; {}; {}.", self.placement, self.location, self.time_of_day)
    }
}

/// One entry of a script draft: who acts, and a guide for how.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DraftEvent {
    pub character: String,
    pub performance_guide: String,
}

/// Stage-3 script draft: a scene heading followed by ordered events, each
/// naming a single character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptDraft {
    pub subplot_label: PlotLabel,
    pub heading: SceneHeading,
    pub events: Vec<DraftEvent>,
}

impl ScriptDraft {
    pub fn new(
        subplot_label: PlotLabel,
        heading: SceneHeading,
        events: Vec<DraftEvent>,
    ) -> Result<ScriptDraft> {
        if events.is_empty() {
            return Err(Error::ConstraintViolation {
                detail: format!("script draft {subplot_label} has no events"),
            });
        }
        Ok(ScriptDraft {
            subplot_label,
            heading,
            events,
        })
    }
}

/// A realized acting turn. Fields are stored without decoration: action
/// without brackets, parenthetical without enclosing parens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetailedPerformance {
    pub character: String,
    pub action: String,
    pub parenthetical: String,
    pub dialogue: String,
}

impl DetailedPerformance {
    /// Enforces the two performance rules: an empty dialogue forces an empty
    /// parenthetical, and at least one of action/dialogue must be non-empty.
    pub fn new(
        character: impl Into<String>,
        action: impl Into<String>,
        parenthetical: impl Into<String>,
        dialogue: impl Into<String>,
    ) -> Result<DetailedPerformance> {
        let character = character.into();
        let action = action.into();
        let parenthetical = parenthetical.into();
        let dialogue = dialogue.into();
        if dialogue.is_empty() && !parenthetical.is_empty() {
            return Err(Error::ConstraintViolation {
                detail: format!(
                    "{character}: parenthetical without dialogue is not allowed"
                ),
            });
        }
        if action.is_empty() && dialogue.is_empty() {
            return Err(Error::ConstraintViolation {
                detail: format!("{character}: action and dialogue are both empty"),
            });
        }
        Ok(DetailedPerformance {
            character,
            action,
            parenthetical,
            dialogue,
        })
    }
}

/// One subplot acted out in full.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub subplot_label: PlotLabel,
    pub heading: SceneHeading,
    pub performances: Vec<DetailedPerformance>,
}

impl Episode {
    pub fn new(
        subplot_label: PlotLabel,
        heading: SceneHeading,
        performances: Vec<DetailedPerformance>,
    ) -> Result<Episode> {
        if performances.is_empty() {
            return Err(Error::ConstraintViolation {
                detail: format!("episode {subplot_label} has no performances"),
            });
        }
        Ok(Episode {
            subplot_label,
            heading,
            performances,
        })
    }
}

/// The assembled script: one episode per subplot, story order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Screenplay {
    pub episodes: Vec<Episode>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(n: usize) -> Vec<Character> {
        (0..n)
            .map(|i| Character::new(format!("Name Number{i}"), "intro").unwrap())
            .collect()
    }

    #[test]
    fn character_set_bounds() {
        assert!(matches!(
            CharacterSet::new(chars(2)),
            Err(Error::CardinalityOutOfRange { count: 2, .. })
        ));
        assert!(CharacterSet::new(chars(3)).is_ok());
        assert!(CharacterSet::new(chars(6)).is_ok());
        assert!(matches!(
            CharacterSet::new(chars(7)),
            Err(Error::CardinalityOutOfRange { count: 7, .. })
        ));
    }

    #[test]
    fn character_set_rejects_duplicates() {
        let mut cs = chars(3);
        cs[2].full_name = cs[0].full_name.clone();
        assert!(matches!(
            CharacterSet::new(cs),
            Err(Error::DuplicateName { .. })
        ));
    }

    #[test]
    fn character_name_rejects_angle_brackets() {
        assert!(Character::new("A <b>", "x").is_err());
    }

    #[test]
    fn plot_label_parse_and_render() {
        let l = PlotLabel::parse("plot_2a").unwrap();
        assert_eq!(l.top_index, 2);
        assert_eq!(l.sub_letter, Some('a'));
        assert_eq!(l.tag_name(), "plot_2a");
        assert_eq!(PlotLabel::parse("plot_10").unwrap().tag_name(), "plot_10");
        assert!(PlotLabel::parse("plot_0").is_err());
        assert!(PlotLabel::parse("plot_1ab").is_err());
        assert!(PlotLabel::parse("chapter_1").is_err());
    }

    #[test]
    fn subplot_overflow_past_z() {
        assert_eq!(PlotLabel::letter_for(1, 0).unwrap(), 'a');
        assert_eq!(PlotLabel::letter_for(1, 25).unwrap(), 'z');
        assert!(matches!(
            PlotLabel::letter_for(1, 26),
            Err(Error::SubplotOverflow { top_index: 1 })
        ));
    }

    fn subplot(top: usize, letter: char) -> Subplot {
        Subplot::new(
            PlotLabel::sub(top, letter).unwrap(),
            "text",
            "a place",
            vec!["Ava Rose".into()],
        )
        .unwrap()
    }

    #[test]
    fn top_plot_requires_contiguous_letters() {
        let label = PlotLabel::top(1).unwrap();
        let ok = TopPlot::new(
            label,
            "t",
            "",
            vec![],
            vec![subplot(1, 'a'), subplot(1, 'b')],
        );
        assert!(ok.is_ok());
        let gap = TopPlot::new(label, "t", "", vec![], vec![subplot(1, 'a'), subplot(1, 'c')]);
        assert!(matches!(gap, Err(Error::LabelGap { .. })));
        let none = TopPlot::new(label, "t", "", vec![], vec![]);
        assert!(matches!(none, Err(Error::EmptyTopPlot { .. })));
        let foreign = TopPlot::new(label, "t", "", vec![], vec![subplot(2, 'a')]);
        assert!(matches!(foreign, Err(Error::OrphanSubplot { .. })));
    }

    #[test]
    fn outline_requires_contiguous_tops() {
        let top = |i| {
            TopPlot::new(PlotLabel::top(i).unwrap(), "t", "", vec![], vec![subplot(i, 'a')])
                .unwrap()
        };
        assert!(Outline::new(vec![top(1), top(2)]).is_ok());
        let gapped = Outline::new(vec![top(1), top(3)]);
        assert!(matches!(gapped, Err(Error::LabelGap { .. })));
    }

    #[test]
    fn scene_strips_one_trailing_period() {
        let s = Subplot::new(
            PlotLabel::sub(1, 'a').unwrap(),
            "t",
            "the town where Ava lives.",
            vec![],
        )
        .unwrap();
        assert_eq!(s.scene, "the town where Ava lives");
    }

    #[test]
    fn advice_sentinel_is_exact() {
        assert!(Advice::from_body("None").is_none());
        assert!(Advice::from_body(" None \n").is_none());
        assert_eq!(Advice::from_body("none"), Advice::Prose("none".into()));
        assert_eq!(
            Advice::from_body("None of the plots work"),
            Advice::Prose("None of the plots work".into())
        );
    }

    #[test]
    fn scene_heading_parse_strips_time_period() {
        let h = SceneHeading::parse("INT.; Inside Emma Taylor's room; DAY.").unwrap();
        assert_eq!(h.placement, Placement::Int);
        assert_eq!(h.location, "Inside Emma Taylor's room");
        assert_eq!(h.time_of_day, "DAY");
        assert_eq!(h.render_line(), "INT.; Inside Emma Taylor's room; DAY.");
    }

    #[test]
    fn scene_heading_other_placement_is_verbatim() {
        let h = SceneHeading::parse("INT./EXT.; A moving car; DUSK").unwrap();
        assert_eq!(h.placement, Placement::Other("INT./EXT.".into()));
        assert_eq!(h.render_line(), "INT./EXT.; A moving car; DUSK.");
    }

    #[test]
    fn scene_heading_component_count() {
        assert!(matches!(
            SceneHeading::parse("INT.; only two"),
            Err(Error::ComponentCount { found: 2 })
        ));
        assert!(matches!(
            SceneHeading::parse("a; b; c; d"),
            Err(Error::ComponentCount { found: 4 })
        ));
    }

    #[test]
    fn performance_rules() {
        assert!(DetailedPerformance::new("A", "walks", "", "").is_ok());
        assert!(DetailedPerformance::new("A", "", "softly", "Hi.").is_ok());
        assert!(matches!(
            DetailedPerformance::new("A", "walks", "softly", ""),
            Err(Error::ConstraintViolation { .. })
        ));
        assert!(matches!(
            DetailedPerformance::new("A", "", "", ""),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn genre_parse_accepts_slug_and_name() {
        assert_eq!(Genre::parse("science_fiction").unwrap(), Genre::ScienceFiction);
        assert_eq!(Genre::parse("Science Fiction").unwrap(), Genre::ScienceFiction);
        assert_eq!(Genre::parse("comedy").unwrap(), Genre::Comedy);
        assert!(Genre::parse("western").is_err());
    }
}
