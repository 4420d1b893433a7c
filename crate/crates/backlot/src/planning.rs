//! Stage 1: the Writer drafts characters and an outline, an Editor critiques,
//! and the Writer revises, bounded by a round limit with a "None" early stop.

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatRequest, Gateway, GenParams, Stage, Turn};
use crate::prompts;
use crate::story::{
    advice_to_tags, characters_schema, characters_to_tags, extract_advice, extract_characters,
    extract_outline, outline_schema, outline_to_tags, render, Advice, CharacterSet, NameMode,
    Outline, Storyline, MAX_CHARACTERS, MIN_CHARACTERS,
};
use crate::{Error, Result};

/// Bounds for the feedback-revision loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanningConfig {
    pub min_characters: usize,
    pub max_characters: usize,
    pub max_feedback_rounds: u32,
    /// Extra attempts per structured call when the reply will not parse.
    pub max_retries: u32,
}

impl Default for PlanningConfig {
    fn default() -> Self {
        PlanningConfig {
            min_characters: MIN_CHARACTERS,
            max_characters: MAX_CHARACTERS,
            max_feedback_rounds: 2,
            max_retries: 2,
        }
    }
}

impl PlanningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_characters > self.max_characters {
            return Err(Error::Config(format!(
                "min_characters {} exceeds max_characters {}",
                self.min_characters, self.max_characters
            )));
        }
        if self.min_characters < MIN_CHARACTERS || self.max_characters > MAX_CHARACTERS {
            return Err(Error::Config(format!(
                "character bounds must stay within {MIN_CHARACTERS}..={MAX_CHARACTERS}"
            )));
        }
        Ok(())
    }
}

/// What the Writer/Editor loop is working on. Implementations provide the
/// prompts and the codec for one artifact kind.
pub trait Revisable {
    type Artifact: Clone;
    const TARGET: &'static str;

    fn writer_system(&self) -> String;
    fn editor_system(&self) -> String;
    fn design_user(&self) -> String;
    fn feedback_user(&self, artifact_block: &str) -> String;
    fn feedback_again_user(&self, artifact_block: &str) -> String;
    fn revision_user(&self, advice: &str) -> String;
    fn extract(&self, doc: &crate::story::TagDocument) -> Result<Self::Artifact>;
    fn render_block(&self, artifact: &Self::Artifact) -> String;
    fn schema(&self) -> crate::story::TagSchema;
}

/// Character-design loop parameterization.
pub struct CharacterTarget {
    pub storyline: String,
    pub min_characters: usize,
    pub max_characters: usize,
}

impl Revisable for CharacterTarget {
    type Artifact = CharacterSet;
    const TARGET: &'static str = "characters";

    fn writer_system(&self) -> String {
        prompts::CHARACTER_WRITER_SYSTEM.to_string()
    }

    fn editor_system(&self) -> String {
        prompts::CHARACTER_EDITOR_SYSTEM.to_string()
    }

    fn design_user(&self) -> String {
        prompts::character_design_user(&self.storyline)
    }

    fn feedback_user(&self, artifact_block: &str) -> String {
        prompts::character_feedback_user(&self.storyline, artifact_block)
    }

    fn feedback_again_user(&self, artifact_block: &str) -> String {
        prompts::character_feedback_again_user(artifact_block, &self.storyline)
    }

    fn revision_user(&self, advice: &str) -> String {
        prompts::character_revision_user(advice, &self.storyline)
    }

    fn extract(&self, doc: &crate::story::TagDocument) -> Result<CharacterSet> {
        let cast = extract_characters(doc)?;
        if cast.len() < self.min_characters || cast.len() > self.max_characters {
            return Err(Error::CardinalityOutOfRange {
                count: cast.len(),
                min: self.min_characters,
                max: self.max_characters,
            });
        }
        Ok(cast)
    }

    fn render_block(&self, artifact: &CharacterSet) -> String {
        render(&characters_to_tags(artifact)).trim_end().to_string()
    }

    fn schema(&self) -> crate::story::TagSchema {
        characters_schema()
    }
}

/// Outline loop parameterization; holds the final cast for name checking.
pub struct OutlineTarget {
    pub storyline: String,
    pub cast: CharacterSet,
    pub characters_block: String,
}

impl OutlineTarget {
    pub fn new(storyline: impl Into<String>, cast: CharacterSet) -> OutlineTarget {
        let characters_block = render(&characters_to_tags(&cast)).trim_end().to_string();
        OutlineTarget {
            storyline: storyline.into(),
            cast,
            characters_block,
        }
    }
}

impl Revisable for OutlineTarget {
    type Artifact = Outline;
    const TARGET: &'static str = "outline";

    fn writer_system(&self) -> String {
        prompts::OUTLINE_WRITER_SYSTEM.to_string()
    }

    fn editor_system(&self) -> String {
        prompts::OUTLINE_EDITOR_SYSTEM.to_string()
    }

    fn design_user(&self) -> String {
        prompts::outline_design_user(&self.storyline, &self.characters_block)
    }

    fn feedback_user(&self, artifact_block: &str) -> String {
        prompts::outline_feedback_user(&self.storyline, &self.characters_block, artifact_block)
    }

    fn feedback_again_user(&self, artifact_block: &str) -> String {
        prompts::outline_feedback_again_user(artifact_block, &self.storyline, &self.characters_block)
    }

    fn revision_user(&self, advice: &str) -> String {
        prompts::outline_revision_user(advice, &self.storyline, &self.characters_block)
    }

    fn extract(&self, doc: &crate::story::TagDocument) -> Result<Outline> {
        extract_outline(doc, &self.cast, NameMode::Strict)
    }

    fn render_block(&self, artifact: &Outline) -> String {
        render(&outline_to_tags(artifact)).trim_end().to_string()
    }

    fn schema(&self) -> crate::story::TagSchema {
        outline_schema()
    }
}

/// One Writer/Editor conversation pair over a single artifact.
pub struct RevisionSession<'g, T: Revisable> {
    gateway: &'g Gateway,
    max_retries: u32,
    story_id: String,
    target: T,
    writer: ChatRequest,
    editor: Option<ChatRequest>,
    editor_params: GenParams,
    rounds_completed: u32,
}

impl<'g, T: Revisable> RevisionSession<'g, T> {
    pub fn new(
        gateway: &'g Gateway,
        params: GenParams,
        max_retries: u32,
        story_id: impl Into<String>,
        target: T,
    ) -> RevisionSession<'g, T> {
        let editor_params = params.clone();
        let writer = ChatRequest::user(params, target.writer_system(), target.design_user());
        RevisionSession {
            gateway,
            max_retries,
            story_id: story_id.into(),
            target,
            writer,
            editor: None,
            editor_params,
            rounds_completed: 0,
        }
    }

    /// The Editor may run on a different model than the Writer.
    pub fn with_editor_params(mut self, params: GenParams) -> Self {
        self.editor_params = params;
        self
    }

    pub fn rounds_completed(&self) -> u32 {
        self.rounds_completed
    }

    pub fn writer_history(&self) -> &ChatRequest {
        &self.writer
    }

    pub fn editor_history(&self) -> Option<&ChatRequest> {
        self.editor.as_ref()
    }

    /// First Writer call. The canonical rendering of the artifact is what
    /// lands in the history, so retried or noisy replies leave no trace.
    pub fn generate(&mut self) -> Result<T::Artifact> {
        let artifact = self.gateway.complete_extract(
            &self.writer,
            &self.target.schema(),
            self.max_retries,
            Stage::Planning,
            &self.story_id,
            |doc| self.target.extract(doc),
        )?;
        self.writer
            .turns
            .push(Turn::assistant(self.target.render_block(&artifact)));
        Ok(artifact)
    }

    /// Asks the Editor about the current artifact. The first ask introduces
    /// the artifact; later asks splice behind the Editor's history.
    pub fn editor_feedback(&mut self, artifact: &T::Artifact) -> Result<Advice> {
        let block = self.target.render_block(artifact);
        let request = match self.editor.take() {
            None => ChatRequest::user(
                self.editor_params.clone(),
                self.target.editor_system(),
                self.target.feedback_user(&block),
            ),
            Some(mut history) => {
                history.turns.push(Turn::user(self.target.feedback_again_user(&block)));
                history
            }
        };
        let advice = self.gateway.complete_extract(
            &request,
            &crate::story::advice_schema(),
            self.max_retries,
            Stage::Planning,
            &self.story_id,
            |doc| Ok(extract_advice(doc)),
        );
        match advice {
            Ok(advice) => {
                let mut history = request;
                history
                    .turns
                    .push(Turn::assistant(render(&advice_to_tags(&advice)).trim_end().to_string()));
                self.editor = Some(history);
                Ok(advice)
            }
            Err(err) => {
                self.editor = Some(request);
                Err(err)
            }
        }
    }

    /// Sends the Editor's advice back to the Writer for a revision.
    pub fn revise(&mut self, advice: &str) -> Result<T::Artifact> {
        self.writer.turns.push(Turn::user(self.target.revision_user(advice)));
        let revised = self.gateway.complete_extract(
            &self.writer,
            &self.target.schema(),
            self.max_retries,
            Stage::Planning,
            &self.story_id,
            |doc| self.target.extract(doc),
        )?;
        self.writer
            .turns
            .push(Turn::assistant(self.target.render_block(&revised)));
        self.rounds_completed += 1;
        Ok(revised)
    }
}

/// One advice record for the planning log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdviceEvent {
    pub target: &'static str,
    pub round: u32,
    pub advice: String,
}

/// Result of one full feedback-revision loop.
pub struct LoopOutcome<A> {
    /// Initial version first, one more entry per accepted revision.
    pub versions: Vec<A>,
    pub rounds_completed: u32,
    pub advice_log: Vec<AdviceEvent>,
}

impl<A: Clone> LoopOutcome<A> {
    pub fn current(&self) -> &A {
        self.versions.last().expect("loop produced at least one version")
    }
}

/// Generate, then alternate feedback and revision until the Editor returns
/// the sentinel or the round bound is hit. With a bound of zero the Editor is
/// never consulted.
pub fn run_revision_loop<'g, T: Revisable>(
    session: &mut RevisionSession<'g, T>,
    max_feedback_rounds: u32,
) -> Result<LoopOutcome<T::Artifact>> {
    let mut versions = vec![session.generate()?];
    let mut advice_log = Vec::new();
    for round in 0..max_feedback_rounds {
        let advice = session.editor_feedback(versions.last().unwrap())?;
        advice_log.push(AdviceEvent {
            target: T::TARGET,
            round: round + 1,
            advice: match &advice {
                Advice::None => "None".to_string(),
                Advice::Prose(text) => text.clone(),
            },
        });
        let text = match advice {
            Advice::None => break,
            Advice::Prose(text) => text,
        };
        versions.push(session.revise(&text)?);
    }
    Ok(LoopOutcome {
        versions,
        rounds_completed: session.rounds_completed(),
        advice_log,
    })
}

/// Everything Stage 1 produced, including intermediate versions for
/// checkpointing.
pub struct PlanningOutcome {
    pub characters: CharacterSet,
    pub outline: Outline,
    pub character_versions: Vec<CharacterSet>,
    pub outline_versions: Vec<Outline>,
    pub character_rounds: u32,
    pub outline_rounds: u32,
    pub advice_log: Vec<AdviceEvent>,
}

/// Runs the character loop to completion, then the outline loop on the final
/// cast. Writer and Editor may run on different models.
pub fn run_plot_planning(
    gateway: &Gateway,
    writer_params: &GenParams,
    editor_params: &GenParams,
    story_id: &str,
    storyline: &Storyline,
    config: &PlanningConfig,
) -> Result<PlanningOutcome> {
    config.validate()?;
    let mut character_session = RevisionSession::new(
        gateway,
        writer_params.clone(),
        config.max_retries,
        story_id,
        CharacterTarget {
            storyline: storyline.text.clone(),
            min_characters: config.min_characters,
            max_characters: config.max_characters,
        },
    )
    .with_editor_params(editor_params.clone());
    let character_loop = run_revision_loop(&mut character_session, config.max_feedback_rounds)?;
    let characters = character_loop.current().clone();

    let mut outline_session = RevisionSession::new(
        gateway,
        writer_params.clone(),
        config.max_retries,
        story_id,
        OutlineTarget::new(storyline.text.clone(), characters.clone()),
    )
    .with_editor_params(editor_params.clone());
    let outline_loop = run_revision_loop(&mut outline_session, config.max_feedback_rounds)?;
    let outline = outline_loop.current().clone();

    let mut advice_log = character_loop.advice_log;
    advice_log.extend(outline_loop.advice_log);
    Ok(PlanningOutcome {
        characters,
        outline,
        character_versions: character_loop.versions,
        outline_versions: outline_loop.versions,
        character_rounds: character_loop.rounds_completed,
        outline_rounds: outline_loop.rounds_completed,
        advice_log,
    })
}
