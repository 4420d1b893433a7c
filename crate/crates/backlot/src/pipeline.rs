//! End-to-end orchestration: configuration, per-story checkpoint directories,
//! resume/force semantics, the two pipeline modes, and evaluation runs.
//!
//! Layout of one story directory:
//!
//! ```text
//! <out>/<story_id>/
//!   effective_config.toml   frozen copy of the config that produced the run
//!   state.json              which stages are complete
//!   storyline.txt
//!   characters_r<k>.tags    one per accepted revision round, r0 = initial
//!   characters.tags         final
//!   outline_r<k>.tags / outline.tags
//!   planning.log
//!   chapter_<label>.tags    one per subplot, written as each finishes
//!   expansion.log           context-window composition per chapter, ndjson
//!   draft_<label>.tags
//!   episode_<label>.tags
//!   screenplay.txt
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::eval::{
    align_pairs, segment_by_top_plot, win_rate_table, Dimension, Judge, PairResult, SharedContext,
    WinRateTable,
};
use crate::expansion::{Expander, ExpansionConfig};
use crate::gateway::{
    BackendContext, BackendRegistry, ChatRequest, Clock, FailureLog, Gateway, GenParams,
    RateLimiter, Stage, StageFailureRecord, SystemClock, VirtualClock,
};
use crate::planning::{run_plot_planning, PlanningConfig};
use crate::screenplay::{
    assemble_screenplay, involved_characters, DirectRealizer, EpisodeRealizer, Production,
    RolePlayRealizer,
};
use crate::story::{
    chapter_schema, chapter_to_tags, characters_schema, characters_to_tags, episode_schema,
    episode_to_tags, extract_chapter, extract_characters, extract_episode, extract_outline,
    extract_script_draft, outline_schema, outline_to_tags, parse_screenplay, parse_tag_document,
    render, render_screenplay, script_draft_schema, script_draft_to_tags, Chapter, CharacterSet,
    Episode, NameMode, Outline, PlotLabel, Screenplay, ScriptDraft, Storyline,
};
use crate::{prompts, Error, Result};

// ---------------------------------------------------------------------------
// Configuration

/// Which pipeline runs: the staged writer/editor/actor one, or the single-pass
/// per-subplot baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Hollmwood,
    PlanThenWrite,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Hollmwood => "hollmwood",
            Mode::PlanThenWrite => "plan-then-write",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "hollmwood" => Ok(Mode::Hollmwood),
            "plan-then-write" => Ok(Mode::PlanThenWrite),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected hollmwood or plan-then-write)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sampling settings for one pipeline role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleParams {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for RoleParams {
    fn default() -> Self {
        RoleParams {
            model: "gpt-4-0613".to_string(),
            temperature: 1.0,
            top_p: 0.95,
        }
    }
}

impl RoleParams {
    pub fn gen_params(&self) -> Result<GenParams> {
        GenParams::new(&self.model, self.temperature, self.top_p)
    }
}

/// Per-role model assignment. Defaults unify writer/editor/actor on one model
/// and give the judge a larger-context one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Roles {
    pub writer: RoleParams,
    pub editor: RoleParams,
    pub actor: RoleParams,
    pub judge: RoleParams,
}

impl Default for Roles {
    fn default() -> Self {
        Roles {
            writer: RoleParams::default(),
            editor: RoleParams::default(),
            actor: RoleParams::default(),
            judge: RoleParams {
                model: "gpt-4-32k-0613".to_string(),
                ..RoleParams::default()
            },
        }
    }
}

/// The whole run configuration. Every field has a default, so an empty file
/// is a valid config; the CLI flags override single fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Transport: live, record, replay or mock.
    pub backend: String,
    /// Seed for the mock backend and for judge order randomization.
    pub seed: u64,
    pub mode: Mode,
    /// Realize episodes by sequential role-play (true) or one direct call.
    pub role_play: bool,
    /// Extra attempts per structured call when a reply will not parse.
    pub max_retries: u32,
    pub requests_per_minute: usize,
    /// Stories realized concurrently by `run` over a dataset.
    pub parallel_stories: usize,
    /// Cassette file for the record and replay backends.
    pub cassette: Option<PathBuf>,
    pub roles: Roles,
    pub planning: PlanningConfig,
    pub expansion: ExpansionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            backend: "mock".to_string(),
            seed: 0,
            mode: Mode::Hollmwood,
            role_play: true,
            max_retries: 2,
            requests_per_minute: 60,
            parallel_stories: 1,
            cassette: None,
            roles: Roles::default(),
            planning: PlanningConfig::default(),
            expansion: ExpansionConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        PipelineConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("config render: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.planning.validate()?;
        if self.requests_per_minute == 0 {
            return Err(Error::Config("requests_per_minute must be positive".into()));
        }
        if self.parallel_stories == 0 {
            return Err(Error::Config("parallel_stories must be positive".into()));
        }
        for (role, params) in [
            ("writer", &self.roles.writer),
            ("editor", &self.roles.editor),
            ("actor", &self.roles.actor),
            ("judge", &self.roles.judge),
        ] {
            params
                .gen_params()
                .map_err(|e| Error::Config(format!("roles.{role}: {e}")))?;
        }
        if matches!(self.backend.as_str(), "record" | "replay") && self.cassette.is_none() {
            return Err(Error::Config(format!(
                "backend {:?} needs a cassette path",
                self.backend
            )));
        }
        Ok(())
    }

    pub fn writer_params(&self) -> Result<GenParams> {
        self.roles.writer.gen_params()
    }

    pub fn editor_params(&self) -> Result<GenParams> {
        self.roles.editor.gen_params()
    }

    pub fn actor_params(&self) -> Result<GenParams> {
        self.roles.actor.gen_params()
    }

    pub fn judge_params(&self) -> Result<GenParams> {
        self.roles.judge.gen_params()
    }
}

/// A gateway on the configured backend, rate limit and a fresh failure log.
pub fn build_gateway(config: &PipelineConfig, registry: &BackendRegistry) -> Result<Gateway> {
    config.validate()?;
    let ctx = BackendContext {
        seed: config.seed,
        cassette_path: config.cassette.clone(),
    };
    let backend = registry.create(&config.backend, &ctx)?;
    // Offline backends replay canned responses, so throttling them only slows
    // tests down. Wall-clock pacing matters when real requests leave the box.
    let clock: Arc<dyn Clock> = match config.backend.as_str() {
        "mock" | "replay" => Arc::new(VirtualClock::new()),
        _ => Arc::new(SystemClock::new()),
    };
    let limiter = RateLimiter::per_minute(config.requests_per_minute, clock);
    Ok(Gateway::new(backend, limiter, Arc::new(FailureLog::default())))
}

// ---------------------------------------------------------------------------
// Stage state

/// What a story directory has finished. Stages only complete in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageState {
    pub story_id: String,
    pub genre: String,
    pub planning_done: bool,
    pub expansion_done: bool,
    pub screenplay_done: bool,
    /// Relative artifact paths in completion order.
    pub artifacts: Vec<String>,
}

impl StageState {
    pub fn new(story_id: impl Into<String>, genre: impl Into<String>) -> StageState {
        StageState {
            story_id: story_id.into(),
            genre: genre.into(),
            ..StageState::default()
        }
    }

    pub fn load(path: &Path) -> Result<Option<StageState>> {
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)?;
        let state = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("corrupt state file {}: {e}", path.display())))?;
        Ok(Some(state))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("state render: {e}")))?;
        atomic_write(path, &text)
    }

    pub fn is_done(&self, stage: Stage) -> bool {
        match stage {
            Stage::Planning => self.planning_done,
            Stage::Expansion => self.expansion_done,
            Stage::Screenplay => self.screenplay_done,
            Stage::Eval | Stage::Synth => false,
        }
    }

    /// Marks a stage complete; earlier stages must already be.
    pub fn mark_done(&mut self, stage: Stage) -> Result<()> {
        let ordered = match stage {
            Stage::Planning => true,
            Stage::Expansion => self.planning_done,
            Stage::Screenplay => self.planning_done && self.expansion_done,
            Stage::Eval | Stage::Synth => {
                return Err(Error::ConstraintViolation {
                    detail: format!("{stage:?} is not a per-story stage"),
                })
            }
        };
        if !ordered {
            return Err(Error::ConstraintViolation {
                detail: format!("cannot complete {stage:?} before the stages preceding it"),
            });
        }
        match stage {
            Stage::Planning => self.planning_done = true,
            Stage::Expansion => self.expansion_done = true,
            Stage::Screenplay => self.screenplay_done = true,
            _ => unreachable!(),
        }
        Ok(())
    }

    pub fn any_progress(&self) -> bool {
        self.planning_done || self.expansion_done || self.screenplay_done
            || !self.artifacts.is_empty()
    }

    fn record_artifact(&mut self, name: &str) {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
    }
}

/// Writes via a temp file in the same directory, then renames into place, so
/// interrupted runs never leave a half-written checkpoint.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let mut name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?
        .to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Story directory layout

#[derive(Debug, Clone)]
pub struct StoryDir {
    pub root: PathBuf,
}

impl StoryDir {
    pub fn new(root: impl Into<PathBuf>) -> StoryDir {
        StoryDir { root: root.into() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn state(&self) -> PathBuf {
        self.path("state.json")
    }

    pub fn effective_config(&self) -> PathBuf {
        self.path("effective_config.toml")
    }

    pub fn storyline(&self) -> PathBuf {
        self.path("storyline.txt")
    }

    pub fn characters(&self) -> PathBuf {
        self.path("characters.tags")
    }

    pub fn characters_round(&self, round: usize) -> PathBuf {
        self.path(&format!("characters_r{round}.tags"))
    }

    pub fn outline(&self) -> PathBuf {
        self.path("outline.tags")
    }

    pub fn outline_round(&self, round: usize) -> PathBuf {
        self.path(&format!("outline_r{round}.tags"))
    }

    pub fn planning_log(&self) -> PathBuf {
        self.path("planning.log")
    }

    pub fn chapter(&self, label: &PlotLabel) -> PathBuf {
        self.path(&format!("chapter_{label}.tags"))
    }

    pub fn expansion_log(&self) -> PathBuf {
        self.path("expansion.log")
    }

    pub fn draft(&self, label: &PlotLabel) -> PathBuf {
        self.path(&format!("draft_{label}.tags"))
    }

    pub fn episode(&self, label: &PlotLabel) -> PathBuf {
        self.path(&format!("episode_{label}.tags"))
    }

    pub fn screenplay(&self) -> PathBuf {
        self.path("screenplay.txt")
    }
}

// ---------------------------------------------------------------------------
// One story, end to end

pub struct StoryRun<'g> {
    gateway: &'g Gateway,
    config: &'g PipelineConfig,
    pub dir: StoryDir,
    story_id: String,
    pub resume: bool,
    pub force: bool,
}

impl<'g> StoryRun<'g> {
    pub fn new(
        gateway: &'g Gateway,
        config: &'g PipelineConfig,
        out_dir: &Path,
        story_id: impl Into<String>,
    ) -> StoryRun<'g> {
        let story_id = story_id.into();
        StoryRun {
            gateway,
            config,
            dir: StoryDir::new(out_dir.join(&story_id)),
            story_id,
            resume: false,
            force: false,
        }
    }

    pub fn story_id(&self) -> &str {
        &self.story_id
    }

    /// Wraps a stage-internal error so the failure is attributed to the stage
    /// and the story, and lands in the failure log. Config errors pass
    /// through: they are usage problems, not stage outcomes.
    fn fail_stage(&self, stage: Stage, source: Error) -> Error {
        match source {
            passthrough @ (Error::Config(_) | Error::StageFailure { .. }) => passthrough,
            source => {
                self.gateway.failures().record_stage_failure(StageFailureRecord {
                    stage,
                    story_id: self.story_id.clone(),
                    error_kind: source.kind().to_string(),
                });
                Error::StageFailure {
                    stage,
                    story_id: self.story_id.clone(),
                    source: Box::new(source),
                }
            }
        }
    }

    fn write_effective_config(&self) -> Result<()> {
        let rendered = self.config.to_toml_string()?;
        let path = self.dir.effective_config();
        if path.exists() {
            let existing = fs::read_to_string(&path)?;
            if existing == rendered {
                return Ok(());
            }
            if !self.force {
                return Err(Error::Config(format!(
                    "{} was produced with a different configuration; pass --force to start over",
                    self.dir.root.display()
                )));
            }
        }
        atomic_write(&path, &rendered)
    }

    fn write_storyline(&self, storyline: &Storyline) -> Result<()> {
        let path = self.dir.storyline();
        if path.exists() {
            let existing = fs::read_to_string(&path)?;
            if existing == storyline.text {
                return Ok(());
            }
            if !self.force {
                return Err(Error::Config(format!(
                    "{} already holds a different storyline; pass --force to start over",
                    self.dir.root.display()
                )));
            }
        }
        atomic_write(&path, &storyline.text)
    }

    /// Creates the directory, freezes the config, and loads (or starts) the
    /// stage state. With force, the directory is wiped first.
    pub fn prepare(&self, storyline: &Storyline) -> Result<StageState> {
        if self.force && self.dir.root.exists() {
            fs::remove_dir_all(&self.dir.root)?;
        }
        fs::create_dir_all(&self.dir.root)?;
        self.write_effective_config()?;
        self.write_storyline(storyline)?;
        match StageState::load(&self.dir.state())? {
            Some(state) => Ok(state),
            None => {
                // Saved before any stage runs so a failed story still shows
                // up as attempted in the statistics.
                let state = StageState::new(&self.story_id, storyline.genre.name());
                state.save(&self.dir.state())?;
                Ok(state)
            }
        }
    }

    /// Runs the configured mode over one storyline. A completed directory is
    /// a no-op; a partially completed one needs --resume (continue) or
    /// --force (start over).
    pub fn run(&self, storyline: &Storyline) -> Result<Screenplay> {
        let mut state = self.prepare(storyline)?;
        if state.any_progress() && !state.screenplay_done && !self.resume {
            return Err(Error::Config(format!(
                "{} is partially complete; pass --resume to continue or --force to start over",
                self.dir.root.display()
            )));
        }
        let mode = pipeline_mode(self.config.mode);
        mode.run(self, storyline, &mut state)
    }

    fn save_state(&self, state: &StageState) -> Result<()> {
        state.save(&self.dir.state())
    }

    // -- Stage 1 ------------------------------------------------------------

    /// Loads the final planning artifacts from disk. Lenient name handling:
    /// hand-edited checkpoints keep unknown names as warnings here and fail
    /// later only if such a character must actually act.
    pub fn load_planning(&self) -> Result<(CharacterSet, Outline)> {
        let characters_path = self.dir.characters();
        let outline_path = self.dir.outline();
        if !characters_path.exists() || !outline_path.exists() {
            return Err(Error::Config(format!(
                "planning artifacts missing under {}; run the plan stage first",
                self.dir.root.display()
            )));
        }
        let cast_doc = parse_tag_document(&fs::read_to_string(characters_path)?, &characters_schema())?;
        let characters = extract_characters(&cast_doc)?;
        let outline_doc = parse_tag_document(&fs::read_to_string(outline_path)?, &outline_schema())?;
        let outline = extract_outline(&outline_doc, &characters, NameMode::Lenient)?;
        Ok((characters, outline))
    }

    /// Characters then outline, each through the feedback loop, with per-round
    /// checkpoints and a planning log.
    pub fn ensure_planning(
        &self,
        storyline: &Storyline,
        state: &mut StageState,
        planning: &PlanningConfig,
    ) -> Result<(CharacterSet, Outline)> {
        if state.planning_done && !self.force {
            return self.load_planning();
        }
        let outcome = (|| {
            let writer = self.config.writer_params()?;
            let editor = self.config.editor_params()?;
            run_plot_planning(self.gateway, &writer, &editor, &self.story_id, storyline, planning)
        })()
        .map_err(|e| self.fail_stage(Stage::Planning, e))?;

        for (round, cast) in outcome.character_versions.iter().enumerate() {
            let path = self.dir.characters_round(round);
            atomic_write(&path, &render(&characters_to_tags(cast)))?;
            state.record_artifact(&format!("characters_r{round}.tags"));
        }
        for (round, outline) in outcome.outline_versions.iter().enumerate() {
            let path = self.dir.outline_round(round);
            atomic_write(&path, &render(&outline_to_tags(outline)))?;
            state.record_artifact(&format!("outline_r{round}.tags"));
        }
        atomic_write(&self.dir.characters(), &render(&characters_to_tags(&outcome.characters)))?;
        atomic_write(&self.dir.outline(), &render(&outline_to_tags(&outcome.outline)))?;
        state.record_artifact("characters.tags");
        state.record_artifact("outline.tags");

        let mut log = String::new();
        for event in &outcome.advice_log {
            let advice = event.advice.replace('\n', " ");
            log.push_str(&format!("{} round {}: {}\n", event.target, event.round, advice));
        }
        log.push_str(&format!("characters rounds_completed={}\n", outcome.character_rounds));
        log.push_str(&format!("outline rounds_completed={}\n", outcome.outline_rounds));
        atomic_write(&self.dir.planning_log(), &log)?;
        state.record_artifact("planning.log");

        state.mark_done(Stage::Planning)?;
        self.save_state(state)?;
        Ok((outcome.characters, outcome.outline))
    }

    // -- Stage 2 ------------------------------------------------------------

    fn load_chapter(&self, label: &PlotLabel) -> Result<Chapter> {
        let doc = parse_tag_document(&fs::read_to_string(self.dir.chapter(label))?, &chapter_schema())?;
        extract_chapter(&doc, label.clone())
    }

    /// Left-to-right chapter expansion with one checkpoint per chapter. The
    /// contiguous prefix already on disk is loaded, not re-made.
    pub fn ensure_expansion(
        &self,
        storyline: &Storyline,
        characters: &CharacterSet,
        outline: &Outline,
        state: &mut StageState,
    ) -> Result<Vec<Chapter>> {
        let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
        if state.expansion_done && !self.force {
            return labels.iter().map(|l| self.load_chapter(l)).collect();
        }
        let result = (|| {
            let mut done = Vec::new();
            for label in &labels {
                if !self.dir.chapter(label).exists() {
                    break;
                }
                done.push(self.load_chapter(label)?);
            }
            if done.is_empty() && self.dir.expansion_log().exists() {
                fs::remove_file(self.dir.expansion_log())?;
            }
            let expander = Expander::new(
                self.gateway,
                self.config.writer_params()?,
                self.config.max_retries,
                &self.story_id,
                self.config.expansion,
            );
            let log = Mutex::new(
                fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(self.dir.expansion_log())?,
            );
            expander.expand_all(storyline, outline, characters, done, |chapter, window| {
                atomic_write(&self.dir.chapter(&chapter.label), &render(&chapter_to_tags(chapter)))?;
                let line = serde_json::to_string(window)
                    .map_err(|e| Error::Config(format!("window record render: {e}")))?;
                writeln!(log.lock().unwrap(), "{line}")?;
                Ok(())
            })
        })()
        .map_err(|e| self.fail_stage(Stage::Expansion, e))?;

        for label in &labels {
            state.record_artifact(&format!("chapter_{label}.tags"));
        }
        state.record_artifact("expansion.log");
        state.mark_done(Stage::Expansion)?;
        self.save_state(state)?;
        Ok(result)
    }

    // -- Stage 3 ------------------------------------------------------------

    fn load_draft(&self, label: &PlotLabel, involved: &[String]) -> Result<ScriptDraft> {
        let doc = parse_tag_document(&fs::read_to_string(self.dir.draft(label))?, &script_draft_schema())?;
        extract_script_draft(&doc, label.clone(), involved)
    }

    fn load_episode(&self, label: &PlotLabel) -> Result<Episode> {
        let doc = parse_tag_document(&fs::read_to_string(self.dir.episode(label))?, &episode_schema())?;
        extract_episode(&doc, label.clone())
    }

    fn load_screenplay(&self, outline: &Outline) -> Result<Screenplay> {
        let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
        parse_screenplay(&fs::read_to_string(self.dir.screenplay())?, &labels)
    }

    /// Adapts every chapter into a script draft, one checkpoint each.
    pub fn ensure_drafts(
        &self,
        characters: &CharacterSet,
        outline: &Outline,
        chapters: &[Chapter],
        state: &mut StageState,
    ) -> Result<Vec<ScriptDraft>> {
        let result = (|| {
            let production = Production::new(
                self.gateway,
                self.config.writer_params()?,
                self.config.max_retries,
                &self.story_id,
            );
            let mut drafts = Vec::new();
            for (subplot, chapter) in outline.subplots().zip(chapters) {
                let involved = involved_characters(characters, &subplot.involved_characters)?;
                let draft = if self.dir.draft(&subplot.label).exists() {
                    self.load_draft(&subplot.label, &subplot.involved_characters)?
                } else {
                    let draft = production.draft_script(chapter, &subplot.scene, &involved)?;
                    atomic_write(&self.dir.draft(&subplot.label), &render(&script_draft_to_tags(&draft)))?;
                    draft
                };
                drafts.push(draft);
            }
            Ok(drafts)
        })()
        .map_err(|e| self.fail_stage(Stage::Screenplay, e))?;
        for subplot in outline.subplots() {
            state.record_artifact(&format!("draft_{}.tags", subplot.label));
        }
        self.save_state(state)?;
        Ok(result)
    }

    /// Realizes every draft into an episode and assembles the screenplay.
    pub fn ensure_episodes(
        &self,
        characters: &CharacterSet,
        outline: &Outline,
        drafts: &[ScriptDraft],
        state: &mut StageState,
        realizer: &dyn EpisodeRealizer,
    ) -> Result<Screenplay> {
        if state.screenplay_done && !self.force {
            return self.load_screenplay(outline);
        }
        let screenplay = (|| {
            let production = Production::new(
                self.gateway,
                self.config.actor_params()?,
                self.config.max_retries,
                &self.story_id,
            );
            let mut episodes = Vec::new();
            for (subplot, draft) in outline.subplots().zip(drafts) {
                let episode = if self.dir.episode(&subplot.label).exists() {
                    self.load_episode(&subplot.label)?
                } else {
                    let involved = involved_characters(characters, &subplot.involved_characters)?;
                    let episode = realizer.realize(&production, draft, &involved)?;
                    atomic_write(&self.dir.episode(&subplot.label), &render(&episode_to_tags(&episode)))?;
                    episode
                };
                episodes.push(episode);
            }
            let screenplay = assemble_screenplay(episodes, outline)?;
            atomic_write(&self.dir.screenplay(), &render_screenplay(&screenplay))?;
            Ok(screenplay)
        })()
        .map_err(|e| self.fail_stage(Stage::Screenplay, e))?;
        for subplot in outline.subplots() {
            state.record_artifact(&format!("episode_{}.tags", subplot.label));
        }
        state.record_artifact("screenplay.txt");
        state.mark_done(Stage::Screenplay)?;
        self.save_state(state)?;
        Ok(screenplay)
    }

    /// One single-pass episode straight from the outline, with a worked
    /// example in context.
    fn plan_write_episode(
        &self,
        storyline: &Storyline,
        characters: &CharacterSet,
        outline: &Outline,
        label: &PlotLabel,
        plot_point: &str,
    ) -> Result<Episode> {
        let characters_block = render(&characters_to_tags(characters)).trim_end().to_string();
        let outline_block = render(&outline_to_tags(outline)).trim_end().to_string();
        let request = ChatRequest::user(
            self.config.writer_params()?,
            prompts::PLAN_WRITE_SYSTEM,
            prompts::plan_write_episode_user(
                &storyline.text,
                &characters_block,
                &outline_block,
                &label.to_string(),
                plot_point,
            ),
        );
        let names: Vec<String> = characters.names().map(str::to_string).collect();
        let label = label.clone();
        self.gateway.complete_extract(
            &request,
            &episode_schema(),
            self.config.max_retries,
            Stage::Screenplay,
            &self.story_id,
            move |doc| {
                let episode = extract_episode(doc, label.clone())?;
                for p in &episode.performances {
                    if !names.iter().any(|n| n == &p.character) {
                        return Err(Error::ForeignCharacter {
                            name: p.character.clone(),
                        });
                    }
                }
                Ok(episode)
            },
        )
    }
}

// ---------------------------------------------------------------------------
// Modes

/// How a story becomes a screenplay. Trait-object so registries and configs
/// can select it by name.
pub trait PipelineMode: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, run: &StoryRun, storyline: &Storyline, state: &mut StageState)
        -> Result<Screenplay>;
}

/// Planning with feedback, chapter expansion, drafting, then acting.
pub struct StagedMode;

impl PipelineMode for StagedMode {
    fn name(&self) -> &'static str {
        "hollmwood"
    }

    fn run(
        &self,
        run: &StoryRun,
        storyline: &Storyline,
        state: &mut StageState,
    ) -> Result<Screenplay> {
        if state.screenplay_done && !run.force {
            let (_, outline) = run.load_planning()?;
            return run.load_screenplay(&outline);
        }
        let (characters, outline) =
            run.ensure_planning(storyline, state, &run.config.planning)?;
        let chapters = run.ensure_expansion(storyline, &characters, &outline, state)?;
        let drafts = run.ensure_drafts(&characters, &outline, &chapters, state)?;
        let realizer = episode_realizer(run.config.role_play);
        run.ensure_episodes(&characters, &outline, &drafts, state, realizer)
    }
}

/// Single-pass baseline: plan without feedback, then write each episode
/// directly from the outline. No expansion, no drafts, no role-play.
pub struct PlanThenWriteMode;

impl PipelineMode for PlanThenWriteMode {
    fn name(&self) -> &'static str {
        "plan-then-write"
    }

    fn run(
        &self,
        run: &StoryRun,
        storyline: &Storyline,
        state: &mut StageState,
    ) -> Result<Screenplay> {
        let single_pass = PlanningConfig {
            max_feedback_rounds: 0,
            ..run.config.planning
        };
        let (characters, outline) = run.ensure_planning(storyline, state, &single_pass)?;
        if !state.expansion_done {
            // This mode has no expansion stage; mark it vacuously complete so
            // the ordering invariant holds.
            state.mark_done(Stage::Expansion)?;
            run.save_state(state)?;
        }
        if state.screenplay_done && !run.force {
            return run.load_screenplay(&outline);
        }
        let screenplay = (|| {
            let mut episodes = Vec::new();
            for subplot in outline.subplots() {
                let episode = if run.dir.episode(&subplot.label).exists() {
                    run.load_episode(&subplot.label)?
                } else {
                    let episode = run.plan_write_episode(
                        storyline,
                        &characters,
                        &outline,
                        &subplot.label,
                        &subplot.plot_text,
                    )?;
                    atomic_write(&run.dir.episode(&subplot.label), &render(&episode_to_tags(&episode)))?;
                    episode
                };
                episodes.push(episode);
            }
            let screenplay = assemble_screenplay(episodes, &outline)?;
            atomic_write(&run.dir.screenplay(), &render_screenplay(&screenplay))?;
            Ok(screenplay)
        })()
        .map_err(|e| run.fail_stage(Stage::Screenplay, e))?;
        for subplot in outline.subplots() {
            state.record_artifact(&format!("episode_{}.tags", subplot.label));
        }
        state.record_artifact("screenplay.txt");
        state.mark_done(Stage::Screenplay)?;
        run.save_state(state)?;
        Ok(screenplay)
    }
}

pub fn pipeline_mode(mode: Mode) -> &'static dyn PipelineMode {
    match mode {
        Mode::Hollmwood => &StagedMode,
        Mode::PlanThenWrite => &PlanThenWriteMode,
    }
}

pub fn episode_realizer(role_play: bool) -> &'static dyn EpisodeRealizer {
    if role_play {
        &RolePlayRealizer
    } else {
        &DirectRealizer
    }
}

// ---------------------------------------------------------------------------
// Dataset runs

/// Story ids like `drama_01`, numbered per genre in dataset order; the same
/// scheme the dataset writer uses for file names.
pub fn dataset_story_ids(dataset: &[Storyline]) -> Vec<String> {
    let mut counts: Vec<(crate::story::Genre, usize)> = Vec::new();
    dataset
        .iter()
        .map(|s| {
            let n = match counts.iter_mut().find(|(g, _)| *g == s.genre) {
                Some((_, n)) => {
                    *n += 1;
                    *n
                }
                None => {
                    counts.push((s.genre, 1));
                    1
                }
            };
            format!("{}_{:02}", s.genre.slug(), n)
        })
        .collect()
}

/// Runs every storyline, at most `parallel_stories` at a time. A failed story
/// halts only itself; the others keep going.
pub fn run_dataset(
    gateway: &Gateway,
    config: &PipelineConfig,
    dataset: &[Storyline],
    out_dir: &Path,
    resume: bool,
    force: bool,
) -> Vec<(String, Result<Screenplay>)> {
    let ids = dataset_story_ids(dataset);
    let jobs: Vec<(&String, &Storyline)> = ids.iter().zip(dataset).collect();
    let run_one = |(id, storyline): (&String, &Storyline)| {
        let mut run = StoryRun::new(gateway, config, out_dir, id.clone());
        run.resume = resume;
        run.force = force;
        let outcome = run.run(storyline);
        if let Err(e) = &outcome {
            log::error!("{id}: {e}");
        }
        (id.clone(), outcome)
    };
    if config.parallel_stories <= 1 || jobs.len() <= 1 {
        return jobs.into_iter().map(run_one).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Mutex<Option<(String, Result<Screenplay>)>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..config.parallel_stories.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                *results[i].lock().unwrap() = Some(run_one(jobs[i]));
            });
        }
    });
    results
        .into_iter()
        .map(|cell| cell.into_inner().unwrap().expect("every job ran"))
        .collect()
}

// ---------------------------------------------------------------------------
// Evaluation runs

/// A method directory is either one story directory or a directory of them;
/// a story directory is recognized by its screenplay.txt.
pub fn story_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join("screenplay.txt").exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.display())))?
    {
        let path = entry?.path();
        if path.is_dir() && path.join("screenplay.txt").exists() {
            found.push(path);
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(Error::Config(format!(
            "no completed story directories under {}",
            dir.display()
        )));
    }
    Ok(found)
}

fn dir_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// One method side of one story: the artifacts judging needs.
struct MethodStory {
    outline: Outline,
    screenplay: Screenplay,
    characters_block: String,
    storyline_text: String,
}

fn load_method_story(dir: &Path) -> Result<MethodStory> {
    let outline_text = fs::read_to_string(dir.join("outline.tags")).map_err(|e| {
        Error::Config(format!("{} lacks outline.tags: {e}", dir.display()))
    })?;
    // Characters may be absent in externally produced directories; judging
    // then proceeds with an empty cast block.
    let (characters, characters_block) = match fs::read_to_string(dir.join("characters.tags")) {
        Ok(text) => {
            let doc = parse_tag_document(&text, &characters_schema())?;
            let cast = extract_characters(&doc)?;
            let block = render(&characters_to_tags(&cast)).trim_end().to_string();
            (cast, block)
        }
        Err(_) => {
            log::warn!("{}: no characters.tags, judging without a cast block", dir.display());
            (CharacterSet::new(Vec::new())?, String::new())
        }
    };
    let outline_doc = parse_tag_document(&outline_text, &outline_schema())?;
    let outline = extract_outline(&outline_doc, &characters, NameMode::Lenient)?;
    let labels: Vec<PlotLabel> = outline.subplots().map(|s| s.label.clone()).collect();
    let screenplay = parse_screenplay(&fs::read_to_string(dir.join("screenplay.txt"))?, &labels)?;
    let storyline_text = fs::read_to_string(dir.join("storyline.txt")).unwrap_or_default();
    Ok(MethodStory {
        outline,
        screenplay,
        characters_block,
        storyline_text,
    })
}

/// Everything one evaluation run produced.
pub struct EvalOutcome {
    pub table: WinRateTable,
    pub results: Vec<PairResult>,
    /// Top-plot labels present on one side only, per story.
    pub dropped: Vec<String>,
    /// Stories present in only one method directory.
    pub unmatched_stories: Vec<String>,
}

/// Judges method X against method Y story by story and writes the reports.
///
/// Output files under `out_dir`: results.ndjson (one judged pair-dimension
/// per line), win_rates.txt, win_rates.csv, failures.ndjson.
pub fn run_eval(
    gateway: &Gateway,
    config: &PipelineConfig,
    x_dir: &Path,
    y_dir: &Path,
    out_dir: &Path,
) -> Result<EvalOutcome> {
    let x_stories = story_dirs(x_dir)?;
    let y_stories = story_dirs(y_dir)?;
    let y_names: BTreeSet<String> = y_stories.iter().map(|p| dir_name(p)).collect();
    let x_names: BTreeSet<String> = x_stories.iter().map(|p| dir_name(p)).collect();

    let judge = Judge::new(gateway, config.judge_params()?, config.seed);
    let mut results: Vec<PairResult> = Vec::new();
    let mut dropped = Vec::new();
    let mut unmatched: Vec<String> = Vec::new();
    for x_story in &x_stories {
        let story_id = dir_name(x_story);
        if !y_names.contains(&story_id) {
            unmatched.push(story_id);
            continue;
        }
        let x = load_method_story(x_story)?;
        let y = load_method_story(&y_dir_for(y_dir, &y_stories, &story_id))?;
        let x_segments = segment_by_top_plot(&x.screenplay, &x.outline)?;
        let y_segments = segment_by_top_plot(&y.screenplay, &y.outline)?;
        let (pairs, story_dropped) = align_pairs(&story_id, &x_segments, &y_segments);
        dropped.extend(story_dropped.into_iter().map(|l| format!("{story_id}:{l}")));
        let shared = SharedContext::new(x.storyline_text.clone(), x.characters_block.clone(), &x.outline);
        for pair in &pairs {
            for dimension in Dimension::ALL {
                if let Some(result) = judge.judge_pair(pair, dimension, &shared)? {
                    results.push(result);
                }
            }
        }
    }
    unmatched.extend(
        y_names
            .difference(&x_names)
            .map(|s| s.to_string()),
    );

    let table = win_rate_table(dir_name(x_dir), dir_name(y_dir), &results)?;

    fs::create_dir_all(out_dir)?;
    let mut ndjson = String::new();
    for result in &results {
        let line = serde_json::to_string(result)
            .map_err(|e| Error::Config(format!("result render: {e}")))?;
        ndjson.push_str(&line);
        ndjson.push('\n');
    }
    atomic_write(&out_dir.join("results.ndjson"), &ndjson)?;
    let mut report = table.render_text();
    if !dropped.is_empty() {
        report.push_str(&format!("\ndropped (unmatched top plots): {}\n", dropped.join(", ")));
    }
    if !unmatched.is_empty() {
        report.push_str(&format!("\nunmatched stories: {}\n", unmatched.join(", ")));
    }
    atomic_write(&out_dir.join("win_rates.txt"), &report)?;
    atomic_write(&out_dir.join("win_rates.csv"), &table.render_csv())?;
    gateway.failures().write_ndjson(&out_dir.join("failures.ndjson"))?;

    Ok(EvalOutcome {
        table,
        results,
        dropped,
        unmatched_stories: unmatched,
    })
}

fn y_dir_for(y_root: &Path, y_stories: &[PathBuf], story_id: &str) -> PathBuf {
    y_stories
        .iter()
        .find(|p| dir_name(p) == story_id)
        .cloned()
        .unwrap_or_else(|| y_root.join(story_id))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gateway::{MockBackend, VirtualClock};
    use crate::story::Genre;

    fn mock_gateway(seed: u64) -> Gateway {
        let clock = Arc::new(VirtualClock::new());
        Gateway::new(
            Arc::new(MockBackend::new(seed)),
            RateLimiter::per_minute(100_000, clock),
            Arc::new(FailureLog::default()),
        )
    }

    fn demo_storyline() -> Storyline {
        Storyline::new(
            Genre::Crime,
            "A harbor clerk notices the night manifests never match the morning ones and starts \
             keeping a private ledger. When her brother is arrested over cargo he never touched, \
             the ledger becomes both her leverage and the reason people follow her home.",
        )
        .unwrap()
    }

    fn run_once(dir: &Path, config: &PipelineConfig, seed: u64) -> (Screenplay, u64) {
        let gateway = mock_gateway(seed);
        let run = StoryRun::new(&gateway, config, dir, "demo_01");
        let screenplay = run.run(&demo_storyline()).unwrap();
        (screenplay, gateway.volume().requests)
    }

    #[test]
    fn empty_toml_is_the_default_config() {
        let config = PipelineConfig::from_toml_str("").unwrap();
        assert_eq!(config, PipelineConfig::default());
        assert_eq!(config.backend, "mock");
        assert!(config.role_play);
        assert_eq!(config.mode, Mode::Hollmwood);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let mut config = PipelineConfig::default();
        config.seed = 9;
        config.mode = Mode::PlanThenWrite;
        config.roles.judge.model = "other-model".into();
        let text = config.to_toml_string().unwrap();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, config);

        let err = PipelineConfig::from_toml_str("not_a_key = 3").unwrap_err();
        assert!(err.to_string().contains("not_a_key"), "{err}");
    }

    #[test]
    fn cassette_backends_require_a_cassette() {
        for backend in ["record", "replay"] {
            let config = PipelineConfig {
                backend: backend.into(),
                ..PipelineConfig::default()
            };
            assert!(matches!(config.validate(), Err(Error::Config(_))), "{backend}");
        }
        let ok = PipelineConfig {
            backend: "replay".into(),
            cassette: Some(PathBuf::from("c.ndjson")),
            ..PipelineConfig::default()
        };
        ok.validate().unwrap();
    }

    #[test]
    fn offline_gateways_are_not_throttled_in_real_time() {
        let config = PipelineConfig {
            requests_per_minute: 2,
            ..PipelineConfig::default()
        };
        let gateway = build_gateway(&config, &BackendRegistry::builtin()).unwrap();
        let started = std::time::Instant::now();
        for n in 0..20 {
            let request = ChatRequest::user(
                config.writer_params().unwrap(),
                crate::prompts::SYNTH_SYSTEM,
                crate::prompts::synth_user("Drama", 120, n),
            );
            gateway.complete(&request).unwrap();
        }
        assert!(
            started.elapsed() < std::time::Duration::from_secs(30),
            "mock runs must not sleep out a real rate-limit window"
        );
    }

    #[test]
    fn mode_names_parse_back() {
        for mode in [Mode::Hollmwood, Mode::PlanThenWrite] {
            assert_eq!(Mode::parse(mode.name()).unwrap(), mode);
        }
        assert!(Mode::parse("freeform").is_err());
    }

    #[test]
    fn stage_order_is_enforced() {
        let mut state = StageState::new("s1", "Crime");
        assert!(state.mark_done(Stage::Expansion).is_err());
        assert!(state.mark_done(Stage::Screenplay).is_err());
        state.mark_done(Stage::Planning).unwrap();
        assert!(state.mark_done(Stage::Screenplay).is_err());
        state.mark_done(Stage::Expansion).unwrap();
        state.mark_done(Stage::Screenplay).unwrap();
        assert!(state.mark_done(Stage::Eval).is_err());
    }

    #[test]
    fn state_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let mut state = StageState::new("s1", "Drama");
        state.mark_done(Stage::Planning).unwrap();
        state.record_artifact("characters.tags");
        state.save(&path).unwrap();
        assert_eq!(StageState::load(&path).unwrap().unwrap(), state);
        assert!(StageState::load(&dir.path().join("missing.json")).unwrap().is_none());
    }

    #[test]
    fn staged_run_produces_the_full_artifact_set() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default();
        let (screenplay, _) = run_once(out.path(), &config, 7);
        assert_eq!(screenplay.episodes.len(), 4, "two tops, two subplots each");

        let story = StoryDir::new(out.path().join("demo_01"));
        for name in [
            "effective_config.toml",
            "state.json",
            "storyline.txt",
            "characters_r0.tags",
            "characters.tags",
            "outline_r0.tags",
            "outline.tags",
            "planning.log",
            "expansion.log",
            "screenplay.txt",
        ] {
            assert!(story.root.join(name).exists(), "{name} missing");
        }
        for label in ["plot_1a", "plot_1b", "plot_2a", "plot_2b"] {
            let label = PlotLabel::parse(label).unwrap();
            assert!(story.chapter(&label).exists());
            assert!(story.draft(&label).exists());
            assert!(story.episode(&label).exists());
        }
        let state = StageState::load(&story.state()).unwrap().unwrap();
        assert!(state.planning_done && state.expansion_done && state.screenplay_done);
        assert_eq!(state.genre, "Crime");
        let log = fs::read_to_string(story.planning_log()).unwrap();
        assert!(log.contains("characters rounds_completed="), "{log}");
    }

    #[test]
    fn identical_seeds_give_byte_identical_screenplays() {
        let config = PipelineConfig::default();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_once(a.path(), &config, 7);
        run_once(b.path(), &config, 7);
        let bytes_a = fs::read(a.path().join("demo_01/screenplay.txt")).unwrap();
        let bytes_b = fs::read(b.path().join("demo_01/screenplay.txt")).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn completed_run_is_a_no_op_without_force() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default();
        let (_, first_requests) = run_once(out.path(), &config, 7);
        assert!(first_requests > 0);
        let before = fs::read(out.path().join("demo_01/screenplay.txt")).unwrap();

        let (_, rerun_requests) = run_once(out.path(), &config, 7);
        assert_eq!(rerun_requests, 0, "completed stages must not re-run");
        let after = fs::read(out.path().join("demo_01/screenplay.txt")).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn force_regenerates_everything() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default();
        let (_, first_requests) = run_once(out.path(), &config, 7);

        let gateway = mock_gateway(7);
        let mut run = StoryRun::new(&gateway, &config, out.path(), "demo_01");
        run.force = true;
        run.run(&demo_storyline()).unwrap();
        assert_eq!(gateway.volume().requests, first_requests);
    }

    #[test]
    fn partial_run_needs_resume_and_then_reuses_checkpoints() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default();
        let (_, full_requests) = run_once(out.path(), &config, 7);
        let story = StoryDir::new(out.path().join("demo_01"));

        // Surgery: pretend the run died after the second chapter.
        let mut state = StageState::load(&story.state()).unwrap().unwrap();
        state.expansion_done = false;
        state.screenplay_done = false;
        state.save(&story.state()).unwrap();
        for label in ["plot_2a", "plot_2b"] {
            fs::remove_file(story.chapter(&PlotLabel::parse(label).unwrap())).unwrap();
        }
        for label in ["plot_1a", "plot_1b", "plot_2a", "plot_2b"] {
            let label = PlotLabel::parse(label).unwrap();
            fs::remove_file(story.draft(&label)).unwrap();
            fs::remove_file(story.episode(&label)).unwrap();
        }
        fs::remove_file(story.screenplay()).unwrap();
        let kept_chapter =
            fs::read(story.chapter(&PlotLabel::parse("plot_1a").unwrap())).unwrap();
        let kept_characters = fs::read(story.characters()).unwrap();

        // Without --resume the partial directory is refused.
        let gateway = mock_gateway(7);
        let run = StoryRun::new(&gateway, &config, out.path(), "demo_01");
        let err = run.run(&demo_storyline()).unwrap_err();
        assert!(err.to_string().contains("--resume"), "{err}");

        // With --resume, planning and the first two chapters are reused.
        let gateway = mock_gateway(7);
        let mut run = StoryRun::new(&gateway, &config, out.path(), "demo_01");
        run.resume = true;
        run.run(&demo_storyline()).unwrap();
        let resumed_requests = gateway.volume().requests;
        assert!(resumed_requests > 0);
        assert!(
            resumed_requests < full_requests,
            "{resumed_requests} vs {full_requests}"
        );
        assert_eq!(
            fs::read(story.chapter(&PlotLabel::parse("plot_1a").unwrap())).unwrap(),
            kept_chapter,
            "kept chapters must be reused byte for byte"
        );
        assert_eq!(fs::read(story.characters()).unwrap(), kept_characters);
        assert!(story.screenplay().exists());
        let state = StageState::load(&story.state()).unwrap().unwrap();
        assert!(state.screenplay_done);
    }

    #[test]
    fn changed_config_is_refused_without_force() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default();
        run_once(out.path(), &config, 7);

        let changed = PipelineConfig {
            seed: 8,
            ..PipelineConfig::default()
        };
        let gateway = mock_gateway(8);
        let run = StoryRun::new(&gateway, &changed, out.path(), "demo_01");
        let err = run.run(&demo_storyline()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");

        let mut run = StoryRun::new(&gateway, &changed, out.path(), "demo_01");
        run.force = true;
        run.run(&demo_storyline()).unwrap();
    }

    #[test]
    fn plan_then_write_skips_expansion_and_feedback() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            mode: Mode::PlanThenWrite,
            ..PipelineConfig::default()
        };
        let (screenplay, requests) = run_once(out.path(), &config, 7);
        assert_eq!(screenplay.episodes.len(), 4);
        // Two planning calls (no feedback) plus one call per subplot.
        assert_eq!(requests, 6);

        let story = StoryDir::new(out.path().join("demo_01"));
        assert!(story.screenplay().exists());
        for label in ["plot_1a", "plot_1b", "plot_2a", "plot_2b"] {
            let label = PlotLabel::parse(label).unwrap();
            assert!(story.episode(&label).exists());
            assert!(!story.chapter(&label).exists(), "no chapters in this mode");
            assert!(!story.draft(&label).exists(), "no drafts in this mode");
        }
        let log = fs::read_to_string(story.planning_log()).unwrap();
        assert!(log.contains("characters rounds_completed=0"), "{log}");
        assert!(log.contains("outline rounds_completed=0"), "{log}");
    }

    #[test]
    fn direct_realization_needs_fewer_calls_than_role_play() {
        let config = PipelineConfig::default();
        let role_play_dir = tempfile::tempdir().unwrap();
        let (_, role_play_requests) = run_once(role_play_dir.path(), &config, 7);

        let direct = PipelineConfig {
            role_play: false,
            ..PipelineConfig::default()
        };
        let direct_dir = tempfile::tempdir().unwrap();
        let (screenplay, direct_requests) = run_once(direct_dir.path(), &direct, 7);
        assert_eq!(screenplay.episodes.len(), 4);
        assert!(
            direct_requests < role_play_requests,
            "{direct_requests} vs {role_play_requests}"
        );
    }

    #[test]
    fn strategy_lookups_cover_both_axes() {
        assert_eq!(pipeline_mode(Mode::Hollmwood).name(), "hollmwood");
        assert_eq!(pipeline_mode(Mode::PlanThenWrite).name(), "plan-then-write");
        assert_eq!(episode_realizer(true).name(), "role_play");
        assert_eq!(episode_realizer(false).name(), "direct");
    }

    #[test]
    fn dataset_ids_number_per_genre() {
        let dataset = vec![
            Storyline::new(Genre::Drama, "one").unwrap(),
            Storyline::new(Genre::Crime, "two").unwrap(),
            Storyline::new(Genre::Drama, "three").unwrap(),
        ];
        assert_eq!(
            dataset_story_ids(&dataset),
            vec!["drama_01", "crime_01", "drama_02"]
        );
    }

    #[test]
    fn dataset_runs_in_a_bounded_pool() {
        let out = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            parallel_stories: 2,
            mode: Mode::PlanThenWrite,
            ..PipelineConfig::default()
        };
        let gateway = mock_gateway(5);
        let dataset = vec![
            Storyline::new(Genre::Drama, "A custody clerk finds two files with one case number and quietly keeps both.").unwrap(),
            Storyline::new(Genre::Drama, "A ferry schedule printed wrong strands the one witness who mattered.").unwrap(),
            Storyline::new(Genre::Horror, "The light in the drowned quarry turns on every third night.").unwrap(),
            Storyline::new(Genre::Comedy, "A retirement party goes so badly the guest of honor un-retires out of spite.").unwrap(),
        ];
        let outcomes = run_dataset(&gateway, &config, &dataset, out.path(), false, false);
        assert_eq!(outcomes.len(), 4);
        for (id, outcome) in &outcomes {
            assert!(outcome.is_ok(), "{id}: {:?}", outcome.as_ref().err());
        }
        for id in ["drama_01", "drama_02", "horror_01", "comedy_01"] {
            assert!(out.path().join(id).join("screenplay.txt").exists(), "{id}");
        }
    }

    #[test]
    fn eval_run_judges_aligned_stories_and_writes_reports() {
        let x_root = tempfile::tempdir().unwrap();
        let y_root = tempfile::tempdir().unwrap();
        // Same story id on both sides, different pipelines.
        let staged = PipelineConfig::default();
        let baseline = PipelineConfig {
            mode: Mode::PlanThenWrite,
            ..PipelineConfig::default()
        };
        let gateway = mock_gateway(11);
        StoryRun::new(&gateway, &staged, x_root.path(), "demo_01")
            .run(&demo_storyline())
            .unwrap();
        StoryRun::new(&gateway, &baseline, y_root.path(), "demo_01")
            .run(&demo_storyline())
            .unwrap();

        let out = tempfile::tempdir().unwrap();
        let eval_gateway = mock_gateway(11);
        let outcome = run_eval(
            &eval_gateway,
            &staged,
            x_root.path(),
            y_root.path(),
            out.path(),
        )
        .unwrap();
        assert_eq!(outcome.table.rows.len(), 4);
        for row in &outcome.table.rows {
            assert_eq!(row.n_pairs, 2, "two top plots judged on {}", row.dimension);
        }
        assert_eq!(outcome.results.len(), 8);
        assert!(outcome.dropped.is_empty());
        assert!(outcome.unmatched_stories.is_empty());
        assert!(out.path().join("results.ndjson").exists());
        let report = fs::read_to_string(out.path().join("win_rates.txt")).unwrap();
        assert!(report.contains("Coherence"), "{report}");
        let ndjson = fs::read_to_string(out.path().join("results.ndjson")).unwrap();
        assert_eq!(ndjson.lines().count(), 8);

        // Determinism: the same seed judges the same way.
        let out2 = tempfile::tempdir().unwrap();
        let gateway2 = mock_gateway(11);
        let outcome2 = run_eval(&gateway2, &staged, x_root.path(), y_root.path(), out2.path()).unwrap();
        for (a, b) in outcome.results.iter().zip(&outcome2.results) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn eval_reports_unmatched_stories() {
        let x_root = tempfile::tempdir().unwrap();
        let y_root = tempfile::tempdir().unwrap();
        let config = PipelineConfig {
            mode: Mode::PlanThenWrite,
            ..PipelineConfig::default()
        };
        let gateway = mock_gateway(3);
        StoryRun::new(&gateway, &config, x_root.path(), "demo_01")
            .run(&demo_storyline())
            .unwrap();
        StoryRun::new(&gateway, &config, x_root.path(), "demo_02")
            .run(&demo_storyline())
            .unwrap();
        StoryRun::new(&gateway, &config, y_root.path(), "demo_01")
            .run(&demo_storyline())
            .unwrap();

        let out = tempfile::tempdir().unwrap();
        let outcome = run_eval(&gateway, &config, x_root.path(), y_root.path(), out.path()).unwrap();
        assert_eq!(outcome.unmatched_stories, vec!["demo_02".to_string()]);
        assert_eq!(outcome.results.len(), 8, "only the matched story is judged");
    }
}
