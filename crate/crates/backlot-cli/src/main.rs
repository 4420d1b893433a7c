//! `backlot` drives the screenplay pipeline: dataset synthesis, the staged
//! stages individually or end to end, pairwise judging, and statistics.
//!
//! Exit codes: 0 success, 2 stage failure, 3 configuration or usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use backlot::eval::{length_stats, render_failure_rates, FailureRate, LengthItem};
use backlot::gateway::{BackendRegistry, FailureLog, Gateway, Stage};
use backlot::pipeline::{
    build_gateway, run_dataset, run_eval, Mode, PipelineConfig, StageState, StoryRun,
};
use backlot::planning::PlanningConfig;
use backlot::story::Genre;
use backlot::story::Storyline;
use backlot::synth::{
    dataset_stats, read_dataset, render_stats, write_dataset, SynthConfig, Synthesizer,
};
use backlot::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "backlot",
    version,
    about = "Staged screenplay generation: plan with feedback, expand, draft, act, judge",
    after_help = "Env: LLM_API_KEY and LLM_BASE_URL configure the live backend.\n\
                  Exit codes: 0 success, 2 stage failure, 3 config error."
)]
struct Cli {
    /// TOML config file; flags below override single fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Transport: live, record, replay or mock.
    #[arg(long, global = true, value_name = "NAME")]
    backend: Option<String>,

    /// Seed for the mock backend and judge order randomization.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Pipeline mode: hollmwood or plan-then-write.
    #[arg(long, global = true, value_name = "MODE")]
    mode: Option<String>,

    /// Realize episodes in one direct call instead of sequential role-play.
    #[arg(long = "no-role-play", global = true)]
    no_role_play: bool,

    /// Editor feedback rounds per planning loop.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(0..=2))]
    feedback_rounds: Option<u32>,

    /// Continue a partially completed story directory.
    #[arg(long, global = true)]
    resume: bool,

    /// Wipe existing artifacts and regenerate.
    #[arg(long, global = true)]
    force: bool,

    /// Cassette file for the record and replay backends.
    #[arg(long, global = true, value_name = "PATH")]
    cassette: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a genre-balanced storyline dataset.
    Synth {
        /// Output directory for the storyline files and index.
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
        /// Storylines per genre.
        #[arg(long)]
        per_genre: Option<usize>,
        /// Word-count target passed to the generator.
        #[arg(long)]
        target_words: Option<usize>,
    },
    /// Stage 1: design characters and the outline through the feedback loop.
    Plan(StageArgs),
    /// Stage 2: expand every subplot into a chapter.
    Expand(StageArgs),
    /// Stage 3a: adapt each chapter into a script draft.
    Draft(StageArgs),
    /// Stage 3b: act the drafts into episodes and assemble the screenplay.
    Act(StageArgs),
    /// All stages end to end, for one storyline or a whole dataset.
    Run {
        /// A storyline text file, or a dataset directory with an index.tsv.
        input: PathBuf,
        #[command(flatten)]
        placement: OutputArgs,
    },
    /// Judge two finished method directories pairwise on four dimensions.
    Eval {
        /// Directory of story runs for method X.
        x: PathBuf,
        /// Directory of story runs for method Y.
        y: PathBuf,
        /// Where the reports land.
        #[arg(long, default_value = "eval")]
        out: PathBuf,
    },
    /// Word-count statistics for a dataset, or length and failure statistics
    /// for a directory of finished runs.
    Stats { path: PathBuf },
}

#[derive(Args, Debug)]
struct StageArgs {
    /// Storyline text file.
    storyline: PathBuf,
    #[command(flatten)]
    placement: OutputArgs,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Genre of the storyline (ignored for dataset input).
    #[arg(long, default_value = "Drama")]
    genre: String,
    /// Defaults to the storyline file stem.
    #[arg(long)]
    story_id: Option<String>,
    /// Directory that holds one subdirectory per story.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(3);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            match e {
                Error::Config(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(backend) = &cli.backend {
        config.backend = backend.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(mode) = &cli.mode {
        config.mode = Mode::parse(mode)?;
    }
    if cli.no_role_play {
        config.role_play = false;
    }
    if let Some(rounds) = cli.feedback_rounds {
        config.planning.max_feedback_rounds = rounds;
    }
    if let Some(cassette) = &cli.cassette {
        config.cassette = Some(cassette.clone());
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<()> {
    let config = effective_config(&cli)?;
    let registry = BackendRegistry::builtin();
    match &cli.command {
        Command::Synth {
            out,
            per_genre,
            target_words,
        } => {
            let gateway = build_gateway(&config, &registry)?;
            let mut synth_config = SynthConfig::default();
            if let Some(n) = per_genre {
                synth_config.per_genre = *n;
            }
            if let Some(w) = target_words {
                synth_config.target_words = *w;
            }
            let synthesizer =
                Synthesizer::new(&gateway, config.writer_params()?, config.max_retries);
            let dataset = synthesizer.synthesize_dataset(&synth_config)?;
            write_dataset(out, &dataset)?;
            print!("{}", render_stats(&dataset_stats(&dataset)?));
            println!("wrote {} storylines to {}", dataset.len(), out.display());
            report_volume(&gateway);
            Ok(())
        }
        Command::Plan(args) => {
            let (storyline, story_id) = stage_input(args, &cli)?;
            let gateway = build_gateway(&config, &registry)?;
            let run = story_run(&gateway, &config, &args.placement.out, &story_id, &cli);
            let mut state = run.prepare(&storyline)?;
            let planning = planning_for_mode(&config);
            let (characters, outline) = run.ensure_planning(&storyline, &mut state, &planning)?;
            println!(
                "{story_id}: {} characters, {} top plots, {} subplots",
                characters.len(),
                outline.top_plots().len(),
                outline.subplot_count()
            );
            report_volume(&gateway);
            Ok(())
        }
        Command::Expand(args) => {
            let (storyline, story_id) = stage_input(args, &cli)?;
            require_staged_mode(&config, "expand")?;
            let gateway = build_gateway(&config, &registry)?;
            let run = story_run(&gateway, &config, &args.placement.out, &story_id, &cli);
            let mut state = run.prepare(&storyline)?;
            let (characters, outline) = run.load_planning()?;
            let chapters = run.ensure_expansion(&storyline, &characters, &outline, &mut state)?;
            println!("{story_id}: {} chapters", chapters.len());
            report_volume(&gateway);
            Ok(())
        }
        Command::Draft(args) => {
            let (storyline, story_id) = stage_input(args, &cli)?;
            require_staged_mode(&config, "draft")?;
            let gateway = build_gateway(&config, &registry)?;
            let run = story_run(&gateway, &config, &args.placement.out, &story_id, &cli);
            let mut state = run.prepare(&storyline)?;
            let (characters, outline) = run.load_planning()?;
            require_expansion(&state, &run)?;
            let chapters = run.ensure_expansion(&storyline, &characters, &outline, &mut state)?;
            let drafts = run.ensure_drafts(&characters, &outline, &chapters, &mut state)?;
            println!("{story_id}: {} script drafts", drafts.len());
            report_volume(&gateway);
            Ok(())
        }
        Command::Act(args) => {
            let (storyline, story_id) = stage_input(args, &cli)?;
            require_staged_mode(&config, "act")?;
            let gateway = build_gateway(&config, &registry)?;
            let run = story_run(&gateway, &config, &args.placement.out, &story_id, &cli);
            let mut state = run.prepare(&storyline)?;
            let (characters, outline) = run.load_planning()?;
            require_expansion(&state, &run)?;
            let chapters = run.ensure_expansion(&storyline, &characters, &outline, &mut state)?;
            let drafts = run.ensure_drafts(&characters, &outline, &chapters, &mut state)?;
            let realizer = backlot::pipeline::episode_realizer(config.role_play);
            let screenplay =
                run.ensure_episodes(&characters, &outline, &drafts, &mut state, realizer)?;
            println!(
                "{story_id}: {} episodes, {} words",
                screenplay.episodes.len(),
                backlot::story::word_count(&backlot::story::render_screenplay(&screenplay))
            );
            report_volume(&gateway);
            Ok(())
        }
        Command::Run { input, placement } => {
            let gateway = build_gateway(&config, &registry)?;
            if input.is_dir() {
                run_whole_dataset(&gateway, &config, input, placement, &cli)
            } else {
                let storyline = load_storyline(input, &placement.genre)?;
                let story_id = placement
                    .story_id
                    .clone()
                    .unwrap_or_else(|| file_stem(input));
                let run = story_run(&gateway, &config, &placement.out, &story_id, &cli);
                let outcome = run.run(&storyline);
                report_volume(&gateway);
                write_failures(&gateway, &placement.out)?;
                let screenplay = outcome?;
                let words =
                    backlot::story::word_count(&backlot::story::render_screenplay(&screenplay));
                println!(
                    "{story_id}: {} episodes, {words} words -> {}",
                    screenplay.episodes.len(),
                    run.dir.screenplay().display()
                );
                Ok(())
            }
        }
        Command::Eval { x, y, out } => {
            let gateway = build_gateway(&config, &registry)?;
            let outcome = run_eval(&gateway, &config, x, y, out)?;
            print!("{}", outcome.table.render_text());
            if !outcome.dropped.is_empty() {
                println!("dropped top plots: {}", outcome.dropped.join(", "));
            }
            if !outcome.unmatched_stories.is_empty() {
                println!("unmatched stories: {}", outcome.unmatched_stories.join(", "));
            }
            println!("reports in {}", out.display());
            report_volume(&gateway);
            Ok(())
        }
        Command::Stats { path } => stats(path),
    }
}

fn planning_for_mode(config: &PipelineConfig) -> PlanningConfig {
    match config.mode {
        Mode::Hollmwood => config.planning,
        Mode::PlanThenWrite => PlanningConfig {
            max_feedback_rounds: 0,
            ..config.planning
        },
    }
}

fn require_staged_mode(config: &PipelineConfig, stage: &str) -> Result<()> {
    if config.mode == Mode::PlanThenWrite {
        return Err(Error::Config(format!(
            "mode plan-then-write has no {stage} stage; use `backlot run`"
        )));
    }
    Ok(())
}

fn require_expansion(state: &StageState, run: &StoryRun) -> Result<()> {
    if !state.expansion_done {
        return Err(Error::Config(format!(
            "expansion incomplete under {}; run `backlot expand` first",
            run.dir.root.display()
        )));
    }
    Ok(())
}

fn story_run<'g>(
    gateway: &'g Gateway,
    config: &'g PipelineConfig,
    out: &Path,
    story_id: &str,
    cli: &Cli,
) -> StoryRun<'g> {
    let mut run = StoryRun::new(gateway, config, out, story_id);
    run.resume = cli.resume;
    run.force = cli.force;
    run
}

fn stage_input(args: &StageArgs, _cli: &Cli) -> Result<(Storyline, String)> {
    let storyline = load_storyline(&args.storyline, &args.placement.genre)?;
    let story_id = args
        .placement
        .story_id
        .clone()
        .unwrap_or_else(|| file_stem(&args.storyline));
    Ok((storyline, story_id))
}

fn load_storyline(path: &Path, genre: &str) -> Result<Storyline> {
    let genre = Genre::parse(genre)?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read storyline {}: {e}", path.display())))?;
    Storyline::new(genre, text.trim_end())
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "story".to_string())
}

fn run_whole_dataset(
    gateway: &Gateway,
    config: &PipelineConfig,
    input: &Path,
    placement: &OutputArgs,
    cli: &Cli,
) -> Result<()> {
    let dataset = read_dataset(input)?;
    let outcomes = run_dataset(
        gateway,
        config,
        &dataset,
        &placement.out,
        cli.resume,
        cli.force,
    );
    let mut failed = 0usize;
    for (story_id, outcome) in &outcomes {
        match outcome {
            Ok(screenplay) => println!("{story_id}: ok ({} episodes)", screenplay.episodes.len()),
            Err(e) => {
                failed += 1;
                println!("{story_id}: FAILED ({e})");
            }
        }
    }
    println!("{} of {} stories completed", outcomes.len() - failed, outcomes.len());
    report_volume(gateway);
    write_failures(gateway, &placement.out)?;
    match outcomes.into_iter().find_map(|(_, r)| r.err()) {
        Some(first_failure) => Err(first_failure),
        None => Ok(()),
    }
}

fn report_volume(gateway: &Gateway) {
    let volume = gateway.volume();
    println!(
        "volume: {} model calls, {} completion words",
        volume.requests, volume.completion_words
    );
}

fn write_failures(gateway: &Gateway, out: &Path) -> Result<()> {
    if gateway.failures().is_empty() {
        return Ok(());
    }
    fs::create_dir_all(out)?;
    let path = out.join("failures.ndjson");
    gateway.failures().write_ndjson(&path)?;
    println!("failures logged to {}", path.display());
    Ok(())
}

/// Dataset directories get word statistics; run directories get screenplay
/// length statistics plus stage failure rates when a failure log is present.
fn stats(path: &Path) -> Result<()> {
    if path.join("index.tsv").exists() {
        let dataset = read_dataset(path)?;
        print!("{}", render_stats(&dataset_stats(&dataset)?));
        return Ok(());
    }
    let mut items = Vec::new();
    let mut attempted = 0usize;
    for entry in fs::read_dir(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?
    {
        let story_dir = entry?.path();
        let state_path = story_dir.join("state.json");
        if !state_path.exists() {
            continue;
        }
        attempted += 1;
        let Some(state) = StageState::load(&state_path)? else {
            continue;
        };
        let screenplay_path = story_dir.join("screenplay.txt");
        if !screenplay_path.exists() {
            continue;
        }
        let genre = Genre::parse(&state.genre)?;
        let text = fs::read_to_string(&screenplay_path)?;
        items.push(LengthItem::from_text("run", genre, &text));
    }
    if items.is_empty() && attempted == 0 {
        return Err(Error::Config(format!(
            "{} holds neither a dataset index nor story runs",
            path.display()
        )));
    }
    if !items.is_empty() {
        print!("{}", length_stats(&items).render_text());
    }
    let failures_path = path.join("failures.ndjson");
    if failures_path.exists() {
        let (_, stage_failures) = FailureLog::read_ndjson(&failures_path)?;
        let attempted_per_stage: Vec<(Stage, usize)> =
            [Stage::Planning, Stage::Expansion, Stage::Screenplay]
                .into_iter()
                .map(|stage| (stage, attempted))
                .collect();
        let rates: Vec<FailureRate> =
            backlot::eval::failure_rates(&stage_failures, &attempted_per_stage);
        print!("{}", render_failure_rates(&rates));
    }
    Ok(())
}
