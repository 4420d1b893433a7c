//! Storyline synthesis: a small genre-conditioned corpus plus its word-count
//! statistics. One storyline per file, with a TSV index.

use std::fs;
use std::path::Path;

use crate::gateway::{ChatRequest, Gateway, GenParams, Stage};
use crate::prompts;
use crate::story::{extract_storyline_text, storyline_schema, word_count, Genre, Storyline};
use crate::{Error, Result};

/// Soft word bounds a synthesized storyline should land in.
pub const MIN_STORYLINE_WORDS: usize = 50;
pub const MAX_STORYLINE_WORDS: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub genres: Vec<Genre>,
    pub per_genre: usize,
    pub target_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            genres: Genre::all().to_vec(),
            per_genre: 10,
            target_words: 120,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.genres.is_empty() {
            return Err(Error::Config("no genres configured".into()));
        }
        if self.per_genre == 0 {
            return Err(Error::Config("per_genre must be at least 1".into()));
        }
        Ok(())
    }
}

pub struct Synthesizer<'g> {
    gateway: &'g Gateway,
    params: GenParams,
    max_retries: u32,
}

impl<'g> Synthesizer<'g> {
    pub fn new(gateway: &'g Gateway, params: GenParams, max_retries: u32) -> Synthesizer<'g> {
        Synthesizer {
            gateway,
            params,
            max_retries,
        }
    }

    fn request_storyline(
        &self,
        genre: Genre,
        premise_number: usize,
        target_words: usize,
        story_id: &str,
    ) -> Result<Storyline> {
        let request = ChatRequest::user(
            self.params.clone(),
            prompts::SYNTH_SYSTEM,
            prompts::synth_user(genre.name(), target_words, premise_number),
        );
        self.gateway.complete_extract(
            &request,
            &storyline_schema(),
            self.max_retries,
            Stage::Synth,
            story_id,
            |doc| Storyline::new(genre, extract_storyline_text(doc)),
        )
    }

    /// One storyline. A result outside the soft word bounds is regenerated
    /// once, then accepted with a warning.
    pub fn synthesize_storyline(
        &self,
        genre: Genre,
        premise_number: usize,
        config: &SynthConfig,
    ) -> Result<Storyline> {
        let story_id = format!("{}_{:02}", genre.slug(), premise_number);
        let storyline =
            self.request_storyline(genre, premise_number, config.target_words, &story_id)?;
        let words = word_count(&storyline.text);
        if (MIN_STORYLINE_WORDS..=MAX_STORYLINE_WORDS).contains(&words) {
            return Ok(storyline);
        }
        log::info!("{story_id}: {words} words outside soft bounds, regenerating once");
        let retry =
            self.request_storyline(genre, premise_number, config.target_words, &story_id)?;
        let retry_words = word_count(&retry.text);
        if !(MIN_STORYLINE_WORDS..=MAX_STORYLINE_WORDS).contains(&retry_words) {
            log::warn!("{story_id}: still {retry_words} words after regeneration, keeping it");
        }
        Ok(retry)
    }

    /// The whole corpus, genre by genre, in config order.
    pub fn synthesize_dataset(&self, config: &SynthConfig) -> Result<Vec<Storyline>> {
        config.validate()?;
        let mut dataset = Vec::with_capacity(config.genres.len() * config.per_genre);
        for &genre in &config.genres {
            for premise_number in 1..=config.per_genre {
                dataset.push(self.synthesize_storyline(genre, premise_number, config)?);
            }
        }
        Ok(dataset)
    }
}

// ---------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, PartialEq)]
pub struct GenreStats {
    pub genre: Genre,
    pub count: usize,
    pub avg_words: f64,
    pub min_words: usize,
    pub max_words: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    /// Genres in first-seen dataset order.
    pub per_genre: Vec<GenreStats>,
    pub total_count: usize,
    /// Mean over all storylines (equals the size-weighted mean of genre avgs).
    pub total_avg_words: f64,
    pub total_min_words: usize,
    pub total_max_words: usize,
}

pub fn dataset_stats(dataset: &[Storyline]) -> Result<DatasetStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut order: Vec<Genre> = Vec::new();
    for storyline in dataset {
        if !order.contains(&storyline.genre) {
            order.push(storyline.genre);
        }
    }
    let mut per_genre = Vec::with_capacity(order.len());
    for genre in order {
        let counts: Vec<usize> = dataset
            .iter()
            .filter(|s| s.genre == genre)
            .map(|s| word_count(&s.text))
            .collect();
        per_genre.push(GenreStats {
            genre,
            count: counts.len(),
            avg_words: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
            min_words: *counts.iter().min().unwrap(),
            max_words: *counts.iter().max().unwrap(),
        });
    }
    let all: Vec<usize> = dataset.iter().map(|s| word_count(&s.text)).collect();
    Ok(DatasetStats {
        per_genre,
        total_count: all.len(),
        total_avg_words: all.iter().sum::<usize>() as f64 / all.len() as f64,
        total_min_words: *all.iter().min().unwrap(),
        total_max_words: *all.iter().max().unwrap(),
    })
}

pub fn render_stats(stats: &DatasetStats) -> String {
    let mut out = format!(
        "{:<18} {:>5} {:>8} {:>5} {:>5}\n",
        "genre", "n", "avg", "min", "max"
    );
    for row in &stats.per_genre {
        out.push_str(&format!(
            "{:<18} {:>5} {:>8.1} {:>5} {:>5}\n",
            row.genre.name(),
            row.count,
            row.avg_words,
            row.min_words,
            row.max_words
        ));
    }
    out.push_str(&format!(
        "{:<18} {:>5} {:>8.1} {:>5} {:>5}\n",
        "Total",
        stats.total_count,
        stats.total_avg_words,
        stats.total_min_words,
        stats.total_max_words
    ));
    out
}

// ---------------------------------------------------------------------------
// On-disk layout: <slug>_<nn>.txt plus index.tsv ("file<TAB>genre<TAB>words").

pub fn write_dataset(dir: &Path, dataset: &[Storyline]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::new();
    let mut sequence: Vec<(Genre, usize)> = Vec::new();
    for storyline in dataset {
        let n = sequence
            .iter_mut()
            .find(|(g, _)| *g == storyline.genre)
            .map(|(_, n)| {
                *n += 1;
                *n
            })
            .unwrap_or_else(|| {
                sequence.push((storyline.genre, 1));
                1
            });
        let file = format!("{}_{:02}.txt", storyline.genre.slug(), n);
        fs::write(dir.join(&file), &storyline.text)?;
        index.push_str(&format!(
            "{file}\t{}\t{}\n",
            storyline.genre.name(),
            word_count(&storyline.text)
        ));
    }
    fs::write(dir.join("index.tsv"), index)?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Vec<Storyline>> {
    let index = fs::read_to_string(dir.join("index.tsv"))?;
    let mut dataset = Vec::new();
    for line in index.lines().filter(|l| !l.trim().is_empty()) {
        let mut fields = line.split('\t');
        let (file, genre) = match (fields.next(), fields.next()) {
            (Some(f), Some(g)) => (f, g),
            _ => {
                return Err(Error::Config(format!("malformed dataset index line: {line}")));
            }
        };
        let genre = Genre::parse(genre)?;
        let text = fs::read_to_string(dir.join(file))?;
        dataset.push(Storyline::new(genre, text)?);
    }
    if dataset.is_empty() {
        return Err(Error::Config(format!(
            "dataset index {} lists no storylines",
            dir.join("index.tsv").display()
        )));
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;
    use std::time::Duration;

    use super::*;
    use crate::gateway::{
        Backend, FailureLog, MockBackend, RateLimiter, ScriptedBackend, VirtualClock,
    };

    const MARS_STORYLINE: &str = "Set in the not-so-distant future, where humans have colonized Mars but struggle to sustain the population due to an unforeseen food crisis. An intrepid young scientist named Dr. Iris Hawke devises a revolutionary method to grow crops using the Martian soil and irradiated water. Hawke's technology sparks potential not only for survival but the start of an interplanetary agricultural revolution. However, when a potentially deadly pathogen is released from the soil, mutating the crops and causing a lethal disease among the colonists, it's up to Hawke who must use her brilliance to find a cure before the colony, and eventually, humanity falls to this space-bred plague.";

    fn gateway(backend: Arc<dyn Backend>) -> Gateway {
        let clock = Arc::new(VirtualClock::new());
        Gateway::new(
            backend,
            RateLimiter::new(100_000, Duration::from_secs(60), clock),
            Arc::new(FailureLog::default()),
        )
    }

    fn params() -> GenParams {
        GenParams::new("test-model", 1.0, 0.999).unwrap()
    }

    #[test]
    fn fixture_storyline_lands_in_its_genre_band() {
        let reply = format!("<storyline>\n{MARS_STORYLINE}\n</storyline>");
        let gw = gateway(Arc::new(ScriptedBackend::always(reply)));
        let synth = Synthesizer::new(&gw, params(), 2);
        let storyline = synth
            .synthesize_storyline(Genre::ScienceFiction, 1, &SynthConfig::default())
            .unwrap();
        assert_eq!(storyline.genre, Genre::ScienceFiction);
        let words = word_count(&storyline.text);
        assert!((104..=172).contains(&words), "{words} words");
    }

    #[test]
    fn empty_reply_fails_validation() {
        let gw = gateway(Arc::new(ScriptedBackend::always("<storyline>\n</storyline>")));
        let synth = Synthesizer::new(&gw, params(), 0);
        let err = synth
            .synthesize_storyline(Genre::Drama, 1, &SynthConfig::default())
            .unwrap_err();
        match err {
            Error::StructuredOutputFailure { last, .. } => {
                assert_eq!(last.kind(), "ConstraintViolation")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_bounds_storyline_triggers_one_regeneration() {
        let short = "<storyline>\nToo short to count.\n</storyline>";
        let backend = Arc::new(ScriptedBackend::always(short));
        let gw = gateway(backend.clone());
        let synth = Synthesizer::new(&gw, params(), 0);
        let storyline = synth
            .synthesize_storyline(Genre::Comedy, 1, &SynthConfig::default())
            .unwrap();
        assert_eq!(backend.requests().len(), 2, "exactly one regeneration");
        assert_eq!(storyline.text, "Too short to count.");
    }

    #[test]
    fn default_config_yields_sixty_distinct_instances() {
        let gw = gateway(Arc::new(MockBackend::new(13)));
        let synth = Synthesizer::new(&gw, params(), 2);
        let dataset = synth.synthesize_dataset(&SynthConfig::default()).unwrap();
        assert_eq!(dataset.len(), 60);
        for &genre in &Genre::all() {
            assert_eq!(dataset.iter().filter(|s| s.genre == genre).count(), 10);
        }
        let mut texts: Vec<&str> = dataset.iter().map(|s| s.text.as_str()).collect();
        texts.sort_unstable();
        texts.dedup();
        assert_eq!(texts.len(), 60, "instances must differ");
        for storyline in &dataset {
            let words = word_count(&storyline.text);
            assert!(
                (MIN_STORYLINE_WORDS..=MAX_STORYLINE_WORDS).contains(&words),
                "{words} words"
            );
        }
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let no_genres = SynthConfig {
            genres: vec![],
            ..SynthConfig::default()
        };
        assert!(no_genres.validate().is_err());
        let zero_each = SynthConfig {
            per_genre: 0,
            ..SynthConfig::default()
        };
        assert!(zero_each.validate().is_err());
    }

    fn storyline_of(genre: Genre, words: usize) -> Storyline {
        let text = vec!["word"; words].join(" ");
        Storyline::new(genre, text).unwrap()
    }

    #[test]
    fn stats_on_a_single_text_are_degenerate() {
        let stats = dataset_stats(&[storyline_of(Genre::Drama, 100)]).unwrap();
        assert_eq!(stats.per_genre.len(), 1);
        let row = &stats.per_genre[0];
        assert_eq!((row.avg_words, row.min_words, row.max_words), (100.0, 100, 100));
    }

    #[test]
    fn stats_track_extremes_and_weighted_total() {
        let dataset = vec![
            storyline_of(Genre::Comedy, 67),
            storyline_of(Genre::Comedy, 139),
            storyline_of(Genre::ScienceFiction, 203),
            storyline_of(Genre::ScienceFiction, 104),
        ];
        let stats = dataset_stats(&dataset).unwrap();
        assert_eq!(stats.total_min_words, 67);
        assert_eq!(stats.total_max_words, 203);
        let weighted: f64 = stats
            .per_genre
            .iter()
            .map(|g| g.avg_words * g.count as f64)
            .sum::<f64>()
            / stats.total_count as f64;
        assert!((stats.total_avg_words - weighted).abs() < 1e-9);
    }

    #[test]
    fn stats_match_an_independent_recomputation() {
        let gw = gateway(Arc::new(MockBackend::new(29)));
        let synth = Synthesizer::new(&gw, params(), 2);
        let config = SynthConfig {
            per_genre: 4,
            ..SynthConfig::default()
        };
        let dataset = synth.synthesize_dataset(&config).unwrap();
        let stats = dataset_stats(&dataset).unwrap();
        for row in &stats.per_genre {
            let counts: Vec<usize> = dataset
                .iter()
                .filter(|s| s.genre == row.genre)
                .map(|s| s.text.split_whitespace().count())
                .collect();
            assert_eq!(row.count, counts.len());
            assert_eq!(row.min_words, *counts.iter().min().unwrap());
            assert_eq!(row.max_words, *counts.iter().max().unwrap());
            let avg = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            assert!((row.avg_words - avg).abs() < 1e-9);
            assert!(row.min_words as f64 <= row.avg_words);
            assert!(row.avg_words <= row.max_words as f64);
        }
    }

    #[test]
    fn dataset_round_trips_through_disk() {
        let gw = gateway(Arc::new(MockBackend::new(3)));
        let synth = Synthesizer::new(&gw, params(), 2);
        let config = SynthConfig {
            per_genre: 2,
            ..SynthConfig::default()
        };
        let dataset = synth.synthesize_dataset(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &dataset).unwrap();
        assert!(dir.path().join("romance_01.txt").exists());
        assert!(dir.path().join("science_fiction_02.txt").exists());
        let index = std::fs::read_to_string(dir.path().join("index.tsv")).unwrap();
        assert_eq!(index.lines().count(), 12);
        assert!(index.contains("\tScience Fiction\t"));
        let reread = read_dataset(dir.path()).unwrap();
        assert_eq!(reread, dataset);
    }

    #[test]
    fn render_includes_total_row() {
        let stats = dataset_stats(&[
            storyline_of(Genre::Crime, 120),
            storyline_of(Genre::Drama, 130),
        ])
        .unwrap();
        let text = render_stats(&stats);
        assert!(text.contains("Crime"));
        assert!(text.contains("Total"));
        assert!(text.lines().count() >= 4);
    }
}
