//! Stage 3: adapt each chapter into a script draft, then act the draft out
//! event by event with a shared per-episode performance history. A direct
//! single-call realization backs the no-role-play comparison.

use crate::gateway::{ChatRequest, FailureRecord, Gateway, GenParams, Stage};
use crate::prompts;
use crate::story::{
    detailed_performance_schema, episode_schema, extract_episode_performances,
    extract_performance, extract_script_draft, performance_to_tags, render, script_draft_schema,
    script_draft_to_tags, Chapter, Character, CharacterSet, DetailedPerformance, DraftEvent,
    Episode, Outline, Screenplay, ScriptDraft, SceneHeading,
};
use crate::{Error, Result};

/// One character's standing brief for an episode, plus the shared history
/// visible at this point in the acting order.
pub struct ActorContext<'a> {
    pub role_name: &'a str,
    pub role_intro: &'a str,
    pub involved_block: &'a str,
    pub act_history: &'a [(DraftEvent, DetailedPerformance)],
}

/// `Name: introduction` lines for a stage-3 characters block.
pub fn intro_block(involved: &[Character]) -> String {
    involved
        .iter()
        .map(|c| format!("{}: {}", c.full_name, c.introduction))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The act-history block: prior performances of this episode rendered in
/// order. The paired guides stay in the data structure for inspection but do
/// not repeat in the prompt, which already carried them.
fn render_act_history(history: &[(DraftEvent, DetailedPerformance)]) -> String {
    history
        .iter()
        .map(|(_, p)| render(&performance_to_tags(p)))
        .collect::<String>()
}

/// Drives Stage 3 against the gateway.
pub struct Production<'g> {
    gateway: &'g Gateway,
    params: GenParams,
    story_id: String,
    max_retries: u32,
}

impl<'g> Production<'g> {
    pub fn new(
        gateway: &'g Gateway,
        params: GenParams,
        max_retries: u32,
        story_id: impl Into<String>,
    ) -> Production<'g> {
        Production {
            gateway,
            params,
            story_id: story_id.into(),
            max_retries,
        }
    }

    /// Adapts one chapter into a heading plus ordered single-character events.
    pub fn draft_script(
        &self,
        chapter: &Chapter,
        scene: &str,
        involved: &[Character],
    ) -> Result<ScriptDraft> {
        let request = ChatRequest::user(
            self.params.clone(),
            prompts::DRAFT_SYSTEM,
            prompts::script_draft_user(&chapter.text, scene, &intro_block(involved)),
        );
        let label = chapter.label.clone();
        let names: Vec<String> = involved.iter().map(|c| c.full_name.clone()).collect();
        self.gateway.complete_extract(
            &request,
            &script_draft_schema(),
            self.max_retries,
            Stage::Screenplay,
            &self.story_id,
            move |doc| extract_script_draft(doc, label.clone(), &names),
        )
    }

    /// One acting turn. A reply that plays the wrong character gets a single
    /// corrective follow-up before the call fails.
    pub fn perform_event(
        &self,
        actor: &ActorContext,
        event: &DraftEvent,
        heading: &SceneHeading,
    ) -> Result<DetailedPerformance> {
        if event.character != actor.role_name {
            return Err(Error::RoleMismatch {
                expected: event.character.clone(),
                found: actor.role_name.to_string(),
            });
        }
        let mut request = ChatRequest::user(
            self.params.clone(),
            prompts::actor_system(actor.role_name, actor.role_intro),
            prompts::actor_user(
                &event.performance_guide,
                &heading.render_line(),
                actor.involved_block,
                &render_act_history(actor.act_history),
            ),
        );
        let performance = self.complete_performance(&request)?;
        if performance.character == actor.role_name {
            return Ok(performance);
        }
        self.gateway.failures().record_attempt(FailureRecord {
            stage: Stage::Screenplay,
            attempt: 1,
            error_kind: "RoleMismatch".into(),
            story_id: self.story_id.clone(),
        });
        request.extend_exchange(
            render(&performance_to_tags(&performance)).trim_end().to_string(),
            format!(
                "You must play {}, not any other character. Please redo the detailed performance in the same format.",
                actor.role_name
            ),
        );
        let retried = self.complete_performance(&request)?;
        if retried.character == actor.role_name {
            Ok(retried)
        } else {
            Err(Error::RoleMismatch {
                expected: actor.role_name.to_string(),
                found: retried.character,
            })
        }
    }

    fn complete_performance(&self, request: &ChatRequest) -> Result<DetailedPerformance> {
        self.gateway.complete_extract(
            request,
            &detailed_performance_schema(),
            self.max_retries,
            Stage::Screenplay,
            &self.story_id,
            extract_performance,
        )
    }

    /// Acts a draft out sequentially. Every performance joins one shared
    /// history, so the actor of event k sees exactly the k-1 earlier ones.
    pub fn role_play_episode(
        &self,
        draft: &ScriptDraft,
        involved: &[Character],
    ) -> Result<Episode> {
        let block = intro_block(involved);
        let mut history: Vec<(DraftEvent, DetailedPerformance)> =
            Vec::with_capacity(draft.events.len());
        for event in &draft.events {
            let character = involved
                .iter()
                .find(|c| c.full_name == event.character)
                .ok_or_else(|| Error::ForeignCharacter {
                    name: event.character.clone(),
                })?;
            let actor = ActorContext {
                role_name: &character.full_name,
                role_intro: &character.introduction,
                involved_block: &block,
                act_history: &history,
            };
            let performance = self.perform_event(&actor, event, &draft.heading)?;
            history.push((event.clone(), performance));
        }
        let performances = history.into_iter().map(|(_, p)| p).collect();
        Episode::new(draft.subplot_label.clone(), draft.heading.clone(), performances)
    }

    /// Realizes the whole draft in one third-person call. The heading always
    /// comes from the draft; the model cannot move the scene.
    pub fn direct_episode(&self, draft: &ScriptDraft, involved: &[Character]) -> Result<Episode> {
        let draft_block = render(&script_draft_to_tags(draft)).trim_end().to_string();
        let request = ChatRequest::user(
            self.params.clone(),
            prompts::DIRECT_EPISODE_SYSTEM,
            prompts::direct_episode_user(&draft_block, &intro_block(involved)),
        );
        let names: Vec<String> = involved.iter().map(|c| c.full_name.clone()).collect();
        let performances = self.gateway.complete_extract(
            &request,
            &episode_schema(),
            self.max_retries,
            Stage::Screenplay,
            &self.story_id,
            move |doc| {
                let performances = extract_episode_performances(doc)?;
                for p in &performances {
                    if !names.iter().any(|n| n == &p.character) {
                        return Err(Error::ForeignCharacter {
                            name: p.character.clone(),
                        });
                    }
                }
                Ok(performances)
            },
        )?;
        Episode::new(draft.subplot_label.clone(), draft.heading.clone(), performances)
    }
}

/// How a draft becomes an episode: sequential role-play, or one direct call.
pub trait EpisodeRealizer: Send + Sync {
    fn name(&self) -> &'static str;
    fn realize(
        &self,
        production: &Production,
        draft: &ScriptDraft,
        involved: &[Character],
    ) -> Result<Episode>;
}

pub struct RolePlayRealizer;

impl EpisodeRealizer for RolePlayRealizer {
    fn name(&self) -> &'static str {
        "role_play"
    }

    fn realize(
        &self,
        production: &Production,
        draft: &ScriptDraft,
        involved: &[Character],
    ) -> Result<Episode> {
        production.role_play_episode(draft, involved)
    }
}

pub struct DirectRealizer;

impl EpisodeRealizer for DirectRealizer {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn realize(
        &self,
        production: &Production,
        draft: &ScriptDraft,
        involved: &[Character],
    ) -> Result<Episode> {
        production.direct_episode(draft, involved)
    }
}

/// Characters a subplot involves, in cast order.
pub fn involved_characters(cast: &CharacterSet, names: &[String]) -> Result<Vec<Character>> {
    names
        .iter()
        .map(|name| {
            cast.get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownCharacterName { name: name.clone() })
        })
        .collect()
}

/// Puts episodes in outline order and checks the one-per-subplot contract.
pub fn assemble_screenplay(episodes: Vec<Episode>, outline: &Outline) -> Result<Screenplay> {
    let mut pool: Vec<Option<Episode>> = episodes.into_iter().map(Some).collect();
    let mut ordered = Vec::with_capacity(outline.subplot_count());
    for subplot in outline.subplots() {
        let mut found = None;
        for slot in pool.iter_mut() {
            if slot.as_ref().map(|e| e.subplot_label == subplot.label) == Some(true) {
                if found.is_some() {
                    return Err(Error::DuplicateEpisode {
                        label: subplot.label.to_string(),
                    });
                }
                found = slot.take();
            }
        }
        ordered.push(found.ok_or_else(|| Error::MissingEpisode {
            label: subplot.label.to_string(),
        })?);
    }
    if let Some(extra) = pool.into_iter().flatten().next() {
        return Err(Error::UnknownLabel {
            label: extra.subplot_label.to_string(),
        });
    }
    Ok(Screenplay { episodes: ordered })
}

#[cfg(test)]
mod tests {
    use std::sync::{Arc, Mutex};
    use std::time::Duration;

    use super::*;
    use crate::gateway::{
        Backend, FailureLog, FnBackend, MockBackend, RateLimiter, ScriptedBackend, VirtualClock,
    };
    use crate::story::{render_episode_text, render_screenplay, word_count, Placement, PlotLabel, Subplot, TopPlot};

    const PORRIDGE_DRAFT: &str = "\
<script_draft>
<scene_heading>
INT.; Inside Emma Taylor's room; DAY.
</scene_heading>
<character_performance>
<character>Dorothy Smith</character>
<performance>Dorothy Smith enters the room and walks over to Emma with porridge to persuade Emma to eat.</performance>
</character_performance>
<character_performance>
<character>Emma Taylor</character>
<performance>Emma smashes the bowl, saying she won't eat.</performance>
</character_performance>
<character_performance>
<character>Dorothy Smith</character>
<performance>Dorothy Smith cautiously persuades Emma Taylor to eat.</performance>
</character_performance>
</script_draft>";

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

    fn household() -> Vec<Character> {
        vec![
            Character::new("Dorothy Smith", "A devoted housekeeper in her fifties.").unwrap(),
            Character::new("Emma Taylor", "A stubborn young heiress.").unwrap(),
        ]
    }

    fn porridge_chapter() -> Chapter {
        Chapter::new(
            PlotLabel::sub(1, 'a').unwrap(),
            "At first light, Dorothy Smith serves porridge to persuade Emma Taylor to eat, \
             and Emma Taylor smashes the bowl to show her refusal.",
        )
        .unwrap()
    }

    fn porridge_draft() -> ScriptDraft {
        ScriptDraft::new(
            PlotLabel::sub(1, 'a').unwrap(),
            SceneHeading::new(Placement::Int, "Inside Emma Taylor's room", "DAY").unwrap(),
            vec![
                DraftEvent {
                    character: "Dorothy Smith".into(),
                    performance_guide: "Dorothy Smith enters the room with the porridge.".into(),
                },
                DraftEvent {
                    character: "Emma Taylor".into(),
                    performance_guide: "Emma Taylor smashes the bowl.".into(),
                },
                DraftEvent {
                    character: "Dorothy Smith".into(),
                    performance_guide: "Dorothy Smith cautiously persuades Emma Taylor to eat.".into(),
                },
            ],
        )
        .unwrap()
    }

    fn performance_tags(character: &str, action: &str, paren: &str, dialogue: &str) -> String {
        format!(
            "<detailed_performance>\n<character>{character}</character>\n<action>{action}</action>\n<parenthetical>{paren}</parenthetical>\n<dialogue>{dialogue}</dialogue>\n</detailed_performance>"
        )
    }

    #[test]
    fn porridge_draft_reply_parses_heading_and_events() {
        let gw = gateway(Arc::new(ScriptedBackend::always(PORRIDGE_DRAFT)));
        let production = Production::new(&gw, params(), 2, "s1");
        let draft = production
            .draft_script(&porridge_chapter(), "Inside Emma Taylor's room", &household())
            .unwrap();
        assert_eq!(draft.heading.placement, Placement::Int);
        assert_eq!(draft.heading.location, "Inside Emma Taylor's room");
        assert_eq!(draft.heading.time_of_day, "DAY");
        assert_eq!(draft.events.len(), 3);
        assert_eq!(draft.events[0].character, "Dorothy Smith");
        assert_eq!(draft.heading.render_line(), "INT.; Inside Emma Taylor's room; DAY.");
    }

    #[test]
    fn foreign_character_in_draft_is_rejected() {
        let reply = PORRIDGE_DRAFT.replace("Emma Taylor</character>", "Nobody</character>");
        let gw = gateway(Arc::new(ScriptedBackend::always(reply)));
        let production = Production::new(&gw, params(), 0, "s1");
        let err = production
            .draft_script(&porridge_chapter(), "Inside Emma Taylor's room", &household())
            .unwrap_err();
        match err {
            Error::StructuredOutputFailure { last, .. } => {
                assert_eq!(last.kind(), "ForeignCharacter")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn draft_without_leading_heading_is_rejected() {
        let headingless = "<script_draft>\n<character_performance>\n<character>Dorothy Smith</character>\n<performance>Enters.</performance>\n</character_performance>\n</script_draft>";
        let gw = gateway(Arc::new(ScriptedBackend::always(headingless)));
        let production = Production::new(&gw, params(), 0, "s1");
        let err = production
            .draft_script(&porridge_chapter(), "room", &household())
            .unwrap_err();
        match err {
            Error::StructuredOutputFailure { last, .. } => {
                assert_eq!(last.kind(), "MissingSceneHeading")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn performance_keeps_dialogue_and_strips_parens() {
        let reply = performance_tags(
            "Dorothy Smith",
            "",
            "(cautiously, to Emma Taylor)",
            "My miss, you still have to take care of your body, so just eat something.",
        );
        let gw = gateway(Arc::new(ScriptedBackend::always(reply)));
        let production = Production::new(&gw, params(), 2, "s1");
        let draft = porridge_draft();
        let involved = household();
        let block = intro_block(&involved);
        let actor = ActorContext {
            role_name: "Dorothy Smith",
            role_intro: "A devoted housekeeper in her fifties.",
            involved_block: &block,
            act_history: &[],
        };
        let event = DraftEvent {
            character: "Dorothy Smith".into(),
            performance_guide: "Dorothy Smith cautiously persuades Emma Taylor to eat.".into(),
        };
        let performance = production.perform_event(&actor, &event, &draft.heading).unwrap();
        assert_eq!(performance.parenthetical, "cautiously, to Emma Taylor");
        assert!(!performance.dialogue.is_empty());
    }

    #[test]
    fn action_only_performance_is_valid() {
        let reply = performance_tags("Dorothy Smith", "Dorothy Smith enters the room.", "", "");
        let gw = gateway(Arc::new(ScriptedBackend::always(reply)));
        let production = Production::new(&gw, params(), 0, "s1");
        let draft = porridge_draft();
        let involved = household();
        let block = intro_block(&involved);
        let actor = ActorContext {
            role_name: "Dorothy Smith",
            role_intro: "A devoted housekeeper.",
            involved_block: &block,
            act_history: &[],
        };
        let performance = production
            .perform_event(&actor, &draft.events[0], &draft.heading)
            .unwrap();
        assert!(performance.parenthetical.is_empty());
        assert!(performance.dialogue.is_empty());
    }

    #[test]
    fn parenthetical_without_dialogue_is_rejected() {
        let reply = performance_tags("Dorothy Smith", "Dorothy nods.", "(wearily)", "");
        let gw = gateway(Arc::new(ScriptedBackend::always(reply)));
        let production = Production::new(&gw, params(), 0, "s1");
        let draft = porridge_draft();
        let involved = household();
        let block = intro_block(&involved);
        let actor = ActorContext {
            role_name: "Dorothy Smith",
            role_intro: "A devoted housekeeper.",
            involved_block: &block,
            act_history: &[],
        };
        let err = production
            .perform_event(&actor, &draft.events[0], &draft.heading)
            .unwrap_err();
        match err {
            Error::StructuredOutputFailure { last, .. } => {
                assert_eq!(last.kind(), "ConstraintViolation")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn role_play_realizes_every_event_in_order() {
        let gw = gateway(Arc::new(MockBackend::new(7)));
        let production = Production::new(&gw, params(), 2, "s1");
        let draft = porridge_draft();
        let episode = production.role_play_episode(&draft, &household()).unwrap();
        assert_eq!(episode.performances.len(), draft.events.len());
        for (event, performance) in draft.events.iter().zip(&episode.performances) {
            assert_eq!(event.character, performance.character);
        }
        assert_eq!(episode.heading, draft.heading);
    }

    #[test]
    fn actor_k_sees_exactly_k_minus_1_prior_performances() {
        let captured: Arc<Mutex<Vec<ChatRequest>>> = Arc::new(Mutex::new(Vec::new()));
        let inner = MockBackend::new(7);
        let sink = captured.clone();
        let gw = gateway(Arc::new(FnBackend::new(move |_, req| {
            sink.lock().unwrap().push(req.clone());
            inner.complete(req)
        })));
        let production = Production::new(&gw, params(), 2, "s1");
        let first = porridge_draft();
        production.role_play_episode(&first, &household()).unwrap();
        let mut second = porridge_draft();
        second.subplot_label = PlotLabel::sub(1, 'b').unwrap();
        production.role_play_episode(&second, &household()).unwrap();

        let requests = captured.lock().unwrap();
        assert_eq!(requests.len(), 6);
        for (i, request) in requests.iter().enumerate() {
            let user = &request.turns.last().unwrap().content;
            let history = user
                .split("<act_history>")
                .nth(1)
                .and_then(|rest| rest.split("</act_history>").next())
                .unwrap();
            let seen = history.matches("<detailed_performance>").count();
            assert_eq!(seen, i % 3, "event {} of episode {}", i % 3 + 1, i / 3 + 1);
        }
    }

    #[test]
    fn wrong_role_gets_one_corrective_retry() {
        let wrong = performance_tags("Emma Taylor", "Emma Taylor sulks.", "", "");
        let right = performance_tags("Dorothy Smith", "Dorothy Smith enters.", "", "");
        let backend = Arc::new(ScriptedBackend::new(vec![wrong.clone(), right]));
        let gw = gateway(backend.clone());
        let production = Production::new(&gw, params(), 0, "s1");
        let draft = porridge_draft();
        let involved = household();
        let block = intro_block(&involved);
        let actor = ActorContext {
            role_name: "Dorothy Smith",
            role_intro: "A devoted housekeeper.",
            involved_block: &block,
            act_history: &[],
        };
        let performance = production
            .perform_event(&actor, &draft.events[0], &draft.heading)
            .unwrap();
        assert_eq!(performance.character, "Dorothy Smith");
        let requests = backend.requests();
        assert_eq!(requests.len(), 2);
        assert_eq!(requests[1].turns.len(), 3);
        assert!(requests[1].turns[2].content.contains("You must play Dorothy Smith"));
        let kinds: Vec<String> =
            gw.failures().attempts().iter().map(|a| a.error_kind.clone()).collect();
        assert_eq!(kinds, ["RoleMismatch"]);
    }

    #[test]
    fn persistent_wrong_role_fails() {
        let wrong = performance_tags("Emma Taylor", "Emma Taylor sulks.", "", "");
        let gw = gateway(Arc::new(ScriptedBackend::always(wrong)));
        let production = Production::new(&gw, params(), 0, "s1");
        let draft = porridge_draft();
        let involved = household();
        let block = intro_block(&involved);
        let actor = ActorContext {
            role_name: "Dorothy Smith",
            role_intro: "A devoted housekeeper.",
            involved_block: &block,
            act_history: &[],
        };
        let err = production
            .perform_event(&actor, &draft.events[0], &draft.heading)
            .unwrap_err();
        assert_eq!(err.kind(), "RoleMismatch");
    }

    #[test]
    fn direct_episode_keeps_the_draft_heading() {
        let gw = gateway(Arc::new(MockBackend::new(7)));
        let production = Production::new(&gw, params(), 2, "s1");
        let draft = porridge_draft();
        let episode = production.direct_episode(&draft, &household()).unwrap();
        assert_eq!(episode.heading, draft.heading);
        assert!(!episode.performances.is_empty());
        for p in &episode.performances {
            assert!(household().iter().any(|c| c.full_name == p.character));
        }
    }

    #[test]
    fn direct_episode_rejects_foreign_characters() {
        let reply = format!(
            "<episode>\n<scene_heading>INT.; a room; DAY.</scene_heading>\n{}\n</episode>",
            performance_tags("An Impostor", "Skulks.", "", "")
        );
        let gw = gateway(Arc::new(ScriptedBackend::always(reply)));
        let production = Production::new(&gw, params(), 0, "s1");
        let err = production.direct_episode(&porridge_draft(), &household()).unwrap_err();
        match err {
            Error::StructuredOutputFailure { last, .. } => {
                assert_eq!(last.kind(), "ForeignCharacter")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    fn tiny_outline() -> Outline {
        let sub = |t: usize, l: char| {
            Subplot::new(
                PlotLabel::sub(t, l).unwrap(),
                format!("Beat {t}{l}."),
                "a room",
                vec!["Dorothy Smith".to_string()],
            )
            .unwrap()
        };
        Outline::new(vec![
            TopPlot::new(
                PlotLabel::top(1).unwrap(),
                "Act one.",
                "",
                vec!["Dorothy Smith".to_string()],
                vec![sub(1, 'a'), sub(1, 'b')],
            )
            .unwrap(),
            TopPlot::new(
                PlotLabel::top(2).unwrap(),
                "Act two.",
                "",
                vec!["Dorothy Smith".to_string()],
                vec![sub(2, 'a')],
            )
            .unwrap(),
        ])
        .unwrap()
    }

    fn episode_for(label: PlotLabel) -> Episode {
        Episode::new(
            label,
            SceneHeading::new(Placement::Int, "a room", "DAY").unwrap(),
            vec![DetailedPerformance::new(
                "Dorothy Smith",
                "Dorothy Smith paces.",
                "",
                "",
            )
            .unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn assemble_orders_episodes_by_outline() {
        let outline = tiny_outline();
        let episodes = vec![
            episode_for(PlotLabel::sub(2, 'a').unwrap()),
            episode_for(PlotLabel::sub(1, 'a').unwrap()),
            episode_for(PlotLabel::sub(1, 'b').unwrap()),
        ];
        let screenplay = assemble_screenplay(episodes, &outline).unwrap();
        let labels: Vec<String> = screenplay
            .episodes
            .iter()
            .map(|e| e.subplot_label.to_string())
            .collect();
        assert_eq!(labels, ["plot_1a", "plot_1b", "plot_2a"]);
    }

    #[test]
    fn assemble_rejects_missing_and_duplicate_episodes() {
        let outline = tiny_outline();
        let missing = vec![
            episode_for(PlotLabel::sub(1, 'a').unwrap()),
            episode_for(PlotLabel::sub(2, 'a').unwrap()),
        ];
        assert_eq!(
            assemble_screenplay(missing, &outline).unwrap_err().kind(),
            "MissingEpisode"
        );
        let duplicated = vec![
            episode_for(PlotLabel::sub(1, 'a').unwrap()),
            episode_for(PlotLabel::sub(1, 'a').unwrap()),
            episode_for(PlotLabel::sub(1, 'b').unwrap()),
            episode_for(PlotLabel::sub(2, 'a').unwrap()),
        ];
        assert_eq!(
            assemble_screenplay(duplicated, &outline).unwrap_err().kind(),
            "DuplicateEpisode"
        );
    }

    #[test]
    fn screenplay_word_count_is_additive_over_episodes() {
        let outline = tiny_outline();
        let episodes = vec![
            episode_for(PlotLabel::sub(1, 'a').unwrap()),
            episode_for(PlotLabel::sub(1, 'b').unwrap()),
            episode_for(PlotLabel::sub(2, 'a').unwrap()),
        ];
        let per_episode: usize = episodes
            .iter()
            .map(|e| word_count(&render_episode_text(e)))
            .sum();
        let screenplay = assemble_screenplay(episodes, &outline).unwrap();
        assert_eq!(word_count(&render_screenplay(&screenplay)), per_episode);
    }
}
