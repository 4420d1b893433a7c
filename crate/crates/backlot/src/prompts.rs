//! Prompt templates and per-stage request builders.
//!
//! Every template the pipeline sends is assembled here so the exact wording
//! lives in one place. Builders take pre-rendered tag blocks (no trailing
//! newline required; they trim) and return the finished message text.

/// System prompt for the character-design writer.
pub const CHARACTER_WRITER_SYSTEM: &str = "\
You are a skilled Screenplay Writer from Hollywood specializing in the creation of vivid characters, you excel at developing movie characters for a given preliminary storylines. Your expertise lies in bringing depth to the narrative, ensuring that each character resonates with authenticity.
In the realm of cinematic storytelling, characters hold a pivotal role. Their intrinsic motivations and interactions serve as the driving force behind the entire narrative arc.
The character you are tasked with designing should feature both the character's full name and a succinct introduction.
The character's full name should be realistic and does not include any special symbols.
The character's introduction should be concise yet story-relevant, encompassing aspects such as gender, age, appearance, background, personality traits, experiences, goals, motivations, conflicts, developments, relationships with other characters, and other pertinent details.
The number of characters should be around 3 to 6 and well aligned with the needs of story.";

/// System prompt for the character-feedback editor.
pub const CHARACTER_EDITOR_SYSTEM: &str = "\
You are an Editor with expertise in providing guidance to enhance the Writer's written characters within a movie's storyline.
Your role is to offer constructive advice on improving the story characters (<characters>) written by the Writer based on the provided storyline.
When providing feedback, please pay close attention to the following aspects of character design:
1. Assess whether the designed character introductions align harmoniously with the given storyline.
2. Evaluate the relationships between characters for their reasonableness, depth, interest, and complexity rather than being overly simplistic.
3. Assess if the designed characters are captivating and able to engage the audience effectively.
4. Assess whether the character introductions adhere to logical consistency.
5. Other aspects you consider important.
If you identify any issues in these aspects within the content provided by the Writer, provide precise and concise suggestions for revisions in those problematic areas.

Your advice on how to improve the story characters should follow the format below:
<advice>
Your advice
</advice>
When you feel that there are no more revisions to be made to the current story characters, reply with <advice>None</advice>.
Strictly obey this format and do not generate redundant content!";

/// System prompt for the outline-design writer.
pub const OUTLINE_WRITER_SYSTEM: &str = "\
You are a skilled Screenplay Writer from Hollywood specializing in the creation of compelling outlines, you excel at developing movie outlines for a given preliminary storylines. Your expertise lies in bringing depth to the narrative, ensuring that each plot point is engagingly crafted to keep audiences captivated.
Your task is to create a two-level hierarchical outline. In this structured outline, each top-level plot serves as a concise summary of its corresponding subplots, and subplots are the main events that occur under their corresponding top-level plot.
The top-level plot or subplot consists of Plot, Scene (where the plot happens), Characters (who are involved in that plot). The plot needs to be specific, with dramatic conflict that captures the audience's attention and resonates with them. Characters must be selected from the given list of characters and Characters must be full names in the given list of characters.
Maintain coherence and consistency throughout your two-level hierarchical outline.
IMPORTANT: Make sure that the story outline has a clear ending, whether good or bad, it should keep the audience coming back for more.
The outline you generate should follow the format below:
<outline>
<plot_1>
The content of the top-level bullet plot 1
</plot_1>
<plot_1a>
The content of the subplot 1a
</plot_1a>
<plot_1b>
The content of the subplot 1b
</plot_1b>
...
<plot_2>
The content of the top-level bullet plot 2
</plot_2>
<plot_2a>
The content of the subplot 2a
</plot_2a>
...
</outline>
Here is an example for reference:
<outline>
<plot_1>
Ava discovers the magical app and begins to use it to alter reality, but she soon realizes that the app's magic comes at a terrible price.
Scene: Characters: Ava Rose
</plot_1>
<plot_1a>
Ava discovers the app and starts to use it to improve her life and the lives of her friends.
Scene: the town where Ava lives. Characters: Ava Rose
</plot_1a>
<plot_1b>
Ava's friends become suspicious of her sudden changes and start to distance themselves from her.
Scene: the town where Ava lives. Characters: Ava Rose
</plot_1b>
...
<plot_2>
Ava confides in her best friend, Tess, about the app's dark side, and the two girls try to figure out a way to stop the app's power from consuming Ava's life.
Scene: Characters: Ava Rose, Tess Sawyer
</plot_2>
<plot_2a>
...
</plot_2a>
...
</outline>
Strictly obey the above format and do not generate any redundant content!";

/// System prompt for the outline-feedback editor.
pub const OUTLINE_EDITOR_SYSTEM: &str = "\
You're an Editor who excels at providing insightful guidance to enhance the movie story outline crafted by the Writer.
Your task is to offer advice on how to improve the existing story outline (<outline>) created by the Writer, taking into account the provided storyline (<storyline>) and characters (<characters>) of the story.
When providing feedback, please focus on the following aspects of the outline:
1. Evaluate whether the development of the story outline aligns harmoniously with the storyline and character introductions.
2. Assess whether the contents of the story outline are coherent, and whether there are any conflicts or poor transitions between plot points.
3. Assess whether the outline adheres to logical consistency.
4. Evaluate whether the outline makes up an interesting, engaging, and thought-provoking story.
5. Assess whether the outline has a clear ending.
6. Other aspects you consider important.
If the content written by the Writer has issues in these aspects, you need to provide detailed revision suggestions for the problematic areas concisely. Your advice on how to improve the story outline (<outline>) should follow the format below:
<advice>
Your advice
</advice>
When you feel that there are no more revisions to be made to the current story outline, please reply only with <advice>None</advice>.
Strictly obey this format and do not generate redundant content!";

/// System prompt for chapter expansion.
pub const EXPANSION_SYSTEM: &str = "\
You are a writer, your task is to expand upon one of the story plot points in an existing story outline, transforming it into a complete story chapter while maintaining coherence and consistency with the previous happened story content. The story needs to be specific, with dramatic conflict that captures the audience's attention and resonates with them.";

/// System prompt for adapting a chapter into a script draft.
pub const DRAFT_SYSTEM: &str = "\
You are a scriptwriter, and you need to adapt a given chapter (<chapter>) of a story into a script draft composed of the smallest events that happen sequentially. The adapted script draft consists of two kinds of elements: Scene Heading (<scene_heading>) and Character Performance (<character_performance>) events. The content of Scene Heading (<scene_heading>) describes the location and time of day for a particular scene. It includes three components: INT. (Interior) or EXT. (Exterior), the specific location, and the time of day (DAY or NIGHT or ...). Character Performance (<character_performance>) is a smallest event describing the performance and interactions of individual characters using simple declarative sentences. The content of Character Performance (<character_performance>) includes the character's name (<character>) and the character's performance (<performance>). The character's name (<character>) must be the full name of the provided involved character! The character's performance (<performance>) should align with the character's introduction. The first thing in each script draft must be a Scene Heading (<scene_heading>), indicating the opening scene of the movie chapter. Each script draft has one and only one Scene Heading at the beginning. Following the Scene Heading, there are numerous Character Performance (<character_performance>) events that sequentially take place in that scene. You need to plan the script carefully, generating Scene Heading (<scene_heading>) and then Character Performance (<character_performance>) events step by step and make them sequential narratives. The contents of the script draft should be coherent.";

/// Appended to the expansion prompt when the subplot being expanded is the
/// story's final one.
pub const LAST_PLOT_SENTENCE: &str = "\
The current story plot point you need to expand is the last plot point of the story. So, make sure that your expanded story chapter has a clear end to the story.";

/// Marker appended after a character's name the first time they show up in an
/// expansion request.
pub const FIRST_APPEARANCE_REMARK: &str = "(first appearance in the story)";

pub fn character_design_user(storyline: &str) -> String {
    format!(
        "Design characters that seamlessly integrate with the provided storyline:\n\
         Storyline:\n\
         {storyline}\n\
         \n\
         The characters you design should adhere to the following format:\n\
         <characters>\n\
         <character_1>\n\
         <full_name>character_1's full name</full_name>\n\
         <character_introduction>character_1's introduction</character_introduction>\n\
         </character_1>\n\
         <character_2>\n\
         ...\n\
         </character_2>\n\
         ...\n\
         </characters>\n\
         \n\
         Ensure strictly adherence to the above format and avoid generating superfluous content."
    )
}

pub fn character_feedback_user(storyline: &str, characters_block: &str) -> String {
    let characters_block = characters_block.trim_end();
    format!(
        "Give advice on how to enhance the initial version of the movie story characters written by the Writer based on the following storyline:\n\
         Storyline:\n\
         {storyline}\n\
         \n\
         The initial version of the movie story characters written by the Writer:\n\
         {characters_block}"
    )
}

pub fn character_revision_user(advice: &str, storyline: &str) -> String {
    format!(
        "Here is the Editor's feedback on the story characters you recently generated:\n\
         <advice>\n\
         {advice}\n\
         </advice>\n\
         Please revise your generated story characters based on the advice.\n\
         The storyline originally given to you was:\n\
         Storyline:\n\
         {storyline}\n\
         Keep the format of the story characters same as the one before your revision."
    )
}

pub fn character_feedback_again_user(characters_block: &str, storyline: &str) -> String {
    let characters_block = characters_block.trim_end();
    format!(
        "Here is the Writer's revised story characters based on your recent feedback:\n\
         {characters_block}\n\
         Please give your advice on the revised story characters.\n\
         The original input storyline was:\n\
         {storyline}\n\
         Your advice should follow the format below:\n\
         <advice>\n\
         Your advice\n\
         </advice>\n\
         When you feel that there are no more revisions to be made to the current story characters, please reply only with <advice>None</advice>."
    )
}

pub fn outline_design_user(storyline: &str, characters_block: &str) -> String {
    let characters_block = characters_block.trim_end();
    format!(
        "Generate the outline based on the provided storyline and characters:\n\
         Storyline:\n\
         {storyline}\n\
         Characters:\n\
         {characters_block}\n\
         Strictly obey the given output format and do not generate redundant content!"
    )
}

pub fn outline_feedback_user(storyline: &str, characters_block: &str, outline_block: &str) -> String {
    let characters_block = characters_block.trim_end();
    let outline_block = outline_block.trim_end();
    format!(
        "Give advice on how to improve the initial version of the story outline (<outline>) written by the Writer based on the following storyline (<storyline>) and characters (<characters>):\n\
         Storyline:\n\
         {storyline}\n\
         The based characters:\n\
         {characters_block}\n\
         \n\
         The initial version of the story outline written by the Writer:\n\
         {outline_block}"
    )
}

pub fn outline_revision_user(advice: &str, storyline: &str, characters_block: &str) -> String {
    let characters_block = characters_block.trim_end();
    format!(
        "Here is the Editor's feedback on the story outline you recently wrote:\n\
         <advice>\n\
         {advice}\n\
         </advice>\n\
         Please revise your written story outline based on the advice.\n\
         The storyline and characters originally given to you were:\n\
         Storyline:\n\
         {storyline}\n\
         Characters:\n\
         {characters_block}\n\
         Keep the format of the story outline same as the one before your revision."
    )
}

pub fn outline_feedback_again_user(
    outline_block: &str,
    storyline: &str,
    characters_block: &str,
) -> String {
    let outline_block = outline_block.trim_end();
    let characters_block = characters_block.trim_end();
    format!(
        "Here is the Writer's revised story outline based on your recent feedback:\n\
         {outline_block}\n\
         Please give your advice on the revised story outline.\n\
         The original input storyline and characters were:\n\
         Storyline:\n\
         {storyline}\n\
         Characters:\n\
         {characters_block}\n\
         Your advice should follow the format below:\n\
         <advice>\n\
         Your advice\n\
         </advice>\n\
         When you feel that there are no more revisions to be made to the current story outline, please reply only with <advice>None</advice>."
    )
}

/// User prompt for expanding one subplot into a chapter. `previous_contents`
/// is the already-assembled block of earlier raw plots plus recent chapters;
/// pass "" for the first subplot.
pub fn chapter_expansion_user(
    plot_point: &str,
    storyline: &str,
    scene: &str,
    involved_block: &str,
    previous_contents: &str,
    is_last: bool,
) -> String {
    let involved_block = involved_block.trim_end();
    let mut out = format!(
        "The current story plot point you need to expand is:\n\
         <plot_point>\n\
         {plot_point}\n\
         </plot_point>\n\
         The input storyline is:\n\
         <storyline>\n\
         {storyline}\n\
         </storyline>\n\
         The scene where the current story plot point happens is:\n\
         <scene>{scene}</scene>\n\
         The current story plot point involves the following characters:\n\
         <characters>\n\
         {involved_block}\n\
         </characters>\n\
         The previous story contents that have taken place are as follows:\n"
    );
    let previous_contents = previous_contents.trim_end();
    if !previous_contents.is_empty() {
        out.push_str(previous_contents);
        out.push('\n');
    }
    if is_last {
        out.push_str(LAST_PLOT_SENTENCE);
        out.push('\n');
    }
    out.push_str(
        "Now, please expand the current given story plot point (<plot_point>) in a story outline into a chapter of complete story content which keeps coherent with the previous happened story content. Feel free to add details around the plot point but avoid deviating too far from it. While you have the flexibility to introduce additional details surrounding the plot point, it is essential to stay aligned with the original plot point's core content. To maintain conciseness, the expanded word count should be as minimal as possible, effectively unfolding the plot point while creating a complete story chapter.\n\
         Your output format for the expanded story content should strictly follow:\n\
         <chapter>\n\
         The story chapter you have expanded\n\
         </chapter>\n\
         Please adhere strictly to this format and refrain from including any unnecessary content!",
    );
    out
}

const DRAFT_EXAMPLE: &str = "\
An example of adapting a chapter of story into a script draft is as follows:
<example>

<chapter>
At first light, in Emma Taylor's room, Dorothy Smith serves porridge to persuade Emma Taylor to eat, and Emma Taylor smashes the bowl to show her refusal...
</chapter>

<scene>
Inside Emma Taylor's room.
</scene>

<involved_characters>
Dorothy Smith, Emma Taylor
</involved_characters>

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
<performance>...</performance>
</character_performance>

...

</script_draft>

</example>";

pub fn script_draft_user(chapter: &str, scene: &str, involved_block: &str) -> String {
    let involved_block = involved_block.trim_end();
    format!(
        "{DRAFT_EXAMPLE}\n\
         \n\
         The story chapter (<chapter>) that is now to be adapted into a script draft is:\n\
         <chapter>\n\
         {chapter}\n\
         </chapter>\n\
         The scene (<scene>) in which this chapter of story takes place is:\n\
         <scene>{scene}</scene>\n\
         This story chapter involves the following characters:\n\
         <involved_characters>\n\
         {involved_block}\n\
         </involved_characters>\n\
         So, Character Performance (<character_performance>) events in your written script draft should only involve these characters (<involved_characters>).\n\
         Now, please adapt the current given story chapter (<chapter>) into a script draft composed of the smallest events that happen sequentially. The output format for the script draft should strictly follow:\n\
         <script_draft>\n\
         Your script draft\n\
         </script_draft>\n\
         Please adhere strictly to this format and refrain from including any irrelevant content!"
    )
}

/// System prompt binding an actor to one role for a whole episode.
pub fn actor_system(role_name: &str, role_intro: &str) -> String {
    format!(
        "You are an actor, and the character you will play is:\n\
         <role_name>{role_name}</role_name>.\n\
         Your character introduction is:\n\
         <role_intro>{role_intro}</role_intro>\n\
         You have to interactively act out a script with other characters or act out a script on your own.\n\
         Each time you will be given a rough performance guide (<performance_guide>) of what you should perform. Your task is to execute this rough performance guide (<performance_guide>) as a real actor in the movie. Your performance (<detailed_performance>) should consist of four components: Character (<character>), Action (<action>), Parenthetical (<parenthetical>), and Dialogue (<dialogue>). The Character (<character>) specifies your character name (<role_name>). The Action (<action>) describes the action and event taking place in the current scene. It is written in present tense and provides a visual description of what the audience will see on the screen. The Dialogue (<dialogue>) describes your lines, which the audience will hear. Note that lines need to be as concise and powerful as they are in real movies. The Parenthetical (<parenthetical>) is sometimes used to provide additional direction or information about how a line of dialogue should be delivered. It can be tone of voice, expression, talking to whom, and so on. Some examples of Parenthetical are (cautiously), (to someone), and so on. Depending on the requirements of the performance, some of these three components (Action, Parenthetical, and Dialogue) can be empty in some cases. If some component is empty, you should generate <component></component>. If the content of Dialogue is empty, the content of Parenthetical must also be empty. Your detailed performance (<detailed_performance>) must align with the performance guide, be concise, maintain coherence with the past performance history and reflect your character introduction (<role_intro>)."
    )
}

const ACTOR_EXAMPLES: &str = "\
Some examples of transforming a rough performance guide into a detailed performance are as follows:
<examples>

<example>
<performance_guide>
Dorothy Smith enters the room with the porridge and walks over to Emma Taylor.
</performance_guide>
<scene>
INT.; Inside Emma Taylor's room; DAY.
</scene>

<detailed_performance>
<character>Dorothy Smith</character>
<action>Dorothy Smith enters the room, sets down various dishes, carries a bowl of hot porridge, and walks over to Emma Taylor.</action>
<parenthetical></parenthetical>
<dialogue></dialogue>
</detailed_performance>
</example>

<example>
<performance_guide>
Dorothy Smith cautiously persuades Emma Taylor to eat.
</performance_guide>
<scene>
INT.; Inside Emma Taylor's room; DAY.
</scene>

<detailed_performance>
<character>Dorothy Smith</character>
<action></action>
<parenthetical>(cautiously, to Emma Taylor)</parenthetical>
<dialogue>My miss, you still have to take care of your body, so just eat something.</dialogue>
</detailed_performance>
</example>

<example>
<performance_guide>
Emma Taylor drops her bowl and capriciously says she won't eat.
</performance_guide>
<scene>
INT.; Inside Emma Taylor's room; DAY.
</scene>

<detailed_performance>
<character>Emma Taylor</character>
<action>Emma Taylor slams her bowl on the floor.</action>
<parenthetical>(capriciously, to Dorothy Smith)</parenthetical>
<dialogue>No no no, I just won't eat!</dialogue>
</detailed_performance>
</example>

</examples>";

/// User prompt for one performance event. `act_history` is the rendered block
/// of the episode's previous performances; pass "" for the first event.
pub fn actor_user(guide: &str, scene: &str, involved_block: &str, act_history: &str) -> String {
    let involved_block = involved_block.trim_end();
    let act_history = act_history.trim_end();
    format!(
        "{ACTOR_EXAMPLES}\n\
         \n\
         Now, the performance guide (<performance_guide>) given to you is:\n\
         <performance_guide>\n\
         {guide}\n\
         </performance_guide>\n\
         The scene (<scene>) in which this performance takes place is:\n\
         <scene>{scene}</scene>\n\
         The entire script involves the following character(s):\n\
         <involved_characters>\n\
         {involved_block}\n\
         </involved_characters>\n\
         The history (if any) of the actors' performances regarding the preceding events in the current episode's script draft:\n\
         <act_history>\n\
         {act_history}\n\
         </act_history>\n\
         Your detailed performance should only involve your own performance on the performance guide (<performance_guide>) in detail.\n\
         Now, please transform the current given performance guide (<performance_guide>) into a detailed performance (<detailed_performance>). The output format for your detailed performance should strictly follow:\n\
         <detailed_performance>\n\
         Your detailed performance\n\
         </detailed_performance>\n\
         Please adhere strictly to this format and refrain from including any unnecessary content!"
    )
}

pub fn judge_system(
    storyline: &str,
    characters_block: &str,
    story_summary: &str,
    focus_text: &str,
) -> String {
    let characters_block = characters_block.trim_end();
    format!(
        "Please act as an impartial judge and evaluate the quality of the screenplays generated by two different methods. The two screenplays have the same preliminary storyline:\n\
         <preliminary_storyline>\n\
         {storyline}\n\
         </preliminary_storyline>\n\
         The two screenplays are also based on the same characters:\n\
         {characters_block}\n\
         The two screenplays are also based on the same story summary:\n\
         <story_summary>\n\
         {story_summary}\n\
         </story_summary>\n\
         You should choose the screenplay that have better qualities. Your evaluation should focus on:\n\
         <focus_on>\n\
         {focus_text}\n\
         </focus_on>\n\
         Begin your evaluation by comparing the two screenplays and provide a short explanation. Avoid any position biases and ensure that the order in which the screenplays are presented does not influence your decision. Do not allow the length of the screenplays to influence your evaluation. Be as objective as possible. After providing your explanation (<explanation>Your explanation</explanation>), output your final verdict by strictly following this format:\n\
         <verdict>A</verdict> if story plot A is better, <verdict>B</verdict> if story plot B is better, and <verdict>TIE</verdict> for a tie.\n\
         So your output should follow the following format:\n\
         <explanation>Your explanation</explanation>\n\
         <verdict>A or B or TIE</verdict>\n\
         Strictly obey this format and do not generate redundant content!"
    )
}

pub fn judge_user(screenplay_a: &str, screenplay_b: &str) -> String {
    let screenplay_a = screenplay_a.trim_end();
    let screenplay_b = screenplay_b.trim_end();
    format!(
        "The screenplay A and B are as follows:\n\
         <screenplay_A>\n\
         {screenplay_a}\n\
         </screenplay_A>\n\
         <screenplay_B>\n\
         {screenplay_b}\n\
         </screenplay_B>\n\
         Now give your explanation and verdict!"
    )
}

/// Judge focus text per evaluation dimension.
pub const FOCUS_COHERENCE: &str = "\
Evaluate the coherence from plot structure, character description, scene transitions and setup consistency.";
pub const FOCUS_RELEVANCE: &str = "\
Evaluate the relevance from the relationship between top-level plots and final screenplays.";
pub const FOCUS_INTERESTINGNESS: &str = "\
Evaluate the interestingness from the originality of the screenplay, the unexpectedness of plots, the depth of the characters, and the vividness of the dialog.";
pub const FOCUS_OVERALL: &str = "\
Synthesize the coherence, relevance, and interestingness of a screenplay to assess the overall quality.";

/// System prompt for storyline synthesis. House wording; the upstream corpus
/// was produced once and not published, so this stage only has to yield the
/// same shape of data.
pub const SYNTH_SYSTEM: &str = "\
You are a development executive drafting premises for new movies. Each premise you write is a single prose paragraph that introduces the protagonist, the central conflict, and the stakes, and hints at an arc without resolving it.";

pub fn synth_user(genre_name: &str, target_words: usize, premise_number: usize) -> String {
    format!(
        "Write a preliminary storyline for a {genre_name} movie in approximately {target_words} words.\n\
         This is premise {premise_number} of a slate, so give it a protagonist and conflict distinct from the rest of the slate.\n\
         Your output format should strictly follow:\n\
         <storyline>\n\
         Your storyline\n\
         </storyline>\n\
         Strictly obey this format and do not generate redundant content!"
    )
}

/// System prompt for the single-call episode mode (no per-character actors).
pub const DIRECT_EPISODE_SYSTEM: &str = "\
You are a scriptwriter. You turn a script draft into a finished screenplay episode written in the third person. The episode consists of the draft's Scene Heading (<scene_heading>) followed by one detailed performance (<detailed_performance>) per Character Performance event, in the same order. Each detailed performance has four components: Character (<character>), Action (<action>), Parenthetical (<parenthetical>), and Dialogue (<dialogue>). If some component is empty, you should generate <component></component>. If the content of Dialogue is empty, the content of Parenthetical must also be empty.";

pub fn direct_episode_user(draft_block: &str, involved_block: &str) -> String {
    let draft_block = draft_block.trim_end();
    let involved_block = involved_block.trim_end();
    format!(
        "The script draft to realize is:\n\
         {draft_block}\n\
         The episode involves the following characters:\n\
         <involved_characters>\n\
         {involved_block}\n\
         </involved_characters>\n\
         Now, please realize the whole script draft as one episode. The output format for the episode should strictly follow:\n\
         <episode>\n\
         <scene_heading>The scene heading</scene_heading>\n\
         <detailed_performance>\n\
         <character>The character's full name</character>\n\
         <action>The action</action>\n\
         <parenthetical>The parenthetical</parenthetical>\n\
         <dialogue>The dialogue</dialogue>\n\
         </detailed_performance>\n\
         ...\n\
         </episode>\n\
         Strictly obey this format and do not generate redundant content!"
    )
}

/// System prompt for the single-pass baseline that writes each episode straight
/// from the outline.
pub const PLAN_WRITE_SYSTEM: &str = "\
You are a screenwriter. Given a preliminary storyline, the cast of characters, and a two-level story outline, you write the screenplay episode for one plot point at a time. Each episode starts with one Scene Heading (<scene_heading>) of the form INT. or EXT.; the specific location; the time of day. After the Scene Heading come detailed performances (<detailed_performance>), each with Character (<character>), Action (<action>), Parenthetical (<parenthetical>), and Dialogue (<dialogue>). The Character must be a full name from the given cast. If some component is empty, you should generate <component></component>. If the content of Dialogue is empty, the content of Parenthetical must also be empty.";

/// One-episode example spliced into the single-pass baseline prompt, in the
/// same canonical shape the tag renderer emits.
pub const EXAMPLE_EPISODE: &str = "\
<episode>
<scene_heading>INT.; Inside Emma Taylor's room; DAY.</scene_heading>
<detailed_performance>
<character>Dorothy Smith</character>
<action>Dorothy Smith enters the room, sets down various dishes, carries a bowl of hot porridge, and walks over to Emma Taylor.</action>
<parenthetical></parenthetical>
<dialogue></dialogue>
</detailed_performance>
<detailed_performance>
<character>Dorothy Smith</character>
<action></action>
<parenthetical>(cautiously, to Emma Taylor)</parenthetical>
<dialogue>My miss, you still have to take care of your body, so just eat something.</dialogue>
</detailed_performance>
<detailed_performance>
<character>Emma Taylor</character>
<action>Emma Taylor slams her bowl on the floor.</action>
<parenthetical>(capriciously, to Dorothy Smith)</parenthetical>
<dialogue>No no no, I just won't eat!</dialogue>
</detailed_performance>
</episode>";

pub fn plan_write_episode_user(
    storyline: &str,
    characters_block: &str,
    outline_block: &str,
    plot_tag: &str,
    plot_point: &str,
) -> String {
    let characters_block = characters_block.trim_end();
    let outline_block = outline_block.trim_end();
    format!(
        "An example of a screenplay episode is as follows:\n\
         <example>\n\
         {EXAMPLE_EPISODE}\n\
         </example>\n\
         \n\
         The preliminary storyline is:\n\
         <storyline>\n\
         {storyline}\n\
         </storyline>\n\
         The characters are:\n\
         {characters_block}\n\
         The story outline is:\n\
         {outline_block}\n\
         The plot point to write the current episode for is:\n\
         <plot_point>\n\
         {plot_tag}: {plot_point}\n\
         </plot_point>\n\
         Now, please write the screenplay episode for the current plot point. The output format for the episode should strictly follow:\n\
         <episode>\n\
         Your episode\n\
         </episode>\n\
         Strictly obey this format and do not generate redundant content!"
    )
}

/// Distinctive substrings used to classify a request by the template that
/// produced it. The deterministic offline backend keys on these.
pub mod markers {
    pub const CHARACTER_DESIGN: &str = "Design characters that seamlessly integrate";
    pub const CHARACTER_FEEDBACK: &str =
        "Give advice on how to enhance the initial version of the movie story characters";
    pub const CHARACTER_FEEDBACK_AGAIN: &str =
        "Please give your advice on the revised story characters.";
    pub const CHARACTER_REVISION: &str =
        "Please revise your generated story characters based on the advice.";
    pub const OUTLINE_DESIGN: &str =
        "Generate the outline based on the provided storyline and characters:";
    pub const OUTLINE_FEEDBACK: &str =
        "Give advice on how to improve the initial version of the story outline";
    pub const OUTLINE_FEEDBACK_AGAIN: &str =
        "Please give your advice on the revised story outline.";
    pub const OUTLINE_REVISION: &str =
        "Please revise your written story outline based on the advice.";
    pub const EXPANSION: &str = "Now, please expand the current given story plot point";
    pub const DRAFT: &str = "Now, please adapt the current given story chapter";
    pub const ACT: &str = "Now, please transform the current given performance guide";
    pub const JUDGE: &str = "Now give your explanation and verdict!";
    pub const SYNTH: &str = "Write a preliminary storyline for a";
    pub const DIRECT_EPISODE: &str = "Now, please realize the whole script draft as one episode.";
    pub const PLAN_WRITE: &str =
        "Now, please write the screenplay episode for the current plot point.";
}
