"""Prompt templates for the four construction operators.

Slots use :meth:`str.format`; literal braces in the JSON skeletons are doubled.
"""

FACT_PROMPT = """Generate a structured fact for the following interaction content:

{interaction}

Generate the structured fact by:
1. Identifying the most salient keywords (focus on nouns, verbs, and key concepts)
2. Extracting core themes and contextual elements
3. Creating relevant categorical tags

Format the response as a JSON object:
{{
    "keywords": ["keyword1", "keyword2", ...],
    "context": "one sentence summarizing the interaction content",
    "tags": ["tag1", "tag2", ...]
}}"""

SCENE_PROMPT = """You are a scene synthesizer specialized in factual comprehension.

Task: Summarize a cluster of related factual memories into a coherent 'Scene Memory'.

Input factual memories:
{facts_content}

Instructions:
1. Identify the core theme connecting these facts.
2. Generate a descriptive summary capturing the progression of conversational facts.
3. Extract key entities and topics.

Format the response as a JSON object:
{{
    "scene_memory": "A comprehensive summarized scene",
    "keywords": ["keyword1", "keyword2", ...],
    "tags": ["tag1", "tag2", ...]
}}"""

PERSONA_PROMPT = """You are a persona synthesizer specialized in psychological and behavioral analysis.

Task: Create a COMPREHENSIVE User persona based on the provided scene memories.
Focus dimension: {dimension} ({dimension_instruction})

Input Scenes:
{all_scenes_content}

Instructions:
1. Analyze these scenes deeply. Look for patterns in behavior, emotion, and choices.
2. For each dimension below, write a DETAILED paragraph (5-10 sentences). Do not be brief.
3. Use specific examples from the scenes to support your analysis.

Format the response as a JSON object:
{{
    "basic_info": "Detailed background...",
    "interests": "Comprehensive list of hobbies and how they engage with them...",
    "personality": "In-depth personality analysis...",
    "values": "Core beliefs and motivations...",
    "relationships": "Detailed social dynamics..."
}}"""

CALIBRATION_PROMPT = """You are a scene memory calibrator. Your goal is to align the given scene to the user's persona.

Persona-level memory:
{user_persona}

Scene-level memory:
{current_scene}

Instructions:
1. Read the persona-level memory to understand the user's key interests, values, and traits.
2. Check the current scene-level memory. Does it fail to mention any specific connection to the user persona that is likely present in the scene?
3. If yes, add a compensatory condition to append to the original scene. This addition should explicitly align the scene to the persona (e.g., "This aligns with her interest in ...").
4. CRITICAL: DO NOT REWRITE the existing summary. ONLY generate text to ADD.
5. If the current summary is already perfect, return an empty string for "added condition".

Format the response as a JSON object:
{{
    "needs_calibration": true/false,
    "added condition": "Text to add (or empty string) as a condition",
    "reason": "The reason why you decide to calibrate."
}}"""

ANSWER_PROMPT = """Answer the question using the memories below. They are grouped into the user's persona, thematic scenes, and individual facts with timestamps.

Memories:
{context}

Question: {query}

Answer concisely with a short phrase taken from the memories where possible."""

JSON_REMINDER = "Return valid JSON only, with exactly the fields requested above and no other text."

DIMENSION_INSTRUCTIONS = {
    "basic_info": "name, age, occupation, and location",
    "interests": "hobbies, likes, and dislikes",
    "personality": "personality traits and emotional patterns",
    "values": "core values, beliefs, and motivations",
    "relationships": "key social relationships",
}
