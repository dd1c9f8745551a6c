"""Prompt templates for the LLM-backed construction and answering steps.

All templates are plain ASCII with "\n" separators and stable wording,
so rendered prompts are byte-stable and safe to pin in golden tests.
Each template opens with a distinctive header line that scripted mock
LLMs can pattern-match on.
"""

from __future__ import annotations

RECAPTION_HEADER = "Task: rewrite a caption into a knowledge-dense caption."

RECAPTION_TEMPLATE = (
    RECAPTION_HEADER + "\n"
    "Use the video title and description to add precise, factual detail\n"
    "to the caption: name the specific objects, species, instruments or\n"
    "activities involved. Keep it to one or two sentences. Return only\n"
    "the rewritten caption.\n"
    "Caption: {caption}\n"
    "Title: {title}\n"
    "Description: {description}\n"
)

TRIPLET_HEADER = "Task: extract knowledge triplets from a caption."

TRIPLET_TEMPLATE = (
    TRIPLET_HEADER + "\n"
    "Return up to {count} triplets, one per line, formatted exactly as\n"
    "(head; relation; tail). Heads and tails must be concrete concepts\n"
    "mentioned in the caption.\n"
    "Examples:\n"
    "Caption: a border collie herds sheep across a green field\n"
    "(border collie; herds; sheep)\n"
    "(border collie; IsA; dog breed)\n"
    "Caption: a violinist performs a solo in a concert hall\n"
    "(violinist; performs in; concert hall)\n"
    "(violin; IsA; string instrument)\n"
    "Caption: {caption}\n"
)

DESCRIPTION_HEADER = "Task: define a concept."

DESCRIPTION_TEMPLATE = (
    DESCRIPTION_HEADER + "\n"
    "Write up to {count} short encyclopedic definitions of the concept\n"
    "below, one per line, each covering a distinct sense. Return only\n"
    "the definitions.\n"
    "Concept: {concept}\n"
)

ANSWER_HEADER = (
    "You are given concept descriptions retrieved from a multimodal knowledge graph."
)

ANSWER_KNOWLEDGE_PREAMBLE = (
    ANSWER_HEADER + "\n"
    "Use them only when they are relevant to the question, and answer concisely.\n"
)

ANSWER_NO_KNOWLEDGE_PREAMBLE = (
    "No relevant knowledge was retrieved for this question.\n"
    "Answer from the query content alone, and answer concisely.\n"
)


def render_recaption_prompt(caption: str, title: str, description: str) -> str:
    return RECAPTION_TEMPLATE.format(caption=caption, title=title, description=description)


def render_triplet_prompt(caption: str, count: int = 5) -> str:
    return TRIPLET_TEMPLATE.format(caption=caption, count=count)


def render_description_prompt(concept: str, count: int = 5) -> str:
    return DESCRIPTION_TEMPLATE.format(concept=concept, count=count)


def render_answer_prompt(question: str, pairs: list[tuple[str, str, str, str]]) -> str:
    """Assemble the augmented-generation prompt.

    `pairs` holds (head, head_description, tail, tail_description) in hit
    order; with no pairs the no-knowledge preamble is used instead.
    """
    lines: list[str] = []
    if pairs:
        lines.append(ANSWER_KNOWLEDGE_PREAMBLE)
        for head, head_desc, tail, tail_desc in pairs:
            lines.append(f"Concept: {head} - {head_desc}")
            lines.append(f"Concept: {tail} - {tail_desc}")
    else:
        lines.append(ANSWER_NO_KNOWLEDGE_PREAMBLE)
    lines.append(f"Question: {question}")
    return "\n".join(lines)
