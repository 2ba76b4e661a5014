"""Golden comparison of the stored prompt assets, byte for byte."""

import pytest

from tpikit.llm import prompts

GOLDEN = {
    "describe_system.txt": (
        "You are a highly skilled visual description assistant. Given an image and, optionally, a question "
        "and its answer, write a single-paragraph, highly detailed, objective description of the image. "
        "Your goal is to capture all relevant visual elements in a way that would allow a reader to mentally "
        "reconstruct the image and, if applicable, answer the given question using only your description. "
        "Your description should include the type of scene (e.g., natural, diagram, poster, chart), the "
        "spatial layout of elements, visual attributes such as color, shape, and texture, any visible text "
        "or labels, and, if present, numerical or symbolic information. Do not include any interpretation, "
        "emotion, speculation, or bullet points. Keep the tone factual, precise, and comprehensive. Aim for "
        "approximately 100 words."
    ),
    "describe_user.txt": "Question: {question}\nAnswer: {answer}",
    "relevance_system.txt": "Output only Yes or No.",
    "relevance_user.txt": "Is the image relevant to the following Q&A?\nQuestion: {q}\nAnswer: {a}",
    "augment_system.txt": "Return exactly one JSON object that validates against the given schema. No extra text.",
    "augment_user.txt": (
        "Here are seed examples (one JSON per line):\n\n{demo}\n\n"
        "Produce ONE new and diverse example that is not copied. Output only the JSON object."
    ),
    "describe_system_50words.txt": (
        "You are an objective image captioning assistant. Describe strictly what you see in the image. "
        "Do NOT include apologies, judgments, context, or filler phrases. Use up to 50 words in your description."
    ),
    "describe_system_200words.txt": (
        "You are an objective image captioning assistant. Describe strictly what you see in the image. "
        "Do NOT include apologies, judgments, context, or filler phrases. Use up to 200 words in your "
        "description, providing detailed coverage of objects, setting, colors, and actions."
    ),
    "describe_system_rich.txt": (
        "You are a creative image captioning assistant. Provide a rich, detailed description of the image, "
        "highlighting objects, setting, colors, textures, actions, emotions, and context. Use complete "
        "sentences and vivid language without apologies or filler phrases."
    ),
    "describe_system_24words_qa.txt": (
        "You are an objective image-captioning assistant. Describe strictly what you see in the image in no "
        "more than 24 words. Ensure the caption contains the details required to answer the question. Write "
        "as one continuous paragraph-do NOT use bullet points, lists, apologies, opinions, or speculative content."
    ),
    "relevance_user_short.txt": (
        "Is the image relevant to the following Question and Answer? Please answer Yes or No.\n"
        "Question: {q}\nAnswer: {a}"
    ),
}


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_asset_bytes_match_golden(name):
    assert prompts.load(name).encode("utf-8") == GOLDEN[name].encode("utf-8")


def test_every_asset_has_a_golden():
    assert sorted(GOLDEN) == prompts.asset_names()


def test_fill_leaves_other_braces_alone():
    demo = '{"question": "Q", "answer": "A", "description": "D"}'
    out = prompts.fill(prompts.load("augment_user.txt"), demo=demo)
    assert demo in out and "{demo}" not in out


def test_fingerprints_are_stable():
    fp = prompts.fingerprints()
    assert set(fp) == set(prompts.asset_names())
    assert all(len(v) == 64 for v in fp.values())
