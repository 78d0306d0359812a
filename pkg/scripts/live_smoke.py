"""One pair-generation call and one embedding call against a live endpoint.

    RDFBENCH_LIVE_ENDPOINT=http://localhost:11434 python scripts/live_smoke.py
"""

from __future__ import annotations

import os
import sys

from rdfbench.graph import default_profile
from rdfbench.llm import PAIR_GEN, HttpChatProvider, TargetEntity, build_prompt, generate_pair, pair_target
from rdfbench.policy import Category
from rdfbench.retrieval import HttpEmbeddingProvider


def main() -> int:
    endpoint = os.environ.get("RDFBENCH_LIVE_ENDPOINT")
    if not endpoint:
        print("set RDFBENCH_LIVE_ENDPOINT", file=sys.stderr)
        return 2
    chat_model = os.environ.get("RDFBENCH_LIVE_CHAT_MODEL", "qwen3:4b-instruct")
    embed_model = os.environ.get("RDFBENCH_LIVE_EMBED_MODEL", "bge-m3")
    profile = default_profile()
    target = pair_target([TargetEntity("company1", "company", "http://dbpedia.org/resource/Airbus", "Airbus")])
    prompt = build_prompt(PAIR_GEN, profile, Category.GENERIC, target=target)
    out = generate_pair(Category.GENERIC, prompt, HttpChatProvider(endpoint, chat_model), "live:smoke")
    print(f"chat: {out.llm_ms:.0f} ms, parsed={out.parsed is not None}")
    print(out.raw_text)
    vec = HttpEmbeddingProvider(endpoint, embed_model).embed("Which companies are located in California?")
    print(f"embedding: dim={len(vec)}")
    return 0 if out.parsed else 1


if __name__ == "__main__":
    sys.exit(main())
