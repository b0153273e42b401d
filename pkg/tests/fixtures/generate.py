"""Regenerates the checked-in fixture bundle. Run from the repo root:

    PYTHONPATH=tests python3 tests/fixtures/generate.py
"""
from __future__ import annotations

import sys
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

import synth  # noqa: E402
from answersim.corpus import save_dataset, text_ref  # noqa: E402
from answersim.providers import (  # noqa: E402
    write_pair_file,
    write_sentence_file,
    write_token_file,
)


def main() -> None:
    dataset = synth.bundle_dataset()
    save_dataset(dataset, HERE / "answers.ndjson")

    texts = []
    for record in dataset:
        texts.append((text_ref(record.id, "a"), record.answer_a))
        texts.append((text_ref(record.id, "b"), record.answer_b))

    for layer, filename in ((2, "tokens_l2.ndjson"), (12, "tokens_l12.ndjson")):
        sets = [synth.token_set_for(tid, text, layer) for tid, text in texts]
        write_token_file(HERE / filename, sets)

    sentences = [synth.sentence_embedding_for(tid, text) for tid, text in texts]
    write_sentence_file(HERE / "sentences.ndjson", sentences)

    scores = []
    for record in dataset:
        scores.append((record.id, "ab", synth.pair_score_for(record.answer_a, record.answer_b)))
        scores.append((record.id, "ba", synth.pair_score_for(record.answer_b, record.answer_a)))
    write_pair_file(HERE / "pairs.ndjson", scores, synth.PAIR_MODEL)

    print(f"wrote fixture bundle to {HERE}")


if __name__ == "__main__":
    main()
