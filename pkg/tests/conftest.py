from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ragkit.chunking import Chunk


@pytest.fixture
def make_doc(tmp_path):
    """Write text to a temp file and return its path."""

    def _make(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _make


@pytest.fixture
def mock_script(tmp_path):
    """Write a mock LM script file and return its path."""

    def _make(rules: list[dict], name: str = "script.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(rules), encoding="utf-8")
        return str(path)

    return _make


def make_chunks(texts: list[str], doc_id: str = "doc") -> list[Chunk]:
    from ragkit.tokens import count_tokens

    return [
        Chunk(
            chunk_id=f"{doc_id}#{i}",
            doc_id=doc_id,
            text=text,
            token_count=count_tokens(text),
        )
        for i, text in enumerate(texts)
    ]


_WORDS = (
    "sample filter reagent calibration dilution buffer nitrate sulfate "
    "analysis procedure temperature pressure vial column detector standard "
    "blank spike recovery method limit quantification chromatography ion "
    "acid water extraction digestion oven furnace balance pipette flask"
).split()

_NEUTRAL_WORDS = (
    "storage ledger archive binder folder shelf cabinet drawer label tag "
    "record entry logbook station bay corridor annex room locker bin"
).split()


def random_text(rng: random.Random, n_tokens: int, newline_every: int = 12) -> str:
    """Readable pseudo-text with n_tokens alphanumeric tokens."""
    words = []
    for i in range(n_tokens):
        words.append(rng.choice(_WORDS))
        if newline_every and (i + 1) % newline_every == 0:
            words[-1] += "."
    return " ".join(words)


def neutral_text(rng: random.Random, n_tokens: int) -> str:
    """Filler sharing no vocabulary with random_text or the planted queries."""
    words = []
    for i in range(n_tokens):
        words.append(rng.choice(_NEUTRAL_WORDS))
        if (i + 1) % 11 == 0:
            words[-1] += "."
    return " ".join(words)


GOLD_SENTENCE = (
    "the autoclave sterilization cycle runs for ninety minutes at pressure setting four"
)

PLANTED_QUERIES = [
    {
        "query_id": "q-table",
        "question": "which method measures dissolved mercury and what is its detection limit",
        "gold_chunk_ids": ["methods#7"],
        "must_contain": ["cold vapor atomic fluorescence", "0.5 ng per liter"],
        "must_not_contain": [],
    },
    {
        "query_id": "q-rare",
        "question": "what is the calibration threshold for zx9400 in the acid bath procedure",
        "gold_chunk_ids": ["unitspec#0"],
        "must_contain": ["0.02"],
        "must_not_contain": [],
    },
    {
        "query_id": "q-split",
        "question": "how long does the autoclave sterilization cycle run",
        "gold_chunk_ids": ["bigdoc#6"],
        "must_contain": ["ninety minutes"],
        "must_not_contain": [],
    },
    {
        "query_id": "q-unanswerable",
        "question": "what is the cafeteria menu on fridays",
        "gold_chunk_ids": [],
        "must_contain": [],
        "must_not_contain": [],
    },
]

# Rules keyed on phrases that only occur in the *retrieved context* when the
# right chunk was fetched: the table row needs its header prefix, the rare-term
# chunk its opening words, and the straddled sentence must arrive unsplit.
# Retrieval misses therefore fall through to "I don't know.", like an LM with
# no usable context.  The unanswerable question is keyed on the question text
# itself (first match wins) so noisy retrieval cannot make it answer.
MOCK_RULES = [
    {
        "match": "what is the cafeteria menu",
        "answer": "I don't know.",
    },
    {
        "match": "Parameter: Dissolved mercury",
        "answer": (
            "Dissolved mercury is measured by cold vapor atomic fluorescence "
            "with a detection limit of 0.5 ng per liter."
        ),
    },
    {
        "match": GOLD_SENTENCE,
        "answer": "The autoclave sterilization cycle runs for ninety minutes at pressure setting four.",
    },
    {
        "match": "zx9400 spectro unit housing",
        "answer": "The calibration threshold for the zx9400 is 0.02 absorbance units.",
    },
]


def build_planted_corpus(root: Path) -> dict:
    """A small lab-procedure corpus with three planted retrieval failures.

    - methods.csv: 40-row table whose answer sits in data row 7; raw CSV
      .text chunking hides it, per-row chunking exposes methods#7.
    - unitspec.txt: short doc holding the rare term zx9400 that decoy
      documents crowd out of a dense-only top-3.
    - bigdoc.md: structured document whose gold sentence straddles the
      1000-token boundary of fixed-size chunking; section chunk bigdoc#6.
    """
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20260810)

    # --- methods.csv: > 1000 tokens so auto picks table_row, 40 data rows
    header = "Parameter,Method,Detection limit,Holding time"
    rows = []
    for i in range(40):
        if i == 7:
            rows.append(
                "Dissolved mercury,Cold vapor atomic fluorescence,0.5 ng per liter,28 days"
            )
        else:
            rows.append(
                f"{neutral_text(rng, 4).replace('.', '')} parameter {i},"
                f"{neutral_text(rng, 8).replace('.', '')} assay {i},"
                f"{rng.randint(1, 99)} units per batch sample aliquot,"
                f"{rng.randint(1, 90)} days in sealed container storage"
            )
    (root / "methods.csv").write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")

    # --- unitspec.txt: short, unstructured, carries the rare term once
    unitspec = (
        "zx9400 spectro unit housing assembly torque values and service notes. "
        "The calibration of this housing is checked monthly. "
        + neutral_text(rng, 90)
    )
    (root / "unitspec.txt").write_text(unitspec, encoding="utf-8")

    # --- decoy docs: heavy on the rare query's common vocabulary
    for d in range(4):
        decoy = " ".join(
            f"calibration threshold acid bath procedure routine step {i} check"
            for i in range(10)
        )
        (root / f"decoy{d}.txt").write_text(decoy, encoding="utf-8")

    # --- bigdoc.md: heading tokens + bodies place the gold sentence across
    #     the fixed-1000 boundary (tokens 998..1010)
    sections = []
    for i in range(6):
        sections.append(f"# Area {i}\n{neutral_text(rng, 164)}")
    sections.append(f"# Sterilization 6\n{GOLD_SENTENCE}. {neutral_text(rng, 140)}")
    for i in range(7, 14):
        sections.append(f"# Area {i}\n{neutral_text(rng, 160)}")
    (root / "bigdoc.md").write_text("\n".join(sections), encoding="utf-8")

    manifest = [
        {"path": "methods.csv", "doc_id": "methods", "title": "Analytical methods register"},
        {"path": "unitspec.txt", "doc_id": "unitspec", "title": "ZX9400 unit specification"},
        {"path": "decoy0.txt", "doc_id": "decoy0", "title": "Bath maintenance 0"},
        {"path": "decoy1.txt", "doc_id": "decoy1", "title": "Bath maintenance 1"},
        {"path": "decoy2.txt", "doc_id": "decoy2", "title": "Bath maintenance 2"},
        {"path": "decoy3.txt", "doc_id": "decoy3", "title": "Bath maintenance 3"},
        {"path": "bigdoc.md", "doc_id": "bigdoc", "title": "Site operating manual"},
    ]
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")

    script_path = root / "mock_lm.json"
    script_path.write_text(json.dumps(MOCK_RULES, indent=1), encoding="utf-8")

    testset_path = root / "testset.jsonl"
    testset_path.write_text(
        "\n".join(json.dumps(q) for q in PLANTED_QUERIES) + "\n", encoding="utf-8"
    )

    return {
        "root": root,
        "manifest": manifest_path,
        "script": script_path,
        "testset": testset_path,
    }


@pytest.fixture
def planted_corpus(tmp_path):
    return build_planted_corpus(tmp_path / "corpus")


def baseline_config(corpus: dict):
    """Fixed-1000 chunks, dense-only top-3, ungrounded prompt, mock LM."""
    from ragkit.chunking import ChunkingConfig, Strategy
    from ragkit.generation import LMConfig, PromptTemplate
    from ragkit.pipeline import PipelineConfig
    from ragkit.retrieval import Mode, RetrievalConfig

    return PipelineConfig(
        corpus_manifest=str(corpus["manifest"]),
        chunking=ChunkingConfig(Strategy.FIXED, size_tokens=1000, overlap_tokens=0),
        retrieval=RetrievalConfig(mode=Mode.DENSE_ONLY, k_dense=3),
        prompt=PromptTemplate("baseline"),
        lm=LMConfig(endpoint="mock", mock_script=str(corpus["script"]), price_in=0.5, price_out=1.5),
    )


def corrected_config(corpus: dict):
    """Auto chunking (incl. table rows), hybrid top-5 each, grounded prompt."""
    from ragkit.generation import LMConfig, PromptTemplate
    from ragkit.pipeline import PipelineConfig
    from ragkit.retrieval import Mode, RetrievalConfig

    return PipelineConfig(
        corpus_manifest=str(corpus["manifest"]),
        chunking="auto",
        retrieval=RetrievalConfig(mode=Mode.HYBRID, k_dense=5, k_sparse=5),
        prompt=PromptTemplate("grounded", grounding=True),
        lm=LMConfig(
            endpoint="mock",
            temperature=0.0,
            mock_script=str(corpus["script"]),
            price_in=0.5,
            price_out=1.5,
        ),
    )
