import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agentmesh.core.types import GuardPolicy
from agentmesh.guards import detect_abstention, grounding_check, split_sentences
from agentmesh.retrieval.embedding import embed
from agentmesh.retrieval.kb import DocumentChunk, ScoredChunk

from conftest import WORD_BANK, make_text

POLICY = GuardPolicy()
EMBEDDER = "hashed-bow-256"


def scored(text: str) -> ScoredChunk:
    return ScoredChunk(
        chunk=DocumentChunk(
            chunk_id=f"c#{abs(hash(text)) % 10**8:08d}",
            doc_id="d",
            text=text,
            embedding=embed(EMBEDDER, text),
            position=0,
        ),
        score=0.5,
    )


class TestAbstention:
    def test_refusal_detected(self):
        assert detect_abstention("I don't know based on the provided documents.", POLICY)

    def test_empty_answer_counts_as_abstention(self):
        assert detect_abstention("", POLICY)
        assert detect_abstention("   \n ", POLICY)

    def test_substantive_answer_with_unknown_wording(self):
        answer = "The answer is unknown to historians, but revenue was $5B."
        assert not detect_abstention(answer, POLICY)

    def test_phrase_must_appear_in_first_200_chars(self):
        padding = "Revenue grew nicely across all segments this quarter. " * 5
        assert len(padding) > 200
        assert not detect_abstention(padding + "I don't know.", POLICY)
        assert detect_abstention("I do not know. " + padding, POLICY)

    def test_custom_phrases(self):
        policy = GuardPolicy(abstention_phrases=("no basis to answer",))
        assert detect_abstention("No basis to answer that.", policy)
        assert not detect_abstention("I don't know.", policy)

    def test_case_insensitive(self):
        assert detect_abstention("INSUFFICIENT CONTEXT to answer.", POLICY)


class TestGroundingCheck:
    def test_verbatim_copy_scores_one(self):
        chunk_text = "Subscription revenue grew fourteen percent in the third quarter."
        verdict = grounding_check(chunk_text, [scored(chunk_text)], POLICY, EMBEDDER)
        assert verdict.grounding_score == pytest.approx(1.0, abs=1e-6)
        assert verdict.flagged_sentences == ()
        assert verdict.passed and not verdict.abstained

    def test_unrelated_answer_fully_flagged(self):
        retrieved = [
            scored("Quarterly revenue and operating margin details for the segment."),
            scored("Subscription billings guidance and cash flow commentary."),
        ]
        answer = "Zebras migrate across the savanna every dry season. Their stripes confuse predators during long chases."
        verdict = grounding_check(answer, retrieved, POLICY, EMBEDDER)
        assert not verdict.passed
        assert len(verdict.flagged_sentences) == 2
        for _, similarity in verdict.flagged_sentences:
            assert similarity < POLICY.grounding_threshold

    def test_abstained_answer_bypasses(self):
        verdict = grounding_check("I don't know.", [scored("anything at all")], POLICY, EMBEDDER)
        assert verdict.abstained and verdict.passed
        assert verdict.grounding_score == 1.0
        assert verdict.flagged_sentences == ()

    def test_no_retrieval_and_substantive_answer_fails(self):
        verdict = grounding_check(
            "Revenue grew nine percent across all segments.", [], POLICY, EMBEDDER
        )
        assert not verdict.passed
        assert verdict.grounding_score == 0.0

    def test_short_sentences_skipped(self):
        verdict = grounding_check("Yes. It did.", [scored("unrelated words here")], POLICY, EMBEDDER)
        assert verdict.passed
        assert verdict.grounding_score == 1.0

    def test_pure_function(self):
        retrieved = [scored("alpha beta gamma delta epsilon")]
        answer = "Alpha beta gamma delta epsilon zeta. Unrelated clause about nothing in particular."
        first = grounding_check(answer, retrieved, POLICY, EMBEDDER)
        second = grounding_check(answer, retrieved, POLICY, EMBEDDER)
        assert first == second

    def test_passed_consistent_with_threshold(self):
        retrieved = [scored("revenue margin growth quarter cloud")]
        answer = "Revenue margin growth quarter cloud results. Entirely irrelevant zebra sentence wanders far away."
        strict = grounding_check(answer, retrieved, GuardPolicy(grounding_threshold=0.9), EMBEDDER)
        lax = grounding_check(answer, retrieved, GuardPolicy(grounding_threshold=0.0), EMBEDDER)
        assert not strict.passed
        assert lax.passed
        assert lax.flagged_sentences == ()


def _sentence(rng: random.Random, words) -> str:
    return " ".join(rng.choice(words) for _ in range(rng.randint(5, 10))).capitalize() + "."


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_adding_chunks_never_lowers_score(seed):
    rng = random.Random(seed)
    words = list(WORD_BANK)
    answer = " ".join(_sentence(rng, words) for _ in range(rng.randint(1, 4)))
    base = [scored(make_text(rng.randint(40, 200), rng)) for _ in range(rng.randint(1, 4))]
    extra = base + [scored(make_text(rng.randint(40, 200), rng))]
    before = grounding_check(answer, base, POLICY, EMBEDDER)
    after = grounding_check(answer, extra, POLICY, EMBEDDER)
    assert after.grounding_score >= before.grounding_score - 1e-12
    assert len(after.flagged_sentences) <= len(before.flagged_sentences)


def test_split_sentences_terminators():
    text = "First one. Second two! Third three? Fourth trails"
    assert split_sentences(text) == ["First one.", "Second two!", "Third three?", "Fourth trails"]
    # Decimal points do not split.
    assert split_sentences("Margin was 44.5% overall.") == ["Margin was 44.5% overall."]
