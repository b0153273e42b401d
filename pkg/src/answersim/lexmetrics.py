"""String-overlap answer similarity metrics: EM, token F1, BLEU, ROUGE-L, METEOR.

All metrics operate on token sequences produced by a NormalizationProfile and
return values in [0, 1]. EM and token F1 are symmetric; BLEU, ROUGE-L and
METEOR are order-sensitive (candidate first, reference second).
"""
from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass

from . import _porter
from .errors import EmptyText, UnsupportedLanguage

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_WS_RE = re.compile(r"\s+")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)

LEXICAL_METRICS = ("em", "f1", "bleu", "rouge_l", "meteor")


@dataclass(frozen=True)
class NormalizationProfile:
    """Deterministic text-to-tokens mapping shared by all lexical metrics.

    The default English profile follows the SQuAD convention: lowercase,
    strip punctuation, drop the articles a/an/the, split on whitespace.
    The German profile keeps articles.
    """

    lowercase: bool = True
    strip_punct: bool = True
    remove_articles: bool = True
    language: str = "en"

    @classmethod
    def for_language(cls, lang: str) -> "NormalizationProfile":
        if lang == "de":
            return cls(remove_articles=False, language="de")
        if lang == "en":
            return cls()
        raise UnsupportedLanguage(f"no normalization profile for language {lang!r}")

    def normalize(self, text: str) -> str:
        if self.lowercase:
            text = text.lower()
        if self.strip_punct:
            text = text.translate(_PUNCT_TABLE)
        if self.remove_articles:
            text = _ARTICLE_RE.sub(" ", text)
        return _WS_RE.sub(" ", text).strip()

    def tokens(self, text: str) -> list[str]:
        normalized = self.normalize(text)
        return normalized.split() if normalized else []


@dataclass(frozen=True)
class LexicalScore:
    metric: str
    value: float

    def __post_init__(self):
        if self.metric not in LEXICAL_METRICS:
            raise ValueError(f"unknown lexical metric {self.metric!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{self.metric} score {self.value} outside [0, 1]")


def exact_match(a: str, b: str, norm: NormalizationProfile) -> int:
    """1 iff the normalized token sequences are identical."""
    return int(norm.tokens(a) == norm.tokens(b))


def token_f1(a: str, b: str, norm: NormalizationProfile) -> float:
    """Multiset-overlap F1 over normalized tokens; symmetric in a and b.

    0.0 when the token multisets are disjoint, including the degenerate case
    where both sides normalize to nothing.
    """
    toks_a = norm.tokens(a)
    toks_b = norm.tokens(b)
    overlap = sum((Counter(toks_a) & Counter(toks_b)).values())
    total = len(toks_a) + len(toks_b)
    if overlap == 0 or total == 0:
        return 0.0
    return 2.0 * overlap / total


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, norm: NormalizationProfile) -> float:
    """Sentence BLEU, uniform weights over orders 1..min(4, len(candidate)).

    Modified n-gram precision with clipping, brevity penalty
    exp(1 - r/c) when c < r, no smoothing: any zero precision gives 0.
    """
    cand = norm.tokens(candidate)
    ref = norm.tokens(reference)
    if not cand or not ref:
        raise EmptyText("bleu requires at least one token on each side")
    max_order = min(4, len(cand))
    log_sum = 0.0
    for n in range(1, max_order + 1):
        cand_grams = _ngrams(cand, n)
        ref_grams = _ngrams(ref, n)
        clipped = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / (len(cand) - n + 1))
    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return brevity * math.exp(log_sum / max_order)


def _lcs_length(a: list[str], b: list[str]) -> int:
    # O(len(a) * len(b)) dynamic program, single rolling row
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str, norm: NormalizationProfile) -> float:
    """LCS F-measure with beta = 1: harmonic mean of LCS/|cand| and LCS/|ref|."""
    cand = norm.tokens(candidate)
    ref = norm.tokens(reference)
    if not cand or not ref:
        raise EmptyText("rouge_l requires at least one token on each side")
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2.0 * precision * recall / (precision + recall)


def _align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    # stage 1: surface match; stage 2: Porter-stem match on the leftovers.
    # greedy in candidate order, earliest unmatched reference token wins.
    matched_cand: dict[int, int] = {}
    used_ref: set[int] = set()
    for key in (lambda t: t, _porter.stem):
        cand_keys = [key(t) for t in cand]
        ref_keys = [key(t) for t in ref]
        for ci, ck in enumerate(cand_keys):
            if ci in matched_cand:
                continue
            for ri, rk in enumerate(ref_keys):
                if ri not in used_ref and ck == rk:
                    matched_cand[ci] = ri
                    used_ref.add(ri)
                    break
    return sorted(matched_cand.items())


def _chunk_count(alignment: list[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for ci, ri in alignment:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (ci, ri)
    return chunks


def meteor(candidate: str, reference: str, norm: NormalizationProfile) -> float:
    """Unigram alignment score: exact then stem matching, chunk penalty.

    Fmean = 10PR / (R + 9P), penalty = 0.5 * (chunks/matches)^3,
    score = Fmean * (1 - penalty). English only.
    """
    if norm.language != "en":
        raise UnsupportedLanguage("meteor is only defined for English texts")
    cand = norm.tokens(candidate)
    ref = norm.tokens(reference)
    if not cand or not ref:
        raise EmptyText("meteor requires at least one token on each side")
    alignment = _align(cand, ref)
    m = len(alignment)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    fmean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (_chunk_count(alignment) / m) ** 3
    return fmean * (1.0 - penalty)


_METRIC_FUNCS = {
    "em": lambda a, b, norm: float(exact_match(a, b, norm)),
    "f1": token_f1,
    "bleu": bleu,
    "rouge_l": rouge_l,
    "meteor": meteor,
}


def score_all(a: str, b: str, norm: NormalizationProfile, metrics=LEXICAL_METRICS) -> list[LexicalScore]:
    """Compute the requested lexical metrics for one ordered pair (b scored against a)."""
    scores = []
    for name in metrics:
        try:
            func = _METRIC_FUNCS[name]
        except KeyError:
            raise ValueError(f"unknown lexical metric {name!r}") from None
        scores.append(LexicalScore(name, float(func(b, a, norm))))
    return scores
