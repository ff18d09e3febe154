"""Statistic-based TF-IDF grounding of questions onto function paragraphs.

Fitted per task over that task's function paragraphs.  Scores are
cosine similarities of tf-idf vectors; with non-negative weights they
always land in [0, 1].  All math is float64 so scores agree with a
naive reference implementation to well below 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class TfIdfModel:
    vocabulary: dict[str, int]  # token -> column index
    idf: np.ndarray  # [|V|]
    doc_vectors: np.ndarray  # [n_docs, |V|], non-zero rows L2-normalized


@dataclass
class GroundingScores:
    question_id: str
    scores: np.ndarray  # [n_functions], each in [0, 1]


def fit_tfidf(paragraphs: list[list[str]]) -> TfIdfModel:
    """Fit on raw-count tf and smoothed idf: idf(t) = ln((1+n)/(1+df(t))) + 1.

    Rows are L2-normalized; an all-empty paragraph keeps an all-zero row.
    """
    if not paragraphs:
        raise ValidationError("fit_tfidf: need at least one paragraph")
    n = len(paragraphs)
    vocabulary = {tok: i for i, tok in enumerate(sorted(set(t for p in paragraphs for t in p)))}
    tf = np.zeros((n, len(vocabulary)))
    for d, para in enumerate(paragraphs):
        for tok in para:
            tf[d, vocabulary[tok]] += 1.0
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    doc_vectors = tf * idf
    norms = np.linalg.norm(doc_vectors, axis=1, keepdims=True)
    np.divide(doc_vectors, norms, out=doc_vectors, where=norms > 0)
    return TfIdfModel(vocabulary=vocabulary, idf=idf, doc_vectors=doc_vectors)


def score_question(model: TfIdfModel, question_tokens: list[str]) -> np.ndarray:
    """Cosine similarity of the tf-idf-embedded question against every paragraph.

    Out-of-vocabulary question tokens are ignored; an all-OOV question
    scores 0 everywhere.
    """
    q = np.zeros(len(model.vocabulary))
    for tok in question_tokens:
        idx = model.vocabulary.get(tok)
        if idx is not None:
            q[idx] += 1.0
    q *= model.idf
    norm = np.linalg.norm(q)
    if norm > 0:
        q /= norm
    return np.clip(model.doc_vectors @ q, 0.0, 1.0)
