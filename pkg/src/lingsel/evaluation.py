"""Held-out error rates and synthetic benchmark generation.

Decision convention: decision >= threshold means "accepted as target".
pos_err is the fraction of positives rejected, neg_err the fraction of
negatives accepted, so a coin-flip classifier on identically distributed
sets gives pos_err + neg_err close to 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, UtteranceRecord
from .errors import DataError, UsageError
from .numcore import MASK64, SplitMix64


@dataclass
class ErrorRates:
    pos_err: float
    neg_err: float
    n_pos: int
    n_neg: int


def evaluate_classifier(decisions_pos, decisions_neg, threshold):
    """Error rates of thresholded decision values on labeled sets."""
    pos = np.asarray(decisions_pos, dtype=np.float64).ravel()
    neg = np.asarray(decisions_neg, dtype=np.float64).ravel()
    if pos.size == 0:
        raise DataError("empty positive evaluation set")
    if neg.size == 0:
        raise DataError("empty negative evaluation set")
    if not (isinstance(threshold, (int, float)) and math.isfinite(threshold)):
        raise UsageError(f"threshold must be finite, got {threshold!r}")
    pos_err = float(np.count_nonzero(pos < threshold)) / pos.size
    neg_err = float(np.count_nonzero(neg >= threshold)) / neg.size
    return ErrorRates(pos_err, neg_err, int(pos.size), int(neg.size))


def gen_synthetic_suite(seed, n_target, n_other, dim, separation):
    """Two corpora of Gaussian embeddings: target N(0, I) and other
    N(separation * 1, I), i.e. the non-target mean is offset by
    `separation` in every coordinate. Durations are uniform in [5, 25) s.

    Returns (target_corpus, other_corpus). Deterministic in `seed`; the
    target/other embedding and duration streams are derived independently,
    so changing one count does not disturb the other corpus.
    """
    if not (isinstance(n_target, int) and n_target >= 1):
        raise UsageError(f"n_target must be an integer >= 1, got {n_target!r}")
    if not (isinstance(n_other, int) and n_other >= 1):
        raise UsageError(f"n_other must be an integer >= 1, got {n_other!r}")
    if not (isinstance(dim, int) and dim >= 1):
        raise UsageError(f"dim must be an integer >= 1, got {dim!r}")
    if not (
        isinstance(separation, (int, float))
        and math.isfinite(separation)
        and separation >= 0
    ):
        raise UsageError(f"separation must be >= 0, got {separation!r}")
    root = SplitMix64(int(seed) & MASK64)
    emb_t = root.derive(0).gaussian_block(n_target * dim).reshape(n_target, dim)
    emb_o = root.derive(1).gaussian_block(n_other * dim).reshape(n_other, dim)
    emb_o = emb_o + float(separation)
    dur_t = 5.0 + 20.0 * root.derive(2).uniform_block(n_target)
    dur_o = 5.0 + 20.0 * root.derive(3).uniform_block(n_other)
    target = Corpus(
        dim=dim,
        records=[
            UtteranceRecord(f"t{i:06d}", float(dur_t[i]), emb_t[i])
            for i in range(n_target)
        ],
    )
    other = Corpus(
        dim=dim,
        records=[
            UtteranceRecord(f"o{i:06d}", float(dur_o[i]), emb_o[i])
            for i in range(n_other)
        ],
    )
    return target, other


def make_report(classifier, threshold, rates, quantile=None):
    """Fixed-schema JSON-ready report dict."""
    report = {
        "classifier": classifier,
        "threshold": float(threshold),
        "pos_err": rates.pos_err,
        "neg_err": rates.neg_err,
        "n_pos": rates.n_pos,
        "n_neg": rates.n_neg,
    }
    if quantile is not None:
        report["quantile"] = float(quantile)
    return report


def format_report_table(report):
    """Aligned two-row text rendering of a report dict."""
    rows = [
        ("Pos. error", report["pos_err"], report["n_pos"]),
        ("Neg. error", report["neg_err"], report["n_neg"]),
    ]
    lines = [
        f"classifier: {report['classifier']}   threshold: {report['threshold']:.6g}"
    ]
    lines.append(f"{'metric':<12} {'rate':>8} {'count':>7}")
    for name, rate, count in rows:
        lines.append(f"{name:<12} {rate:>8.4f} {count:>7d}")
    return "\n".join(lines)
