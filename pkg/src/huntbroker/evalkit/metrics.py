"""Ranking and detection metrics.

Everything here is plain float math over small lists; the test suite checks
each function against a brute-force reference on random instances.
"""

import math


class MetricsError(Exception):
    pass


class UnknownRowId(MetricsError):
    """A predicted row id is absent from the ground-truth labels."""


def ranking_metrics(ranked, relevant, k: int) -> dict:
    """Precision@k, recall@k, MRR, and nDCG with binary relevance.

    MRR scans the full ranking; the other three cut at k. An empty
    relevance set or an empty ranking yields zeros rather than an error.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = list(ranked)
    relevant = set(relevant)
    if not relevant:
        return {"p_at_k": 0.0, "recall_at_k": 0.0, "mrr": 0.0, "ndcg": 0.0}

    top = ranked[:k]
    hits = sum(1 for item in top if item in relevant)
    mrr = 0.0
    for rank, item in enumerate(ranked, start=1):
        if item in relevant:
            mrr = 1.0 / rank
            break
    dcg = sum(
        1.0 / math.log2(rank + 1)
        for rank, item in enumerate(top, start=1)
        if item in relevant
    )
    ideal = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(k, len(relevant)) + 1))
    return {
        "p_at_k": hits / k,
        "recall_at_k": hits / len(relevant),
        "mrr": mrr,
        "ndcg": dcg / ideal if ideal else 0.0,
    }


def detection_metrics(predicted, truth) -> dict:
    """Precision, recall, F1, and false-positive count against labeled rows.

    `truth` must label every predicted id. Empty predictions score
    precision 0 by convention; F1 is 0 whenever precision + recall is 0.
    """
    predicted = set(predicted)
    unknown = predicted - set(truth.labels)
    if unknown:
        raise UnknownRowId(f"ids not in ground truth: {sorted(unknown)[:5]}")

    malicious = truth.malicious_ids()
    tp = len(predicted & malicious)
    fp = len(predicted) - tp
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(malicious) if malicious else 0.0
    f1 = 0.0
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1, "fp_count": fp}
