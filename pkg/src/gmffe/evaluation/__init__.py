from .kmeans import KMeansResult, kmeans
from .labels import LabelSet, load_labels
from .logreg import OneVsRestClassifier, fit_logreg_ovr
from .metrics import (ari, auc_score, clustering_accuracy, clustering_scores, hungarian,
                      micro_macro_f1, nmi, weighted_f1)
from .protocols import (OPERATORS, EvalReport, classification_protocol, clustering_protocol,
                        link_prediction_protocol, pair_embedding)

__all__ = [
    "KMeansResult", "kmeans", "LabelSet", "load_labels", "OneVsRestClassifier", "fit_logreg_ovr",
    "ari", "auc_score", "clustering_accuracy", "clustering_scores", "hungarian", "micro_macro_f1",
    "nmi", "weighted_f1", "OPERATORS", "EvalReport", "classification_protocol",
    "clustering_protocol", "link_prediction_protocol", "pair_embedding",
]
