"""Four from-scratch classifiers behind one predict/score interface."""

from .base import KINDS, TrainedModel, load_model, predict, save_model, score
from .forest import train_forest
from .knn import train_knn
from .logistic import train_logistic
from .svm import train_svm

TRAINERS = {
    "logistic": train_logistic,
    "knn": train_knn,
    "forest": train_forest,
    "svm": train_svm,
}

__all__ = [
    "KINDS", "TRAINERS", "TrainedModel", "load_model", "predict", "save_model", "score",
    "train_forest", "train_knn", "train_logistic", "train_svm",
]
