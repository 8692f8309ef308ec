from flowguard.models.autoencoder import Autoencoder, train_ae
from flowguard.models.classifier import DenseClassifier, predict


def train_classifier(data, labels=None, **config):
    """Fit a :class:`DenseClassifier` on a dataset handle or arrays."""
    y = getattr(data, "labels", None) if labels is None else labels
    return DenseClassifier(**config).fit(getattr(data, "samples", data), y)


__all__ = ["Autoencoder", "DenseClassifier", "predict", "train_ae", "train_classifier"]
