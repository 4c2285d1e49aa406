"""bodyest: reference body-measurement regressors for bodykit datasets."""

__version__ = "0.1.0"
