"""Generative-search influence measurement and automated content optimization.

Quantifies how much a source article shapes synthesized search answers
across many queries (six judged dimensions, aggregated into pooled mean,
success rate, and intra-article variance) and improves the article through
an iterative analyze-revise-evaluate agent loop with holistic version
selection.
"""

__version__ = "0.1.0"
