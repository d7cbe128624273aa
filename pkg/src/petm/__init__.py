"""Post-editing translation memory workbench.

Stores (source, MT hypothesis, reference) triples with token-level human
error markings, retrieves similar examples to prompt a language model for
focused correction, evaluates outputs (BLEU, TER, marking-edit rates,
inter-annotator agreement), and serves a live annotation workflow.
"""

__version__ = "0.1.0"
