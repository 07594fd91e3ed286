"""prunekit: source-dataset pruning for transfer learning.

Scores source classes (or samples) by their relevance to a downstream task,
turns scores into pruning plans, applies them, and verifies the result with
a deterministic pretrain -> finetune harness.
"""

from .backend import BACKEND

__all__ = ["BACKEND", "__version__"]
__version__ = "0.1.0"
