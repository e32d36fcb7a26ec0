"""reclink: patient record linkage at desk scale.

Pipeline stages: synthetic corpus generation, candidate blocking (rule,
embedding-KNN, hybrid), Fellegi-Sunter scoring, a matcher cascade ending in
an LLM endpoint or a clerical-review queue, and evaluation reports.
"""

__version__ = "0.1.0"
