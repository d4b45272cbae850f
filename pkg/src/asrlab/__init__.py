"""Desk-scale multilingual ASR laboratory.

Everything runs on numpy: a small reverse-mode autograd core, a Conformer
encoder with LAS / Transformer decoders, language conditioning, a training
loop with live mixing-ratio control, a closed-form capacity planner, and a
WER evaluator.
"""

__version__ = "0.1.0"
