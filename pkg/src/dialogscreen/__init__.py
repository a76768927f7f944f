"""Screening of chatbot dialogues for anxiety and depression."""

__version__ = "0.1.0"
