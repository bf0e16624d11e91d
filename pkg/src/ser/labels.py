"""Emotion and gender labels shared by the dataset, classifier and report code."""

from __future__ import annotations

from enum import Enum


class Emotion(str, Enum):
    # definition order is the canonical order (and the tie-break order)
    HAPPY = "Happy"
    SAD = "Sad"
    ANGRY = "Angry"
    FEAR = "Fear"

    @property
    def index(self) -> int:
        return EMOTIONS.index(self)

    @classmethod
    def parse(cls, text: str) -> "Emotion":
        for e in cls:
            if e.value.lower() == text.strip().lower():
                return e
        raise ValueError(f"unknown emotion {text!r}")

    def __str__(self):
        return self.value


class Gender(str, Enum):
    M = "M"
    F = "F"

    @classmethod
    def parse(cls, text: str) -> "Gender":
        t = text.strip().lower()
        if t in ("m", "male"):
            return cls.M
        if t in ("f", "female"):
            return cls.F
        raise ValueError(f"unknown gender {text!r}")

    def __str__(self):
        return self.value


EMOTIONS = tuple(Emotion)
GENDERS = tuple(Gender)
