"""Four-block experiment schedule for one training-direction group."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .environment import FieldKind
from .exceptions import InvalidDirectionError, ProtocolError

logger = logging.getLogger("fieldgen")

DIRECTIONS = (0, 45, 90, 135, 180, 225, 270, 315)

BASELINE_PER_TARGET = 26
BASELINE_CLAMPS_PER_TARGET = 3
ADAPT_BLOCK_SIZE = 65
ADAPT_NO_FEEDBACK = 15
ADAPT_CLAMPS = 5
TEST_BLOCK_SIZE = 210
TEST_CLAMPS_PER_TARGET = 15
TRAIN_FIELD_FEEDBACK = 53
TRAIN_FIELD_NO_FEEDBACK = 26
TRAIN_CLAMPS = 26


class Phase(str, Enum):
    BASELINE = "baseline"
    ADAPTATION = "adaptation"
    TEST = "test"


class TrialKind(str, Enum):
    BASELINE_NULL = "baseline-null"
    BASELINE_CLAMP = "baseline-clamp"
    ADAPT_FIELD = "adapt-field"
    ADAPT_CLAMP = "adapt-clamp"
    TEST_CLAMP = "test-clamp"
    TRAIN_FIELD = "train-field"
    TRAIN_CLAMP = "train-clamp"

    @property
    def field_kind(self) -> FieldKind:
        if self.value.endswith("clamp"):
            return FieldKind.CLAMP
        if self.value.endswith("field"):
            return FieldKind.CURL
        return FieldKind.NULL

    @property
    def is_clamp(self) -> bool:
        return self.field_kind is FieldKind.CLAMP

    @property
    def phase(self) -> Phase:
        if self.value.startswith("baseline"):
            return Phase.BASELINE
        if self.value.startswith("adapt"):
            return Phase.ADAPTATION
        return Phase.TEST


def check_direction(direction: float) -> int:
    """Return ``direction`` as an int in [0, 360) if it is a standard direction."""
    key = int(round(direction)) % 360
    if key not in DIRECTIONS or abs(direction - round(direction)) > 1e-9:
        raise InvalidDirectionError(
            f"direction {direction} deg is not one of {', '.join(map(str, DIRECTIONS))}"
        )
    return key


@dataclass(frozen=True)
class ScheduledTrial:
    index: int
    block: int
    target: int
    kind: TrialKind
    feedback: bool

    @property
    def field_kind(self) -> FieldKind:
        return self.kind.field_kind


@dataclass(frozen=True)
class Protocol:
    group: int
    seed: int
    trials: tuple[ScheduledTrial, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.trials)

    def block(self, number: int) -> list[ScheduledTrial]:
        return [t for t in self.trials if t.block == number]


def _no_adjacent_repeats(
    counts: dict[int, int], rng: np.random.Generator
) -> list[int]:
    """Random sequence using each key ``counts[key]`` times with no equal neighbours."""
    remaining = dict(counts)
    sequence: list[int] = []
    prev: int | None = None
    total = sum(remaining.values())
    while total:
        after = total - 1
        candidates = []
        for key, count in remaining.items():
            if count == 0 or key == prev:
                continue
            # the rest must still be arrangeable with ``key`` in front
            left = {k: c - (k == key) for k, c in remaining.items()}
            if left[key] > after // 2 or any(
                c > (after + 1) // 2 for k, c in left.items() if k != key
            ):
                continue
            candidates.append(key)
        if not candidates:
            raise ProtocolError(f"no arrangement of {dict(counts)} without repeated neighbours")
        weights = np.array([remaining[k] for k in candidates], dtype=float)
        choice = candidates[int(rng.choice(len(candidates), p=weights / weights.sum()))]
        sequence.append(choice)
        remaining[choice] -= 1
        prev = choice
        total -= 1
    return sequence


def build_protocol(group_direction: float, seed: int) -> Protocol:
    """Seeded schedule: baseline, two adaptation blocks and the test block.

    Raises:
        InvalidDirectionError: ``group_direction`` is not a standard direction
    """
    group = check_direction(group_direction)
    rng = np.random.default_rng(seed)
    plan: list[tuple[int, int, TrialKind, bool]] = []

    baseline: list[tuple[int, int, TrialKind, bool]] = []
    for target in DIRECTIONS:
        baseline += [(1, target, TrialKind.BASELINE_NULL, True)] * (
            BASELINE_PER_TARGET - BASELINE_CLAMPS_PER_TARGET
        )
        baseline += [(1, target, TrialKind.BASELINE_CLAMP, False)] * BASELINE_CLAMPS_PER_TARGET
    plan += [baseline[i] for i in rng.permutation(len(baseline))]

    for block in (2, 3):
        fields = ADAPT_BLOCK_SIZE - ADAPT_CLAMPS
        adapt = (
            [(block, group, TrialKind.ADAPT_FIELD, True)] * (fields - ADAPT_NO_FEEDBACK)
            + [(block, group, TrialKind.ADAPT_FIELD, False)] * ADAPT_NO_FEEDBACK
            + [(block, group, TrialKind.ADAPT_CLAMP, False)] * ADAPT_CLAMPS
        )
        plan += [adapt[i] for i in rng.permutation(len(adapt))]

    train = (
        [(4, group, TrialKind.TRAIN_FIELD, True)] * TRAIN_FIELD_FEEDBACK
        + [(4, group, TrialKind.TRAIN_FIELD, False)] * TRAIN_FIELD_NO_FEEDBACK
        + [(4, group, TrialKind.TRAIN_CLAMP, False)] * TRAIN_CLAMPS
    )
    train = [train[i] for i in rng.permutation(len(train))]
    test_targets = _no_adjacent_repeats(
        {d: TEST_CLAMPS_PER_TARGET for d in DIRECTIONS if d != group}, rng
    )
    for trained, tested in zip(train, test_targets):
        plan.append(trained)
        plan.append((4, tested, TrialKind.TEST_CLAMP, False))

    trials = tuple(
        ScheduledTrial(index=i, block=b, target=t, kind=k, feedback=fb)
        for i, (b, t, k, fb) in enumerate(plan)
    )
    logger.debug(f"Built protocol for group {group} (seed {seed}): {len(trials)} trials")
    return Protocol(group=group, seed=seed, trials=trials)


def expected_composition(group: int) -> Counter:
    """Trial counts per (block, target, kind, feedback)."""
    expected: Counter = Counter()
    for target in DIRECTIONS:
        expected[(1, target, TrialKind.BASELINE_NULL, True)] = (
            BASELINE_PER_TARGET - BASELINE_CLAMPS_PER_TARGET
        )
        expected[(1, target, TrialKind.BASELINE_CLAMP, False)] = BASELINE_CLAMPS_PER_TARGET
    for block in (2, 3):
        fields = ADAPT_BLOCK_SIZE - ADAPT_CLAMPS
        expected[(block, group, TrialKind.ADAPT_FIELD, True)] = fields - ADAPT_NO_FEEDBACK
        expected[(block, group, TrialKind.ADAPT_FIELD, False)] = ADAPT_NO_FEEDBACK
        expected[(block, group, TrialKind.ADAPT_CLAMP, False)] = ADAPT_CLAMPS
    expected[(4, group, TrialKind.TRAIN_FIELD, True)] = TRAIN_FIELD_FEEDBACK
    expected[(4, group, TrialKind.TRAIN_FIELD, False)] = TRAIN_FIELD_NO_FEEDBACK
    expected[(4, group, TrialKind.TRAIN_CLAMP, False)] = TRAIN_CLAMPS
    for target in DIRECTIONS:
        if target != group:
            expected[(4, target, TrialKind.TEST_CLAMP, False)] = TEST_CLAMPS_PER_TARGET
    return expected


@dataclass
class AuditReport:
    group: int
    seed: int
    n_trials: int
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_protocol(protocol: Protocol) -> AuditReport:
    """Check block composition and test-block ordering; one line per violation."""
    report = AuditReport(group=protocol.group, seed=protocol.seed, n_trials=len(protocol))

    actual = Counter((t.block, t.target, t.kind, t.feedback) for t in protocol.trials)
    expected = expected_composition(protocol.group)
    for key in sorted(set(actual) | set(expected), key=lambda k: (k[0], k[1], k[2].value, k[3])):
        if actual[key] != expected[key]:
            block, target, kind, feedback = key
            report.violations.append(
                f"block {block}, target {target}, {kind.value}"
                f"{'' if feedback else ' (no feedback)'}: "
                f"{actual[key]} trials, expected {expected[key]}"
            )

    test_block = protocol.block(4)
    for position, trial in enumerate(test_block, start=1):
        is_train = trial.target == protocol.group and trial.kind is not TrialKind.TEST_CLAMP
        if (position % 2 == 1) != is_train:
            report.violations.append(
                f"block 4 position {position}: expected "
                f"{'train' if position % 2 == 1 else 'test'} target, got {trial.target}"
            )
            break

    tests = [t.target for t in test_block if t.kind is TrialKind.TEST_CLAMP]
    repeats = sum(1 for a, b in zip(tests, tests[1:]) if a == b)
    if repeats:
        report.violations.append(f"block 4: {repeats} consecutive repeated test targets")

    return report
