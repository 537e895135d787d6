"""TSV-backed corpus of compounds, ontological labels, and activity records.

A corpus is built once from three flat files (compounds, labels, activities)
and is immutable afterwards, so concurrent readers need no locking.  It keeps
the indexes every downstream stage relies on: per-source label sets per
compound, the reverse label -> compounds map, corpus-wide label counts, and
activity values aggregated to the most potent (minimum) measurement per
(compound, target, activity type).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import (
    FormatError,
    UnknownCompoundError,
    UnknownSourceError,
    UnknownTargetError,
)

# Well-known label sources. Any other non-empty string is accepted as a
# source name; these constants just cover the common ones.
CLASSYFIRE = "CF"
ONTOCHEM = "OC"
MORGAN = "MORGAN"

_COMPOUNDS_COLUMNS = ("compound_id", "smiles")
_LABELS_COLUMNS = ("compound_id", "source", "label")
_ACTIVITIES_COLUMNS = ("compound_id", "target_id", "activity_type", "value_nM")


@dataclass(frozen=True)
class ActivityRecord:
    """One aggregated activity measurement; value is in nanomolar."""

    compound: str
    target: str
    activity_type: str
    value_nm: float


def _iter_rows(path, columns, header_required):
    """Yield (lineno, fields) for the data rows of a TSV file.

    Lines starting with '#' and blank lines are skipped.  A header row
    matching `columns` (case-insensitive) is consumed when present; when
    `header_required` it must be the first non-comment line.
    """
    n_cols = len(columns)
    canonical = tuple(c.lower() for c in columns)
    first = True
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if first:
                first = False
                if tuple(f.strip().lower() for f in fields) == canonical:
                    continue
                if header_required:
                    raise FormatError(
                        path, lineno,
                        "missing header row (expected %s)" % "<TAB>".join(columns))
            if len(fields) != n_cols:
                raise FormatError(
                    path, lineno,
                    f"expected {n_cols} tab-separated columns, got {len(fields)}")
            yield lineno, fields


class Corpus:
    """Immutable indexed view of compounds, labels, and activity records.

    Build one with :func:`load_corpus` (from files) or :meth:`Corpus.build`
    (from in-memory rows); both run the same validation and deduplication.
    """

    def __init__(self, smiles, label_sets, activity_values):
        # smiles: {compound_id: smiles_string}
        # label_sets: {source: {compound_id: frozenset(labels)}}
        # activity_values: {(compound, target, type): min_value_nm}
        self._smiles = dict(smiles)
        self._compound_ids = tuple(sorted(self._smiles))
        self._compound_set = frozenset(self._compound_ids)

        self._labels_by_compound = {}
        self._compounds_by_label = {}
        for source, per_compound in label_sets.items():
            self._labels_by_compound[source] = {
                c: frozenset(labels) for c, labels in per_compound.items()}
            reverse = {}
            for c, labels in per_compound.items():
                for label in labels:
                    reverse.setdefault(label, set()).add(c)
            self._compounds_by_label[source] = {
                label: frozenset(cs) for label, cs in reverse.items()}
        self._sources = tuple(sorted(self._labels_by_compound))

        self._activity = dict(activity_values)
        by_target = {}
        targets = set()
        for (c, t, atype), value in self._activity.items():
            targets.add(t)
            by_target.setdefault((t, atype), {})[c] = value
        self._by_target = by_target
        self._target_ids = tuple(sorted(targets))
        self._target_set = frozenset(targets)

    # -- construction --------------------------------------------------

    @classmethod
    def build(cls, compounds, labels=(), activities=()):
        """Assemble a corpus from in-memory rows.

        compounds: iterable of compound ids or (id, smiles) pairs.
        labels: iterable of (compound_id, source, label).
        activities: iterable of (compound_id, target_id, activity_type, value_nm).
        """
        smiles = {}
        for row in compounds:
            if isinstance(row, str):
                cid, smi = row, ""
            else:
                cid, smi = row
            if not cid:
                raise ValueError("empty compound id")
            if cid in smiles and smiles[cid] != smi:
                raise ValueError(f"conflicting duplicate compound id {cid!r}")
            smiles[cid] = smi

        label_sets = {}
        for cid, source, label in labels:
            if not (cid and source and label):
                raise ValueError(f"empty field in label row {(cid, source, label)!r}")
            if cid not in smiles:
                raise UnknownCompoundError(
                    f"label row references unknown compound {cid!r}")
            label_sets.setdefault(source, {}).setdefault(cid, set()).add(label)

        activity_values = {}
        for cid, tid, atype, value in activities:
            if not (cid and tid and atype):
                raise ValueError(
                    f"empty field in activity row {(cid, tid, atype, value)!r}")
            value = float(value)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(
                    f"activity value must be finite and positive, got {value!r}")
            if cid not in smiles:
                raise UnknownCompoundError(
                    f"activity row references unknown compound {cid!r}")
            key = (cid, tid, atype)
            prev = activity_values.get(key)
            if prev is None or value < prev:
                activity_values[key] = value

        return cls(smiles, label_sets, activity_values)

    # -- compounds / targets -------------------------------------------

    @property
    def n_compounds(self):
        return len(self._smiles)

    def compound_ids(self):
        """All compound ids, sorted."""
        return self._compound_ids

    def has_compound(self, compound):
        return compound in self._compound_set

    def smiles_of(self, compound):
        try:
            return self._smiles[compound]
        except KeyError:
            raise UnknownCompoundError(f"unknown compound {compound!r}") from None

    def target_ids(self):
        """All target ids (a target exists iff it has an activity record)."""
        return self._target_ids

    def has_target(self, target):
        return target in self._target_set

    # -- labels ----------------------------------------------------------

    def sources(self):
        """Label sources seen during ingestion, sorted."""
        return self._sources

    def _source_map(self, source):
        try:
            return self._labels_by_compound[source]
        except KeyError:
            # The well-known sources are always valid query targets, even in
            # a corpus where no label of theirs was ingested; only free-form
            # source names must have been seen to be queryable.
            if source in (CLASSYFIRE, ONTOCHEM, MORGAN):
                return {}
            raise UnknownSourceError(
                f"unknown label source {source!r}; corpus has {list(self._sources)!r}"
            ) from None

    def labels_of(self, compound, source):
        """Labels carried by `compound` under `source` (may be empty)."""
        per_compound = self._source_map(source)
        if compound not in self._compound_set:
            raise UnknownCompoundError(f"unknown compound {compound!r}")
        return per_compound.get(compound, frozenset())

    def source_labels(self, source):
        """All distinct labels of one source, sorted."""
        self._source_map(source)
        return tuple(sorted(self._compounds_by_label.get(source, ())))

    def compounds_with_label(self, source, label):
        self._source_map(source)
        return self._compounds_by_label.get(source, {}).get(label, frozenset())

    def label_count(self, source, label):
        """Corpus-wide count: number of distinct compounds carrying the label."""
        return len(self.compounds_with_label(source, label))

    def label_count_in_set(self, source, label, compound_set):
        """Number of compounds in `compound_set` carrying `label` under `source`."""
        compound_set = set(compound_set)
        unknown = compound_set - self._compound_set
        if unknown:
            raise UnknownCompoundError(
                f"compound set contains unknown ids: {sorted(unknown)!r}")
        return len(self.compounds_with_label(source, label) & compound_set)

    # -- activities -------------------------------------------------------

    @property
    def n_activity_records(self):
        return len(self._activity)

    def activity_value(self, compound, target, activity_type):
        """Aggregated (minimum) value for one triple, or None if absent."""
        return self._activity.get((compound, target, activity_type))

    def iter_activities(self) -> Iterable[ActivityRecord]:
        """All aggregated activity records, in sorted key order."""
        for key in sorted(self._activity):
            c, t, atype = key
            yield ActivityRecord(c, t, atype, self._activity[key])

    def activity_types(self):
        """Distinct activity type names present in the corpus, sorted."""
        return tuple(sorted({atype for (_, _, atype) in self._activity}))

    def compounds_for_target(self, target, activity_type, max_value_nm=math.inf):
        """Compounds with a record for (target, activity_type) strictly below
        `max_value_nm`.  Passing +inf keeps every compound with any record of
        that type for the target."""
        if target not in self._target_set:
            raise UnknownTargetError(f"unknown target {target!r}")
        entries = self._by_target.get((target, activity_type), {})
        return {c for c, v in entries.items() if v < max_value_nm}

    def targets_of(self, compound, activity_type=None):
        """Targets with at least one record for `compound` (optionally of one type)."""
        if compound not in self._compound_set:
            raise UnknownCompoundError(f"unknown compound {compound!r}")
        return {
            t for (c, t, atype) in self._activity
            if c == compound and (activity_type is None or atype == activity_type)
        }

    # -- misc --------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return (self._smiles == other._smiles
                and self._labels_by_compound == other._labels_by_compound
                and self._activity == other._activity)

    def __hash__(self):
        return object.__hash__(self)

    def __repr__(self):
        return (f"Corpus({self.n_compounds} compounds, "
                f"{len(self._target_ids)} targets, "
                f"{self.n_activity_records} activity records, "
                f"sources={list(self._sources)})")


def load_corpus(compounds_path, labels_path, activities_path):
    """Load and index a corpus from its three TSV files.

    Duplicate (compound, source, label) rows collapse to one; duplicate
    activity rows for the same (compound, target, type) collapse to the
    minimum (most potent) value.  Raises FormatError with a line number on
    malformed rows, and UnknownCompoundError when a label or activity row
    references a compound missing from the compounds file.
    """
    smiles = {}
    for lineno, (cid, smi) in _iter_rows(
            compounds_path, _COMPOUNDS_COLUMNS, header_required=True):
        cid = cid.strip()
        if not cid:
            raise FormatError(compounds_path, lineno, "empty compound id")
        if cid in smiles and smiles[cid] != smi:
            raise FormatError(
                compounds_path, lineno,
                f"duplicate compound id {cid!r} with conflicting smiles")
        smiles[cid] = smi

    label_sets = {}
    for lineno, (cid, source, label) in _iter_rows(
            labels_path, _LABELS_COLUMNS, header_required=False):
        cid, source = cid.strip(), source.strip()
        if not cid or not source or not label:
            raise FormatError(labels_path, lineno, "empty field in label row")
        if cid not in smiles:
            raise UnknownCompoundError(
                f"{labels_path}:{lineno}: label references unknown compound {cid!r}")
        label_sets.setdefault(source, {}).setdefault(cid, set()).add(label)

    activity_values = {}
    for lineno, (cid, tid, atype, raw_value) in _iter_rows(
            activities_path, _ACTIVITIES_COLUMNS, header_required=False):
        cid, tid, atype = cid.strip(), tid.strip(), atype.strip()
        if not cid or not tid or not atype:
            raise FormatError(activities_path, lineno, "empty field in activity row")
        try:
            value = float(raw_value)
        except ValueError:
            raise FormatError(
                activities_path, lineno,
                f"activity value is not a number: {raw_value!r}") from None
        if not math.isfinite(value) or value <= 0:
            raise FormatError(
                activities_path, lineno,
                f"activity value must be finite and positive, got {raw_value!r}")
        if cid not in smiles:
            raise UnknownCompoundError(
                f"{activities_path}:{lineno}: activity references unknown "
                f"compound {cid!r}")
        key = (cid, tid, atype)
        prev = activity_values.get(key)
        if prev is None or value < prev:
            activity_values[key] = value

    return Corpus(smiles, label_sets, activity_values)
