"""Email-digest ingestion: parse, repair, canonicalize, and summarize.

Reads a line-structured email digest into an immutable Corpus. Two input
layouts are understood:

  * the canonical corpus schema (ours):
      {"version": 1, "ego": id-or-null,
       "people": [{"id": int, "name": str, "org": str-or-null}, ...],
       "threads": [[{"sender": int, "recipients": [int], "cc": [int],
                     "time": iso-or-null, "subject": str, "body": str}, ...], ...],
       "counts": {"dropped": int, "unparsed_timestamps": int}}   # optional
  * the released digest layout (adapter): top-level "emails" (list of
    threads) plus "names" and an optional parallel "orgs" list.

Timestamps are repaired before parsing (OCR de-spacing of weekday/month
names, l<->1 swaps in numeric fields, trailing zone abbreviations) and
timestamps without zone information are interpreted as US Eastern; all
stored timestamps are naive Eastern local times. Emails missing a sender
or all recipients are dropped and counted; emails whose timestamp cannot
be parsed are kept with a null timestamp and counted.

Typical use:

    corpus = parse_digest(Path("corpus.json").read_text())
    print(corpus_stats(corpus))
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from zoneinfo import ZoneInfo

EASTERN = ZoneInfo("America/New_York")

ORGS = ("NIH", "HHS", "CDC", "FDA", "OS", "EOP")

SCHEMA_VERSION = 1


class DigestParseError(ValueError):
    """Malformed digest document; byte_offset locates the problem when known."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class SchemaVersionError(DigestParseError):
    pass


class AmbiguousNameError(ValueError):
    """Fuzzy name match found several candidates; an alias entry is required."""

    def __init__(self, raw: str, candidates: list[str]):
        super().__init__(
            f"ambiguous name {raw!r}: candidates {candidates}; add an alias entry"
        )
        self.raw = raw
        self.candidates = candidates


@dataclass(frozen=True)
class PersonId:
    id: int
    canonical_name: str
    org: str | None = None

    def __post_init__(self):
        if self.org is not None and self.org not in ORGS:
            raise ValueError(f"unknown org {self.org!r}")


@dataclass(frozen=True)
class Email:
    sender: int
    recipients: frozenset[int]
    cc: frozenset[int]
    timestamp: datetime | None
    subject: str
    body: str
    thread_id: int
    index_in_thread: int


@dataclass(frozen=True)
class Corpus:
    people: tuple[PersonId, ...]
    threads: tuple[tuple[Email, ...], ...]
    ego: int | None = None
    dropped_count: int = 0
    unparsed_timestamp_count: int = 0

    def emails(self):
        for thread in self.threads:
            yield from thread

    def num_emails(self) -> int:
        return sum(len(t) for t in self.threads)

    def person(self, name: str) -> PersonId:
        for p in self.people:
            if p.canonical_name == name:
                return p
        raise KeyError(name)


# ---------------------------------------------------------------------------
# timestamp parsing


def _despace_pattern(word: str) -> re.Pattern:
    return re.compile(r"\s*".join(re.escape(ch) for ch in word), re.IGNORECASE)


_WORDS = (
    "Monday Tuesday Wednesday Thursday Friday Saturday Sunday "
    "January February March April May June July August September "
    "October November December"
).split()

_DESPACE = [(_despace_pattern(w), w) for w in _WORDS if len(w) > 3]

# fixed US zone abbreviations -> UTC offset hours
_ZONE_OFFSETS = {
    "EST": -5, "EDT": -4, "ET": None, "CST": -6, "CDT": -5,
    "MST": -7, "MDT": -6, "PST": -8, "PDT": -7, "UTC": 0, "GMT": 0, "UT": 0,
}

_ZONE_RE = re.compile(r"\s+\(?(%s)\)?\s*$" % "|".join(_ZONE_OFFSETS))

# tried in this fixed order; appending patterns never un-parses a string
TIMESTAMP_FORMATS = (
    "%A, %B %d, %Y %I:%M %p",
    "%A, %B %d, %Y %I:%M:%S %p",
    "%a, %d %b %Y %H:%M",
    "%a, %d %b %Y %H:%M:%S",
    "%a, %d %b %Y %H:%M:%S %z",
    "%m/%d/%Y %I:%M %p",
    "%m/%d/%Y %H:%M",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M:%S%z",
    "%Y-%m-%d %H:%M",
    "%B %d, %Y %I:%M %p",
    "%A, %B %d, %Y",
)


def repair_timestamp_text(raw: str) -> str:
    """Apply the OCR repair substitutions to a raw timestamp field."""
    text = " ".join(raw.split())
    for pat, word in _DESPACE:
        text = pat.sub(word, text)
    # letter l <-> digit 1 in mixed fields
    text = re.sub(r"(?<=\d)[lI]", "1", text)
    text = re.sub(r"[lI](?=\d)", "1", text)
    text = re.sub(r"(?<=[A-Za-z])1(?=[A-Za-z])", "l", text)
    return text


def _to_eastern(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        return dt
    return dt.astimezone(EASTERN).replace(tzinfo=None)


def parse_timestamp(raw: str, formats: tuple[str, ...] = TIMESTAMP_FORMATS) -> datetime | None:
    """Parse a header timestamp, or return None if every format fails.

    Never raises; unparseable input is the caller's to count. Zoned inputs
    are converted to Eastern; naive inputs are taken to already be Eastern.
    """
    if not raw or not raw.strip():
        return None
    text = repair_timestamp_text(raw)
    zone_hours: int | None = None
    m = _ZONE_RE.search(text)
    if m:
        zone_hours = _ZONE_OFFSETS[m.group(1)]
        text = text[: m.start()]
    for fmt in formats:
        try:
            dt = datetime.strptime(text, fmt)
        except ValueError:
            continue
        if dt.tzinfo is None and zone_hours is not None:
            dt = dt.replace(tzinfo=timezone(timedelta(hours=zone_hours)))
        return _to_eastern(dt)
    return None


# ---------------------------------------------------------------------------
# name canonicalization


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _normalized_distance(a: str, b: str) -> float:
    if not a and not b:
        return 0.0
    return _levenshtein(a, b) / max(len(a), len(b))


def _display_form(raw: str) -> str:
    return " ".join(raw.strip().lower().split())


def _despaced(name: str) -> str:
    return re.sub(r"\s+", "", name)


class NameRegistry:
    """Grow a canonical-person table from raw header name tokens.

    Resolution order: alias table, exact despaced match, fuzzy match
    against every known person's match keys (full name, comma parts,
    reversed "first last" form). A fuzzy tie within the margin is a hard
    error rather than a guess. "on behalf of" composites stay distinct.
    """

    def __init__(self, alias_table: dict[str, str] | None = None,
                 threshold: float = 0.15, tie_margin: float = 0.02):
        self.alias_table = {_display_form(k): _display_form(v)
                            for k, v in (alias_table or {}).items()}
        self.threshold = threshold
        self.tie_margin = tie_margin
        self.people: list[PersonId] = []
        self._by_key: dict[str, int] = {}  # despaced canonical -> id

    def _match_keys(self, name: str) -> list[str]:
        keys = [_despaced(name)]
        parts = [p.strip() for p in name.split(",") if p.strip()]
        if len(parts) > 1:
            keys.extend(_despaced(p) for p in parts)
            if len(parts) == 2:
                keys.append(_despaced(parts[1] + parts[0]))
        return keys

    def _create(self, name: str, org: str | None = None) -> PersonId:
        person = PersonId(len(self.people), name, org)
        self.people.append(person)
        self._by_key[_despaced(name)] = person.id
        return person

    def get_or_create(self, canonical: str, org: str | None = None) -> PersonId:
        name = _display_form(canonical)
        pid = self._by_key.get(_despaced(name))
        if pid is not None:
            return self.people[pid]
        return self._create(name, org)

    def resolve(self, raw: str) -> PersonId:
        if not raw or not raw.strip():
            raise ValueError("empty name token")
        name = _display_form(raw)
        alias = self.alias_table.get(name)
        if alias is not None:
            return self.get_or_create(alias)
        key = _despaced(name)
        pid = self._by_key.get(key)
        if pid is not None:
            return self.people[pid]
        if "on behalf of" in name:
            return self._create(name)
        # fuzzy: best distance per person over its match keys
        best: list[tuple[float, int]] = []
        for person in self.people:
            d = min(_normalized_distance(key, k) for k in self._match_keys(person.canonical_name))
            if d <= self.threshold:
                best.append((d, person.id))
        if best:
            best.sort()
            if len(best) > 1 and best[1][0] - best[0][0] <= self.tie_margin:
                names = [self.people[pid].canonical_name
                         for d, pid in best if d - best[0][0] <= self.tie_margin]
                raise AmbiguousNameError(raw, names)
            return self.people[best[0][1]]
        return self._create(name)


def canonicalize_name(raw: str, alias_table: dict[str, str] | None = None,
                      registry: NameRegistry | None = None) -> PersonId:
    """Resolve one raw name token; a fresh registry is used when none is given."""
    if registry is None:
        registry = NameRegistry(alias_table)
    return registry.resolve(raw)


def load_alias_table(text: str) -> dict[str, str]:
    """Read a versioned alias sidecar: {"version": 1, "aliases": {raw: canonical}}."""
    data = json.loads(text)
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported alias table version {data.get('version')!r}")
    aliases = data.get("aliases", {})
    if not isinstance(aliases, dict):
        raise DigestParseError("alias table 'aliases' must be an object")
    return dict(aliases)


# ---------------------------------------------------------------------------
# digest parsing


def _parse_json(document: str) -> dict:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DigestParseError(f"malformed JSON: {exc.msg}", byte_offset=exc.pos) from exc
    if not isinstance(data, dict):
        raise DigestParseError("digest root must be an object")
    return data


def _read_time(value, unparsed: list[int]) -> datetime | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise DigestParseError(f"bad time value {value!r}")
    try:
        return _to_eastern(datetime.fromisoformat(value))
    except ValueError:
        pass
    ts = parse_timestamp(value)
    if ts is None:
        unparsed[0] += 1
    return ts


def _build_threads(raw_threads, people_count: int, unparsed: list[int]):
    threads = []
    dropped = 0
    for tid, raw_thread in enumerate(raw_threads):
        emails = []
        for raw_email in raw_thread:
            sender = raw_email.get("sender")
            if not isinstance(sender, int) or not (0 <= sender < people_count):
                dropped += 1
                continue
            recipients = frozenset(
                r for r in raw_email.get("recipients", [])
                if isinstance(r, int) and 0 <= r < people_count
            )
            if not recipients:
                dropped += 1
                continue
            cc = frozenset(
                c for c in raw_email.get("cc", [])
                if isinstance(c, int) and 0 <= c < people_count
            )
            ts = _read_time(raw_email.get("time"), unparsed)
            emails.append(Email(
                sender=sender,
                recipients=recipients,
                cc=cc,
                timestamp=ts,
                subject=raw_email.get("subject") or "",
                body=raw_email.get("body") or "",
                thread_id=len(threads),
                index_in_thread=len(emails),
            ))
        if emails:
            threads.append(tuple(emails))
    return tuple(threads), dropped


def _parse_canonical(data: dict) -> Corpus:
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema version {data.get('version')!r}")
    people = []
    for i, raw in enumerate(data.get("people", [])):
        if raw.get("id") != i:
            raise DigestParseError(f"people ids must be dense 0..n-1, got {raw.get('id')!r} at {i}")
        org = raw.get("org")
        people.append(PersonId(i, _display_form(raw["name"]), org if org else None))
    names = [p.canonical_name for p in people]
    if len(set(names)) != len(names):
        raise DigestParseError("duplicate canonical name in people")
    unparsed = [0]
    threads, dropped = _build_threads(data.get("threads", []), len(people), unparsed)
    ego = data.get("ego")
    if ego is not None and not (isinstance(ego, int) and 0 <= ego < len(people)):
        raise DigestParseError(f"bad ego {ego!r}")
    counts = data.get("counts") or {}
    return Corpus(
        people=tuple(people),
        threads=threads,
        ego=ego,
        dropped_count=dropped + counts.get("dropped", 0),
        unparsed_timestamp_count=unparsed[0] + counts.get("unparsed_timestamps", 0),
    )


def _parse_release(data: dict) -> Corpus:
    """Adapter for the released digest layout: "emails" + "names" (+ "orgs")."""
    names = data.get("names")
    if not isinstance(names, list):
        raise DigestParseError("release digest needs a 'names' list")
    orgs = data.get("orgs") or []
    people = []
    for i, name in enumerate(names):
        org = orgs[i] if i < len(orgs) else None
        if isinstance(org, str):
            org = org.strip().upper() or None
        if org not in ORGS:
            org = None
        people.append(PersonId(i, _display_form(str(name)), org))
    unparsed = [0]
    threads, dropped = _build_threads(data.get("emails", []), len(people), unparsed)
    # the head of every thread is the account holder's outgoing mail; the
    # modal head sender is the designated ego
    head_counts: dict[int, int] = {}
    for thread in threads:
        head_counts[thread[0].sender] = head_counts.get(thread[0].sender, 0) + 1
    ego = None
    if head_counts:
        ego = max(head_counts.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    return Corpus(
        people=tuple(people),
        threads=threads,
        ego=ego,
        dropped_count=dropped,
        unparsed_timestamp_count=unparsed[0],
    )


def parse_digest(document: str | dict) -> Corpus:
    """Parse a digest document (canonical schema or release-layout adapter)."""
    data = _parse_json(document) if isinstance(document, str) else document
    if "emails" in data and "names" in data:
        return _parse_release(data)
    if "version" in data:
        return _parse_canonical(data)
    raise DigestParseError("unrecognized digest layout (no 'version', no 'emails'/'names')")


def serialize_corpus(corpus: Corpus) -> str:
    """Write the canonical corpus schema; parse_digest inverts it exactly."""
    data = {
        "version": SCHEMA_VERSION,
        "ego": corpus.ego,
        "people": [
            {"id": p.id, "name": p.canonical_name, "org": p.org} for p in corpus.people
        ],
        "threads": [
            [
                {
                    "sender": e.sender,
                    "recipients": sorted(e.recipients),
                    "cc": sorted(e.cc),
                    "time": e.timestamp.isoformat() if e.timestamp else None,
                    "subject": e.subject,
                    "body": e.body,
                }
                for e in thread
            ]
            for thread in corpus.threads
        ],
        "counts": {
            "dropped": corpus.dropped_count,
            "unparsed_timestamps": corpus.unparsed_timestamp_count,
        },
    }
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# duplicates and statistics


def _normalized_subject(subject: str) -> str:
    return " ".join(subject.lower().split())


def detect_duplicates(corpus: Corpus) -> list[list[Email]]:
    """Group emails equal under (sender, recipients, cc, time, subject).

    A group of size k contributes k-1 duplicate emails.
    """
    groups: dict[tuple, list[Email]] = {}
    for email in corpus.emails():
        key = (
            email.sender,
            email.recipients,
            email.cc,
            email.timestamp,
            _normalized_subject(email.subject),
        )
        groups.setdefault(key, []).append(email)
    return [g for g in groups.values() if len(g) > 1]


def duplicate_count(corpus: Corpus) -> int:
    return sum(len(g) - 1 for g in detect_duplicates(corpus))


def corpus_stats(corpus: Corpus) -> dict:
    """Aggregate corpus counts; percentages are rounded to 0.1."""
    emails = list(corpus.emails())
    n_emails = len(emails)
    n_people = len(corpus.people)
    timestamped = sum(1 for e in emails if e.timestamp is not None)
    with_org = sum(1 for p in corpus.people if p.org is not None)
    return {
        "emails": n_emails,
        "threads": len(corpus.threads),
        "people": n_people,
        "duplicates": duplicate_count(corpus),
        "pct_timestamped": round(100.0 * timestamped / n_emails, 1) if n_emails else 0.0,
        "pct_with_org": round(100.0 * with_org / n_people, 1) if n_people else 0.0,
    }
