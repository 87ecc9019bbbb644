"""Campaign state and the event-sourced service core.

The ``CampaignService`` resolves every side effect (clock reads, seeded
backend draws, model completions) into a journal event, appends it, and then
folds it into state with the same pure ``_apply`` used during replay, so a
live service and a replayed journal can never diverge.
"""

from __future__ import annotations

import hashlib
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from ..gateway.client import ChatClient
from ..gateway.parsing import strip_clarification
from ..gateway.prompts import Stage, render_prompt
from ..model import (
    AnnotationRecord,
    CharSpan,
    ClarificationEvent,
    Contribution,
    ErrorLabel,
    Phase,
    RecordStatus,
    SkipReason,
    record_from_dict,
    record_to_dict,
    validate_record,
)
from ..pipeline.run import theme_label
from ..textmetrics.segmentation import DocMatchCount, MatchConfig, match_spans
from ..textmetrics.strings import rouge_l_f1
from ..textmetrics.tokens import tokenize, tokens_in_spans
from .journal import EventJournal

TUTORIAL_ITEMS_REQUIRED = 3
TUTORIAL_PASS_F1 = 0.8


class ServiceError(Exception):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


class AuthError(ServiceError):
    def __init__(self, message: str = "invalid token"):
        super().__init__(message, status=401)


class PolicyError(ServiceError):
    def __init__(self, message: str):
        super().__init__(message, status=409)


@dataclass(frozen=True)
class TutorialItem:
    contribution: Contribution
    gold_units: tuple[tuple[CharSpan, ...], ...]
    explanation: str = ""


@dataclass(frozen=True)
class CampaignConfig:
    backend_pool: tuple[str, ...]
    overlap_fraction: float = 0.0
    phase2_start_fraction: float = 0.75
    quota: int | None = None
    seed: int = 0
    lease_timeout_s: float = 3600.0
    accounts: tuple[tuple[str, str], ...] = ()  # (token, display name)
    tutorial: tuple[TutorialItem, ...] = ()
    language: str = "fr"

    def __post_init__(self) -> None:
        if not self.backend_pool:
            raise ValueError("backend pool must be non-empty")
        for frac in (self.overlap_fraction, self.phase2_start_fraction):
            if not (0.0 <= frac <= 1.0):
                raise ValueError("fractions must lie in [0, 1]")


def campaign_config_from_dict(d: dict[str, Any]) -> CampaignConfig:
    from ..model import contribution_from_dict

    tutorial = tuple(
        TutorialItem(
            contribution=contribution_from_dict(item["contribution"]),
            gold_units=tuple(
                tuple(CharSpan(int(s[0]), int(s[1])) for s in unit)
                for unit in item["gold_units"]
            ),
            explanation=item.get("explanation", ""),
        )
        for item in d.get("tutorial", [])
    )
    return CampaignConfig(
        backend_pool=tuple(d["backend_pool"]),
        overlap_fraction=d.get("overlap_fraction", 0.0),
        phase2_start_fraction=d.get("phase2_start_fraction", 0.75),
        quota=d.get("quota"),
        seed=d.get("seed", 0),
        lease_timeout_s=d.get("lease_timeout_s", 3600.0),
        accounts=tuple((a["token"], a["name"]) for a in d.get("accounts", [])),
        tutorial=tutorial,
        language=d.get("language", "fr"),
    )


def double_annotation_ids(contribution_ids: list[str], cfg: CampaignConfig) -> set[str]:
    """Deterministic pseudo-random subset marked for double annotation.

    Ids are ranked by a seeded hash; exactly round(fraction * N) are taken so
    a configured overlap produces an exact assignment count.
    """
    n_double = round(cfg.overlap_fraction * len(contribution_ids))

    def rank(cid: str) -> str:
        return hashlib.sha256(f"{cfg.seed}:{cid}".encode("utf-8")).hexdigest()

    return set(sorted(contribution_ids, key=rank)[:n_double])


@dataclass
class AccountState:
    token: str
    name: str
    tutorial_done: int = 0
    completed: int = 0

    @property
    def tutorial_passed(self) -> bool:
        return self.tutorial_done >= TUTORIAL_ITEMS_REQUIRED


@dataclass
class Lease:
    token: str
    phase: str
    expires_ts: float


class ServiceState:
    """Pure fold target: mutated only by _apply(event)."""

    def __init__(self, corpus: list[Contribution], cfg: CampaignConfig):
        self.cfg = cfg
        self.corpus = {c.id: c for c in corpus}
        self.order = [c.id for c in corpus]
        self.double_ids = double_annotation_ids(self.order, cfg)
        self.total_required = len(self.order) + len(self.double_ids)
        self.accounts = {token: AccountState(token, name) for token, name in cfg.accounts}
        self.leases: dict[str, Lease] = {}
        self.completed_by: dict[str, set[str]] = {}
        self.skipped_by: dict[str, set[str]] = {}
        # (cid, annotator name) -> (seq, record dict, audit dict); latest wins
        self.records: dict[tuple[str, str], tuple[int, dict[str, Any], dict[str, Any]]] = {}
        # (token, cid, au_key) -> list of {"k", "backend", "text"}
        self.attempts: dict[tuple[str, str, str], list[dict[str, Any]]] = {}
        self.completed_total = 0
        self.last_seq = 0

    # -- derived views ----------------------------------------------------

    def annotators_done(self, cid: str) -> set[str]:
        return self.completed_by.get(cid, set()) | self.skipped_by.get(cid, set())

    def required(self, cid: str) -> int:
        return 2 if cid in self.double_ids else 1

    def account_by_name(self, name: str) -> AccountState | None:
        for acct in self.accounts.values():
            if acct.name == name:
                return acct
        return None

    def current_phase(self) -> str:
        if self.total_required == 0:
            return Phase.PHASE1.value
        progress = self.completed_total / self.total_required
        if progress >= self.cfg.phase2_start_fraction:
            return Phase.PHASE2.value
        return Phase.PHASE1.value

    # -- event fold -------------------------------------------------------

    def apply(self, event: dict[str, Any]) -> None:
        seq = event["seq"]
        kind = event["type"]
        if kind == "tutorial_result":
            if event["passed"]:
                self.accounts[event["token"]].tutorial_done += 1
        elif kind == "assigned":
            self.leases[event["cid"]] = Lease(
                token=event["token"], phase=event["phase"], expires_ts=event["expires_ts"]
            )
        elif kind == "lease_expired":
            lease = self.leases.get(event["cid"])
            if lease is not None and lease.token == event["token"]:
                del self.leases[event["cid"]]
        elif kind == "regenerated":
            key = (event["token"], event["cid"], event["au_key"])
            self.attempts.setdefault(key, []).append(
                {"k": event["k"], "backend": event["backend"], "text": event["text"]}
            )
        elif kind == "submitted":
            token = event["token"]
            cid = event["cid"]
            name = self.accounts[token].name
            first_time = name not in self.annotators_done(cid)
            self.records[(cid, name)] = (seq, event["record"], event.get("audit", {}))
            self.completed_by.setdefault(cid, set()).add(name)
            self.leases.pop(cid, None)
            if first_time:
                self.accounts[token].completed += 1
                self.completed_total += 1
            for key in [k for k in self.attempts if k[0] == token and k[1] == cid]:
                del self.attempts[key]
        elif kind == "skipped":
            token = event["token"]
            cid = event["cid"]
            name = self.accounts[token].name
            first_time = name not in self.annotators_done(cid)
            self.records[(cid, name)] = (seq, event["record"], {})
            self.skipped_by.setdefault(cid, set()).add(name)
            self.leases.pop(cid, None)
            if first_time:
                self.accounts[token].completed += 1
                self.completed_total += 1
        elif kind == "exported":
            pass  # audit trail only
        else:
            raise ValueError(f"unknown journal event type {kind!r}")
        self.last_seq = seq

    # -- snapshot codec ---------------------------------------------------

    def to_snapshot(self) -> dict[str, Any]:
        return {
            "accounts": {
                t: {"name": a.name, "tutorial_done": a.tutorial_done, "completed": a.completed}
                for t, a in self.accounts.items()
            },
            "leases": {
                cid: {"token": l.token, "phase": l.phase, "expires_ts": l.expires_ts}
                for cid, l in self.leases.items()
            },
            "completed_by": {cid: sorted(v) for cid, v in self.completed_by.items()},
            "skipped_by": {cid: sorted(v) for cid, v in self.skipped_by.items()},
            "records": [
                {"cid": cid, "annotator": name, "seq": seq, "record": rec, "audit": audit}
                for (cid, name), (seq, rec, audit) in sorted(self.records.items())
            ],
            "attempts": [
                {"token": k[0], "cid": k[1], "au_key": k[2], "attempts": v}
                for k, v in sorted(self.attempts.items())
            ],
            "completed_total": self.completed_total,
            "last_seq": self.last_seq,
        }

    def restore_snapshot(self, snap: dict[str, Any]) -> None:
        for token, d in snap["accounts"].items():
            acct = self.accounts[token]
            acct.tutorial_done = d["tutorial_done"]
            acct.completed = d["completed"]
        self.leases = {
            cid: Lease(d["token"], d["phase"], d["expires_ts"])
            for cid, d in snap["leases"].items()
        }
        self.completed_by = {cid: set(v) for cid, v in snap["completed_by"].items()}
        self.skipped_by = {cid: set(v) for cid, v in snap["skipped_by"].items()}
        self.records = {
            (r["cid"], r["annotator"]): (r["seq"], r["record"], r["audit"])
            for r in snap["records"]
        }
        self.attempts = {
            (a["token"], a["cid"], a["au_key"]): a["attempts"] for a in snap["attempts"]
        }
        self.completed_total = snap["completed_total"]
        self.last_seq = snap["last_seq"]


def replay(
    journal: EventJournal, corpus: list[Contribution], cfg: CampaignConfig
) -> ServiceState:
    """Rebuild state from the snapshot (if any) plus the journal tail."""
    state = ServiceState(corpus, cfg)
    start_seq = 0
    snap = journal.read_snapshot()
    if snap is not None:
        seq, payload = snap
        state.restore_snapshot(payload)
        start_seq = seq
    for event in journal.iter_events(after_seq=start_seq):
        state.apply(event)
    return state


class CampaignService:
    """Single-writer service facade over journal + state."""

    def __init__(
        self,
        corpus: list[Contribution],
        cfg: CampaignConfig,
        journal: EventJournal,
        client: ChatClient | None = None,
        admin_token: str = "",
        clock: Callable[[], float] = time.time,
        snapshot_interval: int = 500,
    ):
        self.cfg = cfg
        self.journal = journal
        self.client = client
        self.admin_token = admin_token
        self.clock = clock
        self.snapshot_interval = snapshot_interval
        self.state = replay(journal, corpus, cfg)
        self._lock = threading.Lock()

    # -- internals ---------------------------------------------------------

    def _commit(self, event: dict[str, Any]) -> dict[str, Any]:
        event = self.journal.append(event)
        self.state.apply(event)
        if self.snapshot_interval and event["seq"] % self.snapshot_interval == 0:
            self.journal.write_snapshot(event["seq"], self.state.to_snapshot())
        return event

    def _account(self, token: str) -> AccountState:
        acct = self.state.accounts.get(token)
        if acct is None:
            raise AuthError()
        return acct

    def _require_admin(self, token: str) -> None:
        if not self.admin_token or token != self.admin_token:
            raise ServiceError("admin token required", status=403)

    def _reap_expired(self, now: float) -> None:
        for cid, lease in list(self.state.leases.items()):
            if lease.expires_ts <= now:
                self._commit({"type": "lease_expired", "cid": cid, "token": lease.token, "ts": now})

    def _pick_backend(self, cid: str, au_key: str, k: int) -> str:
        rng = random.Random(f"{self.cfg.seed}:{cid}:{au_key}:{k}")
        return rng.choice(list(self.cfg.backend_pool))

    # -- public API --------------------------------------------------------

    def login(self, token: str) -> dict[str, Any]:
        acct = self._account(token)
        return {
            "name": acct.name,
            "tutorial_passed": acct.tutorial_passed,
            "tutorial_done": acct.tutorial_done,
            "completed": acct.completed,
        }

    def next_task(self, token: str) -> dict[str, Any]:
        with self._lock:
            acct = self._account(token)
            if self.cfg.tutorial and not acct.tutorial_passed:
                item = self.cfg.tutorial[acct.tutorial_done % len(self.cfg.tutorial)]
                return {
                    "kind": "tutorial",
                    "item_index": acct.tutorial_done + 1,
                    "required": TUTORIAL_ITEMS_REQUIRED,
                    "contribution": _contribution_payload(item.contribution),
                    "explanation": item.explanation,
                }
            if self.cfg.quota is not None and acct.completed >= self.cfg.quota:
                return {"kind": "none", "reason": "quota reached"}
            now = self.clock()
            self._reap_expired(now)
            held = next(
                (cid for cid, l in self.state.leases.items() if l.token == token), None
            )
            if held is not None:
                lease = self.state.leases[held]
                return self._task_payload(held, token, lease.phase, lease.expires_ts)
            candidate = self._pick_contribution(acct)
            if candidate is None:
                return {"kind": "none", "reason": "no eligible contribution"}
            phase = self.state.current_phase()
            expires = now + self.cfg.lease_timeout_s
            self._commit(
                {
                    "type": "assigned",
                    "token": token,
                    "cid": candidate,
                    "phase": phase,
                    "expires_ts": expires,
                    "ts": now,
                }
            )
            return self._task_payload(candidate, token, phase, expires)

    def _pick_contribution(self, acct: AccountState) -> str | None:
        best: str | None = None
        best_key: tuple[int, int] | None = None
        for pos, cid in enumerate(self.state.order):
            done = self.state.annotators_done(cid)
            if acct.name in done:
                continue
            if cid in self.state.leases:
                continue
            if len(done) >= self.state.required(cid):
                continue
            key = (len(done), pos)  # least-annotated first, then corpus order
            if best_key is None or key < best_key:
                best = cid
                best_key = key
        return best

    def _task_payload(self, cid: str, token: str, phase: str, expires: float) -> dict[str, Any]:
        contribution = self.state.corpus[cid]
        attempts = {
            key[2]: list(v)
            for key, v in self.state.attempts.items()
            if key[0] == token and key[1] == cid
        }
        return {
            "kind": "task",
            "contribution": _contribution_payload(contribution),
            "phase": phase,
            "expires_ts": expires,
            "attempts": attempts,
        }

    def regenerate(self, token: str, payload: dict[str, Any]) -> dict[str, Any]:
        with self._lock:
            acct = self._account(token)
            cid = payload["contribution_id"]
            au_key = str(payload["au_key"])
            lease = self.state.leases.get(cid)
            if lease is None or lease.token != token:
                raise PolicyError("no active lease for this contribution")
            prior = self.state.attempts.get((token, cid, au_key), [])
            if lease.phase == Phase.PHASE2.value and prior:
                raise PolicyError("phase 2 forbids regenerating the first clarification")
            k = len(prior) + 1
            backend = self._pick_backend(cid, au_key, k)
            contribution = self.state.corpus[cid]
            messages = render_prompt(
                Stage.CLARIFICATION,
                {
                    "contribution": contribution.text,
                    "theme": theme_label(contribution.theme, self.cfg.language),
                    "argumentative unit": payload.get("au_text", ""),
                    "statements": "; ".join(payload.get("statements", [])),
                    "premises": "; ".join(payload.get("premises", [])),
                    "solutions": "; ".join(payload.get("solutions", [])),
                },
                language=self.cfg.language,
            )
            if self.client is None:
                raise ServiceError("no clarification backend configured", status=503)
            completion = self.client.complete(backend, messages)
            text = strip_clarification(completion.text).text
            self._commit(
                {
                    "type": "regenerated",
                    "token": token,
                    "cid": cid,
                    "au_key": au_key,
                    "k": k,
                    "backend": backend,
                    "text": text,
                    "raw_text": completion.text,
                    "ts": self.clock(),
                }
            )
            return {"au_key": au_key, "attempt_index": k, "backend": backend, "text": text}

    def submit(self, token: str, payload: dict[str, Any]) -> dict[str, Any]:
        with self._lock:
            acct = self._account(token)
            cid = payload["contribution_id"]
            contribution = self.state.corpus.get(cid)
            if contribution is None:
                # Tutorial submissions reference tutorial fixtures.
                return self._submit_tutorial(acct, payload)
            if self.cfg.tutorial and not acct.tutorial_passed:
                raise PolicyError("tutorial not passed")
            lease = self.state.leases.get(cid)
            resubmission = acct.name in self.state.annotators_done(cid)
            if not resubmission and (lease is None or lease.token != token):
                raise PolicyError("no active lease for this contribution")

            if lease is not None and lease.token == token:
                phase = lease.phase
            elif resubmission:
                phase = self.state.records[(cid, acct.name)][1]["phase"]
            else:
                phase = Phase.PHASE1.value
            units = payload["units"]
            record_dict = {
                "contribution_id": cid,
                "annotator_id": acct.name,
                "phase": phase,
                "units": units,
                "events": [],
                "status": RecordStatus.COMPLETED.value,
                "skip_reason": None,
            }
            events, audit = self._build_events(token, cid, units)
            record_dict["events"] = events
            record = record_from_dict(record_dict)
            violations = validate_record(record, contribution)
            if violations:
                return {
                    "accepted": False,
                    "violations": [
                        {"invariant": v.invariant, "detail": v.detail} for v in violations
                    ],
                }
            self._commit(
                {
                    "type": "submitted",
                    "token": token,
                    "cid": cid,
                    "record": record_dict,
                    "audit": audit,
                    "ts": self.clock(),
                }
            )
            return {"accepted": True, "completed": self.state.accounts[token].completed}

    def _build_events(
        self, token: str, cid: str, units: list[dict[str, Any]]
    ) -> tuple[list[dict[str, Any]], dict[str, Any]]:
        contribution = self.state.corpus[cid]
        events: list[dict[str, Any]] = []
        audit: dict[str, Any] = {}
        for idx, unit in enumerate(units):
            au_key = str(idx)
            attempts = self.state.attempts.get((token, cid, au_key), [])
            if not attempts:
                continue
            final_text = unit.get("clarification") or ""
            au_ref = f"{cid}:{idx}"
            for att in attempts[:-1]:
                events.append(
                    {
                        "au_ref": au_ref,
                        "backend": att["backend"],
                        "attempt_index": att["k"],
                        "accepted": False,
                        "observed_quality": None,
                        "error_labels": None,
                    }
                )
            last = attempts[-1]
            quality = rouge_l_f1(last["text"], final_text)
            events.append(
                {
                    "au_ref": au_ref,
                    "backend": last["backend"],
                    "attempt_index": last["k"],
                    "accepted": True,
                    "observed_quality": quality,
                    "error_labels": sorted(
                        l.value for l in _error_labels(unit)
                    ) or None,
                }
            )
            au_text = " ".join(
                contribution.text[s[0] : s[1]] for s in unit.get("spans", [])
            )
            audit[au_ref] = {
                "au_text": au_text,
                "llm_text": last["text"],
                "final_text": final_text,
                "attempts": list(attempts),
            }
        return events, audit

    def _submit_tutorial(self, acct: AccountState, payload: dict[str, Any]) -> dict[str, Any]:
        cid = payload["contribution_id"]
        item = next(
            (t for t in self.cfg.tutorial if t.contribution.id == cid), None
        )
        if item is None:
            raise ServiceError(f"unknown contribution {cid!r}", status=404)
        if acct.tutorial_passed:
            raise PolicyError("tutorial already passed")
        tokens = tokenize(item.contribution.text)
        gold_sets = [tokens_in_spans(tokens, list(spans)) for spans in item.gold_units]
        got_sets = [
            tokens_in_spans(tokens, [CharSpan(s[0], s[1]) for s in unit["spans"]])
            for unit in payload["units"]
        ]
        got_sets = [s for s in got_sets if s]
        res = match_spans(got_sets, gold_sets, MatchConfig(overlap_threshold=0.5))
        doc = DocMatchCount(len(res.pairs), len(got_sets), len(gold_sets))
        f1 = (
            2 * doc.matched / (doc.n_a + doc.n_b) if (doc.n_a + doc.n_b) else 0.0
        )
        passed = f1 >= TUTORIAL_PASS_F1
        self._commit(
            {
                "type": "tutorial_result",
                "token": acct.token,
                "item_index": acct.tutorial_done + 1,
                "passed": passed,
                "f1": f1,
                "ts": self.clock(),
            }
        )
        return {
            "tutorial": True,
            "passed": passed,
            "f1": f1,
            "remaining": max(0, TUTORIAL_ITEMS_REQUIRED - self.state.accounts[acct.token].tutorial_done),
        }

    def skip(self, token: str, payload: dict[str, Any]) -> dict[str, Any]:
        with self._lock:
            acct = self._account(token)
            cid = payload["contribution_id"]
            reason = SkipReason(payload["reason"])
            lease = self.state.leases.get(cid)
            if lease is None or lease.token != token:
                raise PolicyError("no active lease for this contribution")
            record_dict = {
                "contribution_id": cid,
                "annotator_id": acct.name,
                "phase": lease.phase,
                "units": [],
                "events": [],
                "status": RecordStatus.SKIPPED.value,
                "skip_reason": reason.value,
            }
            self._commit(
                {
                    "type": "skipped",
                    "token": token,
                    "cid": cid,
                    "reason": reason.value,
                    "record": record_dict,
                    "ts": self.clock(),
                }
            )
            return {"accepted": True, "skipped": cid}

    def my_annotations(self, token: str) -> list[dict[str, Any]]:
        acct = self._account(token)
        out = [
            rec
            for (cid, name), (_seq, rec, _audit) in sorted(self.state.records.items())
            if name == acct.name
        ]
        return out

    def all_annotations(self, admin_token: str) -> list[dict[str, Any]]:
        self._require_admin(admin_token)
        return [rec for _key, (_seq, rec, _a) in sorted(self.state.records.items())]

    def export(self, admin_token: str) -> dict[str, list[dict[str, Any]]]:
        """Deterministic export: records plus the quality-model event stream."""
        self._require_admin(admin_token)
        with self._lock:
            self._commit({"type": "exported", "ts": self.clock(), "token": "admin"})
            records = []
            events = []
            for (cid, name), (_seq, rec, audit) in sorted(self.state.records.items()):
                records.append(rec)
                for ev in rec.get("events", []):
                    row = {
                        "contribution_id": cid,
                        "annotator_id": name,
                        "au_ref": ev["au_ref"],
                        "backend": ev["backend"],
                        "attempt_index": ev["attempt_index"],
                        "accepted": ev["accepted"],
                        "observed_quality": ev["observed_quality"],
                    }
                    texts = audit.get(ev["au_ref"])
                    if ev["accepted"] and texts:
                        row["au_text"] = texts["au_text"]
                        row["llm_text"] = texts["llm_text"]
                        row["final_text"] = texts["final_text"]
                    events.append(row)
            return {"records": records, "events": events}


def _contribution_payload(c: Contribution) -> dict[str, Any]:
    return {
        "id": c.id,
        "theme": c.theme.value,
        "text": c.text,
        "sentence_count": c.sentence_count,
        "char_length": c.char_length,
    }


def _error_labels(unit: dict[str, Any]) -> list[ErrorLabel]:
    labels = unit.get("error_labels") or []
    return [ErrorLabel(l) for l in labels]
