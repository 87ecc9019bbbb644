#!/usr/bin/env python3
"""End-to-end annotation campaign demo with mock annotators and backends.

Builds a synthetic corpus, runs three mock annotators through the campaign
(with double-annotation overlap), exports the event stream, and fits the
clarification quality model on it.
"""

from __future__ import annotations

import argparse
import json
import tempfile

from clarbench.fixtures import drive_campaign, mock_backend, synthetic_corpus
from clarbench.gateway import ChatClient, MockTranscript
from clarbench.quality import FitConfig, LikelihoodForm, QualityDataset, fit_mle
from clarbench.service import CampaignConfig, CampaignService, EventJournal


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=40)
    parser.add_argument("--overlap", type=float, default=0.25)
    args = parser.parse_args()

    corpus = synthetic_corpus(args.n)
    backend = mock_backend("clarifier")
    client = ChatClient(
        {backend.name: backend},
        {backend.name: MockTranscript(default="Il faut agir sur ce point précis.")},
    )
    cfg = CampaignConfig(
        backend_pool=(backend.name,),
        overlap_fraction=args.overlap,
        accounts=(("tok-a", "annotator-a"), ("tok-b", "annotator-b"), ("tok-c", "annotator-c")),
        seed=11,
    )
    with tempfile.TemporaryDirectory() as td:
        journal = EventJournal(td)
        service = CampaignService(corpus, cfg, journal, client=client, admin_token="admin")
        submitted = drive_campaign(service, ["tok-a", "tok-b", "tok-c"])
        doubles = len(service.state.double_ids)
        print(f"contributions: {args.n}  doubles: {doubles}  submitted: {submitted}")
        assert submitted == args.n + doubles

        export = service.export("admin")
        events = export["events"]
        print(f"exported {len(export['records'])} records, {len(events)} events")
        dataset = QualityDataset.from_event_dicts(events)
        result = fit_mle(dataset, FitConfig(), LikelihoodForm.STANDARD_CENSORED)
        print(json.dumps(result.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
