import itertools
import json
import random

import pytest
from fastapi.testclient import TestClient

from eyebench.humaneval import (AlreadyRated, DuplicateSampleIds, EvalSample,
                                OutOfRange, RatingRecord, SessionStore,
                                UnknownRater, aggregate, create_session,
                                next_item, submit_rating)
from eyebench.service import create_app


def sample(i, models, text="Note text XXX"):
    return EvalSample(sample_id=f"s{i}", text=text,
                      responses={m: f"response body {i} for slot owner" for m in models})


def distinct_samples(n, models):
    return [EvalSample(sample_id=f"s{i}", text=f"Patient note {i}",
                       responses={m: f"reply-{i}-{j}" for j, m in enumerate(models)})
            for i in range(n)]


MODELS = ["model-left", "model-middle", "model-right"]


def make_session(n_samples=3, models=MODELS, raters=("r1", "r2"), seed=11):
    return create_session(distinct_samples(n_samples, models), models, list(raters), seed)


class TestCreateSession:
    def test_27_samples_3_models_2_raters(self):
        session = make_session(27)
        assert len(session.assignment) == 27
        for perm in session.assignment.values():
            assert sorted(perm) == sorted(MODELS)
        pending = len(session.samples) * len(session.models) * len(session.raters)
        assert pending == 162

    def test_two_models_permutation_space(self):
        models = ["m1", "m2"]
        session = create_session(distinct_samples(1, models), models, ["r"], 5)
        assert session.assignment["s0"] in (("m1", "m2"), ("m2", "m1"))

    def test_same_seed_identical_assignment(self):
        assert make_session(9, seed=4).assignment == make_session(9, seed=4).assignment

    def test_assignments_vary_across_samples(self):
        session = make_session(30, seed=2)
        assert len(set(session.assignment.values())) > 1

    def test_duplicate_sample_ids(self):
        dup = [sample(1, MODELS), sample(1, MODELS)]
        with pytest.raises(DuplicateSampleIds):
            create_session(dup, MODELS, ["r"], 0)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            create_session([], MODELS, ["r"], 0)
        with pytest.raises(ValueError):
            create_session(distinct_samples(1, ["one"]), ["one"], ["r"], 0)


class TestNextItem:
    def test_fresh_session_serves_first_sample(self):
        session = make_session()
        item = next_item(session, "r1")
        assert item.sample_id == "s0" and item.sample_index == 1
        assert item.pending_slots == (1, 2, 3)

    def test_blinded_payload_has_no_model_ids(self):
        session = make_session()
        payload = json.dumps(next_item(session, "r1").to_payload())
        for model in MODELS:
            assert model not in payload

    def test_responses_follow_display_order(self):
        session = make_session(1)
        item = next_item(session, "r1")
        order = session.assignment["s0"]
        expected = [session.samples[0].responses[m] for m in order]
        assert list(item.responses) == expected

    def test_done_when_all_rated(self):
        session = make_session(1, raters=("r1",))
        for slot in (1, 2, 3):
            submit_rating(session, RatingRecord("session", "r1", "s0", slot, 3, 3, 3))
        assert next_item(session, "r1") is None

    def test_unknown_rater(self):
        with pytest.raises(UnknownRater):
            next_item(make_session(), "stranger")


class TestSubmitRating:
    def test_accept_then_reject_duplicate(self):
        session = make_session()
        record = RatingRecord("session", "r1", "s0", 1, 4, 5, 3)
        submit_rating(session, record)
        with pytest.raises(AlreadyRated):
            submit_rating(session, RatingRecord("session", "r1", "s0", 1, 2, 2, 2))

    def test_out_of_range(self):
        session = make_session()
        with pytest.raises(OutOfRange):
            submit_rating(session, RatingRecord("session", "r1", "s0", 1, 6, 3, 3))
        with pytest.raises(OutOfRange):
            submit_rating(session, RatingRecord("session", "r1", "s0", 1, 0, 3, 3))

    def test_unknown_slot(self):
        session = make_session()
        with pytest.raises(Exception):
            submit_rating(session, RatingRecord("session", "r1", "s0", 9, 3, 3, 3))

    def test_other_rater_can_rate_same_slot(self):
        session = make_session()
        submit_rating(session, RatingRecord("session", "r1", "s0", 1, 4, 4, 4))
        submit_rating(session, RatingRecord("session", "r2", "s0", 1, 5, 5, 5))


def rate_everything(session, value_fn):
    """value_fn(rater, sample_id, model) -> (corr, comp, read)"""
    for rater in session.raters:
        for s in session.samples:
            order = session.assignment[s.sample_id]
            for slot, model in enumerate(order, start=1):
                c, k, r = value_fn(rater, s.sample_id, model)
                submit_rating(session, RatingRecord(
                    session.id, rater, s.sample_id, slot, c, k, r))


class TestAggregate:
    def test_two_rater_average_is_4_5(self):
        session = make_session(1, models=["m1", "m2"], raters=("r1", "r2"))
        values = {"r1": 4, "r2": 5}

        rate_everything(session, lambda rater, sid, m: (values[rater],) * 3)
        report = aggregate(session)
        assert report.complete
        assert report.per_sample[("s0", "m1", "correctness")] == pytest.approx(4.5)
        assert report.means[("m1", "correctness")] == pytest.approx(4.5)

    def test_all_threes(self):
        session = make_session(4)
        rate_everything(session, lambda *a: (3, 3, 3))
        report = aggregate(session)
        for model in MODELS:
            for dim in ("correctness", "completeness", "readability"):
                assert report.means[(model, dim)] == 3.0

    def test_hand_built_two_by_two_oracle(self):
        # 2 samples x 2 models x 2 raters; means computed by direct arithmetic
        models = ["mA", "mB"]
        session = create_session(distinct_samples(2, models), models, ["r1", "r2"], 3)
        table = {
            ("r1", "s0", "mA"): (1, 2, 3), ("r1", "s0", "mB"): (5, 4, 3),
            ("r1", "s1", "mA"): (2, 2, 2), ("r1", "s1", "mB"): (4, 4, 4),
            ("r2", "s0", "mA"): (3, 3, 3), ("r2", "s0", "mB"): (5, 5, 5),
            ("r2", "s1", "mA"): (1, 1, 1), ("r2", "s1", "mB"): (3, 3, 3),
        }
        rate_everything(session, lambda rater, sid, m: table[(rater, sid, m)])
        report = aggregate(session)
        # oracle: mean over the four (rater, sample) ratings per model/dim
        assert report.means[("mA", "correctness")] == pytest.approx((1 + 2 + 3 + 1) / 4)
        assert report.means[("mA", "completeness")] == pytest.approx((2 + 2 + 3 + 1) / 4)
        assert report.means[("mB", "correctness")] == pytest.approx((5 + 4 + 5 + 3) / 4)
        assert report.per_sample[("s1", "mB", "readability")] == pytest.approx((4 + 3) / 2)

    def test_partial_flagged_incomplete(self):
        session = make_session(2)
        submit_rating(session, RatingRecord(session.id, "r1", "s0", 1, 3, 3, 3))
        report = aggregate(session)
        assert not report.complete

    def test_permutation_consistent(self):
        # relabeling display slots together with the assignment leaves the
        # aggregate unchanged
        models = ["mA", "mB", "mC"]
        session = create_session(distinct_samples(3, models), models, ["r1"], 7)
        rng = random.Random(0)
        rate_everything(session, lambda *a: (rng.randint(1, 5),) * 3)
        base = aggregate(session).means

        relabeled = create_session(distinct_samples(3, models), models, ["r1"], 7)
        swap = {1: 2, 2: 3, 3: 1}
        relabeled.assignment = {
            sid: tuple(perm[swap[i + 1] - 1] for i in range(3))
            for sid, perm in session.assignment.items()
        }
        for record in session.ratings:
            # the rating that was shown in slot k now lives in the slot that
            # maps to the same model
            inverse = {v: k for k, v in swap.items()}
            submit_rating(relabeled, RatingRecord(
                relabeled.id, record.rater_id, record.sample_id,
                inverse[record.display_slot], record.correctness,
                record.completeness, record.readability))
        assert aggregate(relabeled).means == base


class TestBlindingProperty:
    def test_100_randomized_sessions_leak_nothing(self):
        rng = random.Random(123)
        for trial in range(100):
            models = [f"secret-model-{trial}-{i}" for i in range(rng.randint(2, 4))]
            n = rng.randint(1, 5)
            session = create_session(distinct_samples(n, models), models,
                                     ["rater-a", "rater-b"], rng.randrange(2**31))
            for rater in session.raters:
                item = next_item(session, rater)
                while item is not None:
                    payload = json.dumps(item.to_payload())
                    for model in models:
                        assert model not in payload
                    for slot in item.pending_slots:
                        submit_rating(session, RatingRecord(
                            session.id, rater, item.sample_id, slot, 3, 3, 3))
                    item = next_item(session, rater)


class TestPersistence:
    def test_round_trip_same_next_item_sequence(self, tmp_path):
        store = SessionStore(tmp_path)
        session = make_session(3)
        store.save(session)
        store.append_rating(session, RatingRecord(session.id, "r1", "s0", 1, 4, 4, 4))
        store.append_rating(session, RatingRecord(session.id, "r1", "s0", 2, 2, 3, 4))

        loaded = store.load(session.id)
        assert loaded.assignment == session.assignment
        assert len(loaded.ratings) == 2
        assert next_item(loaded, "r1") == next_item(session, "r1")

    def test_log_is_append_only(self, tmp_path):
        store = SessionStore(tmp_path)
        session = make_session(1)
        store.save(session)
        store.append_rating(session, RatingRecord(session.id, "r1", "s0", 1, 4, 4, 4))
        log = (tmp_path / session.id / "ratings.jsonl").read_text()
        store.append_rating(session, RatingRecord(session.id, "r1", "s0", 2, 1, 1, 1))
        log2 = (tmp_path / session.id / "ratings.jsonl").read_text()
        assert log2.startswith(log)


class TestService:
    @pytest.fixture
    def client(self, tmp_path):
        store = SessionStore(tmp_path)
        session = make_session(2)
        store.save(session)
        return TestClient(create_app(store))

    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_rubric_served_with_anchor_lines(self, client):
        rubric = client.get("/rubric").json()
        anchors = rubric["dimensions"]["correctness"]["anchors"]
        assert len(anchors) == 5
        assert anchors["1"].startswith("1 (bad):")
        assert "false or misleading information" in anchors["1"]

    def test_next_and_rate_flow(self, client):
        got = client.get("/sessions/session/next", params={"rater": "r1"}).json()
        assert got["done"] is False
        item = got["item"]
        assert item["responses"][0]["label"] == "Response 1"
        body = {"rater_id": "r1", "sample_id": item["sample_id"],
                "display_slot": 1, "correctness": 4, "completeness": 4,
                "readability": 5}
        assert client.post("/sessions/session/ratings", json=body).status_code == 201
        dup = client.post("/sessions/session/ratings", json=body)
        assert dup.status_code == 409

    def test_validation_errors(self, client):
        bad = {"rater_id": "r1", "sample_id": "s0", "display_slot": 1,
               "correctness": 6, "completeness": 4, "readability": 5}
        assert client.post("/sessions/session/ratings", json=bad).status_code == 422
        unknown_rater = client.get("/sessions/session/next", params={"rater": "zz"})
        assert unknown_rater.status_code == 400
        missing = client.get("/sessions/nope/next", params={"rater": "r1"})
        assert missing.status_code == 404

    def test_report_endpoint(self, client):
        for rater in ("r1", "r2"):
            while True:
                got = client.get("/sessions/session/next", params={"rater": rater}).json()
                if got["done"]:
                    break
                item = got["item"]
                for slot in item["pending_slots"]:
                    client.post("/sessions/session/ratings", json={
                        "rater_id": rater, "sample_id": item["sample_id"],
                        "display_slot": slot, "correctness": 4,
                        "completeness": 3, "readability": 5})
        report = client.get("/sessions/session/report").json()
        assert report["complete"] is True
        for model in MODELS:
            assert report["means"][model]["correctness"] == 4.0
