import pytest
from fastapi.testclient import TestClient

from intentlattice.index import compile_index
from intentlattice.library import IntentLibrary
from intentlattice.service import create_app

LIBRARY = {
    "intents": [
        {
            "id": "end_of_hold",
            "name": "end of hold",
            "examples": [
                {"tokens": ["thank", "you", "for", "your", "patience"], "blank_quota": 1}
            ],
        }
    ]
}


def _slot(*alts):
    return [{"token": t, "posterior": p} for t, p in alts]


HOLD_TURNS = [
    [
        _slot(("thank", 1.0)),
        _slot(("you", 1.0)),
        _slot(("for", 1.0)),
        _slot(("your", 1.0)),
        _slot(("patients", 0.8), ("patience", 0.2)),
    ]
]


@pytest.fixture()
def client():
    return TestClient(create_app())


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_index_lifecycle(client):
    assert client.get("/index").status_code == 404
    built = client.post("/index", json=LIBRARY)
    assert built.status_code == 200
    info = built.json()
    assert info["intents"] == 1 and info["examples"] == 1
    assert info["states"] > 0 and info["arcs"] > 0
    assert client.get("/index").json() == info


def test_bad_library_is_a_client_error(client):
    response = client.post("/index", json={"intents": []})
    assert response.status_code == 400
    assert "no intents" in response.json()["detail"]
    assert client.get("/index").status_code == 404


def test_rescore_requires_an_index(client):
    response = client.post("/rescore", json={"turns": [[_slot(("hi", 1.0))]]})
    assert response.status_code == 409


def test_rescore_round_trip(client):
    client.post("/index", json=LIBRARY)
    response = client.post(
        "/rescore",
        json={"conversation": "call9", "turns": HOLD_TURNS, "min_span": 3},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["transcripts"] == [
        {
            "conversation": "call9",
            "turn": 0,
            "baseline": ["thank", "you", "for", "your", "patients"],
            "rescored": ["thank", "you", "for", "your", "patience"],
        }
    ]
    (ann,) = body["annotations"]
    assert ann["intent_id"] == "end_of_hold" and ann["rescored"] is True
    assert body["baseline"] == []


def test_rescore_can_preload_an_index():
    index = compile_index(IntentLibrary.from_obj(LIBRARY))
    client = TestClient(create_app(index))
    assert client.get("/index").status_code == 200
    assert client.post("/rescore", json={"turns": HOLD_TURNS}).status_code == 200


def test_rescore_rejects_bad_posterior_mass(client):
    client.post("/index", json=LIBRARY)
    turns = [[_slot(("a", 0.4))]]
    response = client.post("/rescore", json={"turns": turns})
    assert response.status_code == 400
    assert "sum to 0.4" in response.json()["detail"]
    assert (
        client.post("/rescore", json={"turns": turns, "renormalize": True}).status_code
        == 200
    )


def test_rescore_validates_shapes(client):
    client.post("/index", json=LIBRARY)
    bad = [[[{"token": "a", "posterior": 0.0}]]]
    assert client.post("/rescore", json={"turns": bad}).status_code == 422
    assert client.post("/rescore", json={"turns": HOLD_TURNS, "min_span": 0}).status_code == 422


def test_stats_endpoint(client):
    ann = {
        "conversation": "c", "turn": 0, "intent_id": "a", "example_id": "e0",
        "start": 0, "end": 2, "words": [], "blanks": 0, "entities": [],
        "rescored": True,
    }
    response = client.post(
        "/stats", json={"rescored": [ann, ann], "baseline": [ann]}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["annotations_increase_pct"] == 100.0
    assert body["per_intent"]["a"]["rescored"] == 2
