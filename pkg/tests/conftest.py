import json
from pathlib import Path

import pytest

from ontodst.corpus import ingest_corpus
from ontodst.ontology import ENTITY_DB_DOMAINS, build_knowledge_base, parse_ontology
from ontodst.wordpiece import load_fixture_vocab

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text("utf-8")


def db_documents() -> dict[str, str]:
    return {d: fixture_text(f"db/{d}_db.json") for d in ENTITY_DB_DOMAINS}


@pytest.fixture(scope="session")
def catalog():
    return parse_ontology(fixture_text("ontology.json"))


@pytest.fixture(scope="session")
def kb(catalog):
    return build_knowledge_base(db_documents(), catalog)


@pytest.fixture(scope="session")
def dialogues(catalog):
    return ingest_corpus(fixture_text("corpus.json"), catalog)


@pytest.fixture(scope="session")
def vocab():
    return load_fixture_vocab()


@pytest.fixture(scope="session")
def predictions_lines():
    return [json.loads(line) for line in fixture_text("predictions_regression.jsonl").splitlines()]
