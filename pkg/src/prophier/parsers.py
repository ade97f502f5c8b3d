"""Sources of constituency parses: bracketed-tree files or a remote parser."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import requests

from .tree import ParseTree, TreeError, parse_bracketed, read_trees

log = logging.getLogger(__name__)

ENV_URL = "PROPHIER_PARSER_URL"


class ParserError(RuntimeError):
    pass


class Unreachable(ParserError):
    def __init__(self, endpoint, reason=""):
        super().__init__(f"parser at {endpoint} unreachable" + (f": {reason}" if reason else ""))
        self.endpoint = endpoint


class BadResponse(ParserError):
    def __init__(self, line, reason=""):
        super().__init__(f"bad parser response at line {line}" + (f": {reason}" if reason else ""))
        self.line = line


class TreeSentenceMismatch(ParserError):
    def __init__(self, index, tree_tokens=None, sentence_tokens=None):
        super().__init__(f"tree {index} does not yield its sentence: {tree_tokens} vs {sentence_tokens}")
        self.index = index


@dataclass(frozen=True)
class FileSource:
    path: str


@dataclass(frozen=True)
class HttpSource:
    endpoint: str
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.5
    batch_size: int = 50
    workers: int = 1

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.batch_size < 1 or self.workers < 1:
            raise ValueError("batch_size and workers must be >= 1")

    @classmethod
    def from_env(cls, **kw) -> "HttpSource":
        url = os.environ.get(ENV_URL)
        if not url:
            raise ParserError(f"no parser endpoint given and {ENV_URL} is unset")
        return cls(url, **kw)


def check_yield(index: int, tree: ParseTree, sentence: str):
    got, want = tree.tokens(), sentence.split()
    if got != want:
        raise TreeSentenceMismatch(index, got, want)


def fetch_parses(source, sentences: Sequence[str] = ()) -> list[ParseTree]:
    """One tree per sentence, in order. With a file source and no sentences, every tree in the file."""
    if isinstance(source, FileSource):
        with open(source.path, encoding="utf-8") as fh:
            trees = read_trees(fh)
        if not sentences:
            return trees
        if len(trees) < len(sentences):
            raise ParserError(f"{source.path} has {len(trees)} trees for {len(sentences)} sentences")
        trees = trees[:len(sentences)]
    elif isinstance(source, HttpSource):
        trees = _fetch_http(source, list(sentences))
    else:
        raise TypeError(f"unknown parse source {source!r}")
    for i, (tree, sent) in enumerate(zip(trees, sentences)):
        check_yield(i, tree, sent)
    return trees


def _post(source: HttpSource, body: bytes) -> str:
    last = None
    for attempt in range(source.retries + 1):
        try:
            resp = requests.post(source.endpoint, data=body, timeout=source.timeout,
                                 headers={"Content-Type": "text/plain; charset=utf-8"})
        except requests.RequestException as exc:
            last = str(exc)
        else:
            if resp.status_code == 200:
                resp.encoding = resp.encoding or "utf-8"
                return resp.text
            if resp.status_code < 500:
                raise BadResponse(0, f"HTTP {resp.status_code}")
            last = f"HTTP {resp.status_code}"
        if attempt < source.retries:
            log.info("retrying parser request (%s)", last)
            time.sleep(source.backoff * (2 ** attempt))
    raise Unreachable(source.endpoint, last)


def _parse_batch(source: HttpSource, batch: list[str], offset: int) -> list[ParseTree]:
    body = "\n".join(s.replace("\n", " ") for s in batch).encode("utf-8") + b"\n"
    lines = [ln for ln in _post(source, body).splitlines() if ln.strip()]
    trees = []
    for k, line in enumerate(lines):
        try:
            trees.append(parse_bracketed(line))
        except TreeError as exc:
            raise BadResponse(offset + k + 1, str(exc)) from exc
    if len(trees) != len(batch):
        raise BadResponse(offset + len(trees) + 1, f"expected {len(batch)} trees, got {len(trees)}")
    return trees


def _fetch_http(source: HttpSource, sentences: list[str]) -> list[ParseTree]:
    if not sentences:
        return []
    n = source.batch_size
    batches = [(sentences[i:i + n], i) for i in range(0, len(sentences), n)]
    if source.workers == 1 or len(batches) == 1:
        results = [_parse_batch(source, b, off) for b, off in batches]
    else:
        with ThreadPoolExecutor(max_workers=source.workers) as pool:
            results = list(pool.map(lambda a: _parse_batch(source, *a), batches))
    return [t for batch in results for t in batch]
