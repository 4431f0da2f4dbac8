# src/pyopc/numerics/streams.py
"""
결정적 난수 하위 스트림

경로를 고정 크기 블록으로 나누고, seed k 의 스트림 s 블록 b 는
SeedSequence([k, s, b]) 에서 추출. 블록마다 자식 시퀀스 2개
(가우스 증분용, 시나리오 추출용)를 두어 시나리오 추출이 잡음을 바꾸지 않음
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

PATH_BLOCK = 1024


@dataclass(frozen=True)
class BlockStreams:
    block: int
    start: int
    stop: int
    gauss: np.random.Generator
    scenario: np.random.Generator

    @property
    def size(self) -> int:
        return self.stop - self.start


def block_ranges(paths: int, block_size: int = PATH_BLOCK) -> List[Tuple[int, int, int]]:
    """블록별 (블록 번호, 첫 경로, 마지막 경로 + 1)"""
    return [
        (b, start, min(start + block_size, paths))
        for b, start in enumerate(range(0, paths, block_size))
    ]


def block_streams(seed: int, stream: int, block: int, start: int, stop: int) -> BlockStreams:
    root = np.random.SeedSequence([int(seed), int(stream), int(block)])
    gauss_seq, scenario_seq = root.spawn(2)
    return BlockStreams(
        block=block,
        start=start,
        stop=stop,
        gauss=np.random.default_rng(gauss_seq),
        scenario=np.random.default_rng(scenario_seq),
    )


def iter_blocks(seed: int, stream: int, paths: int,
                block_size: int = PATH_BLOCK) -> Iterator[BlockStreams]:
    for b, start, stop in block_ranges(paths, block_size):
        yield block_streams(seed, stream, b, start, stop)
