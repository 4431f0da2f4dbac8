# src/pyopc/cli/store.py
from __future__ import annotations

import json
import threading
from abc import ABC, abstractmethod
from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

Rows = Union[pd.DataFrame, Sequence[Dict[str, Any]]]

FLOAT_FORMAT = "%.17g"


def _plain(obj: Any) -> Any:
    """numpy 스칼라/배열을 JSON 직렬화 가능한 파이썬 값으로 변환"""
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def render_table(rows: Rows, config_hash: str) -> str:
    """
    CSV 본문 생성

    - 헤더 1행, 실수는 17 유효숫자(%.17g), 줄바꿈은 항상 \\n
    - 모든 행에 config_hash 컬럼을 붙여 다른 설정의 재실행을 구분
    """
    frame = rows.copy() if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    frame["config_hash"] = config_hash
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def render_json(obj: Any) -> str:
    """키 정렬 + 마지막 줄바꿈. 타임스탬프/실행시간은 넣지 않음"""
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n"


class ResultStore(ABC):
    """결과 파일 저장소 인터페이스"""

    @abstractmethod
    def put(self, key: str, text: str) -> None:
        """키에 직렬화된 결과를 저장/덮어쓰기"""
        raise NotImplementedError

    @abstractmethod
    def read(self, key: str) -> Optional[str]:
        """키로 결과 읽기 (없으면 None)"""
        raise NotImplementedError

    @abstractmethod
    def keys(self) -> List[str]:
        """저장된 키 목록 (정렬)"""
        raise NotImplementedError

    @abstractmethod
    def clear(self) -> None:
        """저장소 비우기"""
        raise NotImplementedError

    def write_table(self, key: str, rows: Rows, config_hash: str) -> str:
        self.put(key, render_table(rows, config_hash))
        return key

    def write_json(self, key: str, obj: Any) -> str:
        self.put(key, render_json(obj))
        return key

    def read_table(self, key: str) -> pd.DataFrame:
        """CSV 결과를 DataFrame으로 다시 읽기 (테스트/후처리용)"""
        text = self.read(key)
        if text is None:
            raise KeyError(key)
        return pd.read_csv(StringIO(text))


class InMemoryResultStore(ResultStore):
    """프로세스 메모리 기반 저장소(스레드 세이프)"""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._data: Dict[str, str] = {}

    def put(self, key: str, text: str) -> None:
        with self._lock:
            self._data[key] = text

    def read(self, key: str) -> Optional[str]:
        with self._lock:
            return self._data.get(key)

    def keys(self) -> List[str]:
        with self._lock:
            return sorted(self._data)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


class DirectoryResultStore(ResultStore):
    """
    출력 디렉토리 기반 저장소

    - 파일은 UTF-8, 바이트 단위로 재현 가능하도록 newline 변환 없이 기록
    """

    def __init__(self, directory: Union[str, Path]) -> None:
        self.directory = Path(directory)
        self._lock = threading.RLock()

    def _path(self, key: str) -> Path:
        return self.directory / key

    def put(self, key: str, text: str) -> None:
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            with open(self._path(key), "w", encoding="utf-8", newline="") as f:
                f.write(text)

    def read(self, key: str) -> Optional[str]:
        path = self._path(key)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def keys(self) -> List[str]:
        if not self.directory.exists():
            return []
        return sorted(p.name for p in self.directory.iterdir() if p.is_file())

    def clear(self) -> None:
        with self._lock:
            for name in self.keys():
                self._path(name).unlink()
