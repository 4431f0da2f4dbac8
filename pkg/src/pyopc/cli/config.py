# src/pyopc/cli/config.py
"""
실행 설정: 다음 섹션으로 된 YAML 문서 하나

    market, utility, compress, sim, pde, scenario, output, verify

를 frozen dataclass 로 해석. 모든 실패는 점 표기 필드 경로를 담은 ConfigError 이며,
노드 위치를 찾으면 YAML 줄/열도 포함
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from pyopc.errors import ConfigError, OPCError
from pyopc.market import DEFAULT_C1, MarketParams, validate_market
from pyopc.numerics import QuadratureConfig
from pyopc.simulate import CUTOFF_STEPS, Measure, ScenarioMixture, SimConfig, switching_mixture
from pyopc.utility import Family, UtilitySpec

PathKey = Tuple[Union[str, int], ...]


def _dotted(path: PathKey) -> str:
    out = ""
    for key in path:
        out += f"[{key}]" if isinstance(key, int) else (f".{key}" if out else str(key))
    return out


def _locate(node: Optional[yaml.Node], path: PathKey) -> Optional[yaml.Mark]:
    """`path` 를 따라 가장 깊은 노드의 시작 위치"""
    if node is None:
        return None
    for key in path:
        child = None
        if isinstance(node, yaml.MappingNode):
            child = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and 0 <= key < len(node.value):
            child = node.value[key]
        if child is None:
            break
        node = child
    return node.start_mark


# ------------ sections ------------
@dataclass(frozen=True)
class MarketSection:
    """
    - rate: 스칼라 또는 구간별 값
    - drift: n 개 값, 또는 구간별 n 개 리스트
    - vol: 행 우선 n*n 개 값, 또는 구간별 그런 리스트
    """
    n: int
    horizon: float = 1.0
    grid: Optional[Tuple[float, ...]] = None
    rate: Any = 0.0
    drift: Any = None
    vol: Any = None
    s0: Optional[Tuple[float, ...]] = None
    x0: float = 1.0
    c1: float = DEFAULT_C1


@dataclass(frozen=True)
class UtilitySection:
    family: str = "log"
    delta: Optional[float] = None
    k: Optional[float] = None
    c: Optional[float] = None
    l: Optional[int] = None
    alpha: Optional[float] = None


@dataclass(frozen=True)
class CompressSection:
    """m 은 argmax 부분집합 선택, `subset` 은 명시적 고정 (1 기준)"""
    m: Optional[int] = None
    cap: int = 1_000_000
    subset: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class SimSection:
    paths: int = 10_000
    steps: int = 50
    seed: int = 0
    measure: str = "martingale"
    epsilon: Optional[float] = None
    cutoff_steps: int = CUTOFF_STEPS
    threads: int = 1


@dataclass(frozen=True)
class PdeSection:
    nodes: int = 256
    truncation_sigmas: float = 10.0
    prefer_pde: bool = False


@dataclass(frozen=True)
class ScenarioOverride:
    probability: float
    rate: Any = None
    drift: Any = None
    vol: Any = None


@dataclass(frozen=True)
class SwitchingSection:
    sigma_alt: Tuple[float, ...]
    window: float
    starts: Tuple[float, ...]
    probabilities: Tuple[float, ...]


@dataclass(frozen=True)
class ScenarioSection:
    overrides: Tuple[ScenarioOverride, ...] = ()
    switching: Optional[SwitchingSection] = None


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: Tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class VerifySection:
    """compare: 설정된 Î 와 비교할 부분집합 I (1 기준, Î 에 지배되어야 함)"""
    negative_control: bool = False
    compare: Optional[Tuple[int, ...]] = None
    q_values: Tuple[float, ...] = (-2.0, -1.0, 0.5, 2.0)
    replication_tolerance: float = 0.05


@dataclass(frozen=True)
class RunConfig:
    market: MarketSection
    utility: Optional[UtilitySection] = None
    compress: CompressSection = CompressSection()
    sim: SimSection = SimSection()
    pde: PdeSection = PdeSection()
    scenario: ScenarioSection = ScenarioSection()
    output: OutputSection = OutputSection()
    verify: VerifySection = VerifySection()

    def with_overrides(self, *, seed: Optional[int] = None, out: Optional[str] = None,
                       threads: Optional[int] = None) -> "RunConfig":
        """해석된 파일 위에 --seed/--out/--threads 적용"""
        cfg = self
        if seed is not None:
            cfg = replace(cfg, sim=replace(cfg.sim, seed=int(seed)))
        if threads is not None:
            cfg = replace(cfg, sim=replace(cfg.sim, threads=int(threads)))
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, directory=str(out)))
        if cfg.sim.seed < 0 or cfg.sim.threads < 1:
            raise ConfigError("seed must be >= 0 and threads >= 1", payload="sim")
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """threads/output 을 뺀 실효 설정의 sha256 앞부분"""
        d = self.to_dict()
        d.pop("output")
        d["sim"].pop("threads")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"), default=float)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    # ------------ builders ------------
    def build_market(self) -> Union[MarketParams, ScenarioMixture]:
        base = _build_params(self.market, self.market, ("market",))
        sc = self.scenario
        if sc.switching is not None:
            sw = sc.switching
            try:
                return switching_mixture(base, sw.sigma_alt, sw.window, sw.starts, sw.probabilities)
            except OPCError as e:
                raise ConfigError(f"scenario.switching: {e.message}", payload=("scenario", "switching")) from e
        if not sc.overrides:
            return base
        pairs = []
        for i, ov in enumerate(sc.overrides):
            params = _build_params(self.market, ov, ("scenario", i))
            pairs.append((params, ov.probability))
        try:
            return ScenarioMixture.from_pairs(pairs)
        except OPCError as e:
            raise ConfigError(f"scenario: {e.message}", payload=("scenario",)) from e

    def build_utility(self) -> Optional[UtilitySpec]:
        if self.utility is None:
            return None
        u = self.utility
        try:
            return UtilitySpec(Family(u.family), delta=u.delta, k=u.k, c=u.c, l=u.l, alpha=u.alpha)
        except ValueError:
            raise ConfigError(f"utility.family: unknown family {u.family!r}", payload=("utility", "family")) from None
        except OPCError as e:
            field_name = e.payload if isinstance(e.payload, str) else "family"
            raise ConfigError(f"utility.{field_name}: {e.message}", payload=("utility", field_name)) from e

    def build_sim(self, *, measure: Optional[Measure] = None, epsilon: float = 0.0, stream: int = 0) -> SimConfig:
        s = self.sim
        try:
            return SimConfig(
                paths=s.paths, steps=s.steps, seed=s.seed,
                measure=Measure(s.measure) if measure is None else measure,
                cutoff_epsilon=epsilon, cutoff_steps=s.cutoff_steps, threads=s.threads, stream=stream,
            )
        except ValueError:
            raise ConfigError(f"sim.measure: unknown measure {s.measure!r}", payload=("sim", "measure")) from None
        except OPCError as e:
            raise ConfigError(f"sim.{e.payload}: {e.message}", payload=("sim", e.payload)) from e

    def build_quad(self) -> QuadratureConfig:
        try:
            return QuadratureConfig(nodes=self.pde.nodes, truncation_sigmas=self.pde.truncation_sigmas)
        except ValueError as e:
            raise ConfigError(f"pde: {e}", payload=("pde",)) from None

    def subset(self) -> Optional[Tuple[int, ...]]:
        """설정된 명시적 부분집합 (0 기준)"""
        if self.compress.subset is None:
            return None
        return tuple(i - 1 for i in self.compress.subset)

    def compare_subset(self) -> Optional[Tuple[int, ...]]:
        if self.verify.compare is None:
            return None
        return tuple(i - 1 for i in self.verify.compare)


# ------------ market assembly ------------
def _intervals(section: MarketSection) -> np.ndarray:
    if section.grid is not None:
        return np.asarray(section.grid, dtype=float)
    return np.array([0.0, float(section.horizon)])


def _per_interval(value, K: int, width: int, path: PathKey) -> np.ndarray:
    """평탄한 값(width)은 브로드캐스트, 구간별 리스트(K x width)는 그대로 사용"""
    if isinstance(value, list) and value and all(isinstance(v, list) for v in value):
        if len(value) != K:
            raise ConfigError(f"{_dotted(path)}: expected {K} per-interval lists, got {len(value)}", payload=path)
        for k, row in enumerate(value):
            if len(row) != width:
                raise ConfigError(f"{_dotted(path + (k,))}: expected {width} values, got {len(row)}",
                                  payload=path + (k,))
        return np.array(value, dtype=float)
    try:
        arr = np.atleast_1d(np.asarray(value, dtype=float))
    except ValueError:
        raise ConfigError(f"{_dotted(path)}: mixes numbers and lists", payload=path) from None
    if arr.ndim != 1 or arr.size != width:
        raise ConfigError(f"{_dotted(path)}: expected {width} values, got {arr.size}", payload=path)
    return np.tile(arr, (K, 1))


def _build_params(section: MarketSection, source, path: PathKey) -> MarketParams:
    """market 섹션으로 MarketParams 구성 (`source` 의 rate/drift/vol 우선)"""
    n = section.n
    grid = _intervals(section)
    K = grid.size - 1
    if K < 1:
        raise ConfigError("market.grid: needs at least two points", payload=("market", "grid"))

    def pick(name: str):
        value = getattr(source, name, None)
        where = path if value is not None else ("market",)
        if value is None:
            value = getattr(section, name)
        if value is None:
            raise ConfigError(f"{_dotted(where + (name,))}: required", payload=where + (name,))
        return value, where + (name,)

    rate, rate_path = pick("rate")
    drift, drift_path = pick("drift")
    vol, vol_path = pick("vol")
    try:
        rate_arr = np.broadcast_to(np.asarray(rate, dtype=float), (K,)).copy()
    except ValueError:
        raise ConfigError(f"{_dotted(rate_path)}: expected a scalar or {K} values", payload=rate_path) from None
    drift_arr = _per_interval(drift, K, n, drift_path)
    vol_arr = _per_interval(vol, K, n * n, vol_path).reshape(K, n, n)
    s0 = np.ones(n) if section.s0 is None else np.asarray(section.s0, dtype=float)
    if s0.shape != (n,):
        raise ConfigError(f"market.s0: expected {n} values, got {s0.size}", payload=("market", "s0"))

    try:
        params = MarketParams(grid=grid, rate=rate_arr, drift=drift_arr, vol=vol_arr, s0=s0, x0=section.x0)
        validate_market(params, section.c1)
    except OPCError as e:
        key = e.payload if isinstance(e.payload, str) else None
        where = path + (key.split("[")[0],) if key else path
        raise ConfigError(f"{_dotted(path)}: {e.message}", payload=where) from e
    return params


# ------------ parsing ------------
class _Parser:
    def __init__(self, data: Dict[str, Any], root: Optional[yaml.Node]):
        self.data = data
        self.root = root

    def fail(self, path: PathKey, message: str) -> ConfigError:
        mark = _locate(self.root, path)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark is not None else ""
        return ConfigError(f"{_dotted(path)}: {message}{where}", payload=path)

    def section(self, name: str, cls, required: bool = False):
        raw = self.data.get(name)
        if raw is None:
            if required:
                raise self.fail((name,), "section is required")
            return None
        if not isinstance(raw, dict):
            raise self.fail((name,), "must be a mapping")
        known = set(cls.__dataclass_fields__)
        for key in raw:
            if key not in known:
                raise self.fail((name, key), f"unknown key; expected one of {sorted(known)}")
        return raw

    def number(self, path: PathKey, value, kind=float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(path, f"expected a number, got {value!r}")
        if kind is int:
            if int(value) != value:
                raise self.fail(path, f"expected an integer, got {value!r}")
            return int(value)
        return float(value)

    def numbers(self, path: PathKey, value, nested: bool = True):
        """숫자의 평탄/중첩 리스트 (원소별 검사)"""
        if not isinstance(value, list):
            if nested:
                return self.number(path, value)
            raise self.fail(path, "expected a list")
        out = []
        for i, v in enumerate(value):
            if isinstance(v, list) and nested:
                out.append(self.numbers(path + (i,), v, nested=False))
            else:
                out.append(self.number(path + (i,), v))
        return out

    def build(self, cls, raw: Optional[Dict[str, Any]], prefix: PathKey, schema: Dict[str, Any]):
        if raw is None:
            return cls()
        kwargs = {}
        for key, value in raw.items():
            kind = schema.get(key)
            path = prefix + (key,)
            if value is None:
                continue
            elif kind in (int, float):
                kwargs[key] = self.number(path, value, kind)
            elif kind == "numbers":
                kwargs[key] = self.numbers(path, value)
            elif kind == "tuple_int":
                kwargs[key] = tuple(self.number(path + (i,), v, int) for i, v in enumerate(self._list(path, value)))
            elif kind == "tuple_float":
                kwargs[key] = tuple(self.number(path + (i,), v) for i, v in enumerate(self._list(path, value)))
            elif kind is bool:
                if not isinstance(value, bool):
                    raise self.fail(path, f"expected true/false, got {value!r}")
                kwargs[key] = value
            else:
                if not isinstance(value, str):
                    raise self.fail(path, f"expected a string, got {value!r}")
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise self.fail(prefix, str(e)) from None

    def _list(self, path: PathKey, value) -> List[Any]:
        if not isinstance(value, list):
            raise self.fail(path, "expected a list")
        return value


_MARKET = {"n": int, "horizon": float, "grid": "tuple_float", "rate": "numbers", "drift": "numbers",
           "vol": "numbers", "s0": "tuple_float", "x0": float, "c1": float}
_UTILITY = {"family": str, "delta": float, "k": float, "c": float, "l": int, "alpha": float}
_COMPRESS = {"m": int, "cap": int, "subset": "tuple_int"}
_SIM = {"paths": int, "steps": int, "seed": int, "measure": str, "epsilon": float, "cutoff_steps": int,
        "threads": int}
_PDE = {"nodes": int, "truncation_sigmas": float, "prefer_pde": bool}
_OVERRIDE = {"probability": float, "rate": "numbers", "drift": "numbers", "vol": "numbers"}
_SWITCHING = {"sigma_alt": "tuple_float", "window": float, "starts": "tuple_float", "probabilities": "tuple_float"}
_VERIFY = {"negative_control": bool, "compare": "tuple_int", "q_values": "tuple_float",
           "replication_tolerance": float}

_SECTIONS = ("market", "utility", "compress", "sim", "pde", "scenario", "output", "verify")


def parse_config(text: str) -> RunConfig:
    """
    YAML 실행 설정 하나를 해석/검증

    Raises:
        ConfigError: YAML 문법 오류(줄/열 포함) 또는 잘못된 필드(점 표기 경로)
    """
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"invalid YAML{where}: {getattr(e, 'problem', None) or e}", payload="yaml") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections", payload="root")

    p = _Parser(data, root)
    for key in data:
        if key not in _SECTIONS:
            raise p.fail((key,), f"unknown section; expected one of {list(_SECTIONS)}")

    market_raw = p.section("market", MarketSection, required=True)
    if "n" not in market_raw:
        raise p.fail(("market", "n"), "required")
    market = p.build(MarketSection, market_raw, ("market",), _MARKET)
    if market.n < 1:
        raise p.fail(("market", "n"), "must be >= 1")

    utility_raw = p.section("utility", UtilitySection)
    utility = None if utility_raw is None else p.build(UtilitySection, utility_raw, ("utility",), _UTILITY)

    compress = p.build(CompressSection, p.section("compress", CompressSection), ("compress",), _COMPRESS)
    if compress.m is not None and not 1 <= compress.m <= market.n:
        raise p.fail(("compress", "m"), f"must satisfy 1 <= m <= n = {market.n}")
    if compress.subset is not None:
        for i, v in enumerate(compress.subset):
            if not 1 <= v <= market.n:
                raise p.fail(("compress", "subset", i), f"stock index {v} outside 1..{market.n}")

    sim = p.build(SimSection, p.section("sim", SimSection), ("sim",), _SIM)
    pde = p.build(PdeSection, p.section("pde", PdeSection), ("pde",), _PDE)
    scenario = _parse_scenario(p, data.get("scenario"))

    output_raw = p.section("output", OutputSection)
    output = OutputSection()
    if output_raw is not None:
        formats = output_raw.get("formats", list(output.formats))
        if not isinstance(formats, list) or any(f not in ("csv", "json") for f in formats):
            raise p.fail(("output", "formats"), "expected a list drawn from [csv, json]")
        directory = output_raw.get("directory", output.directory)
        if not isinstance(directory, str):
            raise p.fail(("output", "directory"), "expected a string")
        output = OutputSection(directory=directory, formats=tuple(formats))

    verify = p.build(VerifySection, p.section("verify", VerifySection), ("verify",), _VERIFY)
    if verify.compare is not None:
        for i, v in enumerate(verify.compare):
            if not 1 <= v <= market.n:
                raise p.fail(("verify", "compare", i), f"stock index {v} outside 1..{market.n}")

    cfg = RunConfig(market=market, utility=utility, compress=compress, sim=sim, pde=pde,
                    scenario=scenario, output=output, verify=verify)
    # surface coefficient errors at load time
    try:
        cfg.build_market()
        cfg.build_utility()
        cfg.build_sim()
        cfg.build_quad()
    except ConfigError as e:
        path = e.payload if isinstance(e.payload, tuple) else ()
        mark = _locate(root, path)
        if mark is not None and "(line" not in e.message:
            raise ConfigError(f"{e.message} (line {mark.line + 1}, column {mark.column + 1})", payload=path) from e
        raise
    return cfg


def _parse_scenario(p: _Parser, raw) -> ScenarioSection:
    if raw is None:
        return ScenarioSection()
    if isinstance(raw, dict):
        if set(raw) != {"switching"}:
            raise p.fail(("scenario",), "a mapping must hold exactly one key: switching")
        sw_raw = raw["switching"]
        if not isinstance(sw_raw, dict):
            raise p.fail(("scenario", "switching"), "must be a mapping")
        for key in sw_raw:
            if key not in _SWITCHING:
                raise p.fail(("scenario", "switching", key), f"unknown key; expected one of {sorted(_SWITCHING)}")
        sw = p.build(SwitchingSection, sw_raw, ("scenario", "switching"), _SWITCHING)
        return ScenarioSection(switching=sw)
    if not isinstance(raw, list) or not raw:
        raise p.fail(("scenario",), "expected a non-empty list of overrides or a switching mapping")
    overrides = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise p.fail(("scenario", i), "must be a mapping")
        for key in item:
            if key not in _OVERRIDE:
                raise p.fail(("scenario", i, key), f"unknown key; expected one of {sorted(_OVERRIDE)}")
        if "probability" not in item:
            raise p.fail(("scenario", i, "probability"), "required")
        kwargs = {}
        for key, value in item.items():
            path = ("scenario", i, key)
            kwargs[key] = p.number(path, value) if key == "probability" else p.numbers(path, value)
        overrides.append(ScenarioOverride(**kwargs))
    return ScenarioSection(overrides=tuple(overrides))


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}", payload=str(path)) from None
    return parse_config(text)


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """이미 로드된 매핑으로 RunConfig 구성 (테스트, 노트북용)"""
    return parse_config(yaml.safe_dump(data, sort_keys=False))
