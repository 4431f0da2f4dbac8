# src/pyopc/cli/pipeline.py
"""
배치 파이프라인
설정 해석 → 시장/효용 구성 → 시뮬레이션 → 결과 파일 기록까지의 전체 과정을 통합
"""
from __future__ import annotations

import json
import logging
import platform
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy
import yaml

from pyopc import __version__
from pyopc.cli.config import RunConfig
from pyopc.cli.store import ResultStore
from pyopc.compress import (
    SubsetPolicy,
    dominates,
    enumerate_subsets,
    policy_from_subsets,
    select_subset,
    subset_risk,
)
from pyopc.errors import BadMixture, ConfigError
from pyopc.market import MarketParams
from pyopc.replicate import OptimalPlan, optimal_compressed_strategy, optimal_strategy
from pyopc.simulate import (
    Measure,
    PathEnsemble,
    ScenarioMixture,
    WealthPaths,
    as_mixture,
    evolve_wealth,
    simulate_ensemble,
)
from pyopc.utility import Family, UtilitySpec
from pyopc.verify import (
    CheckReport,
    check_budget,
    check_dominance_gap,
    check_expected_utility,
    check_goal_success,
    check_heat_closed_form,
    check_iplus_equality,
    check_log_moment,
    check_martingale,
    check_moments,
    check_replication,
)

logger = logging.getLogger(__name__)

Command = Literal["simulate", "replicate", "select", "verify"]

SAMPLE_PATHS = 5

# independent ensembles of one run draw from distinct substream families
STREAM_MARTINGALE = 0
STREAM_REPLICATION = 1
STREAM_DOMINANCE = 2
STREAM_IPLUS = 4


@dataclass
class RunResult:
    """명령 실행 결과"""
    command: str
    config_hash: str
    exit_code: int = 0
    files: List[str] = field(default_factory=list)
    reports: List[CheckReport] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _versions() -> Dict[str, str]:
    return {
        "pyopc": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pyyaml": yaml.__version__,
        "python": platform.python_version(),
    }


def _suffixed(reports: Sequence[CheckReport], index: int, count: int) -> List[CheckReport]:
    if count == 1:
        return list(reports)
    return [replace(r, name=f"{r.name}[{index}]") for r in reports]


def _report_rows(reports: Sequence[CheckReport]) -> List[Dict[str, Any]]:
    rows = []
    for r in reports:
        d = r.to_dict()
        d["details"] = json.dumps(d["details"], sort_keys=True, default=float)
        rows.append(d)
    return rows


class Pipeline:
    """
    설정 하나로 실행되는 배치 파이프라인

    주요 기능:
    1. 시장 계수/효용/부분집합 정책 구성
    2. 최적 전략 보정 및 경로 시뮬레이션
    3. CSV/JSON 결과 기록 (모든 행에 config hash)
    """

    def __init__(self, config: RunConfig, store: ResultStore):
        """
        Args:
            config: 검증된 실행 설정 (--seed/--out/--threads 반영 후)
            store: 결과 저장소
        """
        self.config = config
        self.store = store
        self.config_hash = config.config_hash()
        self.market: Union[MarketParams, ScenarioMixture] = config.build_market()
        self.mixture = as_mixture(self.market)
        self.utility: Optional[UtilitySpec] = config.build_utility()
        self.quad = config.build_quad()
        self._files: List[str] = []
        self._policy: Optional[SubsetPolicy] = None

    # ==================== Step 1: 전략 구성 ====================

    def params(self) -> MarketParams:
        """결정적 계수 시장 (시나리오 혼합이면 BadMixture)"""
        if self.mixture.size != 1:
            raise BadMixture("this command needs deterministic coefficients (no scenario section)",
                             payload="scenario")
        return self.mixture.scenarios[0]

    def policy(self) -> Optional[SubsetPolicy]:
        """
        압축 정책: compress.subset(명시) 우선, 없으면 compress.m 으로 argmax 선택

        Returns:
            SubsetPolicy 또는 압축 없음(None)
        """
        if self._policy is not None:
            return self._policy
        c = self.config.compress
        subset = self.config.subset()
        if subset is not None:
            self._policy = policy_from_subsets(self.mixture.scenarios[0], subset)
        elif c.m is not None:
            self._policy = select_subset(self.params(), c.m, c.cap, threads=self.config.sim.threads)
        return self._policy

    def plan(self, utility: Optional[UtilitySpec] = None) -> OptimalPlan:
        """λ_J 보정 → H 구성 → (압축) 최적 전략"""
        u = utility or self.utility or UtilitySpec.log()
        eps = self.config.sim.epsilon
        prefer_pde = self.config.pde.prefer_pde
        policy = self.policy()
        if policy is None:
            plan = optimal_strategy(u, self.market, quad=self.quad, epsilon=eps, prefer_pde=prefer_pde)
        else:
            plan = optimal_compressed_strategy(u, self.market, policy, quad=self.quad, epsilon=eps,
                                               prefer_pde=prefer_pde)
        logger.info(
            "plan: %s utility, lambda=%s, R=%s, %s strategy on %s",
            u.family.value, [c.lam for c in plan.claims], list(plan.risks),
            plan.strategy.kind.value, plan.strategy.label,
        )
        return plan

    # ==================== Step 2: 시뮬레이션 ====================

    def ensemble(self, *, measure: Optional[Measure] = None, epsilon: float = 0.0,
                 stream: int = STREAM_MARTINGALE) -> PathEnsemble:
        cfg = self.config.build_sim(measure=measure, epsilon=epsilon, stream=stream)
        return simulate_ensemble(self.market, cfg)

    # ==================== Step 3: 결과 기록 ====================

    def _table(self, key: str, rows) -> None:
        if "csv" in self.config.output.formats:
            self._files.append(self.store.write_table(key, rows, self.config_hash))

    def _json(self, key: str, obj: Dict[str, Any]) -> None:
        if "json" in self.config.output.formats:
            obj = dict(obj, config_hash=self.config_hash)
            self._files.append(self.store.write_json(key, obj))

    def _finish(self, command: str, **kw) -> RunResult:
        manifest = {
            "command": command,
            "config_hash": self.config_hash,
            "seed": self.config.sim.seed,
            "files": sorted(self._files),
            "versions": _versions(),
        }
        self.store.write_json("manifest.json", manifest)
        files = sorted(self._files + ["manifest.json"])
        self._files = []
        return RunResult(command=command, config_hash=self.config_hash, files=files, **kw)

    def _check_dominated(self, params: MarketParams, compare: Tuple[int, ...], policy: SubsetPolicy) -> None:
        """verify.compare(I) 는 압축 정책(Î)에 지배되어야 함 (R_I <= R_Î)"""
        compared = policy_from_subsets(params, compare)
        if dominates(compared, policy, params):
            r_i, r_hat = subset_risk(params, compared), subset_risk(params, policy)
            raise ConfigError(
                f"verify.compare: {compared.label} has R = {r_i:.6g} > R = {r_hat:.6g} of {policy.label}; "
                "compare must name a subset dominated by the compress section",
                payload=("verify", "compare"),
            )

    # ==================== 명령 ====================

    def simulate(self) -> RunResult:
        """
        경로 요약: 시점별 Z, 할인 주가 S̃, 정규화 부 X̃ 의 평균/분산

        효용 섹션이 있으면 해당 최적 전략으로 X̃ 를 함께 구동
        """
        plan = self.plan() if self.utility is not None else None
        eps = plan.strategy.epsilon if plan is not None else 0.0
        ens = self.ensemble(epsilon=eps)
        wealth = evolve_wealth(plan.strategy, ens, self.mixture.x0) if plan is not None else None

        frame = pd.DataFrame({"t": ens.times})
        z = ens.z
        frame["z_mean"] = z.mean(axis=0)
        frame["z_var"] = z.var(axis=0, ddof=1) if ens.paths > 1 else 0.0
        if ens.log_prices is not None:
            prices = ens.discounted_prices()
            for i in range(ens.n):
                frame[f"s{i + 1}_mean"] = prices[:, :, i].mean(axis=0)
                frame[f"s{i + 1}_var"] = prices[:, :, i].var(axis=0, ddof=1) if ens.paths > 1 else 0.0
        if wealth is not None:
            frame["x_mean"] = wealth.values.mean(axis=0)
            frame["x_var"] = wealth.values.var(axis=0, ddof=1) if ens.paths > 1 else 0.0
            frame["wealth_mean"] = wealth.undiscounted(ens).mean(axis=0)
        self._table("simulate_summary.csv", frame)

        summary: Dict[str, Any] = {
            "paths": ens.paths,
            "steps": ens.steps,
            "measure": ens.measure.value,
            "scenarios": self.mixture.size,
            "R": [m.R for m in ens.metrics],
        }
        if wealth is not None:
            summary["strategy"] = plan.strategy.to_dict()
            summary["domain_exits"] = [e.to_dict() for e in wealth.exits]
        self._json("simulate.json", summary)
        return self._finish("simulate", details=summary)

    def _deterministic_reports(self, plan: OptimalPlan) -> List[CheckReport]:
        """시나리오별 예산 제약 + 열방정식 폐형식/구적 교차검증"""
        T = self.mixture.horizon
        reports: List[CheckReport] = []
        count = len(plan.claims)
        for s, (claim, R) in enumerate(zip(plan.claims, plan.risks)):
            group = [
                check_budget(plan.utility, claim, R, self.mixture.x0, self.quad),
                check_heat_closed_form(claim, R / T, T, self.quad),
            ]
            reports.extend(_suffixed(group, s, count))
        return reports

    def _strategy_sample(self, ens: PathEnsemble, wealth: WealthPaths) -> pd.DataFrame:
        k = min(SAMPLE_PATHS, ens.paths)
        M = ens.steps
        pi = np.zeros((k, M + 1, ens.n))
        for j in range(M):
            pi[:, j, :] = wealth.positions(ens, j)[:k]
        bank = ens.bank()[:k]
        frames = []
        for p in range(k):
            f = pd.DataFrame({"path": p, "t": ens.times, "z": ens.z[p]})
            for i in range(ens.n):
                f[f"pi_{i + 1}"] = pi[p, :, i]
            f["x_tilde"] = wealth.values[p]
            f["wealth"] = bank[p] * wealth.values[p]
            frames.append(f)
        return pd.concat(frames, ignore_index=True)

    def replicate(self) -> RunResult:
        """λ_J 보정 → 전략 시뮬레이션 → 복제 리포트 + 전략 샘플 CSV"""
        plan = self.plan()
        eps = plan.strategy.epsilon
        ens = self.ensemble(epsilon=eps, stream=STREAM_REPLICATION)
        wealth = evolve_wealth(plan.strategy, ens, self.mixture.x0)

        reports = [check_replication(plan.strategy, plan.claims, ens, wealth,
                                     tolerance=self.config.verify.replication_tolerance)]
        reports += self._deterministic_reports(plan)
        self._table("replication_report.csv", _report_rows(reports))
        self._table("strategy_sample.csv", self._strategy_sample(ens, wealth))

        summary = {
            "utility": plan.utility.to_dict(),
            "lambda": [c.lam for c in plan.claims],
            "R": list(plan.risks),
            "strategy": plan.strategy.to_dict(),
            "subset": None if plan.subset is None else plan.subset.to_dict(),
            "domain_exits": len(wealth.exits),
            "checks": [r.to_dict() for r in reports],
        }
        self._json("replicate.json", summary)
        return self._finish("replicate", reports=reports, details=summary)

    def select(self) -> RunResult:
        """m' = 1..m 각각의 argmax 부분집합 + 전체 열거 테이블"""
        params = self.params()
        c = self.config.compress
        m = c.m if c.m is not None else params.n
        table = enumerate_subsets(params, m, c.cap, threads=self.config.sim.threads)
        policies = {mm: select_subset(params, mm, c.cap, table=table) for mm in range(1, m + 1)}

        chosen = set(policies[m].subsets)
        frame = pd.DataFrame(table.rows())
        frame["selected"] = [I in chosen for I in table.subsets]
        self._table("selection.csv", frame)

        summary = {
            "n": params.n,
            "m": m,
            "subsets_enumerated": len(table.subsets),
            "selected": {str(mm): pol.to_dict() for mm, pol in policies.items()},
        }
        self._json("selection.json", summary)
        return self._finish("select", details=summary)

    def verify(self) -> RunResult:
        """
        설정에 적용 가능한 모든 검증 수행

        - 마팅게일/모멘트 항등식 (negative_control 이면 물리측도 앙상블로 일부러 실패)
        - 예산 제약, 열방정식 교차검증, 복제, 기대효용(목표달성형은 성공확률)
        - verify.compare 가 있으면 지배 격차와 I⁺ 동등성
        """
        vcfg = self.config.verify
        compare = self.config.compare_subset()
        policy = self.policy()
        if compare is not None and policy is not None:
            self._check_dominated(self.params(), compare, policy)

        measure = Measure.PHYSICAL if vcfg.negative_control else Measure.MARTINGALE
        ens = self.ensemble(measure=measure, stream=STREAM_MARTINGALE)
        reports: List[CheckReport] = []
        reports += check_martingale(ens)
        reports.append(check_log_moment(ens))
        reports += check_moments(ens, vcfg.q_values)

        plan = self.plan()
        reports += self._deterministic_reports(plan)

        eps = plan.strategy.epsilon
        ens_r = self.ensemble(measure=Measure.MARTINGALE, epsilon=eps, stream=STREAM_REPLICATION)
        wealth = evolve_wealth(plan.strategy, ens_r, self.mixture.x0)
        reports += check_martingale(ens_r, wealth)[1:]
        reports.append(check_replication(plan.strategy, plan.claims, ens_r, wealth,
                                         tolerance=vcfg.replication_tolerance))
        if plan.utility.family is Family.GOAL_ACHIEVING:
            reports.append(check_goal_success(plan, ens_r, wealth))
        else:
            reports.append(check_expected_utility(plan, ens_r, wealth, self.quad))

        if compare is not None and policy is not None:
            params = self.params()
            sim = self.config.build_sim(stream=STREAM_DOMINANCE)
            reports.append(check_dominance_gap(plan.utility, params, compare, policy, sim, self.quad))
            sim = self.config.build_sim(stream=STREAM_IPLUS)
            reports += check_iplus_equality(plan.utility, params, compare, policy, sim, self.quad)
        elif compare is not None:
            logger.warning("verify.compare ignored: set compress.m or compress.subset for the dominating subset")

        failed = [r.name for r in reports if not r.passed]
        self._table("verify_report.csv", _report_rows(reports))
        summary = {
            "passed": not failed,
            "failed": failed,
            "checks": [r.to_dict() for r in reports],
        }
        self._json("verify_summary.json", summary)
        if failed:
            logger.warning("%d of %d checks failed: %s", len(failed), len(reports), ", ".join(failed))
        else:
            logger.info("all %d checks passed", len(reports))
        return self._finish("verify", exit_code=3 if failed else 0, reports=reports, details=summary)


_COMMANDS: Dict[str, Callable[[Pipeline], RunResult]] = {
    "simulate": Pipeline.simulate,
    "replicate": Pipeline.replicate,
    "select": Pipeline.select,
    "verify": Pipeline.verify,
}


def run_command(command: Command, config: RunConfig, store: ResultStore) -> RunResult:
    """
    설정 하나로 명령 실행

    Args:
        command: simulate | replicate | select | verify
        config: 실행 설정
        store: 결과 저장소

    Returns:
        RunResult (verify 실패 시 exit_code=3)
    """
    try:
        handler = _COMMANDS[command]
    except KeyError:
        raise ValueError(f"unknown command {command!r}; expected one of {sorted(_COMMANDS)}") from None
    logger.info("%s: config %s, seed %d", command, config.config_hash(), config.sim.seed)
    return handler(Pipeline(config, store))
