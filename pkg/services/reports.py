# -*- coding: utf-8 -*-
"""
结果输出

CSV 用于作图，JSON 报告内嵌完整场景回显。输出不含时间戳，相同输入逐字节一致。
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

import settings
from scenario_model import Scenario, to_lab_dict

CSV_FLOAT_FORMAT = '%.12g'


def to_jsonable(value: Any) -> Any:
    """numpy 类型与 NaN 转为 JSON 可序列化的值"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class RunReport:
    """一次命令运行的完整记录"""
    command: str
    scenario: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def for_scenario(cls, command: str, scenario: Scenario) -> 'RunReport':
        return cls(command=command, scenario=to_lab_dict(scenario))

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable({
            'tool': settings.TOOL_NAME,
            'version': settings.VERSION,
            'command': self.command,
            'scenario': self.scenario,
            'outputs': self.outputs,
            'diagnostics': self.diagnostics,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def json_path_for(output_path: Union[str, Path]) -> Path:
    """CSV 输出路径对应的 JSON 报告路径"""
    return Path(output_path).with_suffix('.json')


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    return path


def write_report(report: RunReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_json(), encoding='utf-8')
    return path
