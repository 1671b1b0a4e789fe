import dataclasses
import os
from typing import Dict, List, Optional, Tuple

import pandas as pd
from sessionlen.tuning.metrics import GROUPS, ActivityBreakdown


@dataclasses.dataclass(frozen=True)
class EvalReport:
    """Test-set accuracy of one family, normalized by the baseline."""
    family: str
    mae_seconds: float
    normalized_mae: float
    baseline_mae: float
    n_test: int
    breakdown: ActivityBreakdown
    params: str = ''

    def to_row(self):
        row = {
            'family': self.family,
            'mae_seconds': self.mae_seconds,
            'normalized_mae': self.normalized_mae,
            'baseline_mae_seconds': self.baseline_mae,
            'n_test': self.n_test,
        }
        for name in GROUPS:
            row[f'normalized_mae_{name}'] = self.breakdown.normalized[name]
            row[f'n_{name}'] = self.breakdown.sizes[name]
        row['params'] = self.params
        return row


def reports_frame(reports):
    return pd.DataFrame([r.to_row() for r in reports])


def _fmt(v):
    return '     -' if v is None else f'{v:6.3f}'


def reports_text(reports: List[EvalReport]):
    """Human-readable comparison table."""
    if not reports:
        return 'no results\n'
    q10, q20 = reports[0].breakdown.cutoffs
    header = (f'{"family":<12} {"MAE (s)":>10} {"norm":>6} '
              f'{"<q10":>6} {"<q20":>6} {">q20":>6} {"n":>6}')
    lines = [
        f'activity cutoffs: q10={q10:g} q20={q20:g} sessions per user', header,
        '-' * len(header)
    ]
    for r in reports:
        groups = ' '.join(_fmt(r.breakdown.normalized[g]) for g in GROUPS)
        lines.append(f'{r.family:<12} {r.mae_seconds:10.2f} '
                     f'{r.normalized_mae:6.3f} {groups} {r.n_test:6d}')
    return '\n'.join(lines) + '\n'


def importance_text(ranked: List[Tuple[str, float]], title=''):
    lines = [title] if title else []
    width = max([len(name) for name, _ in ranked] + [7])
    lines += [f'{name:<{width}} {value:.3f}' for name, value in ranked]
    return '\n'.join(lines) + '\n'


def objective_trace_frame(trace):
    return pd.DataFrame({
        'iteration': range(1, len(trace) + 1),
        'objective': list(trace)
    })


def write_report_files(out_dir,
                       reports,
                       importances: Optional[Dict[str, list]] = None,
                       timing_text: str = ''):
    """Write ``report.txt`` and ``report.csv`` into ``out_dir``.

    Returns:
        Tuple[str, str]: The two paths.
    """
    text = reports_text(reports)
    for family, ranked in (importances or {}).items():
        text += '\n' + importance_text(ranked, f'feature importance: {family}')
    if timing_text:
        text += '\n' + timing_text
    txt_path = os.path.join(out_dir, 'report.txt')
    csv_path = os.path.join(out_dir, 'report.csv')
    with open(txt_path, 'w', encoding='utf-8') as f:
        f.write(text)
    reports_frame(reports).to_csv(csv_path, index=False, float_format='%.17g')
    return txt_path, csv_path


__all__ = [
    'EvalReport', 'reports_frame', 'reports_text', 'importance_text',
    'objective_trace_frame', 'write_report_files'
]
