import time
from contextlib import contextmanager


class StatisticalResult:
    """Statistical result of records.

    Timing records with the same name are counted in a ``StatisticalResult``
    instance via ``insert_record(seconds)``.
    """
    def __init__(self, name):
        self.name = name
        self.counter = 0
        self.min_time = 0.0
        self.max_time = 0.0
        self.total_time = 0.0

    def __lt__(self, other):
        # For sorted()
        return self.total_time < other.total_time

    @property
    def avg_time(self):
        return self.total_time / self.counter if self.counter else 0.0

    def insert_record(self, seconds):
        if self.counter == 0:
            self.min_time = seconds
            self.max_time = seconds
        self.counter += 1
        self.total_time += seconds
        self.min_time = min(self.min_time, seconds)
        self.max_time = max(self.max_time, seconds)


class FitProfiler:
    """Wall-clock timer for training and prediction stages.

    Records are keyed ``"<family>/<stage>"``, e.g. ``model3-l2/train``.

    Example::

        >>> profiler = FitProfiler()
        >>> with profiler.record('ridge', 'train'):
        >>>     ...
        >>> print(profiler.table_text())
    """
    TRAIN = 'train'
    PREDICT = 'predict'

    def __init__(self, clock=time.perf_counter):
        self._clock = clock
        self._statistical_results = {}

    @contextmanager
    def record(self, family, stage):
        start = self._clock()
        try:
            yield self
        finally:
            self.insert(family, stage, self._clock() - start)

    def insert(self, family, stage, seconds):
        key = f'{family}/{stage}'
        if key not in self._statistical_results:
            self._statistical_results[key] = StatisticalResult(key)
        self._statistical_results[key].insert_record(seconds)

    def query(self, family, stage):
        return self._statistical_results.get(f'{family}/{stage}')

    def total_time(self, family=None):
        return sum(r.total_time for k, r in self._statistical_results.items()
                   if family is None or k.split('/')[0] == family)

    def results(self):
        return sorted(self._statistical_results.values(), reverse=True)

    def clear(self):
        self._statistical_results.clear()

    def table_text(self):
        column_header = '[     total   count |      min       avg       max   ] Stage'
        partition_line = '-' * len(column_header)
        lines = [column_header, partition_line]
        for result in self.results():
            lines.append(
                '[{:8.3f} s {:6d}x |{:9.4f} {:9.4f} {:9.4f} s] {}'.format(
                    result.total_time, result.counter, result.min_time,
                    result.avg_time, result.max_time, result.name))
        lines.append(partition_line)
        lines.append(f'Total time: {self.total_time():8.3f} s   '
                     f'number of results: {len(self._statistical_results)}')
        return '\n'.join(lines) + '\n'


__all__ = ['StatisticalResult', 'FitProfiler']
