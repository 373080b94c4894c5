"""Exception types shared across the harness."""


class ObsobenchError(Exception):
    """Base class for all harness errors."""


class MissingColumn(ObsobenchError):
    def __init__(self, name: str):
        super().__init__(f"column {name!r} not found in CSV header")
        self.name = name


class UnmappableLabel(ObsobenchError):
    def __init__(self, row_id, raw_value: str):
        super().__init__(f"row {row_id!r}: label value {raw_value!r} not in label_map")
        self.row_id = row_id
        self.raw_value = raw_value


class EmptyDataset(ObsobenchError):
    def __init__(self, detail: str = "dataset contains no data rows"):
        super().__init__(detail)


class MalformedCsv(ObsobenchError):
    def __init__(self, line: int, detail: str = ""):
        msg = f"malformed CSV at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line = line


class TemplateMissingPlaceholder(ObsobenchError):
    def __init__(self, placeholder: str):
        super().__init__(f"prompt template is missing placeholder {placeholder!r}")
        self.placeholder = placeholder


class CacheCorrupt(ObsobenchError):
    def __init__(self, line: int, detail: str = ""):
        msg = f"unreadable cache entry at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line = line


class LengthMismatch(ObsobenchError):
    def __init__(self, n_verdicts: int, n_labels: int):
        super().__init__(f"{n_verdicts} verdicts vs {n_labels} labels")
        self.n_verdicts = n_verdicts
        self.n_labels = n_labels


class UnknownRowAlignment(ObsobenchError):
    def __init__(self, detail: str):
        super().__init__(detail)


class UndefinedMetric(ObsobenchError):
    def __init__(self, name: str):
        super().__init__(f"metric {name!r} is undefined (zero denominator)")
        self.name = name


class MixedDatasets(ObsobenchError):
    def __init__(self, names):
        super().__init__(f"reports span multiple datasets: {sorted(names)}")
        self.names = names


class ConfigError(ObsobenchError):
    pass


class IoError(ObsobenchError):
    def __init__(self, path, detail: str = ""):
        msg = f"cannot write {path}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.path = path
