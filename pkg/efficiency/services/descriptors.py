from efficiency.constants.statistic_aliases import PROFILE_ALIASES, STATISTIC_ALIASES
from efficiency.constants.statistics import CUSTOM_TAIL_RULES, NAMED_STATISTICS, PARAMETRIC_STATISTICS

from .alternatives import ProfileKind
from .errors import InvalidInputError
from .statistics import PD_ZERO_TOL, CellFunction

NAMED_BUILDERS = {
    "chi2": CellFunction.chi_square,
    "llr": CellFunction.log_likelihood,
    "ft": CellFunction.freeman_tukey,
    "collision": CellFunction.collision,
}


def get_available_statistics() -> list[tuple[str, str]]:
    named = list(NAMED_STATISTICS.items())
    return named + [(f"{prefix}:<valor>", label) for prefix, label in PARAMETRIC_STATISTICS.items()]


def normalize_statistic_name(descriptor: str | None) -> str:
    if not descriptor:
        return ""

    raw = str(descriptor).strip().lower().replace(" ", "")
    if not raw:
        return ""

    if raw in NAMED_STATISTICS:
        return raw
    if raw in STATISTIC_ALIASES:
        return STATISTIC_ALIASES[raw]
    return raw


def _parameter(raw: str, prefix: str) -> str:
    value = raw[len(prefix) + 1:]
    if not value:
        raise InvalidInputError(f"Falta el parametro del descriptor {raw!r}.")
    return value


def parse_statistic(descriptor) -> CellFunction:
    """Resolve a textual descriptor, or a {"table": [...], "tail": ...} mapping, into a cell function."""
    if isinstance(descriptor, CellFunction):
        return descriptor
    if isinstance(descriptor, dict):
        table = descriptor.get("table")
        tail = str(descriptor.get("tail", "zero")).strip().lower()
        if not isinstance(table, (list, tuple)):
            raise InvalidInputError("La estadistica personalizada requiere una lista 'table'.")
        if tail not in CUSTOM_TAIL_RULES:
            raise InvalidInputError(f"Regla de cola desconocida: {tail!r}.")
        try:
            return CellFunction.custom([float(value) for value in table], tail_rule=tail)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError("La tabla personalizada debe contener numeros.") from exc

    name = normalize_statistic_name(descriptor)
    if name in NAMED_BUILDERS:
        return NAMED_BUILDERS[name]()

    try:
        if name.startswith("pd:"):
            d = float(_parameter(name, "pd"))
            if abs(d) < PD_ZERO_TOL:
                return CellFunction.log_likelihood()
            return CellFunction.power_divergence(d)
        if name.startswith("mu:"):
            return CellFunction.indicator(int(_parameter(name, "mu")))
    except ValueError as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"Parametro invalido en el descriptor {descriptor!r}.") from exc

    options = ", ".join(name for name, _ in get_available_statistics())
    raise InvalidInputError(f"Estadistica desconocida: {descriptor!r}. Opciones: {options}.")


def normalize_profile(profile: str | None) -> str:
    raw = str(profile or "").strip().lower()
    if raw in ProfileKind.values:
        return raw
    if raw in PROFILE_ALIASES:
        return PROFILE_ALIASES[raw]
    raise InvalidInputError(f"Perfil de alternativa desconocido: {profile!r}.")
