import json
from pathlib import Path

from django import forms
from django.core.exceptions import ValidationError
from django.forms import BaseFormSet, formset_factory

from .services.acceptance import CRITERIA
from .services.descriptors import normalize_profile, parse_statistic
from .services.errors import ConfigurationError, InvalidInputError
from .services.iare import TauKind
from .services.montecarlo import MIN_CORR_REPS, MIN_TAIL_REPS, Centering, SeedSpec

VERIFY_MIN_REPS = 10_000


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError([f"config: no se pudo leer {path}: {exc.strerror}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError([f"config: JSON invalido en linea {exc.lineno}, columna {exc.colno}: {exc.msg}"]) from exc
    if not isinstance(data, dict):
        raise ConfigurationError(["config: se esperaba un objeto JSON."])
    return data


def validate_config(form_class, data: dict) -> tuple[dict, dict]:
    """Validate a config mapping; returns (cleaned values, echo with every default filled in)."""
    form = form_class(data)
    if not form.is_valid():
        raise ConfigurationError(form.error_paths())
    return form.config(), form.echo


class StatisticField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            return parse_statistic(value)
        except InvalidInputError as exc:
            raise ValidationError(str(exc)) from exc


class StatisticListField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, (str, dict)):
            value = [value]
        if not isinstance(value, (list, tuple)):
            raise ValidationError("Se esperaba una lista de estadisticas.")
        statistics, errors = [], []
        for index, item in enumerate(value):
            try:
                statistics.append(parse_statistic(item))
            except InvalidInputError as exc:
                errors.append(f"[{index}]: {exc}")
        if errors:
            raise ValidationError(errors)
        return statistics


class NumberListField(forms.Field):
    def __init__(self, *, integer: bool = False, ascending: bool = False, **kwargs):
        self.integer = integer
        self.ascending = ascending
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if not isinstance(value, (list, tuple)):
            value = [value]
        numbers = []
        for index, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ValidationError(f"[{index}]: se esperaba un numero.")
            if self.integer and float(item) != int(item):
                raise ValidationError(f"[{index}]: se esperaba un entero.")
            if item <= 0:
                raise ValidationError(f"[{index}]: debe ser positivo.")
            numbers.append(int(item) if self.integer else float(item))
        if self.ascending and any(b <= a for a, b in zip(numbers, numbers[1:])):
            raise ValidationError("Los valores deben ser estrictamente crecientes.")
        return numbers


class SeedField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, bool):
            raise ValidationError("Semilla invalida.")
        try:
            if isinstance(value, int):
                return SeedSpec(master_seed=value)
            return SeedSpec.parse(value)
        except InvalidInputError as exc:
            raise ValidationError(str(exc)) from exc


class CaseForm(forms.Form):
    n = forms.IntegerField(min_value=2, label="Tamano de muestra")
    N = forms.IntegerField(min_value=2, label="Numero de celdas")


class RequiredCaseFormSet(BaseFormSet):
    def clean(self) -> None:
        super().clean()
        if any(self.errors):
            return

        if any(not form.cleaned_data for form in self.forms):
            raise forms.ValidationError("Cada caso requiere n y N.")
        if len(self.forms) < 1:
            raise forms.ValidationError("Debe registrar al menos 1 caso.")


CaseFormSet = formset_factory(
    CaseForm,
    formset=RequiredCaseFormSet,
    extra=0,
    min_num=1,
    max_num=200,
    validate_min=True,
    validate_max=True,
)


def _formset_data(prefix: str, items: list[dict]) -> dict:
    data = {
        f"{prefix}-TOTAL_FORMS": str(len(items)),
        f"{prefix}-INITIAL_FORMS": "0",
    }
    for index, item in enumerate(items):
        for key, value in item.items():
            data[f"{prefix}-{index}-{key}"] = value
    return data


class ConfigForm(forms.Form):
    """Form over one JSON object; nested objects and lists of objects get their own forms."""

    nested: dict = {}
    collections: dict = {}

    def __init__(self, data: dict, *, path: str = ""):
        self.path = path
        self.type_errors: list[str] = []
        self.children: dict = {}
        data = dict(data or {})

        defaults = {name: field.initial for name, field in self.base_fields.items() if field.initial is not None}
        own = {key: value for key, value in data.items() if key in self.base_fields and value is not None}
        self.unknown = sorted(set(data) - set(self.base_fields) - set(self.nested) - set(self.collections))
        self.echo = {**defaults, **own}

        for name, (form_class, required) in self.nested.items():
            if name not in data and not required:
                continue
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                self.type_errors.append(f"{path}{name}: se esperaba un objeto.")
                continue
            child = form_class(raw, path=f"{path}{name}.")
            self.children[name] = child
            self.echo[name] = child.echo

        for name, formset_class in self.collections.items():
            raw = data.get(name, [])
            if not isinstance(raw, list) or not all(isinstance(item, dict) for item in raw):
                self.type_errors.append(f"{path}{name}: se esperaba una lista de objetos.")
                continue
            self.children[name] = formset_class(data=_formset_data(name, raw), prefix=name)
            self.echo[name] = raw

        super().__init__(data={**defaults, **own})

    def is_valid(self) -> bool:
        children_valid = all([child.is_valid() for child in self.children.values()])
        own_valid = super().is_valid()
        return own_valid and children_valid and not self.unknown and not self.type_errors

    def child_config(self, name: str):
        child = self.children.get(name)
        if child is None or not child.is_valid():
            return None
        if isinstance(child, BaseFormSet):
            return [form.cleaned_data for form in child.forms]
        return child.config()

    def config(self) -> dict:
        values = dict(self.cleaned_data)
        for name in (*self.nested, *self.collections):
            values[name] = self.child_config(name)
        return values

    def error_paths(self) -> list[str]:
        messages = [f"{self.path}{key}: clave desconocida." for key in self.unknown] + list(self.type_errors)
        for field, errors in self.errors.items():
            if field == "__all__":
                location = self.path.rstrip(".") or "config"
            else:
                location = f"{self.path}{field}"
            for error in errors:
                messages.append(f"{location}{error}" if error.startswith("[") else f"{location}: {error}")
        for name, child in self.children.items():
            if isinstance(child, BaseFormSet):
                child.is_valid()
                for index, form in enumerate(child.forms):
                    for field, errors in form.errors.items():
                        messages.extend(f"{self.path}{name}[{index}].{field}: {error}" for error in errors)
                messages.extend(f"{self.path}{name}: {error}" for error in child.non_form_errors())
            else:
                messages.extend(child.error_paths())
        return messages


class GrowthForm(ConfigForm):
    c = forms.FloatField(required=False, initial=1.0, label="Constante de la ley N(x) = c x^q")
    q = forms.FloatField(required=False, initial=1.0, label="Indice de crecimiento")

    def clean(self):
        cleaned_data = super().clean()
        c = cleaned_data.get("c")
        q = cleaned_data.get("q")
        if c is not None and c <= 0:
            self.add_error("c", "Debe ser positivo.")
        if q is not None and not 0 < q < 2:
            self.add_error("q", "Debe estar en (0, 2).")
        return cleaned_data


class FamilyForm(ConfigForm):
    profile = forms.CharField(required=False, initial="two-block", label="Perfil")
    c = forms.FloatField(required=False, initial=1.0, label="Amplitud")
    gamma = forms.FloatField(required=False, initial=0.4, label="Exponente de decaimiento")

    def clean_profile(self):
        try:
            return normalize_profile(self.cleaned_data.get("profile"))
        except InvalidInputError as exc:
            raise ValidationError(str(exc)) from exc

    def clean(self):
        cleaned_data = super().clean()
        c = cleaned_data.get("c")
        gamma = cleaned_data.get("gamma")
        if c is not None and c <= 0:
            self.add_error("c", "Debe ser positivo.")
        if gamma is not None and not 0 < gamma <= 1:
            self.add_error("gamma", "Debe estar en (0, 1].")
        return cleaned_data


class TauForm(ConfigForm):
    kind = forms.ChoiceField(required=False, choices=TauKind.choices, initial=TauKind.CONSTANT, label="Tipo")
    value = forms.FloatField(required=False, initial=0.5, label="Valor")

    def clean(self):
        cleaned_data = super().clean()
        value = cleaned_data.get("value")
        if cleaned_data.get("kind") == TauKind.CONSTANT and (value is None or not 0 < value <= 0.5):
            self.add_error("value", "tau constante debe estar en (0, 1/2].")
        return cleaned_data


class ExperimentConfigForm(ConfigForm):
    experiment_id = forms.SlugField(required=False, max_length=64, label="Identificador")
    seed = SeedField(required=False, label="Semilla 'semilla:flujo'")
    reps = forms.IntegerField(required=False, min_value=MIN_TAIL_REPS, initial=10_000, label="Replicas")
    threads = forms.IntegerField(required=False, min_value=1, label="Hilos")


class MomentsConfigForm(ExperimentConfigForm):
    statistics = StatisticListField(label="Estadisticas")
    lambdas = NumberListField(label="Valores de lambda")
    truncation_tol = forms.FloatField(required=False, label="Tolerancia de truncamiento")

    def clean_truncation_tol(self):
        value = self.cleaned_data.get("truncation_tol")
        if value is not None and not 0 < value <= 1e-8:
            raise ValidationError("Debe estar en (0, 1e-8].")
        return value


class PowerConfigForm(ExperimentConfigForm):
    nested = {"growth": (GrowthForm, True), "family": (FamilyForm, False)}

    statistics = StatisticListField(label="Estadisticas")
    n_grid = NumberListField(integer=True, ascending=True, label="Malla de n")
    alpha = forms.FloatField(required=False, initial=0.05, label="Nivel")
    nabla = forms.FloatField(required=False, min_value=0.0, label="Indice de contiguidad fijo")

    def clean(self):
        cleaned_data = super().clean()
        alpha = cleaned_data.get("alpha")
        if alpha is not None and not 0 < alpha < 1:
            self.add_error("alpha", "Debe estar en (0, 1).")
        has_family = "family" in self.children
        if has_family == (cleaned_data.get("nabla") is not None):
            raise ValidationError("Indique exactamente uno de 'family' o 'nabla'.")
        return cleaned_data


class CorrConfigForm(ExperimentConfigForm):
    reps = forms.IntegerField(required=False, min_value=MIN_CORR_REPS, initial=100_000, label="Replicas")
    statistics = StatisticListField(label="Estadisticas")
    n = forms.IntegerField(min_value=2, label="Tamano de muestra")
    N = forms.IntegerField(min_value=2, label="Numero de celdas")
    exact = forms.BooleanField(required=False, initial=False, label="Correlacion exacta por enumeracion")
    dump_distribution = forms.BooleanField(required=False, initial=False, label="Exportar distribucion exacta")


class NormalityConfigForm(ExperimentConfigForm):
    collections = {"cases": CaseFormSet}

    statistics = StatisticListField(label="Estadisticas")
    centering = forms.ChoiceField(
        required=False, choices=Centering.choices, initial=Centering.POISSON, label="Centrado de la estadistica"
    )


class IareConfigForm(ExperimentConfigForm):
    nested = {"growth": (GrowthForm, True), "family": (FamilyForm, True), "tau": (TauForm, True)}

    h = StatisticField(required=False, initial="chi2", label="Estadistica de referencia")
    psi = StatisticListField(label="Estadisticas comparadas")
    n_grid = NumberListField(integer=True, ascending=True, label="Malla de n")
    z = forms.FloatField(required=False, initial=0.0, label="Umbral z")
    monte_carlo = forms.BooleanField(required=False, initial=False, label="Buscar k_n por Monte Carlo")
    window = forms.IntegerField(required=False, min_value=0, initial=5, label="Ventana de verificacion")
    exact_shift = forms.BooleanField(required=False, initial=False, label="kappa exacto")
    k_max = forms.IntegerField(required=False, min_value=2, label="k maximo")


class VerdictConfigForm(ExperimentConfigForm):
    nested = {"growth": (GrowthForm, True), "family": (FamilyForm, True)}

    psi = StatisticListField(label="Estadisticas comparadas")
    n_grid = NumberListField(
        required=False, integer=True, ascending=True, initial=[100, 1000, 10000], label="Malla de n"
    )


class VerifyConfigForm(ExperimentConfigForm):
    reps = forms.IntegerField(required=False, min_value=VERIFY_MIN_REPS, label="Replicas (sustituye las del criterio)")
    items = forms.MultipleChoiceField(
        required=False,
        choices=[(key, key) for key in CRITERIA],
        initial=list(CRITERIA),
        label="Criterios",
    )
