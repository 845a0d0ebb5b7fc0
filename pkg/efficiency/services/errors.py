class EfficiencyError(Exception):
    """Base de los errores de calculo de la app."""


class InvalidInputError(EfficiencyError, ValueError):
    pass


class DegenerateVarianceError(EfficiencyError):
    """La funcion de celda es afin en la variable de Poisson: no define una prueba."""


class InfeasibleAlternativeError(InvalidInputError):
    pass


class EnumerationBudgetError(EfficiencyError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"La enumeracion requiere {count} composiciones y el presupuesto es {budget}.")


class InsufficientReplicatesError(InvalidInputError):
    pass


class KnNotFoundError(EfficiencyError):
    def __init__(self, k_max: int):
        self.k_max = k_max
        super().__init__(f"La condicion de potencia no se cumple para ningun tamano hasta k_max={k_max}.")


class NonConvergenceError(EfficiencyError):
    pass


class ConfigurationError(EfficiencyError):
    """Configuracion de experimento invalida; ``errors`` lista los mensajes con la ruta del campo."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
