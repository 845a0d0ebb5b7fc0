from django.db import models


class ExperimentRecord(models.Model):
    class Command(models.TextChoices):
        MOMENTS = "moments", "Momentos de Poisson"
        POWER = "power", "Potencia"
        CORR = "corr", "Correlacion con chi2"
        NORMALITY = "normality", "Aproximacion normal"
        IARE = "iare", "IARE"
        VERDICT = "verdict", "Veredictos"
        VERIFY = "verify", "Criterios de aceptacion"

    class Status(models.TextChoices):
        OK = "OK", "Correcto"
        ERROR = "ERROR", "Error"
        FAILED = "FAILED", "Criterios fallidos"

    experiment_id = models.CharField(max_length=64, unique=True)
    command = models.CharField(max_length=16, choices=Command.choices)
    status = models.CharField(max_length=8, choices=Status.choices, default=Status.OK)
    input_echo = models.JSONField(default=dict, blank=True)
    outputs = models.JSONField(default=list, blank=True)
    std_errs = models.JSONField(default=dict, blank=True)
    seed_echo = models.CharField(max_length=48, blank=True, default="")
    wall_time_s = models.FloatField(default=0.0)
    csv_path = models.CharField(max_length=255, blank=True, default="")
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at", "-id"]

    def __str__(self) -> str:
        return f"{self.command} {self.experiment_id} {self.status}".strip()
