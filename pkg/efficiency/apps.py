from django.apps import AppConfig


class EfficiencyConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "efficiency"
    verbose_name = "Eficiencia asintotica intermedia"
