# Generated by Django 5.2.11 on 2026-10-19 10:42

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRecord",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("experiment_id", models.CharField(max_length=64, unique=True)),
                (
                    "command",
                    models.CharField(
                        choices=[
                            ("moments", "Momentos de Poisson"),
                            ("power", "Potencia"),
                            ("corr", "Correlacion con chi2"),
                            ("normality", "Aproximacion normal"),
                            ("iare", "IARE"),
                            ("verdict", "Veredictos"),
                            ("verify", "Criterios de aceptacion"),
                        ],
                        max_length=16,
                    ),
                ),
                (
                    "status",
                    models.CharField(
                        choices=[("OK", "Correcto"), ("ERROR", "Error"), ("FAILED", "Criterios fallidos")],
                        default="OK",
                        max_length=8,
                    ),
                ),
                ("input_echo", models.JSONField(blank=True, default=dict)),
                ("outputs", models.JSONField(blank=True, default=list)),
                ("std_errs", models.JSONField(blank=True, default=dict)),
                ("seed_echo", models.CharField(blank=True, default="", max_length=48)),
                ("wall_time_s", models.FloatField(default=0.0)),
                ("csv_path", models.CharField(blank=True, default="", max_length=255)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={"ordering": ["-created_at", "-id"]},
        ),
    ]
