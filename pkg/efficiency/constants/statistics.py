# Catalogo de estadisticas con nombre (descriptor canonico -> nombre en espanol).
NAMED_STATISTICS = {
    "chi2": "Chi-cuadrado de Pearson",
    "llr": "Razon de verosimilitud (G2)",
    "ft": "Freeman-Tukey",
    "collision": "Numero de colisiones",
}

# Familias con parametro: "pd:<d>" y "mu:<r>".
PARAMETRIC_STATISTICS = {
    "pd": "Divergencia de potencia de indice d",
    "mu": "Celdas con exactamente r observaciones",
}

# Reglas de cola para tablas personalizadas.
CUSTOM_TAIL_RULES = ["zero", "constant", "linear"]
