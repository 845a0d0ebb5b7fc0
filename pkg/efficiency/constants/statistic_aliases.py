# Alias de estadisticas y perfiles (nombres usuales -> descriptor canonico).
STATISTIC_ALIASES = {
    "pearson": "chi2",
    "chi-square": "chi2",
    "chi_square": "chi2",
    "chisq": "chi2",
    "x2": "chi2",
    "g2": "llr",
    "g-test": "llr",
    "log-likelihood": "llr",
    "loglik": "llr",
    "lambda": "llr",
    "freeman-tukey": "ft",
    "freeman_tukey": "ft",
    "hellinger": "ft",
    "t2": "ft",
    "cressie-read": "pd:0.6666666666666666",
    "collisions": "collision",
    "colisiones": "collision",
    "c_n": "collision",
    "empty-cells": "mu:0",
    "celdas-vacias": "mu:0",
    "singletons": "mu:1",
    "doubletons": "mu:2",
}

PROFILE_ALIASES = {
    "two_block": "two-block",
    "twoblock": "two-block",
    "dos-bloques": "two-block",
    "single_cell": "single-cell",
    "spike": "single-cell",
    "una-celda": "single-cell",
    "cos": "cosine",
    "coseno": "cosine",
}
