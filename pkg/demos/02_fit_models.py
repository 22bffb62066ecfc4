"""Fit a sequence of nested logit models for the highly-cited indicator.

Model 1 uses universities only; model 2 adds the other covariates; model 3
adds squared terms for journal impact and document length, allowing
diminishing (and eventually negative) returns.  Note how the university
contrasts move once journal impact is controlled for.
"""

import numpy as np

import logitmargins as lm

ds = lm.generate(lm.default_config(n=15426, seed=7, correlated=True))

FORMULAS = {
    "model 1 (universities only)": "top10 ~ C(univ)",
    "model 2 (all variables)":
        "top10 ~ C(univ) + C(subject) + C(doctype) + jif + years + authors + pages",
    "model 3 (squared terms)":
        "top10 ~ C(univ) + C(subject) + C(doctype) + jif + jif^2 + years "
        "+ authors + pages + pages^2",
}


def stars(p):
    return "***" if p < 0.001 else "**" if p < 0.01 else "*" if p < 0.05 else ""


for title, formula in FORMULAS.items():
    design = lm.build_design(ds, lm.parse_formula(formula))
    fr = lm.fit(design)
    st = lm.fit_stats(fr)
    print(f"\n=== {title} ===")
    for j, label in enumerate(design.term_map.labels):
        print(f"  {label:<22}{fr.beta[j]:>10.4g}{stars(st.p[j]):<4}(z = {st.z[j]:.2f})")
    print(f"  N = {fr.n}, pseudo R2 = {st.pseudo_r2:.3f}, "
          f"AIC = {st.aic:.1f}, BIC = {st.bic:.1f}, "
          f"chi2 = {st.lr_chi2:.1f}, df = {st.df}")

print("\nWith this correlated corpus (university 3 publishes in lower-impact"
      "\njournals), its raw contrast is negative in model 1 but turns positive"
      "\nonce journal impact enters the model.")
