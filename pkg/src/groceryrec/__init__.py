"""Alternative-product recommendation engine for grocery catalogs.

Given a source product that is unavailable, ranks substitute products from
the same catalog using only product characteristics: taxonomy, ingredient
text, nutrition table, allergens, packaging, brand and price.  Two ranking
families are provided: a bag-of-words one (``rscf``) and an embedding-based
one (``rsnn``), plus the survey tooling used to evaluate them.
"""

__version__ = "0.1.0"
