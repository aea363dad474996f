import dataclasses

import numpy as np
import pytest

from conftest import make_catalog, make_product
from groceryrec.catalog import NutritionFacts, SyntheticSpec, clean_catalog, \
    generate_synthetic_catalog
from groceryrec.errors import (
    EmptyPool,
    GroceryRecError,
    MissingNutrition,
    MissingPrice,
    UnknownProduct,
    VarietyTooSmall,
)
from groceryrec.ranking import Approach
from groceryrec.rsnn import (
    BrandPos,
    PoolScope,
    StaticVectorSource,
    brand_pos,
    candidate_pool,
    nutrition_score,
    recommend_hth_bd_nn,
    recommend_pk_bd_nn,
    recommend_pro_com_nn,
    score_pro_com,
)
from groceryrec.similarity import MetricKind
from oracles import rank_rsnn

METRICS = (MetricKind.COSINE, MetricKind.JACCARD, MetricKind.EUCLIDEAN,
           MetricKind.MANHATTAN)


def frozen_vectors(catalog, seed, dim=12):
    rng = np.random.default_rng(seed)
    universe = [f"t{i}" for i in range(30)]
    vectors, token_sets = {}, {}
    for p in catalog.products:
        vectors[p.ean] = rng.normal(size=dim)
        n = int(rng.integers(4, 12))
        token_sets[p.ean] = frozenset(rng.choice(universe, size=n, replace=False))
    return StaticVectorSource(vectors, token_sets), vectors, token_sets


class TestCandidatePool:
    def test_allergen_precondition(self):
        catalog = make_catalog([
            make_product("src", allergens=("nuts",)),
            make_product("only_nuts", allergens=("nuts",)),
            make_product("nuts_and_egg", allergens=("nuts", "egg")),
            make_product("clean", allergens=()),
        ])
        pool = candidate_pool(catalog, "src")
        assert set(pool.members) == {"only_nuts", "clean"}

    def test_other_variety_uses_subcategory(self):
        catalog = make_catalog([
            make_product("src", variety="Other", subcategory="fish"),
            make_product("same_sub", variety="canned", subcategory="fish"),
            make_product("other_sub", variety="canned", subcategory="meat"),
        ])
        pool = candidate_pool(catalog, "src")
        assert pool.scope is PoolScope.SUBCATEGORY
        assert pool.members == ("same_sub",)

    def test_allergen_free_source_admits_only_allergen_free(self):
        catalog = make_catalog([
            make_product("src", allergens=()),
            make_product("a", allergens=()),
            make_product("b", allergens=("soy",)),
        ])
        pool = candidate_pool(catalog, "src")
        assert pool.members == ("a",)

    def test_brand_attribute_filter_reported(self):
        catalog = make_catalog([
            make_product("src", brand_attribute="premium"),
            make_product("a", brand_attribute="standard"),
        ])
        with pytest.raises(EmptyPool) as err:
            candidate_pool(catalog, "src")
        assert err.value.stage == "brand_attribute"

    def test_source_never_in_pool(self, synthetic_catalog):
        for p in synthetic_catalog.products[:10]:
            try:
                pool = candidate_pool(synthetic_catalog, p.ean)
            except EmptyPool:
                continue
            assert p.ean not in pool.members

    def test_unknown_product(self, synthetic_catalog):
        with pytest.raises(UnknownProduct):
            candidate_pool(synthetic_catalog, "nope")


class TestBrandPos:
    def test_three_positions(self):
        p = make_product("p", brand="acme", brand_type="manufacturer")
        assert brand_pos(p, make_product("a", brand="acme",
                                         brand_type="manufacturer")) is BrandPos.POS1
        assert brand_pos(p, make_product("b", brand="acme",
                                         brand_type="white")) is BrandPos.POS2
        assert brand_pos(p, make_product("c", brand="zest",
                                         brand_type="white")) is BrandPos.POS3


class TestScoreProCom:
    def _pair(self, *, p_price=2.0, q_price=4.0, q_brand="acme",
              q_brand_type="manufacturer"):
        p = make_product("p", price=p_price)
        q = make_product("q", price=q_price, brand=q_brand,
                         brand_type=q_brand_type)
        source = StaticVectorSource({
            "p": np.array([1.0, 0.0]),
            "q": np.array([0.8, 0.6]),
        })
        return source, p, q

    def test_cj_price_adjustment(self):
        source, p, q = self._pair()
        scored = score_pro_com(source, MetricKind.COSINE, p, q)
        assert scored.d_base == pytest.approx(0.8, rel=1e-12)
        assert scored.d_r == pytest.approx(0.4, rel=1e-12)

    def test_em_price_adjustment(self):
        p = make_product("p", price=2.0)
        q = make_product("q", price=4.0)
        source = StaticVectorSource({
            "p": np.array([0.0, 0.0]),
            "q": np.array([1.0, 1.0]),
        })
        scored = score_pro_com(source, MetricKind.MANHATTAN, p, q)
        assert scored.d_base == 2.0
        assert scored.d_r == 0.25

    def test_pos1_weighting(self):
        source, p, q = self._pair()
        scored = score_pro_com(source, MetricKind.COSINE, p, q)
        assert scored.pos is BrandPos.POS1
        assert scored.d_m == pytest.approx(40.0, rel=1e-12)

    def test_equal_prices_leave_cj_base(self):
        source, p, q = self._pair(q_price=2.0)
        scored = score_pro_com(source, MetricKind.COSINE, p, q)
        assert scored.d_r == scored.d_base

    def test_price_ratio_symmetry(self):
        source, p, q = self._pair(p_price=3.0, q_price=9.0)
        swapped_p = dataclasses.replace(p, price=9.0)
        swapped_q = dataclasses.replace(q, price=3.0)
        a = score_pro_com(source, MetricKind.COSINE, p, q)
        b = score_pro_com(source, MetricKind.COSINE, swapped_p, swapped_q)
        assert a.d_r == b.d_r

    def test_missing_price(self):
        source, p, q = self._pair()
        with pytest.raises(MissingPrice):
            score_pro_com(source, MetricKind.COSINE,
                          dataclasses.replace(p, price=None), q)

    def test_literal_em_weights_switch(self):
        p = make_product("p", price=2.0)
        q = make_product("q", price=2.0)
        source = StaticVectorSource({
            "p": np.array([0.0, 0.0]),
            "q": np.array([1.0, 1.0]),
        })
        default = score_pro_com(source, MetricKind.MANHATTAN, p, q)
        literal = score_pro_com(source, MetricKind.MANHATTAN, p, q,
                                literal_em_weights=True)
        assert default.d_m == default.d_r * 100
        assert literal.d_m == literal.d_r * 1


class TestNutritionScore:
    def test_hand_derived_value(self):
        product = make_product("10590", nutrition=NutritionFacts(
            fat_g=2.8, sugar_g=0.0, carbs_g=2.8, dietary_fiber_pct=0.0,
            saturated_fat_g=0.0, good_fat_pct=0.0, protein_g=10.0, salt_g=2.0))
        assert nutrition_score(product).h == 5720.0

    def test_second_hand_derived_value(self):
        product = make_product("84107", nutrition=NutritionFacts(
            fat_g=4.3, sugar_g=8.0, carbs_g=4.3, dietary_fiber_pct=8.0,
            saturated_fat_g=15.0, good_fat_pct=0.0, protein_g=4.0, salt_g=10.0))
        score = nutrition_score(product)
        assert score.df_g == pytest.approx(0.344, rel=1e-12)
        assert score.h == pytest.approx(25023.2, rel=1e-12)

    def test_all_zero(self):
        product = make_product("z", nutrition=NutritionFacts(
            fat_g=0.0, sugar_g=0.0, carbs_g=0.0, dietary_fiber_pct=0.0,
            saturated_fat_g=0.0, good_fat_pct=0.0, protein_g=0.0, salt_g=0.0))
        assert nutrition_score(product).h == 0.0

    def test_incomplete_table(self):
        product = make_product("x", nutrition=NutritionFacts(fat_g=1.0,
                                                             sugar_g=1.0))
        with pytest.raises(MissingNutrition):
            nutrition_score(product)


def _chain_catalog():
    """Source and one candidate wired to give d_m=40 and h=5720."""
    nutrition = NutritionFacts(fat_g=2.8, sugar_g=0.0, carbs_g=2.8,
                               dietary_fiber_pct=0.0, saturated_fat_g=0.0,
                               good_fat_pct=0.0, protein_g=10.0, salt_g=2.0)
    return make_catalog([
        make_product("p", price=2.0, servings=2.0),
        make_product("q", price=4.0, servings=4.0, nutrition=nutrition),
    ])


def _chain_vectors():
    return StaticVectorSource({
        "p": np.array([1.0, 0.0]),
        "q": np.array([0.8, 0.6]),
    })


class TestHthBdNn:
    def test_hand_chained_health_ratio(self):
        result = recommend_hth_bd_nn(_chain_vectors(), MetricKind.COSINE,
                                     _chain_catalog(), "p", variety_threshold=1)
        (candidate,) = result.candidates
        assert candidate.score_breakdown["brand_weighted"] == \
            pytest.approx(40.0, rel=1e-12)
        assert candidate.score_breakdown["health"] == \
            pytest.approx(143.0, rel=1e-12)

    def test_lower_nutrition_score_wins_on_equal_d_m(self):
        lean = NutritionFacts(fat_g=0.0, sugar_g=0.0, carbs_g=1.0,
                              dietary_fiber_pct=0.0, saturated_fat_g=0.0,
                              good_fat_pct=0.0, protein_g=1.0, salt_g=0.0)
        rich = NutritionFacts(fat_g=20.0, sugar_g=20.0, carbs_g=30.0,
                              dietary_fiber_pct=0.0, saturated_fat_g=5.0,
                              good_fat_pct=0.0, protein_g=1.0, salt_g=2.0)
        catalog = make_catalog([
            make_product("p", price=2.0),
            make_product("lean", price=2.0, nutrition=lean),
            make_product("rich", price=2.0, nutrition=rich),
        ])
        vec = np.array([1.0, 1.0])
        source = StaticVectorSource({"p": vec, "lean": vec.copy(),
                                     "rich": vec.copy()})
        result = recommend_hth_bd_nn(source, MetricKind.COSINE, catalog, "p",
                                     variety_threshold=1)
        assert [c.ean for c in result.candidates] == ["lean", "rich"]

    def test_monotonic_in_nutrition_fields(self, synthetic_catalog):
        source, _, _ = frozen_vectors(synthetic_catalog, seed=3)
        target = None
        for p in synthetic_catalog.products:
            try:
                result = recommend_hth_bd_nn(source, MetricKind.COSINE,
                                             synthetic_catalog, p.ean,
                                             variety_threshold=1)
            except GroceryRecError:
                continue
            if len(result.candidates) >= 2:
                target = (p.ean, result)
                break
        assert target is not None
        ean, before = target
        bumped_ean = before.candidates[0].ean
        bumped = dataclasses.replace(
            synthetic_catalog.get(bumped_ean),
            nutrition=dataclasses.replace(
                synthetic_catalog.get(bumped_ean).nutrition,
                protein_g=synthetic_catalog.get(bumped_ean).nutrition.protein_g
                + 50.0))
        modified = make_catalog([
            bumped if p.ean == bumped_ean else p
            for p in synthetic_catalog.products
        ])
        after = recommend_hth_bd_nn(source, MetricKind.COSINE, modified, ean,
                                    variety_threshold=1)
        d_h = {c.ean: c.score_breakdown["health"] for c in before.candidates}
        d_h_after = {c.ean: c.score_breakdown["health"]
                     for c in after.candidates}
        assert d_h_after[bumped_ean] >= d_h[bumped_ean]
        rank_before = [c.ean for c in before.candidates].index(bumped_ean)
        rank_after = [c.ean for c in after.candidates].index(bumped_ean)
        assert rank_after >= rank_before


class TestPkBdNn:
    def test_hand_chained_servings_ratio(self):
        result = recommend_pk_bd_nn(_chain_vectors(), MetricKind.COSINE,
                                    _chain_catalog(), "p", variety_threshold=1)
        (candidate,) = result.candidates
        assert candidate.score_breakdown["servings"] == \
            pytest.approx((2 / 4) / 143.0, rel=1e-12)

    def test_equal_servings_gives_reciprocal_of_health(self):
        catalog = _chain_catalog()
        products = [catalog.get("p"),
                    dataclasses.replace(catalog.get("q"), servings=2.0)]
        catalog = make_catalog(products)
        result = recommend_pk_bd_nn(_chain_vectors(), MetricKind.COSINE,
                                    catalog, "p", variety_threshold=1)
        (candidate,) = result.candidates
        assert candidate.score_breakdown["servings"] == \
            pytest.approx(1.0 / candidate.score_breakdown["health"], rel=1e-12)


class TestOracleEquivalence:
    def test_all_metrics_and_stages_match_brute_force(self):
        approaches = {
            Approach.PRO_COM: (recommend_pro_com_nn, "pro_com"),
            Approach.HTH_BD: (recommend_hth_bd_nn, "hth_bd"),
            Approach.PK_BD: (recommend_pk_bd_nn, "pk_bd"),
        }
        compared = 0
        for seed in range(6):
            catalog = clean_catalog(generate_synthetic_catalog(SyntheticSpec(
                n_varieties=3, products_per_variety=12, seed=100 + seed,
                allergen_prob=0.1)))
            source, vectors, token_sets = frozen_vectors(catalog, seed)
            for p in catalog.products[:8]:
                for metric in METRICS:
                    for recommender, name in approaches.values():
                        try:
                            mine = recommender(source, metric, catalog, p.ean,
                                               k=None, variety_threshold=1)
                        except GroceryRecError:
                            continue
                        expected = rank_rsnn(catalog, vectors, token_sets,
                                             metric.value, p.ean, name)
                        assert [(c.ean, c.tie_group)
                                for c in mine.candidates] == \
                            [(ean, g) for ean, g, _ in expected]
                        for c, (_, _, payload) in zip(mine.candidates, expected):
                            for key, value in payload.items():
                                assert c.score_breakdown[key] == \
                                    pytest.approx(value, rel=1e-12)
                        compared += 1
        assert compared >= 150


class TestInvariants:
    def test_allergen_safety(self, synthetic_catalog):
        source, _, _ = frozen_vectors(synthetic_catalog, seed=5)
        checked = 0
        for p in synthetic_catalog.products:
            for recommender in (recommend_pro_com_nn, recommend_hth_bd_nn,
                                recommend_pk_bd_nn):
                try:
                    result = recommender(source, MetricKind.COSINE,
                                         synthetic_catalog, p.ean,
                                         variety_threshold=1)
                except GroceryRecError:
                    continue
                for c in result.candidates:
                    candidate = synthetic_catalog.get(c.ean)
                    assert candidate.allergens.issubset(p.allergens)
                    checked += 1
        assert checked > 20

    def test_stage_purity(self, synthetic_catalog):
        source, _, _ = frozen_vectors(synthetic_catalog, seed=6)
        weights = {1: 100.0, 2: 10.0, 3: 1.0}
        for p in synthetic_catalog.products[:20]:
            try:
                result = recommend_pro_com_nn(source, MetricKind.COSINE,
                                              synthetic_catalog, p.ean, k=None,
                                              variety_threshold=1)
            except GroceryRecError:
                continue
            for c in result.candidates:
                q = synthetic_catalog.get(c.ean)
                ratio = min(p.price, q.price) / max(p.price, q.price)
                d_r = c.score_breakdown["base"] * ratio
                assert d_r == c.score_breakdown["price_adjusted"]
                assert d_r * weights[c.score_breakdown["brand_pos"]] == \
                    c.score_breakdown["brand_weighted"]

    def test_cj_ranking_invariant_under_price_scaling(self, synthetic_catalog):
        source, _, _ = frozen_vectors(synthetic_catalog, seed=7)
        # power-of-two factor keeps the scaling exact in binary floats
        scaled = make_catalog([
            dataclasses.replace(p, price=p.price * 4.0)
            for p in synthetic_catalog.products
        ])
        for p in synthetic_catalog.products[:15]:
            try:
                before = recommend_pro_com_nn(source, MetricKind.COSINE,
                                              synthetic_catalog, p.ean, k=None,
                                              variety_threshold=1)
            except GroceryRecError:
                continue
            after = recommend_pro_com_nn(source, MetricKind.COSINE, scaled,
                                         p.ean, k=None, variety_threshold=1)
            assert [c.ean for c in before.candidates] == \
                [c.ean for c in after.candidates]

    def test_variety_threshold_enforced(self, synthetic_catalog):
        source, _, _ = frozen_vectors(synthetic_catalog, seed=8)
        ean = synthetic_catalog.products[0].ean
        with pytest.raises(VarietyTooSmall):
            recommend_pro_com_nn(source, MetricKind.COSINE, synthetic_catalog,
                                 ean, variety_threshold=1000)
