#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "streamreg/errors.hpp"
#include "streamreg/linear.hpp"
#include "streamreg/panel.hpp"
#include "streamreg/reference.hpp"
#include "test_util.hpp"

using namespace streamreg;
namespace ref = streamreg::reference;
using testutil::DgpConfig;
using testutil::ga_from_dense;
using testutil::make_linear;
using testutil::make_panel;

TEST_CASE("the within estimator equals the dummy regression") {
  const auto d = make_linear({.n = 240, .slopes = 3, .intercept = false, .groups = 12,
                              .group_effect = 1.5, .seed = 401});
  const GroupedAccumulator ga = ga_from_dense(d, 37);
  const FeResult fe = fe_within_fit(ga);
  const ref::FeFit oracle = ref::fe_dummy(d);

  CHECK(testutil::max_rel_diff(fe.fit.coefficients, oracle.slopes) < 1e-8);
  for (int j = 0; j < d.k; ++j)
    CHECK(testutil::rel_diff(fe.fit.se(j), oracle.slope_se[j]) < 1e-8);
  CHECK(fe.absorbed_groups == 12);
  CHECK(fe.fit.dof_residual == d.n - d.k - 12);
  CHECK(testutil::rel_diff(fe.fit.sigma2, oracle.sigma2) < 1e-8);

  // r2 lives in the demeaned space: check it against hand-demeaned rows
  std::vector<double> sum_y(12, 0.0);
  std::vector<int> cnt(12, 0);
  for (int i = 0; i < d.n; ++i) {
    sum_y[d.g[i]] += d.y[i];
    ++cnt[d.g[i]];
  }
  double tss_within = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double u = d.y[i] - sum_y[d.g[i]] / cnt[d.g[i]];
    tss_within += u * u;
  }
  const double rss = oracle.sigma2 * static_cast<double>(d.n - d.k - 12);
  CHECK(testutil::rel_diff(fe.fit.r2, 1.0 - rss / tss_within) < 1e-8);
}

TEST_CASE("weighted within demeaning matches the weighted dummy regression") {
  const auto d = make_linear({.n = 200, .slopes = 2, .intercept = false, .weighted = true,
                              .groups = 8, .group_effect = 1.0, .seed = 402});
  const FeResult fe = fe_within_fit(ga_from_dense(d));
  const ref::FeFit oracle = ref::fe_dummy(d);
  CHECK(testutil::max_rel_diff(fe.fit.coefficients, oracle.slopes) < 1e-8);
  for (int j = 0; j < d.k; ++j)
    CHECK(testutil::rel_diff(fe.fit.se(j), oracle.slope_se[j]) < 1e-8);
}

TEST_CASE("a singleton group is absorbed without poisoning the slopes") {
  auto d = make_panel(6, 1, 3, 2, 403, 1.0, 0.0);
  // keep only the first row of group 5
  testutil::DenseDataset trimmed;
  trimmed.k = d.k;
  trimmed.intercept = false;
  bool seen5 = false;
  for (int i = 0; i < d.n; ++i) {
    if (d.g[i] == 5) {
      if (seen5) continue;
      seen5 = true;
    }
    trimmed.y.push_back(d.y[i]);
    for (int j = 0; j < d.k; ++j) trimmed.x.push_back(d.xat(i, j));
    trimmed.g.push_back(d.g[i]);
    ++trimmed.n;
  }
  REQUIRE(trimmed.n == 16);
  const FeResult fe = fe_within_fit(ga_from_dense(trimmed));
  const ref::FeFit oracle = ref::fe_dummy(trimmed);
  CHECK(testutil::max_rel_diff(fe.fit.coefficients, oracle.slopes) < 1e-8);
  CHECK(fe.fit.dof_residual == 16 - 2 - 6);
}

TEST_CASE("group effects and their ses come back from the bordered system") {
  const auto d = make_linear({.n = 180, .slopes = 2, .intercept = false, .groups = 6,
                              .group_effect = 2.0, .seed = 404});
  const GroupedAccumulator ga = ga_from_dense(d, 29);
  const FeResult fe = fe_recover_effects(ga);
  const ref::FeFit oracle = ref::fe_dummy(d);

  CHECK(testutil::max_rel_diff(fe.fit.coefficients, oracle.slopes) < 1e-8);
  REQUIRE(fe.effects.has_value());
  REQUIRE(fe.effect_se.has_value());
  CHECK(testutil::max_rel_diff(*fe.effects, oracle.effects) < 1e-8);
  CHECK(testutil::max_rel_diff(*fe.effect_se, oracle.effect_se) < 1e-8);
  for (int j = 0; j < d.k; ++j)
    CHECK(testutil::rel_diff(fe.fit.se(j), oracle.slope_se[j]) < 1e-8);

  // same slopes as the within route (Frisch-Waugh)
  const FeResult within = fe_within_fit(ga);
  CHECK(testutil::max_rel_diff(fe.fit.coefficients, within.fit.coefficients) < 1e-9);

  CHECK_THROWS_AS(fe_recover_effects(ga, 5), TooManyGroups);
}

TEST_CASE("recovering effects needs more rows than parameters") {
  const auto d = make_panel(10, 1, 1, 2, 405, 1.0, 0.0);  // n = 10, p = 12
  CHECK_THROWS_AS(fe_recover_effects(ga_from_dense(d)), InsufficientObservations);
  CHECK_THROWS_AS(fe_within_fit(ga_from_dense(d)), InsufficientObservations);
}

TEST_CASE("two-way demeaning on a balanced panel equals the double-dummy fit") {
  const auto d = make_panel(10, 8, 2, 3, 406);
  const GroupedAccumulator ga = ga_from_dense(d, 41);
  const FeResult fe = fe_twoway_fit(ga);
  const Vec oracle = ref::fe_twoway_dummy(d);
  Vec oracle_slopes(oracle.begin(), oracle.begin() + d.k);

  CHECK(testutil::max_rel_diff(fe.fit.coefficients, oracle_slopes) < 1e-7);
  CHECK(fe.absorbed_groups == 10);
  CHECK(fe.absorbed_second_groups == 8);
  CHECK(fe.fit.dof_residual == d.n - d.k - (10 + 8 - 1));
}

TEST_CASE("a single second-group level reduces two-way to the within fit") {
  const auto d = make_panel(8, 1, 5, 2, 407);
  const GroupedAccumulator ga = ga_from_dense(d);
  const FeResult two = fe_twoway_fit(ga);
  const FeResult one = fe_within_fit(ga);
  CHECK(testutil::max_rel_diff(two.fit.coefficients, one.fit.coefficients) < 1e-10);
  CHECK(two.fit.dof_residual == one.fit.dof_residual);
}

TEST_CASE("unbalanced panels are refused") {
  SUBCASE("one short cell") {
    auto d = make_panel(5, 4, 3, 2, 408);
    d.y.pop_back();
    d.g.pop_back();
    d.t.pop_back();
    d.x.resize(d.x.size() - d.k);
    --d.n;
    CHECK_THROWS_AS(fe_twoway_fit(ga_from_dense(d)), UnbalancedPanel);
  }
  SUBCASE("an entirely missing cell") {
    const auto d = make_panel(5, 4, 3, 2, 409);
    testutil::DenseDataset holed;
    holed.k = d.k;
    holed.intercept = false;
    for (int i = 0; i < d.n; ++i) {
      if (d.g[i] == 0 && d.t[i] == 0) continue;
      holed.y.push_back(d.y[i]);
      for (int j = 0; j < d.k; ++j) holed.x.push_back(d.xat(i, j));
      holed.g.push_back(d.g[i]);
      holed.t.push_back(d.t[i]);
      ++holed.n;
    }
    CHECK_THROWS_AS(fe_twoway_fit(ga_from_dense(holed)), UnbalancedPanel);
  }
  SUBCASE("weights are not supported two-way") {
    auto d = make_panel(4, 3, 2, 2, 410);
    d.w.assign(d.n, 1.5);
    CHECK_THROWS_AS(fe_twoway_fit(ga_from_dense(d)), UsageError);
  }
}

TEST_CASE("a constant column cannot ride along with absorbed effects") {
  const auto d = make_linear({.n = 90, .slopes = 2, .groups = 5, .group_effect = 1.0,
                              .seed = 411});  // intercept defaults to true
  const GroupedAccumulator ga = ga_from_dense(d);
  CHECK_THROWS_AS(fe_within_fit(ga), UsageError);
  CHECK_THROWS_AS(fe_recover_effects(ga), UsageError);
}

TEST_CASE("demeaning a group-constant outcome leaves nothing to explain") {
  testutil::DenseDataset d;
  d.k = 1;
  d.intercept = false;
  SplitMix64 rng(412);
  for (int g = 0; g < 4; ++g)
    for (int r = 0; r < 10; ++r) {
      d.y.push_back(static_cast<double>(g));
      d.x.push_back(rng.next_normal());
      d.g.push_back(g);
      ++d.n;
    }
  const FeResult fe = fe_within_fit(ga_from_dense(d));
  CHECK(fe.fit.degenerate_tss);
  CHECK(fe.fit.r2 == 0.0);
  CHECK(std::abs(fe.fit.coefficients[0]) < 1e-10);
}

TEST_CASE("subsample fits agree with re-running on the kept rows") {
  const auto d = make_linear({.n = 300, .slopes = 2, .groups = 8, .group_effect = 0.8,
                              .seed = 413});
  const GroupedAccumulator ga = ga_from_dense(d, 53);
  const std::vector<int> keep{0, 2, 5};
  const FitResult sub = subsample_fit(ga, keep);
  const auto kept = testutil::filter_groups(d, keep);
  const ref::OracleFit oracle = ref::ols(kept);

  CHECK(sub.n == kept.n);
  CHECK(testutil::max_rel_diff(sub.coefficients, oracle.beta) < 1e-10);
  CHECK(testutil::rel_diff(sub.sigma2, oracle.sigma2) < 1e-10);

  // any aggregate-consuming estimator can be plugged in
  const FitResult sub_ridge =
      subsample_fit(ga, keep, [](const CrossProducts& cp) { return ridge_fit(cp, 3.0); });
  const Vec ridge_oracle = ref::ridge(kept, 3.0, false);
  CHECK(testutil::max_rel_diff(sub_ridge.coefficients, ridge_oracle) < 1e-9);
}

TEST_CASE("subsample selections are validated") {
  const auto d = make_linear({.n = 60, .slopes = 1, .groups = 4, .seed = 414});
  const GroupedAccumulator ga = ga_from_dense(d);
  CHECK_THROWS_AS(subsample_fit(ga, std::vector<int>{0, 99}), UnknownGroup);
  CHECK_THROWS_AS(subsample_fit(ga, std::vector<int>{1, 1}), UsageError);
  CHECK_THROWS_AS(subsample_fit(ga, std::vector<int>{}), UsageError);
}
