#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <string>
#include <vector>

#include "gpicl/curves.hpp"
#include "gpicl/errors.hpp"

using namespace gpicl;

namespace {

PredictionRecord rec(const std::string& episode, int n, double err) {
  PredictionRecord r;
  r.predictor_id = "p";
  r.episode_id = episode;
  r.n = n;
  r.x_star.resize(1);
  r.x_star << 0.0;
  r.y_target = 0.0;
  r.y_hat = err;  // |y_hat - 0| = err
  r.raw_text = "x";
  return r;
}

PredictionRecord failed_rec(const std::string& episode, int n) {
  auto r = rec(episode, n, 0.0);
  r.y_hat.reset();
  return r;
}

}  // namespace

TEST_CASE("learning curve point estimates are plain means over records") {
  std::vector<PredictionRecord> records{rec("a", 1, 1.0), rec("b", 1, 3.0),
                                        rec("a", 2, 0.5), rec("b", 2, 1.5),
                                        rec("c", 2, 1.0)};
  const auto curve = learning_curve(records, 50, 0.95, 7);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].n == 1);
  CHECK(curve[0].mean_abs_error == doctest::Approx(2.0));
  CHECK(curve[0].count == 2);
  CHECK(curve[0].failures == 0);
  CHECK(curve[1].n == 2);
  CHECK(curve[1].mean_abs_error == doctest::Approx(1.0));
  CHECK(curve[1].count == 3);
}

TEST_CASE("identical errors collapse the interval onto the mean") {
  std::vector<PredictionRecord> records{rec("a", 3, 2.0), rec("b", 3, 2.0),
                                        rec("c", 3, 2.0)};
  const auto curve = learning_curve(records, 200, 0.95, 1);
  CHECK(curve[0].ci_low == doctest::Approx(2.0));
  CHECK(curve[0].ci_high == doctest::Approx(2.0));
}

TEST_CASE("bootstrap intervals bracket the mean and depend on the seed") {
  std::vector<PredictionRecord> records;
  const double errs[5] = {0.05, 0.3, 1.1, 2.7, 3.9};
  const char* eps[5] = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 5; ++i) records.push_back(rec(eps[i], 1, errs[i]));

  const auto c1 = learning_curve(records, 1000, 0.95, 1);
  const auto c1_again = learning_curve(records, 1000, 0.95, 1);
  const auto c2 = learning_curve(records, 1000, 0.95, 2);
  CHECK(c1[0].ci_low == c1_again[0].ci_low);
  CHECK(c1[0].ci_high == c1_again[0].ci_high);
  CHECK(c1[0].ci_low <= c1[0].mean_abs_error);
  CHECK(c1[0].ci_high >= c1[0].mean_abs_error);
  CHECK(c1[0].ci_low < c1[0].ci_high);
  CHECK((c1[0].ci_low != c2[0].ci_low || c1[0].ci_high != c2[0].ci_high));

  // Wider nominal level, wider interval.
  const auto c99 = learning_curve(records, 1000, 0.99, 1);
  CHECK(c99[0].ci_low <= c1[0].ci_low);
  CHECK(c99[0].ci_high >= c1[0].ci_high);
}

TEST_CASE("unparseable records count as failures and never bias the mean") {
  std::vector<PredictionRecord> records{rec("a", 1, 1.0), failed_rec("b", 1),
                                        failed_rec("a", 4), failed_rec("b", 4)};
  const auto curve = learning_curve(records, 10, 0.9, 0);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].mean_abs_error == doctest::Approx(1.0));
  CHECK(curve[0].count == 1);
  CHECK(curve[0].failures == 1);
  CHECK(curve[1].n == 4);
  CHECK(curve[1].count == 0);
  CHECK(curve[1].failures == 2);
  CHECK(std::isnan(curve[1].mean_abs_error));
}

TEST_CASE("learning curve input validation") {
  CHECK_THROWS_AS(learning_curve({}, 10, 0.9, 0), InputDomainError);
  std::vector<PredictionRecord> one{rec("a", 0, 1.0)};
  CHECK_THROWS_AS(learning_curve(one, 0, 0.9, 0), InputDomainError);
  CHECK_THROWS_AS(learning_curve(one, 10, 0.0, 0), InputDomainError);
  CHECK_THROWS_AS(learning_curve(one, 10, 1.0, 0), InputDomainError);
}

TEST_CASE("curve reports require a shared n grid") {
  NamedCurve a{"a", {{0, 1.0, 0.9, 1.1, 5, 0}, {2, 0.5, 0.4, 0.6, 5, 0}}};
  NamedCurve b{"b", {{0, 1.0, 0.9, 1.1, 5, 0}}};
  CHECK_THROWS_AS(curve_report({a, b}, std::nullopt, std::nullopt), InputDomainError);
  CHECK_THROWS_AS(curve_report({}, std::nullopt, std::nullopt), InputDomainError);
  CHECK_THROWS_AS(curve_report({a}, std::vector<double>{1.0}, std::nullopt),
                  InputDomainError);

  const auto report = curve_report({a}, std::nullopt, std::nullopt);
  CHECK(report.n_values == std::vector<int>{0, 2});
}

TEST_CASE("csv layout") {
  NamedCurve m{"m", {{0, 1.5, 1.25, 1.75, 4, 0}, {2, 0.5, 0.25, 0.75, 4, 1}}};
  NamedCurve nn{"1nn",
                {{0, 2.5, 2.0, 3.0, 4, 0},
                 {2, std::nan(""), std::nan(""), std::nan(""), 0, 4}}};
  const std::vector<double> bound{0.5, std::nan("")};
  const auto report = curve_report({m, nn}, bound, std::nullopt);
  CHECK(curve_report_csv(report) ==
        "n,m_mae,m_lo,m_hi,1nn_mae,1nn_lo,1nn_hi,nn_bound\n"
        "0,1.5,1.25,1.75,2.5,2,3,0.5\n"
        "2,0.5,0.25,0.75,,,,\n");
}

TEST_CASE("plot json carries nulls for missing cells") {
  NamedCurve m{"m", {{0, 1.5, 1.25, 1.75, 4, 0}, {2, std::nan(""), std::nan(""), std::nan(""), 0, 4}}};
  const auto report =
      curve_report({m}, std::vector<double>{0.5, 0.25}, std::vector<double>{0.4, 0.2});
  const auto j = nlohmann::json::parse(curve_report_plot_json(report));
  CHECK(j.at("n") == nlohmann::json({0, 2}));
  CHECK(j.at("curves").at(0).at("predictor_id") == "m");
  CHECK(j.at("curves").at(0).at("mae").at(0) == 1.5);
  CHECK(j.at("curves").at(0).at("mae").at(1).is_null());
  CHECK(j.at("curves").at(0).at("failures").at(1) == 4);
  CHECK(j.at("nn_bound") == nlohmann::json({0.5, 0.25}));
  CHECK(j.at("gp_ref").at(1) == 0.2);
}
