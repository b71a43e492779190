#include <doctest.h>

#include "collabrep/metrics.hpp"
#include "test_util.hpp"

using namespace collabrep;

TEST_CASE("MPD matches an exhaustive double loop") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledDataset train = testutil::random_dataset(6, 4, 5, rng);
    const Eigen::MatrixXd Q = testutil::random_matrix(6, 1 + trial % 4, rng);
    std::vector<double> best(4, std::numeric_limits<double>::infinity());
    for (Index q = 0; q < Q.cols(); ++q) {
      for (Index j = 0; j < train.size(); ++j) {
        double s = 0.0;
        for (Index r = 0; r < 6; ++r) s += (Q(r, q) - train.features()(r, j)) * (Q(r, q) - train.features()(r, j));
        auto& slot = best[static_cast<std::size_t>(train.labels()[static_cast<std::size_t>(j)] - 1)];
        slot = std::min(slot, std::sqrt(s));
      }
    }
    const Prediction p = mpd_classify(train, Q);
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(p.residuals[c] - best[c]) <= 1e-12 * std::max(1.0, best[c]));
  }
}

TEST_CASE("trend fit matches the textbook regression formulas") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x, y;
    for (int k = 0; k < 5 + trial; ++k) {
      x.push_back(normal(rng));
      y.push_back(0.3 * x.back() + normal(rng));
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      sx += x[k];
      sy += y[k];
      sxx += x[k] * x[k];
      sxy += x[k] * y[k];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    const TrendFit fit = fit_trend(x, y);
    CHECK(std::abs(fit.slope - slope) <= 1e-10);
    CHECK(std::abs(fit.intercept - intercept) <= 1e-10);
  }
}
