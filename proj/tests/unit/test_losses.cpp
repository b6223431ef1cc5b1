#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dcpose/loss/objective.hpp"
#include "dcpose/synth/instrument.hpp"
#include "support/oracles.hpp"

using namespace dcpose;
using TD = nn::Tensor<double>;

namespace {

Eigen::VectorXd unit(std::mt19937_64& rng, int e) {
  Eigen::VectorXd v(e);
  for (int k = 0; k < e; ++k) v[k] = normal(rng);
  return v.normalized();
}

// Uniform in the normalized ball of radius 0.5.
Eigen::Vector3d point(std::mt19937_64& rng) {
  for (;;) {
    const Eigen::Vector3d c(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
    if (c.norm() <= 0.5) return c;
  }
}

TD rows(const std::vector<Eigen::VectorXd>& v, bool param = false) {
  const int e = static_cast<int>(v[0].size());
  std::vector<double> flat;
  for (const auto& x : v) flat.insert(flat.end(), x.data(), x.data() + e);
  const nn::Shape s{static_cast<int>(v.size()), e};
  return param ? TD::parameter(s, flat) : TD::constant(s, flat);
}

}  // namespace

TEST(InfoNce, ScalarMatchesNaiveOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const int e = 2 + t % 15;
    const auto q = unit(rng, e), p = unit(rng, e);
    std::vector<Eigen::VectorXd> negs;
    std::vector<double> w;
    for (int j = 0; j < 1 + t % 40; ++j) {
      negs.push_back(unit(rng, e));
      w.push_back(uniform(rng, 0.3, 1.0));
    }
    EXPECT_NEAR(info_nce(q, p, negs), oracle::naive_nce(q, p, negs, {}), 1e-10);
    EXPECT_NEAR(penalized_info_nce(q, p, negs, w), oracle::naive_nce(q, p, negs, w), 1e-10);
  }
}

TEST(InfoNce, BatchedMatchesScalarAndAlphaZeroIsExact) {
  std::mt19937_64 rng(2);
  const int B = 7, M = 11, E = 6;
  std::vector<Eigen::VectorXd> q, p, n;
  std::vector<Eigen::Vector3d> qc, nc;
  for (int i = 0; i < B; ++i) {
    q.push_back(unit(rng, E));
    p.push_back(unit(rng, E));
    qc.push_back(point(rng));
  }
  for (int j = 0; j < M; ++j) {
    n.push_back(unit(rng, E));
    nc.push_back(point(rng));
  }
  const auto w = penalty_matrix(qc, nc, 0.8);
  double ref = 0;
  for (int i = 0; i < B; ++i) ref += oracle::naive_nce(q[i], p[i], n, std::vector<double>(w.begin() + i * M, w.begin() + (i + 1) * M));
  EXPECT_NEAR(nn::penalized_info_nce(rows(q), rows(p), rows(n), w).item(), ref / B, 1e-10);

  const auto w0 = penalty_matrix(qc, nc, 0.0);
  for (double x : w0) EXPECT_EQ(x, 1.0);
  EXPECT_EQ(nn::penalized_info_nce(rows(q), rows(p), rows(n), w0).item(),
            nn::penalized_info_nce(rows(q), rows(p), rows(n), std::vector<double>(B * M, 1.0)).item());
  for (int i = 0; i < B; ++i) {
    EXPECT_EQ(penalized_info_nce(q[i], p[i], n, std::vector<double>(w0.begin() + i * M, w0.begin() + (i + 1) * M)),
              info_nce(q[i], p[i], n));
  }
}

TEST(Penalty, ClosedFormValues) {
  const Eigen::Vector3d a(0.1, -0.2, 0.3);
  EXPECT_EQ(penalty(a, a, 1.2), 1.0);
  EXPECT_NEAR(penalty(Eigen::Vector3d::Zero(), Eigen::Vector3d(1, 0, 0), 1.0), 1.0 - std::log(2.0), 1e-12);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const auto c1 = point(rng), c2 = point(rng);
    const double alpha = uniform(rng, 0.0, 1.44);
    const double p = penalty(c1, c2, alpha);
    EXPECT_GT(p, 0.0);  // |c_i - c_j| <= 1 and alpha ln 2 < 1
    EXPECT_LE(p, 1.0);
    EXPECT_NEAR(p, penalty(c2, c1, alpha), 1e-15);
  }
  LossWeights bad;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Consistency, ZeroOnIsometryAndWeightFloor) {
  std::mt19937_64 rng(4);
  std::vector<Eigen::Vector3d> pts;
  std::vector<Eigen::VectorXd> emb;
  const Eigen::Matrix3d R = oracle::random_rotation(rng);
  for (int i = 0; i < 20; ++i) {
    pts.push_back(point(rng));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
    e.head<3>() = R * pts.back() + Eigen::Vector3d(0.3, 0.1, -0.2);
    emb.push_back(e);
  }
  EXPECT_NEAR(consistency_loss(pts, emb, 10.0, 0.01), 0.0, 1e-24);
  EXPECT_NEAR(nn::consistency_loss(rows(emb), pts, 10.0, 0.01).item(), 0.0, 1e-24);
  EXPECT_EQ(consistency_weight(pts[0], pts[0], 10.0, 0.01), 1.0);
  EXPECT_EQ(consistency_weight({0, 0, 0}, {1, 0, 0}, 10.0, 0.01), 0.01);

  for (auto& e : emb) e = unit(rng, 5);
  EXPECT_NEAR(nn::consistency_loss(rows(emb), pts, 10.0, 0.01).item(), consistency_loss(pts, emb, 10.0, 0.01), 1e-12);
}

TEST(MaskBce, LogitsMatchProbabilityForm) {
  std::mt19937_64 rng(5);
  std::vector<double> z = oracle::random_values(rng, 50, -8, 8), p;
  std::vector<std::uint8_t> y;
  for (double v : z) {
    p.push_back(1.0 / (1.0 + std::exp(-v)));
    y.push_back(uniform01(rng) < 0.5);
  }
  EXPECT_NEAR(nn::mask_bce_logits(TD::constant({50, 1}, z), y).item(), mask_bce(p, y), 1e-10);
  EXPECT_NEAR(mask_bce({0.5}, {1}), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isfinite(nn::mask_bce_logits(TD::constant({2, 1}, {1e4, -1e4}), {0, 1}).item()));
}

TEST(LossGradients, FiniteDifferencesOnEveryTerm) {
  std::mt19937_64 rng(6);
  const int B = 3, M = 4, E = 4;
  std::vector<Eigen::VectorXd> q, p, n;
  std::vector<Eigen::Vector3d> qc, nc;
  for (int i = 0; i < B; ++i) q.push_back(unit(rng, E)), p.push_back(unit(rng, E)), qc.push_back(point(rng));
  for (int j = 0; j < M; ++j) n.push_back(unit(rng, E)), nc.push_back(point(rng));
  const auto w = penalty_matrix(qc, nc, 0.9);
  std::vector<TD> in{rows(q, true), rows(p, true), rows(n, true)};
  auto r = oracle::finite_difference([&](auto& x) { return nn::penalized_info_nce(x[0], x[1], x[2], w); }, in);
  EXPECT_LT(r.max_rel_error, 1e-5);

  std::vector<std::uint8_t> y{1, 0, 1, 1, 0};
  std::vector<TD> logits{TD::parameter({5, 1}, oracle::random_values(rng, 5, -4, 4))};
  r = oracle::finite_difference([&](auto& x) { return nn::mask_bce_logits(x[0], y); }, logits);
  EXPECT_LT(r.max_rel_error, 1e-5);

  std::vector<Eigen::Vector3d> pts(qc);
  pts.insert(pts.end(), nc.begin(), nc.end());
  std::vector<Eigen::VectorXd> all(q);
  all.insert(all.end(), n.begin(), n.end());
  std::vector<TD> emb{rows(all, true)};
  r = oracle::finite_difference([&](auto& x) { return nn::consistency_loss(x[0], pts, 10.0, 0.01); }, emb);
  EXPECT_LT(r.max_rel_error, 1e-5);
}

namespace {

struct TinySetup {
  nn::LatentField<double> field;
  nn::PixelEncoder<double> encoder;
  TD images;
  std::vector<PairBatch> pairs;
  std::vector<std::uint8_t> labels;
  static constexpr int S = 4;

  static nn::LatentFieldConfig field_config() {
    nn::LatentFieldConfig c;
    c.hidden = {8};
    c.embedding_dim = 3;
    return c;
  }
  static nn::PixelEncoderConfig encoder_config() {
    nn::PixelEncoderConfig c;
    c.levels = 1;
    c.base_channels = 2;
    c.max_channels = 4;
    c.embedding_dim = 3;
    c.input_size = S;
    return c;
  }
  TinySetup() : field(field_config(), 1), encoder(encoder_config(), 2) {
    std::mt19937_64 rng(7);
    images = TD::constant({2, 3, S, S}, oracle::random_values(rng, 2 * 3 * S * S));
    for (int n = 0; n < 2; ++n) {
      PairBatch b;
      for (int i = 0; i < 3; ++i) b.positives.push_back({static_cast<int>(uniform_index(rng, S)), static_cast<int>(uniform_index(rng, S)), point(rng)});
      for (int j = 0; j < 5; ++j) b.negatives.push_back(point(rng));
      pairs.push_back(b);
    }
    for (int i = 0; i < 2 * S * S; ++i) labels.push_back(i % 3 == 0);
  }
};

}  // namespace

TEST(TotalLoss, ZeroWeightsReduceToBaseline) {
  TinySetup s;
  const auto enc = s.encoder.forward(s.images);
  LossWeights w;
  w.alpha = 0;
  w.beta = 0;
  const auto total = total_loss(s.pairs, enc, TinySetup::S, TinySetup::S, s.labels, s.field, w);
  EXPECT_EQ(total.con, 0.0);

  double nce = 0;
  for (const auto& b : s.pairs) {
    std::vector<Eigen::VectorXd> negs;
    for (const auto& c : b.negatives) negs.push_back(Eigen::Map<const Eigen::VectorXd>(s.field.forward(TD::constant({1, 3}, {c.x(), c.y(), c.z()})).value().data(), 3));
    double per = 0;
    for (const auto& p : b.positives) {
      const int crop = static_cast<int>(&b - s.pairs.data());
      const int row = (crop * TinySetup::S + p.y) * TinySetup::S + p.x;
      const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(enc.embeddings.value().data() + row * 3, 3);
      const Eigen::VectorXd key = Eigen::Map<const Eigen::VectorXd>(s.field.forward(TD::constant({1, 3}, {p.coord.x(), p.coord.y(), p.coord.z()})).value().data(), 3);
      per += info_nce(q, key, negs);
    }
    nce += per / b.positives.size();
  }
  nce /= s.pairs.size();
  std::vector<double> probs;
  for (double z : enc.logits.value()) probs.push_back(1.0 / (1.0 + std::exp(-z)));
  EXPECT_NEAR(total.pen_nce, nce, 1e-10);
  EXPECT_NEAR(total.mask, mask_bce(probs, s.labels), 1e-10);
  EXPECT_NEAR(total.total.item(), nce + mask_bce(probs, s.labels), 1e-10);
}

TEST(TotalLoss, GradientsThroughFieldParameters) {
  TinySetup s;
  LossWeights w;
  w.alpha = 0.9;
  w.beta = 0.5;
  std::vector<TD> params;
  for (const auto& p : s.field.parameters()) params.push_back(p.tensor);
  params.push_back(s.encoder.parameters().back().tensor);
  const auto r = oracle::finite_difference(
      [&](auto&) {
        return total_loss(s.pairs, s.encoder.forward(s.images), TinySetup::S, TinySetup::S, s.labels, s.field, w).total;
      },
      params);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(TotalLoss, ConsistencyOverNegativeSetsSharedOrNot) {
  TinySetup s;
  LossWeights w;
  w.beta = 0.5;
  auto key = [&](const Eigen::Vector3d& c) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(s.field.forward(TD::constant({1, 3}, {c.x(), c.y(), c.z()})).value().data(), 3));
  };
  auto expected = [&] {
    double con = 0;
    for (const auto& b : s.pairs) {
      std::vector<Eigen::VectorXd> k;
      for (const auto& c : b.negatives) k.push_back(key(c));
      con += consistency_loss(b.negatives, k, w.lambda, w.m);
    }
    return con / s.pairs.size();
  };
  const auto enc = s.encoder.forward(s.images);
  EXPECT_NEAR(total_loss(s.pairs, enc, TinySetup::S, TinySetup::S, s.labels, s.field, w).con, expected(), 1e-10);

  s.pairs[1].negatives = s.pairs[0].negatives;
  EXPECT_NEAR(total_loss(s.pairs, enc, TinySetup::S, TinySetup::S, s.labels, s.field, w).con, expected(), 1e-10);
  std::vector<TD> params;
  for (const auto& p : s.field.parameters()) params.push_back(p.tensor);
  const auto r = oracle::finite_difference(
      [&](auto&) {
        return total_loss(s.pairs, s.encoder.forward(s.images), TinySetup::S, TinySetup::S, s.labels, s.field, w).total;
      },
      params);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(SamplePairs, PositivesOnMaskNegativesOnSurface) {
  Mask mask(6, 5);
  Image<float> coords(6, 5, 3);
  for (int y = 1; y < 4; ++y) {
    for (int x = 2; x < 5; ++x) {
      mask.at(x, y) = 1;
      for (int c = 0; c < 3; ++c) coords.at(x, y, c) = 0.1f * (x + y + c);
    }
  }
  const SurfaceModel model = make_box({0, 0, 0}, {1, 2, 3});
  const SurfaceSampler sampler(model);
  const auto a = sample_pairs(mask, coords, sampler, 200, 50, 9);
  const auto b = sample_pairs(mask, coords, sampler, 200, 50, 9);
  ASSERT_EQ(a.positives.size(), 200u);
  ASSERT_EQ(a.negatives.size(), 50u);
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < a.positives.size(); ++i) {
    const auto& p = a.positives[i];
    EXPECT_TRUE(mask.at(p.x, p.y));
    EXPECT_FLOAT_EQ(static_cast<float>(p.coord.x()), coords.at(p.x, p.y, 0));
    EXPECT_EQ(p.x, b.positives[i].x);
    seen.insert({p.x, p.y});
  }
  EXPECT_EQ(seen.size(), 9u);
  for (const auto& c : a.negatives) EXPECT_LE(c.norm(), 0.5 + 1e-12);
  EXPECT_THROW(sample_pairs(Mask(6, 5), coords, sampler, 1, 1, 1), InvalidArgument);
  EXPECT_EQ(unique_point_indices({{0, 0, 0}, {1, 0, 0}, {0, 0, 0}}), (std::vector<int>{0, 1}));
}
