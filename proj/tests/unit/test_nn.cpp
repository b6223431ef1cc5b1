#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dcpose/nn/adam.hpp"
#include "dcpose/nn/checkpoint.hpp"
#include "dcpose/nn/encoder.hpp"
#include "dcpose/nn/field.hpp"
#include "dcpose/nn/ops.hpp"
#include "support/oracles.hpp"

using namespace dcpose;
using namespace dcpose::nn;
using TD = Tensor<double>;

namespace {

TD param(std::mt19937_64& rng, Shape s, double lo = -1, double hi = 1) {
  const std::size_t n = shape_size(s);
  return TD::parameter(std::move(s), oracle::random_values(rng, n, lo, hi));
}

// Contracts an arbitrary output with fixed random weights so every element feeds the scalar.
TD probe(const TD& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return weighted_sum(y, oracle::random_values(rng, y.size()));
}

void expect_gradients(const std::function<TD(std::vector<TD>&)>& f, std::vector<TD> inputs) {
  const auto r = oracle::finite_difference(f, inputs);
  EXPECT_GT(r.checked, 0);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

}  // namespace

TEST(Ops, MatmulAndBiasGradients) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    expect_gradients([](auto& in) { return probe(add_bias(matmul(in[0], in[1]), in[2]), 7); },
                     {param(rng, {4, 3}), param(rng, {3, 5}), param(rng, {5})});
  }
}

TEST(Ops, SineSigmoidReluGradients) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    expect_gradients([](auto& in) { return probe(sine(in[0], 30.0), 3); }, {param(rng, {3, 4}, -0.1, 0.1)});
    expect_gradients([](auto& in) { return probe(sigmoid(in[0]), 4); }, {param(rng, {3, 4}, -3, 3)});
    // keep relu inputs away from the kink
    std::vector<double> v = oracle::random_values(rng, 12, 0.1, 1);
    for (std::size_t k = 0; k < v.size(); k += 2) v[k] = -v[k];
    expect_gradients([](auto& in) { return probe(relu(in[0]), 5); }, {TD::parameter({3, 4}, v)});
  }
}

TEST(Ops, L2NormalizeGradientAndProjection) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    expect_gradients([](auto& in) { return probe(l2_normalize_rows(in[0]), 6); }, {param(rng, {5, 4})});
  }
  TD x = param(rng, {1, 6});
  TD y = l2_normalize_rows(x);
  probe(y, 9).backward();
  double dot = 0, norm = 0;
  for (int k = 0; k < 6; ++k) {
    dot += x.grad()[k] * y.value()[k];
    norm += y.value()[k] * y.value()[k];
  }
  EXPECT_NEAR(dot, 0.0, 1e-12);
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(Ops, ConvPoolUpsampleGradients) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 3; ++i) {
    expect_gradients([](auto& in) { return probe(conv2d(in[0], in[1], in[2]), 8); },
                     {param(rng, {2, 3, 6, 6}), param(rng, {4, 3, 3, 3}), param(rng, {4})});
    expect_gradients([](auto& in) { return probe(conv2d(in[0], in[1], in[2]), 9); },
                     {param(rng, {1, 2, 4, 4}), param(rng, {3, 2, 1, 1}), param(rng, {3})});
    expect_gradients([](auto& in) { return probe(upsample2(avg_pool2(in[0])), 10); }, {param(rng, {2, 2, 4, 6})});
    expect_gradients([](auto& in) { return probe(to_rows(concat_channels(in[0], in[1])), 11); },
                     {param(rng, {2, 2, 3, 3}), param(rng, {2, 1, 3, 3})});
  }
}

TEST(Ops, ConvMatchesDirectLoop) {
  std::mt19937_64 rng(5);
  TD x = param(rng, {1, 2, 5, 4}), w = param(rng, {3, 2, 3, 3}), b = param(rng, {3});
  TD y = conv2d(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{1, 3, 5, 4}));
  auto X = [&](int c, int r, int s) { return (r < 0 || s < 0 || r >= 5 || s >= 4) ? 0.0 : x.value()[(c * 5 + r) * 4 + s]; };
  for (int o = 0; o < 3; ++o) {
    for (int r = 0; r < 5; ++r) {
      for (int s = 0; s < 4; ++s) {
        double acc = b.value()[o];
        for (int c = 0; c < 2; ++c) {
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) acc += w.value()[((o * 2 + c) * 3 + i) * 3 + j] * X(c, r + i - 1, s + j - 1);
          }
        }
        EXPECT_NEAR(y.value()[(o * 5 + r) * 4 + s], acc, 1e-12);
      }
    }
  }
}

TEST(Ops, RowOpsGradients) {
  std::mt19937_64 rng(6);
  expect_gradients([](auto& in) { return probe(gather_rows(in[0], {2, 0, 2, 1}), 12); }, {param(rng, {3, 4})});
  expect_gradients([](auto& in) { return probe(slice_cols(concat_rows(in[0], in[1]), 1, 3), 13); },
                   {param(rng, {2, 4}), param(rng, {3, 4})});
  expect_gradients([](auto& in) { return mean_of(std::vector<TD>{scale(probe(in[0], 14), 3.0), add(probe(in[0], 15), probe(in[1], 16))}); },
                   {param(rng, {2, 2}), param(rng, {3})});
}

TEST(Ops, ShapeErrors) {
  EXPECT_THROW(matmul(TD::zeros({2, 3}), TD::zeros({2, 3})), InvalidArgument);
  EXPECT_THROW(TD::constant({2, 2}, {1, 2, 3}), InvalidArgument);
  EXPECT_THROW(TD::zeros({2}).item(), InvalidArgument);
}

TEST(Field, UnitRowsAndPointGradients) {
  LatentFieldConfig cfg;
  cfg.hidden = {16, 16};
  cfg.embedding_dim = 5;
  const LatentField<double> field(cfg, 3);
  std::mt19937_64 rng(7);
  TD pts = TD::constant({20, 3}, oracle::random_values(rng, 60, -0.5, 0.5));
  const TD e = field.forward(pts);
  for (int i = 0; i < 20; ++i) {
    double n = 0;
    for (int k = 0; k < 5; ++k) n += e.value()[i * 5 + k] * e.value()[i * 5 + k];
    EXPECT_NEAR(n, 1.0, 1e-9);
  }
  expect_gradients([&](auto& in) { return probe(field.forward(in[0]), 17); }, {param(rng, {3, 3}, -0.5, 0.5)});
  const auto params = field.parameters();
  EXPECT_EQ(params.size(), 6u);
  EXPECT_EQ(params.front().name, "field.w0");
}

TEST(Encoder, ShapesAndParameterGradients) {
  PixelEncoderConfig cfg;
  cfg.levels = 1;
  cfg.base_channels = 2;
  cfg.max_channels = 4;
  cfg.embedding_dim = 3;
  cfg.input_size = 4;
  const PixelEncoder<double> enc(cfg, 1);
  std::mt19937_64 rng(8);
  TD x = TD::constant({2, 3, 4, 4}, oracle::random_values(rng, 96));
  const auto out = enc.forward(x);
  EXPECT_EQ(out.embeddings.shape(), (Shape{32, 3}));
  EXPECT_EQ(out.logits.shape(), (Shape{32, 1}));
  // move the head bias off zero: a pixel with no active input would otherwise sit on the normalization kink
  auto head_bias = enc.parameters().back().tensor.value();
  for (std::size_t k = 0; k < head_bias.size(); ++k) head_bias[k] = 0.3 + 0.1 * k;
  for (const auto& p : enc.parameters()) {
    SCOPED_TRACE(p.name);
    expect_gradients([&](auto&) { return add(probe(enc.forward(x).embeddings, 18), probe(enc.forward(x).logits, 19)); },
                     {p.tensor});
  }
  EXPECT_THROW(enc.forward(TD::zeros({1, 3, 8, 8})), InvalidArgument);
  cfg.input_size = 6;
  cfg.levels = 2;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Adam, MatchesScalarReference) {
  TD p = TD::parameter({2}, {1.0, -2.0});
  Adam<double> adam;
  adam.add_group({{"p", p}}, 0.1);
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  for (int t = 1; t <= 5; ++t) {
    adam.zero_grad();
    TD loss = weighted_sum(p, {3.0, 0.5});
    loss = add(loss, weighted_sum(sine(p, 1.0), {1.0, 1.0}));
    loss.backward();
    adam.step();
    for (int i = 0; i < 2; ++i) {
      const double g = (i == 0 ? 3.0 : 0.5) + std::cos(x[i]);
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p.value()[i], x[i], 1e-12);
    }
  }
  EXPECT_THROW(adam.add_group({{"q", p}}, 0.0), InvalidArgument);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() / "dcpose_test_ckpt.dcpk";
    std::filesystem::remove(path_);
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(CheckpointTest, RoundTripWithOptimizerState) {
  LatentFieldConfig cfg;
  cfg.hidden = {8};
  cfg.embedding_dim = 4;
  LatentField<double> a(cfg, 1), b(cfg, 2);
  Adam<double> opt_a, opt_b;
  opt_a.add_group(a.parameters(), 1e-3);
  opt_b.add_group(b.parameters(), 1e-3);
  probe(a.forward(TD::constant({2, 3}, {0.1, 0.2, 0.3, -0.1, 0, 0.2})), 1).backward();
  opt_a.step();

  Checkpoint ck;
  ck.config_hash = "abc";
  ck.blocks.push_back(make_text_block("config", "x = 1\n"));
  append_state<double>(ck, a.parameters(), &opt_a);
  save_checkpoint(ck, path_);
  const Checkpoint back = load_checkpoint(path_);
  EXPECT_EQ(back.config_hash, "abc");
  EXPECT_EQ(block_text(back.at("config")), "x = 1\n");
  restore_state<double>(back, b.parameters(), &opt_b);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto va = pa[i].tensor.value(), vb = pb[i].tensor.value();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
  }
  EXPECT_EQ(opt_b.step_count(), 1);
  EXPECT_EQ(opt_b.slots()[0].m, opt_a.slots()[0].m);
}

TEST_F(CheckpointTest, CorruptionVersionAndShapeErrors) {
  LatentFieldConfig cfg;
  cfg.hidden = {8};
  cfg.embedding_dim = 4;
  LatentField<double> a(cfg, 1);
  Checkpoint ck;
  append_state<double>(ck, a.parameters(), nullptr);
  save_checkpoint(ck, path_);

  std::vector<char> bytes;
  {
    std::ifstream in(path_, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::vector<char>& b) { std::ofstream(path_, std::ios::binary).write(b.data(), b.size()); };

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  write(flipped);
  EXPECT_THROW(load_checkpoint(path_), CheckpointCorrupted);

  write(std::vector<char>(bytes.begin(), bytes.begin() + bytes.size() / 3));
  EXPECT_THROW(load_checkpoint(path_), CheckpointCorrupted);

  auto versioned = bytes;
  versioned[4] = 9;
  write(versioned);
  EXPECT_THROW(load_checkpoint(path_), CheckpointVersionMismatch);

  write(bytes);
  const Checkpoint ok = load_checkpoint(path_);
  cfg.hidden = {9};
  LatentField<double> other(cfg, 5);
  const auto before = std::vector<double>(other.parameters()[0].tensor.value().begin(), other.parameters()[0].tensor.value().end());
  EXPECT_THROW(restore_state<double>(ok, other.parameters(), nullptr), CheckpointShapeMismatch);
  const auto after = other.parameters()[0].tensor.value();
  EXPECT_TRUE(std::equal(before.begin(), before.end(), after.begin()));  // nothing partially loaded

  LatentField<float> as_float(LatentFieldConfig{{8}, 4, 30.0}, 1);
  EXPECT_THROW(restore_state<float>(ok, as_float.parameters(), nullptr), CheckpointShapeMismatch);
  EXPECT_THROW(load_checkpoint(path_.string() + ".missing"), DataError);
}
