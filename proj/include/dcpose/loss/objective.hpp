#pragma once

#include <vector>

#include "dcpose/loss/losses.hpp"
#include "dcpose/loss/pairs.hpp"
#include "dcpose/nn/encoder.hpp"
#include "dcpose/nn/field.hpp"

namespace dcpose {

template <typename T>
struct LossBreakdown {
  nn::Tensor<T> total;
  double pen_nce = 0;
  double mask = 0;
  double con = 0;  // 0 when beta == 0 (the term is not evaluated)
};

/// L = L_penNCE(alpha) + L_M + beta * L_con over a batch of crops.
///
/// `pairs[n]` holds crop n's samples in crop pixel coordinates; `mask_labels`
/// is the ground-truth mask of all crops, in encoder row order. The InfoNCE
/// and consistency terms are averaged over crops. The consistency point set of
/// a crop is its negative surface points, deduplicated. Crops with identical
/// negative sets share one key evaluation and one consistency term.
template <typename T>
LossBreakdown<T> total_loss(const std::vector<PairBatch>& pairs, const nn::EncoderOutput<T>& enc, int crop_width,
                            int crop_height, const std::vector<std::uint8_t>& mask_labels,
                            const nn::LatentField<T>& field, const LossWeights& weights) {
  weights.validate();
  const int N = static_cast<int>(pairs.size());
  if (N == 0) throw InvalidArgument("total_loss: empty batch");
  if (enc.embeddings.dim(0) != N * crop_width * crop_height) throw InvalidArgument("total_loss: encoder output size");

  std::vector<T> coords;
  auto push = [&](const Eigen::Vector3d& c) { coords.insert(coords.end(), {T(c.x()), T(c.y()), T(c.z())}); };
  std::vector<int> pos_offset(N), group(N);
  std::vector<int> group_offset;
  std::vector<const std::vector<Eigen::Vector3d>*> group_set;
  for (int n = 0; n < N; ++n) {
    const auto& b = pairs[n];
    if (b.positives.empty() || b.negatives.empty()) throw InvalidArgument("total_loss: every crop needs pairs");
    pos_offset[n] = static_cast<int>(coords.size() / 3);
    for (const auto& p : b.positives) push(p.coord);
    int g = 0;
    while (g < static_cast<int>(group_set.size()) && *group_set[g] != b.negatives) ++g;
    if (g == static_cast<int>(group_set.size())) {
      group_set.push_back(&b.negatives);
      group_offset.push_back(static_cast<int>(coords.size() / 3));
      for (const auto& c : b.negatives) push(c);
    }
    group[n] = g;
  }
  const int rows = static_cast<int>(coords.size() / 3);
  const nn::Tensor<T> keys = field.forward(nn::Tensor<T>::constant({rows, 3}, std::move(coords)));

  std::vector<nn::Tensor<T>> neg_keys, group_con;
  for (std::size_t g = 0; g < group_set.size(); ++g) {
    const auto& negs = *group_set[g];
    std::vector<int> nidx(negs.size());
    for (std::size_t j = 0; j < negs.size(); ++j) nidx[j] = group_offset[g] + static_cast<int>(j);
    neg_keys.push_back(nn::gather_rows(keys, nidx));
    if (weights.beta > 0) {
      std::vector<int> rows_idx;
      std::vector<Eigen::Vector3d> pts;
      for (int u : unique_point_indices(negs)) {
        rows_idx.push_back(group_offset[g] + u);
        pts.push_back(negs[u]);
      }
      group_con.push_back(nn::consistency_loss(nn::gather_rows(keys, rows_idx), pts, weights.lambda, weights.m));
    }
  }

  std::vector<nn::Tensor<T>> nce_terms, con_terms;
  for (int n = 0; n < N; ++n) {
    const auto& b = pairs[n];
    const int B = static_cast<int>(b.positives.size());
    std::vector<int> qidx, pidx;
    std::vector<Eigen::Vector3d> qcoords;
    for (int i = 0; i < B; ++i) {
      const auto& p = b.positives[i];
      if (p.x < 0 || p.x >= crop_width || p.y < 0 || p.y >= crop_height) throw InvalidArgument("total_loss: pixel outside crop");
      qidx.push_back((n * crop_height + p.y) * crop_width + p.x);
      pidx.push_back(pos_offset[n] + i);
      qcoords.push_back(p.coord);
    }
    nce_terms.push_back(nn::penalized_info_nce(nn::gather_rows(enc.embeddings, qidx), nn::gather_rows(keys, pidx),
                                               neg_keys[group[n]], penalty_matrix(qcoords, b.negatives, weights.alpha)));
    if (weights.beta > 0) con_terms.push_back(group_con[group[n]]);
  }

  LossBreakdown<T> out;
  const nn::Tensor<T> l_nce = nn::mean_of(nce_terms);
  const nn::Tensor<T> l_mask = nn::mask_bce_logits(enc.logits, mask_labels);
  out.pen_nce = static_cast<double>(l_nce.item());
  out.mask = static_cast<double>(l_mask.item());
  out.total = nn::add(l_nce, l_mask);
  if (weights.beta > 0) {
    const nn::Tensor<T> l_con = nn::mean_of(con_terms);
    out.con = static_cast<double>(l_con.item());
    out.total = nn::add(out.total, nn::scale(l_con, static_cast<T>(weights.beta)));
  }
  return out;
}

}  // namespace dcpose
