#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dcpose/nn/ops.hpp"

namespace dcpose {

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double lambda = 10.0;
  double m = 0.01;

  /// Throws InvalidArgument unless alpha >= 0, beta >= 0, lambda > 0, 0 < m <= 1 and alpha * ln 2 < 1.
  void validate() const;
};

inline constexpr double kLogitClamp = 30.0;

// Reference scalar forms, used by tests and diagnostics.

/// p_ij = 1 - alpha * ln(|c_j - c_i| + 1)
double penalty(const Eigen::Vector3d& ci, const Eigen::Vector3d& cj, double alpha);

/// w_ij = max(m, exp(-lambda |c_i - c_j|))
double consistency_weight(const Eigen::Vector3d& ci, const Eigen::Vector3d& cj, double lambda, double m);

/// -log(exp<q,p> / (exp<q,p> + sum_j w_j exp<q,n_j>)); empty weights mean all ones.
double penalized_info_nce(const Eigen::VectorXd& query, const Eigen::VectorXd& positive,
                          const std::vector<Eigen::VectorXd>& negatives, const std::vector<double>& weights);
double info_nce(const Eigen::VectorXd& query, const Eigen::VectorXd& positive, const std::vector<Eigen::VectorXd>& negatives);

/// -mean[y log p + (1 - y) log(1 - p)]
double mask_bce(const std::vector<double>& probabilities, const std::vector<std::uint8_t>& labels);

/// (2 / (N (N - 1))) sum_{i<j} w_ij (|c_i - c_j| - |E_i - E_j|)^2
double consistency_loss(const std::vector<Eigen::Vector3d>& points, const std::vector<Eigen::VectorXd>& embeddings,
                        double lambda, double m);

/// Penalty matrix [B x M] between query coordinates and negative coordinates.
std::vector<double> penalty_matrix(const std::vector<Eigen::Vector3d>& query_coords,
                                   const std::vector<Eigen::Vector3d>& negative_coords, double alpha);

namespace nn {

/// Batched penalized InfoNCE, mean over the B queries.
/// queries [B,E], positives [B,E], negatives [M,E]; weights is B*M row-major.
template <typename T>
Tensor<T> penalized_info_nce(const Tensor<T>& queries, const Tensor<T>& positives, const Tensor<T>& negatives,
                             const std::vector<double>& weights) {
  const int B = queries.dim(0), E = queries.dim(1), M = negatives.dim(0);
  if (positives.dim(0) != B || positives.dim(1) != E || negatives.dim(1) != E) {
    throw InvalidArgument("penalized_info_nce: shape mismatch");
  }
  if (weights.size() != static_cast<std::size_t>(B) * M) throw InvalidArgument("penalized_info_nce: weight matrix size");
  for (double w : weights) {
    if (!(w > 0)) throw InvalidArgument("penalized_info_nce: penalties must be positive");
  }
  auto out = make_result<T>({1}, {queries, positives, negatives});
  const auto& q = queries.node()->value;
  const auto& p = positives.node()->value;
  const auto& n = negatives.node()->value;

  // logits[i, 0] is the positive, logits[i, 1 + j] the negatives; keep the
  // softmax coefficients for the backward pass.
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> s(B, M + 1);
  s.col(0) = (ConstMatrixMap<T>(q.data(), B, E).cwiseProduct(ConstMatrixMap<T>(p.data(), B, E))).rowwise().sum();
  s.rightCols(M).noalias() = ConstMatrixMap<T>(q.data(), B, E) * ConstMatrixMap<T>(n.data(), M, E).transpose();
  auto coef = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(B, M + 1);
  T total = 0;
  for (int i = 0; i < B; ++i) {
    const T mx = s.row(i).maxCoeff();
    T z = std::exp(s(i, 0) - mx);
    (*coef)(i, 0) = z;
    for (int j = 0; j < M; ++j) {
      const T e = static_cast<T>(weights[static_cast<std::size_t>(i) * M + j]) * std::exp(s(i, 1 + j) - mx);
      (*coef)(i, 1 + j) = e;
      z += e;
    }
    coef->row(i) /= z;
    total += -s(i, 0) + mx + std::log(z);
  }
  out.node()->value[0] = total / static_cast<T>(B);

  if (out.requires_grad()) {
    Node<T>*pq = queries.node(), *pp = positives.node(), *pn = negatives.node(), *po = out.node();
    po->backward_fn = [=] {
      const T g = po->grad[0] / static_cast<T>(B);
      // dL/ds: positive -1 + a0, negatives a_j
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ds = *coef * g;
      ds.col(0).array() -= g;
      ConstMatrixMap<T> Q(pq->value.data(), B, E), P(pp->value.data(), B, E), Nm(pn->value.data(), M, E);
      if (pq->requires_grad) {
        pq->ensure_grad();
        MatrixMap<T> dq(pq->grad.data(), B, E);
        dq.noalias() += ds.rightCols(M) * Nm;
        dq += ds.col(0).asDiagonal() * P;
      }
      if (pp->requires_grad) {
        pp->ensure_grad();
        MatrixMap<T>(pp->grad.data(), B, E) += ds.col(0).asDiagonal() * Q;
      }
      if (pn->requires_grad) {
        pn->ensure_grad();
        MatrixMap<T>(pn->grad.data(), M, E).noalias() += ds.rightCols(M).transpose() * Q;
      }
    };
  }
  return out;
}

/// Mean binary cross-entropy on logits [P,1] clamped to +-kLogitClamp.
template <typename T>
Tensor<T> mask_bce_logits(const Tensor<T>& logits, const std::vector<std::uint8_t>& labels) {
  if (logits.size() != labels.size()) throw InvalidArgument("mask_bce_logits: label count mismatch");
  auto out = make_result<T>({1}, {logits});
  const auto& z = logits.node()->value;
  const T c = static_cast<T>(kLogitClamp);
  auto softplus = [](T v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); };
  T total = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const T zc = std::clamp(z[i], -c, c);
    total += labels[i] ? softplus(-zc) : softplus(zc);
  }
  const T inv = T(1) / static_cast<T>(z.size());
  out.node()->value[0] = total * inv;
  if (out.requires_grad()) {
    Node<T>*pz = logits.node(), *po = out.node();
    po->backward_fn = [=] {
      pz->ensure_grad();
      const T g = po->grad[0] * inv;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const T v = pz->value[i];
        if (v <= -c || v >= c) continue;
        const T prob = T(1) / (T(1) + std::exp(-v));
        pz->grad[i] += g * (prob - (labels[i] ? T(1) : T(0)));
      }
    };
  }
  return out;
}

/// Consistency loss over embeddings [N,E] of the given normalized points.
/// Pairs with coincident embeddings contribute no gradient.
template <typename T>
Tensor<T> consistency_loss(const Tensor<T>& embeddings, const std::vector<Eigen::Vector3d>& points, double lambda,
                           double m) {
  const int N = embeddings.dim(0), E = embeddings.dim(1);
  if (static_cast<int>(points.size()) != N) throw InvalidArgument("consistency_loss: point count mismatch");
  if (N < 2) throw InvalidArgument("consistency_loss: needs at least two points");
  auto out = make_result<T>({1}, {embeddings});
  const auto& ev = embeddings.node()->value;
  const T norm = T(2) / (static_cast<T>(N) * static_cast<T>(N - 1));
  // per pair: w * (dc - dE) and dE, reused by backward
  auto cache = std::make_shared<std::vector<std::pair<T, T>>>();
  cache->reserve(static_cast<std::size_t>(N) * (N - 1) / 2);
  T total = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double dc = (points[i] - points[j]).norm();
      const T w = static_cast<T>(std::max(m, std::exp(-lambda * dc)));
      T de2 = 0;
      for (int k = 0; k < E; ++k) {
        const T d = ev[i * E + k] - ev[j * E + k];
        de2 += d * d;
      }
      const T de = std::sqrt(de2);
      const T r = static_cast<T>(dc) - de;
      total += w * r * r;
      cache->push_back({w * r, de});
    }
  }
  out.node()->value[0] = norm * total;
  if (out.requires_grad()) {
    Node<T>*pe = embeddings.node(), *po = out.node();
    po->backward_fn = [=] {
      pe->ensure_grad();
      const T g = po->grad[0] * norm;
      std::size_t k = 0;
      for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j, ++k) {
          const auto [wr, de] = (*cache)[k];
          if (de == T(0)) continue;
          // d/dE_i of w (dc - dE)^2 = -2 w (dc - dE) (E_i - E_j) / dE
          const T s = -T(2) * g * wr / de;
          for (int c = 0; c < E; ++c) {
            const T d = s * (pe->value[i * E + c] - pe->value[j * E + c]);
            pe->grad[i * E + c] += d;
            pe->grad[j * E + c] -= d;
          }
        }
      }
    };
  }
  return out;
}

}  // namespace nn
}  // namespace dcpose
