#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "dcpose/nn/tensor.hpp"

namespace dcpose::nn {

template <typename T>
using MatrixMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace detail {

inline void expect_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) throw InvalidArgument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(s));
}

}  // namespace detail

/// [n,k] x [k,m] -> [n,m]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::expect_rank(a.shape(), 2, "matmul");
  detail::expect_rank(b.shape(), 2, "matmul");
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) throw InvalidArgument("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  auto out = make_result<T>({n, m}, {a, b});
  MatrixMap<T>(out.node()->value.data(), n, m).noalias() =
      ConstMatrixMap<T>(a.node()->value.data(), n, k) * ConstMatrixMap<T>(b.node()->value.data(), k, m);
  if (out.requires_grad()) {
    Node<T>*pa = a.node(), *pb = b.node(), *po = out.node();
    po->backward_fn = [pa, pb, po, n, k, m] {
      ConstMatrixMap<T> g(po->grad.data(), n, m);
      if (pa->requires_grad) {
        pa->ensure_grad();
        MatrixMap<T>(pa->grad.data(), n, k).noalias() += g * ConstMatrixMap<T>(pb->value.data(), k, m).transpose();
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        MatrixMap<T>(pb->grad.data(), k, m).noalias() += ConstMatrixMap<T>(pa->value.data(), n, k).transpose() * g;
      }
    };
  }
  return out;
}

/// Adds b[m] to every row of x[n,m].
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b) {
  detail::expect_rank(x.shape(), 2, "add_bias");
  const int n = x.dim(0), m = x.dim(1);
  if (static_cast<int>(b.size()) != m) throw InvalidArgument("add_bias: bias size mismatch");
  auto out = make_result<T>(x.shape(), {x, b});
  auto& y = out.node()->value;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) y[i * m + j] = x.node()->value[i * m + j] + b.node()->value[j];
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *pb = b.node(), *po = out.node();
    po->backward_fn = [px, pb, po, n, m] {
      if (px->requires_grad) {
        px->ensure_grad();
        for (std::size_t i = 0; i < po->grad.size(); ++i) px->grad[i] += po->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < m; ++j) pb->grad[j] += po->grad[i * m + j];
        }
      }
    };
  }
  return out;
}

namespace detail {

/// Shared plumbing for elementwise maps y = f(x) with dy/dx = df(x, y).
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, F f, DF df) {
  auto out = make_result<T>(x.shape(), {x});
  const auto& xv = x.node()->value;
  auto& yv = out.node()->value;
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = f(xv[i]);
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [px, po, df] {
      px->ensure_grad();
      for (std::size_t i = 0; i < po->grad.size(); ++i) px->grad[i] += po->grad[i] * df(px->value[i], po->value[i]);
    };
  }
  return out;
}

}  // namespace detail

/// sin(omega * x)
template <typename T>
Tensor<T> sine(const Tensor<T>& x, T omega) {
  return detail::unary(
      x, [omega](T v) { return std::sin(omega * v); }, [omega](T v, T) { return omega * std::cos(omega * v); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

/// Rows of x[n,d] scaled to unit length.
template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps = T(1e-12)) {
  detail::expect_rank(x.shape(), 2, "l2_normalize_rows");
  const int n = x.dim(0), d = x.dim(1);
  auto out = make_result<T>(x.shape(), {x});
  std::vector<T> norms(n);
  const auto& xv = x.node()->value;
  auto& yv = out.node()->value;
  for (int i = 0; i < n; ++i) {
    T s = 0;
    for (int j = 0; j < d; ++j) s += xv[i * d + j] * xv[i * d + j];
    norms[i] = std::max(std::sqrt(s), eps);
    for (int j = 0; j < d; ++j) yv[i * d + j] = xv[i * d + j] / norms[i];
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [px, po, n, d, norms = std::move(norms)] {
      px->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const T* y = &po->value[i * d];
        const T* g = &po->grad[i * d];
        T yg = 0;
        for (int j = 0; j < d; ++j) yg += y[j] * g[j];
        for (int j = 0; j < d; ++j) px->grad[i * d + j] += (g[j] - y[j] * yg) / norms[i];
      }
    };
  }
  return out;
}

/// 2D convolution, stride 1, zero padding k/2. x[N,C,H,W], w[O,C,k,k], b[O] -> [N,O,H,W].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  detail::expect_rank(x.shape(), 4, "conv2d");
  detail::expect_rank(w.shape(), 4, "conv2d");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int O = w.dim(0), k = w.dim(2);
  if (w.dim(1) != C || w.dim(3) != k || k % 2 == 0) {
    throw InvalidArgument("conv2d: kernel " + shape_string(w.shape()) + " incompatible with input " + shape_string(x.shape()));
  }
  if (static_cast<int>(b.size()) != O) throw InvalidArgument("conv2d: bias size mismatch");
  const int pad = k / 2, HW = H * W, CKK = C * k * k;
  auto out = make_result<T>({N, O, H, W}, {x, w, b});

  // im2col buffers are kept for the backward pass
  auto cols = std::make_shared<Buffer<T>>(static_cast<std::size_t>(N) * CKK * HW, T(0));
  for (int n = 0; n < N; ++n) {
    const T* xin = &x.node()->value[static_cast<std::size_t>(n) * C * HW];
    T* col = cols->data() + static_cast<std::size_t>(n) * CKK * HW;
    for (int c = 0; c < C; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T* row = col + ((c * k + ky) * k + kx) * HW;
          for (int y = 0; y < H; ++y) {
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= H) continue;
            for (int xx = 0; xx < W; ++xx) {
              const int sx = xx + kx - pad;
              if (sx >= 0 && sx < W) row[y * W + xx] = xin[c * HW + sy * W + sx];
            }
          }
        }
      }
    }
    MatrixMap<T> yout(&out.node()->value[static_cast<std::size_t>(n) * O * HW], O, HW);
    yout.noalias() = ConstMatrixMap<T>(w.node()->value.data(), O, CKK) * ConstMatrixMap<T>(col, CKK, HW);
    for (int o = 0; o < O; ++o) yout.row(o).array() += b.node()->value[o];
  }

  if (out.requires_grad()) {
    Node<T>*px = x.node(), *pw = w.node(), *pb = b.node(), *po = out.node();
    po->backward_fn = [=] {
      Buffer<T> dcol(static_cast<std::size_t>(CKK) * HW);
      for (int n = 0; n < N; ++n) {
        ConstMatrixMap<T> g(&po->grad[static_cast<std::size_t>(n) * O * HW], O, HW);
        const T* col = cols->data() + static_cast<std::size_t>(n) * CKK * HW;
        if (pw->requires_grad) {
          pw->ensure_grad();
          MatrixMap<T>(pw->grad.data(), O, CKK).noalias() += g * ConstMatrixMap<T>(col, CKK, HW).transpose();
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (int o = 0; o < O; ++o) pb->grad[o] += g.row(o).sum();
        }
        if (px->requires_grad) {
          px->ensure_grad();
          MatrixMap<T>(dcol.data(), CKK, HW).noalias() = ConstMatrixMap<T>(pw->value.data(), O, CKK).transpose() * g;
          T* gx = &px->grad[static_cast<std::size_t>(n) * C * HW];
          for (int c = 0; c < C; ++c) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const T* row = dcol.data() + ((c * k + ky) * k + kx) * HW;
                for (int y = 0; y < H; ++y) {
                  const int sy = y + ky - pad;
                  if (sy < 0 || sy >= H) continue;
                  for (int xx = 0; xx < W; ++xx) {
                    const int sx = xx + kx - pad;
                    if (sx >= 0 && sx < W) gx[c * HW + sy * W + sx] += row[y * W + xx];
                  }
                }
              }
            }
          }
        }
      }
    };
  }
  return out;
}

/// 2x2 average pooling; H and W must be even.
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
  detail::expect_rank(x.shape(), 4, "avg_pool2");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 || W % 2) throw InvalidArgument("avg_pool2: odd spatial size " + shape_string(x.shape()));
  const int h = H / 2, w = W / 2;
  auto out = make_result<T>({N, C, h, w}, {x});
  const auto& xv = x.node()->value;
  auto& yv = out.node()->value;
  for (int p = 0; p < N * C; ++p) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const T* s = &xv[static_cast<std::size_t>(p) * H * W + 2 * y * W + 2 * xx];
        yv[static_cast<std::size_t>(p) * h * w + y * w + xx] = T(0.25) * (s[0] + s[1] + s[W] + s[W + 1]);
      }
    }
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [=] {
      px->ensure_grad();
      for (int p = 0; p < N * C; ++p) {
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            const T g = T(0.25) * po->grad[static_cast<std::size_t>(p) * h * w + y * w + xx];
            T* s = &px->grad[static_cast<std::size_t>(p) * H * W + 2 * y * W + 2 * xx];
            s[0] += g;
            s[1] += g;
            s[W] += g;
            s[W + 1] += g;
          }
        }
      }
    };
  }
  return out;
}

/// Nearest-neighbour 2x upsampling.
template <typename T>
Tensor<T> upsample2(const Tensor<T>& x) {
  detail::expect_rank(x.shape(), 4, "upsample2");
  const int N = x.dim(0), C = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int H = 2 * h, W = 2 * w;
  auto out = make_result<T>({N, C, H, W}, {x});
  const auto& xv = x.node()->value;
  auto& yv = out.node()->value;
  for (int p = 0; p < N * C; ++p) {
    for (int y = 0; y < H; ++y) {
      for (int xx = 0; xx < W; ++xx) {
        yv[static_cast<std::size_t>(p) * H * W + y * W + xx] = xv[static_cast<std::size_t>(p) * h * w + (y / 2) * w + xx / 2];
      }
    }
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [=] {
      px->ensure_grad();
      for (int p = 0; p < N * C; ++p) {
        for (int y = 0; y < H; ++y) {
          for (int xx = 0; xx < W; ++xx) {
            px->grad[static_cast<std::size_t>(p) * h * w + (y / 2) * w + xx / 2] +=
                po->grad[static_cast<std::size_t>(p) * H * W + y * W + xx];
          }
        }
      }
    };
  }
  return out;
}

/// Channel concatenation of [N,Ca,H,W] and [N,Cb,H,W].
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::expect_rank(a.shape(), 4, "concat_channels");
  detail::expect_rank(b.shape(), 4, "concat_channels");
  const int N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
  if (b.dim(0) != N || b.dim(2) != H || b.dim(3) != W) throw InvalidArgument("concat_channels: shape mismatch");
  const std::size_t sa = static_cast<std::size_t>(Ca) * H * W, sb = static_cast<std::size_t>(Cb) * H * W;
  auto out = make_result<T>({N, Ca + Cb, H, W}, {a, b});
  auto& yv = out.node()->value;
  for (int n = 0; n < N; ++n) {
    std::copy_n(&a.node()->value[n * sa], sa, &yv[n * (sa + sb)]);
    std::copy_n(&b.node()->value[n * sb], sb, &yv[n * (sa + sb) + sa]);
  }
  if (out.requires_grad()) {
    Node<T>*pa = a.node(), *pb = b.node(), *po = out.node();
    po->backward_fn = [=] {
      for (int n = 0; n < N; ++n) {
        if (pa->requires_grad) {
          pa->ensure_grad();
          for (std::size_t i = 0; i < sa; ++i) pa->grad[n * sa + i] += po->grad[n * (sa + sb) + i];
        }
        if (pb->requires_grad) {
          pb->ensure_grad();
          for (std::size_t i = 0; i < sb; ++i) pb->grad[n * sb + i] += po->grad[n * (sa + sb) + sa + i];
        }
      }
    };
  }
  return out;
}

/// [N,C,H,W] -> [N*H*W, C]; row index is (n*H + y)*W + x.
template <typename T>
Tensor<T> to_rows(const Tensor<T>& x) {
  detail::expect_rank(x.shape(), 4, "to_rows");
  const int N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  auto out = make_result<T>({N * HW, C}, {x});
  const auto& xv = x.node()->value;
  auto& yv = out.node()->value;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int p = 0; p < HW; ++p) yv[(static_cast<std::size_t>(n) * HW + p) * C + c] = xv[(static_cast<std::size_t>(n) * C + c) * HW + p];
    }
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [=] {
      px->ensure_grad();
      for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
          for (int p = 0; p < HW; ++p) {
            px->grad[(static_cast<std::size_t>(n) * C + c) * HW + p] += po->grad[(static_cast<std::size_t>(n) * HW + p) * C + c];
          }
        }
      }
    };
  }
  return out;
}

/// Columns [begin, end) of x[n,m].
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, int begin, int end) {
  detail::expect_rank(x.shape(), 2, "slice_cols");
  const int n = x.dim(0), m = x.dim(1), w = end - begin;
  if (begin < 0 || end > m || w <= 0) throw InvalidArgument("slice_cols: bad column range");
  auto out = make_result<T>({n, w}, {x});
  for (int i = 0; i < n; ++i) {
    std::copy_n(&x.node()->value[static_cast<std::size_t>(i) * m + begin], w, &out.node()->value[static_cast<std::size_t>(i) * w]);
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [=] {
      px->ensure_grad();
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < w; ++j) px->grad[static_cast<std::size_t>(i) * m + begin + j] += po->grad[static_cast<std::size_t>(i) * w + j];
      }
    };
  }
  return out;
}

/// Rows idx of x[n,m]; repeated indices accumulate gradient.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<int>& idx) {
  detail::expect_rank(x.shape(), 2, "gather_rows");
  const int n = x.dim(0), m = x.dim(1), r = static_cast<int>(idx.size());
  for (int i : idx) {
    if (i < 0 || i >= n) throw InvalidArgument("gather_rows: index out of range");
  }
  auto out = make_result<T>({r, m}, {x});
  for (int i = 0; i < r; ++i) {
    std::copy_n(&x.node()->value[static_cast<std::size_t>(idx[i]) * m], m, &out.node()->value[static_cast<std::size_t>(i) * m]);
  }
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [=] {
      px->ensure_grad();
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < m; ++j) px->grad[static_cast<std::size_t>(idx[i]) * m + j] += po->grad[static_cast<std::size_t>(i) * m + j];
      }
    };
  }
  return out;
}

/// Row concatenation of [na,m] and [nb,m].
template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  detail::expect_rank(a.shape(), 2, "concat_rows");
  detail::expect_rank(b.shape(), 2, "concat_rows");
  if (a.dim(1) != b.dim(1)) throw InvalidArgument("concat_rows: column mismatch");
  const std::size_t sa = a.size();
  auto out = make_result<T>({a.dim(0) + b.dim(0), a.dim(1)}, {a, b});
  std::copy(a.node()->value.begin(), a.node()->value.end(), out.node()->value.begin());
  std::copy(b.node()->value.begin(), b.node()->value.end(), out.node()->value.begin() + sa);
  if (out.requires_grad()) {
    Node<T>*pa = a.node(), *pb = b.node(), *po = out.node();
    po->backward_fn = [=] {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < sa; ++i) pa->grad[i] += po->grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < pb->value.size(); ++i) pb->grad[i] += po->grad[sa + i];
      }
    };
  }
  return out;
}

/// Elementwise a + b for equal shapes.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw InvalidArgument("add: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  auto out = make_result<T>(a.shape(), {a, b});
  for (std::size_t i = 0; i < a.size(); ++i) out.node()->value[i] = a.node()->value[i] + b.node()->value[i];
  if (out.requires_grad()) {
    Node<T>*pa = a.node(), *pb = b.node(), *po = out.node();
    po->backward_fn = [=] {
      for (Node<T>* p : {pa, pb}) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (std::size_t i = 0; i < po->grad.size(); ++i) p->grad[i] += po->grad[i];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return detail::unary(a, [s](T v) { return s * v; }, [s](T, T) { return s; });
}

/// Sum of all entries of x weighted by a constant array of the same size.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, const std::vector<T>& weights) {
  if (weights.size() != x.size()) throw InvalidArgument("weighted_sum: size mismatch");
  auto out = make_result<T>({1}, {x});
  T s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x.node()->value[i];
  out.node()->value[0] = s;
  if (out.requires_grad()) {
    Node<T>*px = x.node(), *po = out.node();
    po->backward_fn = [=] {
      px->ensure_grad();
      for (std::size_t i = 0; i < weights.size(); ++i) px->grad[i] += po->grad[0] * weights[i];
    };
  }
  return out;
}

/// Arithmetic mean of scalar tensors, summed in list order.
template <typename T>
Tensor<T> mean_of(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw InvalidArgument("mean_of: empty list");
  auto n = std::make_shared<Node<T>>();
  n->shape = {1};
  T s = 0;
  for (const auto& x : xs) {
    s += x.item();
    n->parents.push_back(x.shared());
    n->requires_grad = n->requires_grad || x.requires_grad();
  }
  const T inv = T(1) / static_cast<T>(xs.size());
  n->value = {s * inv};
  Tensor<T> out(n);
  if (out.requires_grad()) {
    Node<T>* po = n.get();
    po->backward_fn = [po, inv] {
      for (auto& p : po->parents) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        p->grad[0] += po->grad[0] * inv;
      }
    };
  }
  return out;
}

}  // namespace dcpose::nn
