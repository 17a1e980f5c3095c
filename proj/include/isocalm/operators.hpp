#pragma once

#include <string>
#include <variant>

#include "isocalm/linalg.hpp"

namespace isocalm {

namespace op {
struct Dense {
  Matrix a;
};
struct Identity {
  Index dim;
};
/// Forward differences (x_1 - x_2, ..., x_{n-1} - x_n).
struct Grad1d {
  Index n;
};
/// 2-D forward differences on an n1 x n2 grid stored row-major (index i*n2+j).
/// Output stacks all vertical differences (x_{i+1,j} - x_{i,j}, zero at
/// i = n1-1) row-major over (i,j), then all horizontal ones (x_{i,j+1} -
/// x_{i,j}, zero at j = n2-1).
struct Grad2d {
  Index n1, n2;
};
}  // namespace op

/// Linear map X -> Y given by kind; `dense()` materializes it.
class LinearOp {
 public:
  using Kind = std::variant<op::Dense, op::Identity, op::Grad1d, op::Grad2d>;

  LinearOp() : kind_(op::Identity{0}) {}
  explicit LinearOp(Kind k) : kind_(std::move(k)) { validate(); }

  static LinearOp dense(Matrix a) { return LinearOp(op::Dense{std::move(a)}); }
  static LinearOp identity(Index n) { return LinearOp(op::Identity{n}); }
  static LinearOp grad1d(Index n) { return LinearOp(op::Grad1d{n}); }
  static LinearOp grad2d(Index n1, Index n2) { return LinearOp(op::Grad2d{n1, n2}); }

  const Kind& kind() const { return kind_; }
  bool is_identity() const { return std::holds_alternative<op::Identity>(kind_); }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, op::Dense>) return "dense";
          if constexpr (std::is_same_v<T, op::Identity>) return "identity";
          if constexpr (std::is_same_v<T, op::Grad1d>) return "grad1d";
          if constexpr (std::is_same_v<T, op::Grad2d>) return "grad2d";
        },
        kind_);
  }

  Index rows() const {
    return std::visit(
        [](const auto& k) -> Index {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, op::Dense>) return k.a.rows();
          if constexpr (std::is_same_v<T, op::Identity>) return k.dim;
          if constexpr (std::is_same_v<T, op::Grad1d>) return k.n - 1;
          if constexpr (std::is_same_v<T, op::Grad2d>) return 2 * k.n1 * k.n2;
        },
        kind_);
  }

  Index cols() const {
    return std::visit(
        [](const auto& k) -> Index {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, op::Dense>) return k.a.cols();
          if constexpr (std::is_same_v<T, op::Identity>) return k.dim;
          if constexpr (std::is_same_v<T, op::Grad1d>) return k.n;
          if constexpr (std::is_same_v<T, op::Grad2d>) return k.n1 * k.n2;
        },
        kind_);
  }

  Matrix materialize() const {
    return std::visit(
        [](const auto& k) -> Matrix {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, op::Dense>) {
            return k.a;
          } else if constexpr (std::is_same_v<T, op::Identity>) {
            return Matrix::Identity(k.dim, k.dim);
          } else if constexpr (std::is_same_v<T, op::Grad1d>) {
            Matrix d = Matrix::Zero(k.n - 1, k.n);
            for (Index i = 0; i + 1 < k.n; ++i) {
              d(i, i) = 1.0;
              d(i, i + 1) = -1.0;
            }
            return d;
          } else {
            const Index n1 = k.n1, n2 = k.n2, cells = n1 * n2;
            Matrix g = Matrix::Zero(2 * cells, cells);
            for (Index i = 0; i < n1; ++i)
              for (Index j = 0; j < n2; ++j) {
                const Index c = i * n2 + j;
                if (i + 1 < n1) {
                  g(c, (i + 1) * n2 + j) = 1.0;
                  g(c, c) = -1.0;
                }
                if (j + 1 < n2) {
                  g(cells + c, i * n2 + j + 1) = 1.0;
                  g(cells + c, c) = -1.0;
                }
              }
            return g;
          }
        },
        kind_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, op::Dense>) {
            require_finite(k.a, "dense");
          } else if constexpr (std::is_same_v<T, op::Identity>) {
            if (k.dim < 1) throw ValidationError("dim", "identity dimension must be >= 1");
          } else if constexpr (std::is_same_v<T, op::Grad1d>) {
            if (k.n < 2) throw ValidationError("n", "grad1d requires n >= 2");
          } else {
            if (k.n1 < 1 || k.n2 < 1) throw ValidationError("n1", "grad2d requires n1, n2 >= 1");
          }
        },
        kind_);
  }

  Kind kind_;
};

inline Matrix materialize(const LinearOp& op) { return op.materialize(); }

}  // namespace isocalm
