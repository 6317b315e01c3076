#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jeit/tape.hpp"
#include "jeit/tensor.hpp"

namespace jeit {

// ---------------------------------------------------------------------------
// Scalar and vector math. Everything in log space goes through these.

// Logistic function, stable for |x| up to ~700.
double sigmoid(double x);
// log(sigmoid(x)) without cancellation.
double log_sigmoid(double x);
double log_add_exp(double a, double b);

// Max-shifted log-softmax of a non-empty rank-1 tensor.
Tensor log_softmax(const Tensor& v);
// Span form; returns the log normalizer. `out` may alias `in`.
double log_softmax(std::span<const double> in, std::span<double> out);

// W·x + b for rank-1 x, or x·Wᵀ + b row-wise for rank-2 x (n×k).
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

// ---------------------------------------------------------------------------
// Row-major GEMM kernels over raw buffers: C (+)= op(A)·op(B).

// C[n×m] (+)= A[n×k] · B[m×k]ᵀ
void matmul_nt(const double* A, std::size_t n, std::size_t k, const double* B,
               std::size_t m, double* C, bool accumulate);
// C[n×m] (+)= A[n×k] · B[k×m]
void matmul_nn(const double* A, std::size_t n, std::size_t k, const double* B,
               std::size_t m, double* C, bool accumulate);
// C[n×m] (+)= A[k×n]ᵀ · B[k×m]
void matmul_tn(const double* A, std::size_t k, std::size_t n, const double* B,
               std::size_t m, double* C, bool accumulate);

// ---------------------------------------------------------------------------
// Recorded operations.

Var affine(Tape& tape, Var x, Var W, Var b);
Var tanh(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
// [a | b] for rank-2 a, b with equal row counts.
Var concat_cols(Tape& tape, Var a, Var b);
// Rows of `table` selected by `ids`, stacked into a |ids|×cols matrix.
Var gather_rows(Tape& tape, Var table, std::vector<std::size_t> ids);
Var sum_squares(Tape& tape, Var x);
// Scalar element i of x.
Var element(Tape& tape, Var x, std::size_t i);
// Σ weights[i]·terms[i] over scalar terms.
Var linear_combination(Tape& tape, std::span<const Var> terms,
                       std::span<const double> weights);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

using ParamList = std::vector<std::pair<std::string, Tensor>>;
// Builds a scalar on the tape from parameter variables bound in ParamList order.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "name[index]" of the worst coordinate
};

// Compares tape gradients with central differences on a deterministic sample
// of at least `min_coordinates` coordinates (all when fewer exist). Relative
// error uses max(|analytic|, |numeric|, 1e-8) as the denominator.
GradCheckResult grad_check(const TapeFunction& f, const ParamList& params, double eps,
                           std::uint64_t seed = 0, std::size_t min_coordinates = 64);

}  // namespace jeit
