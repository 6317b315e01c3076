#include "jeit/numerics.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "jeit/errors.hpp"

namespace jeit {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + t.shape_str());
  }
}

void check_affine_shapes(const Tensor& x, const Tensor& W, const Tensor& b) {
  require_rank(W, 2, "affine weight");
  require_rank(b, 1, "affine bias");
  const bool ok_x = (x.rank() == 1 || x.rank() == 2) && x.cols() == W.cols();
  if (!ok_x || b.size() != W.rows()) {
    throw DimensionError("affine: incompatible shapes x=" + x.shape_str() +
                         " W=" + W.shape_str() + " b=" + b.shape_str());
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double log_add_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double log_softmax(std::span<const double> in, std::span<double> out) {
  if (in.empty()) throw DomainError("log_softmax of an empty vector");
  if (out.size() != in.size()) throw DimensionError("log_softmax: output size mismatch");
  const double mx = *std::max_element(in.begin(), in.end());
  double sum = 0.0;
  for (double v : in) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - lse;
  return lse;
}

Tensor log_softmax(const Tensor& v) {
  require_rank(v, 1, "log_softmax");
  Tensor out(v.shape());
  log_softmax(v.data(), out.data());
  return out;
}

void matmul_nt(const double* A, std::size_t n, std::size_t k, const double* B,
               std::size_t m, double* C, bool accumulate) {
  ConstMap a(A, n, k);
  ConstMap b(B, m, k);
  MutMap c(C, n, m);
  if (accumulate) {
    c.noalias() += a * b.transpose();
  } else {
    c.noalias() = a * b.transpose();
  }
}

void matmul_nn(const double* A, std::size_t n, std::size_t k, const double* B,
               std::size_t m, double* C, bool accumulate) {
  ConstMap a(A, n, k);
  ConstMap b(B, k, m);
  MutMap c(C, n, m);
  if (accumulate) {
    c.noalias() += a * b;
  } else {
    c.noalias() = a * b;
  }
}

void matmul_tn(const double* A, std::size_t k, std::size_t n, const double* B,
               std::size_t m, double* C, bool accumulate) {
  ConstMap a(A, k, n);
  ConstMap b(B, k, m);
  MutMap c(C, n, m);
  if (accumulate) {
    c.noalias() += a.transpose() * b;
  } else {
    c.noalias() = a.transpose() * b;
  }
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  check_affine_shapes(x, W, b);
  const std::size_t n = x.rows();
  const std::size_t m = W.rows();
  Tensor out = x.rank() == 1 ? Tensor({m}) : Tensor({n, m});
  matmul_nt(x.ptr(), n, W.cols(), W.ptr(), m, out.ptr(), false);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < m; ++j) row[j] += b[j];
  }
  return out;
}

Var affine(Tape& tape, Var x, Var W, Var b) {
  Tensor out = affine(tape.value(x), tape.value(W), tape.value(b));
  return tape.record("affine", {x, W, b}, std::move(out), [](Tape::Context& c) {
    const Tensor& X = c.input(0);
    const Tensor& Wt = c.input(1);
    const Tensor& g = c.output_grad();
    const std::size_t n = X.rows();
    const std::size_t k = Wt.cols();
    const std::size_t m = Wt.rows();
    if (Tensor* gx = c.grad(0)) matmul_nn(g.ptr(), n, m, Wt.ptr(), k, gx->ptr(), true);
    if (Tensor* gw = c.grad(1)) matmul_tn(g.ptr(), n, m, X.ptr(), k, gw->ptr(), true);
    if (Tensor* gb = c.grad(2)) {
      for (std::size_t r = 0; r < n; ++r) {
        auto row = g.row(r);
        for (std::size_t j = 0; j < m; ++j) (*gb)[j] += row[j];
      }
    }
  });
}

Var tanh(Tape& tape, Var x) {
  Tensor out(tape.value(x).shape());
  const Tensor& in = tape.value(x);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
  return tape.record("tanh", {x}, std::move(out), [](Tape::Context& c) {
    Tensor* gx = c.grad(0);
    if (!gx) return;
    const Tensor& y = c.output();
    const Tensor& g = c.output_grad();
    for (std::size_t i = 0; i < y.size(); ++i) (*gx)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var add(Tape& tape, Var a, Var b) {
  Tensor out = tape.value(a);
  out += tape.value(b);
  return tape.record("add", {a, b}, std::move(out), [](Tape::Context& c) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (Tensor* g = c.grad(i)) *g += c.output_grad();
    }
  });
}

Var concat_cols(Tape& tape, Var a, Var b) {
  const Tensor& A = tape.value(a);
  const Tensor& B = tape.value(b);
  require_rank(A, 2, "concat_cols");
  require_rank(B, 2, "concat_cols");
  if (A.rows() != B.rows()) {
    throw DimensionError("concat_cols: row mismatch " + A.shape_str() + " vs " +
                         B.shape_str());
  }
  const std::size_t n = A.rows();
  const std::size_t ca = A.cols();
  const std::size_t cb = B.cols();
  Tensor out({n, ca + cb});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(A.row(r).begin(), ca, out.row(r).begin());
    std::copy_n(B.row(r).begin(), cb, out.row(r).begin() + ca);
  }
  return tape.record("concat_cols", {a, b}, std::move(out),
                     [ca, cb](Tape::Context& c) {
                       const Tensor& g = c.output_grad();
                       Tensor* ga = c.grad(0);
                       Tensor* gb = c.grad(1);
                       for (std::size_t r = 0; r < g.rows(); ++r) {
                         auto row = g.row(r);
                         if (ga) {
                           for (std::size_t j = 0; j < ca; ++j) ga->at(r, j) += row[j];
                         }
                         if (gb) {
                           for (std::size_t j = 0; j < cb; ++j) gb->at(r, j) += row[ca + j];
                         }
                       }
                     });
}

Var gather_rows(Tape& tape, Var table, std::vector<std::size_t> ids) {
  const Tensor& T = tape.value(table);
  require_rank(T, 2, "gather_rows");
  const std::size_t cols = T.cols();
  Tensor out({ids.size(), cols});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= T.rows()) {
      throw ContractError("gather_rows: row " + std::to_string(ids[r]) +
                          " out of range for table " + T.shape_str());
    }
    std::copy_n(T.row(ids[r]).begin(), cols, out.row(r).begin());
  }
  return tape.record("gather_rows", {table}, std::move(out),
                     [ids = std::move(ids)](Tape::Context& c) {
                       Tensor* gt = c.grad(0);
                       if (!gt) return;
                       const Tensor& g = c.output_grad();
                       for (std::size_t r = 0; r < ids.size(); ++r) {
                         auto src = g.row(r);
                         auto dst = gt->row(ids[r]);
                         for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                       }
                     });
}

Var sum_squares(Tape& tape, Var x) {
  double s = 0.0;
  for (double v : tape.value(x).data()) s += v * v;
  return tape.record("sum_squares", {x}, Tensor::scalar(s), [](Tape::Context& c) {
    Tensor* gx = c.grad(0);
    if (!gx) return;
    const double g = c.output_grad().item();
    const Tensor& X = c.input(0);
    for (std::size_t i = 0; i < X.size(); ++i) (*gx)[i] += 2.0 * g * X[i];
  });
}

Var element(Tape& tape, Var x, std::size_t i) {
  const Tensor& X = tape.value(x);
  if (i >= X.size()) {
    throw DimensionError("element " + std::to_string(i) + " out of range for " +
                         X.shape_str());
  }
  return tape.record("element", {x}, Tensor::scalar(X[i]), [i](Tape::Context& c) {
    if (Tensor* gx = c.grad(0)) (*gx)[i] += c.output_grad().item();
  });
}

Var linear_combination(Tape& tape, std::span<const Var> terms,
                       std::span<const double> weights) {
  if (terms.size() != weights.size()) {
    throw DimensionError("linear_combination: " + std::to_string(terms.size()) +
                         " terms but " + std::to_string(weights.size()) + " weights");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) s += weights[i] * tape.value(terms[i]).item();
  std::vector<double> w(weights.begin(), weights.end());
  return tape.record("linear_combination", std::vector<Var>(terms.begin(), terms.end()),
                     Tensor::scalar(s), [w = std::move(w)](Tape::Context& c) {
                       const double g = c.output_grad().item();
                       for (std::size_t i = 0; i < w.size(); ++i) {
                         if (Tensor* gi = c.grad(i)) (*gi)[0] += w[i] * g;
                       }
                     });
}

GradCheckResult grad_check(const TapeFunction& f, const ParamList& params, double eps,
                           std::uint64_t seed, std::size_t min_coordinates) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw DomainError("grad_check: eps must lie in [1e-7, 1e-3]");
  }

  auto evaluate = [&](const ParamList& ps, bool with_grad, std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(ps.size());
    for (const auto& [name, t] : ps) {
      vars.push_back(with_grad ? tape.parameter(t) : tape.constant(t));
    }
    Var loss = f(tape, vars);
    const double value = tape.value(loss).item();
    if (!std::isfinite(value)) throw NumericError("grad_check: non-finite loss");
    if (with_grad) {
      tape.backward(loss);
      for (Var v : vars) grads->push_back(tape.grad(v));
    }
    return value;
  };

  std::vector<Tensor> analytic;
  evaluate(params, true, &analytic);

  // Deterministic coordinate sample: one per tensor first, then uniform.
  std::size_t total = 0;
  for (const auto& p : params) total += p.second.size();
  std::set<std::pair<std::size_t, std::size_t>> coords;
  std::mt19937_64 rng(seed);
  if (total <= min_coordinates) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t i = 0; i < params[p].second.size(); ++i) coords.emplace(p, i);
    }
  } else {
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (params[p].second.size()) coords.emplace(p, rng() % params[p].second.size());
    }
    while (coords.size() < min_coordinates) {
      std::size_t flat = rng() % total;
      std::size_t p = 0;
      while (flat >= params[p].second.size()) flat -= params[p].second.size(), ++p;
      coords.emplace(p, flat);
    }
  }

  GradCheckResult result;
  ParamList work = params;
  for (auto [p, i] : coords) {
    const double orig = work[p].second[i];
    work[p].second[i] = orig + eps;
    const double up = evaluate(work, false, nullptr);
    work[p].second[i] = orig - eps;
    const double down = evaluate(work, false, nullptr);
    work[p].second[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double exact = analytic[p][i];
    const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
    const double rel = std::abs(exact - numeric) / denom;
    ++result.coordinates;
    if (rel > result.max_rel_error || result.worst.empty()) {
      result.max_rel_error = std::max(result.max_rel_error, rel);
      if (rel >= result.max_rel_error) {
        result.worst = params[p].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace jeit
