#pragma once

// Client objectives f_i, their smoothness constants, and the averaged
// objective f = (1/n) sum_i f_i.
//
//   logistic:      f_i(x) = (1/N_i) sum_j log(1 + exp(-y_j a_j^T x)) + lambda sum_k x_k^2/(1 + x_k^2)
//   least squares: f_i(x) = (1/N_i) sum_j (a_j^T x - b_j)^2

#include "ef21/core.hpp"
#include "ef21/data.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <optional>
#include <string>
#include <vector>

namespace ef21 {

enum class LossKind { LogisticNonconvex, LeastSquares };

inline std::string to_string(LossKind kind) {
  return kind == LossKind::LogisticNonconvex ? "logistic_nonconvex" : "least_squares";
}

constexpr double kDefaultLambda = 0.1;

namespace detail {

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// 1 / (1 + exp(z)), i.e. sigma(-z).
inline double sigmoid_neg(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

inline Matrix gram(const SparseMatrix& a) {
  const Eigen::SparseMatrix<double> g = a.transpose() * a;
  return Matrix(g);
}

inline double largest_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace detail

class ClientProblem {
 public:
  ClientProblem(LossKind kind, SparseMatrix features, Vector labels, double lambda = kDefaultLambda)
      : kind_(kind), lambda_(lambda), features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() < 1) throw ArgumentError("client needs at least one sample");
    if (labels_.size() != features_.rows()) throw ArgumentError("client labels and features disagree in length");
    if (lambda_ < 0.0) throw ArgumentError("lambda must be nonnegative");
    if (kind_ == LossKind::LogisticNonconvex) {
      for (double y : labels_) {
        if (y != 1.0 && y != -1.0) throw ArgumentError("logistic labels must be -1 or +1");
      }
    }
    features_.makeCompressed();
    smoothness_ = compute_smoothness();
  }

  LossKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  const SparseMatrix& features() const noexcept { return features_; }
  const Vector& labels() const noexcept { return labels_; }
  std::size_t samples() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }

  // L_i. Logistic: lambda_max(A^T A)/(4 N) + 2 lambda, since the loss Hessian
  // is bounded by A^T A / (4N) and |d^2/dx^2 x^2/(1+x^2)| <= 2. Least squares:
  // 2 lambda_max(A^T A)/N.
  double smoothness() const noexcept { return smoothness_; }

  double value(const Vector& x) const {
    double f = 0.0;
    evaluate(x, &f, nullptr);
    return f;
  }

  Vector gradient(const Vector& x) const {
    Vector g;
    evaluate(x, nullptr, &g);
    return g;
  }

  // Shares the product A x between the two; results are bitwise equal to
  // value() and gradient().
  std::pair<double, Vector> value_and_gradient(const Vector& x) const {
    std::pair<double, Vector> out;
    evaluate(x, &out.first, &out.second);
    return out;
  }

  // Minibatch gradient over a uniform `batch_size`-subset of samples drawn
  // without replacement, plus the full regularizer gradient. A full batch
  // returns gradient(x) exactly and draws nothing from the stream.
  Vector stochastic_gradient(const Vector& x, std::size_t batch_size, Rng& rng) const {
    check_dim(x);
    if (batch_size < 1 || batch_size > samples()) {
      throw ArgumentError("batch_size must satisfy 1 <= batch_size <= N_i (got " + std::to_string(batch_size) +
                          ", N_i=" + std::to_string(samples()) + ")");
    }
    if (batch_size == samples()) return gradient(x);
    Vector g = Vector::Zero(x.size());
    for (auto row : random_subset(rng, samples(), batch_size)) {
      const auto r = static_cast<Eigen::Index>(row);
      double ax = 0.0;
      for (SparseMatrix::InnerIterator it(features_, r); it; ++it) ax += it.value() * x[it.col()];
      const double coeff = kind_ == LossKind::LeastSquares
                               ? 2.0 * (ax - labels_[r])
                               : -labels_[r] * detail::sigmoid_neg(labels_[r] * ax);
      for (SparseMatrix::InnerIterator it(features_, r); it; ++it) g[it.col()] += coeff * it.value();
    }
    g /= static_cast<double>(batch_size);
    if (kind_ == LossKind::LogisticNonconvex) g += regularizer_gradient(x);
    return g;
  }

 private:
  void evaluate(const Vector& x, double* value, Vector* grad) const {
    check_dim(x);
    const double n = static_cast<double>(samples());
    const Vector ax = features_ * x;
    if (kind_ == LossKind::LeastSquares) {
      const Vector residual = ax - labels_;
      if (value) *value = residual.squaredNorm() / n;
      if (grad) *grad = (2.0 / n) * (features_.transpose() * residual);
      return;
    }
    if (value) {
      double loss = 0.0;
      for (Eigen::Index j = 0; j < ax.size(); ++j) loss += detail::softplus(-labels_[j] * ax[j]);
      *value = loss / n + regularizer_value(x);
    }
    if (grad) {
      Vector weights(ax.size());
      for (Eigen::Index j = 0; j < ax.size(); ++j) weights[j] = labels_[j] * detail::sigmoid_neg(labels_[j] * ax[j]);
      *grad = -(1.0 / n) * (features_.transpose() * weights);
      *grad += regularizer_gradient(x);
    }
  }

  void check_dim(const Vector& x) const {
    if (x.size() != features_.cols()) {
      throw ArgumentError("dimension mismatch: problem has d=" + std::to_string(features_.cols()) + ", x has " +
                          std::to_string(x.size()));
    }
  }

  double regularizer_value(const Vector& x) const {
    double acc = 0.0;
    for (double v : x) acc += v * v / (1.0 + v * v);
    return lambda_ * acc;
  }

  Vector regularizer_gradient(const Vector& x) const {
    Vector g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double q = 1.0 + x[k] * x[k];
      g[k] = lambda_ * 2.0 * x[k] / (q * q);
    }
    return g;
  }

  double compute_smoothness() const {
    const double top = detail::largest_eigenvalue(detail::gram(features_)) / static_cast<double>(samples());
    return kind_ == LossKind::LeastSquares ? 2.0 * top : top / 4.0 + 2.0 * lambda_;
  }

  LossKind kind_;
  double lambda_;
  SparseMatrix features_;
  Vector labels_;
  double smoothness_ = 0.0;
};

struct SmoothnessConstants {
  std::vector<double> per_client;
  double L;
  double L_tilde;
};

// Average of the clients' per-sample Gram matrices, (1/n) sum_i A_i^T A_i / N_i.
inline Matrix averaged_gram(const std::vector<ClientProblem>& clients) {
  const auto d = static_cast<Eigen::Index>(clients.front().dim());
  Matrix m = Matrix::Zero(d, d);
  for (const auto& c : clients) m += detail::gram(c.features()) / static_cast<double>(c.samples());
  return m / static_cast<double>(clients.size());
}

// L comes from the same Hessian bound applied to the averaged operator, so
// L <= mean(L_i) <= L_tilde = sqrt(mean(L_i^2)).
inline SmoothnessConstants smoothness_constants(const std::vector<ClientProblem>& clients) {
  if (clients.empty()) throw ArgumentError("smoothness_constants needs at least one client");
  const auto d = clients.front().dim();
  SmoothnessConstants out;
  double sq = 0.0;
  for (const auto& c : clients) {
    if (c.dim() != d) throw ArgumentError("clients disagree on feature dimension");
    out.per_client.push_back(c.smoothness());
    sq += c.smoothness() * c.smoothness();
  }
  const auto n = static_cast<double>(clients.size());
  out.L_tilde = std::sqrt(sq / n);
  const double top = detail::largest_eigenvalue(averaged_gram(clients));
  const auto& first = clients.front();
  out.L = first.kind() == LossKind::LeastSquares ? 2.0 * top : top / 4.0 + 2.0 * first.lambda();
  return out;
}

class GlobalProblem {
 public:
  explicit GlobalProblem(std::vector<ClientProblem> clients) : clients_(std::move(clients)) {
    const auto sc = smoothness_constants(clients_);
    const auto kind = clients_.front().kind();
    for (const auto& c : clients_) {
      if (c.kind() != kind) throw ArgumentError("all clients must share the same loss");
    }
    L_ = sc.L;
    L_tilde_ = sc.L_tilde;
  }

  const std::vector<ClientProblem>& clients() const noexcept { return clients_; }
  std::size_t size() const noexcept { return clients_.size(); }
  std::size_t dim() const noexcept { return clients_.front().dim(); }
  LossKind kind() const noexcept { return clients_.front().kind(); }
  double L() const noexcept { return L_; }
  double L_tilde() const noexcept { return L_tilde_; }

  // Both objectives are sums of nonnegative terms.
  double f_inf() const noexcept { return 0.0; }

  std::optional<double> f_star_estimate;
  std::optional<double> mu_estimate;

  double value(const Vector& x) const {
    double acc = 0.0;
    for (const auto& c : clients_) acc += c.value(x);
    return acc / static_cast<double>(clients_.size());
  }

  Vector gradient(const Vector& x) const {
    Vector acc = Vector::Zero(x.size());
    for (const auto& c : clients_) acc += c.gradient(x);
    return acc / static_cast<double>(clients_.size());
  }

 private:
  std::vector<ClientProblem> clients_;
  double L_ = 0.0;
  double L_tilde_ = 0.0;
};

// Builds one client per shard.
inline GlobalProblem make_global_problem(const Dataset& ds, const Partition& part, LossKind kind,
                                         double lambda = kDefaultLambda) {
  std::vector<ClientProblem> clients;
  clients.reserve(part.count());
  for (const auto& s : part.shards) {
    const auto begin = static_cast<Eigen::Index>(s.begin);
    const auto rows = static_cast<Eigen::Index>(s.size());
    SparseMatrix block = ds.features.middleRows(begin, rows);
    clients.emplace_back(kind, std::move(block), ds.labels.segment(begin, rows),
                         kind == LossKind::LeastSquares ? 0.0 : lambda);
  }
  return GlobalProblem(std::move(clients));
}

struct OptimumEstimate {
  double f_star;
  std::optional<double> mu;
  Vector x_star;
};

// Least squares: exact minimiser of the averaged normal equations and
// mu = 2 lambda_min^+((1/n) sum_i A_i^T A_i / N_i). Logistic: the final value
// of a long gradient-descent run at gamma = 1/L; mu is not available.
inline OptimumEstimate estimate_f_star_and_mu(const GlobalProblem& gp, bool want_mu = true,
                                              std::size_t gd_iterations = 100000) {
  const auto d = static_cast<Eigen::Index>(gp.dim());
  if (gp.kind() == LossKind::LogisticNonconvex) {
    if (want_mu) throw UnsupportedOperationError("a PL constant is only derived for least squares");
    Vector x = Vector::Zero(d);
    const double gamma = 1.0 / gp.L();
    for (std::size_t t = 0; t < gd_iterations; ++t) x -= gamma * gp.gradient(x);
    return {gp.value(x), std::nullopt, x};
  }

  const Matrix m = averaged_gram(gp.clients());
  Vector rhs = Vector::Zero(d);
  for (const auto& c : gp.clients()) {
    rhs += (c.features().transpose() * c.labels()) / static_cast<double>(c.samples());
  }
  rhs /= static_cast<double>(gp.size());
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
  const Vector x_star = cod.solve(rhs);

  OptimumEstimate est{gp.value(x_star), std::nullopt, x_star};
  if (want_mu) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double cutoff = ev.maxCoeff() * static_cast<double>(d) * std::numeric_limits<double>::epsilon() * 16.0;
    double smallest = std::numeric_limits<double>::infinity();
    for (double v : ev) {
      if (v > cutoff) smallest = std::min(smallest, v);
    }
    est.mu = 2.0 * smallest;
  }
  return est;
}

inline void attach_estimates(GlobalProblem& gp, const OptimumEstimate& est) {
  gp.f_star_estimate = est.f_star;
  gp.mu_estimate = est.mu;
}

}  // namespace ef21
