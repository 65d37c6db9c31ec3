#include "cce/quantreg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "cce/error.hpp"
#include "cce/random.hpp"

// Exact linear quantile regression in two phases.
//
// 1. Warm start: a Mehrotra predictor-corrector interior-point method on the
//    dual problem  max y'a  s.t.  X'a = (1 - tau) X'1,  0 <= a <= 1,
//    stopped at a loose duality gap. Its equality multipliers approach -beta.
//    Designs with at most two columns start from least squares instead.
// 2. Polish: starting from the p observations closest to the warm-start fit,
//    walk the vertices of the piecewise-linear loss (each vertex interpolates p
//    observations). At every vertex the 2p edge directional derivatives are
//    evaluated; the steepest descending edge is followed with an exact line
//    search (a weighted median over the residual breakpoints) and one basis
//    observation is exchanged. The walk is run on a tiny deterministic
//    perturbation of y so that no vertex is degenerate; the final basis is then
//    re-solved on the original y and its optimality certified through the
//    subgradient condition  -tau <= xi_k <= 1 - tau.

namespace cce {

namespace {

using Eigen::ArrayXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kEdgeTolerance = 1e-9;
constexpr double kPerturbations[] = {1e-7, 1e-10, 1e-13};

double psi(double r, double tau) { return r < 0.0 ? tau - 1.0 : tau; }

double response_scale(const VectorXd& y) {
  const double s = y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0;
  return s > 0.0 ? s : 1.0;
}

// X' diag(weights) X without forming the scaled design.
void weighted_gram(const MatrixXd& X, const ArrayXd& weights, MatrixXd& out) {
  const Index p = X.cols();
  for (Index k = 0; k < p; ++k) {
    for (Index l = 0; l <= k; ++l) {
      out(k, l) = (X.col(k).array() * weights * X.col(l).array()).sum();
      out(l, k) = out(k, l);
    }
  }
}

VectorXd interior_point_start(const MatrixXd& X, const VectorXd& y, double tau, int max_iterations,
                              double scale) {
  const Index n = X.rows();
  const Index p = X.cols();
  const double nd = static_cast<double>(n);
  ArrayXd x = ArrayXd::Constant(n, 1.0 - tau);
  ArrayXd s = ArrayXd::Constant(n, tau);
  const VectorXd b = (1.0 - tau) * X.transpose() * VectorXd::Ones(n);

  VectorXd lambda = -X.colPivHouseholderQr().solve(y);
  ArrayXd fitted = (X * lambda).array();
  ArrayXd rc = -y.array() - fitted;
  const double offset = 0.1 * rc.abs().mean() + 1e-9 * scale;
  ArrayXd z = rc.max(0.0) + offset;
  ArrayXd w = (-rc).max(0.0) + offset;

  ArrayXd theta(n), rho(n), tmp(n), rxz(n), rsw(n);
  ArrayXd dx(n), dz(n), dw(n), dxa(n), dza(n), dwa(n);
  VectorXd rb(p), rhs(p), dl(p), dla(p), xdl(n);
  MatrixXd normal(p, p);

  for (int iter = 0; iter < max_iterations; ++iter) {
    rb.noalias() = b - X.transpose() * x.matrix();
    fitted.matrix().noalias() = X * lambda;
    rc = -y.array() - fitted - z + w;
    const double gap = (x * z).sum() + (s * w).sum();
    // The vertex phase finishes the job exactly, so a loose gap suffices.
    if (gap <= 1e-4 * nd * scale && rb.lpNorm<Eigen::Infinity>() <= 1e-8 * nd) break;

    theta = 1.0 / (z / x + w / s);
    weighted_gram(X, theta, normal);
    const Eigen::LDLT<MatrixXd> factor(normal);
    if (factor.info() != Eigen::Success) break;

    auto newton = [&](ArrayXd& ddx, ArrayXd& ddz, ArrayXd& ddw, VectorXd& ddl) {
      rho = rc - rxz / x + rsw / s;
      tmp = theta * rho;
      rhs.noalias() = X.transpose() * tmp.matrix();
      rhs += rb;
      ddl = factor.solve(rhs);
      xdl.noalias() = X * ddl;
      ddx = theta * (xdl.array() - rho);
      ddz = (rxz - z * ddx) / x;
      ddw = (rsw + w * ddx) / s;
    };

    rxz = -x * z;
    rsw = -s * w;
    newton(dxa, dza, dwa, dla);
    double ap = 1.0, ad = 1.0;
    for (Index i = 0; i < n; ++i) {
      if (dxa[i] < 0.0) ap = std::min(ap, -x[i] / dxa[i]);
      if (dxa[i] > 0.0) ap = std::min(ap, s[i] / dxa[i]);
      if (dza[i] < 0.0) ad = std::min(ad, -z[i] / dza[i]);
      if (dwa[i] < 0.0) ad = std::min(ad, -w[i] / dwa[i]);
    }
    const double mu = gap / (2.0 * nd);
    const double mu_aff =
        (((x + ap * dxa) * (z + ad * dza)).sum() + ((s - ap * dxa) * (w + ad * dwa)).sum()) / (2.0 * nd);
    const double sigma = std::pow(mu_aff / mu, 3.0);

    rxz = sigma * mu - x * z - dxa * dza;
    rsw = sigma * mu - s * w + dxa * dwa;
    newton(dx, dz, dw, dl);
    ap = ad = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (dx[i] < 0.0) ap = std::min(ap, -x[i] / dx[i]);
      if (dx[i] > 0.0) ap = std::min(ap, s[i] / dx[i]);
      if (dz[i] < 0.0) ad = std::min(ad, -z[i] / dz[i]);
      if (dw[i] < 0.0) ad = std::min(ad, -w[i] / dw[i]);
    }
    ap = std::min(1.0, 0.99995 * ap);
    ad = std::min(1.0, 0.99995 * ad);
    if (!(ap > 0.0) && !(ad > 0.0)) break;

    x += ap * dx;
    s = 1.0 - x;
    lambda += ad * dl;
    z += ad * dz;
    w += ad * dw;
    if (!x.allFinite() || !lambda.allFinite()) break;
  }
  return -lambda;
}

// p rows ordered by closeness to the fit that are linearly independent.
std::vector<Index> initial_basis(const MatrixXd& X, const VectorXd& residuals) {
  const Index n = X.rows();
  const Index p = X.cols();
  auto closer = [&](Index a, Index b) {
    const double ra = std::fabs(residuals[a]), rb = std::fabs(residuals[b]);
    return ra < rb || (ra == rb && a < b);
  };
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  std::vector<Index> basis;
  MatrixXd q(p, p);
  auto consider = [&](Index i) {
    VectorXd v = X.row(i).transpose();
    const double norm0 = v.norm();
    if (norm0 == 0.0) return;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index k = 0; k < static_cast<Index>(basis.size()); ++k) v -= q.col(k).dot(v) * q.col(k);
    }
    const double norm = v.norm();
    if (norm > 1e-8 * norm0) {
      q.col(static_cast<Index>(basis.size())) = v / norm;
      basis.push_back(i);
    }
  };

  // Usually the closest few rows already span the column space.
  const auto head = std::min<std::size_t>(order.size(), static_cast<std::size_t>(8 * p));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(head), order.end(), closer);
  for (std::size_t m = 0; m < head && static_cast<Index>(basis.size()) < p; ++m) consider(order[m]);
  if (static_cast<Index>(basis.size()) < p) {
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(head), order.end(), closer);
    for (std::size_t m = head; m < order.size() && static_cast<Index>(basis.size()) < p; ++m) consider(order[m]);
  }
  if (static_cast<Index>(basis.size()) < p) {
    throw Error(ErrorCode::RankDeficient, "could not find p linearly independent observations");
  }
  return basis;
}

struct Vertex {
  VectorXd beta;
  MatrixXd inverse;  // inverse of the basis rows X_h
};

Vertex solve_vertex(const MatrixXd& X, const VectorXd& y, const std::vector<Index>& basis) {
  const Index p = X.cols();
  MatrixXd xh(p, p);
  VectorXd yh(p);
  for (Index k = 0; k < p; ++k) {
    xh.row(k) = X.row(basis[static_cast<std::size_t>(k)]);
    yh[k] = y[basis[static_cast<std::size_t>(k)]];
  }
  const Eigen::FullPivLU<MatrixXd> lu(xh);
  if (!lu.isInvertible()) throw Error(ErrorCode::DidNotConverge, "basis became singular");
  Vertex v;
  v.inverse = lu.inverse();
  v.beta = v.inverse * yh;
  return v;
}

struct Breakpoint {
  double t;
  double weight;
  Index index;
};

bool earlier(const Breakpoint& a, const Breakpoint& b) { return a.t < b.t || (a.t == b.t && a.index < b.index); }

// First breakpoint (in t order) at which the accumulated weight reaches
// `target`, by quickselect on halves. Returns the index or -1.
Index weighted_select(std::vector<Breakpoint>& items, double target) {
  std::size_t lo = 0, hi = items.size();
  double below = 0.0;
  while (hi - lo > 16) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(items.begin() + static_cast<std::ptrdiff_t>(lo), items.begin() + static_cast<std::ptrdiff_t>(mid),
                     items.begin() + static_cast<std::ptrdiff_t>(hi), earlier);
    double left = 0.0;
    for (std::size_t k = lo; k <= mid; ++k) left += items[k].weight;
    if (below + left >= target) {
      hi = mid + 1;
    } else {
      below += left;
      lo = mid + 1;
    }
  }
  std::sort(items.begin() + static_cast<std::ptrdiff_t>(lo), items.begin() + static_cast<std::ptrdiff_t>(hi), earlier);
  for (std::size_t k = lo; k < hi; ++k) {
    below += items[k].weight;
    if (below >= target) return items[k].index;
  }
  return -1;
}

// Simplex-style descent over vertices of the (perturbed) problem.
void descend(const MatrixXd& X, const VectorXd& y, double tau, std::vector<Index>& basis, int max_steps) {
  const Index n = X.rows();
  const Index p = X.cols();
  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  for (Index h : basis) in_basis[static_cast<std::size_t>(h)] = 1;

  VectorXd r(n), psi_r(n), a(n), g(p);
  std::vector<Breakpoint> crossing;
  crossing.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < max_steps; ++step) {
    const Vertex v = solve_vertex(X, y, basis);
    r.noalias() = y - X * v.beta;
    for (Index h : basis) r[h] = 0.0;

    for (Index i = 0; i < n; ++i) psi_r[i] = psi(r[i], tau);
    g.noalias() = X.transpose() * psi_r;
    for (Index h : basis) g -= tau * X.row(h).transpose();
    const VectorXd xi = v.inverse.transpose() * g;

    double best = -kEdgeTolerance;
    Index best_k = -1;
    double direction = 0.0;
    for (Index k = 0; k < p; ++k) {
      const double up = 1.0 - tau - xi[k];
      const double down = tau + xi[k];
      if (up < best) best = up, best_k = k, direction = 1.0;
      if (down < best) best = down, best_k = k, direction = -1.0;
    }
    if (best_k < 0) return;

    const VectorXd d = direction * v.inverse.col(best_k);
    a.noalias() = X * d;
    crossing.clear();
    for (Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      if ((r[i] >= 0.0 && a[i] > 0.0) || (r[i] < 0.0 && a[i] < 0.0)) {
        crossing.push_back({r[i] / a[i], std::fabs(a[i]), i});
      }
    }
    const Index entering = weighted_select(crossing, -best);
    if (entering < 0) throw Error(ErrorCode::DidNotConverge, "loss is unbounded along an edge");

    const auto leaving = basis[static_cast<std::size_t>(best_k)];
    in_basis[static_cast<std::size_t>(leaving)] = 0;
    in_basis[static_cast<std::size_t>(entering)] = 1;
    basis[static_cast<std::size_t>(best_k)] = entering;
  }
  throw Error(ErrorCode::DidNotConverge, "vertex exchange limit reached");
}

// Subgradient certificate on the original response. Nonbasic residuals that
// are zero up to rounding take the sign they had in the perturbed problem.
bool certify(const MatrixXd& X, const VectorXd& y, const VectorXd& perturbed, double tau,
             const std::vector<Index>& basis, Vertex& out) {
  const Index n = X.rows();
  out = solve_vertex(X, y, basis);
  const Vertex pv = solve_vertex(X, perturbed, basis);
  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  for (Index h : basis) in_basis[static_cast<std::size_t>(h)] = 1;

  constexpr double eps = std::numeric_limits<double>::epsilon();
  const VectorXd r = y - X * out.beta;
  const VectorXd noise = 64.0 * eps * (y.cwiseAbs() + X.cwiseAbs() * out.beta.cwiseAbs());
  const VectorXd pr = perturbed - X * pv.beta;
  VectorXd signs(n);
  for (Index i = 0; i < n; ++i) {
    const double source = std::fabs(r[i]) <= noise[i] ? pr[i] : r[i];
    signs[i] = in_basis[static_cast<std::size_t>(i)] ? 0.0 : psi(source, tau);
  }
  const VectorXd g = X.transpose() * signs;
  const VectorXd xi = out.inverse.transpose() * g;
  for (Index k = 0; k < xi.size(); ++k) {
    if (xi[k] < -tau - kEdgeTolerance || xi[k] > 1.0 - tau + kEdgeTolerance) return false;
  }
  return true;
}

void check_design(const MatrixXd& X, std::span<const double> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "design rows must match response length");
  }
  if (X.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "design has no columns");
  if (X.rows() < X.cols()) throw Error(ErrorCode::RankDeficient, "fewer observations than coefficients");
  if (!X.allFinite()) throw Error(ErrorCode::InvalidSample, "design must be finite");
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSample, "response must be finite");
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    throw Error(ErrorCode::RankDeficient, "design has rank " + std::to_string(qr.rank()) + " < " +
                                              std::to_string(X.cols()));
  }
}

CoefficientVector fit_checked(const MatrixXd& X, std::span<const double> response, double tau,
                              const SolverOptions& options) {
  const Index n = X.rows();
  const VectorXd y = Eigen::Map<const VectorXd>(response.data(), n);
  const double scale = response_scale(y);
  const int max_steps = options.max_vertex_steps > 0 ? options.max_vertex_steps : static_cast<int>(10 * n + 100);

  // With one or two columns the vertex walk from the least-squares fit is
  // already cheaper than the interior-point iterations.
  const int iterations = X.cols() <= 2 ? 0 : options.max_interior_iterations;
  const VectorXd warm = interior_point_start(X, y, tau, iterations, scale);
  std::vector<Index> basis;

  for (double eta : kPerturbations) {
    VectorXd perturbed = y;
    for (Index i = 0; i < n; ++i) {
      SplitMix64 gen(static_cast<std::uint64_t>(i));
      perturbed[i] += eta * scale * (2.0 * gen.uniform01_open() - 1.0);
    }
    if (basis.empty()) basis = initial_basis(X, perturbed - X * warm);
    descend(X, perturbed, tau, basis, max_steps);

    Vertex v;
    if (certify(X, y, perturbed, tau, basis, v)) {
      CoefficientVector out;
      out.beta = v.beta;
      out.tau = tau;
      VectorXd r = y - X * v.beta;
      for (Index h : basis) r[h] = 0.0;
      out.achieved_loss = pinball_loss(std::span<const double>(r.data(), static_cast<std::size_t>(n)),
                                       QuantileLevel(tau));
      out.basis.assign(basis.begin(), basis.end());
      std::sort(out.basis.begin(), out.basis.end());
      return out;
    }
  }
  throw Error(ErrorCode::DidNotConverge, "optimality certificate failed at every perturbation size");
}

}  // namespace

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    std::ostringstream msg;
    msg << "quantile level " << tau << " is outside (0, 1)";
    throw Error(ErrorCode::InvalidLevel, msg.str());
  }
}

CoefficientProcess::CoefficientProcess(std::vector<double> levels, MatrixXd betas)
    : levels_(std::move(levels)), betas_(std::move(betas)) {
  if (levels_.empty()) throw Error(ErrorCode::DimensionMismatch, "a coefficient process needs at least one level");
  if (static_cast<std::size_t>(betas_.rows()) != levels_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one coefficient row per level is required");
  }
  for (std::size_t m = 0; m < levels_.size(); ++m) {
    QuantileLevel{levels_[m]};
    if (m > 0 && !(levels_[m] > levels_[m - 1])) {
      throw Error(ErrorCode::NotStrictlyIncreasing, "process levels must be strictly increasing");
    }
  }
  if (!betas_.allFinite()) throw Error(ErrorCode::InvalidSample, "process coefficients must be finite");
}

double pinball_loss(std::span<const double> residuals, QuantileLevel tau) {
  const double t = tau.value();
  double loss = 0.0;
  for (double r : residuals) loss += r * (r < 0.0 ? t - 1.0 : t);
  return loss;
}

CoefficientVector fit_quantile_regression(const MatrixXd& design, std::span<const double> response,
                                          QuantileLevel tau, const SolverOptions& options) {
  check_design(design, response);
  return fit_checked(design, response, tau.value(), options);
}

CoefficientProcess fit_process(const MatrixXd& design, std::span<const double> response,
                               std::span<const double> levels, const ProcessOptions& options) {
  check_design(design, response);
  if (levels.empty()) throw Error(ErrorCode::DimensionMismatch, "no quantile levels given");
  for (std::size_t m = 0; m < levels.size(); ++m) {
    QuantileLevel{levels[m]};
    if (m > 0 && !(levels[m] > levels[m - 1])) {
      throw Error(ErrorCode::NotStrictlyIncreasing, "levels must be strictly increasing");
    }
  }

  const double n = static_cast<double>(design.rows());
  std::vector<double> effective(levels.begin(), levels.end());
  if (options.clamp_extreme_levels) {
    for (double& t : effective) t = std::clamp(t, 0.5 / n, 1.0 - 0.5 / n);
  }
  // Clamping may map several mesh levels onto one fit.
  std::vector<double> unique_levels;
  std::vector<std::size_t> slot(effective.size());
  for (std::size_t m = 0; m < effective.size(); ++m) {
    if (unique_levels.empty() || effective[m] != unique_levels.back()) unique_levels.push_back(effective[m]);
    slot[m] = unique_levels.size() - 1;
  }

  std::vector<CoefficientVector> fits(unique_levels.size());
  std::vector<std::exception_ptr> errors(unique_levels.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < unique_levels.size(); u = next++) {
      try {
        fits[u] = fit_checked(design, response, unique_levels[u], options.solver);
      } catch (...) {
        errors[u] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(unique_levels.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t u = 0; u < errors.size(); ++u) {
    if (!errors[u]) continue;
    std::ostringstream where;
    where << "at level " << unique_levels[u] << ": ";
    try {
      std::rethrow_exception(errors[u]);
    } catch (const Error& e) {
      throw Error(e.code(), where.str() + e.what());
    }
  }

  MatrixXd betas(static_cast<Index>(levels.size()), design.cols());
  for (std::size_t m = 0; m < levels.size(); ++m) betas.row(static_cast<Index>(m)) = fits[slot[m]].beta.transpose();
  return CoefficientProcess(std::vector<double>(levels.begin(), levels.end()), std::move(betas));
}

double predict_quantile(const CoefficientProcess& process, const CovariateProfile& x, QuantileLevel tau) {
  if (x.size() != process.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "profile length does not match the process dimension");
  }
  const auto& lv = process.levels();
  const double t = tau.value();
  if (t < lv.front() || t > lv.back()) {
    std::ostringstream msg;
    msg << "level " << t << " is outside the mesh [" << lv.front() << ", " << lv.back() << "]";
    throw Error(ErrorCode::LevelOutOfMeshRange, msg.str());
  }
  auto it = std::lower_bound(lv.begin(), lv.end(), t);
  std::size_t m = static_cast<std::size_t>(it - lv.begin());
  if (m == lv.size() || (m > 0 && t - lv[m - 1] <= lv[m] - t)) m = m > 0 ? m - 1 : 0;
  return process.betas().row(static_cast<Index>(m)).dot(x.vector());
}

}  // namespace cce
