#include "repbias/pca.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "repbias/error.h"

namespace repbias {
namespace {

double OffDiagonalNorm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.rows(); ++p) {
    for (std::size_t q = p + 1; q < a.cols(); ++q) s += a(p, q) * a(p, q);
  }
  return std::sqrt(2.0 * s);
}

double FrobeniusNorm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

void CheckK(const PcaModel& model, std::size_t k, bool allow_zero) {
  if ((k == 0 && !allow_zero) || k > model.max_components()) {
    throw UsageError("k = " + std::to_string(k) + " outside [1, " +
                     std::to_string(model.max_components()) + "]");
  }
}

}  // namespace

SymmetricEigen JacobiEigen(Matrix a, const JacobiOptions& options) {
  const std::size_t n = a.rows();
  SymmetricEigen out;
  out.vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) out.vectors(i, i) = 1.0;

  const double scale = FrobeniusNorm(a);
  const double threshold = options.tolerance * scale;
  Matrix& v = out.vectors;
  while (scale > 0.0 && OffDiagonalNorm(a) > threshold) {
    if (out.sweeps >= options.max_sweeps) {
      throw NumericError("Jacobi eigensolver did not converge in " +
                         std::to_string(options.max_sweeps) + " sweeps");
    }
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const double arp = a(r, p);
            const double arq = a(r, q);
            a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
            a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
          }
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  return out;
}

PcaModel FitPca(const Matrix& rows, const JacobiOptions& options) {
  std::vector<std::size_t> all(rows.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return FitPca(rows, all, options);
}

PcaModel FitPca(const Matrix& rows, std::span<const std::size_t> subset,
                const JacobiOptions& options) {
  const std::size_t n = subset.size();
  const std::size_t d = rows.cols();
  if (n < 2) throw DataError("PCA needs at least 2 rows");
  if (d == 0) throw DataError("PCA needs at least one column");

  PcaModel model;
  model.fitted_on = n;
  model.mean.assign(d, 0.0);
  for (std::size_t i : subset) {
    const auto x = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(x[j])) throw DataError("PCA input has non-finite values");
      model.mean[j] += x[j];
    }
  }
  for (double& m : model.mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t i : subset) {
    const auto x = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - model.mean[j];
    for (std::size_t p = 0; p < d; ++p) {
      const double cp = centered[p];
      for (std::size_t q = p; q < d; ++q) cov(p, q) += cp * centered[q];
    }
  }
  const double divisor = static_cast<double>(n - 1);
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = p; q < d; ++q) {
      cov(p, q) /= divisor;
      cov(q, p) = cov(p, q);
    }
  }
  const double scale = FrobeniusNorm(cov);

  SymmetricEigen eig = JacobiEigen(std::move(cov), options);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eig.values[a] > eig.values[b];
  });

  const std::size_t keep = std::min(d, n);
  model.eigenvalues.resize(keep);
  model.components = Matrix(d, keep);
  for (std::size_t c = 0; c < keep; ++c) {
    double lambda = eig.values[order[c]];
    if (lambda < 0.0) {
      if (lambda < -1e-9 * scale - 1e-300) {
        throw NumericError("covariance has a negative eigenvalue");
      }
      lambda = 0.0;
    }
    model.eigenvalues[c] = lambda;

    std::size_t argmax = 0;
    for (std::size_t r = 0; r < d; ++r) {
      if (std::fabs(eig.vectors(r, order[c])) > std::fabs(eig.vectors(argmax, order[c]))) {
        argmax = r;
      }
    }
    const double sign = eig.vectors(argmax, order[c]) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) {
      model.components(r, c) = sign * eig.vectors(r, order[c]);
    }
  }
  return model;
}

std::vector<double> Reconstruct(const PcaModel& model, std::span<const double> x,
                                std::size_t k) {
  CheckK(model, k, false);
  if (x.size() != model.dim()) throw UsageError("dimension mismatch in Reconstruct");
  const std::size_t d = model.dim();
  std::vector<double> centered(d);
  for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - model.mean[j];
  std::vector<double> out = model.mean;
  for (std::size_t c = 0; c < k; ++c) {
    double score = 0.0;
    for (std::size_t j = 0; j < d; ++j) score += model.components(j, c) * centered[j];
    for (std::size_t j = 0; j < d; ++j) out[j] += score * model.components(j, c);
  }
  return out;
}

Matrix ProjectRows(const PcaModel& model, const Matrix& rows, std::size_t k) {
  CheckK(model, k, false);
  if (rows.cols() != model.dim()) throw UsageError("dimension mismatch in ProjectRows");
  const std::size_t d = model.dim();
  Matrix out(rows.rows(), k);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto x = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - model.mean[j];
    for (std::size_t c = 0; c < k; ++c) {
      double score = 0.0;
      for (std::size_t j = 0; j < d; ++j) score += model.components(j, c) * centered[j];
      out(i, c) = score;
    }
  }
  return out;
}

std::vector<double> ReconstructionErrors(const PcaModel& model, const Matrix& rows,
                                         std::span<const std::size_t> subset,
                                         std::span<const std::size_t> ks) {
  if (subset.empty()) throw DataError("reconstruction error of an empty row set");
  if (rows.cols() != model.dim()) throw UsageError("dimension mismatch");
  std::size_t k_max = 0;
  for (std::size_t k : ks) {
    CheckK(model, k, true);
    k_max = std::max(k_max, k);
  }
  const std::size_t d = model.dim();
  // Sum of squared residuals after c components, for c = 0..k_max.
  std::vector<double> totals(k_max + 1, 0.0);
  std::vector<double> residual(d);
  for (std::size_t i : subset) {
    const auto x = rows.row(i);
    for (std::size_t j = 0; j < d; ++j) residual[j] = x[j] - model.mean[j];
    totals[0] += Dot(residual, residual);
    for (std::size_t c = 0; c < k_max; ++c) {
      double score = 0.0;
      for (std::size_t j = 0; j < d; ++j) score += model.components(j, c) * residual[j];
      for (std::size_t j = 0; j < d; ++j) residual[j] -= score * model.components(j, c);
      totals[c + 1] += Dot(residual, residual);
    }
  }
  std::vector<double> out;
  out.reserve(ks.size());
  for (std::size_t k : ks) out.push_back(totals[k] / static_cast<double>(subset.size()));
  return out;
}

double ReconstructionError(const PcaModel& model, const Matrix& rows,
                           std::span<const std::size_t> subset, std::size_t k) {
  CheckK(model, k, false);
  const std::size_t ks[] = {k};
  return ReconstructionErrors(model, rows, subset, ks).front();
}

double ReconstructionError(const PcaModel& model, const Matrix& rows, std::size_t k) {
  std::vector<std::size_t> all(rows.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return ReconstructionError(model, rows, all, k);
}

double ReconstructionRms(const PcaModel& model, const Matrix& rows,
                         std::span<const std::size_t> subset, std::size_t k) {
  return std::sqrt(ReconstructionError(model, rows, subset, k));
}

}  // namespace repbias
