#ifndef REPBIAS_PCA_H_
#define REPBIAS_PCA_H_

#include <cstddef>
#include <span>
#include <vector>

#include "repbias/matrix.h"

namespace repbias {

struct PcaModel {
  std::vector<double> mean;         // length d
  Matrix components;                // d x d_max; column j is component j
  std::vector<double> eigenvalues;  // d_max, non-increasing, >= 0
  std::size_t fitted_on = 0;

  std::size_t dim() const { return mean.size(); }
  std::size_t max_components() const { return eigenvalues.size(); }
};

struct JacobiOptions {
  double tolerance = 1e-10;  // off-diagonal Frobenius norm relative to ||A||_F
  int max_sweeps = 1000;
};

struct SymmetricEigen {
  std::vector<double> values;  // unsorted, as left on the diagonal
  Matrix vectors;              // column i pairs with values[i]
  int sweeps = 0;
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Throws NumericError
// when the off-diagonal mass fails to reach the tolerance in max_sweeps.
SymmetricEigen JacobiEigen(Matrix a, const JacobiOptions& options = {});

// Eigendecomposition of the sample covariance (divisor n - 1) of the given
// rows. Components are sorted by descending eigenvalue (stable on ties) and
// sign-fixed so each column's largest-magnitude entry (first on ties) is
// positive. Keeps min(d, n) components. Throws DataError for n < 2 or
// non-finite input.
PcaModel FitPca(const Matrix& rows, const JacobiOptions& options = {});
// Same, fitted on the listed subset of rows only.
PcaModel FitPca(const Matrix& rows, std::span<const std::size_t> subset,
                const JacobiOptions& options = {});

// mean + W_k W_k^T (x - mean). Throws UsageError unless 1 <= k <= d_max.
std::vector<double> Reconstruct(const PcaModel& model, std::span<const double> x,
                                std::size_t k);

// Component scores W_k^T (x - mean) for every row: an n x k matrix.
Matrix ProjectRows(const PcaModel& model, const Matrix& rows, std::size_t k);

// Mean over the subset of ||x - Reconstruct(x, k)||^2, one value per k.
// k = 0 is accepted and gives the mean squared distance to the mean.
// Throws DataError for an empty subset.
std::vector<double> ReconstructionErrors(const PcaModel& model, const Matrix& rows,
                                         std::span<const std::size_t> subset,
                                         std::span<const std::size_t> ks);

double ReconstructionError(const PcaModel& model, const Matrix& rows,
                           std::span<const std::size_t> subset, std::size_t k);
// Over all rows.
double ReconstructionError(const PcaModel& model, const Matrix& rows, std::size_t k);

// Square root of ReconstructionError, for plots on the RMS scale.
double ReconstructionRms(const PcaModel& model, const Matrix& rows,
                         std::span<const std::size_t> subset, std::size_t k);

}  // namespace repbias

#endif  // REPBIAS_PCA_H_
